#ifndef RADMODE_EXPERIMENT_HPP
#define RADMODE_EXPERIMENT_HPP

// Experiment runner behind the command line tool. A run is
//   JSON config (file values, then flag overrides) -> ExperimentConfig
//   -> Table (columns, rows, summary) -> CSV or JSON text.
// Output carries no timestamps or host details, so identical configs give
// byte-identical files.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "radmode/mode_search.hpp"
#include "radmode/path_measure.hpp"
#include "radmode/product_measure.hpp"

#ifndef RADMODE_VERSION
#define RADMODE_VERSION "0.0.0"
#endif

namespace radmode {

inline constexpr const char* kVersion = RADMODE_VERSION;

/// Invalid configuration (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitRejection = 3, kExitIo = 4 };

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"exp", "gauss-cond", "runmax", "reflected",
                                              "lil", "finite-dim", "sweep"};
  return names;
}

inline bool is_stochastic(const std::string& sub) {
  return sub == "runmax" || sub == "reflected" || sub == "lil";
}

struct ExperimentConfig {
  std::string subcommand;
  double radius = 0.5;
  std::uint64_t trunc = 80;
  std::uint64_t nmax = 50;
  std::uint64_t dim = 5;
  std::uint64_t samples = 100000;
  std::uint32_t steps = 4096;
  std::optional<std::uint64_t> seed;
  double t0 = 0.05;
  std::vector<double> ramp{0.5, 0.25, 0.1, 0.05, 0.01};
  double improve_at = 0.25;
  std::uint64_t max_tries = 1'000'000;
  std::string max_resolution = "bridge";
  std::string schedule = "exp";
  std::string normalization = "normalized";
  std::vector<double> radii{0.1, 0.25, 0.5, 1.0, 2.0};
  std::string out;
  std::string format = "csv";
  unsigned threads = 0;  // not part of the output: results do not depend on it
};

namespace detail {

inline const std::set<std::string>& config_keys() {
  static const std::set<std::string> keys{
      "subcommand", "radius", "trunc", "nmax", "dim", "samples", "steps", "seed",
      "t0", "ramp", "improve_at", "max_tries", "max_resolution", "schedule",
      "normalization", "radii", "out", "format", "threads"};
  return keys;
}

template <class T>
T get_as(const nlohmann::json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config field '" + key + "' has the wrong type");
  }
}

inline std::uint64_t get_count(const nlohmann::json& j, const std::string& key) {
  const auto& v = j.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
    throw ConfigError("config field '" + key + "' must be a nonnegative integer");
  return v.get<std::uint64_t>();
}

inline double get_real(const nlohmann::json& j, const std::string& key) {
  if (!j.at(key).is_number()) throw ConfigError("config field '" + key + "' must be a number");
  return j.at(key).get<double>();
}

inline std::vector<double> get_reals(const nlohmann::json& j, const std::string& key) {
  const auto& v = j.at(key);
  if (!v.is_array()) throw ConfigError("config field '" + key + "' must be a list of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError("config field '" + key + "' must be a list of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

inline void check(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace detail

/// Subcommand defaults for fields the user did not set.
inline ExperimentConfig default_config(const std::string& sub) {
  ExperimentConfig c;
  c.subcommand = sub;
  if (sub == "gauss-cond") {
    c.radius = 1.0;
    c.nmax = 30;
    c.normalization = "both";
  } else if (sub == "runmax" || sub == "reflected") {
    c.radius = 1.0;
  } else if (sub == "lil") {
    c.radius = 1.0;
    c.steps = 1024;
    c.samples = 20000;
  }
  return c;
}

inline void validate(const ExperimentConfig& c) {
  using detail::check;
  const auto& subs = subcommands();
  check(std::find(subs.begin(), subs.end(), c.subcommand) != subs.end(),
        "unknown subcommand '" + c.subcommand + "'");
  check(std::isfinite(c.radius) && c.radius > 0.0, "radius must be a positive finite number");
  check(c.trunc >= 1, "trunc must be at least 1");
  check(c.nmax >= 1, "nmax must be at least 1");
  if (c.subcommand == "exp" || c.subcommand == "gauss-cond")
    check(c.trunc >= c.nmax, "trunc must be at least nmax");
  check(c.dim >= 1 && c.dim <= 1'000'000, "dim must lie in [1, 1000000]");
  check(c.samples >= 1, "samples must be at least 1");
  check(c.steps >= 2 && c.steps <= (1u << 24), "steps must lie in [2, 2^24]");
  if (is_stochastic(c.subcommand)) check(c.seed.has_value(), "seed is required for " + c.subcommand);
  check(c.t0 > 0.0 && c.t0 < 1.0 / std::numbers::e, "t0 must lie in (0, 1/e)");
  check(!c.ramp.empty(), "ramp needs at least one time");
  for (std::size_t i = 0; i < c.ramp.size(); ++i) {
    check(c.ramp[i] > 0.0 && c.ramp[i] < 1.0, "ramp times must lie in (0, 1)");
    if (i > 0) check(c.ramp[i] < c.ramp[i - 1], "ramp times must be strictly decreasing");
  }
  check(c.improve_at > 0.0 && c.improve_at < 1.0, "improve_at must lie in (0, 1)");
  check(c.improve_at * c.steps >= 2.0, "improve_at must leave a grid point strictly inside (0, improve_at)");
  check(c.max_tries >= 1 && c.max_tries <= 0xFFFFFFFFull, "max_tries must lie in [1, 2^32 - 1]");
  check(c.max_resolution == "bridge" || c.max_resolution == "grid", "max_resolution must be bridge or grid");
  check(c.schedule == "exp" || c.schedule == "gauss-cond", "schedule must be exp or gauss-cond");
  check(c.normalization == "normalized" || c.normalization == "unnormalized" || c.normalization == "both",
        "normalization must be normalized, unnormalized or both");
  if (c.subcommand != "gauss-cond")
    check(c.normalization != "both", "normalization 'both' applies to gauss-cond only");
  check(!c.radii.empty(), "radii needs at least one value");
  for (double r : c.radii) check(std::isfinite(r) && r > 0.0, "radii must be positive finite numbers");
  check(c.format == "csv" || c.format == "json", "format must be csv or json");
}

/// Builds a validated config from merged JSON values (file, then flags).
inline ExperimentConfig config_from_json(const std::string& sub, const nlohmann::json& j) {
  using namespace detail;
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!config_keys().count(key)) throw ConfigError("unknown config field '" + key + "'");
  std::string subcommand = sub;
  if (j.contains("subcommand")) {
    const auto file_sub = get_as<std::string>(j, "subcommand");
    if (subcommand.empty()) subcommand = file_sub;
    else if (file_sub != subcommand)
      throw ConfigError("config is for '" + file_sub + "' but '" + subcommand + "' was requested");
  }
  ExperimentConfig c = default_config(subcommand);
  if (j.contains("radius")) c.radius = get_real(j, "radius");
  if (j.contains("trunc")) c.trunc = get_count(j, "trunc");
  if (j.contains("nmax")) c.nmax = get_count(j, "nmax");
  if (j.contains("dim")) c.dim = get_count(j, "dim");
  if (j.contains("samples")) c.samples = get_count(j, "samples");
  if (j.contains("steps")) {
    const auto s = get_count(j, "steps");
    check(s <= 0xFFFFFFFFull, "steps is too large");
    c.steps = static_cast<std::uint32_t>(s);
  }
  if (j.contains("seed") && !j.at("seed").is_null()) c.seed = get_count(j, "seed");
  if (j.contains("t0")) c.t0 = get_real(j, "t0");
  if (j.contains("ramp")) c.ramp = get_reals(j, "ramp");
  if (j.contains("improve_at")) c.improve_at = get_real(j, "improve_at");
  if (j.contains("max_tries")) c.max_tries = get_count(j, "max_tries");
  if (j.contains("max_resolution")) c.max_resolution = get_as<std::string>(j, "max_resolution");
  if (j.contains("schedule")) c.schedule = get_as<std::string>(j, "schedule");
  if (j.contains("normalization")) c.normalization = get_as<std::string>(j, "normalization");
  if (j.contains("radii")) c.radii = get_reals(j, "radii");
  if (j.contains("out")) c.out = get_as<std::string>(j, "out");
  if (j.contains("format")) c.format = get_as<std::string>(j, "format");
  if (j.contains("threads")) {
    const auto t = get_count(j, "threads");
    check(t <= 1024, "threads must lie in [0, 1024]");
    c.threads = static_cast<unsigned>(t);
  }
  validate(c);
  return c;
}

inline nlohmann::json read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Tables

using Cell = std::variant<std::monostate, bool, std::uint64_t, std::int64_t, double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<std::pair<std::string, Cell>> summary;

  void add_row(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw std::logic_error("table row width mismatch");
    rows.push_back(std::move(row));
  }
  void note(std::string key, Cell value) { summary.emplace_back(std::move(key), std::move(value)); }
};

inline std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string format_reals(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ";" : "") + format_real(xs[i]);
  return s;
}

inline std::string cell_text(const Cell& c) {
  return std::visit(
      detail::overloaded{[](std::monostate) { return std::string(); },
                         [](bool b) { return std::string(b ? "true" : "false"); },
                         [](std::uint64_t v) { return std::to_string(v); },
                         [](std::int64_t v) { return std::to_string(v); },
                         [](double v) { return format_real(v); },
                         [](const std::string& s) { return s; }},
      c);
}

inline nlohmann::ordered_json cell_json(const Cell& c) {
  return std::visit(detail::overloaded{[](std::monostate) { return nlohmann::ordered_json(nullptr); },
                                       [](bool b) { return nlohmann::ordered_json(b); },
                                       [](std::uint64_t v) { return nlohmann::ordered_json(v); },
                                       [](std::int64_t v) { return nlohmann::ordered_json(v); },
                                       [](double v) {
                                         return std::isfinite(v) ? nlohmann::ordered_json(v)
                                                                 : nlohmann::ordered_json(format_real(v));
                                       },
                                       [](const std::string& s) { return nlohmann::ordered_json(s); }},
                    c);
}

/// Run metadata: every config field except the worker count, plus the
/// artifact version.
inline std::vector<std::pair<std::string, Cell>> metadata(const ExperimentConfig& c) {
  return {
      {"artifact", std::string("radmode")},
      {"version", std::string(kVersion)},
      {"subcommand", c.subcommand},
      {"radius", c.radius},
      {"trunc", c.trunc},
      {"nmax", c.nmax},
      {"dim", c.dim},
      {"samples", c.samples},
      {"steps", std::uint64_t(c.steps)},
      {"seed", c.seed ? Cell(*c.seed) : Cell(std::string("none"))},
      {"t0", c.t0},
      {"ramp", format_reals(c.ramp)},
      {"improve_at", c.improve_at},
      {"max_tries", c.max_tries},
      {"max_resolution", c.max_resolution},
      {"schedule", c.schedule},
      {"normalization", c.normalization},
      {"radii", format_reals(c.radii)},
      {"out", c.out},
      {"format", c.format},
  };
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return q + "\"";
}

inline std::string render_csv(const ExperimentConfig& c, const Table& t) {
  std::string out;
  for (const auto& [k, v] : metadata(c)) out += "# " + k + "=" + cell_text(v) + "\n";
  for (const auto& [k, v] : t.summary) out += "# summary." + k + "=" + cell_text(v) + "\n";
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
  out += "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_field(cell_text(row[i]));
    out += "\n";
  }
  return out;
}

inline std::string render_json(const ExperimentConfig& c, const Table& t) {
  nlohmann::ordered_json doc;
  auto& meta = doc["metadata"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : metadata(c)) meta[k] = cell_json(v);
  meta["ramp"] = c.ramp;
  meta["radii"] = c.radii;
  auto& summary = doc["summary"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : t.summary) summary[k] = cell_json(v);
  doc["columns"] = t.columns;
  auto& rows = doc["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) {
    nlohmann::ordered_json r = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < row.size(); ++i) r[t.columns[i]] = cell_json(row[i]);
    rows.push_back(std::move(r));
  }
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Subcommands

namespace detail {

inline Normalization parse_normalization(const std::string& s) {
  return s == "unnormalized" ? Normalization::kUnnormalized : Normalization::kNormalized;
}

inline CoordinateSchedule schedule_for(const ExperimentConfig& c) {
  if (c.schedule == "gauss-cond") return CoordinateSchedule::gauss_cond(parse_normalization(c.normalization));
  return CoordinateSchedule::exp_k();
}

inline void escape_rows(Table& t, const CoordinateSchedule& schedule, const ExperimentConfig& c,
                        const std::string& label, const std::string& suffix) {
  const BoxShape shape(c.radius);
  const auto rep = escape_diagnostic(schedule, shape, c.nmax, c.trunc);
  for (const auto& rec : rep.records) {
    std::vector<Cell> row;
    if (!label.empty()) row.push_back(label);
    row.insert(row.end(), {rec.n, rec.ball.lower, rec.ball.upper, rec.gap_lower, rec.gap_upper, rec.gap,
                           rec.log_gap, rec.highest_modified, rec.improvable, rec.improvement_index});
    t.add_row(std::move(row));
  }
  t.note("sup_lower" + suffix, rep.sup.lower);
  t.note("sup_upper" + suffix, rep.sup.upper);
  t.note("sup_width" + suffix, rep.sup.width());
  t.note("verdict" + suffix, std::string(to_string(rep.verdict)));
  t.note("certificate" + suffix, rep.summary());

  // Improvement demo on the last maximizing-sequence element.
  const FiniteCenter x = maximizing_sequence_element(schedule, shape, c.nmax);
  const auto imp = improve_center(schedule, x, shape, std::max(c.trunc, c.nmax + 1));
  t.note("demo_n" + suffix, c.nmax);
  if (imp) {
    t.note("demo_index" + suffix, imp->index);
    t.note("demo_center_value" + suffix, imp->center[imp->index]);
    t.note("demo_old_factor" + suffix, imp->old_factor);
    t.note("demo_new_factor" + suffix, imp->new_factor);
    t.note("demo_complement_ratio" + suffix, imp->complement_ratio);
    t.note("demo_log_gain" + suffix, imp->log_gain);
  } else {
    t.note("demo_index" + suffix, std::string("none"));
  }
}

inline const std::vector<std::string>& escape_columns() {
  static const std::vector<std::string> cols{"n", "lower", "upper", "gap_lower", "gap_upper", "gap",
                                             "log_gap", "highest_modified", "improvable",
                                             "improvement_index"};
  return cols;
}

inline Table run_exp(const ExperimentConfig& c) {
  Table t;
  t.columns = escape_columns();
  escape_rows(t, CoordinateSchedule::exp_k(), c, "", "");
  return t;
}

inline Table run_gauss_cond(const ExperimentConfig& c) {
  Table t;
  t.columns = {"normalization"};
  for (const auto& col : escape_columns()) t.columns.push_back(col);
  std::vector<Normalization> norms;
  if (c.normalization != "unnormalized") norms.push_back(Normalization::kNormalized);
  if (c.normalization != "normalized") norms.push_back(Normalization::kUnnormalized);
  for (auto n : norms)
    escape_rows(t, CoordinateSchedule::gauss_cond(n), c, to_string(n), std::string(".") + to_string(n));
  return t;
}

inline Table run_finite_dim(const ExperimentConfig& c) {
  const auto schedule = schedule_for(c);
  const BoxShape shape(c.radius);
  const auto mode = finite_dim_mode(schedule, c.dim, shape);
  Table t;
  t.columns = {"k", "center", "factor", "log_factor"};
  for (std::uint64_t k = 1; k <= c.dim; ++k) {
    const ScalarLaw law = schedule.law(k);
    const double lf = detail::log_factor(schedule, law, mode.center[k], c.radius);
    t.add_row({k, mode.center[k], std::exp(lf), lf});
  }
  t.note("probability", mode.probability);
  t.note("log_probability", log_truncated_product(schedule, mode.center, shape, c.dim));
  return t;
}

inline Table run_sweep(const ExperimentConfig& c) {
  const auto schedule = schedule_for(c);
  Table t;
  t.columns = {"radius", "sup_lower", "sup_upper", "width"};
  for (double r : c.radii) {
    const auto b = sup_ball_prob(schedule, BoxShape(r), c.trunc);
    t.add_row({r, b.lower, b.upper, b.width()});
  }
  return t;
}

inline const std::vector<std::string>& path_columns() {
  static const std::vector<std::string> cols{
      "kind", "t", "rho", "s", "p_hat", "std_error", "samples", "seed",
      "paired_difference", "paired_std_error", "lost", "gained", "best_so_far"};
  return cols;
}

inline std::vector<Cell> estimate_row(const std::string& kind, Cell s, const MCEstimate& e) {
  return {kind, {}, {}, std::move(s), e.p_hat, e.std_error, e.samples, e.seed, {}, {}, {}, {}, {}};
}

// Ball at center 0, the improvement of that center, and (for nonnegative
// laws) the ramp search, all in one pass over common sample paths.
inline PathComparison path_rows(Table& t, const PathLaw& law, const ExperimentConfig& c, bool with_ramps) {
  const PathGrid grid(c.steps);
  const CenterPath zero(grid);
  const Ceiling ceiling(law, c.radius);
  std::vector<CenterPath> centers{zero, improve_center(zero, c.radius, c.improve_at, ceiling)};
  if (with_ramps)
    for (auto& x : ramp_centers(ceiling, c.ramp, grid)) centers.push_back(std::move(x));
  const auto cmp = mc_compare(law, centers, c.radius, grid, c.samples, *c.seed, Parallelism{c.threads});

  t.add_row(estimate_row("ball", {}, cmp.estimates[0]));
  auto row = estimate_row("improvement", c.improve_at, cmp.estimates[1]);
  row[8] = cmp.difference(0);
  row[9] = cmp.difference_std_error(0);
  row[10] = cmp.lost[0];
  row[11] = cmp.gained[0];
  t.add_row(std::move(row));
  t.note("dominance_violations", cmp.lost[0]);

  if (with_ramps) {
    const auto h = climb_history(cmp, c.ramp, 2);
    for (std::size_t j = 0; j < h.steps.size(); ++j) {
      const auto& st = h.steps[j];
      auto r = estimate_row("ramp", st.parameters[0], st.objective);
      if (j > 0) {
        r[8] = st.paired_difference;
        r[9] = st.paired_std_error;
        r[10] = st.lost;
        r[11] = st.gained;
      }
      r[12] = h.best_objective(j);
      t.add_row(std::move(r));
    }
    t.note("best_ramp_time", h.best().parameters[0]);
    t.note("best_ramp_p_hat", h.best().objective.p_hat);
  }
  return cmp;
}

inline Table run_path_functional(const ExperimentConfig& c) {
  Table t;
  t.columns = path_columns();
  if (c.subcommand == "runmax") {
    const RunningMax law{c.max_resolution == "grid" ? MaxResolution::kGrid : MaxResolution::kBridge};
    path_rows(t, law, c, true);
    t.note("reflection_principle", 2.0 * normal::cdf(c.radius) - 1.0);
  } else {
    path_rows(t, ReflectedWiener{}, c, true);
  }
  return t;
}

inline Table run_lil(const ExperimentConfig& c) {
  const BoundaryFunction boundary(c.t0);
  const ConditionedWiener law{boundary, c.max_tries};
  Table t;
  t.columns = path_columns();
  std::set<double> times{0.0, 1e-4, 1e-3, 0.01, 0.02, 0.03, 0.04, c.t0, 0.1, 0.25, 0.5, 1.0};
  for (double x : times) {
    std::vector<Cell> row(t.columns.size());
    row[0] = std::string("boundary");
    row[1] = x;
    row[2] = lil_boundary(boundary, x);
    t.add_row(std::move(row));
  }
  const auto cmp = path_rows(t, law, c, false);
  // Every sample is an accepted path, so samples / attempts is the rate.
  const auto acc = make_estimate(c.samples, cmp.attempts, *c.seed);
  t.add_row(estimate_row("acceptance", {}, acc));
  t.note("acceptance_rate", acc.p_hat);
  return t;
}

}  // namespace detail

inline Table run_experiment(const ExperimentConfig& c) {
  validate(c);
  if (c.subcommand == "exp") return detail::run_exp(c);
  if (c.subcommand == "gauss-cond") return detail::run_gauss_cond(c);
  if (c.subcommand == "runmax" || c.subcommand == "reflected") return detail::run_path_functional(c);
  if (c.subcommand == "lil") return detail::run_lil(c);
  if (c.subcommand == "finite-dim") return detail::run_finite_dim(c);
  return detail::run_sweep(c);
}

inline std::string render(const ExperimentConfig& c, const Table& t) {
  return c.format == "json" ? render_json(c, t) : render_csv(c, t);
}

/// Runs the experiment and writes the output (stdout when c.out is empty).
/// Errors are reported on err; a failed run leaves no output file behind.
inline int run(const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
  std::string text;
  try {
    text = render(c, run_experiment(c));
  } catch (const RejectionFailure& f) {
    err << "error: " << f.what() << ", empirical acceptance rate " << format_real(f.acceptance_rate()) << "\n";
    return kExitRejection;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  if (c.out.empty()) {
    out << text;
    return kExitOk;
  }
  {
    std::ofstream f(c.out, std::ios::binary | std::ios::trunc);
    if (f && f.write(text.data(), std::streamsize(text.size())) && f.flush()) return kExitOk;
  }
  std::error_code ec;
  std::filesystem::remove(c.out, ec);
  err << "error: cannot write '" << c.out << "'\n";
  return kExitIo;
}

}  // namespace radmode

#endif  // RADMODE_EXPERIMENT_HPP
