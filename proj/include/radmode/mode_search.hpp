#ifndef RADMODE_MODE_SEARCH_HPP
#define RADMODE_MODE_SEARCH_HPP

// Experiments on the existence of radius-r modes: exact modes of finite
// truncations, the escape of the maximizing sequence for product measures
// without a mode, and a ramp-family climb on path space.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "radmode/path_measure.hpp"
#include "radmode/product_measure.hpp"

namespace radmode {

struct FiniteMode {
  FiniteCenter center;
  double probability = 0.0;
};

/// Exact maximizer of the d-dimensional truncated product. The objective
/// factorizes, so the coordinatewise optimum is the global one.
inline FiniteMode finite_dim_mode(const CoordinateSchedule& schedule, std::uint64_t d,
                                  const BoxShape& shape) {
  detail::require(d >= 1, "finite_dim_mode: dimension must be at least 1");
  FiniteMode m;
  m.center = maximizing_sequence_element(schedule, shape, d);
  m.probability = truncated_product(schedule, m.center, shape, d);
  return m;
}

enum class EscapeVerdict {
  kAttainedAtFiniteCenter,
  kNonAttainmentSuspected,
  // Improvements exist everywhere but the gaps did not shrink monotonically.
  kInconclusive,
};

inline const char* to_string(EscapeVerdict v) {
  switch (v) {
    case EscapeVerdict::kAttainedAtFiniteCenter: return "attained-at-finite-center";
    case EscapeVerdict::kNonAttainmentSuspected: return "non-attainment-suspected";
    case EscapeVerdict::kInconclusive: return "inconclusive";
  }
  return "?";
}

struct EscapeRecord {
  std::uint64_t n = 0;
  ProbBracket ball;         // mu(B_r(x_n))
  double gap_lower = 0.0;   // bounds on m0 - mu(B_r(x_n))
  double gap_upper = 0.0;
  double gap = 0.0;
  double log_gap = 0.0;     // log of the gap with the tail beyond K taken as 1
  std::uint64_t highest_modified = 0;  // largest nonzero coordinate of x_n
  bool improvable = false;
  std::uint64_t improvement_index = 0;
};

struct EscapeReport {
  std::vector<EscapeRecord> records;
  ProbBracket sup;
  EscapeVerdict verdict = EscapeVerdict::kInconclusive;
  std::uint64_t attained_at = 0;  // first n without improvement, if any

  std::string summary() const {
    switch (verdict) {
      case EscapeVerdict::kAttainedAtFiniteCenter:
        return "attained-at-finite-center: no coordinate of x_" + std::to_string(attained_at) +
               " can be improved within the truncation";
      case EscapeVerdict::kNonAttainmentSuspected:
        return "non-attainment-suspected (heuristic, not a proof): strict improvement available at all " +
               std::to_string(records.size()) + " tested centers, gaps strictly decreasing";
      case EscapeVerdict::kInconclusive:
        return "inconclusive: strict improvement available at all tested centers, gaps not monotone";
    }
    return {};
  }
};

namespace detail {

// log log(f(y) / f(x)) for a ball factor f with f(y) > f(x), computed from
// the complements so that it stays accurate when both factors round to 1.
inline double log_log_factor_ratio(const ScalarLaw& law, double x, double y, double r) {
  const double lcx = log_ball_complement(law, x, r);
  const double lcy = log_ball_complement(law, y, r);
  if (!(lcy < lcx)) return kNegInf;
  if (lcx == 0.0) return std::numeric_limits<double>::infinity();
  // f(y)/f(x) = 1 + u with u = (c_x - c_y) / (1 - c_x).
  const double log_u = lcx + std::log(-std::expm1(lcy - lcx)) - normal::log1mexp(lcx);
  if (log_u < -40.0) return log_u;
  return std::log(std::log1p(std::exp(log_u)));
}

}  // namespace detail

/// Follows the maximizing sequence x_n (coordinatewise optima up to n, 0
/// beyond) for n = 1..n_max. The gap m0 - mu(B_r(x_n)) is computed from the
/// per-coordinate log ratios rather than by subtracting brackets, so it stays
/// accurate far below the brackets' absolute width.
inline EscapeReport escape_diagnostic(const CoordinateSchedule& schedule, const BoxShape& shape,
                                      std::uint64_t n_max, std::uint64_t K) {
  detail::require(n_max >= 1, "escape_diagnostic: n_max must be at least 1");
  detail::require(K >= n_max, "escape_diagnostic: K must be at least n_max");
  constexpr double eps = std::numeric_limits<double>::epsilon();
  EscapeReport report;
  report.sup = sup_ball_prob(schedule, shape, K);

  // log of log(f_k* / f_k(0)) for each coordinate, -inf when the two agree.
  std::vector<double> log_best(K + 1), log_ratio(K + 1, detail::kNegInf);
  double log_sup_head = 0.0;
  for (std::uint64_t k = 1; k <= K; ++k) {
    const ScalarLaw law = schedule.law(k);
    const double r = shape.radius(k);
    const double c = argmax_center(law, r).center;
    log_best[k] = detail::log_factor(schedule, law, c, r);
    log_sup_head += log_best[k];
    if (c != 0.0) log_ratio[k] = detail::log_log_factor_ratio(law, 0.0, c, r);
  }
  const double log_tau = detail::log_tail_lower(schedule, shape.default_radius(), K).log_lower;
  const double rel = eps * (16.0 + 8.0 * double(K));

  bool always_improvable = true;
  for (std::uint64_t n = 1; n <= n_max; ++n) {
    EscapeRecord rec;
    rec.n = n;
    const FiniteCenter x = maximizing_sequence_element(schedule, shape, n);
    rec.ball = ball_prob(schedule, x, shape, K);
    rec.highest_modified = x.empty() ? 0 : x.max_index();

    // m0 = H* T*, mu(B_r(x_n)) = H_n T_0 with tails tau <= T_0 <= T* <= 1,
    // H_n = H* e^{-D} and D = sum_{n<k<=K} log(f_k* / f_k(0)). Hence
    // tau H* (1 - e^{-D}) <= gap <= H* (1 - e^{-D}) + H_n (1 - tau), tau = e^{log_tau}.
    double log_D = detail::kNegInf;
    for (std::uint64_t k = n + 1; k <= K; ++k) log_D = normal::logaddexp(log_D, log_ratio[k]);
    double log_delta = log_D;  // log(1 - e^{-D})
    if (log_D > -700.0) log_delta = std::log(-std::expm1(-std::exp(log_D)));
    rec.log_gap = log_sup_head + log_delta;
    const double lower = std::exp(log_tau + rec.log_gap);
    const double head_n = std::exp(log_sup_head - (log_D == detail::kNegInf ? 0.0 : std::exp(log_D)));
    rec.gap_lower = lower * (1.0 - rel);
    rec.gap_upper = (std::exp(rec.log_gap) + head_n * -std::expm1(log_tau)) * (1.0 + rel);
    rec.gap = 0.5 * (rec.gap_lower + rec.gap_upper);

    const auto imp = improve_center(schedule, x, shape, std::max(K, n + 1));
    rec.improvable = imp.has_value();
    if (imp) {
      rec.improvement_index = imp->index;
    } else if (always_improvable) {
      always_improvable = false;
      report.attained_at = n;
    }
    report.records.push_back(rec);
  }

  bool shrinking = true;
  for (std::size_t i = 1; i < report.records.size(); ++i)
    shrinking = shrinking && report.records[i].log_gap < report.records[i - 1].log_gap;
  if (!always_improvable)
    report.verdict = EscapeVerdict::kAttainedAtFiniteCenter;
  else
    report.verdict = shrinking ? EscapeVerdict::kNonAttainmentSuspected : EscapeVerdict::kInconclusive;
  return report;
}

/// x_s(t) = b(t) min(1, t/s): rises linearly to the ceiling over [0, s] and
/// follows it afterwards.
inline CenterPath ramp_center(const Ceiling& ceiling, double s, const PathGrid& grid) {
  detail::require(s > 0.0 && s < 1.0, "ramp time must lie in (0, 1)");
  return CenterPath::from_function(grid, [&](double t) { return ceiling(t) * std::min(1.0, t / s); });
}

struct ClimbStep {
  std::vector<double> parameters;  // {s}
  MCEstimate objective;
  // Paired comparison with the previous step (zero for the first).
  double paired_difference = 0.0;
  double paired_std_error = 0.0;
  std::uint64_t lost = 0;
  std::uint64_t gained = 0;
};

struct ClimbHistory {
  std::vector<ClimbStep> steps;
  std::vector<std::size_t> best_so_far;  // index of the best step up to each iteration
  std::uint64_t seed = 0;
  double acceptance_rate = 1.0;

  const ClimbStep& best() const { return steps[best_so_far.back()]; }
  double best_objective(std::size_t i) const { return steps[best_so_far[i]].objective.p_hat; }
};

namespace detail {

inline void require_ramp_times(const std::vector<double>& ramp_times) {
  require(!ramp_times.empty(), "path_mode_search: need at least one ramp time");
  for (std::size_t i = 0; i < ramp_times.size(); ++i) {
    require(ramp_times[i] > 0.0 && ramp_times[i] < 1.0, "ramp times must lie in (0, 1)");
    if (i > 0) require(ramp_times[i] < ramp_times[i - 1], "ramp times must be strictly decreasing");
  }
}

}  // namespace detail

inline std::vector<CenterPath> ramp_centers(const Ceiling& ceiling, const std::vector<double>& ramp_times,
                                            const PathGrid& grid) {
  detail::require_ramp_times(ramp_times);
  std::vector<CenterPath> centers;
  for (double s : ramp_times) centers.push_back(ramp_center(ceiling, s, grid));
  return centers;
}

/// Reads the climb off a comparison whose centers offset, offset + 1, ...
/// are the ramp centers for ramp_times, in order.
inline ClimbHistory climb_history(const PathComparison& cmp, const std::vector<double>& ramp_times,
                                  std::size_t offset = 0) {
  detail::require(cmp.estimates.size() >= offset + ramp_times.size(), "climb_history: too few centers");
  ClimbHistory h;
  h.seed = cmp.estimates.front().seed;
  h.acceptance_rate = cmp.acceptance_rate();
  for (std::size_t j = 0; j < ramp_times.size(); ++j) {
    ClimbStep step;
    step.parameters = {ramp_times[j]};
    step.objective = cmp.estimates[offset + j];
    if (j > 0) {
      step.paired_difference = cmp.difference(offset + j - 1);
      step.paired_std_error = cmp.difference_std_error(offset + j - 1);
      step.lost = cmp.lost[offset + j - 1];
      step.gained = cmp.gained[offset + j - 1];
    }
    h.steps.push_back(step);
    const std::size_t prev = j == 0 ? 0 : h.best_so_far.back();
    h.best_so_far.push_back(j > 0 && step.objective.p_hat > h.steps[prev].objective.p_hat ? j : prev);
  }
  return h;
}

/// Evaluates the ramp family at each s on common sample paths.
inline ClimbHistory path_mode_search(const PathLaw& law, double r, const PathGrid& grid,
                                     const std::vector<double>& ramp_times, std::uint64_t N,
                                     std::uint64_t seed, Parallelism par = {}) {
  const auto centers = ramp_centers(Ceiling(law, r), ramp_times, grid);
  return climb_history(mc_compare(law, centers, r, grid, N, seed, par), ramp_times);
}

}  // namespace radmode

#endif  // RADMODE_MODE_SEARCH_HPP
