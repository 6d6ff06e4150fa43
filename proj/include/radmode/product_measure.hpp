#ifndef RADMODE_PRODUCT_MEASURE_HPP
#define RADMODE_PRODUCT_MEASURE_HPP

// Infinite product measures on sequence space with sup-norm boxes. Ball
// probabilities are products of one-dimensional factors; the part of the
// product beyond a truncation index is bounded analytically so every result
// is a rigorous [lower, upper] bracket.

#include <cmath>
#include <cstdint>
#include <functional>
#include <iterator>
#include <limits>
#include <span>
#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "radmode/errors.hpp"
#include "radmode/estimate.hpp"
#include "radmode/normal.hpp"
#include "radmode/parallel.hpp"
#include "radmode/rng.hpp"
#include "radmode/scalar_laws.hpp"

namespace radmode {

enum class SchedulePreset { kExpK, kGaussCond, kCustom };

/// Whether truncated coordinates report conditional probabilities (divided by
/// the base mass above the bound) or base-measure probabilities of the window
/// intersected with the constraint set.
enum class Normalization { kNormalized, kUnnormalized };

inline const char* to_string(Normalization n) {
  return n == Normalization::kNormalized ? "normalized" : "unnormalized";
}

inline const char* to_string(SchedulePreset p) {
  switch (p) {
    case SchedulePreset::kExpK: return "exp-k";
    case SchedulePreset::kGaussCond: return "gauss-cond";
    case SchedulePreset::kCustom: return "custom";
  }
  return "?";
}

/// Rule k -> law of the k-th coordinate (k >= 1).
class CoordinateSchedule {
 public:
  using Rule = std::function<ScalarLaw(std::uint64_t)>;

  /// Coordinates Exp(k).
  static CoordinateSchedule exp_k() {
    return CoordinateSchedule(SchedulePreset::kExpK, Normalization::kNormalized,
                              [](std::uint64_t k) -> ScalarLaw { return Exponential(double(k)); });
  }

  /// Coordinates N(0, 1/k^2) conditioned on x_k >= -1/sqrt(k).
  static CoordinateSchedule gauss_cond(Normalization norm = Normalization::kNormalized) {
    return CoordinateSchedule(SchedulePreset::kGaussCond, norm, [](std::uint64_t k) -> ScalarLaw {
      const double kd = static_cast<double>(k);
      return LowerTruncated(Gaussian(0.0, 1.0 / kd), -1.0 / std::sqrt(kd));
    });
  }

  /// Arbitrary rule. The tail beyond a truncation K is bounded using factors
  /// up to tail_horizon_factor * K.
  static CoordinateSchedule custom(Rule rule, Normalization norm = Normalization::kNormalized,
                                   std::uint64_t tail_horizon_factor = 4) {
    detail::require(static_cast<bool>(rule), "custom schedule needs a rule");
    detail::require(tail_horizon_factor >= 2, "tail horizon factor must be at least 2");
    CoordinateSchedule s(SchedulePreset::kCustom, norm, std::move(rule));
    s.tail_horizon_factor_ = tail_horizon_factor;
    return s;
  }

  ScalarLaw law(std::uint64_t k) const {
    detail::require(k >= 1, "coordinate indices start at 1");
    return rule_(k);
  }

  SchedulePreset preset() const noexcept { return preset_; }
  Normalization normalization() const noexcept { return norm_; }
  std::uint64_t tail_horizon_factor() const noexcept { return tail_horizon_factor_; }

  /// Conditioning normalizer of coordinate k (Phi(sqrt k) for gauss-cond).
  double normalizer(std::uint64_t k) const { return conditioning_mass(law(k)); }

  /// log of the factor multiplying conditional probabilities: 0 when
  /// normalized, log normalizer(k) when not.
  double log_weight(const ScalarLaw& law) const {
    return norm_ == Normalization::kUnnormalized ? log_conditioning_mass(law) : 0.0;
  }

 private:
  CoordinateSchedule(SchedulePreset preset, Normalization norm, Rule rule)
      : preset_(preset), norm_(norm), rule_(std::move(rule)) {}

  SchedulePreset preset_;
  Normalization norm_;
  Rule rule_;
  std::uint64_t tail_horizon_factor_ = 4;
};

/// Finitely supported center; unlisted coordinates are 0 and stored entries
/// are never 0.
class FiniteCenter {
 public:
  FiniteCenter() = default;
  FiniteCenter(std::initializer_list<std::pair<const std::uint64_t, double>> init) {
    for (const auto& [k, v] : init) set(k, v);
  }

  double operator[](std::uint64_t k) const {
    const auto it = values_.find(k);
    return it == values_.end() ? 0.0 : it->second;
  }

  void set(std::uint64_t k, double v) {
    detail::require(k >= 1, "coordinate indices start at 1");
    detail::require(std::isfinite(v), "center entries must be finite");
    if (v == 0.0)
      values_.erase(k);
    else
      values_[k] = v;
  }

  std::uint64_t max_index() const { return values_.empty() ? 0 : std::prev(values_.end())->first; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  const std::map<std::uint64_t, double>& entries() const noexcept { return values_; }

  friend bool operator==(const FiniteCenter&, const FiniteCenter&) = default;

 private:
  std::map<std::uint64_t, double> values_;
};

/// Product of intervals [x_k - r_k, x_k + r_k]; with no overrides this is the
/// sup-norm ball of radius default_radius.
class BoxShape {
 public:
  explicit BoxShape(double default_radius) : default_radius_(default_radius) {
    detail::require(default_radius > 0.0 && std::isfinite(default_radius),
                    "box radius must be positive");
  }

  BoxShape& with_radius(std::uint64_t k, double r) {
    detail::require(k >= 1, "coordinate indices start at 1");
    detail::require(r > 0.0 && std::isfinite(r), "box radius must be positive");
    overrides_[k] = r;
    return *this;
  }

  double radius(std::uint64_t k) const {
    const auto it = overrides_.find(k);
    return it == overrides_.end() ? default_radius_ : it->second;
  }
  double default_radius() const noexcept { return default_radius_; }
  std::uint64_t max_override_index() const {
    return overrides_.empty() ? 0 : std::prev(overrides_.end())->first;
  }
  bool is_ball() const noexcept { return overrides_.empty(); }

 private:
  double default_radius_;
  std::map<std::uint64_t, double> overrides_;
};

struct ProbBracket {
  double lower = 0.0;
  double upper = 0.0;

  double width() const noexcept { return upper - lower; }
  double midpoint() const noexcept { return 0.5 * (lower + upper); }
  bool contains(double p) const noexcept { return lower <= p && p <= upper; }
};

namespace detail {

inline constexpr double kFactorSlack = 1e-12;
inline constexpr double kComplementSlack = 1e-9;

// log of the k-th factor as reported by the schedule (weighted when
// unnormalized).
inline double log_factor(const CoordinateSchedule& s, const ScalarLaw& law, double c, double r) {
  return log_ball_factor(law, c, r) + s.log_weight(law);
}

// log(1 - w f) for weight w = e^{lw} <= 1 and log complement lc = log(1 - f).
inline double log_weighted_complement(double lw, double lc) {
  if (lw == 0.0) return lc;
  return normal::logaddexp(normal::log1mexp(lw), lw + lc);
}

inline double bracket_exp(double log_v) { return log_v == kNegInf ? 0.0 : std::exp(log_v); }

inline void require_truncation(const FiniteCenter& c, const BoxShape& shape, std::uint64_t K) {
  require(K >= 1, "truncation K must be at least 1");
  require(K >= c.max_index(), "truncation K is below the center's support");
  require(K >= shape.max_override_index(), "truncation K is below the shape's overrides");
}

// Lower bound on log prod_{k>K} (1 - e_k) from S >= sum e_k and an upper
// bound e_max on every e_k: the better of log(1 - S) and -S / (1 - e_max)
// (the latter from log(1 - e) >= -e / (1 - e)).
inline double log_tail_from_sum(double sum, double eps_max) {
  double best = kNegInf;
  if (sum < 1.0) best = std::log1p(-sum);
  if (eps_max < 1.0) best = std::max(best, -sum / (1.0 - eps_max));
  return best;
}

struct LogTail {
  double log_lower = 0.0;
  std::uint64_t exact_terms = 0;  // factors evaluated explicitly past K
  double abs_log_sum = 0.0;
};

// Rigorous lower bound on log prod_{k>K} f_k(0) at radius r.
inline LogTail log_tail_lower(const CoordinateSchedule& s, double r, std::uint64_t K) {
  LogTail tail;
  switch (s.preset()) {
    case SchedulePreset::kExpK: {
      // 1 - f_k(0) = e^{-kr}; geometric tail.
      const double eps_max = std::exp(-double(K + 1) * r);
      tail.log_lower = log_tail_from_sum(eps_max / -std::expm1(-r), eps_max);
      return tail;
    }
    case SchedulePreset::kGaussCond: {
      // Once k r^2 >= 1 the window [-r, r] covers everything below 0 that the
      // constraint x_k >= -1/sqrt(k) leaves, so 1 - f_k(0) only involves
      // Phi(-kr) (and Phi(-sqrt k) when unnormalized), with
      // Phi(-x) <= e^{-x^2/2} / 2. Factors before that index are taken exactly.
      const std::uint64_t kstar = std::max<std::uint64_t>(K, std::uint64_t(std::ceil(1.0 / (r * r))));
      double exact = 0.0;
      for (std::uint64_t k = K + 1; k <= kstar; ++k) {
        const ScalarLaw law = s.law(k);
        exact += log_factor(s, law, 0.0, r);
        ++tail.exact_terms;
      }
      tail.abs_log_sum = -exact;
      const double n1 = double(kstar + 1);
      const double q = std::exp(-0.5 * n1 * r * r);
      const double first = std::pow(q, n1);
      const double gauss_sum = first / (1.0 - q);  // >= sum_{k>kstar} e^{-k^2 r^2 / 2}
      double sum, eps_max;
      if (s.normalization() == Normalization::kNormalized) {
        const double scale = 1.0 / (2.0 * normal::cdf(1.0));
        sum = gauss_sum * scale;
        eps_max = first * scale;
      } else {
        const double root_first = std::exp(-0.5 * n1);
        sum = 0.5 * gauss_sum + 0.5 * root_first / -std::expm1(-0.5);
        eps_max = 0.5 * (first + root_first);
      }
      tail.log_lower = exact + log_tail_from_sum(sum, eps_max);
      return tail;
    }
    case SchedulePreset::kCustom: {
      // Conservative floor from the factors up to the horizon K'.
      const std::uint64_t horizon = K * s.tail_horizon_factor();
      double sum = 0.0, eps_max = 0.0;
      for (std::uint64_t k = K + 1; k <= horizon; ++k) {
        const ScalarLaw law = s.law(k);
        const double eps =
            std::exp(log_weighted_complement(s.log_weight(law), log_ball_complement(law, 0.0, r)));
        sum += eps;
        eps_max = std::max(eps_max, eps);
      }
      tail.log_lower = log_tail_from_sum(sum, eps_max);
      return tail;
    }
  }
  tail.log_lower = kNegInf;
  return tail;
}

// Accumulated log of a finite product, with the bookkeeping needed to bound
// its floating-point error.
struct LogProduct {
  double sum = 0.0;
  double abs_sum = 0.0;
  std::uint64_t terms = 0;

  void add(double log_f) {
    sum += log_f;
    abs_sum += std::fabs(log_f);
    ++terms;
  }
};

// Widens [e^{head + tail}, e^{head}] outward by a bound on the rounding error
// of the summed logs and the final exponential.
inline ProbBracket bracket_from_logs(const LogProduct& head, const LogTail& tail) {
  if (head.sum == kNegInf) return {0.0, 0.0};
  constexpr double eps = std::numeric_limits<double>::epsilon();
  const double n = double(head.terms + tail.exact_terms);
  const double abs_total = head.abs_sum + tail.abs_log_sum;
  const double margin = eps * (8.0 + 4.0 * n * (1.0 + abs_total) + 8.0 * abs_total);
  const double upper = std::min(1.0, bracket_exp(head.sum) * (1.0 + margin));
  const double lower =
      tail.log_lower == kNegInf ? 0.0 : bracket_exp(head.sum + tail.log_lower) * (1.0 - margin);
  return {std::clamp(lower, 0.0, upper), upper};
}

}  // namespace detail

/// log prod_{k<=K} f_k(x_k) with f_k the schedule's ball factor.
namespace detail {

inline LogProduct log_head(const CoordinateSchedule& schedule, const FiniteCenter& center,
                           const BoxShape& shape, std::uint64_t K) {
  require_truncation(center, shape, K);
  LogProduct acc;
  for (std::uint64_t k = 1; k <= K; ++k) {
    const ScalarLaw law = schedule.law(k);
    const double lf = log_factor(schedule, law, center[k], shape.radius(k));
    if (lf == kNegInf) return {kNegInf, 0.0, k};
    acc.add(lf);
  }
  return acc;
}

}  // namespace detail

inline double log_truncated_product(const CoordinateSchedule& schedule, const FiniteCenter& center,
                                    const BoxShape& shape, std::uint64_t K) {
  return detail::log_head(schedule, center, shape, K).sum;
}

inline double truncated_product(const CoordinateSchedule& schedule, const FiniteCenter& center,
                                const BoxShape& shape, std::uint64_t K) {
  return detail::bracket_exp(log_truncated_product(schedule, center, shape, K));
}

/// Bracket for mu(center + box): the first K factors exactly, the rest bounded
/// below by the schedule's tail estimate and above by 1.
inline ProbBracket ball_prob(const CoordinateSchedule& schedule, const FiniteCenter& center,
                             const BoxShape& shape, std::uint64_t K) {
  const auto head = detail::log_head(schedule, center, shape, K);
  if (head.sum == detail::kNegInf) return {0.0, 0.0};
  return detail::bracket_from_logs(head, detail::log_tail_lower(schedule, shape.default_radius(), K));
}

/// Bracket for m0 = sup over centers, i.e. the product of coordinatewise
/// maximal factors.
inline ProbBracket sup_ball_prob(const CoordinateSchedule& schedule, const BoxShape& shape,
                                 std::uint64_t K) {
  detail::require(K >= 1, "truncation K must be at least 1");
  detail::require(K >= shape.max_override_index(), "truncation K is below the shape's overrides");
  detail::LogProduct head;
  for (std::uint64_t k = 1; k <= K; ++k) {
    const ScalarLaw law = schedule.law(k);
    const double r = shape.radius(k);
    head.add(detail::log_factor(schedule, law, argmax_center(law, r).center, r));
  }
  return detail::bracket_from_logs(head, detail::log_tail_lower(schedule, shape.default_radius(), K));
}

/// Center with the coordinatewise optimum in coordinates 1..n and 0 beyond.
inline FiniteCenter maximizing_sequence_element(const CoordinateSchedule& schedule,
                                                const BoxShape& shape, std::uint64_t n) {
  detail::require(n >= 1, "maximizing sequence index starts at 1");
  FiniteCenter x;
  for (std::uint64_t k = 1; k <= n; ++k) x.set(k, argmax_center(schedule.law(k), shape.radius(k)).center);
  return x;
}

struct CenterImprovement {
  FiniteCenter center;
  std::uint64_t index = 0;
  double old_factor = 0.0;
  double new_factor = 0.0;
  /// (1 - old_factor) / (1 - new_factor) > 1: certifies new_factor >
  /// old_factor even when both round to the same double.
  double complement_ratio = 1.0;
  /// log(new_factor / old_factor) as far as double precision resolves it.
  double log_gain = 0.0;
};

namespace detail {

struct CoordinateGap {
  bool improvable = false;
  double best_center = 0.0;
  double old_factor = 0.0;
  double new_factor = 0.0;
  double log_complement_ratio = 0.0;
  double log_gain = 0.0;
};

inline CoordinateGap coordinate_gap(const ScalarLaw& law, double x, double r) {
  CoordinateGap g;
  const BallOptimum opt = argmax_center(law, r);
  g.best_center = opt.center;
  if (x == opt.center) return g;
  g.old_factor = ball_factor(law, x, r);
  g.new_factor = opt.max_factor;
  g.log_complement_ratio = log_ball_complement(law, x, r) - log_ball_complement(law, opt.center, r);
  g.log_gain = log_ball_factor(law, opt.center, r) - log_ball_factor(law, x, r);
  g.improvable = g.old_factor < g.new_factor * (1.0 - kFactorSlack) ||
                 g.log_complement_ratio > std::log1p(kComplementSlack);
  return g;
}

}  // namespace detail

/// Replaces the first coordinate k0 <= K whose factor falls short of its
/// maximum by the coordinatewise optimum. The shortfall is judged on the
/// factor (relative slack 1e-12) or, when factors are within rounding of one,
/// on the complements (relative slack 1e-9). Returns nullopt when every
/// coordinate up to K is already optimal.
inline std::optional<CenterImprovement> improve_center(const CoordinateSchedule& schedule,
                                                       const FiniteCenter& center,
                                                       const BoxShape& shape, std::uint64_t K) {
  detail::require(ball_prob(schedule, center, shape, K).lower > 0.0,
                  "improve_center: center has zero ball probability bracket");
  for (std::uint64_t k = 1; k <= K; ++k) {
    const ScalarLaw law = schedule.law(k);
    const auto gap = detail::coordinate_gap(law, center[k], shape.radius(k));
    if (!gap.improvable) continue;
    CenterImprovement out;
    out.center = center;
    out.center.set(k, gap.best_center);
    out.index = k;
    out.old_factor = gap.old_factor;
    out.new_factor = gap.new_factor;
    out.complement_ratio = std::exp(gap.log_complement_ratio);
    out.log_gain = gap.log_gain;
    if (schedule.normalization() == Normalization::kUnnormalized) {
      const double w = conditioning_mass(law);
      out.old_factor *= w;
      out.new_factor *= w;
    }
    return out;
  }
  return std::nullopt;
}

/// Monte Carlo estimate of the K-dimensional truncated product: coordinates
/// are drawn by inverse-CDF sampling from stream (seed, sample index). When
/// the schedule is unnormalized, truncated coordinates are drawn from the
/// base law and the constraint counts as part of the event.
inline MCEstimate mc_ball_prob(const CoordinateSchedule& schedule, const FiniteCenter& center,
                               const BoxShape& shape, std::uint64_t K, std::uint64_t N,
                               std::uint64_t seed, Parallelism par = {}) {
  detail::require(N >= 1, "mc_ball_prob: need at least one sample");
  detail::require_truncation(center, shape, K);
  struct Coordinate {
    ScalarLaw law;
    double lo;
    double hi;
    double constraint;
  };
  std::vector<Coordinate> coords;
  coords.reserve(K);
  const bool unnormalized = schedule.normalization() == Normalization::kUnnormalized;
  for (std::uint64_t k = 1; k <= K; ++k) {
    ScalarLaw law = schedule.law(k);
    double constraint = -std::numeric_limits<double>::infinity();
    if (unnormalized) {
      if (const auto* t = std::get_if<LowerTruncated>(&law)) {
        constraint = t->lower();
        law = t->base();
      }
    }
    const double r = shape.radius(k);
    coords.push_back({law, center[k] - r, center[k] + r, constraint});
  }
  const auto counts = parallel_count(N, 1, par, [&](std::uint64_t i, std::span<std::uint64_t> c) {
    const Substream stream(seed, i, StreamTag::kCoordinates);
    for (std::size_t k = 0; k < coords.size(); ++k) {
      const double x = sample(coords[k].law, stream.uniform_at(k));
      if (x < coords[k].lo || x > coords[k].hi || x < coords[k].constraint) return;
    }
    ++c[0];
  });
  return make_estimate(counts[0], N, seed);
}

struct NullSequenceReport {
  std::uint64_t K = 0;
  double threshold = 0.0;
  double tail_max = 0.0;
  std::uint64_t tail_argmax = 0;
  bool passed = false;
};

/// Draws one realization of coordinates 1..K and checks that the tail
/// K/2 < k <= K stays within threshold, a desk-scale proxy for sampled
/// sequences tending to zero.
inline NullSequenceReport null_sequence_check(const CoordinateSchedule& schedule, std::uint64_t K,
                                              std::uint64_t seed, double threshold = 0.1) {
  detail::require(K >= 10, "null_sequence_check needs K >= 10");
  const Substream stream(seed, 0, StreamTag::kCoordinates);
  NullSequenceReport rep;
  rep.K = K;
  rep.threshold = threshold;
  for (std::uint64_t k = 1; k <= K; ++k) {
    const double x = sample(schedule.law(k), stream.uniform_at(k - 1));
    if (k > K / 2 && std::fabs(x) > rep.tail_max) {
      rep.tail_max = std::fabs(x);
      rep.tail_argmax = k;
    }
  }
  rep.passed = rep.tail_max <= threshold;
  return rep;
}

}  // namespace radmode

#endif  // RADMODE_PRODUCT_MEASURE_HPP
