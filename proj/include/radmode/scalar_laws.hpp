#ifndef RADMODE_SCALAR_LAWS_HPP
#define RADMODE_SCALAR_LAWS_HPP

// One-dimensional laws used as coordinates of product measures: exponential,
// Gaussian and lower-truncated Gaussian. Every probability is also available
// in log form, together with the log of its complement, so that factors
// within 1e-300 of one (or far below it) remain distinguishable.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <variant>

#include "radmode/errors.hpp"
#include "radmode/normal.hpp"

namespace radmode {

class Exponential {
 public:
  explicit Exponential(double rate) : rate_(rate) {
    detail::require(rate > 0.0 && std::isfinite(rate), "Exponential: rate must be positive");
  }
  double rate() const noexcept { return rate_; }

 private:
  double rate_;
};

class Gaussian {
 public:
  Gaussian(double mean, double stddev) : mean_(mean), stddev_(stddev) {
    detail::require(std::isfinite(mean), "Gaussian: mean must be finite");
    detail::require(stddev > 0.0 && std::isfinite(stddev), "Gaussian: stddev must be positive");
  }
  double mean() const noexcept { return mean_; }
  double stddev() const noexcept { return stddev_; }
  double standardize(double x) const noexcept { return (x - mean_) / stddev_; }

 private:
  double mean_;
  double stddev_;
};

/// Gaussian conditioned on X >= lower.
class LowerTruncated {
 public:
  LowerTruncated(Gaussian base, double lower)
      : base_(base), lower_(lower), z_lower_(base.standardize(lower)) {
    detail::require(std::isfinite(lower), "LowerTruncated: bound must be finite");
    mass_ = normal::sf(z_lower_);
    log_mass_ = normal::log_sf(z_lower_);
    detail::require(mass_ > 0.0, "LowerTruncated: base mass above the bound underflows");
  }

  const Gaussian& base() const noexcept { return base_; }
  double lower() const noexcept { return lower_; }
  double z_lower() const noexcept { return z_lower_; }
  /// Base probability P(X >= lower), the conditioning normalizer.
  double mass() const noexcept { return mass_; }
  double log_mass() const noexcept { return log_mass_; }

 private:
  Gaussian base_;
  double lower_;
  double z_lower_;
  double mass_ = 1.0;
  double log_mass_ = 0.0;
};

using ScalarLaw = std::variant<Exponential, Gaussian, LowerTruncated>;

struct BallOptimum {
  double center;
  double max_factor;
};

namespace detail {

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

inline void require_radius(double r) {
  require(r > 0.0 && std::isfinite(r), "ball radius must be positive and finite");
}

inline void require_interval(double a, double b) {
  require(!(a > b), "interval_prob: lower end exceeds upper end");
}

}  // namespace detail

inline double cdf(const ScalarLaw& law, double x) {
  return std::visit(
      detail::overloaded{
          [x](const Exponential& e) { return x <= 0.0 ? 0.0 : -std::expm1(-e.rate() * x); },
          [x](const Gaussian& g) { return normal::cdf(g.standardize(x)); },
          [x](const LowerTruncated& t) {
            if (x <= t.lower()) return 0.0;
            return detail::clamp01(normal::interval(t.z_lower(), t.base().standardize(x)) /
                                   t.mass());
          }},
      law);
}

/// log P(a <= X <= b).
inline double log_interval_prob(const ScalarLaw& law, double a, double b) {
  detail::require_interval(a, b);
  return std::visit(
      detail::overloaded{
          [=](const Exponential& e) {
            const double lo = e.rate() * std::max(a, 0.0);
            const double hi = e.rate() * std::max(b, 0.0);
            if (!(lo < hi)) return detail::kNegInf;
            return -lo + normal::log1mexp(-(hi - lo));
          },
          [=](const Gaussian& g) {
            return normal::log_interval(g.standardize(a), g.standardize(b));
          },
          [=](const LowerTruncated& t) {
            if (b <= t.lower()) return detail::kNegInf;
            const double za = std::max(t.base().standardize(a), t.z_lower());
            return std::min(0.0, normal::log_interval(za, t.base().standardize(b)) - t.log_mass());
          }},
      law);
}

/// log(1 - P(a <= X <= b)), accurate when the interval carries almost all mass.
inline double log_interval_complement(const ScalarLaw& law, double a, double b) {
  detail::require_interval(a, b);
  return std::visit(
      detail::overloaded{
          [=](const Exponential& e) {
            const double lo = e.rate() * std::max(a, 0.0);
            const double hi = e.rate() * std::max(b, 0.0);
            const double below = lo > 0.0 ? normal::log1mexp(-lo) : detail::kNegInf;
            return normal::logaddexp(below, -hi);
          },
          [=](const Gaussian& g) {
            return normal::logaddexp(normal::log_cdf(g.standardize(a)),
                                     normal::log_sf(g.standardize(b)));
          },
          [=](const LowerTruncated& t) {
            if (b <= t.lower()) return 0.0;
            const double za = std::max(t.base().standardize(a), t.z_lower());
            const double below = normal::log_interval(t.z_lower(), za);
            const double above = normal::log_sf(t.base().standardize(b));
            return std::min(0.0, normal::logaddexp(below, above) - t.log_mass());
          }},
      law);
}

/// P(a <= X <= b), clamped to [0, 1].
inline double interval_prob(const ScalarLaw& law, double a, double b) {
  detail::require_interval(a, b);
  return std::visit(
      detail::overloaded{
          [=](const Exponential& e) {
            const double lo = e.rate() * std::max(a, 0.0);
            const double hi = e.rate() * std::max(b, 0.0);
            if (!(lo < hi)) return 0.0;
            return detail::clamp01(-std::exp(-lo) * std::expm1(-(hi - lo)));
          },
          [=](const Gaussian& g) {
            return normal::interval(g.standardize(a), g.standardize(b));
          },
          [=](const LowerTruncated& t) {
            if (b <= t.lower()) return 0.0;
            const double za = std::max(t.base().standardize(a), t.z_lower());
            return detail::clamp01(normal::interval(za, t.base().standardize(b)) / t.mass());
          }},
      law);
}

/// mu([c - r, c + r]) for the one-dimensional law.
inline double ball_factor(const ScalarLaw& law, double center, double r) {
  detail::require_radius(r);
  return interval_prob(law, center - r, center + r);
}

inline double log_ball_complement(const ScalarLaw& law, double center, double r) {
  detail::require_radius(r);
  return log_interval_complement(law, center - r, center + r);
}

/// log ball_factor; switches to log1p of the complement when the factor is
/// close to one.
inline double log_ball_factor(const ScalarLaw& law, double center, double r) {
  detail::require_radius(r);
  const double lc = log_interval_complement(law, center - r, center + r);
  if (lc < -std::numbers::ln2) return normal::log1mexp(lc);
  return log_interval_prob(law, center - r, center + r);
}

/// Center maximizing ball_factor, with the maximal value. All three laws have
/// unimodal densities on their support, so the optimum is available in closed
/// form: the window sits at the mode unless the support edge forces it up.
inline BallOptimum argmax_center(const ScalarLaw& law, double r) {
  detail::require_radius(r);
  return std::visit(
      detail::overloaded{
          [r](const Exponential& e) {
            return BallOptimum{r, -std::expm1(-2.0 * e.rate() * r)};
          },
          [r](const Gaussian& g) {
            return BallOptimum{g.mean(), normal::interval(-r / g.stddev(), r / g.stddev())};
          },
          [&law, r](const LowerTruncated& t) {
            double c = std::max(t.base().mean(), t.lower() + r);
            // Keep the window's lower edge at or below the support edge in
            // floating point, else a rounding sliver is counted as missed.
            while (c > t.base().mean() && c - r > t.lower()) c = std::nextafter(c, -HUGE_VAL);
            return BallOptimum{c, ball_factor(law, c, r)};
          }},
      law);
}

/// The u-quantile of the law (inverse-CDF sampling).
inline double sample(const ScalarLaw& law, double u) {
  detail::require(u > 0.0 && u < 1.0, "sample: u must lie in (0, 1)");
  return std::visit(
      detail::overloaded{
          [u](const Exponential& e) { return -std::log1p(-u) / e.rate(); },
          [u](const Gaussian& g) {
            const double z = u <= 0.5 ? normal::quantile(u) : normal::quantile_upper(1.0 - u);
            return g.mean() + g.stddev() * z;
          },
          [u](const LowerTruncated& t) {
            const double below = normal::cdf(t.z_lower());
            const double target = below + u * t.mass();
            const double z = target <= 0.5 ? normal::quantile(target)
                                            : normal::quantile_upper((1.0 - u) * t.mass());
            return std::max(t.lower(), t.base().mean() + t.base().stddev() * std::max(z, t.z_lower()));
          }},
      law);
}

/// Conditioning normalizer of the law: P_base(X >= lower) for a truncated
/// Gaussian, 1 otherwise.
inline double conditioning_mass(const ScalarLaw& law) {
  if (const auto* t = std::get_if<LowerTruncated>(&law)) return t->mass();
  return 1.0;
}

inline double log_conditioning_mass(const ScalarLaw& law) {
  if (const auto* t = std::get_if<LowerTruncated>(&law)) return t->log_mass();
  return 0.0;
}

inline std::string describe(const ScalarLaw& law) {
  return std::visit(
      detail::overloaded{
          [](const Exponential& e) { return "Exp(" + std::to_string(e.rate()) + ")"; },
          [](const Gaussian& g) {
            return "N(" + std::to_string(g.mean()) + ", sd=" + std::to_string(g.stddev()) + ")";
          },
          [](const LowerTruncated& t) {
            return "N(" + std::to_string(t.base().mean()) + ", sd=" +
                   std::to_string(t.base().stddev()) + ") | X >= " + std::to_string(t.lower());
          }},
      law);
}

}  // namespace radmode

#endif  // RADMODE_SCALAR_LAWS_HPP
