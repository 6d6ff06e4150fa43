#ifndef RADMODE_NORMAL_HPP
#define RADMODE_NORMAL_HPP

// Standard normal distribution: CDF and tails built on erfc, log-space tails
// that stay finite far beyond the double underflow point, and the quantile.

#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

namespace radmode::normal {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

inline double pdf(double x) {
  return std::exp(-0.5 * x * x - kLogSqrt2Pi);
}

/// Phi(x). Both tails come from erfc, so Phi(-x) for large x keeps full
/// relative accuracy until erfc underflows (x around 37).
inline double cdf(double x) {
  return 0.5 * std::erfc(-x * kInvSqrt2);
}

/// 1 - Phi(x) without cancellation.
inline double sf(double x) {
  return 0.5 * std::erfc(x * kInvSqrt2);
}

namespace detail {

// Mills ratio (1 - Phi(y)) / phi(y) for y >= 20 via its continued fraction
// 1/(y + 1/(y + 2/(y + 3/(y + ...)))), evaluated backwards.
inline double mills_ratio_cf(double y) {
  double tail = y;
  for (int k = 60; k >= 1; --k) tail = y + k / tail;
  return 1.0 / tail;
}

inline constexpr double kCfSwitch = -20.0;

}  // namespace detail

/// log Phi(x), accurate for all finite x including x << -38 where Phi itself
/// underflows.
inline double log_cdf(double x) {
  if (std::isnan(x)) return x;
  if (x == -std::numeric_limits<double>::infinity()) return x;
  if (x > 0.0) return std::log1p(-sf(x));
  if (x >= detail::kCfSwitch) return std::log(cdf(x));
  const double y = -x;
  return -0.5 * y * y - kLogSqrt2Pi + std::log(detail::mills_ratio_cf(y));
}

/// log(1 - Phi(x)).
inline double log_sf(double x) { return log_cdf(-x); }

/// log(1 - e^a) for a <= 0.
inline double log1mexp(double a) {
  if (a == 0.0) return -std::numeric_limits<double>::infinity();
  return a > -std::numbers::ln2 ? std::log(-std::expm1(a)) : std::log1p(-std::exp(a));
}

/// log(e^a + e^b).
inline double logaddexp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == -std::numeric_limits<double>::infinity()) return a;
  return a + std::log1p(std::exp(b - a));
}

/// Phi(b) - Phi(a) for a <= b, branch-selected by sign so that intervals deep
/// in either tail are differences of small numbers rather than of near-1 CDFs.
inline double interval(double a, double b) {
  if (!(a < b)) return 0.0;
  double p;
  if (a >= 0.0) {
    p = sf(a) - sf(b);
  } else if (b <= 0.0) {
    p = cdf(b) - cdf(a);
  } else {
    p = 1.0 - (cdf(a) + sf(b));
  }
  return p < 0.0 ? 0.0 : (p > 1.0 ? 1.0 : p);
}

/// log(Phi(b) - Phi(a)) for a <= b; -inf for an empty interval.
inline double log_interval(double a, double b) {
  if (!(a < b)) return -std::numeric_limits<double>::infinity();
  if (a >= 0.0) {
    const double la = log_sf(a);
    return la + log1mexp(log_sf(b) - la);
  }
  if (b <= 0.0) {
    const double lb = log_cdf(b);
    return lb + log1mexp(log_cdf(a) - lb);
  }
  return std::log1p(-(cdf(a) + sf(b)));
}

namespace detail {

template <std::size_t N>
inline double horner(const double (&c)[N], double x) {
  double s = c[N - 1];
  for (std::size_t i = N - 1; i-- > 0;) s = s * x + c[i];
  return s;
}

// Wichura's AS 241 (PPND16), about 1e-16 relative accuracy before refinement.
inline double ppnd16(double p) {
  static constexpr double a[] = {3.3871328727963666080e0,  1.3314166789178437745e+2,
                                 1.9715909503065514427e+3, 1.3731693765509461125e+4,
                                 4.5921953931549871457e+4, 6.7265770927008700853e+4,
                                 3.3430575583588128105e+4, 2.5090809287301226727e+3};
  static constexpr double b[] = {1.0,
                                 4.2313330701600911252e+1, 6.8718700749205790830e+2,
                                 5.3941960214247511077e+3, 2.1213794301586595867e+4,
                                 3.9307895800092710610e+4, 2.8729085735721942674e+4,
                                 5.2264952788528545610e+3};
  static constexpr double c[] = {1.42343711074968357734e0, 4.63033784615654529590e0,
                                 5.76949722146069140550e0, 3.64784832476320460504e0,
                                 1.27045825245236838258e0, 2.41780725177450611770e-1,
                                 2.27238449892691845833e-2, 7.74545014278341407640e-4};
  static constexpr double d[] = {1.0,
                                 2.05319162663775882187e0, 1.67638483018380384940e0,
                                 6.89767334985100004550e-1, 1.48103976427480074590e-1,
                                 1.51986665636164571966e-2, 5.47593808499534494600e-4,
                                 1.05075007164441684324e-9};
  static constexpr double e[] = {6.65790464350110377720e0, 5.46378491116411436990e0,
                                 1.78482653991729133580e0, 2.96560571828504891230e-1,
                                 2.65321895265761230930e-2, 1.24266094738807843860e-3,
                                 2.71155556874348757815e-5, 2.01033439929228813265e-7};
  static constexpr double f[] = {1.0,
                                 5.99832206555887937690e-1, 1.36929880922735805310e-1,
                                 1.48753612908506148525e-2, 7.86869131145613259100e-4,
                                 1.84631831751005468180e-5, 1.42151175831644588870e-7,
                                 2.04426310338993978564e-15};
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q * horner(a, r) / horner(b, r);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double v;
  if (r <= 5.0) {
    r -= 1.6;
    v = horner(c, r) / horner(d, r);
  } else {
    r -= 5.0;
    v = horner(e, r) / horner(f, r);
  }
  return q < 0.0 ? -v : v;
}

}  // namespace detail

/// Phi^{-1}(p) for p in (0, 1): rational approximation plus one Newton step.
/// For p > 1/2 prefer quantile_upper(1 - p) when 1 - p is known exactly.
inline double quantile(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  double z = detail::ppnd16(p);
  const double dens = pdf(z);
  if (dens > 0.0) {
    const double err = z <= 0.0 ? cdf(z) - p : (1.0 - p) - sf(z);
    z -= err / dens;
  }
  return z;
}

/// z with 1 - Phi(z) = q, computed from the lower-tail quantile so that tiny
/// upper-tail masses keep their relative precision.
inline double quantile_upper(double q) { return -quantile(q); }

}  // namespace radmode::normal

#endif  // RADMODE_NORMAL_HPP
