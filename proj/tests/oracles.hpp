#ifndef RADMODE_TESTS_ORACLES_HPP
#define RADMODE_TESTS_ORACLES_HPP

// Reference computations for the tests. Nothing here calls into the library;
// each oracle follows a different route (extended precision, brute force,
// series) from the code it checks.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>

namespace oracle {

// Phi(x) reference values, 25 significant digits, from an arbitrary-precision
// evaluation.
struct PhiRef {
  double x;
  long double phi;
};
inline constexpr PhiRef kPhiTable[] = {
    {0.0, 0.5L},
    {1.0, 0.8413447460685429485852325L},
    {-1.0, 0.1586552539314570514147675L},
    {2.0, 0.9772498680518207927997174L},
    {-2.0, 0.02275013194817920720028264L},
    {5.0, 0.9999997133484281208060883L},
    {-5.0, 2.866515718791939116737523e-7L},
    {8.0, 0.9999999999999993779039426L},
    {-8.0, 6.220960574271784123515995e-16L},
};

inline constexpr long double kTwoPhi1Minus1 = 0.6826894921370858971704651L;
inline constexpr long double kTwoPhiHalfMinus1 = 0.3829249225480262072754092L;
inline constexpr long double kHalfNormalMedian = 0.674489750196081743202227L;
// prod_k (1 - e^{-k}), i.e. m0 for Exp(k) coordinates at r = 1/2.
inline constexpr long double kExpM0HalfRadius = 0.5044286547259664033345655L;
inline constexpr long double kExpM0QuarterRadius = 0.1348593794832215993186583L;
inline constexpr long double kExpM0UnitRadius = 0.8463953092952897946370602L;
// (4/pi) sum (-1)^n/(2n+1) exp(-(2n+1)^2 pi^2 / 8): P(sup |W| <= 1).
inline constexpr long double kWienerSmallBallUnit = 0.3707774297995239053959987L;

inline long double phi_ext(long double x) { return 0.5L * std::erfc(-x / std::sqrt(2.0L)); }

// Extended-precision partial product prod_{k=1}^{K} f(k).
inline long double partial_product(std::uint64_t K, const std::function<long double(std::uint64_t)>& f) {
  long double p = 1.0L;
  for (std::uint64_t k = 1; k <= K; ++k) p *= f(k);
  return p;
}

// Exp(k) m0 factors 1 - e^{-2kr}.
inline long double exp_sup_partial(long double r, std::uint64_t K) {
  return partial_product(K, [r](std::uint64_t k) { return 1.0L - std::exp(-2.0L * k * r); });
}

// Exp(lambda) mass of [c - r, c + r] by the closed form e^{-l(c-r)+} - e^{-l(c+r)+}.
inline long double exp_ball_closed_form(long double rate, long double c, long double r) {
  auto pos = [](long double v) { return v > 0 ? v : 0.0L; };
  return std::exp(-rate * pos(c - r)) - std::exp(-rate * pos(c + r));
}

// Conditioned Gaussian factor with sd 1/k, bound -1/sqrt(k), at its optimal
// center (kr - sqrt k)^+ / k, in standardized units; normalized divides by
// Phi(sqrt k).
inline long double gauss_cond_sup_factor(std::uint64_t k, long double r, bool normalized) {
  const long double kd = k, sk = std::sqrt(kd);
  const long double c = std::max(0.0L, kd * r - sk);
  const long double lo = std::max(c - kd * r, -sk);
  long double f = phi_ext(c + kd * r) - phi_ext(lo);
  if (normalized) f /= phi_ext(sk);
  return f;
}

// Composite Simpson quadrature.
inline long double simpson(const std::function<long double(long double)>& f, long double a,
                           long double b, int n = 20000) {
  if (n % 2) ++n;
  const long double h = (b - a) / n;
  long double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0L : 2.0L) * f(a + i * h);
  return s * h / 3.0L;
}

// Theta series for P(sup_{[0,1]} |W| <= r).
inline long double wiener_small_ball(long double r, int terms = 50) {
  long double s = 0.0L;
  const long double pi = std::numbers::pi_v<long double>;
  for (int n = 0; n < terms; ++n) {
    const long double m = 2.0L * n + 1.0L;
    s += (n % 2 ? -1.0L : 1.0L) / m * std::exp(-m * m * pi * pi / (8.0L * r * r));
  }
  return 4.0L / pi * s;
}

// Reflection principle: P(max_{[0,1]} W <= a) = 2 Phi(a) - 1.
inline long double running_max_cdf(long double a) { return 2.0L * phi_ext(a) - 1.0L; }

// Brute-force maximum of g over a uniform grid.
inline double grid_max(const std::function<double(double)>& g, double lo, double hi, double step) {
  double best = -1.0;
  for (double c = lo; c <= hi; c += step) best = std::max(best, g(c));
  return best;
}

}  // namespace oracle

#endif  // RADMODE_TESTS_ORACLES_HPP
