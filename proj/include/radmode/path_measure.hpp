#ifndef RADMODE_PATH_MEASURE_HPP
#define RADMODE_PATH_MEASURE_HPP

// Wiener space on a uniform grid over [0, 1]: Brownian paths, the running
// maximum, reflection, conditioning above a law-of-the-iterated-logarithm
// boundary, and Monte Carlo sup-norm ball probabilities with common random
// numbers across centers.
//
// Sup-norms are evaluated at grid points only. For the Wiener, reflected and
// conditioned laws this over-estimates ball probabilities by a bias that
// shrinks like N^{-1/2}. The running maximum is sampled exactly at grid times
// by drawing the maximum of the Brownian bridge within each cell, so its
// grid values carry no discretization bias.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "radmode/errors.hpp"
#include "radmode/estimate.hpp"
#include "radmode/parallel.hpp"
#include "radmode/rng.hpp"

namespace radmode {

class PathGrid {
 public:
  explicit PathGrid(std::uint32_t steps) : steps_(steps) {
    detail::require(steps >= 2, "PathGrid needs at least 2 steps");
  }
  std::uint32_t steps() const noexcept { return steps_; }
  std::size_t points() const noexcept { return std::size_t(steps_) + 1; }
  double dt() const noexcept { return 1.0 / steps_; }
  double time(std::size_t i) const noexcept { return double(i) / steps_; }

  friend bool operator==(const PathGrid&, const PathGrid&) = default;

 private:
  std::uint32_t steps_;
};

/// Function on a PathGrid with value 0 at t = 0. The role tag keeps sampled
/// paths and ball centers apart in signatures.
template <class Role>
class GridPath {
 public:
  explicit GridPath(PathGrid grid) : grid_(grid), values_(grid.points(), 0.0) {}
  GridPath(PathGrid grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    detail::require(values_.size() == grid_.points(), "path length does not match its grid");
    detail::require(values_[0] == 0.0, "paths start at 0");
  }

  /// Samples f on the grid; f(0) is replaced by 0.
  template <class F>
  static GridPath from_function(PathGrid grid, F&& f) {
    std::vector<double> v(grid.points());
    v[0] = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i) v[i] = f(grid.time(i));
    return GridPath(grid, std::move(v));
  }

  const PathGrid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const noexcept { return values_.size(); }

  friend bool operator==(const GridPath&, const GridPath&) = default;

 private:
  PathGrid grid_;
  std::vector<double> values_;
};

struct SampleRole;
struct CenterRole;
using SamplePath = GridPath<SampleRole>;
using CenterPath = GridPath<CenterRole>;

/// rho(t) = -2 sqrt(2 t log log(1/t)) for 0 < t <= t0, rho(0) = 0 and
/// rho(t) = rho(t0) beyond t0.
class BoundaryFunction {
 public:
  explicit BoundaryFunction(double t0 = 0.05) : t0_(t0) {
    detail::require(t0 > 0.0 && t0 < 1.0 / std::numbers::e, "boundary t0 must lie in (0, 1/e)");
  }
  double t0() const noexcept { return t0_; }

  double operator()(double t) const {
    detail::require(t >= 0.0 && t <= 1.0, "boundary evaluated outside [0, 1]");
    if (t <= 0.0) return 0.0;
    const double s = std::min(t, t0_);
    return -2.0 * std::sqrt(2.0 * s * std::log(std::log(1.0 / s)));
  }

  friend bool operator==(const BoundaryFunction&, const BoundaryFunction&) = default;

 private:
  double t0_;
};

inline double lil_boundary(const BoundaryFunction& b, double t) { return b(t); }

struct Wiener {};

/// How the running maximum is resolved between grid points.
enum class MaxResolution {
  kBridge,  // exact maximum over each cell from the Brownian bridge
  kGrid,    // maximum over grid values only
};

struct RunningMax {
  MaxResolution resolution = MaxResolution::kBridge;
};

struct ReflectedWiener {};

struct ConditionedWiener {
  BoundaryFunction boundary{};
  std::uint64_t max_tries = 1'000'000;
};

using PathLaw = std::variant<Wiener, RunningMax, ReflectedWiener, ConditionedWiener>;

inline const char* law_name(const PathLaw& law) {
  switch (law.index()) {
    case 0: return "wiener";
    case 1: return "runmax";
    case 2: return "reflected";
    default: return "conditioned";
  }
}

/// Whether sampled paths are nonnegative (the ball's lower constraint can
/// then never bind below 0).
inline bool is_nonnegative(const PathLaw& law) {
  return std::holds_alternative<RunningMax>(law) || std::holds_alternative<ReflectedWiener>(law);
}

/// Randomness address of one sample path.
struct SampleAddress {
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
};

inline SamplePath sample_wiener(const PathGrid& grid, SampleAddress addr, std::uint32_t attempt = 0) {
  const Substream stream(addr.seed, addr.index, StreamTag::kIncrements, attempt);
  NormalCursor z(stream);
  const double sd = std::sqrt(grid.dt());
  std::vector<double> v(grid.points());
  v[0] = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) v[i] = v[i - 1] + sd * z.next();
  return SamplePath(grid, std::move(v));
}

inline SamplePath running_max(const SamplePath& path) {
  std::vector<double> v(path.values().begin(), path.values().end());
  for (std::size_t i = 1; i < v.size(); ++i) v[i] = std::max(v[i], v[i - 1]);
  return SamplePath(path.grid(), std::move(v));
}

inline SamplePath reflect(const SamplePath& path) {
  std::vector<double> v(path.values().begin(), path.values().end());
  for (double& x : v) x = std::fabs(x);
  return SamplePath(path.grid(), std::move(v));
}

template <class Role>
double sup_distance(const SamplePath& path, const GridPath<Role>& center) {
  detail::require(path.grid() == center.grid(), "sup_distance: grid mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < path.size(); ++i) d = std::max(d, std::fabs(path[i] - center[i]));
  return d;
}

inline double sup_distance(const SamplePath& a, const SamplePath& b) {
  return sup_distance<SampleRole>(a, b);
}

namespace detail {

inline std::vector<double> boundary_on_grid(const BoundaryFunction& b, const PathGrid& grid) {
  std::vector<double> rho(grid.points());
  for (std::size_t i = 0; i < rho.size(); ++i) rho[i] = b(grid.time(i));
  return rho;
}

// Everything a sampler needs that depends only on (law, grid).
struct PathSampler {
  PathLaw law;
  PathGrid grid;
  double sd;
  std::vector<double> floor;  // conditioning boundary at grid points, if any

  PathSampler(PathLaw l, PathGrid g) : law(std::move(l)), grid(g), sd(std::sqrt(g.dt())) {
    if (const auto* c = std::get_if<ConditionedWiener>(&law)) {
      require(c->max_tries >= 1, "ConditionedWiener needs max_tries >= 1");
      floor = boundary_on_grid(c->boundary, grid);
    }
  }

  // Streams the path values v[1..N] to visit(i, v); visit returns false to
  // stop early. Conditioned paths are produced by rejection into buf first.
  // Returns the number of attempts used.
  template <class Visit>
  std::uint64_t run(SampleAddress addr, std::vector<double>& buf, Visit&& visit) const {
    const std::size_t n = grid.points();
    if (std::holds_alternative<Wiener>(law) || std::holds_alternative<ReflectedWiener>(law)) {
      const bool fold = std::holds_alternative<ReflectedWiener>(law);
      const Substream stream(addr.seed, addr.index, StreamTag::kIncrements);
      NormalCursor z(stream);
      double w = 0.0;
      for (std::size_t i = 1; i < n; ++i) {
        w += sd * z.next();
        if (!visit(i, fold ? std::fabs(w) : w)) break;
      }
      return 1;
    }
    if (const auto* rm = std::get_if<RunningMax>(&law)) {
      const Substream stream(addr.seed, addr.index, StreamTag::kIncrements);
      const Substream bridge(addr.seed, addr.index, StreamTag::kBridge);
      NormalCursor z(stream);
      UniformCursor u(bridge);
      const double two_dt = 2.0 * grid.dt();
      double w = 0.0, m = 0.0;
      for (std::size_t i = 1; i < n; ++i) {
        const double prev = w;
        w += sd * z.next();
        double cell = w;
        if (rm->resolution == MaxResolution::kBridge) {
          const double jump = w - prev;
          cell = 0.5 * (prev + w + std::sqrt(jump * jump - two_dt * std::log(u.next())));
        }
        m = std::max(m, cell);
        if (!visit(i, m)) break;
      }
      return 1;
    }
    const auto& cond = std::get<ConditionedWiener>(law);
    buf.resize(n);
    for (std::uint64_t attempt = 0; attempt < cond.max_tries; ++attempt) {
      const Substream stream(addr.seed, addr.index, StreamTag::kIncrements,
                             static_cast<std::uint32_t>(attempt));
      NormalCursor z(stream);
      double w = 0.0;
      bool ok = true;
      buf[0] = 0.0;
      for (std::size_t i = 1; i < n; ++i) {
        w += sd * z.next();
        if (w < floor[i]) {
          ok = false;
          break;
        }
        buf[i] = w;
      }
      if (!ok) continue;
      for (std::size_t i = 1; i < n; ++i)
        if (!visit(i, buf[i])) break;
      return attempt + 1;
    }
    throw RejectionFailure(cond.max_tries, 0);
  }
};

}  // namespace detail

/// One path of the law. Conditioned paths satisfy path[i] >= rho(t_i) at
/// every grid point; RejectionFailure is thrown after max_tries.
inline SamplePath sample_law(const PathLaw& law, const PathGrid& grid, SampleAddress addr) {
  const detail::PathSampler sampler(law, grid);
  std::vector<double> v(grid.points(), 0.0), buf;
  sampler.run(addr, buf, [&](std::size_t i, double x) {
    v[i] = x;
    return true;
  });
  return SamplePath(grid, std::move(v));
}

/// Monte Carlo estimate of mu(B_r(center)) with grid sup-norm. Sample i uses
/// stream (seed, i), so results do not depend on the worker count.
inline MCEstimate mc_ball_prob(const PathLaw& law, const CenterPath& center, double r,
                               const PathGrid& grid, std::uint64_t N, std::uint64_t seed,
                               Parallelism par = {}) {
  detail::require(r > 0.0 && std::isfinite(r), "ball radius must be positive");
  detail::require(N >= 1, "mc_ball_prob: need at least one sample");
  detail::require(center.grid() == grid, "center is not on the sampling grid");
  const detail::PathSampler sampler(law, grid);
  const auto c = center.values();
  // Slots: hits, attempts, accepted paths. A rejection failure reports the
  // attempts and acceptances of its worker up to that point.
  const auto counts = parallel_count(N, 3, par, [&](std::uint64_t i, std::span<std::uint64_t> out) {
    std::vector<double> buf;
    bool inside = true;
    try {
      out[1] += sampler.run({seed, i}, buf, [&](std::size_t k, double x) {
        inside = std::fabs(x - c[k]) <= r;
        return inside;
      });
    } catch (const RejectionFailure& f) {
      throw RejectionFailure(out[1] + f.tries(), out[2]);
    }
    ++out[2];
    if (inside) ++out[0];
  });
  return make_estimate(counts[0], N, seed);
}

/// Common-random-number comparison of ball indicators for several centers
/// on the same sampled paths.
struct PathComparison {
  std::vector<MCEstimate> estimates;
  /// lost[j]: paths inside ball j but outside ball j + 1.
  std::vector<std::uint64_t> lost;
  /// gained[j]: paths inside ball j + 1 but outside ball j.
  std::vector<std::uint64_t> gained;
  std::uint64_t attempts = 0;

  /// p_{j+1} - p_j and its paired standard error.
  double difference(std::size_t j) const {
    return estimates[j + 1].p_hat - estimates[j].p_hat;
  }
  double difference_std_error(std::size_t j) const {
    const double n = double(estimates[j].samples);
    const double d = difference(j);
    const double second = double(gained[j] + lost[j]) / n;
    return std::sqrt(std::max(0.0, second - d * d) / n);
  }
  double acceptance_rate() const {
    return attempts == 0 ? 0.0 : double(estimates.front().samples) / double(attempts);
  }
};

inline PathComparison mc_compare(const PathLaw& law, std::span<const CenterPath> centers, double r,
                                 const PathGrid& grid, std::uint64_t N, std::uint64_t seed,
                                 Parallelism par = {}) {
  detail::require(r > 0.0 && std::isfinite(r), "ball radius must be positive");
  detail::require(N >= 1, "mc_compare: need at least one sample");
  detail::require(!centers.empty(), "mc_compare: need at least one center");
  for (const auto& c : centers) detail::require(c.grid() == grid, "center is not on the sampling grid");
  const std::size_t m = centers.size();
  // Slots: hits per center, lost and gained per consecutive pair, then
  // attempts and accepted paths.
  const std::size_t slots = m + 2 * (m - 1) + 2;
  const std::size_t attempts_slot = slots - 2, accepted_slot = slots - 1;
  const detail::PathSampler sampler(law, grid);
  const auto counts = parallel_count(N, slots, par, [&](std::uint64_t i, std::span<std::uint64_t> out) {
    std::vector<double> buf;
    std::vector<char> inside(m, 1);
    std::size_t alive = m;
    try {
      out[attempts_slot] += sampler.run({seed, i}, buf, [&](std::size_t k, double x) {
        for (std::size_t j = 0; j < m; ++j) {
          if (inside[j] && std::fabs(x - centers[j][k]) > r) {
            inside[j] = 0;
            --alive;
          }
        }
        return alive > 0;
      });
    } catch (const RejectionFailure& f) {
      throw RejectionFailure(out[attempts_slot] + f.tries(), out[accepted_slot]);
    }
    ++out[accepted_slot];
    for (std::size_t j = 0; j < m; ++j) out[j] += inside[j];
    for (std::size_t j = 0; j + 1 < m; ++j) {
      out[m + j] += inside[j] && !inside[j + 1];
      out[m + (m - 1) + j] += !inside[j] && inside[j + 1];
    }
  });
  PathComparison cmp;
  for (std::size_t j = 0; j < m; ++j) cmp.estimates.push_back(make_estimate(counts[j], N, seed));
  for (std::size_t j = 0; j + 1 < m; ++j) {
    cmp.lost.push_back(counts[m + j]);
    cmp.gained.push_back(counts[m + (m - 1) + j]);
  }
  cmp.attempts = counts[attempts_slot];
  return cmp;
}

/// Empirical acceptance rate of the conditioned law's rejection sampler:
/// accepted paths over attempts for N samples.
inline MCEstimate acceptance_rate(const ConditionedWiener& law, const PathGrid& grid,
                                  std::uint64_t N, std::uint64_t seed, Parallelism par = {}) {
  const auto cmp = mc_compare(law, std::vector<CenterPath>{CenterPath(grid)},
                              std::numeric_limits<double>::max(), grid, N, seed, par);
  return make_estimate(N, cmp.attempts, seed);
}

/// Pointwise upper limit b(t) for centers whose balls keep all their mass:
/// r for nonnegative laws, rho(t) + r for the conditioned law. Rounded down
/// where needed so that b(t) - rho(t) <= r holds in floating point.
class Ceiling {
 public:
  Ceiling(const PathLaw& law, double r) : r_(r) {
    detail::require(r > 0.0 && std::isfinite(r), "ball radius must be positive");
    if (const auto* c = std::get_if<ConditionedWiener>(&law))
      boundary_ = c->boundary;
    else
      detail::require(is_nonnegative(law), "ceiling is defined for nonnegative or conditioned laws");
  }

  double operator()(double t) const {
    if (!boundary_) return r_;
    const double rho = (*boundary_)(t);
    double c = rho + r_;
    while (c - rho > r_) c = std::nextafter(c, -std::numeric_limits<double>::infinity());
    return c;
  }

  double radius() const noexcept { return r_; }
  const std::optional<BoundaryFunction>& boundary() const noexcept { return boundary_; }

 private:
  double r_;
  std::optional<BoundaryFunction> boundary_;
};

/// Raises the center on (0, s) toward the ceiling and leaves it unchanged on
/// [s, 1]: omega'(t) = max(center(t), min(b(t), beta t, beta (s - t))) with
/// beta = 2 b(s/2) / s. Any path in the original ball that respects the law's
/// support constraint stays in the new ball.
inline CenterPath improve_center(const CenterPath& center, double r, double s, const Ceiling& ceiling) {
  detail::require(r > 0.0 && std::isfinite(r), "ball radius must be positive");
  detail::require(s > 0.0 && s < 1.0, "improve_center: s must lie in (0, 1)");
  detail::require(ceiling.radius() == r, "improve_center: ceiling built for another radius");
  const PathGrid& grid = center.grid();
  const double beta = 2.0 * ceiling(0.5 * s) / s;
  std::vector<double> v(center.values().begin(), center.values().end());
  bool raised = false;
  for (std::size_t i = 1; i < v.size(); ++i) {
    const double t = grid.time(i);
    if (t >= s) break;
    const double b = ceiling(t);
    detail::require(center[i] <= b, "improve_center: center exceeds the ceiling on (0, s)");
    const double lifted = std::max(center[i], std::min({b, beta * t, beta * (s - t)}));
    if (lifted > center[i]) raised = true;
    v[i] = lifted;
  }
  detail::require(raised, "improve_center: no room below the ceiling on (0, s)");
  return CenterPath(grid, std::move(v));
}

}  // namespace radmode

#endif  // RADMODE_PATH_MEASURE_HPP
