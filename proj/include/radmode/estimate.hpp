#ifndef RADMODE_ESTIMATE_HPP
#define RADMODE_ESTIMATE_HPP

#include <cmath>
#include <cstdint>

namespace radmode {

/// Hit-fraction Monte Carlo estimate with its binomial standard error.
struct MCEstimate {
  double p_hat = 0.0;
  double std_error = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  std::uint64_t hits = 0;

  /// A zero standard error carries no information about the spread.
  bool degenerate() const noexcept { return std_error == 0.0; }
};

inline MCEstimate make_estimate(std::uint64_t hits, std::uint64_t samples, std::uint64_t seed) {
  MCEstimate e;
  e.samples = samples;
  e.seed = seed;
  e.hits = hits;
  if (samples == 0) return e;
  e.p_hat = static_cast<double>(hits) / static_cast<double>(samples);
  e.std_error = std::sqrt(e.p_hat * (1.0 - e.p_hat) / static_cast<double>(samples));
  return e;
}

}  // namespace radmode

#endif  // RADMODE_ESTIMATE_HPP
