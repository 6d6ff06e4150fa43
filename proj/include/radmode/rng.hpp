#ifndef RADMODE_RNG_HPP
#define RADMODE_RNG_HPP

// Counter-based random numbers (Philox4x32-10). A draw is a pure function of
// (seed, sample index, stream tag, attempt, position), so any worker can
// regenerate any sample's randomness without coordinating with others, and
// competing estimators see identical inputs (common random numbers).

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace radmode {

using Philox4x32Counter = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

inline Philox4x32Counter philox4x32_10(Philox4x32Counter ctr, Philox4x32Key key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
  }
  return ctr;
}

/// Independent streams used by the samplers. Distinct tags never share
/// counters, so e.g. bridge uniforms never perturb the Gaussian increments.
enum class StreamTag : std::uint32_t {
  kCoordinates = 1,
  kIncrements = 2,
  kBridge = 3,
};

/// Uniform in the open interval (0, 1) from the top 52 bits of a word.
inline double open_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

/// The randomness of one (sample, stream, attempt) triple, addressed by a
/// position index. Two 64-bit words are produced per position.
class Substream {
 public:
  Substream(std::uint64_t seed, std::uint64_t sample, StreamTag tag, std::uint32_t attempt = 0)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        sample_lo_(static_cast<std::uint32_t>(sample)),
        sample_hi_tag_(static_cast<std::uint32_t>((sample >> 32) & 0x00FFFFFFu) |
                       (static_cast<std::uint32_t>(tag) << 24)),
        attempt_(attempt) {}

  std::pair<std::uint64_t, std::uint64_t> words(std::uint32_t position) const {
    const auto out = philox4x32_10({position, attempt_, sample_lo_, sample_hi_tag_}, key_);
    return {(static_cast<std::uint64_t>(out[1]) << 32) | out[0],
            (static_cast<std::uint64_t>(out[3]) << 32) | out[2]};
  }

  std::pair<double, double> uniforms(std::uint32_t position) const {
    const auto [a, b] = words(position);
    return {open_unit(a), open_unit(b)};
  }

  /// Two independent standard normals (Box-Muller) for a position.
  std::pair<double, double> normals(std::uint32_t position) const {
    const auto [u1, u2] = uniforms(position);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
  }

  /// The i-th uniform of the stream, two per position.
  double uniform_at(std::uint64_t i) const {
    const auto [a, b] = uniforms(static_cast<std::uint32_t>(i >> 1));
    return (i & 1u) ? b : a;
  }

 private:
  Philox4x32Key key_;
  std::uint32_t sample_lo_;
  std::uint32_t sample_hi_tag_;
  std::uint32_t attempt_;
};

/// Sequential cursor over a Substream's normals, consuming both halves of
/// every Box-Muller pair.
class NormalCursor {
 public:
  explicit NormalCursor(const Substream& s) : stream_(&s) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const auto [z0, z1] = stream_->normals(position_++);
    spare_ = z1;
    have_spare_ = true;
    return z0;
  }

 private:
  const Substream* stream_;
  std::uint32_t position_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// Sequential cursor over a Substream's uniforms.
class UniformCursor {
 public:
  explicit UniformCursor(const Substream& s) : stream_(&s) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const auto [u0, u1] = stream_->uniforms(position_++);
    spare_ = u1;
    have_spare_ = true;
    return u0;
  }

 private:
  const Substream* stream_;
  std::uint32_t position_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace radmode

#endif  // RADMODE_RNG_HPP
