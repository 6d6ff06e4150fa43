#ifndef RADMODE_ERRORS_HPP
#define RADMODE_ERRORS_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace radmode {

/// Raised when an argument violates an operation's documented precondition.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Rejection sampling for a conditioned path law ran out of tries.
class RejectionFailure : public std::runtime_error {
 public:
  RejectionFailure(std::uint64_t tries, std::uint64_t accepted)
      : std::runtime_error("rejection sampling exceeded max_tries (" +
                           std::to_string(tries) + " tries, " +
                           std::to_string(accepted) + " accepted)"),
        tries_(tries),
        accepted_(accepted) {}

  std::uint64_t tries() const noexcept { return tries_; }
  std::uint64_t accepted() const noexcept { return accepted_; }
  double acceptance_rate() const noexcept {
    return tries_ == 0 ? 0.0 : static_cast<double>(accepted_) / static_cast<double>(tries_);
  }

 private:
  std::uint64_t tries_;
  std::uint64_t accepted_;
};

namespace detail {

inline void require(bool cond, const char* what) {
  if (!cond) throw PreconditionError(what);
}

}  // namespace detail
}  // namespace radmode

#endif  // RADMODE_ERRORS_HPP
