#ifndef RADMODE_PARALLEL_HPP
#define RADMODE_PARALLEL_HPP

#include <algorithm>
#include <cstdint>
#include <exception>
#include <span>
#include <thread>
#include <vector>

namespace radmode {

/// Worker count for Monte Carlo loops; 0 selects the hardware concurrency.
/// Results never depend on this value.
struct Parallelism {
  unsigned workers = 0;

  unsigned resolve(std::uint64_t work_items) const {
    unsigned w = workers != 0 ? workers : std::max(1u, std::thread::hardware_concurrency());
    if (work_items < w) w = static_cast<unsigned>(std::max<std::uint64_t>(1, work_items));
    return w;
  }
};

/// Runs body(sample_index, counters) for every index in [0, count), splitting
/// the range into contiguous chunks over workers, and returns the elementwise
/// sum of the per-worker counter arrays. Integer sums make the result
/// independent of the split. If any call throws, the exception raised at the
/// lowest sample index is rethrown.
template <class Body>
std::vector<std::uint64_t> parallel_count(std::uint64_t count, std::size_t slots,
                                          Parallelism par, Body&& body) {
  const unsigned workers = par.resolve(count);
  std::vector<std::vector<std::uint64_t>> partial(workers, std::vector<std::uint64_t>(slots, 0));
  std::vector<std::exception_ptr> errors(workers);

  auto run_chunk = [&](unsigned w) {
    const std::uint64_t begin = count * w / workers;
    const std::uint64_t end = count * (w + 1) / workers;
    std::span<std::uint64_t> counters(partial[w]);
    try {
      for (std::uint64_t i = begin; i < end; ++i) body(i, counters);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };

  if (workers == 1) {
    run_chunk(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run_chunk, w);
    for (auto& t : pool) t.join();
  }

  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<std::uint64_t> total(slots, 0);
  for (const auto& p : partial)
    for (std::size_t s = 0; s < slots; ++s) total[s] += p[s];
  return total;
}

}  // namespace radmode

#endif  // RADMODE_PARALLEL_HPP
