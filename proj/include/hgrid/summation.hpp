#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace hgrid {

/// Neumaier-compensated running sum. Merging two sums is order-sensitive only
/// at the level of the final rounding, which is why reductions below always
/// merge partial sums in a fixed block order.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }

  void merge(const CompensatedSum& other) {
    add(other.sum_);
    add(other.comp_);
  }

  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct ParallelOptions {
  unsigned threads = 1;
  std::uint64_t block_size = 4096;
};

/// Splits [0, count) into fixed-size blocks, evaluates `work(begin, end)` for
/// each block on up to `opts.threads` workers and returns the per-block
/// results in block order. The partition depends only on `count` and
/// `block_size`, so any in-order fold of the result is independent of the
/// number of workers.
template <class R, class Work>
std::vector<R> run_blocks(std::uint64_t count, const ParallelOptions& opts, Work&& work) {
  const std::uint64_t bs = std::max<std::uint64_t>(1, opts.block_size);
  const std::uint64_t nblocks = (count + bs - 1) / bs;
  // optional slots so R only needs to be move-constructible
  std::vector<std::optional<R>> slots(nblocks);
  auto collect = [&] {
    std::vector<R> results;
    results.reserve(nblocks);
    for (auto& s : slots) results.push_back(std::move(*s));
    return results;
  };
  if (nblocks == 0) return collect();

  const unsigned workers =
      static_cast<unsigned>(std::min<std::uint64_t>(std::max(1u, opts.threads), nblocks));
  if (workers == 1) {
    for (std::uint64_t b = 0; b < nblocks; ++b) {
      slots[b].emplace(work(b * bs, std::min(count, (b + 1) * bs)));
    }
    return collect();
  }

  std::atomic<std::uint64_t> next{0};
  std::exception_ptr error;
  std::uint64_t error_block = nblocks;
  std::mutex error_mutex;
  auto loop = [&] {
    for (;;) {
      const std::uint64_t b = next.fetch_add(1);
      if (b >= nblocks) return;
      try {
        slots[b].emplace(work(b * bs, std::min(count, (b + 1) * bs)));
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        // keep the error of the lowest block so failures are reproducible
        if (b < error_block) {
          error_block = b;
          error = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(loop);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
  return collect();
}

}  // namespace hgrid
