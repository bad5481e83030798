#pragma once

// Counter-based random streams and the chunked reduction used by every
// sampling routine. A stream is fully determined by (seed, counter), so a
// sample's randomness depends only on its index and never on thread layout.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <thread>
#include <vector>

#include "prodent/error.hpp"

namespace prodent {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for sub-stream `stream` of `seed`.
inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) noexcept : key_(splitmix64(seed)) {}

  std::uint64_t next_u64() noexcept { return splitmix64(key_ ^ splitmix64(counter_++)); }

  /// Uniform on [0, 1) with 53 bits.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  std::size_t below(std::size_t n) noexcept {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Index drawn from an unnormalized nonnegative weight vector.
  std::size_t categorical(std::span<const double> weights) noexcept {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = uniform() * total;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] <= 0.0) continue;
      last_positive = i;
      if (u < weights[i]) return i;
      u -= weights[i];
    }
    return last_positive;
  }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Number of samples per reduction chunk. Fixed so the merge order, and
/// therefore every floating-point sum, is independent of the thread count.
inline constexpr std::size_t kChunkSize = 1024;

/// Splits [0, n) into fixed chunks, evaluates `chunk_fn(begin, end)` for each
/// (possibly on several threads) and merges the partial results in chunk order
/// with `Acc::merge`.
template <class Acc, class ChunkFn>
Acc chunked_reduce(std::size_t n, unsigned threads, ChunkFn chunk_fn, std::size_t chunk = kChunkSize) {
  const std::size_t n_chunks = (n + chunk - 1) / chunk;
  std::vector<Acc> partial(n_chunks);
  auto work = [&](std::size_t first_chunk, std::size_t stride) {
    for (std::size_t c = first_chunk; c < n_chunks; c += stride) {
      const std::size_t begin = c * chunk;
      partial[c] = chunk_fn(begin, std::min(n, begin + chunk));
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n_chunks, 1))));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
    for (auto& th : pool) th.join();
  }
  Acc total{};
  for (auto& p : partial) total.merge(p);
  return total;
}

/// Running mean and centred second moment (Chan et al. pairwise update), so
/// constant inputs give exactly zero variance.
struct MomentAcc {
  double mean_ = 0.0;
  double m2 = 0.0;
  std::size_t count = 0;

  void add(double x) noexcept {
    ++count;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(count);
    m2 += delta * (x - mean_);
  }
  void merge(const MomentAcc& o) noexcept {
    if (o.count == 0) return;
    if (count == 0) {
      *this = o;
      return;
    }
    const double n_a = static_cast<double>(count);
    const double n_b = static_cast<double>(o.count);
    const double n = n_a + n_b;
    const double delta = o.mean_ - mean_;
    mean_ = (delta == 0.0) ? mean_ : mean_ + delta * n_b / n;
    m2 += o.m2 + delta * delta * n_a * n_b / n;
    count += o.count;
  }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept {
    return count < 2 ? 0.0 : std::max(0.0, m2 / static_cast<double>(count - 1));
  }
  double stderr_of_mean() const noexcept {
    return count ? std::sqrt(variance() / static_cast<double>(count)) : 0.0;
  }
};

}  // namespace prodent
