#pragma once

#include <cstdint>
#include <limits>

namespace trustbayes {

// Seed namespaces keep training, testing and diagnostic streams disjoint.
enum class StreamNamespace : std::uint64_t {
  kMetaTrain = 1,
  kTest = 2,
  kFixture = 3,
  kCoverage = 4,
  kAuxiliary = 5,
};

/// Counter-based random stream keyed by (seed, namespace, id).
///
/// The n-th draw is a pure function of the key and n, so a stream can be
/// recreated anywhere (any thread, any order) and yields the same values.
/// Satisfies UniformRandomBitGenerator so it can feed <random> distributions.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream(std::uint64_t seed, StreamNamespace ns, std::uint64_t id) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return next_u64(); }

  std::uint64_t next_u64() noexcept;
  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  // Box-Muller, two uniforms per call, no cached second value.
  double normal(double mean = 0.0, double stddev = 1.0) noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace trustbayes
