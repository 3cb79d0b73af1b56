#include "trustbayes/rng.hpp"

#include <cmath>
#include <numbers>

namespace trustbayes {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kIdMix = 0xD1B54A32D192ED03ULL;
}  // namespace

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

RandomStream::RandomStream(std::uint64_t seed, StreamNamespace ns, std::uint64_t id) noexcept
    : key_(splitmix64(splitmix64(seed ^ (static_cast<std::uint64_t>(ns) * kGolden)) ^ (id * kIdMix))) {}

std::uint64_t RandomStream::next_u64() noexcept {
  const std::uint64_t c = counter_++;
  return splitmix64(key_ ^ splitmix64(c));
}

double RandomStream::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::normal(double mean, double stddev) noexcept {
  // u1 in (0, 1] keeps the log finite.
  const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * radius * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace trustbayes
