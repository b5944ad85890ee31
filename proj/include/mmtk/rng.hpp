#pragma once

#include <cstdint>

namespace mmtk {

// Counter-based generator built on the splitmix64 finalizer. Every draw is
// mix(state + k * GOLDEN) for an incrementing counter k, so the stream depends
// only on (seed, call index) and is identical on every platform. split()
// derives an independent child stream; children with distinct ids never
// collide with the parent stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix(seed ^ kSeedTag)) {}

  std::uint64_t next_u64() {
    counter_ += kGolden;
    return mix(state_ + counter_);
  }

  // 53-bit uniform in [0, 1)
  double next_u01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_u01(); }

  // inclusive bounds
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  // standard normal, Box-Muller with one cached value
  double normal();

  bool bernoulli(double p) { return next_u01() < p; }

  Rng split(std::uint64_t stream_id) const {
    return Rng(mix(state_ ^ mix(stream_id + kSeedTag)));
  }

  static std::uint64_t mix(std::uint64_t z);

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;
  static constexpr std::uint64_t kSeedTag = 0x6d6d746b00000001ull;

  std::uint64_t state_ = 0;
  std::uint64_t counter_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace mmtk
