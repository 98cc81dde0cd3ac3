#pragma once

#include <cstdint>

namespace gwit {

// Counter-based splittable PRNG. Output i of stream (seed) is
// finalize(seed + (i+1) * GOLDEN) with the splitmix64 finalizer, so any
// element is addressable without sequencing and substreams are independent
// by construction. Algorithm id recorded in outputs: "splitmix64-ctr-v1".
class Prng {
 public:
  static constexpr const char* kAlgorithmId = "splitmix64-ctr-v1";

  explicit Prng(std::uint64_t seed) : seed_(seed) {}

  // Child stream k; decorrelated from the parent and from siblings.
  Prng split(std::uint64_t k) const {
    return Prng(finalize(seed_ ^ finalize(k + 0xd6e8feb86659fd93ULL)));
  }

  std::uint64_t next_u64() { return finalize(seed_ + (++ctr_) * kGolden); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  static std::uint64_t finalize(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t seed_;
  std::uint64_t ctr_ = 0;
};

}  // namespace gwit
