#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace crackdet {

// xoshiro256++ seeded through splitmix64. Hand-rolled so that a given seed
// produces the same stream on every platform and standard library; the
// reproducibility contracts (augmentation, splits, init) depend on that.
class Rng {
 public:
  explicit Rng(uint64_t seed) { reseed(seed); }

  void reseed(uint64_t seed);

  uint64_t next_u64();

  // Uniform in [0, 1) with 53 bits of mantissa.
  double uniform();
  // Uniform in [lo, hi).
  double uniform(double lo, double hi);
  float uniform_f(float lo, float hi) { return static_cast<float>(uniform(lo, hi)); }

  // Uniform integer in [0, n); n > 0.
  uint64_t uniform_int(uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller (no cached spare; stream position stays
  // a pure function of draw count).
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Derive an independent substream for (tag, index); used to make
  // per-sample augmentation draws order-independent.
  Rng fork(std::string_view tag, uint64_t index = 0) const;

  uint64_t seed() const { return seed_; }

 private:
  uint64_t seed_ = 0;
  uint64_t s_[4] = {};
};

// FNV-1a, used for config digests and RNG stream derivation.
uint64_t fnv1a64(std::string_view bytes, uint64_t basis = 0xcbf29ce484222325ull);

}  // namespace crackdet
