#pragma once

#include <cstdint>
#include <cmath>
#include <vector>

namespace bflow {

// xoshiro256++ with splitmix64 seeding. Sequences are pinned by this header,
// not by the standard library, so identical seeds give identical bytes on
// every build.
class Rng {
 public:
  Rng() : Rng(0x853c49e6748fea9bULL, 0) {}

  Rng(std::uint64_t master_seed, std::uint64_t stream) {
    std::uint64_t x = master_seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
    for (auto& s : state_) s = splitmix64(x);
    // all-zero state is invalid for xoshiro
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[3] = 1;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform on [0, 1).
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_pos() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

  /// Exponential with the given rate (mean 1/rate).
  double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

 private:
  static std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

  std::uint64_t state_[4];
};

/// Stable sub-seed derivation for tagged experiment stages (per-k runs etc.).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag) {
  std::uint64_t z = master ^ (0x9e3779b97f4a7c15ULL * (tag + 0x2545f4914f6cdd1dULL));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Sampler for a finite law on {0,1,...} given by a cumulative table.
class DiscreteCdf {
 public:
  DiscreteCdf() = default;

  explicit DiscreteCdf(const std::vector<double>& probs) {
    cum_.resize(probs.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      cum_[i] = acc;
    }
    if (!cum_.empty()) cum_.back() = acc;  // sample() clamps at the top atom
  }

  std::int64_t sample(Rng& rng) const {
    const double u = rng.uniform01() * cum_.back();
    std::size_t lo = 0, hi = cum_.size() - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (cum_[mid] > u) hi = mid; else lo = mid + 1;
    }
    return static_cast<std::int64_t>(lo);
  }

  double total() const { return cum_.empty() ? 0.0 : cum_.back(); }
  bool empty() const { return cum_.empty(); }

 private:
  std::vector<double> cum_;
};

}  // namespace bflow
