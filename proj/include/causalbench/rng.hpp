#pragma once

// Deterministic random primitives. All randomness in the library flows
// through Rng so that results are bit-reproducible across platforms and
// standard-library versions (std:: distributions are implementation
// defined; these transforms are not).

#include <cmath>
#include <cstdint>
#include <vector>

namespace causalbench {

// SplitMix64 step (Steele, Lea & Flood). Doubles as the avalanche used
// for seed mixing.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Mixes (master, a, b) into one stream seed. Offsets keep (0,0) from
// collapsing onto the master stream. The experiment harness derives every
// per-instance stream with this function, so the mapping is part of the
// reproducibility contract: seed = mix(mix(master ^ sm(a'), ...) below.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t a,
                              std::uint64_t b) {
  std::uint64_t t = a + 0x9e3779b97f4a7c15ULL;
  std::uint64_t s = master ^ splitmix64_next(t);
  t = b + 0x517cc1b727220a95ULL;
  s ^= splitmix64_next(t);
  return splitmix64_next(s);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64_next(state_); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller; the second variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    spare_ = r * std::sin(kTwoPi * u2);
    has_spare_ = true;
    return r * std::cos(kTwoPi * u2);
  }

  // Uniform integer in [0, n), rejection sampled so there is no modulo bias.
  std::uint64_t below(std::uint64_t n) {
    std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {  // Fisher-Yates
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace causalbench
