#pragma once

#include <array>
#include <cstdint>
#include <random>

namespace rtwin {

// splitmix64 step; used for seed derivation only.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stable combination of a base seed with stream identifiers (indices,
// hashed names, ...). Same inputs always give the same derived seed.
inline std::uint64_t derive_seed(std::uint64_t base) { return splitmix64(base); }

template <class... Rest>
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t part, Rest... rest) {
  std::uint64_t s = base ^ (part + 0x9e3779b97f4a7c15ULL);
  return derive_seed(splitmix64(s), rest...);
}

// FNV-1a, for mixing string identifiers into seeds.
inline std::uint64_t hash_str(const char* s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (; *s; ++s) h = (h ^ static_cast<unsigned char>(*s)) * 0x100000001b3ULL;
  return h;
}

// mt19937_64 with portable uniform extraction. The standard pins the
// mt19937_64 sequence, so streams are reproducible across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() { return (gen_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  // Bin(3, p) as three explicit trials; the observed DGM and the
  // counterfactual couplings share this trial-level representation.
  int binomial3(double p) {
    int k = 0;
    for (int t = 0; t < 3; ++t) k += bernoulli(p) ? 1 : 0;
    return k;
  }

  // Bin(3, .) for two success probabilities driven by the same trial-level
  // noise (comonotone coupling of counterfactual arms).
  std::array<int, 2> binomial3_coupled(double p0, double p1) {
    int k0 = 0, k1 = 0;
    for (int t = 0; t < 3; ++t) {
      const double u = uniform();
      k0 += u < p0 ? 1 : 0;
      k1 += u < p1 ? 1 : 0;
    }
    return {k0, k1};
  }

  // Beta(2,3) as the 2nd order statistic of four uniforms.
  double beta23() {
    double u[4] = {uniform(), uniform(), uniform(), uniform()};
    double lo = u[0] < u[1] ? u[0] : u[1];
    double hi = u[0] < u[1] ? u[1] : u[0];
    double second = hi;
    for (int i = 2; i < 4; ++i) {
      if (u[i] < lo) {
        second = lo;
        lo = u[i];
      } else if (u[i] < second) {
        second = u[i];
      }
    }
    return second;
  }

  std::uint64_t next_raw() { return gen_(); }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace rtwin
