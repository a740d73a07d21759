#pragma once

// Deterministic random number generation. All simulation draws go through Rng
// so that a (seed, replicate) pair maps to the same sample sequence regardless
// of thread schedule. std::mt19937_64 has a fully specified output sequence;
// the distribution transforms are implemented here because the std::
// distribution classes are not bit-portable across standard libraries.

#include <cstdint>
#include <cmath>
#include <random>

namespace mest {

// SplitMix64 finalizer: the fixed 64-bit mix used for substream derivation.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Substream seed for one replicate: seed XOR hash(replicate_index).
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t replicate_index) {
  return seed ^ splitmix64(replicate_index);
}

// Derives an independent stream seed for a tagged purpose (design draw,
// error draw, ...) within one substream.
inline std::uint64_t tagged_seed(std::uint64_t substream, std::uint64_t tag) {
  return splitmix64(substream ^ splitmix64(tag));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0,1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Standard normal via the Marsaglia polar method (log/sqrt only, no trig).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return u * m;
  }

  // Chi-square with integer degrees of freedom as a sum of squared normals.
  double chi_square(int dof) {
    double s = 0.0;
    for (int i = 0; i < dof; ++i) {
      const double z = normal();
      s += z * z;
    }
    return s;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace mest
