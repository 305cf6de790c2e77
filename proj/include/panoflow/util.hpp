#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace panoflow {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a master seed and a stream index.
inline uint64_t derive_seed(uint64_t master, uint64_t stream) {
  return splitmix64(master ^ splitmix64(stream + 0x51ed2701a2b3c4d5ULL));
}

/// Stateless hash of integer coordinates to [0, 1). Thread-schedule independent.
inline double hash01(uint64_t seed, int64_t a, int64_t b = 0, int64_t c = 0) {
  uint64_t h = splitmix64(seed ^ splitmix64(static_cast<uint64_t>(a) * 0x9e3779b97f4a7c15ULL ^
                                            splitmix64(static_cast<uint64_t>(b)) ^
                                            splitmix64(static_cast<uint64_t>(c) * 0xc2b2ae3d27d4eb4fULL)));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Standard normal deviate from hashed coordinates (Box-Muller).
inline double hash_gauss(uint64_t seed, int64_t a, int64_t b = 0, int64_t c = 0) {
  const double u1 = std::max(hash01(seed, a, b, c * 2), 1e-300);
  const double u2 = hash01(seed, a, b, c * 2 + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

/// Compensated (Kahan) accumulator; deterministic given accumulation order.
struct KahanSum {
  double sum = 0.0, carry = 0.0;
  void add(double v) {
    const double y = v - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  double value() const { return sum; }
};

inline double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

inline float clamp01(float v) { return std::clamp(v, 0.0f, 1.0f); }

inline int64_t posmod(int64_t a, int64_t n) {
  const int64_t r = a % n;
  return r < 0 ? r + n : r;
}

}  // namespace panoflow
