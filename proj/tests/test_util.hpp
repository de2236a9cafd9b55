#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

// Shared helpers for the test suites: deterministic random draws and small
// self-contained oracles that are independent of the library implementation.

namespace testutil {

inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {  // inclusive
  return lo + static_cast<int>(rng() % static_cast<uint64_t>(hi - lo + 1));
}

inline double gaussian(std::mt19937_64& rng) {
  // Box-Muller; deterministic given the stream.
  double u1 = std::max(1e-300, uniform01(rng));
  double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, int n, double lo, double hi) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = uniform(rng, lo, hi);
  return v;
}

// Random probability vector (uniform on the simplex via exponential spacings).
inline Eigen::VectorXd random_simplex(std::mt19937_64& rng, int d) {
  Eigen::VectorXd v(d);
  double total = 0.0;
  for (int i = 0; i < d; ++i) {
    v[i] = -std::log(std::max(1e-300, uniform01(rng)));
    total += v[i];
  }
  return v / total;
}

}  // namespace testutil
