#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

namespace psmm {

/// splitmix64 mix of two words; derives independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

using Rng = std::mt19937_64;

inline Eigen::VectorXd standard_normal_vector(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

inline Eigen::VectorXd random_unit_vector(Eigen::Index n, Rng& rng) {
  Eigen::VectorXd v = standard_normal_vector(n, rng);
  while (v.norm() == 0.0) v = standard_normal_vector(n, rng);
  return v.normalized();
}

}  // namespace psmm
