#pragma once

#include <random>

#include "abddc/harness.hpp"

namespace fixtures {

inline abddc::Matrix random_matrix(int rows, int cols, std::mt19937_64& gen) {
  std::normal_distribution<double> normal;
  abddc::Matrix m(rows, cols);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) m(r, c) = normal(gen);
  }
  return m;
}

inline abddc::Vector random_vector(int n, std::mt19937_64& gen) {
  return random_matrix(n, 1, gen).col(0);
}

inline abddc::Matrix random_spd(int n, std::mt19937_64& gen) {
  const abddc::Matrix g = random_matrix(n, n, gen);
  return g * g.transpose() + 0.5 * abddc::Matrix::Identity(n, n);
}

inline abddc::Matrix random_psd(int n, int rank, std::mt19937_64& gen) {
  const abddc::Matrix g = random_matrix(n, rank, gen);
  return g * g.transpose();
}

inline double min_eigenvalue(const abddc::Matrix& m) {
  Eigen::SelfAdjointEigenSolver<abddc::Matrix> es(0.5 * (m + m.transpose()),
                                                   Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

// Example 1 with the Test-1 viscosity split on a 2x2x2 partition.
inline abddc::ProblemSpec test_spec(int m, int test = 1, double nu1 = 1e-1, double nu2 = 1e-5) {
  abddc::ProblemSpec s;
  s.label = "fixture";
  s.cells_per_subdomain = m;
  s.viscosity.kind = abddc::ViscosityKind::subdomain_test;
  s.viscosity.test = test;
  s.viscosity.nu1 = nu1;
  s.viscosity.nu2 = nu2;
  return s;
}

// Shared small problem: m = 3 keeps every check under a second.
inline const abddc::Problem& small_problem() {
  static const abddc::Problem p = abddc::build_problem(test_spec(3));
  return p;
}

}  // namespace fixtures
