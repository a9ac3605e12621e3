#include <doctest.h>

#include <numeric>

#include <Eigen/Eigenvalues>

#include "abddc/scaling.hpp"
#include "fixtures.hpp"

using namespace abddc;

TEST_CASE("deluxe scaling of equal blocks is one half each") {
  std::mt19937_64 gen(31);
  const Matrix b = fixtures::random_spd(3, gen);
  const std::vector<Matrix> blocks{b, b};
  const auto d = deluxe_scaling(blocks);
  REQUIRE(d.size() == 2);
  for (const Matrix& dk : d) CHECK((dk - 0.5 * Matrix::Identity(3, 3)).norm() < 1e-14);
}

TEST_CASE("scalar deluxe weights") {
  const std::vector<Matrix> blocks{Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 3.0)};
  const auto d = deluxe_scaling(blocks);
  CHECK(d[0](0, 0) == doctest::Approx(0.25));
  CHECK(d[1](0, 0) == doctest::Approx(0.75));
}

TEST_CASE("deluxe scaling of random blocks sums to the identity") {
  std::mt19937_64 gen(32);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<Matrix> blocks;
    for (int k = 0; k < 3; ++k) blocks.push_back(fixtures::random_spd(3, gen));
    const auto d = deluxe_scaling(blocks);
    Matrix sum = Matrix::Zero(3, 3);
    for (const Matrix& dk : d) sum += dk;
    CHECK((sum - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-12);

    // Oracle: (sum B)^-1 B_k computed independently.
    Matrix total = Matrix::Zero(3, 3);
    for (const Matrix& b : blocks) total += b;
    for (int k = 0; k < 3; ++k) {
      const Matrix expected = total.inverse() * blocks[k];
      CHECK((d[k] - expected).norm() <= 1e-10 * expected.norm());
    }

    // Symmetrized form S^-1/2 B_k S^-1/2 of each weight is positive semidefinite.
    Eigen::SelfAdjointEigenSolver<Matrix> es(total);
    const Matrix half = es.operatorSqrt();
    for (int k = 0; k < 3; ++k) {
      const Matrix similar = half * d[k] * half.inverse();
      CHECK(fixtures::min_eigenvalue(similar) >= -1e-10);
    }
  }
}

TEST_CASE("deluxe scaling rejects a singular sum") {
  const std::vector<Matrix> blocks{Matrix::Zero(2, 2), Matrix::Zero(2, 2)};
  CHECK_THROWS(deluxe_scaling(blocks));
}

TEST_CASE("vertex scaling is uniform") {
  const auto eight = vertex_scaling(8);
  REQUIRE(eight.size() == 8);
  for (double w : eight) CHECK(w == 0.125);
  CHECK(std::accumulate(eight.begin(), eight.end(), 0.0) == 1.0);
  CHECK(vertex_scaling(1) == std::vector<double>{1.0});
}

TEST_CASE("problem scaling is a partition of unity on every glob") {
  const Problem& p = fixtures::small_problem();
  CHECK(partition_of_unity_error(p.scaling, p.globs) <= 1e-10);
  for (const Glob& g : p.globs.globs) {
    Matrix sum = Matrix::Zero(g.size(), g.size());
    for (int sd : g.sharers) {
      const Matrix& d = p.scaling.of(g, sd);
      CHECK(d.allFinite());
      sum += d;
    }
    CHECK((sum - Matrix::Identity(g.size(), g.size())).cwiseAbs().maxCoeff() <= 1e-10);
  }
}
