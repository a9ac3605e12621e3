#pragma once

#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace abddc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Eigenpairs of a symmetric pencil, sorted by non-increasing eigenvalue.
///
/// Directions lying in the nullspace of the right-hand matrix but not of the
/// left-hand one carry +infinity and come first. Columns flagged `degenerate`
/// have (B v)^T v = 0; they are Euclidean-normalized and never selected as
/// primal directions.
struct EigenPairList {
  Vector values;
  Matrix vectors;
  std::vector<bool> degenerate;

  [[nodiscard]] int size() const { return static_cast<int>(values.size()); }
  /// Number of leading non-degenerate eigenvalues >= threshold (ties count).
  [[nodiscard]] int count_at_least(double threshold) const;
};

/// Moore-Penrose pseudo-inverse of a symmetric matrix via its spectral
/// decomposition. Eigenvalues with |lambda| < rel_tol * max|lambda| are
/// treated as zero.
Matrix pseudo_inverse(const Matrix& m, double rel_tol = 1e-12);

/// Parallel sum A:B = A (A+B)^+ B, symmetrized.
Matrix parallel_sum(const Matrix& a, const Matrix& b);

/// Left-associative parallel sum over a list of blocks.
Matrix parallel_sum(std::span<const Matrix> blocks);

/// Solves B v = lambda Btil v for symmetric B and symmetric PSD Btil.
///
/// Btil is diagonalized and its nullspace deflated; the finite part of the
/// spectrum comes from a reduced ordinary eigenproblem. Eigenvectors are
/// Btil-orthogonal and scaled so that (B v_l)^T v_m = delta_lm wherever the
/// B-energy of v is nonzero.
EigenPairList sym_pencil_gevp(const Matrix& b, const Matrix& btil,
                              double rel_tol = 1e-12);

/// Principal submatrix m(idx, idx).
Matrix principal_block(const Matrix& m, std::span<const int> idx);

/// Submatrix m(rows, cols).
Matrix sub_block(const Matrix& m, std::span<const int> rows,
                 std::span<const int> cols);

/// Schur complement of a symmetric matrix keeping the indices in `keep` and
/// eliminating the rest by dense Cholesky. Throws std::runtime_error with a
/// condition estimate if the eliminated block is not positive definite.
Matrix schur_complement(const Matrix& m, std::span<const int> keep);

/// Orthonormal basis of the row space of `rows` (one basis vector per column),
/// using an SVD with relative cutoff.
Matrix row_space_basis(const Matrix& rows, double rel_tol = 1e-10);

/// Completes orthonormal columns q (n x k) to an n x n orthogonal matrix whose
/// first k columns are q.
Matrix orthonormal_completion(const Matrix& q);

[[nodiscard]] bool is_symmetric(const Matrix& m, double rel_tol);
[[nodiscard]] bool all_finite(const Matrix& m);

}  // namespace abddc
