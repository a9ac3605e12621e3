#include "abddc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace abddc {

namespace {

Eigen::SelfAdjointEigenSolver<Matrix> symmetric_eigen(const Matrix& m) {
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("symmetric eigensolver did not converge");
  }
  return es;
}

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument(std::string(what) + ": matrix is not square");
  }
}

}  // namespace

bool all_finite(const Matrix& m) { return m.allFinite(); }

bool is_symmetric(const Matrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = m.cwiseAbs().maxCoeff();
  if (m.size() == 0 || scale == 0.0) return true;
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

int EigenPairList::count_at_least(double threshold) const {
  int n = 0;
  for (int k = 0; k < size(); ++k) {
    if (!degenerate[k] && values[k] >= threshold) ++n;
  }
  return n;
}

Matrix pseudo_inverse(const Matrix& m, double rel_tol) {
  require_square(m, "pseudo_inverse");
  if (!all_finite(m)) {
    throw std::invalid_argument("pseudo_inverse: non-finite entries");
  }
  if (m.size() == 0) return m;
  const auto es = symmetric_eigen(m);
  const Vector& lambda = es.eigenvalues();
  const double cutoff = rel_tol * lambda.cwiseAbs().maxCoeff();
  Vector inv = Vector::Zero(lambda.size());
  for (Eigen::Index k = 0; k < lambda.size(); ++k) {
    if (std::abs(lambda[k]) > cutoff) inv[k] = 1.0 / lambda[k];
  }
  const Matrix& u = es.eigenvectors();
  return u * inv.asDiagonal() * u.transpose();
}

Matrix parallel_sum(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("parallel_sum: dimension mismatch");
  }
  require_square(a, "parallel_sum");
  const Matrix r = a * pseudo_inverse(a + b) * b;
  return 0.5 * (r + r.transpose());
}

Matrix parallel_sum(std::span<const Matrix> blocks) {
  if (blocks.empty()) {
    throw std::invalid_argument("parallel_sum: empty block list");
  }
  Matrix acc = blocks.front();
  for (std::size_t k = 1; k < blocks.size(); ++k) {
    acc = parallel_sum(acc, blocks[k]);
  }
  return acc;
}

EigenPairList sym_pencil_gevp(const Matrix& b, const Matrix& btil,
                              double rel_tol) {
  require_square(b, "sym_pencil_gevp");
  require_square(btil, "sym_pencil_gevp");
  if (b.rows() != btil.rows()) {
    throw std::invalid_argument("sym_pencil_gevp: dimension mismatch");
  }
  if (!is_symmetric(b, 1e-10) || !is_symmetric(btil, 1e-10)) {
    throw std::invalid_argument("sym_pencil_gevp: asymmetric input");
  }
  const Eigen::Index n = b.rows();
  EigenPairList out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  out.degenerate.assign(static_cast<std::size_t>(n), false);
  if (n == 0) return out;

  const Matrix bs = 0.5 * (b + b.transpose());
  const auto tes = symmetric_eigen(btil);
  const Vector& tl = tes.eigenvalues();
  const double tscale = tl.cwiseAbs().maxCoeff();

  std::vector<int> range_idx, null_idx;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (tscale > 0.0 && tl[k] > rel_tol * tscale) {
      range_idx.push_back(static_cast<int>(k));
    } else {
      null_idx.push_back(static_cast<int>(k));
    }
  }
  const Eigen::Index nr = static_cast<Eigen::Index>(range_idx.size());
  const Eigen::Index n0 = static_cast<Eigen::Index>(null_idx.size());
  Matrix ur(n, nr), u0(n, n0);
  Vector lr(nr);
  for (Eigen::Index k = 0; k < nr; ++k) {
    ur.col(k) = tes.eigenvectors().col(range_idx[k]);
    lr[k] = tl[range_idx[k]];
  }
  for (Eigen::Index k = 0; k < n0; ++k) {
    u0.col(k) = tes.eigenvectors().col(null_idx[k]);
  }

  struct Pair {
    double value;
    bool degenerate;
    Vector vec;
  };
  std::vector<Pair> pairs;
  pairs.reserve(static_cast<std::size_t>(n));

  const double bnorm = bs.norm();
  const double energy_cut = std::max(rel_tol, 1e-10) * bnorm;

  // Nullspace of Btil: B-positive directions are infinite eigenvalues, the
  // common nullspace is degenerate.
  Matrix b00_pinv = Matrix::Zero(n0, n0);
  if (n0 > 0) {
    const Matrix b00 = u0.transpose() * bs * u0;
    const auto nes = symmetric_eigen(b00);
    Vector inv = Vector::Zero(n0);
    for (Eigen::Index k = 0; k < n0; ++k) {
      const double theta = nes.eigenvalues()[k];
      Vector v = u0 * nes.eigenvectors().col(k);
      if (std::abs(theta) > energy_cut) {
        inv[k] = 1.0 / theta;
        pairs.push_back({kInfinity, false, v / std::sqrt(std::abs(theta))});
      } else {
        pairs.push_back({0.0, true, v.normalized()});
      }
    }
    b00_pinv = nes.eigenvectors() * inv.asDiagonal() *
               nes.eigenvectors().transpose();
  }

  if (nr > 0) {
    Matrix k = ur.transpose() * bs * ur;
    Matrix z_map = Matrix::Zero(n0, nr);
    if (n0 > 0) {
      const Matrix b0r = u0.transpose() * bs * ur;
      z_map = -b00_pinv * b0r;
      k += b0r.transpose() * z_map;
    }
    const Vector isq = lr.cwiseSqrt().cwiseInverse();
    const Matrix c = isq.asDiagonal() * k * isq.asDiagonal();
    const auto ces = symmetric_eigen(c);
    const Vector& mu = ces.eigenvalues();
    const double mu_scale = mu.cwiseAbs().maxCoeff();
    for (Eigen::Index j = 0; j < nr; ++j) {
      const Vector x = isq.asDiagonal() * ces.eigenvectors().col(j);
      Vector v = ur * x;
      if (n0 > 0) v += u0 * (z_map * x);
      const double m = mu[j];
      if (mu_scale > 0.0 && std::abs(m) > rel_tol * mu_scale) {
        pairs.push_back({m, false, v / std::sqrt(std::abs(m))});
      } else {
        pairs.push_back({m, true, v.normalized()});
      }
    }
  }

  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const Pair& l, const Pair& r) { return l.value > r.value; });
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values[k] = pairs[k].value;
    out.vectors.col(k) = pairs[k].vec;
    out.degenerate[k] = pairs[k].degenerate;
  }
  return out;
}

Matrix principal_block(const Matrix& m, std::span<const int> idx) {
  return sub_block(m, idx, idx);
}

Matrix sub_block(const Matrix& m, std::span<const int> rows,
                 std::span<const int> cols) {
  Matrix out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out(i, j) = m(rows[i], cols[j]);
    }
  }
  return out;
}

Matrix schur_complement(const Matrix& m, std::span<const int> keep) {
  require_square(m, "schur_complement");
  std::vector<char> kept(static_cast<std::size_t>(m.rows()), 0);
  for (int k : keep) kept[static_cast<std::size_t>(k)] = 1;
  std::vector<int> elim;
  for (int k = 0; k < m.rows(); ++k) {
    if (!kept[static_cast<std::size_t>(k)]) elim.push_back(k);
  }
  const Matrix mkk = principal_block(m, keep);
  if (elim.empty()) return mkk;
  const Matrix mcc = principal_block(m, elim);
  const Matrix mkc = sub_block(m, keep, elim);
  Eigen::LLT<Matrix> llt(0.5 * (mcc + mcc.transpose()));
  if (llt.info() != Eigen::Success) {
    const auto es = symmetric_eigen(mcc);
    std::ostringstream os;
    os << "schur_complement: eliminated block is not positive definite "
       << "(eigenvalue range " << es.eigenvalues().minCoeff() << " .. "
       << es.eigenvalues().maxCoeff() << ")";
    throw std::runtime_error(os.str());
  }
  const Matrix r = mkk - mkc * llt.solve(mkc.transpose());
  return 0.5 * (r + r.transpose());
}

Matrix row_space_basis(const Matrix& rows, double rel_tol) {
  if (rows.rows() == 0 || rows.cols() == 0) {
    return Matrix(rows.cols(), 0);
  }
  Eigen::JacobiSVD<Matrix> svd(rows, Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  const double smax = s.size() > 0 ? s[0] : 0.0;
  Eigen::Index rank = 0;
  while (rank < s.size() && smax > 0.0 && s[rank] >= rel_tol * smax) ++rank;
  return svd.matrixV().leftCols(rank);
}

Matrix orthonormal_completion(const Matrix& q) {
  const Eigen::Index n = q.rows();
  const Eigen::Index k = q.cols();
  if (k == 0) return Matrix::Identity(n, n);
  Eigen::HouseholderQR<Matrix> qr(q);
  Matrix full = qr.householderQ() * Matrix::Identity(n, n);
  full.leftCols(k) = q;
  return full;
}

}  // namespace abddc
