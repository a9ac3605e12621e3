#include "abddc/substructuring.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace abddc {

Vector SubdomainOperator::solve_interior(const Vector& x) const {
  if (num_interior() == 0) return Vector(0);
  return interior_lu->solve(x);
}

Vector SubdomainOperator::harmonic_interior(const Vector& x_b) const {
  if (num_interior() == 0) return Vector(0);
  return -solve_interior(a_ib * x_b);
}

std::vector<int> SubdomainOperator::local_indices(const Glob& glob) const {
  std::vector<int> idx;
  idx.reserve(glob.dofs.size());
  for (int d : glob.dofs) {
    const int l = local_of[static_cast<std::size_t>(d)];
    if (l < 0) {
      throw std::invalid_argument("glob " + std::to_string(glob.id) +
                                  " does not lie on subdomain " +
                                  std::to_string(subdomain));
    }
    idx.push_back(l);
  }
  return idx;
}

SubdomainOperator build_subdomain_operator(const AssembledSystem& system,
                                           const Partition& partition,
                                           const GlobSet& globs, int i) {
  if (i < 0 || i >= partition.count) {
    throw std::invalid_argument("subdomain id out of range");
  }
  SubdomainOperator op;
  op.subdomain = i;
  const ElementSystem& es = system.elements;

  std::vector<int> elems;
  for (std::size_t e = 0; e < partition.subdomain_of.size(); ++e) {
    if (partition.subdomain_of[e] == i) elems.push_back(static_cast<int>(e));
  }

  // Local numbering: kind (0 interior, 1 interface) and index per node.
  std::vector<int> nodes;
  for (int e : elems) {
    for (int v : es.connectivity[e]) {
      if (!system.is_dirichlet(v)) nodes.push_back(v);
    }
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  for (int v : nodes) {
    const int d = globs.node_to_interface[v];
    if (d >= 0) {
      op.interface_dofs.push_back(d);
    } else {
      op.interior_free.push_back(system.node_to_free[v]);
    }
  }
  if (op.interface_dofs.empty()) {
    throw std::invalid_argument("subdomain " + std::to_string(i) +
                                " has no interface dofs");
  }
  op.local_of.assign(static_cast<std::size_t>(globs.num_interface()), -1);
  for (int k = 0; k < op.num_interface(); ++k) op.local_of[op.interface_dofs[k]] = k;
  std::vector<int> interior_of(static_cast<std::size_t>(system.num_free()), -1);
  for (int k = 0; k < op.num_interior(); ++k) interior_of[op.interior_free[k]] = k;

  const int ni = op.num_interior();
  const int nb = op.num_interface();
  // Signed local index: >= 0 interior, <= -2 interface (-(k+2)), -1 Dirichlet.
  auto local = [&](int node) {
    const int f = system.node_to_free[node];
    if (f < 0) return -1;
    const int d = globs.node_to_interface[node];
    if (d >= 0) return -(op.local_of[d] + 2);
    return interior_of[f];
  };

  using Triplet = Eigen::Triplet<double>;
  std::vector<Triplet> t_ii, t_ib, t_bi;
  op.a_bb = Matrix::Zero(nb, nb);
  op.f_i = Vector::Zero(ni);
  op.f_b = Vector::Zero(nb);
  for (int e : elems) {
    const Tet& t = es.connectivity[e];
    const Eigen::Matrix4d a = es.sym[e] + es.skew[e];
    std::array<int, 4> loc{};
    for (int k = 0; k < 4; ++k) loc[k] = local(t[k]);
    for (int r = 0; r < 4; ++r) {
      if (loc[r] == -1) continue;
      double load = es.load[e][r];
      for (int c = 0; c < 4; ++c) {
        if (loc[c] == -1) load -= a(r, c) * system.lifting[t[c]];
      }
      if (loc[r] >= 0) {
        op.f_i[loc[r]] += load;
      } else {
        op.f_b[-loc[r] - 2] += load;
      }
      for (int c = 0; c < 4; ++c) {
        if (loc[c] == -1) continue;
        const double v = a(r, c);
        if (loc[r] >= 0 && loc[c] >= 0) {
          t_ii.emplace_back(loc[r], loc[c], v);
        } else if (loc[r] >= 0) {
          t_ib.emplace_back(loc[r], -loc[c] - 2, v);
        } else if (loc[c] >= 0) {
          t_bi.emplace_back(-loc[r] - 2, loc[c], v);
        } else {
          op.a_bb(-loc[r] - 2, -loc[c] - 2) += v;
        }
      }
    }
  }
  op.a_ii.resize(ni, ni);
  op.a_ii.setFromTriplets(t_ii.begin(), t_ii.end());
  op.a_ib.resize(ni, nb);
  op.a_ib.setFromTriplets(t_ib.begin(), t_ib.end());
  op.a_bi.resize(nb, ni);
  op.a_bi.setFromTriplets(t_bi.begin(), t_bi.end());

  op.schur = op.a_bb;
  op.condensed_rhs = op.f_b;
  if (ni > 0) {
    auto lu = std::make_shared<Eigen::SparseLU<SparseMatrix>>();
    lu->compute(op.a_ii);
    if (lu->info() != Eigen::Success) {
      throw std::runtime_error("interior factorization failed on subdomain " +
                               std::to_string(i) + ": " + lu->lastErrorMessage());
    }
    op.interior_lu = lu;
    const Matrix x = lu->solve(Matrix(op.a_ib));
    op.schur -= op.a_bi * x;
    op.condensed_rhs -= op.a_bi * lu->solve(op.f_i);
  }
  op.sym = 0.5 * (op.schur + op.schur.transpose());
  op.skew = 0.5 * (op.schur - op.schur.transpose());

  Eigen::LLT<Matrix> llt(op.sym);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("symmetric part of the Schur complement is not positive "
                             "definite on subdomain " + std::to_string(i));
  }
  op.sym_inverse = llt.solve(Matrix::Identity(nb, nb));
  op.sym_inverse = 0.5 * (op.sym_inverse + op.sym_inverse.transpose()).eval();
  return op;
}

std::vector<SubdomainOperator> build_subdomain_operators(
    const AssembledSystem& system, const Partition& partition, const GlobSet& globs) {
  std::vector<SubdomainOperator> ops;
  ops.reserve(static_cast<std::size_t>(partition.count));
  for (int i = 0; i < partition.count; ++i) {
    ops.push_back(build_subdomain_operator(system, partition, globs, i));
  }
  return ops;
}

Matrix glob_principal_block(const SubdomainOperator& op, const Glob& glob) {
  const auto idx = op.local_indices(glob);
  return principal_block(op.sym, idx);
}

Matrix glob_schur_block(const SubdomainOperator& op, const Glob& glob) {
  const auto idx = op.local_indices(glob);
  if (static_cast<int>(idx.size()) == op.num_interface()) {
    return principal_block(op.sym, idx);
  }
  const Matrix inv_block = principal_block(op.sym_inverse, idx);
  Eigen::LLT<Matrix> llt(inv_block);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("glob Schur block: singular complement on glob " +
                             std::to_string(glob.id));
  }
  Matrix s = llt.solve(Matrix::Identity(inv_block.rows(), inv_block.cols()));
  return 0.5 * (s + s.transpose());
}

Matrix schur_onto_directions(const SubdomainOperator& op, const Matrix& directions) {
  const Matrix reduced = directions.transpose() * op.sym_inverse * directions;
  Eigen::LLT<Matrix> llt(reduced);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("Schur complement onto directions: reduced inverse is "
                             "not positive definite");
  }
  Matrix s = llt.solve(Matrix::Identity(reduced.rows(), reduced.cols()));
  return 0.5 * (s + s.transpose());
}

PriorProducts prior_products(const SubdomainOperator& op, const Matrix& priors,
                             const Matrix& inverse_times_priors) {
  if (priors.rows() != op.num_interface() || inverse_times_priors.rows() != priors.rows() ||
      inverse_times_priors.cols() != priors.cols()) {
    throw std::invalid_argument("prior_products: prior vectors have wrong shape");
  }
  PriorProducts pp;
  pp.inverse_times_priors = inverse_times_priors;
  // Prior vectors live on single globs, so P is mostly zero.
  const SparseMatrix sparse_priors = priors.sparseView();
  pp.gram = Matrix(sparse_priors.transpose() * inverse_times_priors);
  pp.gram = (0.5 * (pp.gram + pp.gram.transpose())).eval();
  if (Eigen::LLT<Matrix>(pp.gram).info() != Eigen::Success) {
    throw std::runtime_error("prior_products: prior Gram matrix is not positive definite "
                             "on subdomain " + std::to_string(op.subdomain));
  }
  return pp;
}

PartitionedBlock edge_block_with_priors(const SubdomainOperator& op, const Glob& edge,
                                        const Matrix& priors) {
  return edge_block_with_priors(op, edge,
                                prior_products(op, priors, op.sym_inverse * priors));
}

PartitionedBlock edge_block_with_priors(const SubdomainOperator& op, const Glob& edge,
                                        const PriorProducts& products) {
  std::vector<int> all(static_cast<std::size_t>(products.gram.rows()));
  for (std::size_t c = 0; c < all.size(); ++c) all[c] = static_cast<int>(c);
  return edge_block_with_priors(op, edge, products, all);
}

PartitionedBlock edge_block_with_priors(const SubdomainOperator& op, const Glob& edge,
                                        const PriorProducts& products,
                                        std::span<const int> columns) {
  const auto idx = op.local_indices(edge);
  const int ne = static_cast<int>(idx.size());
  const auto nh = static_cast<Eigen::Index>(columns.size());
  if (products.inverse_times_priors.rows() != op.num_interface() ||
      products.inverse_times_priors.cols() != products.gram.rows()) {
    throw std::invalid_argument("edge_block_with_priors: prior products have wrong shape");
  }
  const std::vector<int> cols(columns.begin(), columns.end());
  for (int c : cols) {
    if (c < 0 || c >= products.gram.rows()) {
      throw std::invalid_argument("edge_block_with_priors: prior column out of range");
    }
  }
  // The priors vanish on the edge, so the reduced inverse is
  // [[sym^-1_EE, Y], [Y^T, Gram]] with Y = (sym^-1 P)_E. Invert it through
  // the Schur complement onto the edge.
  const Matrix y = products.inverse_times_priors(idx, cols);
  Matrix gram_inverse = Matrix::Zero(nh, nh);
  if (nh > 0) {
    Eigen::LLT<Matrix> gram_llt(products.gram(cols, cols));
    if (gram_llt.info() != Eigen::Success) {
      throw std::runtime_error("edge_block_with_priors: prior Gram block is not positive "
                               "definite on glob " + std::to_string(edge.id));
    }
    gram_inverse = gram_llt.solve(Matrix::Identity(nh, nh));
  }
  const Matrix z = y * gram_inverse;
  Matrix reduced_edge = principal_block(op.sym_inverse, idx) - z * y.transpose();
  reduced_edge = (0.5 * (reduced_edge + reduced_edge.transpose())).eval();
  Eigen::LLT<Matrix> llt(reduced_edge);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("edge_block_with_priors: reduced inverse is not positive "
                             "definite on glob " + std::to_string(edge.id));
  }
  Matrix ee = llt.solve(Matrix::Identity(ne, ne));
  ee = (0.5 * (ee + ee.transpose())).eval();
  const Matrix eh = -ee * z;
  PartitionedBlock block;
  block.n_edge = ne;
  block.full.resize(ne + nh, ne + nh);
  block.full.topLeftCorner(ne, ne) = ee;
  block.full.topRightCorner(ne, nh) = eh;
  block.full.bottomLeftCorner(nh, ne) = eh.transpose();
  block.full.bottomRightCorner(nh, nh) = gram_inverse - z.transpose() * eh;
  block.full = (0.5 * (block.full + block.full.transpose())).eval();
  return block;
}

}  // namespace abddc
