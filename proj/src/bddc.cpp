#include "abddc/bddc.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

#include <spdlog/spdlog.h>

namespace abddc {

namespace {

Vector gather(const Vector& x, const std::vector<int>& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out[static_cast<Eigen::Index>(k)] = x[idx[k]];
  return out;
}

void scatter_add(Vector& x, const std::vector<int>& idx, const Vector& v) {
  for (std::size_t k = 0; k < idx.size(); ++k) x[idx[k]] += v[static_cast<Eigen::Index>(k)];
}

// Index of the smallest pivot magnitude relative to the largest, or -1 if all
// pivots are acceptable.
int weak_pivot(const Eigen::PartialPivLU<Matrix>& lu, double rel_tol) {
  const Vector piv = lu.matrixLU().diagonal().cwiseAbs();
  if (piv.size() == 0) return -1;
  Eigen::Index at = 0;
  const double smallest = piv.minCoeff(&at);
  return smallest <= rel_tol * piv.maxCoeff() ? static_cast<int>(at) : -1;
}

}  // namespace

SchurOperator::SchurOperator(const std::vector<SubdomainOperator>& ops,
                             const GlobSet& globs)
    : ops_(&ops), n_(globs.num_interface()) {}

Vector SchurOperator::apply(const Vector& x) const {
  Vector y = Vector::Zero(n_);
  for (const SubdomainOperator& op : *ops_) {
    scatter_add(y, op.interface_dofs, op.schur * gather(x, op.interface_dofs));
  }
  return y;
}

Vector SchurOperator::apply_symmetric(const Vector& x) const {
  Vector y = Vector::Zero(n_);
  for (const SubdomainOperator& op : *ops_) {
    scatter_add(y, op.interface_dofs, op.sym * gather(x, op.interface_dofs));
  }
  return y;
}

Vector SchurOperator::condensed_rhs() const {
  Vector g = Vector::Zero(n_);
  for (const SubdomainOperator& op : *ops_) scatter_add(g, op.interface_dofs, op.condensed_rhs);
  return g;
}

Matrix SchurOperator::dense(bool symmetric_part) const {
  Matrix m = Matrix::Zero(n_, n_);
  for (const SubdomainOperator& op : *ops_) {
    const Matrix& s = symmetric_part ? op.sym : op.schur;
    const auto& idx = op.interface_dofs;
    for (std::size_t c = 0; c < idx.size(); ++c) {
      for (std::size_t r = 0; r < idx.size(); ++r) {
        m(idx[r], idx[c]) += s(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      }
    }
  }
  return m;
}

BddcPreconditioner::BddcPreconditioner(const std::vector<SubdomainOperator>& ops,
                                       const GlobSet& globs, const PrimalBasis& basis,
                                       const ScalingSet& scaling)
    : ops_(&ops), globs_(&globs), basis_(&basis) {
  if (basis.num_coarse == 0) {
    throw std::invalid_argument(
        "empty primal space: at least one primal unknown is required");
  }
  const int nc = basis.num_coarse;
  coarse_ = Matrix::Zero(nc, nc);
  locals_.resize(ops.size());
  for (std::size_t i = 0; i < ops.size(); ++i) {
    const SubdomainOperator& op = ops[i];
    Local& loc = locals_[i];
    const int nb = op.num_interface();
    loc.transform = Matrix::Zero(nb, nb);
    loc.scaling = Matrix::Zero(nb, nb);
    std::vector<char> is_primal(static_cast<std::size_t>(nb), 0);
    std::vector<int> coarse_at(static_cast<std::size_t>(nb), -1);
    for (int gid : globs.subdomain_globs[i]) {
      const Glob& g = globs.globs[static_cast<std::size_t>(gid)];
      const auto idx = op.local_indices(g);
      const GlobBasis& gb = basis.globs[static_cast<std::size_t>(gid)];
      const Matrix dbar = gb.q.transpose() * scaling.of(g, static_cast<int>(i)) * gb.q;
      for (std::size_t c = 0; c < idx.size(); ++c) {
        for (std::size_t r = 0; r < idx.size(); ++r) {
          const auto rr = static_cast<Eigen::Index>(r), cc = static_cast<Eigen::Index>(c);
          loc.transform(idx[r], idx[c]) = gb.q(rr, cc);
          loc.scaling(idx[r], idx[c]) = dbar(rr, cc);
        }
        if (static_cast<int>(c) < gb.n_primal) {
          is_primal[idx[c]] = 1;
          coarse_at[idx[c]] = basis.coarse_offset[static_cast<std::size_t>(gid)] +
                              static_cast<int>(c);
        }
      }
    }
    for (int k = 0; k < nb; ++k) {
      if (is_primal[k]) {
        loc.primal.push_back(k);
        loc.coarse_ids.push_back(coarse_at[k]);
      } else {
        loc.dual.push_back(k);
      }
    }

    // T is block diagonal over the globs, so T^T S T is formed glob by glob.
    // Globs without primal directions keep the identity basis and are copied.
    Matrix st = op.schur;
    for (int gid : globs.subdomain_globs[i]) {
      const GlobBasis& gb = basis.globs[static_cast<std::size_t>(gid)];
      if (gb.n_primal == 0) continue;
      const auto idx = op.local_indices(globs.globs[static_cast<std::size_t>(gid)]);
      st(Eigen::all, idx) = op.schur(Eigen::all, idx) * gb.q;
    }
    Matrix sbar = st;
    for (int gid : globs.subdomain_globs[i]) {
      const GlobBasis& gb = basis.globs[static_cast<std::size_t>(gid)];
      if (gb.n_primal == 0) continue;
      const auto idx = op.local_indices(globs.globs[static_cast<std::size_t>(gid)]);
      sbar(idx, Eigen::all) = gb.q.transpose() * st(idx, Eigen::all);
    }
    const Matrix s_pp = sub_block(sbar, loc.primal, loc.primal);
    loc.s_pd = sub_block(sbar, loc.primal, loc.dual);
    loc.s_dp = sub_block(sbar, loc.dual, loc.primal);
    Matrix local_coarse = s_pp;
    if (!loc.dual.empty()) {
      const Matrix s_dd = sub_block(sbar, loc.dual, loc.dual);
      Eigen::LLT<Matrix> cert(0.5 * (s_dd + s_dd.transpose()));
      if (cert.info() != Eigen::Success) {
        throw std::runtime_error("dual block of subdomain " + std::to_string(i) +
                                 " has an indefinite symmetric part");
      }
      loc.dual_lu.compute(s_dd);
      loc.phi = loc.dual_lu.solve(loc.s_dp);
      local_coarse -= loc.s_pd * loc.phi;
    } else {
      loc.phi = Matrix::Zero(0, static_cast<Eigen::Index>(loc.primal.size()));
    }
    for (std::size_t c = 0; c < loc.coarse_ids.size(); ++c) {
      for (std::size_t r = 0; r < loc.coarse_ids.size(); ++r) {
        coarse_(loc.coarse_ids[r], loc.coarse_ids[c]) +=
            local_coarse(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      }
    }
  }
  coarse_lu_.compute(coarse_);
  const int bad = weak_pivot(coarse_lu_, 1e-13);
  if (bad >= 0) {
    throw std::runtime_error("singular coarse matrix: weak pivot at primal unknown " +
                             std::to_string(bad));
  }
}

Vector BddcPreconditioner::apply(const Vector& r) const {
  const Vector rbar = to_primal_coordinates(*basis_, *globs_, r);
  const std::vector<SubdomainOperator>& ops = *ops_;
  Vector f_coarse = Vector::Zero(coarse_size());
  std::vector<Vector> y(ops.size());
  std::vector<Vector> zp(ops.size());
  for (std::size_t i = 0; i < ops.size(); ++i) {
    const Local& loc = locals_[i];
    const Vector z = loc.scaling.transpose() * gather(rbar, ops[i].interface_dofs);
    const Vector zd = gather(z, loc.dual);
    Vector fp = gather(z, loc.primal);
    if (!loc.dual.empty()) {
      y[i] = loc.dual_lu.solve(zd);
      fp -= loc.s_pd * y[i];
    } else {
      y[i] = Vector(0);
    }
    scatter_add(f_coarse, loc.coarse_ids, fp);
  }
  const Vector u_coarse = coarse_lu_.solve(f_coarse);
  Vector out = Vector::Zero(r.size());
  for (std::size_t i = 0; i < ops.size(); ++i) {
    const Local& loc = locals_[i];
    const Vector up = gather(u_coarse, loc.coarse_ids);
    Vector v = Vector::Zero(ops[i].num_interface());
    for (std::size_t k = 0; k < loc.primal.size(); ++k) {
      v[loc.primal[k]] = up[static_cast<Eigen::Index>(k)];
    }
    if (!loc.dual.empty()) {
      const Vector ud = y[i] - loc.phi * up;
      for (std::size_t k = 0; k < loc.dual.size(); ++k) {
        v[loc.dual[k]] = ud[static_cast<Eigen::Index>(k)];
      }
    }
    scatter_add(out, ops[i].interface_dofs, loc.scaling * v);
  }
  return from_primal_coordinates(*basis_, *globs_, out);
}

CoupledVector BddcPreconditioner::restrict_continuous(const Vector& x) const {
  const Vector xbar = to_primal_coordinates(*basis_, *globs_, x);
  CoupledVector w;
  for (const SubdomainOperator& op : *ops_) w.push_back(gather(xbar, op.interface_dofs));
  return w;
}

Vector BddcPreconditioner::average(const CoupledVector& w) const {
  Vector out = Vector::Zero(size());
  for (std::size_t i = 0; i < ops_->size(); ++i) {
    scatter_add(out, (*ops_)[i].interface_dofs, locals_[i].scaling * w[i]);
  }
  return from_primal_coordinates(*basis_, *globs_, out);
}

std::pair<CoupledVector, CoupledVector> BddcPreconditioner::averaging_and_jump(
    const CoupledVector& w) const {
  const CoupledVector e = restrict_continuous(average(w));
  CoupledVector p;
  for (std::size_t i = 0; i < w.size(); ++i) p.push_back(w[i] - e[i]);
  return {e, p};
}

SolveReport gmres_solve(const LinearAction& op, const Vector& rhs,
                        const LinearAction& preconditioner, double rel_tol, int max_iter) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  SolveReport rep;
  const Eigen::Index n = rhs.size();
  rep.solution = Vector::Zero(n);
  const double rhs_norm = rhs.norm();
  if (rhs_norm == 0.0) {
    rep.converged = true;
    rep.residual_history = {0.0};
    rep.true_residual_history = {0.0};
    return rep;
  }
  const Vector r0 = preconditioner(rhs);
  const double beta = r0.norm();
  rep.residual_history.push_back(1.0);
  rep.true_residual_history.push_back(1.0);
  if (beta == 0.0) {
    throw std::runtime_error("gmres: preconditioner maps the right-hand side to zero");
  }

  Matrix v(n, max_iter + 1);
  Matrix h = Matrix::Zero(max_iter + 1, max_iter);
  Vector cs = Vector::Zero(max_iter), sn = Vector::Zero(max_iter);
  Vector g = Vector::Zero(max_iter + 1);
  v.col(0) = r0 / beta;
  g[0] = beta;

  for (int j = 0; j < max_iter; ++j) {
    Vector w = preconditioner(op(v.col(j)));
    for (int i = 0; i <= j; ++i) {
      h(i, j) = v.col(i).dot(w);
      w -= h(i, j) * v.col(i);
    }
    const double hnext = w.norm();
    h(j + 1, j) = hnext;
    for (int i = 0; i < j; ++i) {
      const double a = cs[i] * h(i, j) + sn[i] * h(i + 1, j);
      h(i + 1, j) = -sn[i] * h(i, j) + cs[i] * h(i + 1, j);
      h(i, j) = a;
    }
    const double denom = std::hypot(h(j, j), h(j + 1, j));
    cs[j] = denom == 0.0 ? 1.0 : h(j, j) / denom;
    sn[j] = denom == 0.0 ? 0.0 : h(j + 1, j) / denom;
    h(j, j) = cs[j] * h(j, j) + sn[j] * h(j + 1, j);
    h(j + 1, j) = 0.0;
    g[j + 1] = -sn[j] * g[j];
    g[j] = cs[j] * g[j];

    rep.iterations = j + 1;
    const double res = std::abs(g[j + 1]) / beta;
    rep.residual_history.push_back(res);
    const int k = j + 1;
    const Vector y = h.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
    rep.solution = v.leftCols(k) * y;
    rep.true_residual_history.push_back((rhs - op(rep.solution)).norm() / rhs_norm);
    if (res <= rel_tol) {
      rep.converged = true;
      break;
    }
    if (hnext <= 1e-14 * beta) break;
    v.col(j + 1) = w / hnext;
  }
  rep.solve_seconds = std::chrono::duration<double>(clock::now() - t0).count();
  return rep;
}

Vector direct_schur_solve(const SchurOperator& schur, const Vector& rhs) {
  const Matrix s = schur.dense();
  Eigen::PartialPivLU<Matrix> lu(s);
  if (weak_pivot(lu, 1e-14) >= 0) {
    throw std::runtime_error("direct_schur_solve: assembled interface operator is singular");
  }
  return lu.solve(rhs);
}

Vector recover_interior(const std::vector<SubdomainOperator>& ops, const GlobSet& globs,
                        const AssembledSystem& system, const Vector& interface_values) {
  Vector u = Vector::Zero(system.num_free());
  for (int d = 0; d < globs.num_interface(); ++d) {
    u[system.node_to_free[globs.interface_nodes[d]]] = interface_values[d];
  }
  for (const SubdomainOperator& op : ops) {
    if (op.num_interior() == 0) continue;
    const Vector xb = gather(interface_values, op.interface_dofs);
    const Vector ui = op.solve_interior(op.f_i - op.a_ib * xb);
    for (int k = 0; k < op.num_interior(); ++k) u[op.interior_free[k]] = ui[k];
  }
  return to_nodal(system, u);
}

}  // namespace abddc
