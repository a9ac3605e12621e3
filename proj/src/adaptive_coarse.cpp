#include "abddc/adaptive_coarse.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>

#include <spdlog/spdlog.h>

namespace abddc {

namespace {

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// Runs the pencil and fills the selection and its constraint rows.
void solve_and_select(GevpReport& r) {
  try {
    r.pairs = sym_pencil_gevp(r.lhs, r.rhs);
  } catch (const std::exception& ex) {
    throw std::runtime_error("pencil solve failed on glob " + std::to_string(r.glob_id) +
                             ": " + ex.what());
  }
  std::vector<int> chosen;
  for (int k = 0; k < r.pairs.size(); ++k) {
    if (!r.pairs.degenerate[k] && r.pairs.values[k] >= r.threshold) chosen.push_back(k);
  }
  r.n_primal = static_cast<int>(chosen.size());
  r.constraints.resize(r.n_primal, r.lhs.cols());
  for (int l = 0; l < r.n_primal; ++l) {
    r.constraints.row(l) = (r.lhs * r.pairs.vectors.col(chosen[l])).transpose();
  }
}

}  // namespace

std::string_view to_string(EdgeVariant v) {
  return v == EdgeVariant::pairwise ? "old" : "new";
}

EdgeVariant parse_edge_variant(std::string_view s) {
  if (s == "old") return EdgeVariant::pairwise;
  if (s == "new") return EdgeVariant::difference;
  throw std::invalid_argument("unknown edge variant '" + std::string(s) +
                              "' (expected old or new)");
}

std::string_view to_string(PencilKind k) {
  switch (k) {
    case PencilKind::face: return "face";
    case PencilKind::edge_old: return "edge_old";
    case PencilKind::edge_new: return "edge_new";
  }
  return "unknown";
}

double face_threshold(double cells_per_subdomain) {
  if (!(cells_per_subdomain > 0.0)) {
    throw std::invalid_argument("face_threshold: cell count must be positive");
  }
  return 1.0 + std::log(cells_per_subdomain);
}

GevpReport face_gevp(const Glob& face, const std::vector<SubdomainOperator>& ops,
                     const ScalingSet& scaling, double threshold) {
  if (face.sharers.size() != 2) {
    throw std::invalid_argument("face_gevp: glob " + std::to_string(face.id) +
                                " does not have two sharers");
  }
  const int i = face.sharers[0], j = face.sharers[1];
  const Matrix& di = scaling.of(face, i);
  const Matrix& dj = scaling.of(face, j);
  const Matrix bi = glob_principal_block(ops[i], face);
  const Matrix bj = glob_principal_block(ops[j], face);

  GevpReport r;
  r.glob_id = face.id;
  r.kind = PencilKind::face;
  r.threshold = threshold;
  r.lhs = symmetrized(dj.transpose() * bi * dj + di.transpose() * bj * di);
  r.rhs = parallel_sum(glob_schur_block(ops[i], face), glob_schur_block(ops[j], face));
  solve_and_select(r);
  r.glob_constraints = r.constraints;
  return r;
}

GevpReport edge_gevp_old(const Glob& edge, const std::vector<SubdomainOperator>& ops,
                         const ScalingSet& scaling, double threshold) {
  const int n = edge.size();
  GevpReport r;
  r.glob_id = edge.id;
  r.kind = PencilKind::edge_old;
  r.threshold = threshold;
  r.lhs = Matrix::Zero(n, n);
  std::vector<Matrix> schur;
  for (int i : edge.sharers) {
    const Matrix bi = glob_principal_block(ops[i], edge);
    for (int k : edge.sharers) {
      if (k == i) continue;
      const Matrix& dk = scaling.of(edge, k);
      r.lhs += dk.transpose() * bi * dk;
    }
    schur.push_back(glob_schur_block(ops[i], edge));
  }
  r.lhs = symmetrized(r.lhs);
  r.rhs = parallel_sum(schur);
  solve_and_select(r);
  r.glob_constraints = r.constraints;
  return r;
}

std::vector<Matrix> difference_maps(const std::vector<Matrix>& scalings) {
  const int s = static_cast<int>(scalings.size());
  if (s < 2) throw std::invalid_argument("difference_maps: need >= 2 sharers");
  const int n = static_cast<int>(scalings[0].rows());
  std::vector<Matrix> g;
  g.reserve(static_cast<std::size_t>(s));
  for (int k = 0; k < s; ++k) {
    Matrix gk(n, (s - 1) * n);
    for (int l = 1; l < s; ++l) {
      Matrix block = -scalings[l];
      if (l == k) block += Matrix::Identity(n, n);
      gk.middleCols((l - 1) * n, n) = block;
    }
    g.push_back(std::move(gk));
  }
  return g;
}

GevpReport edge_gevp_new(const Glob& edge, const std::vector<SubdomainOperator>& ops,
                         const ScalingSet& scaling,
                         const std::vector<PriorDirections>& priors, double threshold) {
  const int n = edge.size();
  const int s = static_cast<int>(edge.sharers.size());
  std::vector<Matrix> d;
  for (int k : edge.sharers) d.push_back(scaling.of(edge, k));
  const auto g = difference_maps(d);
  const int nd = (s - 1) * n;

  // Prior unknowns held by two or more sharers couple the sharers' blocks.
  // One held by a single sharer only enters that sharer's term, where
  // eliminating it leaves the block without it, so it is not kept.
  std::map<int, int> holders;
  for (int k : edge.sharers) {
    for (int c : priors[k].coarse_ids) ++holders[c];
  }
  std::map<int, int> h_pos;
  int nh = 0;
  for (const auto& [c, count] : holders) {
    if (count >= 2) h_pos.emplace(c, nh++);
  }
  spdlog::debug("edge {}: {} dofs, {} sharers, {} shared prior unknowns", edge.id, n, s, nh);

  GevpReport r;
  r.glob_id = edge.id;
  r.kind = PencilKind::edge_new;
  r.threshold = threshold;
  r.lhs = Matrix::Zero(nd, nd);
  // Unknowns of the condensed form: w_check (nd), w_hat (n), shared priors (nh).
  const int nt = nd + n + nh;
  Matrix btil = Matrix::Zero(nt, nt);
  for (int a = 0; a < s; ++a) {
    const int k = edge.sharers[a];
    const Matrix bk = glob_principal_block(ops[k], edge);
    r.lhs += g[a].transpose() * bk * g[a];

    const PriorDirections& pk = priors[k];
    std::vector<int> kept, h_idx;
    for (std::size_t c = 0; c < pk.coarse_ids.size(); ++c) {
      const auto it = h_pos.find(pk.coarse_ids[c]);
      if (it == h_pos.end()) continue;
      kept.push_back(static_cast<int>(c));
      h_idx.push_back(nd + n + it->second);
    }
    const PartitionedBlock blk = edge_block_with_priors(ops[k], edge, pk.products, kept);
    const int hk = static_cast<int>(kept.size());
    // w_k = G^(k) w_check + w_hat; the sharer's kept priors map to shared slots.
    Matrix lift(n, nd + n);
    lift << g[a], Matrix::Identity(n, n);
    const Matrix ee = blk.full.topLeftCorner(n, n);
    const Matrix eh = blk.full.topRightCorner(n, hk);
    const Matrix gee = lift.transpose() * ee * lift;
    const Matrix geh = lift.transpose() * eh;
    btil.topLeftCorner(nd + n, nd + n) += gee;
    for (int c = 0; c < hk; ++c) {
      btil.block(0, h_idx[c], nd + n, 1) += geh.col(c);
      btil.block(h_idx[c], 0, 1, nd + n) += geh.col(c).transpose();
      for (int e = 0; e < hk; ++e) btil(h_idx[c], h_idx[e]) += blk.full(n + c, n + e);
    }
  }
  r.lhs = symmetrized(r.lhs);
  btil = symmetrized(btil);

  const Matrix a11 = btil.topLeftCorner(nd, nd);
  const Matrix a12 = btil.topRightCorner(nd, n + nh);
  const Matrix a22 = btil.bottomRightCorner(n + nh, n + nh);
  Eigen::LLT<Matrix> a22_llt(a22);
  if (a22_llt.info() == Eigen::Success) {
    r.rhs = symmetrized(a11 - a12 * a22_llt.solve(a12.transpose()));
  } else {
    r.rhs = symmetrized(a11 - a12 * pseudo_inverse(a22) * a12.transpose());
  }
  solve_and_select(r);
  r.glob_constraints = reduce_edge_constraints(r.constraints, n);
  return r;
}

Matrix reduce_edge_constraints(const Matrix& constraints, int n_edge) {
  if (constraints.rows() == 0) return Matrix(0, n_edge);
  if (n_edge <= 0 || constraints.cols() % n_edge != 0) {
    throw std::invalid_argument("reduce_edge_constraints: width is not a multiple of n_edge");
  }
  const int blocks = static_cast<int>(constraints.cols()) / n_edge;
  Matrix stacked(constraints.rows() * blocks, n_edge);
  for (int r = 0; r < constraints.rows(); ++r) {
    for (int b = 0; b < blocks; ++b) {
      stacked.row(r * blocks + b) = constraints.block(r, b * n_edge, 1, n_edge);
    }
  }
  return row_space_basis(stacked).transpose();
}

GlobBasis build_change_of_basis(int n_dofs, const Matrix& constraint_rows) {
  GlobBasis gb;
  if (constraint_rows.rows() == 0) {
    gb.q = Matrix::Identity(n_dofs, n_dofs);
    return gb;
  }
  if (constraint_rows.cols() != n_dofs) {
    throw std::invalid_argument("build_change_of_basis: constraint width mismatch");
  }
  const Matrix primal = row_space_basis(constraint_rows);
  if (primal.cols() < constraint_rows.rows()) {
    spdlog::debug("change of basis: {} of {} constraint rows dependent, dropped",
                  constraint_rows.rows() - primal.cols(), constraint_rows.rows());
  }
  gb.n_primal = static_cast<int>(primal.cols());
  gb.q = orthonormal_completion(primal);
  return gb;
}

PrimalBasis assemble_primal_space(const GlobSet& globs, std::vector<GlobBasis> bases) {
  if (bases.size() != globs.globs.size()) {
    throw std::invalid_argument("assemble_primal_space: one basis per glob required");
  }
  PrimalBasis pb;
  pb.globs = std::move(bases);
  pb.coarse_offset.resize(globs.globs.size());
  for (const Glob& g : globs.globs) {
    const int np = pb.globs[static_cast<std::size_t>(g.id)].n_primal;
    pb.coarse_offset[static_cast<std::size_t>(g.id)] = pb.num_coarse;
    pb.num_coarse += np;
    switch (g.kind) {
      case GlobKind::face: pb.pnum_face += np; break;
      case GlobKind::edge: pb.pnum_edge += np; break;
      case GlobKind::vertex: pb.pnum_vertex += np; break;
    }
  }
  return pb;
}

PrimalBasis full_primal_basis(const GlobSet& globs) {
  std::vector<GlobBasis> b;
  for (const Glob& g : globs.globs) {
    b.push_back({Matrix::Identity(g.size(), g.size()), g.size()});
  }
  return assemble_primal_space(globs, std::move(b));
}

PrimalBasis vertex_primal_basis(const GlobSet& globs) {
  std::vector<GlobBasis> b;
  for (const Glob& g : globs.globs) {
    b.push_back({Matrix::Identity(g.size(), g.size()),
                 g.kind == GlobKind::vertex ? g.size() : 0});
  }
  return assemble_primal_space(globs, std::move(b));
}

std::vector<PriorDirections> prior_directions(const std::vector<SubdomainOperator>& ops,
                                              const GlobSet& globs,
                                              const PrimalBasis& basis) {
  std::vector<PriorDirections> out(ops.size());
  for (std::size_t sd = 0; sd < ops.size(); ++sd) {
    const SubdomainOperator& op = ops[sd];
    std::vector<std::pair<std::vector<int>, const GlobBasis*>> parts;
    int count = 0;
    std::vector<int> gids;
    for (int gid : globs.subdomain_globs[sd]) {
      const Glob& g = globs.globs[static_cast<std::size_t>(gid)];
      if (g.kind == GlobKind::edge) continue;
      const GlobBasis& gb = basis.globs[static_cast<std::size_t>(gid)];
      if (gb.n_primal == 0) continue;
      parts.emplace_back(op.local_indices(g), &gb);
      gids.push_back(gid);
      count += gb.n_primal;
    }
    PriorDirections& pd = out[sd];
    pd.vectors = Matrix::Zero(op.num_interface(), count);
    int col = 0;
    for (std::size_t p = 0; p < parts.size(); ++p) {
      const auto& [idx, gb] = parts[p];
      for (int c = 0; c < gb->n_primal; ++c, ++col) {
        for (std::size_t r = 0; r < idx.size(); ++r) {
          pd.vectors(idx[r], col) = gb->q(static_cast<Eigen::Index>(r), c);
        }
        pd.coarse_ids.push_back(basis.coarse_offset[static_cast<std::size_t>(gids[p])] + c);
      }
    }
    // Each column lives on one glob, so only those columns of sym^-1 are needed.
    Matrix inverse_times(op.num_interface(), count);
    col = 0;
    for (const auto& [idx, gb] : parts) {
      inverse_times.middleCols(col, gb->n_primal) =
          op.sym_inverse(Eigen::all, idx) * gb->q.leftCols(gb->n_primal);
      col += gb->n_primal;
    }
    pd.products = prior_products(op, pd.vectors, inverse_times);
  }
  return out;
}

CoarseSpace build_adaptive_primal_space(const std::vector<SubdomainOperator>& ops,
                                        const GlobSet& globs, const ScalingSet& scaling,
                                        EdgeVariant variant, const Thresholds& thresholds) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  CoarseSpace cs;
  std::vector<GlobBasis> bases(globs.globs.size());
  for (const Glob& g : globs.globs) {
    auto& b = bases[static_cast<std::size_t>(g.id)];
    if (g.kind == GlobKind::vertex) {
      b = {Matrix::Identity(g.size(), g.size()), g.size()};
    } else {
      b = {Matrix::Identity(g.size(), g.size()), 0};
    }
  }
  for (const Glob& g : globs.globs) {
    if (g.kind != GlobKind::face) continue;
    GevpReport r = face_gevp(g, ops, scaling, thresholds.face);
    bases[static_cast<std::size_t>(g.id)] = build_change_of_basis(g.size(), r.glob_constraints);
    cs.reports.push_back(std::move(r));
  }

  std::vector<PriorDirections> priors;
  if (variant == EdgeVariant::difference) {
    priors = prior_directions(ops, globs, assemble_primal_space(globs, bases));
  }
  for (const Glob& g : globs.globs) {
    if (g.kind != GlobKind::edge) continue;
    GevpReport r = variant == EdgeVariant::pairwise
                       ? edge_gevp_old(g, ops, scaling, thresholds.edge)
                       : edge_gevp_new(g, ops, scaling, priors, thresholds.edge);
    bases[static_cast<std::size_t>(g.id)] = build_change_of_basis(g.size(), r.glob_constraints);
    cs.reports.push_back(std::move(r));
  }
  cs.basis = assemble_primal_space(globs, std::move(bases));
  cs.gevp_seconds = std::chrono::duration<double>(clock::now() - t0).count();
  spdlog::debug("primal space ({}): faces {}, edges {}, vertices {}", to_string(variant),
                cs.basis.pnum_face, cs.basis.pnum_edge, cs.basis.pnum_vertex);
  return cs;
}

Vector to_primal_coordinates(const PrimalBasis& basis, const GlobSet& globs,
                             const Vector& x) {
  Vector out(x.size());
  for (const Glob& g : globs.globs) {
    const Matrix& q = basis.globs[static_cast<std::size_t>(g.id)].q;
    Vector xg(g.size());
    for (int k = 0; k < g.size(); ++k) xg[k] = x[g.dofs[k]];
    const Vector yg = q.transpose() * xg;
    for (int k = 0; k < g.size(); ++k) out[g.dofs[k]] = yg[k];
  }
  return out;
}

Vector from_primal_coordinates(const PrimalBasis& basis, const GlobSet& globs,
                               const Vector& x_bar) {
  Vector out(x_bar.size());
  for (const Glob& g : globs.globs) {
    const Matrix& q = basis.globs[static_cast<std::size_t>(g.id)].q;
    Vector xg(g.size());
    for (int k = 0; k < g.size(); ++k) xg[k] = x_bar[g.dofs[k]];
    const Vector yg = q * xg;
    for (int k = 0; k < g.size(); ++k) out[g.dofs[k]] = yg[k];
  }
  return out;
}

void write_gevp_reports(const std::vector<GevpReport>& reports, std::ostream& os) {
  os << "glob_id,variant,n_dofs,n_primal,lambda_max,lambda_min\n";
  for (const GevpReport& r : reports) {
    const auto& v = r.pairs.values;
    os << r.glob_id << ',' << to_string(r.kind) << ',' << r.lhs.rows() << ','
       << r.glob_constraints.rows() << ',';
    if (v.size() == 0) {
      os << ",\n";
      continue;
    }
    os << v[0] << ',' << v[v.size() - 1] << '\n';
  }
}

}  // namespace abddc
