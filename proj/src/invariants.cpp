#include "abddc/invariants.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace abddc {

namespace {

Vector random_vector(Eigen::Index n, std::mt19937_64& gen) {
  std::normal_distribution<double> normal;
  Vector v(n);
  for (Eigen::Index k = 0; k < n; ++k) v[k] = normal(gen);
  return v;
}

double min_eigenvalue(const Matrix& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

// Constant of the jump estimate for a glob and variant.
double estimate_constant(const Glob& g, EdgeVariant variant, const Thresholds& t) {
  if (g.kind == GlobKind::face) return 2.0 * t.face;
  if (variant == EdgeVariant::pairwise) return 2.0 * t.edge;
  return 2.0 * (static_cast<double>(g.sharers.size()) - 1.0) * t.edge;
}

// Minimal energy of sharer values on an edge when the prior primal unknowns
// are shared between sharers and everything else is free.
Matrix edge_energy_with_shared_priors(const Problem& p, const Glob& edge,
                                      const std::vector<PriorDirections>& priors) {
  const int n = edge.size();
  const int s = static_cast<int>(edge.sharers.size());
  std::map<int, int> h_pos;
  for (int k : edge.sharers) {
    for (int c : priors[k].coarse_ids) h_pos.emplace(c, 0);
  }
  int nh = 0;
  for (auto& [c, pos] : h_pos) pos = nh++;
  const int nt = s * n + nh;
  Matrix k_full = Matrix::Zero(nt, nt);
  for (int a = 0; a < s; ++a) {
    const int sd = edge.sharers[a];
    const PartitionedBlock blk = edge_block_with_priors(p.ops[sd], edge, priors[sd].products);
    const int hk = static_cast<int>(priors[sd].coarse_ids.size());
    Matrix sel = Matrix::Zero(n + hk, nt);
    sel.block(0, a * n, n, n) = Matrix::Identity(n, n);
    for (int c = 0; c < hk; ++c) sel(n + c, s * n + h_pos.at(priors[sd].coarse_ids[c])) = 1.0;
    k_full += sel.transpose() * blk.full * sel;
  }
  const Matrix a11 = k_full.topLeftCorner(s * n, s * n);
  if (nh == 0) return a11;
  const Matrix a12 = k_full.topRightCorner(s * n, nh);
  const Matrix a22 = k_full.bottomRightCorner(nh, nh);
  return a11 - a12 * pseudo_inverse(0.5 * (a22 + a22.transpose())) * a12.transpose();
}

}  // namespace

CheckResult check_partition_of_unity(const Problem& problem) {
  CheckResult r;
  r.name = "partition of unity";
  r.measured = partition_of_unity_error(problem.scaling, problem.globs);
  r.bound = 1e-10;
  r.passed = r.measured <= r.bound;
  return r;
}

CheckResult check_loewner_bounds(const Problem& problem) {
  CheckResult r;
  r.name = "parallel-sum and Schur Loewner bounds";
  r.bound = -1e-10;
  double worst = 0.0;
  for (const Glob& g : problem.globs.globs) {
    if (g.kind == GlobKind::vertex) continue;
    std::vector<Matrix> schur;
    for (int sd : g.sharers) {
      const Matrix principal = glob_principal_block(problem.ops[sd], g);
      schur.push_back(glob_schur_block(problem.ops[sd], g));
      const double scale = principal.norm();
      worst = std::min(worst, min_eigenvalue(principal - schur.back()) / scale);
    }
    const Matrix ps = parallel_sum(schur);
    for (const Matrix& s : schur) {
      worst = std::min(worst, min_eigenvalue(s - ps) / s.norm());
    }
  }
  r.measured = worst;
  r.passed = worst >= r.bound;
  r.detail = "smallest relative eigenvalue of the differences";
  return r;
}

CheckResult check_pencil_residuals(const std::vector<GevpReport>& reports) {
  CheckResult r;
  r.name = "pencil residuals";
  r.bound = 1e-9;
  double worst = 0.0;
  for (const GevpReport& rep : reports) {
    const double rhs_norm = rep.rhs.norm();
    for (int k = 0; k < rep.pairs.size(); ++k) {
      if (rep.pairs.degenerate[k]) continue;
      const Vector v = rep.pairs.vectors.col(k);
      const double lam = rep.pairs.values[k];
      const Vector lv = rep.lhs * v;
      const Vector rv = rep.rhs * v;
      double res = 0.0;
      if (std::isinf(lam)) {
        res = rv.norm() / (rhs_norm * v.norm());
      } else {
        res = (lv - lam * rv).norm() / (lv.norm() + std::abs(lam) * rv.norm());
      }
      worst = std::max(worst, res);
    }
  }
  r.measured = worst;
  r.passed = worst <= r.bound;
  return r;
}

std::vector<CheckResult> check_jump_estimates(const Problem& problem,
                                              const CoarseSpace& coarse,
                                              EdgeVariant variant, std::uint64_t seed,
                                              int samples) {
  std::mt19937_64 gen(seed);
  const Thresholds t = problem.spec.thresholds();
  std::vector<PriorDirections> priors;
  if (variant == EdgeVariant::difference) {
    priors = prior_directions(problem.ops, problem.globs, coarse.basis);
  }
  CheckResult face{"face jump estimate (2 Theta_F)", true, 0.0, 1.0, ""};
  CheckResult edge{variant == EdgeVariant::pairwise
                       ? "edge jump estimate, pairwise pencil (2 Theta_E)"
                       : "edge jump estimate, difference pencil (2(|n(E)|-1) Theta_E)",
                   true, 0.0, 1.0, ""};
  int face_count = 0, edge_count = 0;

  for (const Glob& g : problem.globs.globs) {
    if (g.kind == GlobKind::vertex) continue;
    const int n = g.size();
    const int s = static_cast<int>(g.sharers.size());
    const GlobBasis& gb = coarse.basis.globs[static_cast<std::size_t>(g.id)];
    const Matrix qp = gb.q.leftCols(gb.n_primal);
    std::vector<Matrix> principal, schur;
    for (int sd : g.sharers) {
      principal.push_back(glob_principal_block(problem.ops[sd], g));
      schur.push_back(glob_schur_block(problem.ops[sd], g));
    }
    Matrix shared_energy;
    const bool use_priors = g.kind == GlobKind::edge && variant == EdgeVariant::difference;
    if (use_priors) shared_energy = edge_energy_with_shared_priors(problem, g, priors);
    const double c = estimate_constant(g, variant, t);
    CheckResult& out = g.kind == GlobKind::face ? face : edge;
    (g.kind == GlobKind::face ? face_count : edge_count)++;

    for (int smp = 0; smp < samples; ++smp) {
      const Vector w0 = random_vector(n, gen);
      std::vector<Vector> w;
      for (int a = 0; a < s; ++a) {
        Vector wa = random_vector(n, gen);
        wa -= qp * (qp.transpose() * (wa - w0));
        w.push_back(wa);
      }
      Vector avg = Vector::Zero(n);
      for (int a = 0; a < s; ++a) avg += problem.scaling.of(g, g.sharers[a]) * w[a];
      double lhs = 0.0, rhs = 0.0;
      for (int a = 0; a < s; ++a) {
        const Vector jump = w[a] - avg;
        lhs += jump.dot(principal[a] * jump);
      }
      if (use_priors) {
        Vector stacked(s * n);
        for (int a = 0; a < s; ++a) stacked.segment(a * n, n) = w[a];
        rhs = stacked.dot(shared_energy * stacked);
      } else {
        for (int a = 0; a < s; ++a) rhs += w[a].dot(schur[a] * w[a]);
      }
      const double ratio = lhs / (c * rhs);
      out.measured = std::max(out.measured, ratio);
      if (lhs > c * rhs + 1e-8 * std::max(lhs, c * rhs)) {
        out.passed = false;
        out.detail = "glob " + std::to_string(g.id) + ": " + fmt(lhs) + " > " + fmt(c) +
                     " * " + fmt(rhs);
      }
    }
  }
  face.detail = face.detail.empty() ? std::to_string(face_count) + " faces, max LHS/(C RHS)"
                                    : face.detail;
  edge.detail = edge.detail.empty() ? std::to_string(edge_count) + " edges, max LHS/(C RHS)"
                                    : edge.detail;
  return {face, edge};
}

CheckResult check_primal_continuity(const Problem& problem, const CoarseSpace& coarse,
                                    std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  CheckResult r;
  r.name = "primal continuity implies constraints";
  r.bound = 1e-9;
  std::map<int, const GevpReport*> report_of;
  for (const GevpReport& rep : coarse.reports) report_of[rep.glob_id] = &rep;
  double worst = 0.0;
  for (const Glob& g : problem.globs.globs) {
    const auto it = report_of.find(g.id);
    if (it == report_of.end()) continue;
    const GevpReport& rep = *it->second;
    const GlobBasis& gb = coarse.basis.globs[static_cast<std::size_t>(g.id)];
    const int n = g.size();
    const int s = static_cast<int>(g.sharers.size());
    const Vector common = random_vector(gb.n_primal, gen);
    std::vector<Vector> w;
    for (int a = 0; a < s; ++a) {
      Vector wbar = random_vector(n, gen);
      wbar.head(gb.n_primal) = common;
      w.push_back(gb.q * wbar);
    }
    const Matrix& cg = rep.glob_constraints;
    if (cg.rows() > 0) {
      for (int a = 0; a < s; ++a) {
        for (int b = a + 1; b < s; ++b) {
          const Vector d = w[a] - w[b];
          worst = std::max(worst, (cg * d).norm() / (cg.norm() * d.norm()));
        }
      }
    }
    if (rep.kind == PencilKind::edge_new && rep.constraints.rows() > 0) {
      Vector stacked((s - 1) * n);
      for (int a = 1; a < s; ++a) stacked.segment((a - 1) * n, n) = w[a] - w[0];
      worst = std::max(worst, (rep.constraints * stacked).norm() /
                                  (rep.constraints.norm() * stacked.norm()));
    }
  }
  r.measured = worst;
  r.passed = worst <= r.bound;
  return r;
}

CheckResult check_projection(const Problem& problem, const BddcPreconditioner& pc,
                             std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  CheckResult r;
  r.name = "averaging operator is a projection";
  r.bound = 1e-10;
  const Vector coarse = random_vector(pc.coarse_size(), gen);
  CoupledVector w;
  for (std::size_t i = 0; i < problem.ops.size(); ++i) {
    Vector wi = random_vector(problem.ops[i].num_interface(), gen);
    const auto& pos = pc.primal_positions(static_cast<int>(i));
    const auto& ids = pc.primal_coarse_ids(static_cast<int>(i));
    for (std::size_t k = 0; k < pos.size(); ++k) wi[pos[k]] = coarse[ids[k]];
    w.push_back(wi);
  }
  const auto [e1, p1] = pc.averaging_and_jump(w);
  const auto [e2, p2] = pc.averaging_and_jump(e1);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < e1.size(); ++i) {
    num += (e2[i] - e1[i]).squaredNorm();
    den += e1[i].squaredNorm();
  }
  r.measured = std::sqrt(num / den);
  r.passed = r.measured <= r.bound;
  return r;
}

std::vector<CheckResult> check_field_of_values(const Problem& problem,
                                               const BddcPreconditioner& pc,
                                               std::uint64_t seed, int samples) {
  std::mt19937_64 gen(seed);
  const SchurOperator schur(problem.ops, problem.globs);
  double min_ratio = kInfinity, max_ratio = 0.0;
  for (int k = 0; k < samples; ++k) {
    const Vector w = random_vector(schur.size(), gen);
    const Vector bw = schur.apply_symmetric(w);
    const Vector tw = pc.apply(schur.apply(w));
    const double den = bw.dot(w);
    min_ratio = std::min(min_ratio, bw.dot(tw) / den);
    max_ratio = std::max(max_ratio, schur.apply_symmetric(tw).dot(tw) / den);
  }
  CheckResult pos{"field of values positive", min_ratio > 0.0, min_ratio, 0.0,
                  "min <B w, T w> / <B w, w>"};
  CheckResult bnd{"preconditioned operator bounded", max_ratio < 1e4, max_ratio, 1e4,
                  "max <B T w, T w> / <B w, w>"};
  return {pos, bnd};
}

CheckResult check_symmetric_limit(const Problem& problem, const BddcPreconditioner& pc) {
  CheckResult r;
  r.name = "symmetric limit spectrum";
  const SchurOperator schur(problem.ops, problem.globs);
  const Matrix s = schur.dense();
  const double asym = (s - s.transpose()).norm() / s.norm();
  Matrix t(s.rows(), s.cols());
  for (Eigen::Index c = 0; c < s.cols(); ++c) t.col(c) = pc.apply(s.col(c));
  Eigen::EigenSolver<Matrix> es(t, false);
  const Eigen::VectorXcd ev = es.eigenvalues();
  const double lmin = ev.real().minCoeff();
  const double lmax = ev.real().maxCoeff();
  const double imag = ev.imag().cwiseAbs().maxCoeff();
  const Thresholds th = problem.spec.thresholds();
  const double theta = std::max(th.face, th.edge);
  const double upper = 10.0 * 4.0 * theta * theta;
  r.measured = lmin;
  r.bound = 1.0 - 1e-8;
  r.passed = asym < 1e-10 && lmin >= r.bound && lmax <= upper && imag <= 1e-6 * lmax;
  r.detail = "lambda in [" + fmt(lmin) + ", " + fmt(lmax) + "], envelope " + fmt(upper) +
             ", operator asymmetry " + fmt(asym);
  return r;
}

CheckResult check_linearity(const BddcPreconditioner& pc, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  CheckResult r;
  r.name = "preconditioner linearity";
  r.bound = 1e-12;
  double worst = 0.0;
  for (int k = 0; k < 5; ++k) {
    const Vector x = random_vector(pc.size(), gen);
    const Vector y = random_vector(pc.size(), gen);
    const double a = std::normal_distribution<double>()(gen);
    const double b = std::normal_distribution<double>()(gen);
    const Vector mx = pc.apply(x), my = pc.apply(y);
    const Vector lhs = pc.apply(a * x + b * y);
    const double scale = std::abs(a) * mx.norm() + std::abs(b) * my.norm();
    worst = std::max(worst, (lhs - a * mx - b * my).norm() / scale);
  }
  r.measured = worst;
  r.passed = worst <= r.bound;
  return r;
}

std::vector<CheckResult> run_invariant_suite(std::uint64_t seed) {
  std::vector<CheckResult> all;
  auto add = [&all](const std::string& tag, CheckResult c) {
    c.name += " [" + tag + "]";
    all.push_back(std::move(c));
  };

  std::vector<ProblemSpec> specs;
  {
    ProblemSpec s;
    s.label = "test1 m=4";
    s.cells_per_subdomain = 4;
    s.viscosity.kind = ViscosityKind::subdomain_test;
    s.viscosity.test = 1;
    s.viscosity.nu1 = 1e-1;
    s.viscosity.nu2 = 1e-5;
    specs.push_back(s);
  }
  {
    ProblemSpec s;
    s.label = "random 2(4)";
    s.cells_per_subdomain = 4;
    s.viscosity.kind = ViscosityKind::random;
    s.viscosity.seed = seed;
    specs.push_back(s);
  }
  {
    ProblemSpec s;
    s.label = "irregular h=1/10 N=8";
    s.partition = PartitionKind::irregular;
    s.global_cells = 10;
    s.subdomains = 8;
    s.partition_seed = seed;
    s.viscosity.kind = ViscosityKind::random;
    s.viscosity.seed = seed;
    specs.push_back(s);
  }

  for (const ProblemSpec& spec : specs) {
    const Problem p = build_problem(spec);
    add(spec.label, check_partition_of_unity(p));
    add(spec.label, check_loewner_bounds(p));
    for (EdgeVariant v : {EdgeVariant::pairwise, EdgeVariant::difference}) {
      const std::string tag = spec.label + ", " + std::string(to_string(v));
      const CoarseSpace cs = build_adaptive_primal_space(p.ops, p.globs, p.scaling, v,
                                                         spec.thresholds());
      add(tag, check_pencil_residuals(cs.reports));
      for (auto& c : check_jump_estimates(p, cs, v, seed)) add(tag, c);
      add(tag, check_primal_continuity(p, cs, seed));
      const BddcPreconditioner pc(p.ops, p.globs, cs.basis, p.scaling);
      add(tag, check_projection(p, pc, seed));
      for (auto& c : check_field_of_values(p, pc, seed)) add(tag, c);
      add(tag, check_linearity(pc, seed));
    }
  }

  ProblemSpec sym = specs.front();
  sym.label = "zero velocity, test1 m=4";
  sym.velocity = VelocityKind::zero;
  const Problem p = build_problem(sym);
  for (EdgeVariant v : {EdgeVariant::pairwise, EdgeVariant::difference}) {
    const CoarseSpace cs =
        build_adaptive_primal_space(p.ops, p.globs, p.scaling, v, sym.thresholds());
    const BddcPreconditioner pc(p.ops, p.globs, cs.basis, p.scaling);
    add(sym.label + ", " + std::string(to_string(v)), check_symmetric_limit(p, pc));
  }
  return all;
}

}  // namespace abddc
