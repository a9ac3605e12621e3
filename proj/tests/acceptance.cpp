// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "abddc/harness.hpp"
#include "abddc/invariants.hpp"

using namespace abddc;

namespace {

struct Outcome {
  bool passed = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      passed = false;
      detail += "[fail] " + what + "; ";
    }
  }
  void note(const std::string& what) { detail += what + "; "; }
};

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string cell(const ResultRow& r) {
  return format_cell(r.iterations, r.pnum_face, r.pnum_edge) + (r.converged ? "" : "*");
}

ProblemSpec regular_spec(int m, int test, double nu1, double nu2) {
  ProblemSpec s;
  s.cells_per_subdomain = m;
  s.viscosity.kind = ViscosityKind::subdomain_test;
  s.viscosity.test = test;
  s.viscosity.nu1 = nu1;
  s.viscosity.nu2 = nu2;
  s.label = "m=" + std::to_string(m) + " test" + std::to_string(test) + " nu=" +
            fmt_double(nu1) + ":" + fmt_double(nu2);
  return s;
}

ProblemSpec random_spec(int m) {
  ProblemSpec s;
  s.cells_per_subdomain = m;
  s.viscosity.kind = ViscosityKind::random;
  s.viscosity.seed = 2024;
  s.label = "random 2(" + std::to_string(m) + ")";
  return s;
}

ProblemSpec irregular_spec(int n) {
  ProblemSpec s;
  s.partition = PartitionKind::irregular;
  s.global_cells = 20;
  s.subdomains = n;
  s.partition_seed = 2024;
  s.viscosity.kind = ViscosityKind::random;
  s.viscosity.seed = 2024;
  s.label = "irregular 1/h=20 N=" + std::to_string(n);
  return s;
}

double relative(const Vector& a, const Vector& b) { return (a - b).norm() / b.norm(); }

Outcome oracle_equivalence() {
  Outcome o;
  const Problem p = build_problem(regular_spec(4, 1, 1e-1, 1e-5));
  const SchurOperator schur(p.ops, p.globs);
  const Vector direct = direct_schur_solve(schur, schur.condensed_rhs());
  const Vector global = solve_global_direct(p.system);
  for (EdgeVariant v : {EdgeVariant::pairwise, EdgeVariant::difference}) {
    const VariantRun run = solve_variant(p, v);
    const double e_iface = relative(run.report.solution, direct);
    const Vector full = recover_interior(p.ops, p.globs, p.system, run.report.solution);
    const double e_full = relative(full, global);
    const std::string tag(to_string(v));
    o.require(run.report.converged, tag + " converged");
    o.require(e_iface <= 1e-6, tag + " interface error " + fmt_double(e_iface));
    o.require(e_full <= 1e-8, tag + " full-solution error " + fmt_double(e_full));
    o.note(tag + ": " + cell(run.row) + ", interface " + fmt_double(e_iface) + ", full " +
           fmt_double(e_full));
  }
  return o;
}

struct ReferenceCell {
  int test;
  double nu1, nu2;
  int old_iters, new_iters;
};

Outcome table_one() {
  Outcome o;
  const std::vector<ReferenceCell> cells{
      {1, 1e-1, 1e-5, 10, 9}, {2, 1e-1, 1e-5, 9, 9},  {3, 1e-1, 1e-5, 9, 9},
      {1, 1e-1, 1e-7, 10, 9}, {2, 1e-1, 1e-7, 9, 9},  {3, 1e-1, 1e-7, 9, 9},
      {1, 1.0, 1e-7, 9, 10},  {2, 1.0, 1e-7, 9, 11},  {3, 1.0, 1e-7, 7, 10}};
  for (const ReferenceCell& c : cells) {
    const Problem p = build_problem(regular_spec(6, c.test, c.nu1, c.nu2));
    const ResultRow old_row = solve_variant(p, EdgeVariant::pairwise).row;
    const ResultRow new_row = solve_variant(p, EdgeVariant::difference).row;
    const std::string tag = p.spec.label;
    o.require(old_row.converged && new_row.converged, tag + " converged");
    o.require(old_row.iterations <= std::min(2 * c.old_iters, 25), tag + " old iterations");
    o.require(new_row.iterations <= std::min(2 * c.new_iters, 25), tag + " new iterations");
    o.require(old_row.pnum_face == new_row.pnum_face, tag + " pnumF equal");
    o.require(new_row.pnum_edge <= old_row.pnum_edge, tag + " pnumE(new) <= pnumE(old)");
    o.note(tag + " " + cell(old_row) + "/" + cell(new_row));
  }
  return o;
}

Outcome table_two() {
  Outcome o;
  struct Row {
    int m;
    int old_iters[3], new_iters[3];
  };
  const std::vector<Row> rows{{4, {8, 9, 7}, {9, 10, 9}}, {8, {10, 10, 7}, {11, 12, 15}}};
  for (const Row& r : rows) {
    int strictly_fewer = 0;
    for (int t = 1; t <= 3; ++t) {
      const Problem p = build_problem(regular_spec(r.m, t, 1.0, 1e-7));
      const ResultRow old_row = solve_variant(p, EdgeVariant::pairwise).row;
      const ResultRow new_row = solve_variant(p, EdgeVariant::difference).row;
      const std::string tag = p.spec.label;
      o.require(old_row.converged && new_row.converged, tag + " converged");
      o.require(old_row.iterations <= 2 * r.old_iters[t - 1], tag + " old iterations");
      o.require(new_row.iterations <= 2 * r.new_iters[t - 1], tag + " new iterations");
      o.require(new_row.pnum_edge <= old_row.pnum_edge, tag + " pnumE(new) <= pnumE(old)");
      if (old_row.pnum_edge > 0 && new_row.pnum_edge < old_row.pnum_edge) ++strictly_fewer;
      o.note(tag + " " + cell(old_row) + "/" + cell(new_row));
    }
    o.require(strictly_fewer >= 2, "m=" + std::to_string(r.m) + " strict pnumE reduction in " +
                                       std::to_string(strictly_fewer) + " of 3 tests");
  }
  return o;
}

Outcome random_viscosity_case() {
  Outcome o;
  for (int m : {4, 8}) {
    const Problem p = build_problem(random_spec(m));
    const ResultRow old_row = solve_variant(p, EdgeVariant::pairwise).row;
    const ResultRow new_row = solve_variant(p, EdgeVariant::difference).row;
    const std::string tag = p.spec.label;
    o.require(old_row.converged && old_row.iterations <= 60, tag + " old within 60");
    o.require(new_row.converged && new_row.iterations <= 60, tag + " new within 60");
    o.require(new_row.pnum_edge <= old_row.pnum_edge, tag + " pnumE(new) <= pnumE(old)");
    o.note(tag + " " + cell(old_row) + "/" + cell(new_row));
  }
  return o;
}

Outcome irregular_case() {
  Outcome o;
  constexpr int kRepetitions = 3;
  int faster = 0;
  for (int n : {8, 27}) {
    const Problem p = build_problem(irregular_spec(n));
    ResultRow best[2];
    for (int rep = 0; rep < kRepetitions; ++rep) {
      for (int k = 0; k < 2; ++k) {
        const EdgeVariant v = k == 0 ? EdgeVariant::pairwise : EdgeVariant::difference;
        const ResultRow row = solve_variant(p, v).row;
        if (rep == 0 || row.total_s() < best[k].total_s()) best[k] = row;
      }
    }
    const ResultRow& old_row = best[0];
    const ResultRow& new_row = best[1];
    const std::string tag = p.spec.label;
    o.require(old_row.converged && old_row.iterations <= 60, tag + " old within 60");
    o.require(new_row.converged && new_row.iterations <= 60, tag + " new within 60");
    o.require(new_row.coarse_size <= old_row.coarse_size,
              tag + " coarse size " + std::to_string(new_row.coarse_size) + " > " +
                  std::to_string(old_row.coarse_size));
    if (new_row.total_s() <= old_row.total_s()) ++faster;
    o.note(tag + " " + cell(old_row) + "/" + cell(new_row) + ", coarse " +
           std::to_string(old_row.coarse_size) + "/" + std::to_string(new_row.coarse_size) +
           ", total s " + fmt_double(old_row.total_s()) + "/" + fmt_double(new_row.total_s()));
  }
  o.require(faster >= 1, "new variant not faster on any configuration");
  return o;
}

Outcome invariant_suite() {
  Outcome o;
  int passed = 0, total = 0;
  for (const CheckResult& c : run_invariant_suite()) {
    ++total;
    if (c.passed) {
      ++passed;
    } else {
      o.require(false, c.name + " measured " + fmt_double(c.measured) + " vs " +
                           fmt_double(c.bound));
    }
  }
  o.note(std::to_string(passed) + "/" + std::to_string(total) + " checks");
  return o;
}

Outcome full_primal_limit() {
  Outcome o;
  for (const ProblemSpec& spec : {regular_spec(4, 1, 1e-1, 1e-5), random_spec(4)}) {
    const Problem p = build_problem(spec);
    const PrimalBasis full = full_primal_basis(p.globs);
    const BddcPreconditioner pc(p.ops, p.globs, full, p.scaling);
    const SchurOperator schur(p.ops, p.globs);
    const SolveReport rep = gmres_solve([&](const Vector& x) { return schur.apply(x); },
                                        schur.condensed_rhs(),
                                        [&](const Vector& r) { return pc.apply(r); });
    o.require(rep.converged && rep.iterations == 1,
              spec.label + " took " + std::to_string(rep.iterations) + " iterations");
    o.note(spec.label + ": " + std::to_string(rep.iterations) + " iteration(s)");
  }
  return o;
}

Outcome manufactured() {
  Outcome o;
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  constexpr double kAdvection = 0.1;
  auto bubble = [](double t) { return t * (1.0 - t); };
  auto slope = [](double t) { return 1.0 - 2.0 * t; };
  ManufacturedProblem mp;
  mp.box = Box{};
  mp.exact = [=](const Vec3& x) { return bubble(x[0]) * bubble(x[1]) * bubble(x[2]); };
  Coefficients& c = mp.coefficients;
  c.viscosity = [](int) { return 1.0; };
  c.velocity = [=](const Vec3& x) {
    return Vec3{-kTwoPi * kAdvection * x[1], kTwoPi * kAdvection * x[0],
                kAdvection * std::sin(kTwoPi * x[0])};
  };
  c.velocity_divergence = [](const Vec3&) { return 0.0; };
  c.reaction = [](const Vec3&) { return 1.0; };
  c.dirichlet = [](const Vec3&) { return 0.0; };
  c.source = [=](const Vec3& x) {
    const double bx = bubble(x[0]), by = bubble(x[1]), bz = bubble(x[2]);
    const double laplacian = -2.0 * (by * bz + bx * bz + bx * by);
    const Vec3 a = c.velocity(x);
    const double advection =
        a[0] * slope(x[0]) * by * bz + a[1] * bx * slope(x[1]) * bz + a[2] * bx * by * slope(x[2]);
    return -laplacian + advection + bx * by * bz;
  };
  const std::vector<int> cells{4, 8};
  const auto rows = manufactured_solution_check(mp, cells);
  o.require(rows.size() == 2 && rows[1].ratio >= 3.4, "ratio " + fmt_double(rows.back().ratio));
  o.note("L2 errors " + fmt_double(rows[0].l2_error) + ", " + fmt_double(rows[1].l2_error) +
         ", ratio " + fmt_double(rows[1].ratio));
  return o;
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 oracle equivalence (m=4, N=8)", oracle_equivalence},
      {"2 Table-1 regression (m=6)", table_one},
      {"3 Table-2 trend (m=4,8; nu=1:1e-7)", table_two},
      {"4 random viscosity 2(4), 2(8)", random_viscosity_case},
      {"5 irregular partitions 1/h=20, N=8,27", irregular_case},
      {"6 invariant suite", invariant_suite},
      {"7 full-primal limit", full_primal_limit},
      {"8 manufactured solution convergence", manufactured},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& ex) {
      o.passed = false;
      o.detail = std::string("exception: ") + ex.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %s (%.1f s): %s\n", o.passed ? "PASS" : "FAIL", name.c_str(), secs,
                o.detail.c_str());
    std::fflush(stdout);
    if (!o.passed) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
