#include <doctest.h>

#include <map>

#include "abddc/bddc.hpp"
#include "abddc/substructuring.hpp"
#include "fixtures.hpp"

using namespace abddc;

namespace {

std::vector<bool> dirichlet_of(const AssembledSystem& sys) {
  std::vector<bool> d(static_cast<std::size_t>(sys.num_nodes()));
  for (int v = 0; v < sys.num_nodes(); ++v) d[v] = sys.is_dirichlet(v);
  return d;
}

Coefficients pure_diffusion() {
  Coefficients c;
  c.viscosity = [](int) { return 1.0; };
  c.velocity = [](const Vec3&) { return Vec3{0.0, 0.0, 0.0}; };
  c.velocity_divergence = [](const Vec3&) { return 0.0; };
  c.reaction = [](const Vec3&) { return 1.0; };
  c.source = [](const Vec3&) { return 1.0; };
  c.dirichlet = [](const Vec3&) { return 0.0; };
  return c;
}

Glob whole_interface(const SubdomainOperator& op) {
  Glob g;
  g.id = -1;
  g.dofs = op.interface_dofs;
  g.nodes = op.interface_dofs;
  g.sharers = {op.subdomain};
  return g;
}

}  // namespace

TEST_CASE("a single subdomain has no interface and is rejected") {
  const Mesh mesh = build_structured_mesh({2, 2, 2}, Box{});
  const AssembledSystem sys = assemble_system(mesh, pure_diffusion());
  const Partition p = partition_regular(mesh, {1, 1, 1});
  const GlobSet globs = classify_globs(mesh, p, dirichlet_of(sys));
  CHECK_THROWS_AS(build_subdomain_operator(sys, p, globs, 0), std::invalid_argument);
}

TEST_CASE("two mirrored subdomains have equal Schur complements") {
  // The point reflection through the box centre maps the Kuhn mesh to itself
  // and swaps the two halves of a 2x1x1 partition.
  const Mesh mesh = build_structured_mesh({4, 4, 4}, Box{});
  const AssembledSystem sys = assemble_system(mesh, pure_diffusion());
  const Partition p = partition_regular(mesh, {2, 1, 1});
  const GlobSet globs = classify_globs(mesh, p, dirichlet_of(sys));
  const auto ops = build_subdomain_operators(sys, p, globs);
  REQUIRE(ops.size() == 2);
  for (const auto& op : ops) CHECK((op.schur - op.schur.transpose()).norm() < 1e-12 * op.schur.norm());

  std::map<std::array<long, 3>, int> node_at;
  auto key = [](const Vec3& x) {
    return std::array<long, 3>{std::lround(x[0] * 1e6), std::lround(x[1] * 1e6),
                               std::lround(x[2] * 1e6)};
  };
  for (int v = 0; v < mesh.num_nodes(); ++v) node_at[key(mesh.nodes[v])] = v;
  const int nb = ops[0].num_interface();
  REQUIRE(ops[1].num_interface() == nb);
  std::vector<int> mirror(static_cast<std::size_t>(nb));
  for (int k = 0; k < nb; ++k) {
    const Vec3& x = mesh.nodes[globs.interface_nodes[ops[0].interface_dofs[k]]];
    const int w = node_at.at(key(Vec3{1.0 - x[0], 1.0 - x[1], 1.0 - x[2]}));
    mirror[k] = ops[1].local_of[globs.node_to_interface[w]];
  }
  double diff = 0.0;
  for (int r = 0; r < nb; ++r) {
    for (int c = 0; c < nb; ++c) {
      diff = std::max(diff, std::abs(ops[0].schur(r, c) - ops[1].schur(mirror[r], mirror[c])));
    }
  }
  CHECK(diff <= 1e-10 * ops[0].schur.norm());
}

TEST_CASE("Schur complement, split and condensed right-hand side match dense formulas") {
  const Problem& p = fixtures::small_problem();
  for (const SubdomainOperator& op : p.ops) {
    const Matrix aii(op.a_ii);
    const Matrix aib(op.a_ib);
    const Matrix abi(op.a_bi);
    const Matrix s = op.a_bb - abi * aii.inverse() * aib;
    CHECK((op.schur - s).norm() <= 1e-10 * s.norm());
    CHECK((op.sym + op.skew - op.schur).norm() <= 1e-12 * s.norm());
    CHECK((op.sym - op.sym.transpose()).norm() == 0.0);
    CHECK((op.skew + op.skew.transpose()).norm() == 0.0);
    const Vector g = op.f_b - abi * aii.inverse() * op.f_i;
    CHECK((op.condensed_rhs - g).norm() <= 1e-10 * std::max(1.0, g.norm()));
    CHECK((op.sym * op.sym_inverse - Matrix::Identity(op.num_interface(), op.num_interface()))
              .norm() < 1e-8);
  }
}

TEST_CASE("Schur energy equals the element energy of the harmonic extension") {
  const Problem& p = fixtures::small_problem();
  std::mt19937_64 gen(21);
  for (const SubdomainOperator& op : p.ops) {
    std::vector<int> elems;
    for (int e = 0; e < p.mesh.num_elements(); ++e) {
      if (p.partition.subdomain_of[e] == op.subdomain) elems.push_back(e);
    }
    for (int trial = 0; trial < 5; ++trial) {
      const Vector xb = fixtures::random_vector(op.num_interface(), gen);
      const Vector ui = op.harmonic_interior(xb);
      Vector nodal = Vector::Zero(p.mesh.num_nodes());
      for (int k = 0; k < op.num_interior(); ++k) {
        nodal[p.system.free_to_node[op.interior_free[k]]] = ui[k];
      }
      for (int k = 0; k < op.num_interface(); ++k) {
        nodal[p.globs.interface_nodes[op.interface_dofs[k]]] = xb[k];
      }
      double energy = 0.0;
      for (int e : elems) {
        Eigen::Vector4d ue;
        for (int a = 0; a < 4; ++a) ue[a] = nodal[p.mesh.elements[e][a]];
        energy += ue.dot((p.system.elements.sym[e] + p.system.elements.skew[e]) * ue);
      }
      const double s_energy = xb.dot(op.schur * xb);
      CHECK(std::abs(s_energy - energy) <= 1e-9 * std::abs(s_energy));
    }
  }
}

TEST_CASE("glob blocks: principal, Schur, Loewner order and minimal energy") {
  const Problem& p = fixtures::small_problem();
  std::mt19937_64 gen(22);
  const SubdomainOperator& op0 = p.ops[0];
  const Glob all = whole_interface(op0);
  CHECK((glob_principal_block(op0, all) - op0.sym).norm() == 0.0);
  CHECK((glob_schur_block(op0, all) - op0.sym).norm() == 0.0);

  for (const Glob& g : p.globs.globs) {
    for (int sd : g.sharers) {
      const SubdomainOperator& op = p.ops[sd];
      const auto idx = op.local_indices(g);
      const Matrix principal = glob_principal_block(op, g);
      const Matrix schur = glob_schur_block(op, g);
      if (g.kind == GlobKind::vertex) {
        CHECK(principal(0, 0) == op.sym(idx[0], idx[0]));
      }
      CHECK(fixtures::min_eigenvalue(principal) > 0.0);
      CHECK(fixtures::min_eigenvalue(principal - schur) >= -1e-10 * principal.norm());
      const Matrix oracle = schur_complement(op.sym, idx);
      CHECK((schur - oracle).norm() <= 1e-9 * oracle.norm());
      if (g.kind != GlobKind::face) continue;
      std::vector<char> in_glob(static_cast<std::size_t>(op.num_interface()), 0);
      for (int i : idx) in_glob[i] = 1;
      const Vector x = fixtures::random_vector(g.size(), gen);
      for (int trial = 0; trial < 20; ++trial) {
        Vector y = fixtures::random_vector(op.num_interface(), gen);
        for (std::size_t k = 0; k < idx.size(); ++k) y[idx[k]] = x[static_cast<Eigen::Index>(k)];
        CHECK(x.dot(schur * x) <= y.dot(op.sym * y) * (1.0 + 1e-12));
      }
    }
  }
  Glob foreign = p.globs.globs[0];
  int missing = 0;
  while (std::find(foreign.sharers.begin(), foreign.sharers.end(), missing) !=
         foreign.sharers.end()) {
    ++missing;
  }
  CHECK_THROWS_AS(glob_principal_block(p.ops[missing], foreign), std::invalid_argument);
}

TEST_CASE("edge block with priors matches a Schur complement in a rotated basis") {
  const Problem& p = fixtures::small_problem();
  std::mt19937_64 gen(23);
  for (const Glob& e : p.globs.globs) {
    if (e.kind != GlobKind::edge) continue;
    const SubdomainOperator& op = p.ops[e.sharers[0]];
    const auto idx = op.local_indices(e);
    const int nb = op.num_interface();
    const int ne = e.size();

    const PartitionedBlock empty = edge_block_with_priors(op, e, Matrix(nb, 0));
    CHECK((empty.ee() - glob_schur_block(op, e)).norm() <= 1e-9 * empty.ee().norm());

    // Two orthonormal priors supported away from the edge.
    Matrix raw = fixtures::random_matrix(nb, 2, gen);
    for (int i : idx) raw.row(i).setZero();
    const Eigen::HouseholderQR<Matrix> qr(raw);
    const Matrix priors = qr.householderQ() * Matrix::Identity(nb, 2);
    const PartitionedBlock blk = edge_block_with_priors(op, e, priors);
    CHECK((blk.full - blk.full.transpose()).norm() <= 1e-12 * blk.full.norm());
    CHECK(fixtures::min_eigenvalue(blk.hh()) >= -1e-10 * blk.full.norm());

    Matrix kept = Matrix::Zero(nb, ne + 2);
    for (int k = 0; k < ne; ++k) kept(idx[k], k) = 1.0;
    kept.rightCols(2) = priors;
    const Matrix t = orthonormal_completion(kept);
    const Matrix rotated = t.transpose() * op.sym * t;
    std::vector<int> keep(static_cast<std::size_t>(ne + 2));
    for (int k = 0; k < ne + 2; ++k) keep[k] = k;
    const Matrix oracle = schur_complement(rotated, keep);
    CHECK((blk.full - oracle).norm() <= 1e-8 * oracle.norm());

    // Dropping a prior column equals eliminating it from the full block.
    const PriorProducts products = prior_products(op, priors, op.sym_inverse * priors);
    const std::vector<int> first{0};
    const PartitionedBlock partial = edge_block_with_priors(op, e, products, first);
    std::vector<int> keep_first(static_cast<std::size_t>(ne + 1));
    for (int k = 0; k <= ne; ++k) keep_first[k] = k;
    const Matrix eliminated = schur_complement(blk.full, keep_first);
    CHECK((partial.full - eliminated).norm() <= 1e-8 * eliminated.norm());
    const std::vector<int> none;
    CHECK((edge_block_with_priors(op, e, products, none).full - glob_schur_block(op, e)).norm() <=
          1e-8 * empty.ee().norm());
    const std::vector<int> bad{2};
    CHECK_THROWS_AS(edge_block_with_priors(op, e, products, bad), std::invalid_argument);
    break;
  }
}

TEST_CASE("subassembled Schur operator equals the Schur complement of the global matrix") {
  const Problem& p = fixtures::small_problem();
  const SchurOperator schur(p.ops, p.globs);
  const Matrix a(p.system.matrix);
  std::vector<int> gamma, interior;
  std::vector<int> gamma_pos(static_cast<std::size_t>(p.system.num_free()), -1);
  for (int f = 0; f < p.system.num_free(); ++f) {
    const int d = p.globs.node_to_interface[p.system.free_to_node[f]];
    if (d >= 0) {
      gamma_pos[f] = d;
      gamma.push_back(f);
    } else {
      interior.push_back(f);
    }
  }
  const Matrix agg = sub_block(a, gamma, gamma);
  const Matrix agi = sub_block(a, gamma, interior);
  const Matrix aig = sub_block(a, interior, gamma);
  const Matrix aii = sub_block(a, interior, interior);
  const Matrix s = agg - agi * aii.lu().solve(aig);
  // Reorder rows/columns from free-node order to interface-dof order.
  Matrix s_dof(p.globs.num_interface(), p.globs.num_interface());
  for (std::size_t r = 0; r < gamma.size(); ++r) {
    for (std::size_t c = 0; c < gamma.size(); ++c) {
      s_dof(gamma_pos[gamma[r]], gamma_pos[gamma[c]]) =
          s(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
  }
  CHECK((schur.dense() - s_dof).norm() <= 1e-9 * s_dof.norm());
  std::mt19937_64 gen(24);
  const Vector x = fixtures::random_vector(schur.size(), gen);
  CHECK((schur.apply(x) - s_dof * x).norm() <= 1e-9 * (s_dof * x).norm());
}
