#include "abddc/discretization.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include <Eigen/SparseLU>

namespace abddc {

namespace {

// Degree-2 rule with four interior points, equal weights.
constexpr double kQa = 0.5854101966249685;
constexpr double kQb = 0.1381966011250105;

// Degree-3 rule: centroid (-4/5) and four points (1/2,1/6,1/6,1/6) (9/20).
constexpr double kErrW0 = -0.8;
constexpr double kErrW1 = 0.45;

Vec3 barycentric_point(const std::array<Vec3, 4>& v,
                       const std::array<double, 4>& lam) {
  Vec3 p{0.0, 0.0, 0.0};
  for (int a = 0; a < 4; ++a) {
    for (int d = 0; d < 3; ++d) p[d] += lam[a] * v[a][d];
  }
  return p;
}

double norm3(const Vec3& a) {
  return std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
}

// Gradients of the four barycentric functions, one per row.
Eigen::Matrix<double, 4, 3> p1_gradients(const std::array<Vec3, 4>& v) {
  Eigen::Matrix3d jac;
  for (int c = 0; c < 3; ++c) {
    for (int d = 0; d < 3; ++d) jac(d, c) = v[c + 1][d] - v[0][d];
  }
  const Eigen::Matrix3d inv = jac.inverse();
  Eigen::Matrix<double, 4, 3> g;
  g.bottomRows<3>() = inv;
  g.row(0) = -inv.colwise().sum();
  return g;
}

double divergence_fd(const VectorField& a, const Vec3& x) {
  constexpr double h = 1e-6;
  double div = 0.0;
  for (int d = 0; d < 3; ++d) {
    Vec3 p = x, m = x;
    p[d] += h;
    m[d] -= h;
    div += (a(p)[d] - a(m)[d]) / (2.0 * h);
  }
  return div;
}

}  // namespace

double peclet(double elem_diameter, double velocity_sup, double viscosity) {
  if (!(viscosity > 0.0)) {
    throw std::invalid_argument("peclet: viscosity must be positive");
  }
  return elem_diameter * velocity_sup / (2.0 * viscosity);
}

double stabilization_coefficient(double elem_diameter, double velocity_sup,
                                 double viscosity, double tau) {
  if (!(elem_diameter > 0.0)) {
    throw std::invalid_argument("stabilization_coefficient: diameter must be positive");
  }
  if (peclet(elem_diameter, velocity_sup, viscosity) >= 1.0) {
    return tau * elem_diameter / (2.0 * velocity_sup);
  }
  return tau * elem_diameter * elem_diameter / (4.0 * viscosity);
}

ElementSystem integrate_elements(const Mesh& mesh, const Coefficients& coeffs) {
  const int ne = mesh.num_elements();
  ElementSystem es;
  es.connectivity = mesh.elements;
  es.sym.resize(ne);
  es.skew.resize(ne);
  es.load.resize(ne);
  es.stabilization.resize(ne);

  static constexpr std::array<std::array<double, 4>, 4> kPoints{{
      {kQa, kQb, kQb, kQb}, {kQb, kQa, kQb, kQb},
      {kQb, kQb, kQa, kQb}, {kQb, kQb, kQb, kQa}}};

  for (int e = 0; e < ne; ++e) {
    const auto v = mesh.vertices(e);
    const double vol = tet_signed_volume(v);
    const double h = tet_diameter(v);
    const double nu = coeffs.viscosity(e);
    if (!(nu > 0.0)) {
      throw PreconditionViolation(
          "non-positive viscosity on element " + std::to_string(e), e);
    }
    const auto grad = p1_gradients(v);

    double a_sup = norm3(coeffs.velocity(barycentric_point(v, {0.25, 0.25, 0.25, 0.25})));
    for (const auto& p : v) a_sup = std::max(a_sup, norm3(coeffs.velocity(p)));
    const double stab = stabilization_coefficient(h, a_sup, nu, coeffs.tau);
    es.stabilization[e] = stab;

    Eigen::Matrix4d sym = nu * vol * grad * grad.transpose();
    Eigen::Matrix4d skew = Eigen::Matrix4d::Zero();
    Eigen::Vector4d load = Eigen::Vector4d::Zero();
    const double w = vol / 4.0;
    for (const auto& lam : kPoints) {
      const Vec3 x = barycentric_point(v, lam);
      const Vec3 a = coeffs.velocity(x);
      const double c = coeffs.reaction(x);
      const double div = coeffs.velocity_divergence
                             ? coeffs.velocity_divergence(x)
                             : divergence_fd(coeffs.velocity, x);
      const double ctil = c - 0.5 * div;
      if (ctil < coeffs.c0) {
        std::ostringstream os;
        os << "reaction condition c - div(a)/2 >= c0 violated on element " << e
           << " (value " << ctil << ")";
        throw PreconditionViolation(os.str(), e);
      }
      const double f = coeffs.source(x);
      const Eigen::Vector3d av(a[0], a[1], a[2]);
      const Eigen::Vector4d adv = grad * av;  // a . grad(phi_k)
      const Eigen::Vector4d phi(lam[0], lam[1], lam[2], lam[3]);
      const Eigen::Vector4d lphi = adv + c * phi;
      sym += w * (stab * lphi * lphi.transpose() + ctil * phi * phi.transpose());
      // Row = test function, column = trial function.
      skew += w * 0.5 * (phi * adv.transpose() - adv * phi.transpose());
      load += w * f * (phi + stab * lphi);
    }
    es.sym[e] = 0.5 * (sym + sym.transpose());
    es.skew[e] = skew;
    es.load[e] = load;
  }
  return es;
}

AssembledSystem assemble_system(const Mesh& mesh, const Coefficients& coeffs) {
  AssembledSystem sys;
  const int nn = mesh.num_nodes();
  sys.node_to_free.assign(nn, -1);
  sys.lifting = Vector::Zero(nn);
  for (int n = 0; n < nn; ++n) {
    if (mesh.on_boundary(n)) {
      sys.lifting[n] = coeffs.dirichlet(mesh.nodes[n]);
    } else {
      sys.node_to_free[n] = static_cast<int>(sys.free_to_node.size());
      sys.free_to_node.push_back(n);
    }
  }
  sys.elements = integrate_elements(mesh, coeffs);

  const int nf = sys.num_free();
  std::vector<Eigen::Triplet<double>> ts, tk;
  ts.reserve(16 * static_cast<std::size_t>(mesh.num_elements()));
  tk.reserve(ts.capacity());
  sys.rhs = Vector::Zero(nf);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const Tet& t = sys.elements.connectivity[e];
    const Eigen::Matrix4d& bs = sys.elements.sym[e];
    const Eigen::Matrix4d& zs = sys.elements.skew[e];
    for (int a = 0; a < 4; ++a) {
      const int ra = sys.node_to_free[t[a]];
      if (ra < 0) continue;
      sys.rhs[ra] += sys.elements.load[e][a];
      for (int b = 0; b < 4; ++b) {
        const int cb = sys.node_to_free[t[b]];
        if (cb < 0) {
          sys.rhs[ra] -= (bs(a, b) + zs(a, b)) * sys.lifting[t[b]];
        } else {
          ts.emplace_back(ra, cb, bs(a, b));
          tk.emplace_back(ra, cb, zs(a, b));
        }
      }
    }
  }
  sys.sym_part.resize(nf, nf);
  sys.sym_part.setFromTriplets(ts.begin(), ts.end());
  sys.skew_part.resize(nf, nf);
  sys.skew_part.setFromTriplets(tk.begin(), tk.end());
  sys.matrix = sys.sym_part + sys.skew_part;
  return sys;
}

Vector to_nodal(const AssembledSystem& system, const Vector& free_values) {
  Vector u = system.lifting;
  for (int k = 0; k < system.num_free(); ++k) {
    u[system.free_to_node[k]] += free_values[k];
  }
  return u;
}

Vector solve_global_direct(const AssembledSystem& system) {
  Eigen::SparseLU<SparseMatrix> lu;
  lu.compute(system.matrix);
  if (lu.info() != Eigen::Success) {
    throw std::runtime_error("global sparse LU failed: " + lu.lastErrorMessage());
  }
  const Vector x = lu.solve(system.rhs);
  return to_nodal(system, x);
}

double l2_error(const Mesh& mesh, const Vector& nodal, const ScalarField& exact) {
  static constexpr std::array<double, 4> kCentroid{0.25, 0.25, 0.25, 0.25};
  static constexpr double s = 1.0 / 6.0;
  static constexpr std::array<std::array<double, 4>, 4> kPts{{
      {0.5, s, s, s}, {s, 0.5, s, s}, {s, s, 0.5, s}, {s, s, s, 0.5}}};
  double sum = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto v = mesh.vertices(e);
    const Tet& t = mesh.elements[e];
    const double vol = tet_signed_volume(v);
    auto err2 = [&](const std::array<double, 4>& lam) {
      double uh = 0.0;
      for (int a = 0; a < 4; ++a) uh += lam[a] * nodal[t[a]];
      const double d = exact(barycentric_point(v, lam)) - uh;
      return d * d;
    };
    double local = kErrW0 * err2(kCentroid);
    for (const auto& lam : kPts) local += kErrW1 * err2(lam);
    sum += vol * local;
  }
  return std::sqrt(std::max(sum, 0.0));
}

std::vector<ConvergenceRow> manufactured_solution_check(
    const ManufacturedProblem& problem, std::span<const int> cells_per_axis) {
  std::vector<ConvergenceRow> rows;
  for (int cells : cells_per_axis) {
    const Mesh mesh = build_structured_mesh({cells, cells, cells}, problem.box);
    const AssembledSystem sys = assemble_system(mesh, problem.coefficients);
    const Vector u = solve_global_direct(sys);
    ConvergenceRow row;
    row.cells = cells;
    row.h = (problem.box.hi[0] - problem.box.lo[0]) / cells;
    row.l2_error = l2_error(mesh, u, problem.exact);
    if (!rows.empty() && row.l2_error > 0.0) {
      row.ratio = rows.back().l2_error / row.l2_error;
    }
    rows.push_back(row);
  }
  return rows;
}

Box example_one_box() { return Box{{-0.5, -0.5, 0.0}, {0.5, 0.5, 1.0}}; }

Coefficients example_one_coefficients(std::function<double(int)> viscosity) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  Coefficients c;
  c.viscosity = std::move(viscosity);
  c.velocity = [](const Vec3& x) {
    return Vec3{-two_pi * x[1], two_pi * x[0], std::sin(two_pi * x[0])};
  };
  c.velocity_divergence = [](const Vec3&) { return 0.0; };
  c.reaction = [](const Vec3&) { return 1.0; };
  c.source = [](const Vec3&) { return 0.0; };
  const double zlo = example_one_box().lo[2];
  c.dirichlet = [zlo](const Vec3& x) { return x[2] == zlo ? 1.0 : 0.0; };
  c.tau = 0.7;
  return c;
}

void write_coordinate(const SparseMatrix& m, std::ostream& os) {
  const auto prec = os.precision(17);
  for (int k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
      os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
    }
  }
  os.precision(prec);
}

}  // namespace abddc
