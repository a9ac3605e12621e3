#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "abddc/linalg.hpp"
#include "abddc/mesh.hpp"

namespace abddc {

/// Raised when the coefficients violate the coercivity assumption
/// c - div(a)/2 >= c0 on some element.
class PreconditionViolation : public std::runtime_error {
 public:
  PreconditionViolation(const std::string& what, int element)
      : std::runtime_error(what), element_(element) {}
  [[nodiscard]] int element() const { return element_; }

 private:
  int element_;
};

using ScalarField = std::function<double(const Vec3&)>;
using VectorField = std::function<Vec3(const Vec3&)>;

struct Coefficients {
  std::function<double(int)> viscosity;  ///< piecewise constant per element
  VectorField velocity;
  ScalarField velocity_divergence;  ///< optional; central differences if empty
  ScalarField reaction;
  ScalarField source;
  ScalarField dirichlet;
  double tau = 0.7;
  double c0 = 1e-12;
};

/// Elementwise Peclet number h |a|_inf / (2 nu).
double peclet(double elem_diameter, double velocity_sup, double viscosity);

/// Stabilization weight: tau h / (2|a|) in the advective regime (Pe >= 1),
/// tau h^2 / (4 nu) otherwise.
double stabilization_coefficient(double elem_diameter, double velocity_sup,
                                 double viscosity, double tau);

/// Per-element contributions of the symmetric form, the skew form and the
/// load, kept so that subdomain-restricted forms can be summed without
/// re-integrating.
struct ElementSystem {
  std::vector<Tet> connectivity;
  std::vector<Eigen::Matrix4d> sym;
  std::vector<Eigen::Matrix4d> skew;
  std::vector<Eigen::Vector4d> load;
  std::vector<double> stabilization;  ///< C on each element
};

/// Free-node system after Dirichlet lifting.
struct AssembledSystem {
  SparseMatrix matrix;     ///< sym_part + skew_part
  SparseMatrix sym_part;   ///< b(.,.)
  SparseMatrix skew_part;  ///< z(.,.)
  Vector rhs;
  std::vector<int> node_to_free;  ///< -1 on Dirichlet nodes
  std::vector<int> free_to_node;
  Vector lifting;  ///< nodal Dirichlet values, zero on free nodes
  ElementSystem elements;

  [[nodiscard]] int num_free() const {
    return static_cast<int>(free_to_node.size());
  }
  [[nodiscard]] int num_nodes() const {
    return static_cast<int>(node_to_free.size());
  }
  [[nodiscard]] bool is_dirichlet(int node) const {
    return node_to_free[static_cast<std::size_t>(node)] < 0;
  }
};

ElementSystem integrate_elements(const Mesh& mesh, const Coefficients& coeffs);

AssembledSystem assemble_system(const Mesh& mesh, const Coefficients& coeffs);

/// Global sparse direct solve; returns the nodal solution with Dirichlet
/// values filled in.
Vector solve_global_direct(const AssembledSystem& system);

/// Expands a free-node vector to nodal values, adding the lifting.
Vector to_nodal(const AssembledSystem& system, const Vector& free_values);

/// L2 norm of (exact - u_h) with a degree-3 rule.
double l2_error(const Mesh& mesh, const Vector& nodal, const ScalarField& exact);

struct ManufacturedProblem {
  ScalarField exact;
  Coefficients coefficients;  ///< source and dirichlet consistent with exact
  Box box;
};

struct ConvergenceRow {
  int cells = 0;
  double h = 0.0;
  double l2_error = 0.0;
  double ratio = 0.0;  ///< error(previous) / error(this); 0 on the first row
};

std::vector<ConvergenceRow> manufactured_solution_check(
    const ManufacturedProblem& problem, std::span<const int> cells_per_axis);

/// The benchmark model problem: box (-0.5,0.5)^2 x (0,1), rotating velocity
/// (-2 pi y, 2 pi x, sin 2 pi x), c = 1, f = 0, u = 1 on z = 0 (seam
/// included) and 0 elsewhere on the boundary.
Box example_one_box();
Coefficients example_one_coefficients(std::function<double(int)> viscosity);

/// Optional coordinate dump "i j value" of a sparse matrix.
void write_coordinate(const SparseMatrix& m, std::ostream& os);

}  // namespace abddc
