#pragma once

#include <functional>
#include <vector>

#include "abddc/adaptive_coarse.hpp"
#include "abddc/decomposition.hpp"
#include "abddc/linalg.hpp"
#include "abddc/scaling.hpp"
#include "abddc/substructuring.hpp"

namespace abddc {

/// Action of the assembled interface operator sum_i R_i^T S_i R_i.
class SchurOperator {
 public:
  SchurOperator(const std::vector<SubdomainOperator>& ops, const GlobSet& globs);

  [[nodiscard]] Vector apply(const Vector& x) const;
  /// Same with the symmetric parts only.
  [[nodiscard]] Vector apply_symmetric(const Vector& x) const;
  [[nodiscard]] int size() const { return n_; }
  /// sum_i R_i^T g_i.
  [[nodiscard]] Vector condensed_rhs() const;
  /// Dense assembled operator (desk-scale oracles only).
  [[nodiscard]] Matrix dense(bool symmetric_part = false) const;

 private:
  const std::vector<SubdomainOperator>* ops_;
  int n_;
};

/// Partially coupled vector: one local vector per subdomain in transformed
/// coordinates, primal entries agreeing between sharers.
using CoupledVector = std::vector<Vector>;

/// Balancing preconditioner with primal constraints imposed by a per-glob
/// orthogonal change of basis and deluxe averaging.
class BddcPreconditioner {
 public:
  BddcPreconditioner(const std::vector<SubdomainOperator>& ops, const GlobSet& globs,
                     const PrimalBasis& basis, const ScalingSet& scaling);

  [[nodiscard]] Vector apply(const Vector& r) const;
  [[nodiscard]] int coarse_size() const { return static_cast<int>(coarse_.rows()); }
  [[nodiscard]] const Matrix& coarse_matrix() const { return coarse_; }
  [[nodiscard]] int size() const { return globs_->num_interface(); }

  /// R_tilde applied to a global interface vector (original coordinates).
  [[nodiscard]] CoupledVector restrict_continuous(const Vector& x) const;
  /// R_tilde^T D_tilde w: the weighted average, in original coordinates.
  [[nodiscard]] Vector average(const CoupledVector& w) const;
  /// (E_D w, P_D w) with E_D = R_tilde R_tilde^T D_tilde.
  [[nodiscard]] std::pair<CoupledVector, CoupledVector> averaging_and_jump(
      const CoupledVector& w) const;
  /// Primal positions of subdomain i's local B coordinates.
  [[nodiscard]] const std::vector<int>& primal_positions(int i) const {
    return locals_[static_cast<std::size_t>(i)].primal;
  }
  [[nodiscard]] const std::vector<int>& primal_coarse_ids(int i) const {
    return locals_[static_cast<std::size_t>(i)].coarse_ids;
  }

 private:
  struct Local {
    Matrix transform;  ///< T_i, local B coordinates
    Matrix scaling;    ///< D_bar_i = T_i^T D_i T_i
    std::vector<int> dual, primal, coarse_ids;
    Eigen::PartialPivLU<Matrix> dual_lu;
    Matrix s_dp, s_pd, phi;  ///< S_dual,primal ; S_primal,dual ; S_dd^-1 S_dp
  };

  const std::vector<SubdomainOperator>* ops_;
  const GlobSet* globs_;
  const PrimalBasis* basis_;
  std::vector<Local> locals_;
  Matrix coarse_;
  Eigen::PartialPivLU<Matrix> coarse_lu_;
};

struct SolveReport {
  int iterations = 0;
  bool converged = false;
  std::vector<double> residual_history;       ///< preconditioned, relative
  std::vector<double> true_residual_history;  ///< ||b - S x|| / ||b||
  Vector solution;
  double setup_seconds = 0.0;
  double gevp_seconds = 0.0;
  double solve_seconds = 0.0;
  int pnum_face = 0;
  int pnum_edge = 0;
};

using LinearAction = std::function<Vector(const Vector&)>;

/// Full GMRES, left preconditioned, from x0 = 0; stops when the preconditioned
/// residual drops below rel_tol times the preconditioned right-hand side.
SolveReport gmres_solve(const LinearAction& op, const Vector& rhs,
                        const LinearAction& preconditioner, double rel_tol = 1e-8,
                        int max_iter = 300);

/// Dense assembly and LU solve of the interface system.
Vector direct_schur_solve(const SchurOperator& schur, const Vector& rhs);

/// Interior back-substitution; returns nodal values with the lifting.
Vector recover_interior(const std::vector<SubdomainOperator>& ops, const GlobSet& globs,
                        const AssembledSystem& system, const Vector& interface_values);

}  // namespace abddc
