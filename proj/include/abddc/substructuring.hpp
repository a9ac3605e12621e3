#pragma once

#include <memory>
#include <span>
#include <vector>

#include <Eigen/SparseLU>

#include "abddc/decomposition.hpp"
#include "abddc/discretization.hpp"
#include "abddc/linalg.hpp"

namespace abddc {

/// Condensed operator of one subdomain.
///
/// Local interface ("B") dofs are the subdomain's interface dofs in ascending
/// global interface order; interior ("I") dofs are the free nodes owned by
/// this subdomain alone.
class SubdomainOperator {
 public:
  int subdomain = -1;
  std::vector<int> interior_free;   ///< free-node index of each interior dof
  std::vector<int> interface_dofs;  ///< global interface id of each B dof
  std::vector<int> local_of;        ///< interface id -> local B index or -1

  SparseMatrix a_ii, a_ib, a_bi;
  Matrix a_bb;
  Vector f_i, f_b;

  Matrix schur;      ///< S = A_BB - A_BI A_II^-1 A_IB
  Matrix sym;        ///< (S + S^T) / 2
  Matrix skew;       ///< (S - S^T) / 2
  Matrix sym_inverse;
  Vector condensed_rhs;  ///< f_B - A_BI A_II^-1 f_I

  [[nodiscard]] int num_interface() const {
    return static_cast<int>(interface_dofs.size());
  }
  [[nodiscard]] int num_interior() const {
    return static_cast<int>(interior_free.size());
  }

  /// A_II^-1 x with the cached factorization.
  [[nodiscard]] Vector solve_interior(const Vector& x) const;

  /// Local B indices of a glob's dofs; throws if the glob is not on this
  /// subdomain.
  [[nodiscard]] std::vector<int> local_indices(const Glob& glob) const;

  /// Harmonic extension of interface values: (u_I, u_B) with
  /// A_II u_I + A_IB u_B = 0.
  [[nodiscard]] Vector harmonic_interior(const Vector& x_b) const;

  std::shared_ptr<const Eigen::SparseLU<SparseMatrix>> interior_lu;
};

/// Assembles the subdomain-restricted form over the elements of subdomain i,
/// factors A_II and forms the dense Schur complement.
SubdomainOperator build_subdomain_operator(const AssembledSystem& system,
                                           const Partition& partition,
                                           const GlobSet& globs, int i);

std::vector<SubdomainOperator> build_subdomain_operators(
    const AssembledSystem& system, const Partition& partition, const GlobSet& globs);

/// Principal block of the symmetric part on the glob's dofs.
Matrix glob_principal_block(const SubdomainOperator& op, const Glob& glob);

/// Schur complement of the symmetric part onto the glob's dofs.
Matrix glob_schur_block(const SubdomainOperator& op, const Glob& glob);

/// Schur complement of the symmetric part onto an orthonormal set of
/// directions (columns of `directions`, local B coordinates): the inverse of
/// directions^T * sym^-1 * directions. Valid whenever the directions are part
/// of an orthonormal basis of the B space.
Matrix schur_onto_directions(const SubdomainOperator& op, const Matrix& directions);

/// Schur complement partitioned into the edge block (first n_edge
/// coordinates) and the prior primal block.
struct PartitionedBlock {
  Matrix full;
  int n_edge = 0;

  [[nodiscard]] Matrix ee() const { return full.topLeftCorner(n_edge, n_edge); }
  [[nodiscard]] Matrix eh() const {
    return full.topRightCorner(n_edge, full.cols() - n_edge);
  }
  [[nodiscard]] Matrix hh() const {
    return full.bottomRightCorner(full.rows() - n_edge, full.cols() - n_edge);
  }
};

/// Schur complement of the transformed symmetric part keeping the edge's
/// dofs and the prior primal directions. `priors` holds, column-wise, the
/// prior primal basis vectors in local B coordinates; they must be orthonormal
/// and vanish on the edge.
PartitionedBlock edge_block_with_priors(const SubdomainOperator& op, const Glob& edge,
                                        const Matrix& priors);

/// Per-subdomain products of the prior directions P with sym^-1.
struct PriorProducts {
  Matrix inverse_times_priors;  ///< sym^-1 P
  Matrix gram;                  ///< P^T sym^-1 P
};

/// `inverse_times_priors` is sym^-1 * priors, passed in when the caller has
/// it cheaper than a dense product.
PriorProducts prior_products(const SubdomainOperator& op, const Matrix& priors,
                             const Matrix& inverse_times_priors);

/// Same as above, from products computed once per subdomain.
PartitionedBlock edge_block_with_priors(const SubdomainOperator& op, const Glob& edge,
                                        const PriorProducts& products);

/// Keeps only the prior columns listed in `columns`; the others are
/// eliminated along with the rest of the interface.
PartitionedBlock edge_block_with_priors(const SubdomainOperator& op, const Glob& edge,
                                        const PriorProducts& products,
                                        std::span<const int> columns);

}  // namespace abddc
