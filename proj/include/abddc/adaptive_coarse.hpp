#pragma once

#include <iosfwd>
#include <string_view>
#include <vector>

#include "abddc/decomposition.hpp"
#include "abddc/linalg.hpp"
#include "abddc/scaling.hpp"
#include "abddc/substructuring.hpp"

namespace abddc {

/// How edge constraints are chosen. `pairwise` solves one pencil on the edge
/// dofs with a parallel-sum right-hand side; `difference` solves the pencil
/// over the differences to the first sharer, condensed with respect to the
/// previously selected vertex and face primal unknowns.
enum class EdgeVariant { pairwise, difference };

/// Command-line / report spelling: "old" for pairwise, "new" for difference.
std::string_view to_string(EdgeVariant v);
EdgeVariant parse_edge_variant(std::string_view s);

enum class PencilKind { face, edge_old, edge_new };
std::string_view to_string(PencilKind k);

struct Thresholds {
  double face = 1.0;
  double edge = 10.0;
};

/// 1 + ln(m) for m cells per subdomain edge.
double face_threshold(double cells_per_subdomain);

struct GevpReport {
  int glob_id = -1;
  PencilKind kind = PencilKind::face;
  double threshold = 0.0;
  Matrix lhs;  ///< left pencil matrix
  Matrix rhs;  ///< right pencil matrix
  EigenPairList pairs;
  int n_primal = 0;  ///< eigenvalues >= threshold
  /// Selected constraint rows (lhs * v_l)^T; over the difference unknowns
  /// for edge_new.
  Matrix constraints;
  /// Constraint rows over the glob's own dofs after reduction.
  Matrix glob_constraints;
};

GevpReport face_gevp(const Glob& face, const std::vector<SubdomainOperator>& ops,
                     const ScalingSet& scaling, double threshold);

GevpReport edge_gevp_old(const Glob& edge, const std::vector<SubdomainOperator>& ops,
                         const ScalingSet& scaling, double threshold);

/// Primal directions already fixed on one subdomain: orthonormal columns in
/// local B coordinates, each tagged with its coarse unknown.
struct PriorDirections {
  Matrix vectors;
  PriorProducts products;
  std::vector<int> coarse_ids;
};

/// Difference-unknown maps: G^(k) with w_k - sum_l D_l w_l = G^(k) w_check,
/// w_check = (w_2 - w_1, ..., w_s - w_1), sharers in ascending id order.
std::vector<Matrix> difference_maps(const std::vector<Matrix>& scalings);

GevpReport edge_gevp_new(const Glob& edge, const std::vector<SubdomainOperator>& ops,
                         const ScalingSet& scaling,
                         const std::vector<PriorDirections>& priors, double threshold);

/// Splits each row of `constraints` into blocks of length n_edge, stacks the
/// blocks and returns an orthonormal basis of their span as rows.
Matrix reduce_edge_constraints(const Matrix& constraints, int n_edge);

/// Orthogonal change of basis for one glob: the leading n_primal columns
/// span the constraint rows.
struct GlobBasis {
  Matrix q;
  int n_primal = 0;
};

GlobBasis build_change_of_basis(int n_dofs, const Matrix& constraint_rows);

struct PrimalBasis {
  std::vector<GlobBasis> globs;
  std::vector<int> coarse_offset;  ///< first coarse id per glob
  int num_coarse = 0;
  int pnum_face = 0;
  int pnum_edge = 0;
  int pnum_vertex = 0;
};

/// Offsets and counts for per-glob bases (indexed by glob id).
PrimalBasis assemble_primal_space(const GlobSet& globs, std::vector<GlobBasis> bases);

/// Every interface dof primal.
PrimalBasis full_primal_basis(const GlobSet& globs);

/// Vertices primal; faces and edges fully dual.
PrimalBasis vertex_primal_basis(const GlobSet& globs);

/// Prior primal directions of each subdomain from the face and vertex
/// bases in `bases` (edges are ignored).
std::vector<PriorDirections> prior_directions(const std::vector<SubdomainOperator>& ops,
                                              const GlobSet& globs,
                                              const PrimalBasis& basis);

struct CoarseSpace {
  PrimalBasis basis;
  std::vector<GevpReport> reports;
  double gevp_seconds = 0.0;
};

/// Face pencils, then edge pencils of the requested variant, then the
/// per-glob changes of basis.
CoarseSpace build_adaptive_primal_space(const std::vector<SubdomainOperator>& ops,
                                        const GlobSet& globs, const ScalingSet& scaling,
                                        EdgeVariant variant, const Thresholds& thresholds);

/// x_bar = Q^T x glob by glob (global interface vectors).
Vector to_primal_coordinates(const PrimalBasis& basis, const GlobSet& globs,
                             const Vector& x);
/// x = Q x_bar.
Vector from_primal_coordinates(const PrimalBasis& basis, const GlobSet& globs,
                               const Vector& x_bar);

/// CSV "glob_id,variant,n_dofs,n_primal,lambda_max,lambda_min".
void write_gevp_reports(const std::vector<GevpReport>& reports, std::ostream& os);

}  // namespace abddc
