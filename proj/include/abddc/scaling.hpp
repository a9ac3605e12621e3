#pragma once

#include <span>
#include <vector>

#include "abddc/decomposition.hpp"
#include "abddc/linalg.hpp"
#include "abddc/substructuring.hpp"

namespace abddc {

/// Scaling blocks per glob, one per sharer, in sharer order.
struct ScalingSet {
  std::vector<std::vector<Matrix>> blocks;

  [[nodiscard]] const Matrix& of(const Glob& glob, int subdomain) const;
};

/// D^(v) = (sum_k B^(k))^-1 B^(v).
std::vector<Matrix> deluxe_scaling(std::span<const Matrix> blocks);

/// 1/|n(V)| for each of `sharers` subdomains.
std::vector<double> vertex_scaling(int sharers);

/// Deluxe scaling from principal blocks of the symmetric parts on faces and
/// edges; cardinality scaling on vertices.
ScalingSet build_scaling(const std::vector<SubdomainOperator>& ops, const GlobSet& globs);

/// Largest max-norm deviation of sum_v D^(v) from the identity over all globs.
double partition_of_unity_error(const ScalingSet& scaling, const GlobSet& globs);

}  // namespace abddc
