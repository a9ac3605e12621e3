#include "abddc/scaling.hpp"

#include <stdexcept>
#include <string>

namespace abddc {

const Matrix& ScalingSet::of(const Glob& glob, int subdomain) const {
  const int pos = glob.sharer_position(subdomain);
  if (pos < 0) {
    throw std::invalid_argument("subdomain " + std::to_string(subdomain) +
                                " does not share glob " + std::to_string(glob.id));
  }
  return blocks[static_cast<std::size_t>(glob.id)][static_cast<std::size_t>(pos)];
}

std::vector<Matrix> deluxe_scaling(std::span<const Matrix> blocks) {
  if (blocks.empty()) throw std::invalid_argument("deluxe_scaling: no blocks");
  Matrix sum = blocks[0];
  for (std::size_t k = 1; k < blocks.size(); ++k) sum += blocks[k];
  Eigen::LLT<Matrix> llt(sum);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("deluxe_scaling: summed block is not positive definite");
  }
  std::vector<Matrix> d;
  d.reserve(blocks.size());
  for (const Matrix& b : blocks) d.push_back(llt.solve(b));
  // Absorb rounding into the last block so the family sums to I exactly.
  Matrix rest = Matrix::Identity(sum.rows(), sum.cols());
  for (std::size_t k = 0; k + 1 < d.size(); ++k) rest -= d[k];
  d.back() = rest;
  return d;
}

std::vector<double> vertex_scaling(int sharers) {
  if (sharers < 1) throw std::invalid_argument("vertex_scaling: need >= 1 sharer");
  return std::vector<double>(static_cast<std::size_t>(sharers), 1.0 / sharers);
}

ScalingSet build_scaling(const std::vector<SubdomainOperator>& ops, const GlobSet& globs) {
  ScalingSet s;
  s.blocks.resize(globs.globs.size());
  for (const Glob& g : globs.globs) {
    auto& out = s.blocks[static_cast<std::size_t>(g.id)];
    if (g.kind == GlobKind::vertex) {
      for (double w : vertex_scaling(static_cast<int>(g.sharers.size()))) {
        out.push_back(Matrix::Constant(1, 1, w));
      }
      continue;
    }
    std::vector<Matrix> principal;
    principal.reserve(g.sharers.size());
    for (int sd : g.sharers) principal.push_back(glob_principal_block(ops[sd], g));
    out = deluxe_scaling(principal);
  }
  return s;
}

double partition_of_unity_error(const ScalingSet& scaling, const GlobSet& globs) {
  double worst = 0.0;
  for (const Glob& g : globs.globs) {
    Matrix sum = Matrix::Zero(g.size(), g.size());
    for (const Matrix& d : scaling.blocks[static_cast<std::size_t>(g.id)]) sum += d;
    sum -= Matrix::Identity(g.size(), g.size());
    worst = std::max(worst, sum.cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace abddc
