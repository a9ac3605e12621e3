#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "abddc/adaptive_coarse.hpp"
#include "abddc/bddc.hpp"
#include "abddc/harness.hpp"

namespace abddc {

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;  ///< worst observed value
  double bound = 0.0;     ///< what it was compared against
  std::string detail;
};

/// Largest max-norm partition-of-unity defect; passes below 1e-10.
CheckResult check_partition_of_unity(const Problem& problem);

/// Loewner ordering on every face and edge: parallel sum below each glob
/// Schur block, glob Schur block below the principal block.
CheckResult check_loewner_bounds(const Problem& problem);

/// ||lhs v - lambda rhs v|| relative to ||lhs v|| + |lambda| ||rhs v|| for
/// every finite, non-degenerate pair.
CheckResult check_pencil_residuals(const std::vector<GevpReport>& reports);

/// Jump-energy estimates on random samples satisfying the enforced
/// constraints: faces against 2 Theta_F, pairwise edges against 2 Theta_E,
/// difference edges against 2 (|n(E)| - 1) Theta_E, each with 1e-8 slack.
/// The right-hand side uses the minimal-energy extension of the glob values.
std::vector<CheckResult> check_jump_estimates(const Problem& problem,
                                              const CoarseSpace& coarse,
                                              EdgeVariant variant, std::uint64_t seed,
                                              int samples = 20);

/// Constraint functionals of pairwise differences vanish for vectors whose
/// primal coordinates agree.
CheckResult check_primal_continuity(const Problem& problem, const CoarseSpace& coarse,
                                    std::uint64_t seed);

/// E_D applied twice equals E_D applied once, on random coupled vectors.
CheckResult check_projection(const Problem& problem, const BddcPreconditioner& pc,
                             std::uint64_t seed);

/// Field-of-values positivity and boundedness of the preconditioned operator
/// in the inner product of the symmetric part, over `samples` random vectors.
std::vector<CheckResult> check_field_of_values(const Problem& problem,
                                               const BddcPreconditioner& pc,
                                               std::uint64_t seed, int samples = 100);

/// Symmetric limit (zero velocity): the spectrum of the preconditioned
/// operator lies in [1 - 1e-8, 40 max(Theta)^2].
CheckResult check_symmetric_limit(const Problem& problem, const BddcPreconditioner& pc);

/// M^-1 (a x + b y) = a M^-1 x + b M^-1 y.
CheckResult check_linearity(const BddcPreconditioner& pc, std::uint64_t seed);

/// Runs everything above on small benchmark instances.
std::vector<CheckResult> run_invariant_suite(std::uint64_t seed = 7);

}  // namespace abddc
