#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "abddc/adaptive_coarse.hpp"
#include "abddc/bddc.hpp"
#include "abddc/decomposition.hpp"
#include "abddc/discretization.hpp"
#include "abddc/mesh.hpp"
#include "abddc/scaling.hpp"
#include "abddc/substructuring.hpp"

namespace abddc {

enum class PartitionKind { regular, irregular };
enum class ViscosityKind { constant, subdomain_test, random };
enum class VelocityKind { rotating, zero };

struct ViscositySpec {
  ViscosityKind kind = ViscosityKind::constant;
  double nu = 1.0;  ///< constant
  int test = 1;     ///< subdomain_test: 1, 2 or 3
  double nu1 = 1.0;
  double nu2 = 1.0;
  std::uint64_t seed = 0;  ///< random
  double log10_min = -3.0;
  double log10_max = 3.0;
};

/// One concrete problem instance on the benchmark box.
struct ProblemSpec {
  std::string label;
  PartitionKind partition = PartitionKind::regular;
  int subdomains_per_axis = 2;  ///< regular
  int cells_per_subdomain = 4;  ///< regular
  int global_cells = 20;        ///< irregular, cells per axis
  int subdomains = 8;           ///< irregular
  std::uint64_t partition_seed = 1;
  ViscositySpec viscosity;
  VelocityKind velocity = VelocityKind::rotating;
  std::optional<double> face_threshold;  ///< default 1 + ln(m)
  double edge_threshold = 10.0;

  [[nodiscard]] int num_subdomains() const;
  [[nodiscard]] int cells_per_axis() const;
  /// Cells per subdomain edge; (1/h) / cbrt(N) for irregular partitions.
  [[nodiscard]] double effective_m() const;
  [[nodiscard]] Thresholds thresholds() const;
};

/// Everything shared between the coarse-space variants of one instance.
struct Problem {
  ProblemSpec spec;
  Mesh mesh;
  Partition partition;
  std::vector<double> viscosity;  ///< per element
  AssembledSystem system;
  GlobSet globs;
  std::vector<SubdomainOperator> ops;
  ScalingSet scaling;
  double substructuring_seconds = 0.0;
};

/// Position of lexicographic subdomain id (x fastest, 2x2x2) in the
/// counterclockwise helicoidal numbering, 1-based: bottom layer 1..4 starting
/// at (-x,-y), top layer 5..8 above them.
int helicoidal_index(int lexicographic_id);

/// Per-element viscosity of Tests 1-3 on a 2x2x2 regular partition.
std::vector<double> subdomain_viscosity_tests(const Partition& partition,
                                              std::array<int, 3> subs_per_axis, int test,
                                              double nu1, double nu2);

/// nu = 10^r per element, r uniform in [lo, hi), from a seeded stream.
std::vector<double> random_viscosity(const Mesh& mesh, std::uint64_t seed,
                                     double log10_min = -3.0, double log10_max = 3.0);

Coefficients benchmark_coefficients(std::vector<double> viscosity, VelocityKind velocity);

Problem build_problem(const ProblemSpec& spec);

struct ResultRow {
  std::string case_name;
  std::string variant;
  int subdomains = 0;
  int m = 0;
  int iterations = 0;
  int pnum_face = 0;
  int pnum_edge = 0;
  double setup_s = 0.0;
  double gevp_s = 0.0;
  double solve_s = 0.0;
  bool converged = false;
  int coarse_size = 0;  ///< not serialized
  std::string error;    ///< not serialized

  [[nodiscard]] double total_s() const { return setup_s + gevp_s + solve_s; }
};

struct VariantRun {
  ResultRow row;
  CoarseSpace coarse;
  SolveReport report;
};

/// Coarse space, preconditioner and GMRES for one variant on a prepared
/// problem.
VariantRun solve_variant(const Problem& problem, EdgeVariant variant,
                         double rel_tol = 1e-8, int max_iter = 300);

struct ExperimentConfig {
  std::string case_name;
  PartitionKind partition = PartitionKind::regular;
  std::vector<int> subdomains_per_axis{2};
  std::vector<int> cells_per_subdomain{4};
  std::vector<int> global_cells{20};
  std::vector<int> subdomains{8};
  ViscosityKind viscosity = ViscosityKind::constant;
  double nu = 1.0;
  std::vector<int> tests{1, 2, 3};
  std::vector<double> nu1{1.0};
  std::vector<double> nu2{1.0};
  std::optional<std::uint64_t> seed;
  double log10_min = -3.0;
  double log10_max = 3.0;
  VelocityKind velocity = VelocityKind::rotating;
  std::vector<EdgeVariant> variants{EdgeVariant::pairwise, EdgeVariant::difference};
  std::optional<double> face_threshold;
  double edge_threshold = 10.0;
  double rel_tol = 1e-8;
  int max_iter = 300;
  std::string output;
};

/// Flat "key = value" text; '#' comments; lists are comma separated.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every problem instance described by the config.
std::vector<ProblemSpec> expand_config(const ExperimentConfig& config);

/// Builds and solves every instance; a failing instance yields rows with
/// converged = false and the reason in `error`.
std::vector<ResultRow> run_case(const ExperimentConfig& config);

/// "iters(pnumF,pnumE)".
std::string format_cell(int iterations, int pnum_face, int pnum_edge);

inline constexpr const char* kCsvHeader =
    "case,variant,N,m,iters,pnumF,pnumE,setup_s,gevp_s,solve_s,converged";

void write_results_csv(const std::vector<ResultRow>& rows, std::ostream& os);
std::vector<ResultRow> parse_results_csv(std::istream& in);
void write_results_table(const std::vector<ResultRow>& rows, std::ostream& os);

/// Writes results.csv and results.txt into `dir`.
void emit_tables(const std::vector<ResultRow>& rows, const std::filesystem::path& dir);

}  // namespace abddc
