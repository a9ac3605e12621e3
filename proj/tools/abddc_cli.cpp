// Command-line experiment runner.

#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "abddc/harness.hpp"
#include "abddc/invariants.hpp"

namespace {

int report_rows(const std::vector<abddc::ResultRow>& rows, const std::string& out_dir) {
  abddc::emit_tables(rows, out_dir);
  abddc::write_results_table(rows, std::cout);
  for (const auto& r : rows) {
    if (!r.converged) return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive BDDC experiments for stabilized advection-diffusion"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "debug logging");

  std::string config_path, variant = "", out_dir = "";
  std::uint64_t seed = 0;

  auto* run = app.add_subcommand("run", "run the cases of a config file");
  run->add_option("--config", config_path, "config file")->required()->check(CLI::ExistingFile);
  run->add_option("--variant", variant, "edge constraints: old, new or both")
      ->check(CLI::IsMember({"old", "new", "both"}));
  run->add_option("--out", out_dir, "output directory for results.csv / results.txt");
  auto* seed_opt = run->add_option("--seed", seed, "seed for random viscosity and partitions");

  auto* compare = app.add_subcommand("compare", "run both variants side by side");
  compare->add_option("--config", config_path, "config file")
      ->required()
      ->check(CLI::ExistingFile);
  compare->add_option("--out", out_dir, "output directory");

  std::uint64_t check_seed = 7;
  auto* check = app.add_subcommand("check", "run the invariant suite");
  check->add_option("--seed", check_seed, "seed for random samples");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*check) {
      bool ok = true;
      for (const auto& c : abddc::run_invariant_suite(check_seed)) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.measured
                  << " (bound " << c.bound << ")";
        if (!c.detail.empty()) std::cout << " " << c.detail;
        std::cout << '\n';
        ok = ok && c.passed;
      }
      return ok ? 0 : 1;
    }

    abddc::ExperimentConfig cfg = abddc::load_config(config_path);
    if (*compare) {
      cfg.variants = {abddc::EdgeVariant::pairwise, abddc::EdgeVariant::difference};
    } else {
      if (variant == "both") {
        cfg.variants = {abddc::EdgeVariant::pairwise, abddc::EdgeVariant::difference};
      } else if (!variant.empty()) {
        cfg.variants = {abddc::parse_edge_variant(variant)};
      }
      if (*seed_opt) cfg.seed = seed;
    }
    if (out_dir.empty()) out_dir = cfg.output.empty() ? "." : cfg.output;
    return report_rows(abddc::run_case(cfg), out_dir);
  } catch (const std::exception& ex) {
    spdlog::error("{}", ex.what());
    return 1;
  }
}
