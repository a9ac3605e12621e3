#include "abddc/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <spdlog/spdlog.h>

namespace abddc {

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

std::string short_number(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

// Distinct stream tag so viscosity draws never alias other seeded uses.
constexpr std::uint32_t kViscosityStream = 0x76697363u;

}  // namespace

int ProblemSpec::num_subdomains() const {
  return partition == PartitionKind::regular
             ? subdomains_per_axis * subdomains_per_axis * subdomains_per_axis
             : subdomains;
}

int ProblemSpec::cells_per_axis() const {
  return partition == PartitionKind::regular ? subdomains_per_axis * cells_per_subdomain
                                             : global_cells;
}

double ProblemSpec::effective_m() const {
  if (partition == PartitionKind::regular) return cells_per_subdomain;
  return global_cells / std::cbrt(static_cast<double>(subdomains));
}

Thresholds ProblemSpec::thresholds() const {
  Thresholds t;
  t.face = face_threshold.value_or(abddc::face_threshold(effective_m()));
  t.edge = edge_threshold;
  return t;
}

int helicoidal_index(int lex) {
  if (lex < 0 || lex > 7) throw std::invalid_argument("helicoidal_index: id out of range");
  const int ix = lex & 1, iy = (lex >> 1) & 1, iz = lex >> 2;
  static constexpr int kAngular[2][2] = {{1, 4}, {2, 3}};  // [ix][iy]
  return kAngular[ix][iy] + 4 * iz;
}

std::vector<double> subdomain_viscosity_tests(const Partition& partition,
                                              std::array<int, 3> subs, int test, double nu1,
                                              double nu2) {
  if (subs != std::array<int, 3>{2, 2, 2} || partition.count != 8) {
    throw std::invalid_argument("subdomain viscosity tests need a 2x2x2 partition");
  }
  static const std::array<std::set<int>, 3> kFirstGroup{
      std::set<int>{1, 4, 5, 8}, std::set<int>{1, 5, 6, 8}, std::set<int>{1, 3, 6, 8}};
  if (test < 1 || test > 3) throw std::invalid_argument("test id must be 1, 2 or 3");
  const auto& group = kFirstGroup[static_cast<std::size_t>(test - 1)];
  std::vector<double> nu(partition.subdomain_of.size());
  for (std::size_t e = 0; e < nu.size(); ++e) {
    nu[e] = group.count(helicoidal_index(partition.subdomain_of[e])) ? nu1 : nu2;
  }
  return nu;
}

std::vector<double> random_viscosity(const Mesh& mesh, std::uint64_t seed,
                                     double log10_min, double log10_max) {
  if (!(log10_max > log10_min)) {
    throw std::invalid_argument("random_viscosity: empty exponent range");
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32), kViscosityStream};
  std::mt19937_64 gen(seq);
  std::uniform_real_distribution<double> exponent(log10_min, log10_max);
  std::vector<double> nu(mesh.elements.size());
  for (double& v : nu) v = std::pow(10.0, exponent(gen));
  return nu;
}

Coefficients benchmark_coefficients(std::vector<double> viscosity, VelocityKind velocity) {
  Coefficients c = example_one_coefficients(
      [nu = std::move(viscosity)](int e) { return nu[static_cast<std::size_t>(e)]; });
  if (velocity == VelocityKind::zero) {
    c.velocity = [](const Vec3&) { return Vec3{0.0, 0.0, 0.0}; };
    c.velocity_divergence = [](const Vec3&) { return 0.0; };
  }
  return c;
}

Problem build_problem(const ProblemSpec& spec) {
  Problem p;
  p.spec = spec;
  const int cells = spec.cells_per_axis();
  p.mesh = build_structured_mesh({cells, cells, cells}, example_one_box());
  if (spec.partition == PartitionKind::regular) {
    const int n = spec.subdomains_per_axis;
    p.partition = partition_regular(p.mesh, {n, n, n});
  } else {
    p.partition = partition_irregular(p.mesh, spec.subdomains, spec.partition_seed);
  }

  const ViscositySpec& vs = spec.viscosity;
  switch (vs.kind) {
    case ViscosityKind::constant:
      p.viscosity.assign(p.mesh.elements.size(), vs.nu);
      break;
    case ViscosityKind::subdomain_test: {
      const int n = spec.subdomains_per_axis;
      if (spec.partition != PartitionKind::regular) {
        throw std::invalid_argument("subdomain viscosity tests need a regular partition");
      }
      p.viscosity = subdomain_viscosity_tests(p.partition, {n, n, n}, vs.test, vs.nu1, vs.nu2);
      break;
    }
    case ViscosityKind::random:
      p.viscosity = random_viscosity(p.mesh, vs.seed, vs.log10_min, vs.log10_max);
      break;
  }

  p.system = assemble_system(p.mesh, benchmark_coefficients(p.viscosity, spec.velocity));
  std::vector<bool> dirichlet(static_cast<std::size_t>(p.mesh.num_nodes()));
  for (int v = 0; v < p.mesh.num_nodes(); ++v) dirichlet[v] = p.system.is_dirichlet(v);
  p.globs = classify_globs(p.mesh, p.partition, dirichlet);

  const auto t0 = clock_type::now();
  p.ops = build_subdomain_operators(p.system, p.partition, p.globs);
  p.scaling = build_scaling(p.ops, p.globs);
  p.substructuring_seconds = seconds_since(t0);
  spdlog::debug("{}: {} elements, {} interface dofs, globs F/E/V = {}/{}/{}", spec.label,
                p.mesh.num_elements(), p.globs.num_interface(), p.globs.count(GlobKind::face),
                p.globs.count(GlobKind::edge), p.globs.count(GlobKind::vertex));
  return p;
}

VariantRun solve_variant(const Problem& problem, EdgeVariant variant, double rel_tol,
                         int max_iter) {
  VariantRun run;
  run.coarse = build_adaptive_primal_space(problem.ops, problem.globs, problem.scaling,
                                           variant, problem.spec.thresholds());
  const auto t0 = clock_type::now();
  const BddcPreconditioner pc(problem.ops, problem.globs, run.coarse.basis, problem.scaling);
  const double setup = seconds_since(t0);

  const SchurOperator schur(problem.ops, problem.globs);
  run.report = gmres_solve([&](const Vector& x) { return schur.apply(x); },
                           schur.condensed_rhs(),
                           [&](const Vector& r) { return pc.apply(r); }, rel_tol, max_iter);
  run.report.setup_seconds = setup;
  run.report.gevp_seconds = run.coarse.gevp_seconds;
  run.report.pnum_face = run.coarse.basis.pnum_face;
  run.report.pnum_edge = run.coarse.basis.pnum_edge;

  ResultRow& row = run.row;
  row.case_name = problem.spec.label;
  row.variant = std::string(to_string(variant));
  row.subdomains = problem.partition.count;
  row.m = problem.spec.partition == PartitionKind::regular ? problem.spec.cells_per_subdomain
                                                           : problem.spec.global_cells;
  row.iterations = run.report.iterations;
  row.pnum_face = run.coarse.basis.pnum_face;
  row.pnum_edge = run.coarse.basis.pnum_edge;
  row.setup_s = setup;
  row.gevp_s = run.coarse.gevp_seconds;
  row.solve_s = run.report.solve_seconds;
  row.converged = run.report.converged;
  row.coarse_size = pc.coarse_size();
  return run;
}

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  std::istringstream is(text);
  T v{};
  is >> v;
  if (is.fail() || !(is >> std::ws).eof()) {
    throw std::invalid_argument("config key '" + key + "': cannot parse '" + text + "'");
  }
  return v;
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<std::string> parts;
  boost::split(parts, text, boost::is_any_of(","));
  std::vector<T> out;
  for (auto& s : parts) {
    boost::trim(s);
    if (!s.empty()) out.push_back(parse_number<T>(key, s));
  }
  if (out.empty()) throw std::invalid_argument("config key '" + key + "': empty list");
  return out;
}

std::string unquote(std::string s) {
  boost::trim(s);
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    s = s.substr(1, s.size() - 2);
  }
  return s;
}

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& ex) {
    throw std::invalid_argument(std::string("config: ") + ex.what());
  }
  ExperimentConfig c;
  bool have_case = false;
  for (const auto& [key, node] : tree) {
    if (!node.empty()) throw std::invalid_argument("config: sections are not supported");
    const std::string v = unquote(node.data());
    if (key == "case") {
      c.case_name = v;
      have_case = true;
    } else if (key == "partition") {
      if (v == "regular") c.partition = PartitionKind::regular;
      else if (v == "irregular") c.partition = PartitionKind::irregular;
      else throw std::invalid_argument("config: partition must be regular or irregular");
    } else if (key == "subdomains_per_axis") {
      c.subdomains_per_axis = parse_list<int>(key, v);
    } else if (key == "cells_per_subdomain") {
      c.cells_per_subdomain = parse_list<int>(key, v);
    } else if (key == "global_cells") {
      c.global_cells = parse_list<int>(key, v);
    } else if (key == "subdomains") {
      c.subdomains = parse_list<int>(key, v);
    } else if (key == "viscosity") {
      if (v == "constant") c.viscosity = ViscosityKind::constant;
      else if (v == "tests") c.viscosity = ViscosityKind::subdomain_test;
      else if (v == "random") c.viscosity = ViscosityKind::random;
      else throw std::invalid_argument("config: viscosity must be constant, tests or random");
    } else if (key == "nu") {
      c.nu = parse_number<double>(key, v);
    } else if (key == "tests") {
      c.tests = parse_list<int>(key, v);
    } else if (key == "nu1") {
      c.nu1 = parse_list<double>(key, v);
    } else if (key == "nu2") {
      c.nu2 = parse_list<double>(key, v);
    } else if (key == "seed") {
      c.seed = parse_number<std::uint64_t>(key, v);
    } else if (key == "log10_min") {
      c.log10_min = parse_number<double>(key, v);
    } else if (key == "log10_max") {
      c.log10_max = parse_number<double>(key, v);
    } else if (key == "velocity") {
      if (v == "rotating") c.velocity = VelocityKind::rotating;
      else if (v == "zero") c.velocity = VelocityKind::zero;
      else throw std::invalid_argument("config: velocity must be rotating or zero");
    } else if (key == "variant") {
      if (v == "both") c.variants = {EdgeVariant::pairwise, EdgeVariant::difference};
      else c.variants = {parse_edge_variant(v)};
    } else if (key == "theta_face") {
      if (v == "auto") c.face_threshold.reset();
      else c.face_threshold = parse_number<double>(key, v);
    } else if (key == "theta_edge") {
      c.edge_threshold = parse_number<double>(key, v);
    } else if (key == "rel_tol") {
      c.rel_tol = parse_number<double>(key, v);
    } else if (key == "max_iter") {
      c.max_iter = parse_number<int>(key, v);
    } else if (key == "output") {
      c.output = v;
    } else {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
  if (!have_case || c.case_name.empty()) {
    throw std::invalid_argument("config: 'case' is required");
  }
  if (c.case_name.find(',') != std::string::npos) {
    throw std::invalid_argument("config: case name must not contain commas");
  }
  if (c.nu1.size() != c.nu2.size()) {
    throw std::invalid_argument("config: nu1 and nu2 must list the same number of values");
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  return parse_config(in);
}

std::vector<ProblemSpec> expand_config(const ExperimentConfig& c) {
  if (c.viscosity == ViscosityKind::random && !c.seed) {
    throw std::invalid_argument("config: random viscosity requires a seed");
  }
  std::vector<ProblemSpec> geometry;
  if (c.partition == PartitionKind::regular) {
    for (int n : c.subdomains_per_axis) {
      for (int m : c.cells_per_subdomain) {
        ProblemSpec s;
        s.partition = PartitionKind::regular;
        s.subdomains_per_axis = n;
        s.cells_per_subdomain = m;
        s.label = c.case_name + "/n=" + std::to_string(n) + "/m=" + std::to_string(m);
        geometry.push_back(s);
      }
    }
  } else {
    for (int h : c.global_cells) {
      for (int n : c.subdomains) {
        ProblemSpec s;
        s.partition = PartitionKind::irregular;
        s.global_cells = h;
        s.subdomains = n;
        s.partition_seed = c.seed.value_or(1);
        s.label = c.case_name + "/h=1/" + std::to_string(h) + "/N=" + std::to_string(n);
        geometry.push_back(s);
      }
    }
  }

  std::vector<ProblemSpec> out;
  for (ProblemSpec g : geometry) {
    g.velocity = c.velocity;
    g.face_threshold = c.face_threshold;
    g.edge_threshold = c.edge_threshold;
    switch (c.viscosity) {
      case ViscosityKind::constant:
        g.viscosity.kind = ViscosityKind::constant;
        g.viscosity.nu = c.nu;
        out.push_back(g);
        break;
      case ViscosityKind::random:
        g.viscosity.kind = ViscosityKind::random;
        g.viscosity.seed = *c.seed;
        g.viscosity.log10_min = c.log10_min;
        g.viscosity.log10_max = c.log10_max;
        g.label += "/seed=" + std::to_string(*c.seed);
        out.push_back(g);
        break;
      case ViscosityKind::subdomain_test:
        for (int t : c.tests) {
          for (std::size_t k = 0; k < c.nu1.size(); ++k) {
            ProblemSpec s = g;
            s.viscosity.kind = ViscosityKind::subdomain_test;
            s.viscosity.test = t;
            s.viscosity.nu1 = c.nu1[k];
            s.viscosity.nu2 = c.nu2[k];
            s.label += "/test" + std::to_string(t) + "/nu=" + short_number(c.nu1[k]) + ":" +
                       short_number(c.nu2[k]);
            out.push_back(s);
          }
        }
        break;
    }
  }
  return out;
}

std::vector<ResultRow> run_case(const ExperimentConfig& config) {
  std::vector<ResultRow> rows;
  for (const ProblemSpec& spec : expand_config(config)) {
    std::optional<Problem> problem;
    try {
      problem.emplace(build_problem(spec));
    } catch (const std::exception& ex) {
      spdlog::error("{}: setup failed: {}", spec.label, ex.what());
      for (EdgeVariant v : config.variants) {
        ResultRow r;
        r.case_name = spec.label;
        r.variant = std::string(to_string(v));
        r.subdomains = spec.num_subdomains();
        r.error = ex.what();
        rows.push_back(r);
      }
      continue;
    }
    for (EdgeVariant v : config.variants) {
      try {
        VariantRun run = solve_variant(*problem, v, config.rel_tol, config.max_iter);
        const ResultRow& r = run.row;
        spdlog::info("{} [{}] {} iters, coarse {} ({}), converged={}", r.case_name,
                     r.variant, r.iterations, r.coarse_size,
                     format_cell(r.iterations, r.pnum_face, r.pnum_edge), r.converged);
        rows.push_back(run.row);
      } catch (const std::exception& ex) {
        spdlog::error("{} [{}]: {}", spec.label, to_string(v), ex.what());
        ResultRow r;
        r.case_name = spec.label;
        r.variant = std::string(to_string(v));
        r.subdomains = problem->partition.count;
        r.error = ex.what();
        rows.push_back(r);
      }
    }
  }
  return rows;
}

std::string format_cell(int iterations, int pnum_face, int pnum_edge) {
  return std::to_string(iterations) + "(" + std::to_string(pnum_face) + "," +
         std::to_string(pnum_edge) + ")";
}

void write_results_csv(const std::vector<ResultRow>& rows, std::ostream& os) {
  os << kCsvHeader << '\n';
  for (const ResultRow& r : rows) {
    os << r.case_name << ',' << r.variant << ',' << r.subdomains << ',' << r.m << ','
       << r.iterations << ',' << r.pnum_face << ',' << r.pnum_edge << ',' << std::fixed
       << std::setprecision(6) << r.setup_s << ',' << r.gevp_s << ',' << r.solve_s
       << std::defaultfloat << ',' << (r.converged ? "true" : "false") << '\n';
  }
}

std::vector<ResultRow> parse_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || boost::trim_copy(line) != kCsvHeader) {
    throw std::invalid_argument("results CSV: missing or unexpected header");
  }
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (boost::trim_copy(line).empty()) continue;
    std::vector<std::string> f;
    boost::split(f, line, boost::is_any_of(","));
    if (f.size() != 11) throw std::invalid_argument("results CSV: bad row '" + line + "'");
    ResultRow r;
    r.case_name = f[0];
    r.variant = f[1];
    r.subdomains = parse_number<int>("N", f[2]);
    r.m = parse_number<int>("m", f[3]);
    r.iterations = parse_number<int>("iters", f[4]);
    r.pnum_face = parse_number<int>("pnumF", f[5]);
    r.pnum_edge = parse_number<int>("pnumE", f[6]);
    r.setup_s = parse_number<double>("setup_s", f[7]);
    r.gevp_s = parse_number<double>("gevp_s", f[8]);
    r.solve_s = parse_number<double>("solve_s", f[9]);
    const std::string conv = boost::trim_copy(f[10]);
    if (conv != "true" && conv != "false") {
      throw std::invalid_argument("results CSV: bad converged flag '" + conv + "'");
    }
    r.converged = conv == "true";
    rows.push_back(r);
  }
  return rows;
}

void write_results_table(const std::vector<ResultRow>& rows, std::ostream& os) {
  std::vector<std::string> order;
  std::map<std::string, std::map<std::string, const ResultRow*>> by_case;
  for (const ResultRow& r : rows) {
    if (!by_case.count(r.case_name)) order.push_back(r.case_name);
    by_case[r.case_name][r.variant] = &r;
  }
  std::size_t width = 4;
  for (const auto& name : order) width = std::max(width, name.size());

  auto cell = [](const ResultRow* r) -> std::string {
    if (!r) return "-";
    if (!r->error.empty()) return "error";
    std::string s = format_cell(r->iterations, r->pnum_face, r->pnum_edge);
    if (!r->converged) s += "*";
    return s;
  };
  auto times = [](const ResultRow* r) -> std::string {
    if (!r || !r->error.empty()) return "-";
    std::ostringstream t;
    t << std::fixed << std::setprecision(3) << r->setup_s << '/' << r->gevp_s << '/'
      << r->solve_s;
    return t.str();
  };

  os << std::left << std::setw(static_cast<int>(width) + 2) << "case" << std::setw(5) << "N"
     << std::setw(5) << "m" << std::setw(14) << "old" << std::setw(14) << "new"
     << std::setw(24) << "old setup/gevp/solve" << "new setup/gevp/solve" << '\n';
  for (const auto& name : order) {
    const auto& v = by_case[name];
    const ResultRow* o = v.count("old") ? v.at("old") : nullptr;
    const ResultRow* n = v.count("new") ? v.at("new") : nullptr;
    const ResultRow* any = o ? o : n;
    os << std::setw(static_cast<int>(width) + 2) << name << std::setw(5) << any->subdomains
       << std::setw(5) << any->m << std::setw(14) << cell(o) << std::setw(14) << cell(n)
       << std::setw(24) << times(o) << times(n) << '\n';
  }
  os << "cells: iterations(face primal, edge primal); * = not converged\n";
}

void emit_tables(const std::vector<ResultRow>& rows, const std::filesystem::path& dir) {
  if (rows.empty()) throw std::invalid_argument("emit_tables: no rows");
  std::filesystem::create_directories(dir);
  {
    std::ofstream csv(dir / "results.csv");
    write_results_csv(rows, csv);
    if (!csv) throw std::runtime_error("failed writing " + (dir / "results.csv").string());
  }
  std::ofstream txt(dir / "results.txt");
  write_results_table(rows, txt);
  if (!txt) throw std::runtime_error("failed writing " + (dir / "results.txt").string());
}

}  // namespace abddc
