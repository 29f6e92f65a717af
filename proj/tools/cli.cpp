#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>

#include "CLI11.hpp"
#include "regsaddle/errors.hpp"
#include "regsaddle/mps_io.hpp"

namespace regsaddle::cli {

namespace fs = std::filesystem;

namespace {

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::vector<Index> pick(std::mt19937_64& rng, Index from, Index count) {
  std::vector<Index> all(static_cast<std::size_t>(from));
  for (Index i = 0; i < from; ++i) all[i] = i;
  for (Index i = 0; i < count; ++i) {
    const auto j = i + static_cast<Index>(rng() % static_cast<std::uint64_t>(from - i));
    std::swap(all[i], all[j]);
  }
  all.resize(static_cast<std::size_t>(count));
  return all;
}

// theta^{-1} spread over [10^lo, 10^hi]
std::vector<double> log_uniform(std::mt19937_64& rng, Index n, double lo, double hi) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = std::pow(10.0, lo + (hi - lo) * unit(rng));
  return v;
}

double delta_for(std::uint64_t seed) { return seed % 2 ? 1e-2 : 1e-4; }
double rho_for(std::uint64_t seed) { return (seed / 2) % 2 ? 1e-2 : 1e-4; }

void pne_cases(std::uint64_t seed, const SuiteOptions& o, std::vector<SuiteCase>& out) {
  const Index m = 15, n = 30;
  std::mt19937_64 rng(seed * 7919 + 1);
  const auto a = generate_problem({.m = m, .n = n, .density = 0.2, .seed = seed}).A;
  const double delta = delta_for(seed), rho = rho_for(seed);
  auto g = log_uniform(rng, n, -4.0, 4.0);
  for (auto& v : g) v = 1.0 / (v + rho);
  const NeInstance inst{a, g, delta};
  for (Index kc = 0; kc <= 3; ++kc) {
    if (o.kc && *o.kc != kc) continue;
    for (Index kr = 0; kr <= 3; ++kr) {
      if (o.kr && *o.kr != kr) continue;
      const auto plan = make_plan(m, n, pick(rng, n, kc), pick(rng, m, kr));
      out.push_back({"pne", seed, check_pne_intervals(inst, plan)});
    }
  }
  if (o.kc && *o.kc > 3) {
    const auto plan = make_plan(m, n, pick(rng, n, *o.kc), pick(rng, m, o.kr.value_or(0)));
    out.push_back({"pne", seed, check_pne_intervals(inst, plan)});
  }
}

SaddleInstance saddle_instance(std::uint64_t seed, std::mt19937_64& rng,
                               const std::vector<Index>& heavy) {
  const Index m = 10, n = 20;
  const auto p = generate_problem({.m = m, .n = n, .density = 0.2, .qp = true, .seed = seed});
  auto theta_inv = log_uniform(rng, n, -2.0, 2.0);
  for (Index j : heavy) theta_inv[j] *= 1e2;
  return {p.A, add_diagonal(p.H, theta_inv), rho_for(seed), delta_for(seed)};
}

void pas_cases(std::uint64_t seed, const SuiteOptions& o, std::vector<SuiteCase>& out) {
  std::mt19937_64 rng(seed * 104729 + 2);
  const Index m = 10, n = 20;
  const Index kc = o.kc.value_or(static_cast<Index>(seed % 4));
  const Index kr = o.kr.value_or(static_cast<Index>(seed % 2));
  const auto drop = pick(rng, n, kc);
  const auto inst = saddle_instance(seed, rng, drop);
  out.push_back({"pas", seed,
                 check_pas_intervals(inst, make_plan(m, n, drop, pick(rng, m, kr)),
                                     HessianMode::diag_all)});
  out.push_back({"pas", seed,
                 check_pas_intervals(inst, make_plan(m, n, drop, {}),
                                     HessianMode::diag_on_n_full_on_b)});
}

void pk_cases(std::uint64_t seed, const SuiteOptions& o, std::vector<SuiteCase>& out) {
  std::mt19937_64 rng(seed * 15485863 + 3);
  const Index m = 10, n = 20;
  const Index kc = o.kc.value_or(static_cast<Index>(seed % 4));
  const auto drop = pick(rng, n, kc);
  const auto inst = saddle_instance(seed, rng, drop);
  out.push_back({"pk", seed, check_pk_spectrum(inst, make_plan(m, n, {}, {}))});
  if (kc > 0) out.push_back({"pk", seed, check_pk_spectrum(inst, make_plan(m, n, drop, {}))});
}

void lp_cases(std::uint64_t seed, const SuiteOptions&, std::vector<SuiteCase>& out) {
  std::mt19937_64 rng(seed * 32452843 + 4);
  const Index m = 15, n = 30;
  const auto a = generate_problem({.m = m, .n = n, .density = 0.2, .seed = seed}).A;
  const double rho = rho_for(seed);
  auto g = log_uniform(rng, n, -4.0, 4.0);
  for (auto& v : g) v = 1.0 / (v + rho);
  const auto part = partition_variables(g, 1e-2, 1.0);
  out.push_back({"lp", seed, check_lp_bound({a, g, delta_for(seed)}, part)});
}

void add_solver_flags(CLI::App* sub, SolverOptions& s, std::string& precond) {
  sub->add_option("--precond", precond, "Preconditioner")
      ->check(CLI::IsMember({"pne-chol", "pne-ldl", "pas-chol", "pas-ldl", "pk"}))
      ->capture_default_str();
  sub->add_option("--tol", s.tol, "Relative optimality tolerance")->capture_default_str();
  sub->add_option("--max-iter", s.max_ipm_iters, "Maximum interior-point iterations")
      ->capture_default_str();
  sub->add_option("--max-pcg", s.max_pcg, "PCG iteration cap per Newton system")
      ->capture_default_str();
  sub->add_option("--max-minres", s.max_minres, "MINRES iteration cap per Newton system")
      ->capture_default_str();
  sub->add_option("--col-density", s.col_density,
                  "Columns of A with at least this fraction of entries are dropped")
      ->capture_default_str();
  sub->add_option("--row-density", s.row_density,
                  "Rows of A with at least this fraction of entries are sparsified")
      ->capture_default_str();
  sub->add_option("--max-drop", s.max_drop, "Upper bound on dense columns dropped")
      ->capture_default_str();
  sub->add_option("--kappa", s.kappa, "Partition threshold factor for basic/non-basic columns")
      ->capture_default_str();
}

void check_threads() {
  if (const char* t = std::getenv("REGSADDLE_THREADS"); t && std::string(t) != "1")
    throw std::invalid_argument("REGSADDLE_THREADS must be 1 (got '" + std::string(t) + "')");
}

void write_trace(std::ostream& os, const IpmTrace& trace) {
  os << "iteration,mu,delta,rho,krylov_predictor,krylov_corrector,relres_predictor,"
        "relres_corrector,factor_nnz,primal_residual,dual_residual,alpha_primal,alpha_dual,"
        "dropped_cols,sparsified_rows,regularization_raised\n";
  for (const auto& r : trace.iterations)
    os << r.iteration << ',' << format_double(r.mu) << ',' << format_double(r.delta) << ','
       << format_double(r.rho) << ',' << r.krylov_predictor << ',' << r.krylov_corrector << ','
       << format_double(r.relres_predictor) << ',' << format_double(r.relres_corrector) << ','
       << r.factor_nnz << ',' << format_double(r.primal_residual) << ','
       << format_double(r.dual_residual) << ',' << format_double(r.alpha_primal) << ','
       << format_double(r.alpha_dual) << ',' << r.dropped_cols << ',' << r.sparsified_rows
       << ',' << (r.regularization_raised ? 1 : 0) << '\n';
}

}  // namespace

ProblemQP load_problem(const std::string& path) {
  if (!fs::exists(path)) throw std::runtime_error("no such file: '" + path + "'");
  auto raw = read_mps_file(path);
  if (raw.name.empty()) raw.name = fs::path(path).stem().string();
  return standardize(raw);
}

std::vector<SuiteCase> run_spectra_suite(const SuiteOptions& o) {
  std::vector<SuiteCase> out;
  const bool all = o.theorem == "all";
  for (Index s = 0; s < o.seeds; ++s) {
    const std::uint64_t seed = o.first_seed + static_cast<std::uint64_t>(s);
    if (all || o.theorem == "pne") pne_cases(seed, o, out);
    if (all || o.theorem == "pas") pas_cases(seed, o, out);
    if (all || o.theorem == "pk") pk_cases(seed, o, out);
    if (all || o.theorem == "lp") lp_cases(seed, o, out);
  }
  return out;
}

int run_solve(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto problem = load_problem(cfg.input);
  auto opts = cfg.solver;
  if (cfg.verbosity > 0)
    opts.on_iteration = [&err](const IpmIterationRecord& r) {
      err << "iter " << std::setw(3) << r.iteration << "  mu " << std::scientific
          << std::setprecision(3) << r.mu << "  pres " << r.primal_residual << "  dres "
          << r.dual_residual << "  krylov " << r.krylov_predictor << '+' << r.krylov_corrector
          << "  nnz " << r.factor_nnz << std::defaultfloat << '\n';
    };
  const auto res = solve(problem, opts);
  const std::string status = to_string(res.status);

  out << "problem    " << problem.name << " (m=" << problem.m() << ", n=" << problem.n() << ")\n"
      << "status     " << status << '\n'
      << "objective  " << std::setprecision(12) << res.objective << std::defaultfloat << '\n'
      << "route      " << to_string(res.route)
      << (res.normal_equations ? " (PCG, normal equations)" : " (MINRES, saddle point)") << '\n'
      << "iterations " << res.trace.iterations.size() << ", krylov " << res.trace.total_krylov()
      << ", max nnz " << res.trace.max_factor_nnz() << '\n';
  if (!res.message.empty()) out << "note       " << res.message << '\n';

  if (cfg.output.empty()) {
    write_report(out, res.trace, res.state, problem, status, res.seconds);
  } else {
    std::ofstream f(cfg.output);
    if (!f) throw std::runtime_error("cannot write '" + cfg.output + "'");
    write_report(f, res.trace, res.state, problem, status, res.seconds);
  }
  if (!cfg.trace.empty()) {
    std::ofstream f(cfg.trace);
    if (!f) throw std::runtime_error("cannot write '" + cfg.trace + "'");
    write_trace(f, res.trace);
  }
  return res.status == SolveStatus::converged ? 0 : 2;
}

int run_spectra(const CliConfig& cfg, std::ostream& out, std::ostream&) {
  SuiteOptions o;
  o.first_seed = cfg.seed;
  o.seeds = cfg.seeds;
  o.theorem = cfg.theorem;
  o.kc = cfg.kc;
  o.kr = cfg.kr;
  const auto cases = run_spectra_suite(o);
  std::map<std::string, std::pair<Index, Index>> tally;  // theorem -> (passed, total)
  Index failed = 0;
  for (const auto& c : cases) {
    out << "seed " << std::setw(4) << c.seed << "  " << format_report(c.report) << '\n';
    auto& t = tally[c.theorem];
    ++t.second;
    if (c.report.pass) ++t.first;
    else ++failed;
  }
  out << "\n";
  for (const auto& [name, t] : tally)
    out << std::left << std::setw(5) << name << std::right << ' ' << t.first << '/' << t.second
        << (t.first == t.second ? "  PASS" : "  FAIL") << '\n';
  if (failed > 0) {
    out << "failing seeds:";
    for (const auto& c : cases)
      if (!c.report.pass) out << ' ' << c.theorem << ':' << c.seed;
    out << '\n';
  }
  return failed == 0 ? 0 : 1;
}

int run_bench(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
  if (!fs::is_directory(cfg.input)) throw std::runtime_error("not a directory: '" + cfg.input + "'");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(cfg.input)) {
    if (!e.is_regular_file()) continue;
    auto ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (ext == ".mps" || ext == ".qps") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });

  std::ofstream f;
  std::ostream* csv = &out;
  bool header = true;
  if (!cfg.output.empty()) {
    header = !fs::exists(cfg.output) || fs::file_size(cfg.output) == 0;
    f.open(cfg.output, std::ios::app);
    if (!f) throw std::runtime_error("cannot write '" + cfg.output + "'");
    csv = &f;
  }
  if (header) write_report_header(*csv);

  bool any_error = false;
  for (const auto& path : files) {
    const auto name = path.stem().string();
    try {
      const auto problem = load_problem(path.string());
      const auto res = solve(problem, cfg.solver);
      write_report_row(*csv, make_report_row(name, to_string(res.status), res.trace, res.seconds,
                                             res.objective));
      if (cfg.verbosity > 0) err << name << ": " << to_string(res.status) << '\n';
    } catch (const std::exception& e) {
      any_error = true;
      err << name << ": error: " << e.what() << '\n';
      write_report_row(*csv, make_report_row(name, "error", {}, 0.0, std::nan("")));
    }
  }
  return any_error ? 1 : 0;
}

int run_gen(const CliConfig& cfg, std::ostream& out, std::ostream&) {
  auto g = cfg.gen;
  g.seed = cfg.seed;
  const auto problem = generate_problem(g);
  if (cfg.output.empty()) {
    write_mps(out, problem);
    return 0;
  }
  std::ofstream f(cfg.output);
  if (!f) throw std::runtime_error("cannot write '" + cfg.output + "'");
  write_mps(f, problem);
  if (!f) throw std::runtime_error("write failed: '" + cfg.output + "'");
  return 0;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  // one configuration per subcommand: CLI11 resets flags bound in unused subcommands
  CliConfig solve_cfg, spectra_cfg, bench_cfg, gen_cfg;
  solve_cfg.subcommand = Subcommand::solve;
  spectra_cfg.subcommand = Subcommand::spectra;
  bench_cfg.subcommand = Subcommand::bench;
  gen_cfg.subcommand = Subcommand::gen;
  std::string solve_precond = "pne-chol", bench_precond = "pne-chol";

  CLI::App app{"Interior-point LP/QP solver with sparsified saddle-point preconditioners",
               "regsaddle"};
  app.require_subcommand(1);

  auto* solve_cmd = app.add_subcommand("solve", "Solve one MPS/QPS instance");
  solve_cmd->add_option("-i,--input", solve_cfg.input, "MPS or QPS file")->required();
  solve_cmd->add_option("-o,--output", solve_cfg.output, "CSV report file (default: standard output)");
  solve_cmd->add_option("--trace", solve_cfg.trace, "Per-iteration CSV trace file");
  add_solver_flags(solve_cmd, solve_cfg.solver, solve_precond);
  solve_cmd->add_flag("-v,--verbose", solve_cfg.verbosity, "Print one line per iteration to stderr");

  auto* spectra_cmd = app.add_subcommand("spectra", "Check eigenvalue bounds on random instances");
  spectra_cmd->add_option("--seeds", spectra_cfg.seeds, "Number of seeds")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  spectra_cmd->add_option("--seed", spectra_cfg.seed, "First seed")->capture_default_str();
  spectra_cmd->add_option("--theorem", spectra_cfg.theorem, "Which check to run")
      ->check(CLI::IsMember({"pne", "pas", "pk", "lp", "all"}))
      ->capture_default_str();
  spectra_cmd->add_option("--kc", spectra_cfg.kc, "Only this number of dropped columns")
      ->check(CLI::NonNegativeNumber);
  spectra_cmd->add_option("--kr", spectra_cfg.kr, "Only this number of sparsified rows")
      ->check(CLI::NonNegativeNumber);

  auto* bench_cmd = app.add_subcommand("bench", "Solve every MPS/QPS file in a directory");
  bench_cmd->add_option("-i,--input", bench_cfg.input, "Directory of instances")->required();
  bench_cmd->add_option("-o,--output", bench_cfg.output,
                        "CSV file to append to (default: standard output)");
  add_solver_flags(bench_cmd, bench_cfg.solver, bench_precond);
  bench_cmd->add_flag("-v,--verbose", bench_cfg.verbosity, "Print the status of each file to stderr");

  auto* gen_cmd = app.add_subcommand("gen", "Write a random feasible LP/QP in MPS format");
  gen_cmd->add_option("--m", gen_cfg.gen.m, "Rows")->capture_default_str();
  gen_cmd->add_option("--n", gen_cfg.gen.n, "Columns (at least m)")->capture_default_str();
  gen_cmd->add_option("--density", gen_cfg.gen.density, "Entry fraction of ordinary columns")
      ->capture_default_str();
  gen_cmd->add_option("--dense-cols", gen_cfg.gen.dense_cols, "Completely full columns")
      ->capture_default_str();
  gen_cmd->add_option("--dense-rows", gen_cfg.gen.dense_rows, "Completely full rows")
      ->capture_default_str();
  gen_cmd->add_flag("--qp", gen_cfg.gen.qp, "Add a positive semidefinite quadratic term");
  gen_cmd->add_option("--cond", gen_cfg.gen.cond, "Column scales spread over [1, cond]")
      ->capture_default_str();
  gen_cmd->add_option("--seed", gen_cfg.seed, "Random seed")->capture_default_str();
  gen_cmd->add_option("-o,--output", gen_cfg.output, "Output file (default: standard output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  CliConfig& cfg = solve_cmd->parsed()     ? solve_cfg
                   : spectra_cmd->parsed() ? spectra_cfg
                   : bench_cmd->parsed()   ? bench_cfg
                                           : gen_cfg;
  try {
    check_threads();
    solve_cfg.solver.precond_kind = parse_precond_kind(solve_precond);
    bench_cfg.solver.precond_kind = parse_precond_kind(bench_precond);
    cfg.solver.validate();
    switch (cfg.subcommand) {
      case Subcommand::solve: return run_solve(cfg, out, err);
      case Subcommand::spectra: return run_spectra(cfg, out, err);
      case Subcommand::bench: return run_bench(cfg, out, err);
      case Subcommand::gen: return run_gen(cfg, out, err);
    }
  } catch (const ParseError& e) {
    err << "error: " << cfg.input << ": " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return 1;
}

}  // namespace regsaddle::cli
