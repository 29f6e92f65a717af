#pragma once

// Command-line front end: solve, spectra, bench and gen subcommands.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "regsaddle/generate.hpp"
#include "regsaddle/ippmm.hpp"
#include "regsaddle/spectra.hpp"

namespace regsaddle::cli {

enum class Subcommand { solve, spectra, bench, gen };

struct CliConfig {
  Subcommand subcommand = Subcommand::solve;
  std::string input;  // file for solve, directory for bench
  std::string output;
  std::string trace;  // per-iteration CSV (solve)
  SolverOptions solver;
  std::uint64_t seed = 1;
  int verbosity = 0;
  // spectra
  Index seeds = 30;
  std::string theorem = "all";
  std::optional<Index> kc;
  std::optional<Index> kr;
  // gen
  GenOptions gen;
};

/// Parses argv and dispatches. Returns the process exit code:
/// 0 success, 2 iteration limit, 1 error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

int run_solve(const CliConfig& cfg, std::ostream& out, std::ostream& err);
int run_spectra(const CliConfig& cfg, std::ostream& out, std::ostream& err);
int run_bench(const CliConfig& cfg, std::ostream& out, std::ostream& err);
int run_gen(const CliConfig& cfg, std::ostream& out, std::ostream& err);

/// Reads an MPS/QPS file and converts it to standard form.
ProblemQP load_problem(const std::string& path);

struct SuiteOptions {
  std::uint64_t first_seed = 1;
  Index seeds = 30;
  std::string theorem = "all";  // pne, pas, pk, lp or all
  std::optional<Index> kc;
  std::optional<Index> kr;
};

struct SuiteCase {
  std::string theorem;
  std::uint64_t seed = 0;
  SpectralReport report;
};

/// The randomized spectral sweep behind the spectra subcommand.
///   pne  m=15, n=30, delta and rho in {1e-2, 1e-4}, (kc, kr) in {0..3}^2
///   pas  m=10, n=20 QP, Diag(Q) and the block approximation
///   pk   m=10, n=20 QP, with and without dropped columns
///   lp   m=15, n=30, N from the partition at mu = 1e-2
std::vector<SuiteCase> run_spectra_suite(const SuiteOptions& opts);

}  // namespace regsaddle::cli
