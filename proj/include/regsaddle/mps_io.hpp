#pragma once

// MPS / QPS reading, conversion to the standard form of ProblemQP, MPS
// writing, and the CSV result report.
//
// Quadratic sections hold entries of H for the objective c^T x + 1/2 x^T H x.
// QUADOBJ lists one triangle; QMATRIX (and QSECTION) list both, and only the
// lower triangle is read so off-diagonal entries are not doubled.
//
// RANGES with value R on a row with right-hand side r:
//
//   row   sign of R   lower      upper
//   E     +           r          r + |R|
//   E     -           r - |R|    r
//   L     any         r - |R|    r
//   G     any         r          r + |R|

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "regsaddle/ippmm.hpp"
#include "regsaddle/qp_model.hpp"

namespace regsaddle {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct RowRecord {
  std::string name;
  char sense;  // 'E', 'L', 'G'
};

struct RawInstance {
  std::string name;
  std::string objective_row;
  std::vector<RowRecord> rows;      // constraint rows in order of declaration
  std::vector<std::string> columns; // in order of first appearance
  std::vector<Triplet> entries;     // (constraint row, column, value)
  std::vector<double> objective;    // per column
  std::vector<double> rhs;          // per constraint row
  double objective_rhs = 0.0;       // RHS given on the objective row
  std::vector<double> range;        // per row, NaN when absent
  std::vector<double> lower;        // per column, default 0
  std::vector<double> upper;        // per column, default +inf
  std::vector<Triplet> quadratic;   // lower triangle of H
};

/// Accepts free (whitespace separated) records and falls back to the fixed
/// column layout for records that do not parse as free format. Throws
/// ParseError(line, reason) or Unsupported(feature).
RawInstance read_mps(std::istream& in);
RawInstance read_mps_file(const std::string& path);

/// x = shift + sign .* x_std on the surviving columns; fixed columns have
/// index -1.
struct StandardForm {
  ProblemQP problem;
  std::vector<double> shift;
  std::vector<double> sign;
  std::vector<Index> index;  // original column -> standardized column
  Index original_rows = 0;

  /// Original variable values from a standardized x.
  std::vector<double> recover(std::span<const double> x_std) const;
};

/// L/G rows get slacks, ranged rows a bounded slack, finite lower bounds are
/// shifted out, finite upper bounds become rows with slacks, fixed variables
/// are substituted. The objective constant is -objective_rhs plus the terms
/// folded in by the substitutions. Throws InfeasibleBounds when lower > upper.
StandardForm standardize_with_map(const RawInstance& raw);
ProblemQP standardize(const RawInstance& raw);

/// Free-format MPS (QUADOBJ when H has entries). Every variable not in the
/// free set is nonnegative; the objective constant goes on the objective row.
void write_mps(std::ostream& out, const ProblemQP& problem);

struct ReportRow {
  std::string name;
  std::string status;
  Index ipm_iters = 0;
  Index total_krylov = 0;
  double avg_krylov = 0.0;
  Index krylov_last = 0;
  Index max_nnz = 0;
  double time_seconds = 0.0;
  double objective = 0.0;
};

inline constexpr const char* kReportHeader =
    "name,status,ipm_iters,total_krylov,avg_krylov,krylov_last,max_nnz,time_seconds,objective";

ReportRow make_report_row(const std::string& name, const std::string& status,
                          const IpmTrace& trace, double time_seconds, double objective);

void write_report_header(std::ostream& out);
void write_report_row(std::ostream& out, const ReportRow& row);

/// Header plus one row; header only when the trace is empty.
void write_report(std::ostream& out, const IpmTrace& trace, const IterateState& state,
                  const ProblemQP& problem, const std::string& status, double time_seconds);

/// Shortest decimal that reads back to the same double.
std::string format_double(double v);

/// RFC 4180 field quoting.
std::string csv_field(const std::string& s);

}  // namespace regsaddle
