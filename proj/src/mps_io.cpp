#include "regsaddle/mps_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace regsaddle {

namespace {

constexpr double kMpsInfinity = 1e30;

enum class Section { none, name, rows, columns, rhs, ranges, bounds, quadobj, qmatrix, objsense };

struct BadRecord {
  std::string reason;
};

std::string upper_case(std::string s) {
  for (char& ch : s) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return s;
}

std::vector<std::string> split_free(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Fields of the fixed layout: columns 2-3, 5-12, 15-22, 25-36, 40-47, 50-61.
std::vector<std::string> split_fixed(const std::string& line) {
  static constexpr std::pair<std::size_t, std::size_t> fields[] = {
      {1, 3}, {4, 12}, {14, 22}, {24, 36}, {39, 47}, {49, 61}};
  std::vector<std::string> out;
  for (const auto& [b, e] : fields) {
    if (b >= line.size()) break;
    auto f = trim(line.substr(b, std::min(e, line.size()) - b));
    if (!f.empty()) out.push_back(std::move(f));
  }
  return out;
}

double parse_number(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw BadRecord{"invalid number '" + s + "'"};
  return v;
}

double clamp_infinite(double v) {
  if (v >= kMpsInfinity) return kInf;
  if (v <= -kMpsInfinity) return -kInf;
  return v;
}

class Reader {
 public:
  RawInstance run(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    bool ended = false;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (trim(line).empty() || line[0] == '*') continue;
      try {
        if (line[0] != ' ' && line[0] != '\t') {
          if (header(line)) {
            ended = true;
            break;
          }
          continue;
        }
        data(line);
      } catch (const BadRecord& e) {
        throw ParseError(lineno, e.reason);
      }
    }
    if (!ended) throw ParseError(lineno + 1, "missing ENDATA");
    if (raw_.objective_row.empty()) throw ParseError(lineno, "no objective (N) row");
    return std::move(raw_);
  }

 private:
  // Returns true on ENDATA.
  bool header(const std::string& line) {
    const auto tok = split_free(line);
    const auto key = upper_case(tok[0]);
    if (key == "NAME") {
      section_ = Section::name;
      raw_.name = tok.size() > 1 ? trim(line.substr(line.find(tok[0]) + tok[0].size())) : "";
    } else if (key == "ROWS") {
      section_ = Section::rows;
    } else if (key == "COLUMNS") {
      section_ = Section::columns;
    } else if (key == "RHS") {
      section_ = Section::rhs;
    } else if (key == "RANGES") {
      section_ = Section::ranges;
    } else if (key == "BOUNDS") {
      section_ = Section::bounds;
    } else if (key == "QUADOBJ") {
      section_ = Section::quadobj;
    } else if (key == "QMATRIX" || key == "QSECTION") {
      section_ = Section::qmatrix;
    } else if (key == "OBJSENSE" || key == "OBJSENCE") {
      section_ = Section::objsense;
      if (tok.size() > 1) sense(upper_case(tok[1]));
    } else if (key == "ENDATA") {
      return true;
    } else {
      throw Unsupported("section " + tok[0]);
    }
    return false;
  }

  void sense(const std::string& s) {
    if (s == "MAX" || s == "MAXIMIZE") throw Unsupported("OBJSENSE MAX");
    if (s != "MIN" && s != "MINIMIZE") throw BadRecord{"unknown objective sense '" + s + "'"};
  }

  void data(const std::string& line) {
    if (section_ == Section::none || section_ == Section::name)
      throw BadRecord{"data record outside of a section"};
    const auto free = split_free(line);
    if (free.size() >= 2 && section_ == Section::columns &&
        (upper_case(free[1]) == "'MARKER'" || upper_case(free[1]) == "MARKER"))
      throw Unsupported("integer MARKER records");
    const auto snapshot = raw_;
    try {
      record(free);
    } catch (const BadRecord& first) {
      raw_ = snapshot;
      const auto fixed = split_fixed(line);
      if (fixed == free) throw;
      try {
        record(fixed);
      } catch (const BadRecord&) {
        raw_ = snapshot;
        throw first;
      }
    }
  }

  void record(const std::vector<std::string>& t) {
    switch (section_) {
      case Section::rows: rows_record(t); break;
      case Section::columns: columns_record(t); break;
      case Section::rhs: rhs_record(t, false); break;
      case Section::ranges: rhs_record(t, true); break;
      case Section::bounds: bounds_record(t); break;
      case Section::quadobj: quad_record(t, false); break;
      case Section::qmatrix: quad_record(t, true); break;
      case Section::objsense:
        if (t.size() != 1) throw BadRecord{"OBJSENSE expects one token"};
        sense(upper_case(t[0]));
        break;
      default: throw BadRecord{"data record outside of a section"};
    }
  }

  void rows_record(const std::vector<std::string>& t) {
    if (t.size() != 2) throw BadRecord{"ROWS record needs a type and a name"};
    const auto type = upper_case(t[0]);
    const std::string& name = t[1];
    if (row_index_.count(name) || name == raw_.objective_row || ignored_rows_.count(name))
      throw BadRecord{"duplicate row '" + name + "'"};
    if (type == "N") {
      if (raw_.objective_row.empty()) raw_.objective_row = name;
      else ignored_rows_.insert({name, 0});
      return;
    }
    if (type != "E" && type != "L" && type != "G")
      throw BadRecord{"unknown row type '" + t[0] + "'"};
    row_index_[name] = static_cast<Index>(raw_.rows.size());
    raw_.rows.push_back({name, type[0]});
    raw_.rhs.push_back(0.0);
    raw_.range.push_back(std::nan(""));
  }

  Index column(const std::string& name, bool create) {
    const auto it = col_index_.find(name);
    if (it != col_index_.end()) return it->second;
    if (!create) throw BadRecord{"unknown column '" + name + "'"};
    const auto j = static_cast<Index>(raw_.columns.size());
    col_index_[name] = j;
    raw_.columns.push_back(name);
    raw_.objective.push_back(0.0);
    raw_.lower.push_back(0.0);
    raw_.upper.push_back(kInf);
    return j;
  }

  void columns_record(const std::vector<std::string>& t) {
    if (t.size() != 3 && t.size() != 5)
      throw BadRecord{"COLUMNS record needs a column and one or two (row, value) pairs"};
    std::vector<std::pair<std::string, double>> pairs;
    for (std::size_t k = 1; k + 1 < t.size(); k += 2) {
      if (!row_index_.count(t[k]) && t[k] != raw_.objective_row && !ignored_rows_.count(t[k]))
        throw BadRecord{"unknown row '" + t[k] + "'"};
      pairs.emplace_back(t[k], parse_number(t[k + 1]));
    }
    const Index j = column(t[0], true);
    for (const auto& [row, v] : pairs) {
      if (row == raw_.objective_row) raw_.objective[j] += v;
      else if (const auto it = row_index_.find(row); it != row_index_.end())
        raw_.entries.push_back({it->second, j, v});
    }
  }

  void rhs_record(const std::vector<std::string>& t, bool ranges) {
    // optional set name: odd token count means it is present
    if (t.size() < 2 || t.size() > 5) throw BadRecord{"malformed RHS/RANGES record"};
    const std::size_t start = t.size() % 2;
    std::vector<std::pair<std::string, double>> pairs;
    for (std::size_t k = start; k + 1 < t.size(); k += 2) {
      if (!row_index_.count(t[k]) && t[k] != raw_.objective_row && !ignored_rows_.count(t[k]))
        throw BadRecord{"unknown row '" + t[k] + "'"};
      pairs.emplace_back(t[k], parse_number(t[k + 1]));
    }
    for (const auto& [row, v] : pairs) {
      const auto it = row_index_.find(row);
      if (it == row_index_.end()) {
        if (!ranges && row == raw_.objective_row) raw_.objective_rhs = v;
        continue;
      }
      (ranges ? raw_.range : raw_.rhs)[it->second] = v;
    }
  }

  void bounds_record(const std::vector<std::string>& t) {
    if (t.empty()) throw BadRecord{"empty BOUNDS record"};
    const auto type = upper_case(t[0]);
    const bool valued = type == "UP" || type == "LO" || type == "FX";
    const bool bare = type == "FR" || type == "MI" || type == "PL";
    if (type == "BV" || type == "LI" || type == "UI" || type == "SC" || type == "SI")
      throw Unsupported("bound type " + type);
    if (!valued && !bare) throw BadRecord{"unknown bound type '" + t[0] + "'"};
    std::string col;
    double v = 0.0;
    if (valued) {
      if (t.size() != 3 && t.size() != 4) throw BadRecord{"bound record needs a value"};
      col = t[t.size() - 2];
      v = clamp_infinite(parse_number(t.back()));
    } else {
      if (t.size() != 2 && t.size() != 3) throw BadRecord{"malformed bound record"};
      col = t.back();
    }
    const Index j = column(col, false);
    auto& lo = raw_.lower[j];
    auto& up = raw_.upper[j];
    if (type == "UP") {
      up = v;
      // a negative upper bound on a default lower bound makes the variable unbounded below
      if (v < 0.0 && !lower_set_.count(j) && lo == 0.0) lo = -kInf;
    } else if (type == "LO") {
      lo = v;
      lower_set_.insert({j, 0});
    } else if (type == "FX") {
      lo = up = v;
      lower_set_.insert({j, 0});
    } else if (type == "FR") {
      lo = -kInf;
      up = kInf;
      lower_set_.insert({j, 0});
    } else if (type == "MI") {
      lo = -kInf;
      lower_set_.insert({j, 0});
    } else {
      up = kInf;
    }
  }

  void quad_record(const std::vector<std::string>& t, bool both_triangles) {
    if (t.size() != 3) throw BadRecord{"quadratic record needs two columns and a value"};
    const Index i = column(t[0], false);
    const Index j = column(t[1], false);
    const double v = parse_number(t[2]);
    if (both_triangles) {
      if (i >= j) raw_.quadratic.push_back({i, j, v});
    } else {
      raw_.quadratic.push_back({std::max(i, j), std::min(i, j), v});
    }
  }

  RawInstance raw_;
  Section section_ = Section::none;
  std::unordered_map<std::string, Index> row_index_;
  std::unordered_map<std::string, Index> col_index_;
  std::unordered_map<std::string, int> ignored_rows_;
  std::unordered_map<Index, int> lower_set_;
};

}  // namespace

RawInstance read_mps(std::istream& in) { return Reader().run(in); }

RawInstance read_mps_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path + "'");
  return read_mps(f);
}

std::vector<double> StandardForm::recover(std::span<const double> x_std) const {
  std::vector<double> x(shift.size());
  for (std::size_t j = 0; j < shift.size(); ++j)
    x[j] = shift[j] + (index[j] >= 0 ? sign[j] * x_std[index[j]] : 0.0);
  return x;
}

StandardForm standardize_with_map(const RawInstance& raw) {
  const Index n0 = static_cast<Index>(raw.columns.size());
  const Index m0 = static_cast<Index>(raw.rows.size());
  StandardForm sf;
  sf.original_rows = m0;
  sf.shift.assign(static_cast<std::size_t>(n0), 0.0);
  sf.sign.assign(static_cast<std::size_t>(n0), 1.0);
  sf.index.assign(static_cast<std::size_t>(n0), -1);

  Index nvar = 0;
  std::vector<Index> free_vars;
  std::vector<std::pair<Index, double>> upper_rows;  // (standardized var, u - l)
  for (Index j = 0; j < n0; ++j) {
    const double l = raw.lower[j], u = raw.upper[j];
    if (l > u || l == kInf || u == -kInf)
      throw InfeasibleBounds("column '" + raw.columns[j] + "' has lower bound above upper bound");
    if (l == u) {
      sf.shift[j] = l;
      sf.sign[j] = 0.0;
      continue;
    }
    sf.index[j] = nvar;
    if (std::isfinite(l)) {
      sf.shift[j] = l;
      if (std::isfinite(u)) upper_rows.emplace_back(nvar, u - l);
    } else if (std::isfinite(u)) {
      sf.shift[j] = u;
      sf.sign[j] = -1.0;
    } else {
      free_vars.push_back(nvar);
    }
    ++nvar;
  }

  // constraint rows: a . shift moves to the right-hand side
  std::vector<double> ashift(static_cast<std::size_t>(m0), 0.0);
  std::vector<std::vector<std::pair<Index, double>>> row_entries(static_cast<std::size_t>(m0));
  for (const auto& t : raw.entries) {
    ashift[t.row] += t.value * sf.shift[t.col];
    if (sf.index[t.col] >= 0) row_entries[t.row].emplace_back(sf.index[t.col], t.value * sf.sign[t.col]);
  }

  std::vector<Triplet> a;
  std::vector<double> b;
  Index row = 0;
  std::vector<std::pair<Index, double>> range_rows;  // (slack, width)
  for (Index i = 0; i < m0; ++i) {
    const double r = raw.rhs[i], rg = raw.range[i];
    const bool ranged = !std::isnan(rg) && rg != 0.0;
    double lo = r, hi = r;
    switch (raw.rows[i].sense) {
      case 'E':
        if (ranged) (rg > 0.0 ? hi : lo) = r + rg;
        break;
      case 'L':
        lo = ranged ? r - std::abs(rg) : -kInf;
        break;
      case 'G':
        hi = ranged ? r + std::abs(rg) : kInf;
        break;
    }
    lo -= ashift[i];
    hi -= ashift[i];
    if (!std::isfinite(lo) && !std::isfinite(hi)) continue;
    for (const auto& [j, v] : row_entries[i]) a.push_back({row, j, v});
    if (lo == hi) {
      b.push_back(lo);
    } else if (!std::isfinite(lo)) {
      a.push_back({row, nvar++, 1.0});
      b.push_back(hi);
    } else if (!std::isfinite(hi)) {
      a.push_back({row, nvar++, -1.0});
      b.push_back(lo);
    } else {
      range_rows.emplace_back(nvar, hi - lo);
      a.push_back({row, nvar++, -1.0});
      b.push_back(lo);
    }
    ++row;
  }
  for (const auto& [s, w] : range_rows) {
    a.push_back({row, s, 1.0});
    a.push_back({row, nvar++, 1.0});
    b.push_back(w);
    ++row;
  }
  for (const auto& [j, w] : upper_rows) {
    a.push_back({row, j, 1.0});
    a.push_back({row, nvar++, 1.0});
    b.push_back(w);
    ++row;
  }

  // objective under x = shift + sign .* x_std
  const auto h0 = SparseMatrix::from_triplets(n0, n0, raw.quadratic, Symmetry::symmetric_lower);
  const auto hs = spmv(h0, sf.shift);
  std::vector<double> c(static_cast<std::size_t>(nvar), 0.0);
  double constant = -raw.objective_rhs;
  for (Index j = 0; j < n0; ++j) {
    constant += raw.objective[j] * sf.shift[j] + 0.5 * sf.shift[j] * hs[j];
    if (sf.index[j] >= 0) c[sf.index[j]] = sf.sign[j] * (raw.objective[j] + hs[j]);
  }
  std::vector<Triplet> h;
  for (const auto& t : raw.quadratic) {
    const Index i = sf.index[t.row], j = sf.index[t.col];
    if (i < 0 || j < 0) continue;
    h.push_back({std::max(i, j), std::min(i, j), t.value * sf.sign[t.row] * sf.sign[t.col]});
  }

  sf.problem = make_problem(SparseMatrix::from_triplets(row, nvar, a), std::move(b), std::move(c),
                            SparseMatrix::from_triplets(nvar, nvar, h, Symmetry::symmetric_lower),
                            std::move(free_vars), raw.name);
  sf.problem.objective_constant = constant;
  return sf;
}

ProblemQP standardize(const RawInstance& raw) { return standardize_with_map(raw).problem; }

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ec == std::errc() ? ptr : buf);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

void write_mps(std::ostream& out, const ProblemQP& p) {
  const Index n = p.n(), m = p.m();
  out << "NAME " << (p.name.empty() ? "problem" : p.name) << '\n' << "ROWS\n N obj\n";
  for (Index i = 0; i < m; ++i) out << " E r" << i << '\n';
  out << "COLUMNS\n";
  for (Index j = 0; j < n; ++j) {
    if (p.c[j] != 0.0) out << " x" << j << " obj " << format_double(p.c[j]) << '\n';
    const auto rows = p.A.col_rows(j);
    const auto vals = p.A.col_values(j);
    for (std::size_t k = 0; k < rows.size(); ++k)
      out << " x" << j << " r" << rows[k] << ' ' << format_double(vals[k]) << '\n';
    if (p.c[j] == 0.0 && rows.empty()) out << " x" << j << " obj 0\n";
  }
  out << "RHS\n";
  for (Index i = 0; i < m; ++i)
    if (p.b[i] != 0.0) out << " rhs r" << i << ' ' << format_double(p.b[i]) << '\n';
  if (p.objective_constant != 0.0)
    out << " rhs obj " << format_double(-p.objective_constant) << '\n';
  if (!p.free_set.empty()) {
    out << "BOUNDS\n";
    for (Index j : p.free_set) out << " FR bnd x" << j << '\n';
  }
  if (p.H.nnz() > 0) {
    out << "QUADOBJ\n";
    for (Index j = 0; j < n; ++j) {
      const auto rows = p.H.col_rows(j);
      const auto vals = p.H.col_values(j);
      for (std::size_t k = 0; k < rows.size(); ++k)
        out << " x" << j << " x" << rows[k] << ' ' << format_double(vals[k]) << '\n';
    }
  }
  out << "ENDATA\n";
}

ReportRow make_report_row(const std::string& name, const std::string& status,
                          const IpmTrace& trace, double time_seconds, double objective) {
  ReportRow r;
  r.name = name;
  r.status = status;
  r.ipm_iters = static_cast<Index>(trace.iterations.size());
  r.total_krylov = trace.total_krylov();
  r.avg_krylov = r.ipm_iters ? static_cast<double>(r.total_krylov) / r.ipm_iters : 0.0;
  if (!trace.iterations.empty())
    r.krylov_last =
        trace.iterations.back().krylov_predictor + trace.iterations.back().krylov_corrector;
  r.max_nnz = trace.max_factor_nnz();
  r.time_seconds = time_seconds;
  r.objective = objective;
  return r;
}

void write_report_header(std::ostream& out) {
  out << kReportHeader << '\n';
  if (!out) throw std::runtime_error("report: write failed");
}

void write_report_row(std::ostream& out, const ReportRow& r) {
  out << csv_field(r.name) << ',' << csv_field(r.status) << ',' << r.ipm_iters << ','
      << r.total_krylov << ',' << format_double(r.avg_krylov) << ',' << r.krylov_last << ','
      << r.max_nnz << ',' << format_double(r.time_seconds) << ',' << format_double(r.objective)
      << '\n';
  if (!out) throw std::runtime_error("report: write failed");
}

void write_report(std::ostream& out, const IpmTrace& trace, const IterateState& state,
                  const ProblemQP& problem, const std::string& status, double time_seconds) {
  write_report_header(out);
  if (trace.iterations.empty()) return;
  write_report_row(out, make_report_row(problem.name, status, trace, time_seconds,
                                        problem.objective(state.x)));
}

}  // namespace regsaddle
