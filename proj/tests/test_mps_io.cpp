#include <cmath>
#include <filesystem>
#include <sstream>

#include "dense_qp.hpp"
#include "doctest.h"
#include "helpers.hpp"
#include "regsaddle/mps_io.hpp"

using namespace regsaddle;
using testing::to_dense;

namespace {

RawInstance parse(const std::string& text) {
  std::istringstream in(text);
  return read_mps(in);
}

std::string fixture(const std::string& name) {
  return std::string(REGSADDLE_FIXTURES) + "/" + name;
}

double oracle_value(const ProblemQP& p) {
  const auto r = oracle::solve(oracle::from_problem(p));
  REQUIRE(r.converged);
  return r.objective;
}

std::size_t parse_error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

IpmTrace trace_with(std::initializer_list<std::pair<Index, Index>> counts) {
  IpmTrace t;
  t.initial_mu = 1.0;
  Index k = 0;
  for (auto [p, c] : counts) {
    IpmIterationRecord r;
    r.iteration = ++k;
    r.krylov_predictor = p;
    r.krylov_corrector = c;
    r.factor_nnz = 10 * k;
    t.iterations.push_back(r);
  }
  return t;
}

}  // namespace

TEST_CASE("minimal instance") {
  const auto raw = parse(
      "NAME one\nROWS\n N obj\n E r\nCOLUMNS\n x obj 1 r 1\nRHS\n rhs r 2\nENDATA\n");
  CHECK(raw.name == "one");
  CHECK(raw.objective_row == "obj");
  REQUIRE(raw.rows.size() == 1);
  CHECK(raw.rows[0].sense == 'E');
  CHECK(raw.columns == std::vector<std::string>{"x"});
  CHECK(raw.rhs == std::vector<double>{2.0});
  CHECK(raw.objective == std::vector<double>{1.0});
  CHECK(raw.lower == std::vector<double>{0.0});
  CHECK(std::isinf(raw.upper[0]));
  CHECK(std::isnan(raw.range[0]));
}

TEST_CASE("QUADOBJ entries are Hessian entries") {
  const auto raw = parse(
      "NAME q\nROWS\n N obj\n E r\nCOLUMNS\n x obj 1 r 1\nRHS\n rhs r 2\nQUADOBJ\n x x 2.0\n"
      "ENDATA\n");
  REQUIRE(raw.quadratic.size() == 1);
  CHECK(raw.quadratic[0].value == 2.0);
  const auto p = standardize(raw);
  CHECK(p.H.coeff(0, 0) == 2.0);
  const std::vector<double> x{3.0};
  CHECK(p.objective(x) == doctest::Approx(3.0 + 0.5 * 2.0 * 9.0));
}

TEST_CASE("QMATRIX with both triangles equals QUADOBJ with one") {
  const auto a = standardize(read_mps_file(fixture("qp_small.qps")));
  const auto b = standardize(read_mps_file(fixture("qp_qmatrix.qps")));
  CHECK((to_dense(a.H) - to_dense(b.H)).norm() == 0.0);
  CHECK(a.H.coeff(1, 0) == 1.0);
  CHECK(a.c == b.c);
  CHECK((to_dense(a.A) - to_dense(b.A)).norm() == 0.0);
}

TEST_CASE("a <= row becomes an equality with a slack") {
  const auto p = standardize(parse(
      "NAME s\nROWS\n N obj\n L r\nCOLUMNS\n x obj -1 r 1\nRHS\n rhs r 5\nENDATA\n"));
  CHECK(p.m() == 1);
  CHECK(p.n() == 2);
  CHECK(p.A.coeff(0, 0) == 1.0);
  CHECK(p.A.coeff(0, 1) == 1.0);
  CHECK(p.b == std::vector<double>{5.0});
  CHECK(p.c == std::vector<double>{-1.0, 0.0});
  CHECK(p.ineq_set.size() == 2);
  CHECK(oracle_value(p) == doctest::Approx(-5.0).epsilon(1e-8));
}

TEST_CASE("a fixed variable is substituted and folded into the constant") {
  const auto sf = standardize_with_map(parse(
      "NAME f\nROWS\n N obj\n E r\nCOLUMNS\n x obj 2 r 1\n y obj 1 r 1\nRHS\n rhs r 5\n"
      "BOUNDS\n FX b x 3\nENDATA\n"));
  const auto& p = sf.problem;
  CHECK(p.n() == 1);
  CHECK(p.b == std::vector<double>{2.0});
  CHECK(p.objective_constant == 6.0);
  CHECK(sf.index[0] == -1);
  const std::vector<double> xs{2.0};
  const auto x = sf.recover(xs);
  CHECK(x == std::vector<double>{3.0, 2.0});
  CHECK(p.objective(xs) == 8.0);
}

TEST_CASE("standardization preserves the optimum on every fixture") {
  std::size_t count = 0;
  for (const auto& e : std::filesystem::directory_iterator(REGSADDLE_FIXTURES)) {
    const auto path = e.path().string();
    INFO(path);
    const auto raw = read_mps_file(path);
    const auto direct = oracle::solve(oracle::from_raw(raw));
    REQUIRE(direct.converged);
    const double std_value = oracle_value(standardize(raw));
    CHECK(std::abs(std_value - direct.objective) <= 1e-6 * std::max(1.0, std::abs(direct.objective)));
    ++count;
  }
  CHECK(count >= 9);
}

TEST_CASE("known optima of the hand-written fixtures") {
  CHECK(oracle_value(standardize(read_mps_file(fixture("tiny.mps")))) ==
        doctest::Approx(-7.0).epsilon(1e-7));
  CHECK(oracle_value(standardize(read_mps_file(fixture("allbounds.mps")))) ==
        doctest::Approx(2.0).epsilon(1e-7));
  CHECK(oracle_value(standardize(read_mps_file(fixture("qp_small.qps")))) ==
        doctest::Approx(-2.0833333333).epsilon(1e-7));
  CHECK(oracle_value(standardize(read_mps_file(fixture("fixed_names.mps")))) ==
        doctest::Approx(6.0).epsilon(1e-7));
}

TEST_CASE("fixed-format names with spaces") {
  const auto raw = read_mps_file(fixture("fixed_names.mps"));
  CHECK(raw.name == "FIXED NAMES");
  CHECK(raw.columns == std::vector<std::string>{"COL A", "COL B"});
  CHECK(raw.rows[0].name == "ROW 1");
  CHECK(raw.upper[1] == 5.0);
}

TEST_CASE("ranges follow the sign table") {
  const auto raw = parse(
      "NAME r\nROWS\n N obj\n E e1\n E e2\n L l\n G g\nCOLUMNS\n x obj 1 e1 1\n x e2 1 l 1\n"
      " x g 1\nRHS\n rhs e1 1 e2 1\n rhs l 1 g 1\nRANGES\n rng e1 2 e2 -2\n rng l -3 g -3\n"
      "ENDATA\n");
  CHECK(raw.range == std::vector<double>{2.0, -2.0, -3.0, -3.0});
  // x in [1,3] and [-1,1] and [-2,1] and [1,4] gives x = 1 at the minimum
  const auto sf = standardize_with_map(raw);
  const auto r = oracle::solve(oracle::from_problem(sf.problem));
  REQUIRE(r.converged);
  std::vector<double> v(r.v.data(), r.v.data() + r.v.size());
  CHECK(sf.recover(v)[0] == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("write_mps round trip") {
  const std::vector<Triplet> at{{0, 0, 1.0}, {1, 0, -2.0}, {0, 1, 3.0}, {2, 2, 1.5},
                                {1, 3, 4.0}, {2, 4, -1.0}, {0, 4, 0.5}};
  const std::vector<Triplet> ht{{0, 0, 2.0}, {1, 0, 0.5}, {1, 1, 1.0}, {4, 4, 3.0}};
  auto p = make_problem(SparseMatrix::from_triplets(3, 5, at), {1.0, -2.0, 0.25},
                        {1.0, 0.0, -1.5, 2.0, 0.1},
                        SparseMatrix::from_triplets(5, 5, ht, Symmetry::symmetric_lower), {3},
                        "rt");
  p.objective_constant = 1.25;
  std::ostringstream os;
  write_mps(os, p);
  std::istringstream in(os.str());
  const auto q = standardize(read_mps(in));
  CHECK(q.m() == 3);
  CHECK(q.n() == 5);
  CHECK((to_dense(q.A) - to_dense(p.A)).norm() == 0.0);
  CHECK((to_dense(q.H) - to_dense(p.H)).norm() == 0.0);
  CHECK(q.b == p.b);
  CHECK(q.c == p.c);
  CHECK(q.free_set == p.free_set);
  CHECK(q.objective_constant == p.objective_constant);
}

TEST_CASE("write_mps keeps columns that appear nowhere") {
  const std::vector<Triplet> at{{0, 0, 1.0}};
  const auto p = make_problem(SparseMatrix::from_triplets(1, 2, at), {1.0}, {1.0, 0.0});
  std::ostringstream os;
  write_mps(os, p);
  std::istringstream in(os.str());
  CHECK(standardize(read_mps(in)).n() == 2);
}

TEST_CASE("format_double round trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 1e21, 123456789.125}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("csv quoting") {
  CHECK(csv_field("plain") == "plain");
  CHECK(csv_field("a,b") == "\"a,b\"");
  CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_field("two\nlines") == "\"two\nlines\"");
}

TEST_CASE("report rows") {
  const auto p = make_problem(SparseMatrix::identity(1).expand_symmetric(), {1.0}, {1.0});
  const IterateState st{{1.0}, {0.0}, {1.0}, 0.0, 0.0, 0.0};

  std::ostringstream empty;
  write_report(empty, IpmTrace{}, st, p, "converged", 0.0);
  CHECK(empty.str() == std::string(kReportHeader) + "\n");

  std::ostringstream one;
  write_report(one, trace_with({{2, 3}}), st, p, "converged", 0.5);
  std::istringstream lines(one.str());
  std::string header, row, extra;
  std::getline(lines, header);
  std::getline(lines, row);
  CHECK(header == kReportHeader);
  CHECK_FALSE(std::getline(lines, extra));
  CHECK(row == ",converged,1,5,5,5,10,0.5,1");

  const auto r = make_report_row("x", "converged", trace_with({{3, 5}, {3, 5}}), 1.0, 2.0);
  CHECK(r.total_krylov == 16);
  CHECK(r.avg_krylov == 8.0);
  CHECK(r.krylov_last == 8);
  CHECK(r.max_nnz == 20);
  CHECK(r.ipm_iters == 2);
}

TEST_CASE("parse errors carry line numbers") {
  CHECK(parse_error_line("NAME x\nROWS\n N obj\n E r\nCOLUMNS\n x obj abc\nENDATA\n") == 6);
  CHECK(parse_error_line("NAME x\nROWS\n N obj\n Q r\nENDATA\n") == 4);
  CHECK(parse_error_line("NAME x\nROWS\n N obj\nCOLUMNS\n x nosuchrow 1\nENDATA\n") == 5);
  CHECK(parse_error_line("NAME x\nROWS\n E r\nENDATA\n") > 0);
  CHECK(parse_error_line("NAME x\nROWS\n N obj\n E r\nCOLUMNS\n x obj 1\n") > 0);
  CHECK_THROWS_AS(read_mps_file("/nonexistent/file.mps"), std::runtime_error);
}

TEST_CASE("unsupported features") {
  CHECK_THROWS_AS(parse("NAME x\nROWS\n N obj\n E r\nCOLUMNS\n M1 'MARKER' 'INTORG'\n"
                        " x obj 1 r 1\n M2 'MARKER' 'INTEND'\nENDATA\n"),
                  Unsupported);
  CHECK_THROWS_AS(parse("NAME x\nOBJSENSE\n    MAX\nROWS\n N obj\nENDATA\n"), Unsupported);
  CHECK_THROWS_AS(parse("NAME x\nOBJSENSE MAX\nROWS\n N obj\nENDATA\n"), Unsupported);
  CHECK_THROWS_AS(parse("NAME x\nROWS\n N obj\n E r\nCOLUMNS\n x obj 1 r 1\nBOUNDS\n BV b x\n"
                        "ENDATA\n"),
                  Unsupported);
  CHECK_NOTHROW(parse("NAME x\nOBJSENSE\n    MIN\nROWS\n N obj\n E r\nCOLUMNS\n x obj 1 r 1\n"
                      "ENDATA\n"));
}

TEST_CASE("infeasible bounds") {
  CHECK_THROWS_AS(standardize(parse("NAME x\nROWS\n N obj\n E r\nCOLUMNS\n x obj 1 r 1\nBOUNDS\n"
                                    " LO b x 2\n UP b x 1\nENDATA\n")),
                  InfeasibleBounds);
}
