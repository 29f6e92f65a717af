#pragma once

// Reproducible random LP/QP instances with a strictly feasible primal and
// dual, for tests and benchmarks.

#include <cstdint>

#include "regsaddle/qp_model.hpp"

namespace regsaddle {

struct GenOptions {
  Index m = 20;
  Index n = 40;
  double density = 0.1;  // target fraction of stored entries in ordinary columns
  Index dense_cols = 0;  // completely full columns
  Index dense_rows = 0;  // completely full rows
  bool qp = false;
  double cond = 1.0;  // column scales spread over [1, cond]
  std::uint64_t seed = 1;
};

/// Ordinary columns hold at most m/2 entries, so exactly dense_cols columns
/// exceed half density. Throws std::invalid_argument when m > n or the
/// counts do not fit.
ProblemQP generate_problem(const GenOptions& opts);

}  // namespace regsaddle
