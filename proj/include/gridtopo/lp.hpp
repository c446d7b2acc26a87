#pragma once

#include <vector>

#include "gridtopo/model.hpp"

namespace gridtopo {

enum class LpStatus { Optimal = 0, Infeasible, Unbounded, IterLimit, Numeric };

struct LpRow {
  std::vector<LinTerm> a;
  double lb = 0.0;
  double ub = 0.0;
};

struct LpProblem {
  std::vector<double> lb, ub, c;  // per structural column
  double c0 = 0.0;
  std::vector<LpRow> rows;
  size_t num_cols() const { return lb.size(); }
};

// Basis snapshot for warm starts. vstat entries: 0 basic, 1 at lower,
// 2 at upper, 3 free at zero; one entry per column plus one per row slack.
struct LpBasis {
  std::vector<int> basis;
  std::vector<char> vstat;
};

struct LpResult {
  LpStatus status = LpStatus::Numeric;
  double obj = 0.0;
  std::vector<double> x;
  LpBasis basis;
  int iters = 0;
};

struct LpOptions {
  int max_iters = 0;  // 0 = automatic from size
  double feas_tol = 1e-8;
  double opt_tol = 1e-9;
};

LpResult lp_solve(const LpProblem& p, const LpOptions& opt = {}, const LpBasis* warm = nullptr);

// Linear rows, bounds and objective of a model; nonlinear rows are
// rejected, cones are ignored (the cutting loop owns them).
LpProblem lp_from_model(const MathModel& m);

struct ConicOptions {
  double cone_tol = 1e-7;
  int max_rounds = 120;
  LpOptions lp;
};

struct ConicResult {
  LpStatus status = LpStatus::Numeric;
  double obj = 0.0;
  std::vector<double> x;
  LpBasis basis;
  int lp_iters = 0;
  int rounds = 0;
  double worst_violation = 0.0;
};

// Solves min c'x over the linear rows of `base` plus the rotated cones
// x*y >= sum u_k^2 (x,y >= 0), by iterated supporting hyperplanes over
// lp_solve. `pool` accumulates generated cuts so repeated calls with
// tightened bounds (branch and bound nodes) reuse earlier work; pass a
// fresh empty pool for standalone solves. `warm` may carry a basis for
// `base` extended by the pool rows present at the time it was taken.
ConicResult conic_solve(const LpProblem& base, const std::vector<Cone>& cones,
                        const ConicOptions& opt, std::vector<LpRow>& pool,
                        const LpBasis* warm = nullptr);

}  // namespace gridtopo
