#pragma once

#include <limits>
#include <string>
#include <vector>

#include "gridtopo/lp.hpp"
#include "gridtopo/model.hpp"
#include "gridtopo/nlp.hpp"

namespace gridtopo {

enum class SolveStatus { Optimal = 0, Feasible, Infeasible, Unbounded, Limit, Error };
const char* solve_status_name(SolveStatus s);

struct SolverOptions {
  double rel_gap = 1e-4;
  double abs_gap = 1e-6;
  double feas_tol = 1e-6;
  double int_tol = 1e-6;
  double cone_tol = 1e-7;
  double time_limit = 0.0;  // wall seconds, 0 = none
  long max_nodes = 0;       // 0 = none
  NlpOptions nlp;
  LpOptions lp;
};

struct SolveResult {
  SolveStatus status = SolveStatus::Error;
  double obj = std::numeric_limits<double>::infinity();     // incumbent
  double bound = -std::numeric_limits<double>::infinity();  // proven lower bound
  long nodes = 0;
  double time_s = 0.0;
  std::vector<double> x;              // incumbent point, model variable space
  std::vector<double> binary_values;  // aligned with model binaries, 0/1
  std::string msg;
};

// Branch and bound over the free binaries. Relaxation bounds come from the
// model's own linear rows (plus cone cuts for the lifted formulations); the
// exact formulation bounds each node through its conic lift of `net` and
// certifies incumbents with the smooth interior point solver. Feasible with
// a gap is reported honestly when the tree is exhausted without closing it.
SolveResult solve(const MathModel& m, const Network& net, const SolverOptions& opt = {});

// Continuous solve: binaries (if any) stay relaxed in the linear and conic
// formulations; the exact formulation requires a model without free
// binaries and returns its local optimum.
SolveResult solve_continuous(const MathModel& m, const Network& net,
                             const SolverOptions& opt = {});

// Exhaustive reference over at most 20 binaries, honoring the pairing rows;
// meant for tests on small cases.
SolveResult enumerate_oracle(const MathModel& m, const Network& net,
                             const SolverOptions& opt = {});

// Largest bound or row violation of the point, nonlinear terms included.
double max_violation(const MathModel& m, const std::vector<double>& x);

}  // namespace gridtopo
