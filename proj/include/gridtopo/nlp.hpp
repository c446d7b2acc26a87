#pragma once

#include <string>
#include <vector>

#include "gridtopo/model.hpp"

namespace gridtopo {

struct NlpOptions {
  double tol = 1e-8;
  int max_iter = 150;
  double sigma = 0.1;    // centering parameter
  double tau = 0.99995;  // fraction to boundary
};

struct NlpResult {
  bool converged = false;
  double obj = 0.0;
  std::vector<double> x;  // model variable space, fixed binaries filled in
  int iters = 0;
  std::string msg;
};

// Primal-dual interior point solve of the smooth continuous problem left
// after every free binary takes the value given in zfix (aligned with
// m.binaries, rounded to 0/1). x_init optionally seeds the primal point;
// otherwise the variable x0 fields do. Finds a local KKT point; callers
// that need certificates audit the result independently.
NlpResult nlp_solve(const MathModel& m, const std::vector<double>& zfix,
                    const NlpOptions& opt = {},
                    const std::vector<double>* x_init = nullptr);

}  // namespace gridtopo
