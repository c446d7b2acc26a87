#pragma once

#include <string>
#include <vector>

#include "gridtopo/lp.hpp"

namespace gridtopo {

// CPLEX-style LP text of the linear problem. Range rows come out as two
// inequalities; columns are named x<i>. The objective constant cannot be
// carried by the format and is recorded in a leading comment.
std::string lp_file_text(const LpProblem& p, const std::vector<int>& binaries = {},
                         const std::string& name = "gridtopo");

// Export of a model's linear rows (nonlinear rows are rejected, cones are
// not exported; run the cutting loop first if they matter).
std::string lp_file_text(const MathModel& m);

// Third-party cross-check bridge, disabled unless the environment variable
// GRIDTOPO_LP_BRIDGE names a command. The command receives the LP file path
// as its one argument and must print the optimal objective as the first
// number on the last non-empty line of stdout. The returned objective
// includes the constant from the comment header.
bool bridge_enabled();
bool bridge_objective(const LpProblem& p, const std::vector<int>& binaries,
                      double* obj);

}  // namespace gridtopo
