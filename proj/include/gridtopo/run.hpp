#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "gridtopo/augment.hpp"
#include "gridtopo/bnb.hpp"
#include "gridtopo/feasibility.hpp"
#include "gridtopo/model.hpp"

namespace gridtopo {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One study: a case, a problem kind and the formulations to compare.
// Parsed from a config JSON (FORMATS.md); command line flags override.
struct RunConfig {
  std::string case_path;
  ProblemKind kind = ProblemKind::Opf;
  std::vector<Formulation> formulations;
  SwitchScope scope = SwitchScope::Ac;  // element scope when switching is on
  SplitPlan plan;                       // busbars to split
  Exclusivity exclusivity = Exclusivity::Equal;
  SolverOptions solver;
  double audit_tol = 1e-6;
  std::string out_dir = ".";
  std::string tag;  // artifact stem, defaults to the case name
};

RunConfig parse_run_config_text(const std::string& text,
                                const std::string& filename = "<config>");
RunConfig parse_run_config(const std::string& path);

// Case file by extension: .json is the native schema, anything else is
// treated as a MATPOWER file. Throws ConfigError on parse failures.
Network load_network(const std::string& path);

const char* formulation_name(Formulation f);
const char* problem_kind_name(ProblemKind k);
Formulation formulation_from_name(const std::string& s);
ProblemKind problem_kind_from_name(const std::string& s);
SwitchScope scope_from_name(const std::string& s);

// "ac:2,ac:4" or "dc:1" into split requests, appended to out.
void parse_split_list(const std::string& text, std::vector<RawSplitRequest>& out);

// Element states as a small JSON document, arrays in case table order.
std::string topology_to_json(const Topology& t);
Topology parse_topology_text(const std::string& text, const Network& net,
                             const std::string& filename = "<topology>");
Topology parse_topology(const std::string& path, const Network& net);

struct FormulationOutcome {
  Formulation formulation = Formulation::ExactBigM;
  SolveResult solve;
  int binaries = 0;
  Topology topo;            // from the incumbent; stored states when none
  bool has_topo = false;
  FeasibilityReport check;  // audit of that topology against the baseline
};

struct StudyOutcome {
  Network net;            // network the models were built on (post split)
  double baseline = 0.0;  // continuous exact optimum of the input case
  bool baseline_ok = false;
  std::vector<FormulationOutcome> runs;
};

// Loads the case (.m or .json by extension), applies the split plan for
// busbar studies, solves every requested formulation and audits each
// incumbent topology against the baseline.
StudyOutcome run_study(const RunConfig& cfg);

// Deterministic across reruns; wall clock data stays out (metadata file).
std::string result_json_text(const RunConfig& cfg, const StudyOutcome& st);
std::string comparison_csv_text(const StudyOutcome& st);
std::string metadata_json_text(const StudyOutcome& st);

// Writes <tag>_result.json, <tag>_meta.json, <tag>_comparison.csv and per
// formulation <tag>_<model>_topology.json plus <tag>_<model>_case.json into
// cfg.out_dir. Returns the process exit code: 0 when every run reached a
// solved status (limits included), 1 otherwise.
int write_artifacts(const RunConfig& cfg, const StudyOutcome& st);

}  // namespace gridtopo
