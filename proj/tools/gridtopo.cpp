#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gridtopo/feasibility.hpp"
#include "gridtopo/log.hpp"
#include "gridtopo/run.hpp"
#include "json.hpp"

using namespace gridtopo;

namespace {

struct StudyArgs {
  std::string config, case_path, switchable, exclusivity, out_dir, tag;
  std::vector<std::string> formulations, splits;
  double time_limit = -1.0;
  double audit_tol = -1.0;
  long max_nodes = -1;
};

void add_study_flags(CLI::App* cmd, StudyArgs& a) {
  cmd->add_option("--config", a.config, "config JSON; flags override its keys");
  cmd->add_option("--case", a.case_path, "case file (.m or .json)");
  cmd->add_option("--formulation", a.formulations, "exact|soc|lpac (repeatable)")
      ->delimiter(',');
  cmd->add_option("--split", a.splits, "busbars to split, e.g. ac:2,ac:4");
  cmd->add_option("--switchable", a.switchable, "element scope: ac|dc|all|none");
  cmd->add_option("--exclusivity", a.exclusivity, "pairing mode: eq|leq");
  cmd->add_option("--time-limit", a.time_limit, "seconds per solve");
  cmd->add_option("--max-nodes", a.max_nodes, "search node limit");
  cmd->add_option("--audit-tol", a.audit_tol, "feasibility audit tolerance");
  cmd->add_option("--out", a.out_dir, "output directory");
  cmd->add_option("--tag", a.tag, "artifact file stem");
}

RunConfig merge_config(const StudyArgs& a, ProblemKind kind) {
  RunConfig cfg;
  if (!a.config.empty()) cfg = parse_run_config(a.config);
  cfg.kind = kind;
  if (!a.case_path.empty()) cfg.case_path = a.case_path;
  if (!a.formulations.empty()) {
    cfg.formulations.clear();
    for (const std::string& f : a.formulations)
      cfg.formulations.push_back(formulation_from_name(f));
  }
  if (cfg.formulations.empty()) cfg.formulations = {Formulation::ExactBigM};
  if (!a.splits.empty()) {
    cfg.plan.splits.clear();
    for (const std::string& s : a.splits) parse_split_list(s, cfg.plan.splits);
  }
  if (!a.switchable.empty()) cfg.scope = scope_from_name(a.switchable);
  if (!a.exclusivity.empty()) {
    if (a.exclusivity == "eq")
      cfg.exclusivity = Exclusivity::Equal;
    else if (a.exclusivity == "leq")
      cfg.exclusivity = Exclusivity::AtMostOne;
    else
      throw ConfigError("--exclusivity must be eq or leq");
  }
  if (a.time_limit >= 0.0) cfg.solver.time_limit = a.time_limit;
  if (a.max_nodes >= 0) cfg.solver.max_nodes = a.max_nodes;
  if (a.audit_tol >= 0.0) cfg.audit_tol = a.audit_tol;
  if (!a.out_dir.empty()) cfg.out_dir = a.out_dir;
  if (!a.tag.empty()) cfg.tag = a.tag;
  return cfg;
}

int cmd_study(const StudyArgs& a, ProblemKind kind) {
  RunConfig cfg = merge_config(a, kind);
  StudyOutcome st = run_study(cfg);
  int code = write_artifacts(cfg, st);
  std::printf("baseline %s\n",
              st.baseline_ok ? std::to_string(st.baseline).c_str() : "failed");
  for (const FormulationOutcome& r : st.runs) {
    std::printf("%-5s  %-12s", formulation_name(r.formulation),
                solve_status_name(r.solve.status));
    if (std::isfinite(r.solve.obj)) std::printf("  obj %.6f", r.solve.obj);
    if (r.has_topo && r.check.opf_converged) {
      std::printf("  fixed %.6f  %s", r.check.objective,
                  r.check.ac_feasible ? "ac-feasible" : "not-ac-feasible");
      if (r.check.ac_feasible) std::printf("  benefit %.2f%%", r.check.benefit_pct);
    }
    std::printf("\n");
  }
  return code;
}

int cmd_check(const std::string& case_path, const std::string& topo_path,
              double baseline, double tol, std::string out_path) {
  Network net = load_network(case_path);
  Topology topo = parse_topology(topo_path, net);
  FeasibilityReport rep = fix_and_check(net, topo, baseline, tol);
  if (out_path.empty()) {
    out_path = std::filesystem::path(topo_path).stem().string() + "_report.json";
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + out_path);
  f << report_to_json(rep);
  f.close();
  if (!rep.topology_ok) {
    std::printf("verdict: infeasible-topology (%s)\n", rep.msg.c_str());
    return 1;
  }
  if (rep.ac_feasible)
    std::printf("verdict: ac-feasible, objective %.6f, benefit %.2f%%\n",
                rep.objective, rep.benefit_pct);
  else
    std::printf("verdict: not ac-feasible (%s)\n", rep.msg.c_str());
  return 0;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Rebuilds the comparison table from saved artifacts; wall times come from
// the sibling metadata file when present.
int cmd_report(const std::string& in_path, const std::string& out_path) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(slurp(in_path));
  } catch (const std::exception& e) {
    throw ConfigError(in_path + ": " + e.what());
  }
  std::map<std::string, double> times;
  std::string meta_path = in_path;
  const std::string suffix = "_result.json";
  if (meta_path.size() > suffix.size() &&
      meta_path.compare(meta_path.size() - suffix.size(), suffix.size(), suffix) == 0) {
    meta_path.replace(meta_path.size() - suffix.size(), suffix.size(), "_meta.json");
    std::ifstream mf(meta_path, std::ios::binary);
    if (mf) {
      std::ostringstream ss;
      ss << mf.rdbuf();
      try {
        auto mj = nlohmann::ordered_json::parse(ss.str());
        for (const auto& row : mj.at("wall_times"))
          times[row.at("model").get<std::string>()] = row.at("solve_s").get<double>();
      } catch (const std::exception&) {
      }
    }
  }
  std::ostringstream os;
  os << "model,opf_objective,topo_objective,time_s,binaries,ac_feasible,"
        "lo_vs_opf,benefit_pct\n";
  try {
    double baseline = j.at("baseline_objective").get<double>();
    for (const auto& r : j.at("runs")) {
      std::string model = r.at("model").get<std::string>();
      char buf[64];
      os << model << ',';
      std::snprintf(buf, sizeof buf, "%.10g", baseline);
      os << buf << ',';
      bool feas = false, lo = false;
      if (r.contains("check")) {
        const auto& c = r.at("check");
        feas = c.at("ac_feasible").get<bool>();
        lo = c.at("lower_than_baseline").get<bool>();
        if (c.at("opf_converged").get<bool>()) {
          std::snprintf(buf, sizeof buf, "%.10g", c.at("objective").get<double>());
          os << buf;
        }
        os << ',';
        std::snprintf(buf, sizeof buf, "%.3f",
                      times.count(model) ? times[model] : 0.0);
        os << buf << ',';
        os << r.at("binaries").get<int>() << ',';
        os << (feas ? 1 : 0) << ',' << (lo ? 1 : 0) << ',';
        if (feas) {
          std::snprintf(buf, sizeof buf, "%.10g", c.at("benefit_pct").get<double>());
          os << buf;
        }
      } else {
        os << ',';
        std::snprintf(buf, sizeof buf, "%.3f",
                      times.count(model) ? times[model] : 0.0);
        os << buf << ',' << r.at("binaries").get<int>() << ",0,0,";
      }
      os << '\n';
    }
  } catch (const std::exception& e) {
    throw ConfigError(in_path + ": not a study result file (" +
                      std::string(e.what()) + ")");
  }
  if (out_path.empty()) {
    std::fputs(os.str().c_str(), stdout);
  } else {
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + out_path);
    f << os.str();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"steady state topology optimization for hybrid AC/DC grids"};
  app.require_subcommand(1);

  StudyArgs sa;
  CLI::App* opf = app.add_subcommand("opf", "dispatch study, fixed topology");
  CLI::App* ots = app.add_subcommand("ots", "element switching study");
  CLI::App* bs = app.add_subcommand("bs", "busbar splitting study");
  add_study_flags(opf, sa);
  add_study_flags(ots, sa);
  add_study_flags(bs, sa);

  std::string chk_case, chk_topo, chk_out;
  double chk_baseline = 0.0, chk_tol = 1e-6;
  CLI::App* check = app.add_subcommand("check", "audit a saved topology");
  check->add_option("--case", chk_case, "case file")->required();
  check->add_option("--topology", chk_topo, "topology JSON")->required();
  check->add_option("--baseline", chk_baseline, "reference objective")->required();
  check->add_option("--tol", chk_tol, "residual tolerance");
  check->add_option("--out", chk_out, "report path");

  std::string rep_in, rep_out;
  CLI::App* report = app.add_subcommand("report", "comparison CSV from results");
  report->add_option("--in", rep_in, "study result JSON")->required();
  report->add_option("--out", rep_out, "CSV path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (opf->parsed()) return cmd_study(sa, ProblemKind::Opf);
    if (ots->parsed()) return cmd_study(sa, ProblemKind::Ots);
    if (bs->parsed()) return cmd_study(sa, ProblemKind::Bs);
    if (check->parsed())
      return cmd_check(chk_case, chk_topo, chk_baseline, chk_tol, chk_out);
    if (report->parsed()) return cmd_report(rep_in, rep_out);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
