#include "gridtopo/run.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "gridtopo/json_case.hpp"
#include "gridtopo/log.hpp"
#include "gridtopo/matpower.hpp"
#include "json.hpp"

namespace gridtopo {
namespace {

using nlohmann::ordered_json;

std::string lower(std::string s) {
  for (char& c : s) c = (char)std::tolower((unsigned char)c);
  return s;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Network load_network(const std::string& path) {
  auto dot = path.rfind('.');
  std::string ext = dot == std::string::npos ? "" : lower(path.substr(dot + 1));
  RawCase rc;
  try {
    rc = ext == "json" ? parse_json_case(path) : parse_matpower_acdc(path);
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
  try {
    return validate(rc);
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
}

const char* formulation_name(Formulation f) {
  switch (f) {
    case Formulation::ExactBigM: return "exact";
    case Formulation::Soc: return "soc";
    case Formulation::Lpac: return "lpac";
  }
  return "?";
}

const char* problem_kind_name(ProblemKind k) {
  switch (k) {
    case ProblemKind::Opf: return "opf";
    case ProblemKind::Ots: return "ots";
    case ProblemKind::Bs: return "bs";
    case ProblemKind::OtsBs: return "otsbs";
  }
  return "?";
}

Formulation formulation_from_name(const std::string& s) {
  std::string t = lower(s);
  if (t == "exact" || t == "bigm") return Formulation::ExactBigM;
  if (t == "soc") return Formulation::Soc;
  if (t == "lpac") return Formulation::Lpac;
  throw ConfigError("unknown formulation '" + s + "'");
}

ProblemKind problem_kind_from_name(const std::string& s) {
  std::string t = lower(s);
  if (t == "opf") return ProblemKind::Opf;
  if (t == "ots") return ProblemKind::Ots;
  if (t == "bs") return ProblemKind::Bs;
  if (t == "otsbs" || t == "ots+bs") return ProblemKind::OtsBs;
  throw ConfigError("unknown problem kind '" + s + "'");
}

SwitchScope scope_from_name(const std::string& s) {
  std::string t = lower(s);
  if (t == "none") return SwitchScope::None;
  if (t == "ac") return SwitchScope::Ac;
  if (t == "dc") return SwitchScope::Dc;
  if (t == "all") return SwitchScope::All;
  throw ConfigError("unknown switchable scope '" + s + "'");
}

void parse_split_list(const std::string& text, std::vector<RawSplitRequest>& out) {
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() &&
           (text[i] == ',' || std::isspace((unsigned char)text[i])))
      ++i;
    size_t j = i;
    while (j < text.size() && text[j] != ',' &&
           !std::isspace((unsigned char)text[j]))
      ++j;
    if (j > i) {
      std::string tok = text.substr(i, j - i);
      auto colon = tok.find(':');
      if (colon == std::string::npos)
        throw ConfigError("split '" + tok + "': expected side:bus");
      std::string side = lower(tok.substr(0, colon));
      RawSplitRequest req;
      if (side == "ac")
        req.side = 'a';
      else if (side == "dc")
        req.side = 'd';
      else
        throw ConfigError("split '" + tok + "': side must be ac or dc");
      std::string busstr = tok.substr(colon + 1);
      size_t used = 0;
      try {
        req.bus = std::stoi(busstr, &used);
      } catch (const std::exception&) {
        throw ConfigError("split '" + tok + "': bad bus id");
      }
      if (used != busstr.size())
        throw ConfigError("split '" + tok + "': bad bus id");
      out.push_back(req);
    }
    i = j;
  }
}

RunConfig parse_run_config_text(const std::string& text,
                                const std::string& filename) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(filename + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(filename + ": config must be a JSON object");

  static const std::set<std::string> known = {
      "case", "kind",        "formulations", "switchable", "splits",
      "exclusivity", "solver", "audit_tol",  "out",        "tag"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key()))
      throw ConfigError(filename + ": unknown key '" + it.key() + "'");

  RunConfig cfg;
  try {
    if (j.contains("case")) cfg.case_path = j["case"].get<std::string>();
    if (j.contains("kind"))
      cfg.kind = problem_kind_from_name(j["kind"].get<std::string>());
    if (j.contains("formulations"))
      for (const auto& f : j["formulations"])
        cfg.formulations.push_back(formulation_from_name(f.get<std::string>()));
    if (j.contains("switchable"))
      cfg.scope = scope_from_name(j["switchable"].get<std::string>());
    if (j.contains("splits"))
      for (const auto& s : j["splits"])
        parse_split_list(s.get<std::string>(), cfg.plan.splits);
    if (j.contains("exclusivity")) {
      std::string e = lower(j["exclusivity"].get<std::string>());
      if (e == "eq")
        cfg.exclusivity = Exclusivity::Equal;
      else if (e == "leq")
        cfg.exclusivity = Exclusivity::AtMostOne;
      else
        throw ConfigError(filename + ": exclusivity must be eq or leq");
    }
    if (j.contains("solver")) {
      const auto& s = j["solver"];
      static const std::set<std::string> sk = {"rel_gap",  "abs_gap",
                                               "feas_tol", "int_tol",
                                               "cone_tol", "time_limit",
                                               "max_nodes"};
      for (auto it = s.begin(); it != s.end(); ++it)
        if (!sk.count(it.key()))
          throw ConfigError(filename + ": unknown solver key '" + it.key() + "'");
      if (s.contains("rel_gap")) cfg.solver.rel_gap = s["rel_gap"].get<double>();
      if (s.contains("abs_gap")) cfg.solver.abs_gap = s["abs_gap"].get<double>();
      if (s.contains("feas_tol")) cfg.solver.feas_tol = s["feas_tol"].get<double>();
      if (s.contains("int_tol")) cfg.solver.int_tol = s["int_tol"].get<double>();
      if (s.contains("cone_tol")) cfg.solver.cone_tol = s["cone_tol"].get<double>();
      if (s.contains("time_limit"))
        cfg.solver.time_limit = s["time_limit"].get<double>();
      if (s.contains("max_nodes")) cfg.solver.max_nodes = s["max_nodes"].get<long>();
    }
    if (j.contains("audit_tol")) cfg.audit_tol = j["audit_tol"].get<double>();
    if (j.contains("out")) cfg.out_dir = j["out"].get<std::string>();
    if (j.contains("tag")) cfg.tag = j["tag"].get<std::string>();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(filename + ": " + e.what());
  }
  return cfg;
}

RunConfig parse_run_config(const std::string& path) {
  return parse_run_config_text(slurp(path), path);
}

std::string topology_to_json(const Topology& t) {
  ordered_json j;
  j["schema_version"] = 1;
  auto arr = [](const std::vector<char>& v) {
    ordered_json a = ordered_json::array();
    for (char c : v) a.push_back(c ? 1 : 0);
    return a;
  };
  j["ac_branches"] = arr(t.acbr);
  j["dc_branches"] = arr(t.dcbr);
  j["converters"] = arr(t.conv);
  j["switches"] = arr(t.sw);
  return j.dump(2) + "\n";
}

Topology parse_topology_text(const std::string& text, const Network& net,
                             const std::string& filename) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(filename + ": " + e.what());
  }
  if (!j.is_object())
    throw ConfigError(filename + ": topology must be a JSON object");
  static const std::set<std::string> known = {"schema_version", "ac_branches",
                                              "dc_branches", "converters",
                                              "switches"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key()))
      throw ConfigError(filename + ": unknown key '" + it.key() + "'");

  auto read = [&](const char* key, size_t want) {
    if (!j.contains(key))
      throw ConfigError(filename + ": missing key '" + key + "'");
    const auto& a = j[key];
    if (!a.is_array() || a.size() != want)
      throw ConfigError(filename + ": '" + key + "' must be an array of " +
                        std::to_string(want) + " entries");
    std::vector<char> v(want, 1);
    for (size_t i = 0; i < want; ++i) {
      const auto& el = a[i];
      int b;
      if (el.is_boolean())
        b = el.get<bool>() ? 1 : 0;
      else if (el.is_number_integer())
        b = el.get<int>();
      else
        b = -1;
      if (b != 0 && b != 1)
        throw ConfigError(filename + ": '" + std::string(key) + "[" +
                          std::to_string(i) + "]' must be 0 or 1");
      v[i] = (char)b;
    }
    return v;
  };
  Topology t;
  t.acbr = read("ac_branches", net.ac_branches.size());
  t.dcbr = read("dc_branches", net.dc_branches.size());
  t.conv = read("converters", net.converters.size());
  t.sw = read("switches", net.switches.size());
  return t;
}

Topology parse_topology(const std::string& path, const Network& net) {
  return parse_topology_text(slurp(path), net, path);
}

namespace {

// debug-level dispatch print for the continuous baseline; handy when a new
// case is being tuned against published objectives
void dump_dispatch(const Network& net, const MathModel& m,
                   const std::vector<double>& x) {
  double base = net.base_mva;
  for (size_t g = 0; g < net.gens.size(); ++g)
    log_debug("  gen %d bus %d pg %.3f qg %.3f MW", net.gens[g].id,
              net.gens[g].bus, x[m.idx.pg[g]] * base, x[m.idx.qg[g]] * base);
  for (size_t b = 0; b < net.ac_buses.size(); ++b)
    log_debug("  bus %d vm %.4f va %.3f deg", net.ac_buses[b].id,
              x[m.idx.vm[b]], x[m.idx.va[b]] * 180.0 / M_PI);
  for (size_t i = 0; i < net.ac_branches.size(); ++i) {
    const AcBranch& br = net.ac_branches[i];
    double pf = x[m.idx.pf[i]] * base, qf = x[m.idx.qf[i]] * base;
    double pt = x[m.idx.pt[i]] * base, qt = x[m.idx.qt[i]] * base;
    double s = std::max(std::hypot(pf, qf), std::hypot(pt, qt));
    log_debug("  acbr %d %d-%d pf %.2f qf %.2f pt %.2f qt %.2f |S| %.2f rate %.0f%s",
              br.id, br.from, br.to, pf, qf, pt, qt, s, br.s_max * base,
              br.s_max > 0 && s > 0.995 * br.s_max * base ? "  << binding" : "");
  }
  for (size_t i = 0; i < net.dc_branches.size(); ++i)
    log_debug("  dcbr %d %d-%d p %.2f rate %.0f", net.dc_branches[i].id,
              net.dc_branches[i].from, net.dc_branches[i].to,
              x[m.idx.pdc_f[i]] * base, net.dc_branches[i].p_max * base);
  for (size_t c = 0; c < net.converters.size(); ++c)
    log_debug("  conv %d pac %.3f qac %.3f pdc %.3f ic %.3f", net.converters[c].id,
              x[m.idx.pc_ac[c]] * base, x[m.idx.qc_ac[c]] * base,
              x[m.idx.pc_dc[c]] * base, x[m.idx.ic[c]]);
  for (size_t d = 0; d < net.dc_buses.size(); ++d)
    log_debug("  dcbus %d udc %.4f", net.dc_buses[d].id, x[m.idx.udc[d]]);
}

}  // namespace

StudyOutcome run_study(const RunConfig& cfg) {
  if (cfg.case_path.empty()) throw ConfigError("no case file given");
  if (cfg.formulations.empty())
    throw ConfigError("at least one formulation is required");

  Network base_net = load_network(cfg.case_path);
  bool bs_on = cfg.kind == ProblemKind::Bs || cfg.kind == ProblemKind::OtsBs;
  if (bs_on && cfg.plan.splits.empty())
    throw ConfigError("busbar study without any --split");
  if (!bs_on && !cfg.plan.splits.empty())
    throw ConfigError("--split only applies to busbar studies");

  StudyOutcome out;
  if (bs_on) {
    try {
      out.net = split_busbars(base_net, cfg.plan).net;
    } catch (const ValidationError& e) {
      throw ConfigError(e.what());
    }
  } else {
    out.net = base_net;
  }

  {
    ProblemSpec ps;
    ps.kind = ProblemKind::Opf;
    ps.formulation = Formulation::ExactBigM;
    MathModel bm = build_exact(base_net, ps);
    SolveResult br = solve_continuous(bm, base_net, cfg.solver);
    out.baseline_ok = br.status == SolveStatus::Optimal;
    out.baseline = out.baseline_ok ? br.obj : 0.0;
    if (!out.baseline_ok)
      log_warn("baseline optimization failed: %s", br.msg.c_str());
    else if (log_level() >= LogLevel::Debug)
      dump_dispatch(base_net, bm, br.x);
  }

  for (Formulation f : cfg.formulations) {
    FormulationOutcome r;
    r.formulation = f;
    ProblemSpec ps;
    ps.kind = cfg.kind;
    bool ots_on = cfg.kind == ProblemKind::Ots || cfg.kind == ProblemKind::OtsBs;
    ps.scope = ots_on ? cfg.scope : SwitchScope::None;
    ps.formulation = f;
    ps.exclusivity = cfg.exclusivity;
    MathModel m;
    try {
      m = build_model(out.net, ps);
    } catch (const std::exception& e) {
      r.solve.status = SolveStatus::Error;
      r.solve.msg = e.what();
      out.runs.push_back(std::move(r));
      continue;
    }
    r.binaries = (int)m.binaries.size();
    log_info("study: %s %s, %d binaries", problem_kind_name(cfg.kind),
             formulation_name(f), r.binaries);
    r.solve = m.binaries.empty() ? solve_continuous(m, out.net, cfg.solver)
                                 : solve(m, out.net, cfg.solver);
    bool have_point = (r.solve.status == SolveStatus::Optimal ||
                       r.solve.status == SolveStatus::Feasible) &&
                      !r.solve.x.empty();
    if (have_point) {
      r.topo = topology_from_solution(out.net, m, r.solve.binary_values);
      r.has_topo = true;
      if (out.baseline_ok)
        r.check = fix_and_check(out.net, r.topo, out.baseline, cfg.audit_tol);
      else
        r.check.msg = "no baseline objective";
    }
    out.runs.push_back(std::move(r));
  }
  return out;
}

namespace {

std::string short_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::string result_json_text(const RunConfig& cfg, const StudyOutcome& st) {
  ordered_json j;
  j["case"] = cfg.case_path;
  j["kind"] = problem_kind_name(cfg.kind);
  j["baseline_ok"] = st.baseline_ok;
  j["baseline_objective"] = st.baseline;
  ordered_json runs = ordered_json::array();
  for (const FormulationOutcome& r : st.runs) {
    ordered_json o;
    o["model"] = formulation_name(r.formulation);
    o["status"] = solve_status_name(r.solve.status);
    if (std::isfinite(r.solve.obj)) o["objective"] = r.solve.obj;
    if (std::isfinite(r.solve.bound)) o["bound"] = r.solve.bound;
    o["nodes"] = r.solve.nodes;
    o["binaries"] = r.binaries;
    ordered_json bv = ordered_json::array();
    for (double v : r.solve.binary_values) bv.push_back((int)std::llround(v));
    o["binary_values"] = bv;
    o["msg"] = r.solve.msg;
    if (r.has_topo) {
      o["topology"] = ordered_json::parse(topology_to_json(r.topo));
      o["check"] = ordered_json::parse(report_to_json(r.check));
    }
    runs.push_back(std::move(o));
  }
  j["runs"] = std::move(runs);
  return j.dump(2) + "\n";
}

std::string comparison_csv_text(const StudyOutcome& st) {
  std::ostringstream os;
  os << "model,opf_objective,topo_objective,time_s,binaries,ac_feasible,"
        "lo_vs_opf,benefit_pct\n";
  for (const FormulationOutcome& r : st.runs) {
    os << formulation_name(r.formulation) << ',';
    os << short_num(st.baseline) << ',';
    if (r.has_topo && r.check.opf_converged) os << short_num(r.check.objective);
    os << ',';
    char tbuf[32];
    std::snprintf(tbuf, sizeof tbuf, "%.3f", r.solve.time_s);
    os << tbuf << ',';
    os << r.binaries << ',';
    os << (r.check.ac_feasible ? 1 : 0) << ',';
    os << (r.check.lower_than_baseline ? 1 : 0) << ',';
    if (r.check.ac_feasible) os << short_num(r.check.benefit_pct);
    os << '\n';
  }
  return os.str();
}

std::string metadata_json_text(const StudyOutcome& st) {
  ordered_json j;
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::tm tmv{};
  gmtime_r(&t, &tmv);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tmv);
  j["generated_at"] = buf;
  ordered_json times = ordered_json::array();
  for (const FormulationOutcome& r : st.runs) {
    ordered_json o;
    o["model"] = formulation_name(r.formulation);
    o["solve_s"] = r.solve.time_s;
    o["check_s"] = r.check.time_s;
    times.push_back(std::move(o));
  }
  j["wall_times"] = std::move(times);
  return j.dump(2) + "\n";
}

int write_artifacts(const RunConfig& cfg, const StudyOutcome& st) {
  namespace fs = std::filesystem;
  std::string dir = cfg.out_dir.empty() ? "." : cfg.out_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir + "'");

  std::string tag = cfg.tag;
  if (tag.empty()) {
    tag = fs::path(cfg.case_path).stem().string();
    if (tag.empty()) tag = "study";
    tag += std::string("_") + problem_kind_name(cfg.kind);
  }
  auto put = [&](const std::string& name, const std::string& text) {
    fs::path p = fs::path(dir) / name;
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + p.string());
    f << text;
  };
  put(tag + "_result.json", result_json_text(cfg, st));
  put(tag + "_meta.json", metadata_json_text(st));
  put(tag + "_comparison.csv", comparison_csv_text(st));
  for (const FormulationOutcome& r : st.runs) {
    if (!r.has_topo) continue;
    std::string model = formulation_name(r.formulation);
    put(tag + "_" + model + "_topology.json", topology_to_json(r.topo));
    put(tag + "_" + model + "_case.json",
        write_json_case(apply_topology(st.net, r.topo)));
  }

  int code = 0;
  for (const FormulationOutcome& r : st.runs) {
    bool solved = r.solve.status == SolveStatus::Optimal ||
                  r.solve.status == SolveStatus::Feasible ||
                  r.solve.status == SolveStatus::Limit;
    if (!solved) code = 1;
  }
  return code;
}

}  // namespace gridtopo
