#include "gridtopo/json_case.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "gridtopo/network.hpp"
#include "json.hpp"

namespace gridtopo {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ParseError(where + ": " + what);
}

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) fail(where, "unknown key '" + it.key() + "'");
  }
}

double num(const json& obj, const std::string& where, const char* key, double dflt) {
  if (!obj.contains(key)) return dflt;
  const json& v = obj.at(key);
  if (!v.is_number()) fail(where + "/" + key, "must be a number");
  return v.get<double>();
}

double num_req(const json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key)) fail(where, std::string("missing required key '") + key + "'");
  return num(obj, where, key, 0.0);
}

int integer(const json& obj, const std::string& where, const char* key, int dflt) {
  if (!obj.contains(key)) return dflt;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) fail(where + "/" + key, "must be an integer");
  return v.get<int>();
}

int integer_req(const json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key)) fail(where, std::string("missing required key '") + key + "'");
  return integer(obj, where, key, 0);
}

bool boolean(const json& obj, const std::string& where, const char* key, bool dflt) {
  if (!obj.contains(key)) return dflt;
  const json& v = obj.at(key);
  if (!v.is_boolean()) fail(where + "/" + key, "must be a boolean");
  return v.get<bool>();
}

std::string str(const json& obj, const std::string& where, const char* key,
                const std::string& dflt) {
  if (!obj.contains(key)) return dflt;
  const json& v = obj.at(key);
  if (!v.is_string()) fail(where + "/" + key, "must be a string");
  return v.get<std::string>();
}

char side_from(const json& obj, const std::string& where) {
  std::string s = str(obj, where, "side", "ac");
  if (s == "ac") return 'a';
  if (s == "dc") return 'd';
  fail(where + "/side", "must be \"ac\" or \"dc\"");
}

const char* side_str(char s) { return s == 'd' ? "dc" : "ac"; }

SwitchTarget target_from(const std::string& s, const std::string& where) {
  if (s == "zil") return SwitchTarget::Zil;
  if (s == "ac_branch") return SwitchTarget::AcBranch;
  if (s == "dc_branch") return SwitchTarget::DcBranch;
  if (s == "converter") return SwitchTarget::Converter;
  if (s == "generator") return SwitchTarget::Generator;
  if (s == "load") return SwitchTarget::Load;
  fail(where, "unknown switch target '" + s + "'");
}

const char* target_str(SwitchTarget t) {
  switch (t) {
    case SwitchTarget::Zil: return "zil";
    case SwitchTarget::AcBranch: return "ac_branch";
    case SwitchTarget::DcBranch: return "dc_branch";
    case SwitchTarget::Converter: return "converter";
    case SwitchTarget::Generator: return "generator";
    case SwitchTarget::Load: return "load";
  }
  return "zil";
}

const json& arr(const json& doc, const std::string& key) {
  static const json empty = json::array();
  if (!doc.contains(key)) return empty;
  if (!doc.at(key).is_array()) fail("/" + key, "must be an array");
  return doc.at(key);
}

}  // namespace

RawCase parse_json_case_text(const std::string& text, const std::string& filename) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(filename + ": " + e.what());
  }
  if (!doc.is_object()) fail(filename, "top level must be an object");

  check_keys(doc, "/",
             {"schema_version", "name", "base_mva", "dc_poles", "ac_buses", "dc_buses",
              "generators", "loads", "ac_branches", "dc_branches", "converters", "switches",
              "split_plan", "busbar_splits"});

  int ver = integer_req(doc, "/", "schema_version");
  if (ver != 1) fail("/schema_version", "unsupported schema version " + std::to_string(ver));

  RawCase rc;
  rc.name = str(doc, "/", "name", "");
  rc.base_mva = num_req(doc, "/", "base_mva");
  rc.dc_poles = integer(doc, "/", "dc_poles", 2);

  size_t i = 0;
  for (const json& o : arr(doc, "ac_buses")) {
    std::string w = "/ac_buses/" + std::to_string(i++);
    check_keys(o, w, {"id", "type", "gs_mw", "bs_mvar", "vm", "va_deg", "base_kv", "vmax", "vmin"});
    RawAcBus b;
    b.id = integer_req(o, w, "id");
    b.type = integer(o, w, "type", 1);
    b.gs_mw = num(o, w, "gs_mw", 0.0);
    b.bs_mvar = num(o, w, "bs_mvar", 0.0);
    b.vm = num(o, w, "vm", 1.0);
    b.va_deg = num(o, w, "va_deg", 0.0);
    b.base_kv = num(o, w, "base_kv", 0.0);
    b.vmax = num_req(o, w, "vmax");
    b.vmin = num_req(o, w, "vmin");
    rc.ac_buses.push_back(b);
  }

  i = 0;
  for (const json& o : arr(doc, "dc_buses")) {
    std::string w = "/dc_buses/" + std::to_string(i++);
    check_keys(o, w, {"id", "grid", "vdc", "base_kv", "vdcmax", "vdcmin"});
    RawDcBus b;
    b.id = integer_req(o, w, "id");
    b.grid = integer(o, w, "grid", 1);
    b.vdc = num(o, w, "vdc", 1.0);
    b.base_kv = num(o, w, "base_kv", 0.0);
    b.vdcmax = num_req(o, w, "vdcmax");
    b.vdcmin = num_req(o, w, "vdcmin");
    rc.dc_buses.push_back(b);
  }

  i = 0;
  for (const json& o : arr(doc, "generators")) {
    std::string w = "/generators/" + std::to_string(i++);
    check_keys(o, w,
               {"bus", "pg_mw", "qg_mvar", "qmax_mvar", "qmin_mvar", "vg", "mbase", "status",
                "pmax_mw", "pmin_mw", "cost_c2", "cost_c1", "cost_c0"});
    RawGen g;
    g.bus = integer_req(o, w, "bus");
    g.pg_mw = num(o, w, "pg_mw", 0.0);
    g.qg_mvar = num(o, w, "qg_mvar", 0.0);
    g.qmax_mvar = num_req(o, w, "qmax_mvar");
    g.qmin_mvar = num_req(o, w, "qmin_mvar");
    g.vg = num(o, w, "vg", 1.0);
    g.mbase = num(o, w, "mbase", rc.base_mva);
    g.status = integer(o, w, "status", 1);
    g.pmax_mw = num_req(o, w, "pmax_mw");
    g.pmin_mw = num_req(o, w, "pmin_mw");
    RawGenCost c;
    c.coeff = {num(o, w, "cost_c2", 0.0), num(o, w, "cost_c1", 0.0), num(o, w, "cost_c0", 0.0)};
    rc.gens.push_back(g);
    rc.gencosts.push_back(c);
  }

  i = 0;
  for (const json& o : arr(doc, "loads")) {
    std::string w = "/loads/" + std::to_string(i++);
    check_keys(o, w, {"id", "side", "bus", "pd_mw", "qd_mvar"});
    RawLoad l;
    l.id = integer_req(o, w, "id");
    l.side = side_from(o, w);
    l.bus = integer_req(o, w, "bus");
    l.pd_mw = num(o, w, "pd_mw", 0.0);
    l.qd_mvar = num(o, w, "qd_mvar", 0.0);
    if (l.side == 'd' && l.qd_mvar != 0.0) fail(w, "DC loads cannot carry reactive demand");
    rc.loads.push_back(l);
  }

  i = 0;
  for (const json& o : arr(doc, "ac_branches")) {
    std::string w = "/ac_branches/" + std::to_string(i++);
    check_keys(o, w,
               {"from", "to", "r", "x", "b", "rate_a_mva", "rate_b_mva", "rate_c_mva", "tap",
                "shift_deg", "status", "angmin_deg", "angmax_deg"});
    RawAcBranch b;
    b.from = integer_req(o, w, "from");
    b.to = integer_req(o, w, "to");
    b.r = num(o, w, "r", 0.0);
    b.x = num_req(o, w, "x");
    b.b = num(o, w, "b", 0.0);
    b.rate_a_mva = num(o, w, "rate_a_mva", 0.0);
    b.rate_b_mva = num(o, w, "rate_b_mva", 0.0);
    b.rate_c_mva = num(o, w, "rate_c_mva", 0.0);
    b.tap = num(o, w, "tap", 0.0);
    b.shift_deg = num(o, w, "shift_deg", 0.0);
    b.status = integer(o, w, "status", 1);
    b.angmin_deg = num(o, w, "angmin_deg", -60.0);
    b.angmax_deg = num(o, w, "angmax_deg", 60.0);
    rc.ac_branches.push_back(b);
  }

  i = 0;
  for (const json& o : arr(doc, "dc_branches")) {
    std::string w = "/dc_branches/" + std::to_string(i++);
    check_keys(o, w, {"from", "to", "r", "rate_a_mw", "rate_b_mw", "rate_c_mw", "status", "poles"});
    RawDcBranch b;
    b.from = integer_req(o, w, "from");
    b.to = integer_req(o, w, "to");
    b.r = num_req(o, w, "r");
    b.rate_a_mw = num(o, w, "rate_a_mw", 0.0);
    b.rate_b_mw = num(o, w, "rate_b_mw", 0.0);
    b.rate_c_mw = num(o, w, "rate_c_mw", 0.0);
    b.status = integer(o, w, "status", 1);
    b.poles = integer(o, w, "poles", 0);
    rc.dc_branches.push_back(b);
  }

  i = 0;
  for (const json& o : arr(doc, "converters")) {
    std::string w = "/converters/" + std::to_string(i++);
    check_keys(o, w, {"dc_bus",  "ac_bus",  "grid",    "type_dc",  "type_ac",  "p_g_mw",
                      "q_g_mvar", "islcc",  "vtar",    "rtf",      "xtf",      "transformer",
                      "tm",       "bf",     "filter",  "rc",       "xc",       "reactor",
                      "base_kv_ac", "vmmax", "vmmin",  "imax",     "status",   "loss_a_mw",
                      "loss_b",   "loss_c_rec", "loss_c_inv", "droop", "pdcset_mw", "vdcset",
                      "dvdcset",  "pacmax_mw", "pacmin_mw", "qacmax_mvar", "qacmin_mvar"});
    RawConverter c;
    c.dc_bus = integer_req(o, w, "dc_bus");
    c.ac_bus = integer_req(o, w, "ac_bus");
    c.grid = integer(o, w, "grid", 1);
    c.type_dc = integer(o, w, "type_dc", 1);
    c.type_ac = integer(o, w, "type_ac", 1);
    c.p_g_mw = num(o, w, "p_g_mw", 0.0);
    c.q_g_mvar = num(o, w, "q_g_mvar", 0.0);
    c.islcc = integer(o, w, "islcc", 0);
    c.vtar = num(o, w, "vtar", 1.0);
    c.rtf = num(o, w, "rtf", 0.0);
    c.xtf = num(o, w, "xtf", 0.0);
    c.transformer = integer(o, w, "transformer", 0);
    c.tm = num(o, w, "tm", 1.0);
    c.bf = num(o, w, "bf", 0.0);
    c.filter = integer(o, w, "filter", 0);
    c.rc = num(o, w, "rc", 0.0);
    c.xc = num(o, w, "xc", 0.0);
    c.reactor = integer(o, w, "reactor", 0);
    c.base_kv_ac = num(o, w, "base_kv_ac", 0.0);
    c.vmmax = num_req(o, w, "vmmax");
    c.vmmin = num_req(o, w, "vmmin");
    c.imax = num_req(o, w, "imax");
    c.status = integer(o, w, "status", 1);
    c.loss_a_mw = num(o, w, "loss_a_mw", 0.0);
    c.loss_b = num(o, w, "loss_b", 0.0);
    c.loss_c_rec = num(o, w, "loss_c_rec", 0.0);
    c.loss_c_inv = num(o, w, "loss_c_inv", 0.0);
    c.droop = num(o, w, "droop", 0.0);
    c.pdcset_mw = num(o, w, "pdcset_mw", 0.0);
    c.vdcset = num(o, w, "vdcset", 1.0);
    c.dvdcset = num(o, w, "dvdcset", 0.0);
    double nan = std::numeric_limits<double>::quiet_NaN();
    c.pacmax_mw = num(o, w, "pacmax_mw", nan);
    c.pacmin_mw = num(o, w, "pacmin_mw", nan);
    c.qacmax_mvar = num(o, w, "qacmax_mvar", nan);
    c.qacmin_mvar = num(o, w, "qacmin_mvar", nan);
    rc.converters.push_back(c);
  }

  i = 0;
  for (const json& o : arr(doc, "switches")) {
    std::string w = "/switches/" + std::to_string(i++);
    check_keys(o, w, {"id", "side", "from_bus", "to_bus", "target", "element_id", "element_end",
                      "rate_mva", "closed", "switchable"});
    RawSwitch sw;
    sw.id = integer_req(o, w, "id");
    sw.side = side_from(o, w);
    sw.from_bus = integer_req(o, w, "from_bus");
    sw.to_bus = integer_req(o, w, "to_bus");
    sw.target = target_from(str(o, w, "target", "zil"), w + "/target");
    sw.element_id = integer(o, w, "element_id", -1);
    sw.element_end = integer(o, w, "element_end", 0);
    sw.rate_mva = num(o, w, "rate_mva", 0.0);
    sw.closed = boolean(o, w, "closed", true);
    sw.switchable = boolean(o, w, "switchable", true);
    rc.switches.push_back(sw);
  }

  i = 0;
  for (const json& o : arr(doc, "split_plan")) {
    std::string w = "/split_plan/" + std::to_string(i++);
    check_keys(o, w, {"side", "bus"});
    RawSplitRequest r;
    r.side = side_from(o, w);
    r.bus = integer_req(o, w, "bus");
    rc.split_plan.push_back(r);
  }

  i = 0;
  for (const json& o : arr(doc, "busbar_splits")) {
    std::string w = "/busbar_splits/" + std::to_string(i++);
    check_keys(o, w, {"side", "original_bus", "aux_bus", "zil_switch", "element_switches"});
    BusbarSplitRecord r;
    r.side = side_from(o, w);
    r.original_bus = integer_req(o, w, "original_bus");
    r.aux_bus = integer_req(o, w, "aux_bus");
    r.zil_switch = integer_req(o, w, "zil_switch");
    if (o.contains("element_switches")) {
      if (!o.at("element_switches").is_array()) fail(w + "/element_switches", "must be an array");
      for (const json& v : o.at("element_switches")) {
        if (!v.is_number_integer()) fail(w + "/element_switches", "must hold integers");
        r.element_switches.push_back(v.get<int>());
      }
    }
    rc.bs_records.push_back(r);
  }

  return rc;
}

RawCase parse_json_case(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_json_case_text(ss.str(), path);
}

std::string write_json_case(const RawCase& rc) {
  ordered_json doc;
  doc["schema_version"] = 1;
  doc["name"] = rc.name;
  doc["base_mva"] = rc.base_mva;
  doc["dc_poles"] = rc.dc_poles;

  doc["ac_buses"] = ordered_json::array();
  for (const RawAcBus& b : rc.ac_buses) {
    ordered_json o;
    o["id"] = b.id;
    o["type"] = b.type;
    o["gs_mw"] = b.gs_mw;
    o["bs_mvar"] = b.bs_mvar;
    o["vm"] = b.vm;
    o["va_deg"] = b.va_deg;
    o["base_kv"] = b.base_kv;
    o["vmax"] = b.vmax;
    o["vmin"] = b.vmin;
    doc["ac_buses"].push_back(std::move(o));
  }

  doc["dc_buses"] = ordered_json::array();
  for (const RawDcBus& b : rc.dc_buses) {
    ordered_json o;
    o["id"] = b.id;
    o["grid"] = b.grid;
    o["vdc"] = b.vdc;
    o["base_kv"] = b.base_kv;
    o["vdcmax"] = b.vdcmax;
    o["vdcmin"] = b.vdcmin;
    doc["dc_buses"].push_back(std::move(o));
  }

  doc["generators"] = ordered_json::array();
  for (size_t k = 0; k < rc.gens.size(); ++k) {
    const RawGen& g = rc.gens[k];
    ordered_json o;
    o["bus"] = g.bus;
    o["pg_mw"] = g.pg_mw;
    o["qg_mvar"] = g.qg_mvar;
    o["qmax_mvar"] = g.qmax_mvar;
    o["qmin_mvar"] = g.qmin_mvar;
    o["vg"] = g.vg;
    o["mbase"] = g.mbase;
    o["status"] = g.status;
    o["pmax_mw"] = g.pmax_mw;
    o["pmin_mw"] = g.pmin_mw;
    double c2 = 0.0, c1 = 0.0, c0 = 0.0;
    if (k < rc.gencosts.size()) {
      const std::vector<double>& cc = rc.gencosts[k].coeff;
      for (size_t j = 0; j < cc.size(); ++j) {
        double v = cc[j];
        size_t deg = cc.size() - 1 - j;
        if (deg == 0) c0 = v;
        else if (deg == 1) c1 = v;
        else if (deg == 2) c2 = v;
        else if (v != 0.0) fail("/generators", "cost polynomial degree above 2");
      }
    }
    o["cost_c2"] = c2;
    o["cost_c1"] = c1;
    o["cost_c0"] = c0;
    doc["generators"].push_back(std::move(o));
  }

  doc["loads"] = ordered_json::array();
  for (const RawLoad& l : rc.loads) {
    ordered_json o;
    o["id"] = l.id;
    o["side"] = side_str(l.side);
    o["bus"] = l.bus;
    o["pd_mw"] = l.pd_mw;
    o["qd_mvar"] = l.qd_mvar;
    doc["loads"].push_back(std::move(o));
  }

  doc["ac_branches"] = ordered_json::array();
  for (const RawAcBranch& b : rc.ac_branches) {
    ordered_json o;
    o["from"] = b.from;
    o["to"] = b.to;
    o["r"] = b.r;
    o["x"] = b.x;
    o["b"] = b.b;
    o["rate_a_mva"] = b.rate_a_mva;
    o["rate_b_mva"] = b.rate_b_mva;
    o["rate_c_mva"] = b.rate_c_mva;
    o["tap"] = b.tap;
    o["shift_deg"] = b.shift_deg;
    o["status"] = b.status;
    o["angmin_deg"] = b.angmin_deg;
    o["angmax_deg"] = b.angmax_deg;
    doc["ac_branches"].push_back(std::move(o));
  }

  doc["dc_branches"] = ordered_json::array();
  for (const RawDcBranch& b : rc.dc_branches) {
    ordered_json o;
    o["from"] = b.from;
    o["to"] = b.to;
    o["r"] = b.r;
    o["rate_a_mw"] = b.rate_a_mw;
    o["rate_b_mw"] = b.rate_b_mw;
    o["rate_c_mw"] = b.rate_c_mw;
    o["status"] = b.status;
    o["poles"] = b.poles == 0 ? rc.dc_poles : b.poles;
    doc["dc_branches"].push_back(std::move(o));
  }

  doc["converters"] = ordered_json::array();
  for (const RawConverter& c : rc.converters) {
    ordered_json o;
    o["dc_bus"] = c.dc_bus;
    o["ac_bus"] = c.ac_bus;
    o["grid"] = c.grid;
    o["type_dc"] = c.type_dc;
    o["type_ac"] = c.type_ac;
    o["p_g_mw"] = c.p_g_mw;
    o["q_g_mvar"] = c.q_g_mvar;
    o["islcc"] = c.islcc;
    o["vtar"] = c.vtar;
    o["rtf"] = c.rtf;
    o["xtf"] = c.xtf;
    o["transformer"] = c.transformer;
    o["tm"] = c.tm;
    o["bf"] = c.bf;
    o["filter"] = c.filter;
    o["rc"] = c.rc;
    o["xc"] = c.xc;
    o["reactor"] = c.reactor;
    o["base_kv_ac"] = c.base_kv_ac;
    o["vmmax"] = c.vmmax;
    o["vmmin"] = c.vmmin;
    o["imax"] = c.imax;
    o["status"] = c.status;
    o["loss_a_mw"] = c.loss_a_mw;
    o["loss_b"] = c.loss_b;
    o["loss_c_rec"] = c.loss_c_rec;
    o["loss_c_inv"] = c.loss_c_inv;
    o["droop"] = c.droop;
    o["pdcset_mw"] = c.pdcset_mw;
    o["vdcset"] = c.vdcset;
    o["dvdcset"] = c.dvdcset;
    if (!std::isnan(c.pacmax_mw)) o["pacmax_mw"] = c.pacmax_mw;
    if (!std::isnan(c.pacmin_mw)) o["pacmin_mw"] = c.pacmin_mw;
    if (!std::isnan(c.qacmax_mvar)) o["qacmax_mvar"] = c.qacmax_mvar;
    if (!std::isnan(c.qacmin_mvar)) o["qacmin_mvar"] = c.qacmin_mvar;
    doc["converters"].push_back(std::move(o));
  }

  doc["switches"] = ordered_json::array();
  for (const RawSwitch& s : rc.switches) {
    ordered_json o;
    o["id"] = s.id;
    o["side"] = side_str(s.side);
    o["from_bus"] = s.from_bus;
    o["to_bus"] = s.to_bus;
    o["target"] = target_str(s.target);
    o["element_id"] = s.element_id;
    o["element_end"] = s.element_end;
    o["rate_mva"] = s.rate_mva;
    o["closed"] = s.closed;
    o["switchable"] = s.switchable;
    doc["switches"].push_back(std::move(o));
  }

  if (!rc.split_plan.empty()) {
    doc["split_plan"] = ordered_json::array();
    for (const RawSplitRequest& r : rc.split_plan) {
      ordered_json o;
      o["side"] = side_str(r.side);
      o["bus"] = r.bus;
      doc["split_plan"].push_back(std::move(o));
    }
  }

  if (!rc.bs_records.empty()) {
    doc["busbar_splits"] = ordered_json::array();
    for (const BusbarSplitRecord& r : rc.bs_records) {
      ordered_json o;
      o["side"] = side_str(r.side);
      o["original_bus"] = r.original_bus;
      o["aux_bus"] = r.aux_bus;
      o["zil_switch"] = r.zil_switch;
      o["element_switches"] = r.element_switches;
      doc["busbar_splits"].push_back(std::move(o));
    }
  }

  return doc.dump(2) + "\n";
}

std::string write_json_case(const Network& net) { return write_json_case(to_raw(net)); }

}  // namespace gridtopo
