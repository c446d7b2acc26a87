#include "gridtopo/network.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "gridtopo/json_case.hpp"

namespace gridtopo {

namespace {

constexpr double kPi = 3.14159265358979323846;

[[noreturn]] void bad(const std::string& what) { throw ValidationError(what); }

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

std::vector<int> number_islands(UnionFind& uf, const std::vector<int>& bus_ids, int* count) {
  size_t n = bus_ids.size();
  std::map<int, int> root_min_id;
  for (size_t i = 0; i < n; ++i) {
    int r = uf.find(static_cast<int>(i));
    auto it = root_min_id.find(r);
    if (it == root_min_id.end() || bus_ids[i] < it->second) root_min_id[r] = bus_ids[i];
  }
  std::vector<std::pair<int, int>> order;  // (min id, root)
  for (auto& [root, mid] : root_min_id) order.emplace_back(mid, root);
  std::sort(order.begin(), order.end());
  std::map<int, int> island_of_root;
  for (size_t k = 0; k < order.size(); ++k) island_of_root[order[k].second] = static_cast<int>(k);
  std::vector<int> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = island_of_root[uf.find(static_cast<int>(i))];
  *count = static_cast<int>(order.size());
  return out;
}

}  // namespace

int Network::ac_index(int id) const {
  for (size_t i = 0; i < ac_buses.size(); ++i)
    if (ac_buses[i].id == id) return static_cast<int>(i);
  return -1;
}

int Network::dc_index(int id) const {
  for (size_t i = 0; i < dc_buses.size(); ++i)
    if (dc_buses[i].id == id) return static_cast<int>(i);
  return -1;
}

Network validate(const RawCase& rc) {
  Network net;
  net.name = rc.name;
  if (!(rc.base_mva > 0)) bad("base_mva must be positive");
  net.base_mva = rc.base_mva;
  if (rc.dc_poles != 1 && rc.dc_poles != 2) bad("dc_poles must be 1 or 2");
  net.dc_poles_default = rc.dc_poles;
  const double base = rc.base_mva;

  std::map<int, int> ac_of, dc_of;
  for (const RawAcBus& rb : rc.ac_buses) {
    if (rb.id <= 0) bad("AC bus ids must be positive, got " + std::to_string(rb.id));
    if (ac_of.count(rb.id)) bad("duplicate AC bus id " + std::to_string(rb.id));
    if (!(rb.vmin > 0) || rb.vmin > rb.vmax)
      bad("AC bus " + std::to_string(rb.id) + ": need 0 < vmin <= vmax");
    if (rb.type < 1 || rb.type > 4) bad("AC bus " + std::to_string(rb.id) + ": unknown type");
    AcBus b;
    b.id = rb.id;
    b.gs = rb.gs_mw / base;
    b.bs = rb.bs_mvar / base;
    b.vmax = rb.vmax;
    b.vmin = rb.vmin;
    b.base_kv = rb.base_kv;
    b.reference = rb.type == 3;
    b.mp_type = rb.type;
    b.vm0 = rb.vm;
    b.va0 = rb.va_deg * kPi / 180.0;
    ac_of[rb.id] = static_cast<int>(net.ac_buses.size());
    net.ac_buses.push_back(b);
  }

  for (const RawDcBus& rb : rc.dc_buses) {
    if (rb.id <= 0) bad("DC bus ids must be positive, got " + std::to_string(rb.id));
    if (dc_of.count(rb.id)) bad("duplicate DC bus id " + std::to_string(rb.id));
    if (!(rb.vdcmin > 0) || rb.vdcmin > rb.vdcmax)
      bad("DC bus " + std::to_string(rb.id) + ": need 0 < vdcmin <= vdcmax");
    DcBus b;
    b.id = rb.id;
    b.grid = rb.grid;
    b.vmax = rb.vdcmax;
    b.vmin = rb.vdcmin;
    b.base_kv = rb.base_kv;
    b.vdc0 = rb.vdc;
    dc_of[rb.id] = static_cast<int>(net.dc_buses.size());
    net.dc_buses.push_back(b);
  }

  for (size_t k = 0; k < rc.ac_branches.size(); ++k) {
    const RawAcBranch& rb = rc.ac_branches[k];
    std::string tag = "AC branch " + std::to_string(k + 1);
    auto f = ac_of.find(rb.from), t = ac_of.find(rb.to);
    if (f == ac_of.end() || t == ac_of.end()) bad(tag + ": endpoint bus does not exist");
    if (rb.from == rb.to) bad(tag + ": self loop");
    if (rb.r == 0.0 && rb.x == 0.0) bad(tag + ": zero impedance, use a switch instead");
    if (rb.tap < 0) bad(tag + ": negative tap");
    if (rb.angmin_deg >= rb.angmax_deg) bad(tag + ": angmin must be below angmax");
    AcBranch b;
    b.id = static_cast<int>(k + 1);
    b.from = f->second;
    b.to = t->second;
    b.r = rb.r;
    b.x = rb.x;
    b.b_fr = rb.b / 2.0;
    b.b_to = rb.b / 2.0;
    b.tap = rb.tap == 0.0 ? 1.0 : rb.tap;
    b.shift = rb.shift_deg * kPi / 180.0;
    b.s_max = rb.rate_a_mva / base;
    b.ang_min = rb.angmin_deg * kPi / 180.0;
    b.ang_max = rb.angmax_deg * kPi / 180.0;
    b.in_service = rb.status != 0;
    net.ac_branches.push_back(b);
  }

  for (size_t k = 0; k < rc.dc_branches.size(); ++k) {
    const RawDcBranch& rb = rc.dc_branches[k];
    std::string tag = "DC branch " + std::to_string(k + 1);
    auto f = dc_of.find(rb.from), t = dc_of.find(rb.to);
    if (f == dc_of.end() || t == dc_of.end()) bad(tag + ": endpoint bus does not exist");
    if (rb.from == rb.to) bad(tag + ": self loop");
    if (!(rb.r > 0)) bad(tag + ": resistance must be positive");
    int poles = rb.poles == 0 ? rc.dc_poles : rb.poles;
    if (poles != 1 && poles != 2) bad(tag + ": poles must be 1 or 2");
    DcBranch b;
    b.id = static_cast<int>(k + 1);
    b.from = f->second;
    b.to = t->second;
    b.r = rb.r;
    b.p_max = rb.rate_a_mw / base;
    b.poles = poles;
    b.in_service = rb.status != 0;
    net.dc_branches.push_back(b);
  }

  if (!rc.gencosts.empty() && rc.gencosts.size() != rc.gens.size())
    bad("gencost rows must match generator rows");
  for (size_t k = 0; k < rc.gens.size(); ++k) {
    const RawGen& rg = rc.gens[k];
    std::string tag = "generator " + std::to_string(k + 1);
    auto it = ac_of.find(rg.bus);
    if (it == ac_of.end()) bad(tag + ": bus does not exist");
    if (rg.pmin_mw > rg.pmax_mw) bad(tag + ": pmin above pmax");
    if (rg.qmin_mvar > rg.qmax_mvar) bad(tag + ": qmin above qmax");
    Generator g;
    g.id = static_cast<int>(k + 1);
    g.bus = it->second;
    g.p_max = rg.pmax_mw / base;
    g.p_min = rg.pmin_mw / base;
    g.q_max = rg.qmax_mvar / base;
    g.q_min = rg.qmin_mvar / base;
    g.vg = rg.vg;
    g.in_service = rg.status != 0;
    g.pg0 = rg.pg_mw / base;
    g.qg0 = rg.qg_mvar / base;
    if (!rc.gencosts.empty()) {
      const RawGenCost& c = rc.gencosts[k];
      if (c.model != 2) bad(tag + ": only polynomial costs are supported");
      for (size_t j = 0; j < c.coeff.size(); ++j) {
        size_t deg = c.coeff.size() - 1 - j;
        double v = c.coeff[j];
        if (deg == 0) g.c0 = v;
        else if (deg == 1) g.c1 = v * base;
        else if (deg == 2) g.c2 = v * base * base;
        else if (v != 0.0) bad(tag + ": cost polynomial degree above 2");
      }
    }
    net.gens.push_back(g);
  }

  std::set<int> load_ids;
  for (const RawLoad& rl : rc.loads) {
    std::string tag = "load " + std::to_string(rl.id);
    if (rl.id <= 0) bad("load ids must be positive");
    if (!load_ids.insert(rl.id).second) bad("duplicate load id " + std::to_string(rl.id));
    Load l;
    l.id = rl.id;
    l.side = rl.side;
    if (rl.side == 'a') {
      auto it = ac_of.find(rl.bus);
      if (it == ac_of.end()) bad(tag + ": AC bus does not exist");
      l.bus = it->second;
    } else {
      auto it = dc_of.find(rl.bus);
      if (it == dc_of.end()) bad(tag + ": DC bus does not exist");
      if (rl.qd_mvar != 0.0) bad(tag + ": DC loads cannot carry reactive demand");
      l.bus = it->second;
    }
    l.pd = rl.pd_mw / base;
    l.qd = rl.qd_mvar / base;
    net.loads.push_back(l);
  }

  for (size_t k = 0; k < rc.converters.size(); ++k) {
    const RawConverter& r = rc.converters[k];
    std::string tag = "converter " + std::to_string(k + 1);
    auto a = ac_of.find(r.ac_bus);
    auto d = dc_of.find(r.dc_bus);
    if (a == ac_of.end()) bad(tag + ": AC bus does not exist");
    if (d == dc_of.end()) bad(tag + ": DC bus does not exist");
    if (r.loss_a_mw < 0 || r.loss_b < 0 || r.loss_c_rec < 0)
      bad(tag + ": loss coefficients must be nonnegative");
    if (!(r.imax > 0)) bad(tag + ": current limit must be positive");
    if (!(r.vmmin > 0) || r.vmmin > r.vmmax) bad(tag + ": need 0 < vmmin <= vmmax");
    if (r.islcc) bad(tag + ": line commutated converters are not supported");
    Converter c;
    c.id = static_cast<int>(k + 1);
    c.grid_bus = a->second;
    c.dc_bus = d->second;
    if (!(r.base_kv_ac > 0)) bad(tag + ": AC voltage base must be positive");
    // Loss data conventions: the constant and linear coefficients are given
    // in MW and MW per unit current, the quadratic one on the voltage base.
    c.loss_a = r.loss_a_mw / base;
    c.loss_b = r.loss_b / base;
    c.loss_c = r.loss_c_rec / r.base_kv_ac;
    c.loss_c_inv = r.loss_c_inv / r.base_kv_ac;
    c.i_max = r.imax;
    double s_nom = r.imax * r.vmmax;
    c.p_ac_max = std::isnan(r.pacmax_mw) ? s_nom : r.pacmax_mw / base;
    c.p_ac_min = std::isnan(r.pacmin_mw) ? -s_nom : r.pacmin_mw / base;
    c.q_ac_max = std::isnan(r.qacmax_mvar) ? s_nom : r.qacmax_mvar / base;
    c.q_ac_min = std::isnan(r.qacmin_mvar) ? -s_nom : r.qacmin_mvar / base;
    if (c.p_ac_min > c.p_ac_max) bad(tag + ": pacmin above pacmax");
    if (c.q_ac_min > c.q_ac_max) bad(tag + ": qacmin above qacmax");
    c.s_max = std::hypot(std::max(std::abs(c.p_ac_max), std::abs(c.p_ac_min)),
                         std::max(std::abs(c.q_ac_max), std::abs(c.q_ac_min)));
    c.vmmax = r.vmmax;
    c.vmmin = r.vmmin;
    c.in_service = r.status != 0;
    c.type_dc = r.type_dc;
    c.type_ac = r.type_ac;
    c.p_set = r.p_g_mw / base;
    c.q_set = r.q_g_mvar / base;
    c.vtar = r.vtar;
    c.droop = r.droop;
    c.pdcset = r.pdcset_mw / base;
    c.vdcset = r.vdcset;
    c.dvdcset = r.dvdcset;
    c.rtf = r.rtf;
    c.xtf = r.xtf;
    c.tm = r.tm == 0.0 ? 1.0 : r.tm;
    c.rc_pr = r.rc;
    c.xc_pr = r.xc;
    c.has_tf = r.transformer != 0;
    c.has_filter = r.filter != 0;
    c.has_pr = r.reactor != 0;
    double bf = r.bf;
    c.b_filter = c.has_filter ? bf : 0.0;
    c.grid = r.grid;
    c.base_kv_ac = r.base_kv_ac;
    net.converters.push_back(c);
  }

  std::set<int> switch_ids;
  for (const RawSwitch& rs : rc.switches) {
    std::string tag = "switch " + std::to_string(rs.id);
    if (rs.id <= 0) bad("switch ids must be positive");
    if (!switch_ids.insert(rs.id).second) bad("duplicate switch id " + std::to_string(rs.id));
    Switch s;
    s.id = rs.id;
    s.side = rs.side;
    const auto& of = rs.side == 'a' ? ac_of : dc_of;
    auto f = of.find(rs.from_bus), t = of.find(rs.to_bus);
    if (f == of.end() || t == of.end()) bad(tag + ": endpoint bus does not exist");
    if (rs.from_bus == rs.to_bus) bad(tag + ": self loop");
    s.from_bus = f->second;
    s.to_bus = t->second;
    s.target = rs.target;
    s.element_end = rs.element_end;
    s.s_max = rs.rate_mva / base;
    s.closed = rs.closed;
    s.switchable = rs.switchable;

    if (rs.target == SwitchTarget::Zil) {
      s.element = -1;
    } else {
      int n = rs.element_id;
      auto attach_err = [&] { bad(tag + ": element is not attached at from_bus"); };
      switch (rs.target) {
        case SwitchTarget::AcBranch: {
          if (rs.side != 'a') bad(tag + ": AC branch switch on DC side");
          if (n < 1 || n > static_cast<int>(net.ac_branches.size()))
            bad(tag + ": unknown AC branch " + std::to_string(n));
          const AcBranch& b = net.ac_branches[n - 1];
          int end_bus = rs.element_end == 0 ? b.from : b.to;
          if (end_bus != s.from_bus) attach_err();
          break;
        }
        case SwitchTarget::DcBranch: {
          if (rs.side != 'd') bad(tag + ": DC branch switch on AC side");
          if (n < 1 || n > static_cast<int>(net.dc_branches.size()))
            bad(tag + ": unknown DC branch " + std::to_string(n));
          const DcBranch& b = net.dc_branches[n - 1];
          int end_bus = rs.element_end == 0 ? b.from : b.to;
          if (end_bus != s.from_bus) attach_err();
          break;
        }
        case SwitchTarget::Converter: {
          if (n < 1 || n > static_cast<int>(net.converters.size()))
            bad(tag + ": unknown converter " + std::to_string(n));
          const Converter& c = net.converters[n - 1];
          int attach = rs.side == 'a' ? c.grid_bus : c.dc_bus;
          if (attach != s.from_bus) attach_err();
          break;
        }
        case SwitchTarget::Generator: {
          if (rs.side != 'a') bad(tag + ": generator switch on DC side");
          if (n < 1 || n > static_cast<int>(net.gens.size()))
            bad(tag + ": unknown generator " + std::to_string(n));
          if (net.gens[n - 1].bus != s.from_bus) attach_err();
          break;
        }
        case SwitchTarget::Load: {
          int li = -1;
          for (size_t j = 0; j < net.loads.size(); ++j)
            if (net.loads[j].id == n && net.loads[j].side == rs.side) li = static_cast<int>(j);
          if (li < 0) bad(tag + ": unknown load " + std::to_string(n));
          if (net.loads[li].bus != s.from_bus) attach_err();
          n = li + 1;
          break;
        }
        default: break;
      }
      s.element = n - 1;
    }
    net.switches.push_back(s);
  }

  // busbar split records: annotate roles
  for (const BusbarSplitRecord& r : rc.bs_records) {
    const auto& of = r.side == 'a' ? ac_of : dc_of;
    if (!of.count(r.original_bus) || !of.count(r.aux_bus))
      bad("busbar split record references unknown buses");
    if (!switch_ids.count(r.zil_switch)) bad("busbar split record references unknown ZIL switch");
    for (int sid : r.element_switches)
      if (!switch_ids.count(sid)) bad("busbar split record references unknown switch");
    if (r.side == 'a')
      net.ac_buses[of.at(r.aux_bus)].role = BusRole::BusbarHalf;
    else
      net.dc_buses[of.at(r.aux_bus)].role = BusRole::BusbarHalf;
    net.bs_records.push_back(r);
  }
  for (const Switch& s : net.switches) {
    if (s.target == SwitchTarget::Zil) continue;
    if (s.side == 'a')
      net.ac_buses[s.from_bus].role = BusRole::ElementStub;
    else
      net.dc_buses[s.from_bus].role = BusRole::ElementStub;
  }

  // converter station expansion: grid bus, transformer, filter shunt,
  // phase reactor, terminal node
  int next_ac_id = 0;
  for (const AcBus& b : net.ac_buses) next_ac_id = std::max(next_ac_id, b.id);
  for (size_t k = 0; k < net.converters.size(); ++k) {
    Converter& c = net.converters[k];
    int attach = c.grid_bus;
    const AcBus& gb = net.ac_buses[attach];
    int fbus = attach;
    if (c.has_tf) {
      AcBus nb;
      nb.id = ++next_ac_id;
      nb.role = BusRole::ConverterInternal;
      nb.vmax = c.vmmax;
      nb.vmin = c.vmmin;
      nb.base_kv = gb.base_kv;
      nb.conv_owner = static_cast<int>(k);
      fbus = static_cast<int>(net.ac_buses.size());
      net.ac_buses.push_back(nb);
      AcBranch tb;
      tb.id = static_cast<int>(net.ac_branches.size()) + 1;
      tb.from = attach;
      tb.to = fbus;
      tb.r = c.rtf;
      tb.x = c.xtf;
      tb.tap = c.tm;
      tb.conv_owner = static_cast<int>(k);
      tb.ang_min = -kPi / 2;
      tb.ang_max = kPi / 2;
      tb.in_service = c.in_service;
      c.tf_branch = static_cast<int>(net.ac_branches.size());
      net.ac_branches.push_back(tb);
    }
    int tbus = fbus;
    if (c.has_pr) {
      AcBus nb;
      nb.id = ++next_ac_id;
      nb.role = BusRole::ConverterInternal;
      nb.vmax = c.vmmax;
      nb.vmin = c.vmmin;
      nb.base_kv = gb.base_kv;
      nb.conv_owner = static_cast<int>(k);
      tbus = static_cast<int>(net.ac_buses.size());
      net.ac_buses.push_back(nb);
      AcBranch pb;
      pb.id = static_cast<int>(net.ac_branches.size()) + 1;
      pb.from = fbus;
      pb.to = tbus;
      pb.r = c.rc_pr;
      pb.x = c.xc_pr;
      pb.conv_owner = static_cast<int>(k);
      pb.ang_min = -kPi / 2;
      pb.ang_max = kPi / 2;
      pb.in_service = c.in_service;
      c.pr_branch = static_cast<int>(net.ac_branches.size());
      net.ac_branches.push_back(pb);
    }
    c.filter_bus = c.has_filter ? fbus : -1;
    c.terminal_bus = tbus;
    if (c.has_filter && fbus == attach)
      bad("converter " + std::to_string(k + 1) +
          ": filter requires a transformer or reactor to form an internal node");
  }

  // one angle reference per energized AC island
  Islands isl = island_decomposition(net);
  std::vector<int> refs(isl.n_ac, 0);
  std::vector<int> example(isl.n_ac, 0);
  for (size_t i = 0; i < net.ac_buses.size(); ++i) {
    int g = isl.ac_island_of[i];
    if (example[g] == 0 || net.ac_buses[i].id < example[g]) example[g] = net.ac_buses[i].id;
    if (net.ac_buses[i].reference) refs[g]++;
  }
  for (int g = 0; g < isl.n_ac; ++g) {
    if (refs[g] == 0)
      bad("AC island containing bus " + std::to_string(example[g]) + " has no reference bus");
    if (refs[g] > 1)
      bad("AC island containing bus " + std::to_string(example[g]) +
          " has more than one reference bus");
  }

  return net;
}

Islands island_decomposition(const Network& net) {
  Islands out;
  UnionFind ac(net.ac_buses.size());
  for (const AcBranch& b : net.ac_branches)
    if (b.in_service) ac.unite(b.from, b.to);
  UnionFind dc(net.dc_buses.size());
  for (const DcBranch& b : net.dc_branches)
    if (b.in_service) dc.unite(b.from, b.to);
  for (const Switch& s : net.switches) {
    if (!s.closed) continue;
    if (s.side == 'a')
      ac.unite(s.from_bus, s.to_bus);
    else
      dc.unite(s.from_bus, s.to_bus);
  }
  std::vector<int> ac_ids, dc_ids;
  for (const AcBus& b : net.ac_buses) ac_ids.push_back(b.id);
  for (const DcBus& b : net.dc_buses) dc_ids.push_back(b.id);
  out.ac_island_of = number_islands(ac, ac_ids, &out.n_ac);
  if (!net.dc_buses.empty()) out.dc_island_of = number_islands(dc, dc_ids, &out.n_dc);
  return out;
}

RawCase to_raw(const Network& net) {
  RawCase rc;
  rc.name = net.name;
  rc.base_mva = net.base_mva;
  rc.dc_poles = net.dc_poles_default;
  const double base = net.base_mva;

  for (const AcBus& b : net.ac_buses) {
    if (b.role == BusRole::ConverterInternal) continue;
    RawAcBus r;
    r.id = b.id;
    r.type = b.mp_type;
    r.gs_mw = b.gs * base;
    r.bs_mvar = b.bs * base;
    r.vm = b.vm0;
    r.va_deg = b.va0 * 180.0 / kPi;
    r.base_kv = b.base_kv;
    r.vmax = b.vmax;
    r.vmin = b.vmin;
    rc.ac_buses.push_back(r);
  }
  for (const DcBus& b : net.dc_buses) {
    RawDcBus r;
    r.id = b.id;
    r.grid = b.grid;
    r.vdc = b.vdc0;
    r.base_kv = b.base_kv;
    r.vdcmax = b.vmax;
    r.vdcmin = b.vmin;
    rc.dc_buses.push_back(r);
  }
  for (const Generator& g : net.gens) {
    RawGen r;
    r.bus = net.ac_buses[g.bus].id;
    r.pg_mw = g.pg0 * base;
    r.qg_mvar = g.qg0 * base;
    r.qmax_mvar = g.q_max * base;
    r.qmin_mvar = g.q_min * base;
    r.vg = g.vg;
    r.mbase = base;
    r.status = g.in_service ? 1 : 0;
    r.pmax_mw = g.p_max * base;
    r.pmin_mw = g.p_min * base;
    rc.gens.push_back(r);
    RawGenCost c;
    c.coeff = {g.c2 / (base * base), g.c1 / base, g.c0};
    rc.gencosts.push_back(c);
  }
  for (const Load& l : net.loads) {
    RawLoad r;
    r.id = l.id;
    r.side = l.side;
    r.bus = l.side == 'a' ? net.ac_buses[l.bus].id : net.dc_buses[l.bus].id;
    r.pd_mw = l.pd * base;
    r.qd_mvar = l.qd * base;
    rc.loads.push_back(r);
  }
  for (const AcBranch& b : net.ac_branches) {
    if (b.conv_owner >= 0) continue;
    RawAcBranch r;
    r.from = net.ac_buses[b.from].id;
    r.to = net.ac_buses[b.to].id;
    r.r = b.r;
    r.x = b.x;
    r.b = b.b_fr + b.b_to;
    r.rate_a_mva = b.s_max * base;
    r.tap = b.tap == 1.0 && b.shift == 0.0 ? 0.0 : b.tap;
    r.shift_deg = b.shift * 180.0 / kPi;
    r.status = b.in_service ? 1 : 0;
    r.angmin_deg = b.ang_min * 180.0 / kPi;
    r.angmax_deg = b.ang_max * 180.0 / kPi;
    rc.ac_branches.push_back(r);
  }
  for (const DcBranch& b : net.dc_branches) {
    RawDcBranch r;
    r.from = net.dc_buses[b.from].id;
    r.to = net.dc_buses[b.to].id;
    r.r = b.r;
    r.rate_a_mw = b.p_max * base;
    r.status = b.in_service ? 1 : 0;
    r.poles = b.poles;
    rc.dc_branches.push_back(r);
  }
  for (const Converter& c : net.converters) {
    RawConverter r;
    r.dc_bus = net.dc_buses[c.dc_bus].id;
    r.ac_bus = net.ac_buses[c.grid_bus].id;
    r.grid = c.grid;
    r.type_dc = c.type_dc;
    r.type_ac = c.type_ac;
    r.p_g_mw = c.p_set * base;
    r.q_g_mvar = c.q_set * base;
    r.vtar = c.vtar;
    r.rtf = c.rtf;
    r.xtf = c.xtf;
    r.transformer = c.has_tf;
    r.tm = c.tm;
    r.bf = c.b_filter;
    r.filter = c.has_filter;
    r.rc = c.rc_pr;
    r.xc = c.xc_pr;
    r.reactor = c.has_pr;
    r.base_kv_ac = c.base_kv_ac;
    r.vmmax = c.vmmax;
    r.vmmin = c.vmmin;
    r.imax = c.i_max;
    r.status = c.in_service ? 1 : 0;
    r.loss_a_mw = c.loss_a * base;
    r.loss_b = c.loss_b * base;
    r.loss_c_rec = c.loss_c * c.base_kv_ac;
    r.loss_c_inv = c.loss_c_inv * c.base_kv_ac;
    r.droop = c.droop;
    r.pdcset_mw = c.pdcset * base;
    r.vdcset = c.vdcset;
    r.dvdcset = c.dvdcset;
    r.pacmax_mw = c.p_ac_max * base;
    r.pacmin_mw = c.p_ac_min * base;
    r.qacmax_mvar = c.q_ac_max * base;
    r.qacmin_mvar = c.q_ac_min * base;
    rc.converters.push_back(r);
  }
  for (const Switch& s : net.switches) {
    RawSwitch r;
    r.id = s.id;
    r.side = s.side;
    r.from_bus = s.side == 'a' ? net.ac_buses[s.from_bus].id : net.dc_buses[s.from_bus].id;
    r.to_bus = s.side == 'a' ? net.ac_buses[s.to_bus].id : net.dc_buses[s.to_bus].id;
    r.target = s.target;
    r.element_id = s.target == SwitchTarget::Zil ? -1
                   : s.target == SwitchTarget::Load ? net.loads[s.element].id
                                                    : s.element + 1;
    r.element_end = s.element_end;
    r.rate_mva = s.s_max * base;
    r.closed = s.closed;
    r.switchable = s.switchable;
    rc.switches.push_back(r);
  }
  rc.bs_records = net.bs_records;
  return rc;
}

bool same_case(const Network& a, const Network& b) {
  return write_json_case(to_raw(a)) == write_json_case(to_raw(b));
}

}  // namespace gridtopo
