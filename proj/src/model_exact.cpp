#include <cmath>
#include <limits>
#include <string>

#include "gridtopo/log.hpp"
#include "gridtopo/model.hpp"

namespace gridtopo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string tag(const char* stem, int id) { return std::string(stem) + ":" + std::to_string(id); }

// Everything the exact assembly needs to share between stages.
struct Builder {
  const Network& net;
  const ProblemSpec& spec;
  MathModel m;
  double fbig = 10.0;  // fallback bound for unrated flows

  bool ots_on, bs_on;
  SwitchableSet sw_set;
  std::vector<char> ots_acbr, ots_dcbr, ots_conv;  // eligible for a binary
  std::vector<char> sw_active;                     // open fixed switches drop out

  explicit Builder(const Network& n, const ProblemSpec& s) : net(n), spec(s) {
    m.spec = s;
    ots_on = s.kind == ProblemKind::Ots || s.kind == ProblemKind::OtsBs;
    bs_on = s.kind == ProblemKind::Bs || s.kind == ProblemKind::OtsBs;
    sw_set = tag_switchable(net, ots_on ? s.scope : SwitchScope::None);
    ots_acbr.assign(net.ac_branches.size(), 0);
    ots_dcbr.assign(net.dc_branches.size(), 0);
    ots_conv.assign(net.converters.size(), 0);
    for (int i : sw_set.ac_branches) ots_acbr[static_cast<size_t>(i)] = 1;
    for (int i : sw_set.dc_branches) ots_dcbr[static_cast<size_t>(i)] = 1;
    for (int i : sw_set.converters) ots_conv[static_cast<size_t>(i)] = 1;
    sw_active.assign(net.switches.size(), 0);
    for (size_t s_i = 0; s_i < net.switches.size(); ++s_i) {
      const Switch& sw = net.switches[s_i];
      const bool binary = bs_on && sw.switchable;
      sw_active[s_i] = (sw.closed || binary) ? 1 : 0;
    }
    double pcap = 0.0, qcap = 0.0;
    for (const Generator& g : net.gens)
      if (g.in_service) {
        pcap += std::abs(g.p_max);
        qcap += std::max(std::abs(g.q_max), std::abs(g.q_min));
      }
    for (const Load& l : net.loads) {
      pcap += std::abs(l.pd);
      qcap += std::abs(l.qd);
    }
    fbig = std::max(10.0, 2.0 * std::max(pcap, qcap));
  }

  int add_var(std::string name, double lb, double ub, double x0,
              VarKind k = VarKind::Continuous) {
    Variable v;
    v.name = std::move(name);
    v.kind = k;
    v.lb = lb;
    v.ub = ub;
    v.x0 = std::min(std::max(x0, lb), ub);
    m.vars.push_back(std::move(v));
    return static_cast<int>(m.vars.size()) - 1;
  }

  Constraint& add_con(std::string name, ConFamily fam, double lb, double ub) {
    Constraint c;
    c.name = std::move(name);
    c.family = fam;
    c.lb = lb;
    c.ub = ub;
    m.cons.push_back(std::move(c));
    return m.cons.back();
  }

  // x <= hi * z and x >= lo * z; with no binary the bounds land on the
  // variable itself.
  void scale_bounds(int xv, int zv, double lo, double hi, const char* stem, int id,
                    ConFamily fam) {
    if (zv < 0) {
      m.vars[static_cast<size_t>(xv)].lb = std::max(m.vars[static_cast<size_t>(xv)].lb, lo);
      m.vars[static_cast<size_t>(xv)].ub = std::min(m.vars[static_cast<size_t>(xv)].ub, hi);
      return;
    }
    Constraint& up = add_con(tag(stem, id) + ":ub", fam, -kInf, 0.0);
    up.lin.push_back({1.0, xv});
    up.lin.push_back({-hi, zv});
    Constraint& dn = add_con(tag(stem, id) + ":lb", fam, 0.0, kInf);
    dn.lin.push_back({1.0, xv});
    dn.lin.push_back({-lo, zv});
  }

  void build();
  void alloc_vars();
  void balances();
  void branch_rows();
  void dc_branch_rows();
  void converter_rows();
  void switch_rows();
  void exclusivity_rows();
  void objective_rows();
};

void Builder::alloc_vars() {
  VarIndex& ix = m.idx;
  const size_t nb = net.ac_buses.size();
  ix.vm.assign(nb, -1);
  ix.va.assign(nb, -1);
  for (size_t i = 0; i < nb; ++i) {
    const AcBus& b = net.ac_buses[i];
    ix.vm[i] = add_var(tag("vm", b.id), b.vmin, b.vmax, b.vm0);
    ix.va[i] = add_var(tag("va", b.id), -M_PI, M_PI, b.va0);
  }
  ix.udc.assign(net.dc_buses.size(), -1);
  for (size_t i = 0; i < net.dc_buses.size(); ++i) {
    const DcBus& b = net.dc_buses[i];
    ix.udc[i] = add_var(tag("udc", b.id), b.vmin, b.vmax, b.vdc0);
  }
  ix.pg.assign(net.gens.size(), -1);
  ix.qg.assign(net.gens.size(), -1);
  for (size_t g = 0; g < net.gens.size(); ++g) {
    const Generator& gen = net.gens[g];
    if (!gen.in_service) continue;
    ix.pg[g] = add_var(tag("pg", gen.id), gen.p_min, gen.p_max, gen.pg0);
    ix.qg[g] = add_var(tag("qg", gen.id), gen.q_min, gen.q_max, gen.qg0);
  }
  ix.pf.assign(net.ac_branches.size(), -1);
  ix.qf.assign(net.ac_branches.size(), -1);
  ix.pt.assign(net.ac_branches.size(), -1);
  ix.qt.assign(net.ac_branches.size(), -1);
  for (size_t l = 0; l < net.ac_branches.size(); ++l) {
    const AcBranch& br = net.ac_branches[l];
    if (!br.in_service) continue;
    const double cap = br.s_max > 0.0 ? br.s_max : fbig;
    ix.pf[l] = add_var(tag("pf", br.id), -cap, cap, 0.0);
    ix.qf[l] = add_var(tag("qf", br.id), -cap, cap, 0.0);
    ix.pt[l] = add_var(tag("pt", br.id), -cap, cap, 0.0);
    ix.qt[l] = add_var(tag("qt", br.id), -cap, cap, 0.0);
  }
  ix.pdc_f.assign(net.dc_branches.size(), -1);
  ix.pdc_t.assign(net.dc_branches.size(), -1);
  for (size_t l = 0; l < net.dc_branches.size(); ++l) {
    const DcBranch& br = net.dc_branches[l];
    if (!br.in_service) continue;
    const double cap = br.p_max > 0.0 ? br.p_max : fbig;
    ix.pdc_f[l] = add_var(tag("pdcf", br.id), -cap, cap, 0.0);
    ix.pdc_t[l] = add_var(tag("pdct", br.id), -cap, cap, 0.0);
  }
  ix.pc_ac.assign(net.converters.size(), -1);
  ix.qc_ac.assign(net.converters.size(), -1);
  ix.pc_dc.assign(net.converters.size(), -1);
  ix.ic.assign(net.converters.size(), -1);
  ix.idc.assign(net.converters.size(), -1);
  ix.q_filter.assign(net.converters.size(), -1);
  for (size_t c = 0; c < net.converters.size(); ++c) {
    const Converter& cv = net.converters[c];
    if (!cv.in_service) continue;
    const double plo = std::min(0.0, cv.p_ac_min), phi = std::max(0.0, cv.p_ac_max);
    const double qlo = std::min(0.0, cv.q_ac_min), qhi = std::max(0.0, cv.q_ac_max);
    ix.pc_ac[c] = add_var(tag("pcac", cv.id), plo, phi, -cv.p_set);
    ix.qc_ac[c] = add_var(tag("qcac", cv.id), qlo, qhi, -cv.q_set);
    ix.pc_dc[c] = add_var(tag("pcdc", cv.id), -cv.s_max, cv.s_max, cv.p_set);
    ix.ic[c] = add_var(tag("ic", cv.id), 0.0, cv.i_max, 0.1);
    ix.idc[c] = add_var(tag("idc", cv.id), -cv.i_max, cv.i_max, 0.0);
    if (cv.has_filter && cv.b_filter != 0.0) {
      const double qcap = std::abs(cv.b_filter) * 1.3 * 1.3;
      ix.q_filter[c] = add_var(tag("qflt", cv.id), -qcap, qcap, cv.b_filter);
    }
  }
  ix.psw.assign(net.switches.size(), -1);
  ix.qsw.assign(net.switches.size(), -1);
  for (size_t s = 0; s < net.switches.size(); ++s) {
    const Switch& sw = net.switches[s];
    if (!sw_active[s]) continue;
    const double cap = sw.s_max > 0.0 ? sw.s_max : fbig;
    ix.psw[s] = add_var(tag("psw", sw.id), -cap, cap, 0.0);
    if (sw.side == 'a') ix.qsw[s] = add_var(tag("qsw", sw.id), -cap, cap, 0.0);
  }
  // binaries last, grouped by element table
  ix.z_acbr.assign(net.ac_branches.size(), -1);
  ix.z_dcbr.assign(net.dc_branches.size(), -1);
  ix.z_conv.assign(net.converters.size(), -1);
  ix.z_sw.assign(net.switches.size(), -1);
  for (size_t l = 0; l < net.ac_branches.size(); ++l)
    if (net.ac_branches[l].in_service && ots_acbr[l]) {
      ix.z_acbr[l] = add_var(tag("zbr", net.ac_branches[l].id), 0.0, 1.0, 1.0, VarKind::Binary);
      m.binaries.push_back(ix.z_acbr[l]);
    }
  for (size_t l = 0; l < net.dc_branches.size(); ++l)
    if (net.dc_branches[l].in_service && ots_dcbr[l]) {
      ix.z_dcbr[l] = add_var(tag("zdc", net.dc_branches[l].id), 0.0, 1.0, 1.0, VarKind::Binary);
      m.binaries.push_back(ix.z_dcbr[l]);
    }
  for (size_t c = 0; c < net.converters.size(); ++c)
    if (net.converters[c].in_service && ots_conv[c]) {
      ix.z_conv[c] = add_var(tag("zcv", net.converters[c].id), 0.0, 1.0, 1.0, VarKind::Binary);
      m.binaries.push_back(ix.z_conv[c]);
    }
  for (size_t s = 0; s < net.switches.size(); ++s) {
    const Switch& sw = net.switches[s];
    if (bs_on && sw.switchable) {
      ix.z_sw[s] =
          add_var(tag("zsw", sw.id), 0.0, 1.0, sw.closed ? 1.0 : 0.0, VarKind::Binary);
      m.binaries.push_back(ix.z_sw[s]);
    }
  }
}

// z variable controlling an AC branch: its own, or the owning converter's.
int branch_z(const Builder& b, size_t l) {
  const AcBranch& br = b.net.ac_branches[l];
  if (br.conv_owner >= 0) return b.m.idx.z_conv[static_cast<size_t>(br.conv_owner)];
  return b.m.idx.z_acbr[l];
}

void Builder::balances() {
  const VarIndex& ix = m.idx;
  for (size_t i = 0; i < net.ac_buses.size(); ++i) {
    const AcBus& bus = net.ac_buses[i];
    double pd = 0.0, qd = 0.0;
    for (const Load& l : net.loads)
      if (l.side == 'a' && l.bus == static_cast<int>(i)) {
        pd += l.pd;
        qd += l.qd;
      }
    Constraint cp, cq;
    cp.name = tag("bal_p", bus.id);
    cq.name = tag("bal_q", bus.id);
    cp.family = cq.family = ConFamily::AcBalance;
    cp.lb = cp.ub = pd;
    cq.lb = cq.ub = qd;
    for (size_t g = 0; g < net.gens.size(); ++g)
      if (net.gens[g].in_service && net.gens[g].bus == static_cast<int>(i)) {
        cp.lin.push_back({1.0, ix.pg[g]});
        cq.lin.push_back({1.0, ix.qg[g]});
      }
    for (size_t l = 0; l < net.ac_branches.size(); ++l) {
      if (ix.pf[l] < 0) continue;
      if (net.ac_branches[l].from == static_cast<int>(i)) {
        cp.lin.push_back({-1.0, ix.pf[l]});
        cq.lin.push_back({-1.0, ix.qf[l]});
      }
      if (net.ac_branches[l].to == static_cast<int>(i)) {
        cp.lin.push_back({-1.0, ix.pt[l]});
        cq.lin.push_back({-1.0, ix.qt[l]});
      }
    }
    for (size_t s = 0; s < net.switches.size(); ++s) {
      if (ix.psw[s] < 0 || net.switches[s].side != 'a') continue;
      if (net.switches[s].from_bus == static_cast<int>(i)) {
        cp.lin.push_back({-1.0, ix.psw[s]});
        cq.lin.push_back({-1.0, ix.qsw[s]});
      }
      if (net.switches[s].to_bus == static_cast<int>(i)) {
        cp.lin.push_back({1.0, ix.psw[s]});
        cq.lin.push_back({1.0, ix.qsw[s]});
      }
    }
    for (size_t c = 0; c < net.converters.size(); ++c) {
      if (ix.pc_ac[c] < 0) continue;
      if (net.converters[c].terminal_bus == static_cast<int>(i)) {
        cp.lin.push_back({-1.0, ix.pc_ac[c]});
        cq.lin.push_back({-1.0, ix.qc_ac[c]});
      }
      if (net.converters[c].filter_bus == static_cast<int>(i) && ix.q_filter[c] >= 0)
        cq.lin.push_back({1.0, ix.q_filter[c]});
    }
    if (bus.gs != 0.0) cp.nl.push_back({TermKind::Quad, -bus.gs, ix.vm[i], ix.vm[i], -1, -1, 0.0, -1});
    if (bus.bs != 0.0) cq.nl.push_back({TermKind::Quad, bus.bs, ix.vm[i], ix.vm[i], -1, -1, 0.0, -1});
    m.cons.push_back(std::move(cp));
    m.cons.push_back(std::move(cq));
    if (bus.reference) {
      Constraint& cr = add_con(tag("ref", bus.id), ConFamily::Reference, 0.0, 0.0);
      cr.lin.push_back({1.0, ix.va[i]});
    }
  }
  for (size_t e = 0; e < net.dc_buses.size(); ++e) {
    const DcBus& bus = net.dc_buses[e];
    double pd = 0.0;
    for (const Load& l : net.loads)
      if (l.side == 'd' && l.bus == static_cast<int>(e)) pd += l.pd;
    Constraint cp;
    cp.name = tag("bal_dc", bus.id);
    cp.family = ConFamily::DcBalance;
    cp.lb = cp.ub = pd;
    for (size_t l = 0; l < net.dc_branches.size(); ++l) {
      if (ix.pdc_f[l] < 0) continue;
      if (net.dc_branches[l].from == static_cast<int>(e)) cp.lin.push_back({-1.0, ix.pdc_f[l]});
      if (net.dc_branches[l].to == static_cast<int>(e)) cp.lin.push_back({-1.0, ix.pdc_t[l]});
    }
    for (size_t s = 0; s < net.switches.size(); ++s) {
      if (ix.psw[s] < 0 || net.switches[s].side != 'd') continue;
      if (net.switches[s].from_bus == static_cast<int>(e)) cp.lin.push_back({-1.0, ix.psw[s]});
      if (net.switches[s].to_bus == static_cast<int>(e)) cp.lin.push_back({1.0, ix.psw[s]});
    }
    for (size_t c = 0; c < net.converters.size(); ++c)
      if (ix.pc_dc[c] >= 0 && net.converters[c].dc_bus == static_cast<int>(e))
        cp.lin.push_back({-1.0, ix.pc_dc[c]});
    m.cons.push_back(std::move(cp));
  }
}

void Builder::branch_rows() {
  const VarIndex& ix = m.idx;
  for (size_t l = 0; l < net.ac_branches.size(); ++l) {
    const AcBranch& br = net.ac_branches[l];
    if (ix.pf[l] < 0) continue;
    const int zv = branch_z(*this, l);
    const size_t fi = static_cast<size_t>(br.from), ti = static_cast<size_t>(br.to);
    const int vf = ix.vm[fi], vt = ix.vm[ti], af = ix.va[fi], at = ix.va[ti];
    const double g = br.r / (br.r * br.r + br.x * br.x);
    const double bsus = -br.x / (br.r * br.r + br.x * br.x);
    const double t = br.tap, t2 = t * t;

    Constraint& rpf = add_con(tag("pf", br.id), ConFamily::AcFlow, 0.0, 0.0);
    rpf.shape = ConShape::NonlinearSmooth;
    rpf.lin.push_back({1.0, ix.pf[l]});
    rpf.nl.push_back({TermKind::Quad, -g / t2, vf, vf, -1, -1, 0.0, zv});
    rpf.nl.push_back({TermKind::TrigCos, g / t, vf, vt, af, at, br.shift, zv});
    rpf.nl.push_back({TermKind::TrigSin, bsus / t, vf, vt, af, at, br.shift, zv});

    Constraint& rqf = add_con(tag("qf", br.id), ConFamily::AcFlow, 0.0, 0.0);
    rqf.shape = ConShape::NonlinearSmooth;
    rqf.lin.push_back({1.0, ix.qf[l]});
    rqf.nl.push_back({TermKind::Quad, (bsus + br.b_fr) / t2, vf, vf, -1, -1, 0.0, zv});
    rqf.nl.push_back({TermKind::TrigSin, g / t, vf, vt, af, at, br.shift, zv});
    rqf.nl.push_back({TermKind::TrigCos, -bsus / t, vf, vt, af, at, br.shift, zv});

    Constraint& rpt = add_con(tag("pt", br.id), ConFamily::AcFlow, 0.0, 0.0);
    rpt.shape = ConShape::NonlinearSmooth;
    rpt.lin.push_back({1.0, ix.pt[l]});
    rpt.nl.push_back({TermKind::Quad, -g, vt, vt, -1, -1, 0.0, zv});
    rpt.nl.push_back({TermKind::TrigCos, g / t, vt, vf, at, af, -br.shift, zv});
    rpt.nl.push_back({TermKind::TrigSin, bsus / t, vt, vf, at, af, -br.shift, zv});

    Constraint& rqt = add_con(tag("qt", br.id), ConFamily::AcFlow, 0.0, 0.0);
    rqt.shape = ConShape::NonlinearSmooth;
    rqt.lin.push_back({1.0, ix.qt[l]});
    rqt.nl.push_back({TermKind::Quad, bsus + br.b_to, vt, vt, -1, -1, 0.0, zv});
    rqt.nl.push_back({TermKind::TrigSin, g / t, vt, vf, at, af, -br.shift, zv});
    rqt.nl.push_back({TermKind::TrigCos, -bsus / t, vt, vf, at, af, -br.shift, zv});

    const double mth = spec.big_m_theta;
    if (zv < 0) {
      Constraint& ra = add_con(tag("ang", br.id), ConFamily::AngleDiff, br.ang_min, br.ang_max);
      ra.lin.push_back({1.0, af});
      ra.lin.push_back({-1.0, at});
    } else {
      Constraint& rh = add_con(tag("ang", br.id) + ":ub", ConFamily::AngleDiff, -kInf, mth);
      rh.lin.push_back({1.0, af});
      rh.lin.push_back({-1.0, at});
      rh.lin.push_back({mth - br.ang_max, zv});
      Constraint& rl = add_con(tag("ang", br.id) + ":lb", ConFamily::AngleDiff, -mth, kInf);
      rl.lin.push_back({1.0, af});
      rl.lin.push_back({-1.0, at});
      rl.lin.push_back({-(mth + br.ang_min), zv});
    }

    if (br.s_max > 0.0) {
      const double s2 = br.s_max * br.s_max;
      for (int side = 0; side < 2; ++side) {
        const int pv = side == 0 ? ix.pf[l] : ix.pt[l];
        const int qv = side == 0 ? ix.qf[l] : ix.qt[l];
        Constraint& rt = add_con(tag(side == 0 ? "smax_f" : "smax_t", br.id),
                                 ConFamily::Thermal, -kInf, zv < 0 ? s2 : 0.0);
        rt.shape = ConShape::NonlinearSmooth;
        rt.nl.push_back({TermKind::Quad, 1.0, pv, pv, -1, -1, 0.0, -1});
        rt.nl.push_back({TermKind::Quad, 1.0, qv, qv, -1, -1, 0.0, -1});
        if (zv >= 0) rt.lin.push_back({-s2, zv});
      }
    } else if (zv >= 0) {
      scale_bounds(ix.pf[l], zv, -fbig, fbig, "pfcap", br.id, ConFamily::Thermal);
      scale_bounds(ix.qf[l], zv, -fbig, fbig, "qfcap", br.id, ConFamily::Thermal);
      scale_bounds(ix.pt[l], zv, -fbig, fbig, "ptcap", br.id, ConFamily::Thermal);
      scale_bounds(ix.qt[l], zv, -fbig, fbig, "qtcap", br.id, ConFamily::Thermal);
    }
  }
}

void Builder::dc_branch_rows() {
  const VarIndex& ix = m.idx;
  for (size_t l = 0; l < net.dc_branches.size(); ++l) {
    const DcBranch& br = net.dc_branches[l];
    if (ix.pdc_f[l] < 0) continue;
    const int zv = ix.z_dcbr[l];
    const int ue = ix.udc[static_cast<size_t>(br.from)];
    const int uf = ix.udc[static_cast<size_t>(br.to)];
    const double pg = static_cast<double>(br.poles) / br.r;

    Constraint& rf = add_con(tag("pdcf", br.id), ConFamily::DcFlow, 0.0, 0.0);
    rf.shape = ConShape::NonlinearSmooth;
    rf.lin.push_back({1.0, ix.pdc_f[l]});
    rf.nl.push_back({TermKind::Quad, -pg, ue, ue, -1, -1, 0.0, zv});
    rf.nl.push_back({TermKind::Quad, pg, ue, uf, -1, -1, 0.0, zv});

    Constraint& rt = add_con(tag("pdct", br.id), ConFamily::DcFlow, 0.0, 0.0);
    rt.shape = ConShape::NonlinearSmooth;
    rt.lin.push_back({1.0, ix.pdc_t[l]});
    rt.nl.push_back({TermKind::Quad, -pg, uf, uf, -1, -1, 0.0, zv});
    rt.nl.push_back({TermKind::Quad, pg, uf, ue, -1, -1, 0.0, zv});

    if (zv >= 0) {
      const double cap = br.p_max > 0.0 ? br.p_max : fbig;
      scale_bounds(ix.pdc_f[l], zv, -cap, cap, "pdcfcap", br.id, ConFamily::Thermal);
      scale_bounds(ix.pdc_t[l], zv, -cap, cap, "pdctcap", br.id, ConFamily::Thermal);
    }
  }
}

void Builder::converter_rows() {
  const VarIndex& ix = m.idx;
  for (size_t c = 0; c < net.converters.size(); ++c) {
    const Converter& cv = net.converters[c];
    if (ix.pc_ac[c] < 0) continue;
    const int zv = ix.z_conv[c];
    const int term = ix.vm[static_cast<size_t>(cv.terminal_bus)];
    const int udc = ix.udc[static_cast<size_t>(cv.dc_bus)];

    Constraint& rl = add_con(tag("cv_loss", cv.id), ConFamily::ConverterLoss,
                             zv < 0 ? cv.loss_a : 0.0, zv < 0 ? cv.loss_a : 0.0);
    rl.shape = ConShape::NonlinearSmooth;
    rl.lin.push_back({1.0, ix.pc_ac[c]});
    rl.lin.push_back({1.0, ix.pc_dc[c]});
    rl.lin.push_back({-cv.loss_b, ix.ic[c]});
    if (zv >= 0) rl.lin.push_back({-cv.loss_a, zv});
    rl.nl.push_back({TermKind::Quad, -cv.loss_c, ix.ic[c], ix.ic[c], -1, -1, 0.0, -1});

    // One-sided: branch current covers the apparent power. The loss model
    // is strictly increasing in ic, so the bound closes at any optimum,
    // while the inequality keeps an interior near ic = 0 where the squared
    // equality would have a vanishing gradient and wedge the solver.
    Constraint& rc =
        add_con(tag("cv_cur", cv.id), ConFamily::ConverterCoupling, -kInf, 0.0);
    rc.shape = ConShape::NonlinearSmooth;
    rc.nl.push_back({TermKind::Quad, 1.0, ix.pc_ac[c], ix.pc_ac[c], -1, -1, 0.0, -1});
    rc.nl.push_back({TermKind::Quad, 1.0, ix.qc_ac[c], ix.qc_ac[c], -1, -1, 0.0, -1});
    rc.nl.push_back({TermKind::SqSq, -1.0, term, ix.ic[c], -1, -1, 0.0, -1});

    Constraint& rd = add_con(tag("cv_dcp", cv.id), ConFamily::ConverterCoupling, 0.0, 0.0);
    rd.shape = ConShape::NonlinearSmooth;
    rd.lin.push_back({1.0, ix.pc_dc[c]});
    rd.nl.push_back({TermKind::Quad, -1.0, udc, ix.idc[c], -1, -1, 0.0, zv});

    if (cv.has_filter && ix.q_filter[c] >= 0) {
      const int fb = ix.vm[static_cast<size_t>(cv.filter_bus)];
      Constraint& rf = add_con(tag("cv_flt", cv.id), ConFamily::Definition, 0.0, 0.0);
      rf.shape = ConShape::NonlinearSmooth;
      rf.lin.push_back({1.0, ix.q_filter[c]});
      rf.nl.push_back({TermKind::Quad, -cv.b_filter, fb, fb, -1, -1, 0.0, zv});
    }

    if (zv >= 0) {
      scale_bounds(ix.ic[c], zv, 0.0, cv.i_max, "iccap", cv.id, ConFamily::SwitchFlowBound);
      scale_bounds(ix.idc[c], zv, -cv.i_max, cv.i_max, "idccap", cv.id,
                   ConFamily::SwitchFlowBound);
      scale_bounds(ix.pc_ac[c], zv, cv.p_ac_min, cv.p_ac_max, "pccap", cv.id,
                   ConFamily::SwitchFlowBound);
      scale_bounds(ix.qc_ac[c], zv, cv.q_ac_min, cv.q_ac_max, "qccap", cv.id,
                   ConFamily::SwitchFlowBound);
      scale_bounds(ix.pc_dc[c], zv, -cv.s_max, cv.s_max, "pdccap", cv.id,
                   ConFamily::SwitchFlowBound);
    } else {
      m.vars[static_cast<size_t>(ix.pc_ac[c])].lb = cv.p_ac_min;
      m.vars[static_cast<size_t>(ix.pc_ac[c])].ub = cv.p_ac_max;
      m.vars[static_cast<size_t>(ix.qc_ac[c])].lb = cv.q_ac_min;
      m.vars[static_cast<size_t>(ix.qc_ac[c])].ub = cv.q_ac_max;
    }

    if (cv.s_max > 0.0) {
      Constraint& rt = add_con(tag("cv_smax", cv.id), ConFamily::Thermal, -kInf,
                               zv < 0 ? cv.s_max * cv.s_max : 0.0);
      rt.shape = ConShape::NonlinearSmooth;
      rt.nl.push_back({TermKind::Quad, 1.0, ix.pc_ac[c], ix.pc_ac[c], -1, -1, 0.0, -1});
      rt.nl.push_back({TermKind::Quad, 1.0, ix.qc_ac[c], ix.qc_ac[c], -1, -1, 0.0, -1});
      if (zv >= 0) rt.lin.push_back({-cv.s_max * cv.s_max, zv});
    }
  }
}

void Builder::switch_rows() {
  const VarIndex& ix = m.idx;
  for (size_t s = 0; s < net.switches.size(); ++s) {
    const Switch& sw = net.switches[s];
    if (ix.psw[s] < 0) continue;
    const int zv = ix.z_sw[s];
    if (sw.side == 'a') {
      const int va_a = ix.va[static_cast<size_t>(sw.from_bus)];
      const int va_b = ix.va[static_cast<size_t>(sw.to_bus)];
      const int vm_a = ix.vm[static_cast<size_t>(sw.from_bus)];
      const int vm_b = ix.vm[static_cast<size_t>(sw.to_bus)];
      if (zv < 0) {
        Constraint& ra = add_con(tag("sw_th", sw.id), ConFamily::SwitchVoltage, 0.0, 0.0);
        ra.lin.push_back({1.0, va_a});
        ra.lin.push_back({-1.0, va_b});
        Constraint& rm = add_con(tag("sw_vm", sw.id), ConFamily::SwitchVoltage, 0.0, 0.0);
        rm.lin.push_back({1.0, vm_a});
        rm.lin.push_back({-1.0, vm_b});
      } else {
        const double mth = spec.big_m_theta, mm = spec.big_m_vm;
        Constraint& ru = add_con(tag("sw_th", sw.id) + ":ub", ConFamily::SwitchVoltage, -kInf, mth);
        ru.lin.push_back({1.0, va_a});
        ru.lin.push_back({-1.0, va_b});
        ru.lin.push_back({mth, zv});
        Constraint& rl2 = add_con(tag("sw_th", sw.id) + ":lb", ConFamily::SwitchVoltage, -mth, kInf);
        rl2.lin.push_back({1.0, va_a});
        rl2.lin.push_back({-1.0, va_b});
        rl2.lin.push_back({-mth, zv});
        Constraint& mu = add_con(tag("sw_vm", sw.id) + ":ub", ConFamily::SwitchVoltage, -kInf, mm);
        mu.lin.push_back({1.0, vm_a});
        mu.lin.push_back({-1.0, vm_b});
        mu.lin.push_back({mm, zv});
        Constraint& ml = add_con(tag("sw_vm", sw.id) + ":lb", ConFamily::SwitchVoltage, -mm, kInf);
        ml.lin.push_back({1.0, vm_a});
        ml.lin.push_back({-1.0, vm_b});
        ml.lin.push_back({-mm, zv});
      }
      const double cap = sw.s_max > 0.0 ? sw.s_max : fbig;
      if (zv >= 0) {
        scale_bounds(ix.psw[s], zv, -cap, cap, "pswcap", sw.id, ConFamily::SwitchFlowBound);
        scale_bounds(ix.qsw[s], zv, -cap, cap, "qswcap", sw.id, ConFamily::SwitchFlowBound);
      }
      if (sw.s_max > 0.0) {
        Constraint& rt = add_con(tag("sw_smax", sw.id), ConFamily::Thermal, -kInf,
                                 zv < 0 ? sw.s_max * sw.s_max : 0.0);
        rt.shape = ConShape::NonlinearSmooth;
        rt.nl.push_back({TermKind::Quad, 1.0, ix.psw[s], ix.psw[s], -1, -1, 0.0, -1});
        rt.nl.push_back({TermKind::Quad, 1.0, ix.qsw[s], ix.qsw[s], -1, -1, 0.0, -1});
        if (zv >= 0) rt.lin.push_back({-sw.s_max * sw.s_max, zv});
      }
    } else {
      const int u_a = ix.udc[static_cast<size_t>(sw.from_bus)];
      const int u_b = ix.udc[static_cast<size_t>(sw.to_bus)];
      if (zv < 0) {
        Constraint& rm = add_con(tag("sw_vdc", sw.id), ConFamily::SwitchVoltage, 0.0, 0.0);
        rm.lin.push_back({1.0, u_a});
        rm.lin.push_back({-1.0, u_b});
      } else {
        const double md = spec.big_m_vdc;
        Constraint& mu = add_con(tag("sw_vdc", sw.id) + ":ub", ConFamily::SwitchVoltage, -kInf, md);
        mu.lin.push_back({1.0, u_a});
        mu.lin.push_back({-1.0, u_b});
        mu.lin.push_back({md, zv});
        Constraint& ml = add_con(tag("sw_vdc", sw.id) + ":lb", ConFamily::SwitchVoltage, -md, kInf);
        ml.lin.push_back({1.0, u_a});
        ml.lin.push_back({-1.0, u_b});
        ml.lin.push_back({-md, zv});
      }
      const double cap = sw.s_max > 0.0 ? sw.s_max : fbig;
      if (zv >= 0)
        scale_bounds(ix.psw[s], zv, -cap, cap, "pswcap", sw.id, ConFamily::SwitchFlowBound);
    }
  }
}

void Builder::exclusivity_rows() {
  const VarIndex& ix = m.idx;
  for (const auto& [s1, s2] : switch_pairs(net)) {
    const int z1 = ix.z_sw[static_cast<size_t>(s1)];
    const int z2 = ix.z_sw[static_cast<size_t>(s2)];
    if (z1 < 0 || z2 < 0) continue;
    const bool eq = spec.exclusivity == Exclusivity::Equal;
    Constraint& rx = add_con(tag("excl", net.switches[static_cast<size_t>(s1)].id),
                             ConFamily::Exclusivity, eq ? 1.0 : -kInf, 1.0);
    rx.lin.push_back({1.0, z1});
    rx.lin.push_back({1.0, z2});
    m.excl_pairs.push_back({z1, z2});
  }
}

void Builder::objective_rows() {
  const VarIndex& ix = m.idx;
  for (size_t g = 0; g < net.gens.size(); ++g) {
    const Generator& gen = net.gens[g];
    if (!gen.in_service) continue;
    m.obj_const += gen.c0;
    if (gen.c1 != 0.0) m.objective.push_back({gen.c1, ix.pg[g]});
    if (gen.c2 != 0.0) {
      const double cap = std::max(gen.p_min * gen.p_min, gen.p_max * gen.p_max);
      const int tv = add_var(tag("tg", gen.id), 0.0, gen.c2 * cap, gen.c2 * gen.pg0 * gen.pg0);
      Constraint& re = add_con(tag("tg", gen.id), ConFamily::Definition, -kInf, 0.0);
      re.shape = ConShape::NonlinearSmooth;
      re.nl.push_back({TermKind::Quad, gen.c2, ix.pg[g], ix.pg[g], -1, -1, 0.0, -1});
      re.lin.push_back({-1.0, tv});
      m.objective.push_back({1.0, tv});
    }
  }
}

void Builder::build() {
  alloc_vars();
  balances();
  branch_rows();
  dc_branch_rows();
  converter_rows();
  switch_rows();
  exclusivity_rows();
  objective_rows();
  for (Constraint& c : m.cons)
    c.shape = c.nl.empty() ? ConShape::Linear : ConShape::NonlinearSmooth;
  log_debug("exact model: %zu vars, %zu rows, %zu binaries", m.vars.size(), m.cons.size(),
            m.binaries.size());
}

}  // namespace

MathModel build_exact(const Network& net, const ProblemSpec& spec) {
  Builder b(net, spec);
  b.build();
  return std::move(b.m);
}

}  // namespace gridtopo
