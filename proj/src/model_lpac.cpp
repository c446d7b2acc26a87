#include <cmath>
#include <limits>
#include <string>

#include "gridtopo/log.hpp"
#include "gridtopo/model.hpp"

namespace gridtopo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string tag(const char* stem, int id) { return std::string(stem) + ":" + std::to_string(id); }

struct LpacBuilder {
  const Network& net;
  const ProblemSpec& spec;
  MathModel m;
  double fbig = 10.0;

  bool ots_on, bs_on;
  std::vector<char> ots_acbr, ots_dcbr, ots_conv, sw_active;

  LpacBuilder(const Network& n, const ProblemSpec& s) : net(n), spec(s) {
    m.spec = s;
    m.spec.formulation = Formulation::Lpac;
    ots_on = s.kind == ProblemKind::Ots || s.kind == ProblemKind::OtsBs;
    bs_on = s.kind == ProblemKind::Bs || s.kind == ProblemKind::OtsBs;
    SwitchableSet sw_set = tag_switchable(net, ots_on ? s.scope : SwitchScope::None);
    ots_acbr.assign(net.ac_branches.size(), 0);
    ots_dcbr.assign(net.dc_branches.size(), 0);
    ots_conv.assign(net.converters.size(), 0);
    for (int i : sw_set.ac_branches) ots_acbr[static_cast<size_t>(i)] = 1;
    for (int i : sw_set.dc_branches) ots_dcbr[static_cast<size_t>(i)] = 1;
    for (int i : sw_set.converters) ots_conv[static_cast<size_t>(i)] = 1;
    sw_active.assign(net.switches.size(), 0);
    for (size_t i = 0; i < net.switches.size(); ++i)
      sw_active[i] = (net.switches[i].closed || (bs_on && net.switches[i].switchable)) ? 1 : 0;
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

  void push_row(Constraint c) { m.cons.push_back(std::move(c)); }

  Constraint row(std::string name, ConFamily fam, double lb, double ub) {
    Constraint c;
    c.name = std::move(name);
    c.family = fam;
    c.lb = lb;
    c.ub = ub;
    return c;
  }

  void scale_bounds(int xv, int zv, double lo, double hi, const char* stem, int id,
                    ConFamily fam) {
    Constraint up = row(tag(stem, id) + ":ub", fam, -kInf, 0.0);
    up.lin.push_back({1.0, xv});
    up.lin.push_back({-hi, zv});
    push_row(std::move(up));
    Constraint dn = row(tag(stem, id) + ":lb", fam, 0.0, kInf);
    dn.lin.push_back({1.0, xv});
    dn.lin.push_back({-lo, zv});
    push_row(std::move(dn));
  }

  // |expr - rhs| <= (1 - z) * slack around a linear row, or the plain row
  // when no binary controls it.
  void onoff_eq(std::string name, ConFamily fam, std::vector<LinTerm> lin, double rhs, int zv) {
    if (zv < 0) {
      Constraint c = row(std::move(name), fam, rhs, rhs);
      c.lin = std::move(lin);
      push_row(std::move(c));
      return;
    }
    double mbig = 1.0 + std::abs(rhs);
    for (const LinTerm& t : lin)
      mbig += std::abs(t.c) * std::max(std::abs(m.vars[static_cast<size_t>(t.v)].lb),
                                       std::abs(m.vars[static_cast<size_t>(t.v)].ub));
    mbig *= 1.05;
    Constraint up = row(name + ":on_ub", fam, -kInf, rhs + mbig);
    up.lin = lin;
    up.lin.push_back({mbig, zv});
    push_row(std::move(up));
    Constraint dn = row(name + ":on_lb", fam, rhs - mbig, kInf);
    dn.lin = std::move(lin);
    dn.lin.push_back({-mbig, zv});
    push_row(std::move(dn));
  }

  void polygon(const char* stem, int id, int pv, int qv, double cap, int zv) {
    const int k = std::max(4, spec.thermal_facets);
    for (int f = 0; f < k; ++f) {
      const double a = 2.0 * M_PI * f / k;
      Constraint c = row(tag(stem, id) + ":" + std::to_string(f), ConFamily::Thermal, -kInf,
                         zv < 0 ? cap : 0.0);
      c.lin.push_back({std::cos(a), pv});
      if (qv >= 0) c.lin.push_back({std::sin(a), qv});
      if (zv >= 0) c.lin.push_back({-cap, zv});
      push_row(std::move(c));
    }
  }

  void build();
};

void LpacBuilder::build() {
  VarIndex& ix = m.idx;
  const size_t nb = net.ac_buses.size();
  ix.va.assign(nb, -1);
  ix.phi.assign(nb, -1);
  for (size_t i = 0; i < nb; ++i) {
    const AcBus& b = net.ac_buses[i];
    ix.va[i] = add_var(tag("va", b.id), -M_PI, M_PI, b.va0);
    ix.phi[i] = add_var(tag("phi", b.id), b.vmin - 1.0, b.vmax - 1.0, b.vm0 - 1.0);
  }
  ix.phid.assign(net.dc_buses.size(), -1);
  for (size_t e = 0; e < net.dc_buses.size(); ++e) {
    const DcBus& b = net.dc_buses[e];
    ix.phid[e] = add_var(tag("phid", b.id), b.vmin - 1.0, b.vmax - 1.0, b.vdc0 - 1.0);
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
  ix.cs.assign(net.ac_branches.size(), -1);
  for (size_t l = 0; l < net.ac_branches.size(); ++l) {
    const AcBranch& br = net.ac_branches[l];
    if (!br.in_service) continue;
    const double cap = br.s_max > 0.0 ? br.s_max : fbig;
    ix.pf[l] = add_var(tag("pf", br.id), -cap, cap, 0.0);
    ix.qf[l] = add_var(tag("qf", br.id), -cap, cap, 0.0);
    ix.pt[l] = add_var(tag("pt", br.id), -cap, cap, 0.0);
    ix.qt[l] = add_var(tag("qt", br.id), -cap, cap, 0.0);
    const double lo = br.ang_min - br.shift, hi = br.ang_max - br.shift;
    const double clo = std::min(std::cos(lo), std::cos(hi));
    ix.cs[l] = add_var(tag("cs", br.id), std::min(clo, 0.99), 1.0, 1.0);
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
  ix.ic_sq.assign(net.converters.size(), -1);
  ix.q_filter.assign(net.converters.size(), -1);
  for (size_t c = 0; c < net.converters.size(); ++c) {
    const Converter& cv = net.converters[c];
    if (!cv.in_service) continue;
    const bool zc = ots_conv[c] != 0;
    ix.pc_ac[c] = add_var(tag("pcac", cv.id), zc ? std::min(0.0, cv.p_ac_min) : cv.p_ac_min,
                          zc ? std::max(0.0, cv.p_ac_max) : cv.p_ac_max, -cv.p_set);
    ix.qc_ac[c] = add_var(tag("qcac", cv.id), zc ? std::min(0.0, cv.q_ac_min) : cv.q_ac_min,
                          zc ? std::max(0.0, cv.q_ac_max) : cv.q_ac_max, -cv.q_set);
    ix.pc_dc[c] = add_var(tag("pcdc", cv.id), -cv.s_max, cv.s_max, cv.p_set);
    ix.ic[c] = add_var(tag("ic", cv.id), 0.0, cv.i_max, 0.1);
    ix.ic_sq[c] = add_var(tag("eta", cv.id), 0.0, cv.i_max * cv.i_max, 0.01);
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
  for (size_t s = 0; s < net.switches.size(); ++s)
    if (bs_on && net.switches[s].switchable) {
      ix.z_sw[s] = add_var(tag("zsw", net.switches[s].id), 0.0, 1.0,
                           net.switches[s].closed ? 1.0 : 0.0, VarKind::Binary);
      m.binaries.push_back(ix.z_sw[s]);
    }

  // balances
  for (size_t i = 0; i < nb; ++i) {
    const AcBus& bus = net.ac_buses[i];
    double pd = 0.0, qd = 0.0;
    for (const Load& l : net.loads)
      if (l.side == 'a' && l.bus == static_cast<int>(i)) {
        pd += l.pd;
        qd += l.qd;
      }
    Constraint cp = row(tag("bal_p", bus.id), ConFamily::AcBalance, pd + bus.gs, pd + bus.gs);
    Constraint cq = row(tag("bal_q", bus.id), ConFamily::AcBalance, qd - bus.bs, qd - bus.bs);
    if (bus.gs != 0.0) cp.lin.push_back({-2.0 * bus.gs, ix.phi[i]});
    if (bus.bs != 0.0) cq.lin.push_back({2.0 * bus.bs, ix.phi[i]});
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
    push_row(std::move(cp));
    push_row(std::move(cq));
    if (bus.reference) {
      Constraint cr = row(tag("ref", bus.id), ConFamily::Reference, 0.0, 0.0);
      cr.lin.push_back({1.0, ix.va[i]});
      push_row(std::move(cr));
    }
  }
  for (size_t e = 0; e < net.dc_buses.size(); ++e) {
    const DcBus& bus = net.dc_buses[e];
    double pd = 0.0;
    for (const Load& l : net.loads)
      if (l.side == 'd' && l.bus == static_cast<int>(e)) pd += l.pd;
    Constraint cp = row(tag("bal_dc", bus.id), ConFamily::DcBalance, pd, pd);
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
    push_row(std::move(cp));
  }

  // AC branch flows, cosine envelope, angle windows, ratings
  for (size_t l = 0; l < net.ac_branches.size(); ++l) {
    const AcBranch& br = net.ac_branches[l];
    if (ix.pf[l] < 0) continue;
    int zv = ix.z_acbr[l];
    if (br.conv_owner >= 0) zv = ix.z_conv[static_cast<size_t>(br.conv_owner)];
    const size_t fi = static_cast<size_t>(br.from), ti = static_cast<size_t>(br.to);
    const double g = br.r / (br.r * br.r + br.x * br.x);
    const double b = -br.x / (br.r * br.r + br.x * br.x);
    const double t = br.tap, t2 = t * t, sg = br.shift;
    const int pfv = ix.pf[l], qfv = ix.qf[l], ptv = ix.pt[l], qtv = ix.qt[l];
    const int ff = ix.phi[fi], ft = ix.phi[ti], af = ix.va[fi], at = ix.va[ti];
    const int cs = ix.cs[l];

    {
      std::vector<LinTerm> lin{{1.0, pfv},       {-2.0 * g / t2, ff}, {g / t, cs},
                               {g / t, ff},      {g / t, ft},         {b / t, af},
                               {-b / t, at}};
      onoff_eq(tag("pf", br.id), ConFamily::AcFlow, std::move(lin), g / t2 + b / t * sg, zv);
    }
    {
      std::vector<LinTerm> lin{{1.0, qfv},   {2.0 * (b + br.b_fr) / t2, ff},
                               {g / t, af},  {-g / t, at},
                               {-b / t, cs}, {-b / t, ff},
                               {-b / t, ft}};
      onoff_eq(tag("qf", br.id), ConFamily::AcFlow, std::move(lin),
               -(b + br.b_fr) / t2 + g / t * sg, zv);
    }
    {
      std::vector<LinTerm> lin{{1.0, ptv},  {-2.0 * g, ft}, {g / t, cs}, {g / t, ff},
                               {g / t, ft}, {-b / t, af},   {b / t, at}};
      onoff_eq(tag("pt", br.id), ConFamily::AcFlow, std::move(lin), g - b / t * sg, zv);
    }
    {
      std::vector<LinTerm> lin{{1.0, qtv},   {2.0 * (b + br.b_to), ft},
                               {-g / t, af}, {g / t, at},
                               {-b / t, cs}, {-b / t, ff},
                               {-b / t, ft}};
      onoff_eq(tag("qt", br.id), ConFamily::AcFlow, std::move(lin), -(b + br.b_to) - g / t * sg,
               zv);
    }

    // tangent over-estimator of the branch cosine
    const double lo = br.ang_min - sg, hi = br.ang_max - sg;
    const std::vector<double> knots = cosine_knots(lo, hi, spec.cos_segments);
    int ki = 0;
    for (double tk : knots) {
      const double sk = std::sin(tk);
      const double rhs = std::cos(tk) + sk * tk + sk * sg;
      Constraint c = row(tag("cskt", br.id) + ":" + std::to_string(ki++), ConFamily::Definition,
                         -kInf, rhs);
      c.lin.push_back({1.0, cs});
      c.lin.push_back({sk, af});
      c.lin.push_back({-sk, at});
      if (zv >= 0) {
        const double mt = std::abs(sk) * (2.0 * M_PI + std::abs(sg) + std::abs(tk)) + 2.0;
        c.ub = rhs + mt;
        c.lin.push_back({mt, zv});
      }
      push_row(std::move(c));
    }

    const double mth = spec.big_m_theta;
    if (zv < 0) {
      Constraint ra = row(tag("ang", br.id), ConFamily::AngleDiff, br.ang_min, br.ang_max);
      ra.lin.push_back({1.0, af});
      ra.lin.push_back({-1.0, at});
      push_row(std::move(ra));
    } else {
      Constraint rh = row(tag("ang", br.id) + ":ub", ConFamily::AngleDiff, -kInf, mth);
      rh.lin.push_back({1.0, af});
      rh.lin.push_back({-1.0, at});
      rh.lin.push_back({mth - br.ang_max, zv});
      push_row(std::move(rh));
      Constraint rl = row(tag("ang", br.id) + ":lb", ConFamily::AngleDiff, -mth, kInf);
      rl.lin.push_back({1.0, af});
      rl.lin.push_back({-1.0, at});
      rl.lin.push_back({-(mth + br.ang_min), zv});
      push_row(std::move(rl));
    }

    if (br.s_max > 0.0) {
      polygon("smax_f", br.id, pfv, qfv, br.s_max, zv);
      polygon("smax_t", br.id, ptv, qtv, br.s_max, zv);
    } else if (zv >= 0) {
      scale_bounds(pfv, zv, -fbig, fbig, "pfcap", br.id, ConFamily::Thermal);
      scale_bounds(qfv, zv, -fbig, fbig, "qfcap", br.id, ConFamily::Thermal);
      scale_bounds(ptv, zv, -fbig, fbig, "ptcap", br.id, ConFamily::Thermal);
      scale_bounds(qtv, zv, -fbig, fbig, "qtcap", br.id, ConFamily::Thermal);
    }
  }

  // DC branches: linear lossless flow at nominal voltage
  for (size_t l = 0; l < net.dc_branches.size(); ++l) {
    const DcBranch& br = net.dc_branches[l];
    if (ix.pdc_f[l] < 0) continue;
    const int zv = ix.z_dcbr[l];
    const double pg = static_cast<double>(br.poles) / br.r;
    {
      std::vector<LinTerm> lin{{1.0, ix.pdc_f[l]},
                               {-pg, ix.phid[static_cast<size_t>(br.from)]},
                               {pg, ix.phid[static_cast<size_t>(br.to)]}};
      onoff_eq(tag("pdcf", br.id), ConFamily::DcFlow, std::move(lin), 0.0, zv);
    }
    Constraint ra = row(tag("pdcsum", br.id), ConFamily::DcFlow, 0.0, 0.0);
    ra.lin.push_back({1.0, ix.pdc_f[l]});
    ra.lin.push_back({1.0, ix.pdc_t[l]});
    push_row(std::move(ra));
    if (zv >= 0) {
      const double cap = br.p_max > 0.0 ? br.p_max : fbig;
      scale_bounds(ix.pdc_f[l], zv, -cap, cap, "pdcfcap", br.id, ConFamily::Thermal);
      scale_bounds(ix.pdc_t[l], zv, -cap, cap, "pdctcap", br.id, ConFamily::Thermal);
    }
  }

  // converters
  for (size_t c = 0; c < net.converters.size(); ++c) {
    const Converter& cv = net.converters[c];
    if (ix.pc_ac[c] < 0) continue;
    const int zv = ix.z_conv[c];
    const int pc = ix.pc_ac[c], qc = ix.qc_ac[c], pd = ix.pc_dc[c];
    const int ic = ix.ic[c], eta = ix.ic_sq[c];

    // current dominates the apparent power polygon
    const int kf = std::max(4, spec.thermal_facets);
    for (int f = 0; f < kf; ++f) {
      const double a = 2.0 * M_PI * f / kf;
      Constraint cc = row(tag("cv_cur", cv.id) + ":" + std::to_string(f),
                          ConFamily::ConverterCoupling, -kInf, 0.0);
      cc.lin.push_back({std::cos(a), pc});
      cc.lin.push_back({std::sin(a), qc});
      cc.lin.push_back({-1.0, ic});
      push_row(std::move(cc));
    }

    Constraint rl = row(tag("cv_loss", cv.id), ConFamily::ConverterLoss,
                        zv < 0 ? cv.loss_a : 0.0, zv < 0 ? cv.loss_a : 0.0);
    rl.lin.push_back({1.0, pc});
    rl.lin.push_back({1.0, pd});
    rl.lin.push_back({-cv.loss_b, ic});
    rl.lin.push_back({-cv.loss_c, eta});
    if (zv >= 0) rl.lin.push_back({-cv.loss_a, zv});
    push_row(std::move(rl));

    const int segs = std::max(1, spec.cos_segments);
    for (int j = 1; j <= segs; ++j) {
      const double tk = cv.i_max * j / segs;
      Constraint ce = row(tag("cvloss_cut", cv.id) + ":" + std::to_string(j),
                          ConFamily::Definition, -tk * tk, kInf);
      ce.lin.push_back({1.0, eta});
      ce.lin.push_back({-2.0 * tk, ic});
      push_row(std::move(ce));
    }

    if (ix.q_filter[c] >= 0) {
      const int qv = ix.q_filter[c];
      const int fphi = ix.phi[static_cast<size_t>(cv.filter_bus)];
      if (zv < 0) {
        Constraint rf = row(tag("cv_flt", cv.id), ConFamily::Definition, cv.b_filter,
                            cv.b_filter);
        rf.lin.push_back({1.0, qv});
        rf.lin.push_back({-2.0 * cv.b_filter, fphi});
        push_row(std::move(rf));
      } else {
        std::vector<LinTerm> lin{{1.0, qv}, {-cv.b_filter, zv}, {-2.0 * cv.b_filter, fphi}};
        onoff_eq(tag("cv_flt", cv.id), ConFamily::Definition, std::move(lin), 0.0, zv);
        const double cap = std::abs(cv.b_filter) * 1.3 * 1.3;
        scale_bounds(qv, zv, -cap, cap, "qfltcap", cv.id, ConFamily::SwitchFlowBound);
      }
    }

    if (zv >= 0) {
      scale_bounds(ic, zv, 0.0, cv.i_max, "iccap", cv.id, ConFamily::SwitchFlowBound);
      scale_bounds(pc, zv, cv.p_ac_min, cv.p_ac_max, "pccap", cv.id, ConFamily::SwitchFlowBound);
      scale_bounds(qc, zv, cv.q_ac_min, cv.q_ac_max, "qccap", cv.id, ConFamily::SwitchFlowBound);
      scale_bounds(pd, zv, -cv.s_max, cv.s_max, "pdccap", cv.id, ConFamily::SwitchFlowBound);
      scale_bounds(eta, zv, 0.0, cv.i_max * cv.i_max, "etacap", cv.id,
                   ConFamily::SwitchFlowBound);
    }
    if (cv.s_max > 0.0) polygon("cv_smax", cv.id, pc, qc, cv.s_max, zv);
  }

  // switches: angle and voltage ties on both modeled quantities
  for (size_t s = 0; s < net.switches.size(); ++s) {
    const Switch& sw = net.switches[s];
    if (ix.psw[s] < 0) continue;
    const int zv = ix.z_sw[s];
    const double cap = sw.s_max > 0.0 ? sw.s_max : fbig;
    if (sw.side == 'a') {
      const int aa = ix.va[static_cast<size_t>(sw.from_bus)];
      const int ab = ix.va[static_cast<size_t>(sw.to_bus)];
      const int fa = ix.phi[static_cast<size_t>(sw.from_bus)];
      const int fb = ix.phi[static_cast<size_t>(sw.to_bus)];
      if (zv < 0) {
        Constraint ra = row(tag("sw_th", sw.id), ConFamily::SwitchVoltage, 0.0, 0.0);
        ra.lin.push_back({1.0, aa});
        ra.lin.push_back({-1.0, ab});
        push_row(std::move(ra));
        Constraint rm = row(tag("sw_phi", sw.id), ConFamily::SwitchVoltage, 0.0, 0.0);
        rm.lin.push_back({1.0, fa});
        rm.lin.push_back({-1.0, fb});
        push_row(std::move(rm));
      } else {
        const double mth = spec.big_m_theta, mm = spec.big_m_vm;
        for (int sideu = 0; sideu < 2; ++sideu) {
          const double sgn2 = sideu == 0 ? 1.0 : -1.0;
          Constraint ru = row(tag("sw_th", sw.id) + (sideu == 0 ? ":ub" : ":lb"),
                              ConFamily::SwitchVoltage, -kInf, mth);
          ru.lin.push_back({sgn2, aa});
          ru.lin.push_back({-sgn2, ab});
          ru.lin.push_back({mth, zv});
          push_row(std::move(ru));
          Constraint rm = row(tag("sw_phi", sw.id) + (sideu == 0 ? ":ub" : ":lb"),
                              ConFamily::SwitchVoltage, -kInf, mm);
          rm.lin.push_back({sgn2, fa});
          rm.lin.push_back({-sgn2, fb});
          rm.lin.push_back({mm, zv});
          push_row(std::move(rm));
        }
      }
      if (zv >= 0) {
        scale_bounds(ix.psw[s], zv, -cap, cap, "pswcap", sw.id, ConFamily::SwitchFlowBound);
        scale_bounds(ix.qsw[s], zv, -cap, cap, "qswcap", sw.id, ConFamily::SwitchFlowBound);
      }
      if (sw.s_max > 0.0) polygon("sw_smax", sw.id, ix.psw[s], ix.qsw[s], sw.s_max, zv);
    } else {
      const int ua = ix.phid[static_cast<size_t>(sw.from_bus)];
      const int ub = ix.phid[static_cast<size_t>(sw.to_bus)];
      if (zv < 0) {
        Constraint rm = row(tag("sw_vdc", sw.id), ConFamily::SwitchVoltage, 0.0, 0.0);
        rm.lin.push_back({1.0, ua});
        rm.lin.push_back({-1.0, ub});
        push_row(std::move(rm));
      } else {
        const double md = spec.big_m_vdc;
        for (int sideu = 0; sideu < 2; ++sideu) {
          const double sgn2 = sideu == 0 ? 1.0 : -1.0;
          Constraint rm = row(tag("sw_vdc", sw.id) + (sideu == 0 ? ":ub" : ":lb"),
                              ConFamily::SwitchVoltage, -kInf, md);
          rm.lin.push_back({sgn2, ua});
          rm.lin.push_back({-sgn2, ub});
          rm.lin.push_back({md, zv});
          push_row(std::move(rm));
        }
      }
      if (zv >= 0)
        scale_bounds(ix.psw[s], zv, -cap, cap, "pswcap", sw.id, ConFamily::SwitchFlowBound);
    }
  }

  for (const auto& [s1, s2] : switch_pairs(net)) {
    const int z1 = ix.z_sw[static_cast<size_t>(s1)];
    const int z2 = ix.z_sw[static_cast<size_t>(s2)];
    if (z1 < 0 || z2 < 0) continue;
    const bool eq = spec.exclusivity == Exclusivity::Equal;
    Constraint rx = row(tag("excl", net.switches[static_cast<size_t>(s1)].id),
                        ConFamily::Exclusivity, eq ? 1.0 : -kInf, 1.0);
    rx.lin.push_back({1.0, z1});
    rx.lin.push_back({1.0, z2});
    push_row(std::move(rx));
    m.excl_pairs.push_back({z1, z2});
  }

  for (size_t g = 0; g < net.gens.size(); ++g) {
    const Generator& gen = net.gens[g];
    if (!gen.in_service) continue;
    m.obj_const += gen.c0;
    if (gen.c1 != 0.0) m.objective.push_back({gen.c1, ix.pg[g]});
    if (gen.c2 != 0.0) {
      const double cap = std::max(gen.p_min * gen.p_min, gen.p_max * gen.p_max);
      const int tv = add_var(tag("tg", gen.id), 0.0, gen.c2 * cap, gen.c2 * gen.pg0 * gen.pg0);
      const int segs = std::max(1, spec.cos_segments);
      for (int j = 0; j <= segs; ++j) {
        const double tk = gen.p_min + (gen.p_max - gen.p_min) * j / segs;
        Constraint ce = row(tag("tg", gen.id) + ":" + std::to_string(j), ConFamily::Definition,
                            -gen.c2 * tk * tk, kInf);
        ce.lin.push_back({1.0, tv});
        ce.lin.push_back({-2.0 * gen.c2 * tk, ix.pg[g]});
        push_row(std::move(ce));
      }
      m.objective.push_back({1.0, tv});
    }
  }

  for (Constraint& c : m.cons) c.shape = ConShape::Linear;
  log_debug("lpac model: %zu vars, %zu rows, %zu binaries", m.vars.size(), m.cons.size(),
            m.binaries.size());
}

}  // namespace

MathModel lpac_build(const Network& net, const ProblemSpec& spec) {
  LpacBuilder b(net, spec);
  b.build();
  return std::move(b.m);
}

}  // namespace gridtopo
