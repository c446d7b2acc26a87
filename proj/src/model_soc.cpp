#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "gridtopo/log.hpp"
#include "gridtopo/model.hpp"

namespace gridtopo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double maxabs(const Variable& v) { return std::max(std::abs(v.lb), std::abs(v.ub)); }

struct PairVars {
  int wr = -1;
  int wi = -1;
};

struct Lifter {
  const MathModel& ex;
  const Network& net;
  MathModel m;

  std::vector<int> bus_of_vm, bus_of_udc, conv_of_ic;
  std::vector<char> is_va;
  std::map<std::pair<int, int>, PairVars> ac_pairs;   // bus index pairs
  std::map<std::pair<int, int>, int> dc_pairs;        // wdc cross terms

  Lifter(const MathModel& e, const Network& n) : ex(e), net(n) {
    m.spec = ex.spec;
    m.spec.formulation = Formulation::Soc;
    m.vars = ex.vars;
    m.idx = ex.idx;
    m.binaries = ex.binaries;
    m.excl_pairs = ex.excl_pairs;
    m.objective = ex.objective;
    m.obj_const = ex.obj_const;
    bus_of_vm.assign(ex.vars.size(), -1);
    bus_of_udc.assign(ex.vars.size(), -1);
    conv_of_ic.assign(ex.vars.size(), -1);
    is_va.assign(ex.vars.size(), 0);
    for (size_t i = 0; i < net.ac_buses.size(); ++i) {
      bus_of_vm[static_cast<size_t>(ex.idx.vm[i])] = static_cast<int>(i);
      is_va[static_cast<size_t>(ex.idx.va[i])] = 1;
    }
    for (size_t e2 = 0; e2 < net.dc_buses.size(); ++e2)
      bus_of_udc[static_cast<size_t>(ex.idx.udc[e2])] = static_cast<int>(e2);
    for (size_t c = 0; c < net.converters.size(); ++c)
      if (ex.idx.ic[c] >= 0) conv_of_ic[static_cast<size_t>(ex.idx.ic[c])] = static_cast<int>(c);
  }

  int add_var(std::string name, double lb, double ub, double x0) {
    Variable v;
    v.name = std::move(name);
    v.lb = lb;
    v.ub = ub;
    v.x0 = std::min(std::max(x0, lb), ub);
    m.vars.push_back(std::move(v));
    return static_cast<int>(m.vars.size()) - 1;
  }

  // Repurpose magnitude slots as their squares, drop angle slots.
  void repurpose_slots() {
    m.idx.w.assign(net.ac_buses.size(), -1);
    m.idx.wdc.assign(net.dc_buses.size(), -1);
    for (size_t i = 0; i < net.ac_buses.size(); ++i) {
      const int slot = ex.idx.vm[i];
      Variable& v = m.vars[static_cast<size_t>(slot)];
      v.name = "w:" + std::to_string(net.ac_buses[i].id);
      const double lb = v.lb, ub = v.ub;
      v.lb = lb * lb;
      v.ub = ub * ub;
      v.x0 = std::min(std::max(v.x0 * v.x0, v.lb), v.ub);
      m.idx.w[i] = slot;
      const int aslot = ex.idx.va[i];
      Variable& a = m.vars[static_cast<size_t>(aslot)];
      a.name = "_va:" + std::to_string(net.ac_buses[i].id);
      a.lb = a.ub = a.x0 = 0.0;
    }
    m.idx.vm.assign(net.ac_buses.size(), -1);
    m.idx.va.assign(net.ac_buses.size(), -1);
    for (size_t e2 = 0; e2 < net.dc_buses.size(); ++e2) {
      const int slot = ex.idx.udc[e2];
      Variable& v = m.vars[static_cast<size_t>(slot)];
      v.name = "wdc:" + std::to_string(net.dc_buses[e2].id);
      const double lb = v.lb, ub = v.ub;
      v.lb = lb * lb;
      v.ub = ub * ub;
      v.x0 = std::min(std::max(v.x0 * v.x0, v.lb), v.ub);
      m.idx.wdc[e2] = slot;
    }
    m.idx.udc.assign(net.dc_buses.size(), -1);
    m.idx.ic_sq.assign(net.converters.size(), -1);
  }

  // AC bus pair: bounds come from the magnitude bounds and, for pairs whose
  // branches are all fixed in, the union of their angle windows.
  PairVars& ac_pair(int bi, int bj) {
    const auto key = std::minmax(bi, bj);
    auto it = ac_pairs.find(key);
    if (it != ac_pairs.end()) return it->second;
    const AcBus& a = net.ac_buses[static_cast<size_t>(key.first)];
    const AcBus& b = net.ac_buses[static_cast<size_t>(key.second)];
    const double ll = a.vmin * b.vmin, uu = a.vmax * b.vmax;
    bool any_free = false;
    double amin = 0.0, amax = 0.0;
    bool have_window = false;
    for (size_t l = 0; l < net.ac_branches.size(); ++l) {
      const AcBranch& br = net.ac_branches[l];
      if (ex.idx.pf[l] < 0) continue;
      const auto bk = std::minmax(br.from, br.to);
      if (bk.first != key.first || bk.second != key.second) continue;
      int zv = ex.idx.z_acbr[l];
      if (br.conv_owner >= 0) zv = ex.idx.z_conv[static_cast<size_t>(br.conv_owner)];
      if (zv >= 0) any_free = true;
      double lo = br.ang_min, hi = br.ang_max;
      if (br.from != key.first) {
        lo = -br.ang_max;
        hi = -br.ang_min;
      }
      amin = have_window ? std::min(amin, lo) : lo;
      amax = have_window ? std::max(amax, hi) : hi;
      have_window = true;
    }
    PairVars pv;
    const std::string stem =
        std::to_string(a.id) + ":" + std::to_string(b.id);
    if (any_free || !have_window || amax - amin >= M_PI) {
      pv.wr = add_var("wr:" + stem, -uu, uu, 1.0);
      pv.wi = add_var("wi:" + stem, -uu, uu, 0.0);
    } else {
      const double clo = std::min(std::cos(amin), std::cos(amax));
      const double chi = (amin <= 0.0 && amax >= 0.0) ? 1.0 : std::max(std::cos(amin), std::cos(amax));
      pv.wr = add_var("wr:" + stem, clo >= 0.0 ? ll * clo : uu * clo, uu * chi, 1.0);
      const double slo = std::sin(amin), shi = std::sin(amax);
      pv.wi = add_var("wi:" + stem, slo <= 0.0 ? uu * slo : ll * slo,
                      shi >= 0.0 ? uu * shi : ll * shi, 0.0);
    }
    return ac_pairs.emplace(key, pv).first->second;
  }

  int dc_pair(int ei, int ej) {
    const auto key = std::minmax(ei, ej);
    auto it = dc_pairs.find(key);
    if (it != dc_pairs.end()) return it->second;
    const DcBus& a = net.dc_buses[static_cast<size_t>(key.first)];
    const DcBus& b = net.dc_buses[static_cast<size_t>(key.second)];
    const int v = add_var("wdcx:" + std::to_string(a.id) + ":" + std::to_string(b.id),
                          a.vmin * b.vmin, a.vmax * b.vmax, 1.0);
    return dc_pairs.emplace(key, v).first->second;
  }

  int conv_isq(int c) {
    int& slot = m.idx.ic_sq[static_cast<size_t>(c)];
    if (slot < 0) {
      const Converter& cv = net.converters[static_cast<size_t>(c)];
      slot = add_var("isq:" + std::to_string(cv.id), 0.0, cv.i_max * cv.i_max, 0.01);
    }
    return slot;
  }

  // Maps one smooth term into linear terms over the lifted variables.
  // Returns false when the term has no linear image (handled by patterns).
  bool map_term(const NlTerm& t, std::vector<LinTerm>& out) {
    if (t.kind == TermKind::Quad) {
      const int bi = bus_of_vm[static_cast<size_t>(t.x)];
      const int bj = bus_of_vm[static_cast<size_t>(t.y)];
      if (bi >= 0 && bj >= 0) {
        if (bi == bj) {
          out.push_back({t.c, m.idx.w[static_cast<size_t>(bi)]});
        } else {
          const PairVars& pv = ac_pair(bi, bj);
          out.push_back({t.c, pv.wr});  // magnitude product against cos 0
        }
        return true;
      }
      const int ei = bus_of_udc[static_cast<size_t>(t.x)];
      const int ej = bus_of_udc[static_cast<size_t>(t.y)];
      if (ei >= 0 && ej >= 0) {
        if (ei == ej)
          out.push_back({t.c, m.idx.wdc[static_cast<size_t>(ei)]});
        else
          out.push_back({t.c, dc_pair(ei, ej)});
        return true;
      }
      const int ci = conv_of_ic[static_cast<size_t>(t.x)];
      if (ci >= 0 && t.x == t.y) {
        out.push_back({t.c, conv_isq(ci)});
        return true;
      }
      return false;
    }
    if (t.kind == TermKind::TrigCos || t.kind == TermKind::TrigSin) {
      const int bi = bus_of_vm[static_cast<size_t>(t.x)];
      const int bj = bus_of_vm[static_cast<size_t>(t.y)];
      if (bi < 0 || bj < 0) return false;
      const PairVars& pv = ac_pair(bi, bj);
      const double sgn = bi < bj ? 1.0 : -1.0;
      const double cp = std::cos(t.phi), sp = std::sin(t.phi);
      if (t.kind == TermKind::TrigCos) {
        out.push_back({t.c * cp, pv.wr});
        out.push_back({t.c * sp * sgn, pv.wi});
      } else {
        out.push_back({t.c * cp * sgn, pv.wi});
        out.push_back({-t.c * sp, pv.wr});
      }
      return true;
    }
    return false;
  }

  bool touches_va(const Constraint& c) const {
    for (const LinTerm& t : c.lin)
      if (is_va[static_cast<size_t>(t.v)]) return true;
    return false;
  }

  void emit_mapped(const Constraint& src, std::vector<LinTerm> lin, bool had_z, int zv) {
    if (!had_z || zv < 0) {
      Constraint c;
      c.name = src.name;
      c.family = src.family;
      c.lb = src.lb;
      c.ub = src.ub;
      c.lin = std::move(lin);
      m.cons.push_back(std::move(c));
      return;
    }
    double mbig = 1.0;
    for (const LinTerm& t : lin)
      if (t.v != zv) mbig += std::abs(t.c) * maxabs(m.vars[static_cast<size_t>(t.v)]);
    mbig = 1.05 * (mbig + std::max(std::abs(src.lb) < kInf ? std::abs(src.lb) : 0.0,
                                   std::abs(src.ub) < kInf ? std::abs(src.ub) : 0.0));
    if (src.ub < kInf) {
      Constraint c;
      c.name = src.name + ":on_ub";
      c.family = src.family;
      c.lb = -kInf;
      c.ub = src.ub + mbig;
      c.lin = lin;
      c.lin.push_back({mbig, zv});
      m.cons.push_back(std::move(c));
    }
    if (src.lb > -kInf) {
      Constraint c;
      c.name = src.name + ":on_lb";
      c.family = src.family;
      c.lb = src.lb - mbig;
      c.ub = kInf;
      c.lin = std::move(lin);
      c.lin.push_back({-mbig, zv});
      m.cons.push_back(std::move(c));
    }
  }

  // Thermal and epigraph rows: sum of squares against a scaled bound.
  bool try_cone_pattern(const Constraint& src) {
    if (src.shape != ConShape::NonlinearSmooth) return false;
    const bool thermal = src.family == ConFamily::Thermal;
    const bool epig = src.family == ConFamily::Definition && src.name.rfind("tg:", 0) == 0;
    if (!thermal && !epig) return false;
    Cone cn;
    cn.name = src.name;
    cn.family = src.family;
    for (const NlTerm& t : src.nl) {
      if (t.kind != TermKind::Quad || t.x != t.y || t.c <= 0.0) return false;
      AffExpr u;
      u.lin.push_back({std::sqrt(t.c), t.x});
      cn.u.push_back(std::move(u));
    }
    // bound side: either a constant ub or a linear budget term
    if (src.lin.empty()) {
      if (!(src.ub < kInf) || src.ub < 0.0) return false;
      cn.x.c = src.ub;
    } else if (src.lin.size() == 1 && src.lin[0].c < 0.0) {
      cn.x.lin.push_back({-src.lin[0].c, src.lin[0].v});
    } else {
      return false;
    }
    cn.y.c = 1.0;
    m.cones.push_back(std::move(cn));
    return true;
  }

  void lift_rows() {
    for (const Constraint& src : ex.cons) {
      if (src.family == ConFamily::Reference || src.family == ConFamily::AngleDiff) continue;
      if (src.family == ConFamily::SwitchVoltage && touches_va(src)) continue;
      if (src.family == ConFamily::ConverterCoupling) {
        if (src.name.rfind("cv_dcp", 0) == 0) continue;
        if (src.name.rfind("cv_cur", 0) == 0) {
          // P^2 + Q^2 = U^2 I^2 relaxes onto the rotated cone W * isq
          Cone cn;
          cn.name = src.name;
          cn.family = src.family;
          int wslot = -1, cidx = -1;
          for (const NlTerm& t : src.nl) {
            if (t.kind == TermKind::SqSq) {
              wslot = t.x;  // magnitude slot, already repurposed
              cidx = conv_of_ic[static_cast<size_t>(t.y)];
            } else {
              AffExpr u;
              u.lin.push_back({1.0, t.x});
              cn.u.push_back(std::move(u));
            }
          }
          if (wslot < 0 || cidx < 0) throw ModelError("unrecognized coupling row " + src.name);
          cn.x.lin.push_back({1.0, wslot});
          cn.y.lin.push_back({1.0, conv_isq(cidx)});
          m.cones.push_back(std::move(cn));
          continue;
        }
      }
      if (try_cone_pattern(src)) continue;
      // generic term mapping
      std::vector<LinTerm> lin = src.lin;
      bool had_z = false;
      int zv = -1;
      bool ok = true;
      for (const NlTerm& t : src.nl) {
        if (t.z >= 0) {
          had_z = true;
          zv = t.z;
        }
        if (!map_term(t, lin)) {
          ok = false;
          break;
        }
      }
      if (!ok) throw ModelError("no conic image for row " + src.name);
      emit_mapped(src, std::move(lin), had_z, zv);
      // on/off helper rows must also pin their defined variable at zero
      if (had_z && zv >= 0 && src.name.rfind("cv_flt", 0) == 0) {
        const int qv = src.lin[0].v;
        const double cap = maxabs(m.vars[static_cast<size_t>(qv)]);
        Constraint up;
        up.name = src.name + ":pin_ub";
        up.family = ConFamily::SwitchFlowBound;
        up.lb = -kInf;
        up.ub = 0.0;
        up.lin.push_back({1.0, qv});
        up.lin.push_back({-cap, zv});
        m.cons.push_back(std::move(up));
        Constraint dn;
        dn.name = src.name + ":pin_lb";
        dn.family = ConFamily::SwitchFlowBound;
        dn.lb = 0.0;
        dn.ub = kInf;
        dn.lin.push_back({1.0, qv});
        dn.lin.push_back({cap, zv});
        m.cons.push_back(std::move(dn));
      }
    }
  }

  void pair_cones_and_envelopes() {
    for (const auto& [key, pv] : ac_pairs) {
      Cone cn;
      cn.name = "jabr:" + std::to_string(net.ac_buses[static_cast<size_t>(key.first)].id) +
                ":" + std::to_string(net.ac_buses[static_cast<size_t>(key.second)].id);
      cn.family = ConFamily::AcFlow;
      cn.x.lin.push_back({1.0, m.idx.w[static_cast<size_t>(key.first)]});
      cn.y.lin.push_back({1.0, m.idx.w[static_cast<size_t>(key.second)]});
      AffExpr ur, ui;
      ur.lin.push_back({1.0, pv.wr});
      ui.lin.push_back({1.0, pv.wi});
      cn.u.push_back(std::move(ur));
      cn.u.push_back(std::move(ui));
      m.cones.push_back(std::move(cn));
    }
    // per branch angle window envelopes on the cross terms
    for (size_t l = 0; l < net.ac_branches.size(); ++l) {
      const AcBranch& br = net.ac_branches[l];
      if (ex.idx.pf[l] < 0) continue;
      if (std::abs(br.ang_min) >= M_PI / 2 - 1e-9 || std::abs(br.ang_max) >= M_PI / 2 - 1e-9)
        continue;
      int zv = ex.idx.z_acbr[l];
      if (br.conv_owner >= 0) zv = ex.idx.z_conv[static_cast<size_t>(br.conv_owner)];
      const auto key = std::minmax(br.from, br.to);
      const PairVars& pv = ac_pairs.at(key);
      const double sgn = br.from < br.to ? 1.0 : -1.0;
      const double thi = std::tan(br.ang_max), tlo = std::tan(br.ang_min);
      const double mt = 1.05 * (maxabs(m.vars[static_cast<size_t>(pv.wi)]) +
                                std::max(std::abs(thi), std::abs(tlo)) *
                                    maxabs(m.vars[static_cast<size_t>(pv.wr)]));
      Constraint up;
      up.name = "angw:" + std::to_string(br.id) + ":ub";
      up.family = ConFamily::AngleDiff;
      up.lb = -kInf;
      up.ub = zv < 0 ? 0.0 : mt;
      up.lin.push_back({sgn, pv.wi});
      up.lin.push_back({-thi, pv.wr});
      if (zv >= 0) up.lin.push_back({mt, zv});
      m.cons.push_back(std::move(up));
      Constraint dn;
      dn.name = "angw:" + std::to_string(br.id) + ":lb";
      dn.family = ConFamily::AngleDiff;
      dn.lb = zv < 0 ? 0.0 : -mt;
      dn.ub = kInf;
      dn.lin.push_back({sgn, pv.wi});
      dn.lin.push_back({-tlo, pv.wr});
      if (zv >= 0) dn.lin.push_back({-mt, zv});
      m.cons.push_back(std::move(dn));
    }
    for (const auto& [key, slot] : dc_pairs) {
      Cone cn;
      cn.name = "wdc:" + std::to_string(net.dc_buses[static_cast<size_t>(key.first)].id) +
                ":" + std::to_string(net.dc_buses[static_cast<size_t>(key.second)].id);
      cn.family = ConFamily::DcFlow;
      cn.x.lin.push_back({1.0, m.idx.wdc[static_cast<size_t>(key.first)]});
      cn.y.lin.push_back({1.0, m.idx.wdc[static_cast<size_t>(key.second)]});
      AffExpr u;
      u.lin.push_back({1.0, slot});
      cn.u.push_back(std::move(u));
      m.cones.push_back(std::move(cn));
    }
    for (size_t c = 0; c < net.converters.size(); ++c) {
      if (m.idx.ic_sq[c] < 0 || ex.idx.ic[c] < 0) continue;
      Cone cn;
      cn.name = "isq:" + std::to_string(net.converters[c].id);
      cn.family = ConFamily::ConverterCoupling;
      cn.x.lin.push_back({1.0, m.idx.ic_sq[c]});
      cn.y.c = 1.0;
      AffExpr u;
      u.lin.push_back({1.0, ex.idx.ic[c]});
      cn.u.push_back(std::move(u));
      m.cones.push_back(std::move(cn));
    }
  }
};

}  // namespace

MathModel soc_lift(const MathModel& exact, const Network& net) {
  if (exact.spec.formulation != Formulation::ExactBigM)
    throw ModelError("soc_lift expects the exact model");
  Lifter lf(exact, net);
  lf.repurpose_slots();
  lf.lift_rows();
  lf.pair_cones_and_envelopes();
  for (Constraint& c : lf.m.cons)
    c.shape = c.nl.empty() ? ConShape::Linear : ConShape::NonlinearSmooth;
  log_debug("soc model: %zu vars, %zu rows, %zu cones", lf.m.vars.size(), lf.m.cons.size(),
            lf.m.cones.size());
  return std::move(lf.m);
}

}  // namespace gridtopo
