#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "gridtopo/bnb.hpp"
#include "gridtopo/feasibility.hpp"
#include "gridtopo/log.hpp"
#include "gridtopo/lp.hpp"
#include "json.hpp"

namespace gridtopo {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Dsu {
  std::vector<int> p;
  explicit Dsu(int n) : p(n) { std::iota(p.begin(), p.end(), 0); }
  int find(int a) {
    while (p[a] != a) a = p[a] = p[p[a]];
    return a;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) p[std::max(a, b)] = std::min(a, b);  // smallest index wins
  }
};

// Fixed-topology view: buses joined by closed switches collapse to one
// node, out-of-service elements drop. Everything here is deterministic in
// the original index order.
struct Merged {
  std::vector<int> ac_rep, dc_rep;  // original bus -> merged index
  int nac = 0, ndc = 0;
  std::vector<int> ac_lowest, dc_lowest;  // lowest original member per merged bus
  std::vector<int> ac_island, dc_island;  // per merged bus
  int n_ai = 0, n_di = 0;
  std::vector<char> ai_live, di_live;               // per island
  std::vector<double> gs, bs, pd, qd, pd_dc;        // merged aggregates
  std::vector<int> ai_slack_bus;                    // merged AC bus, -1 dead
  std::vector<int> ai_slack_gen, ai_slack_conv;     // absorber (one of them)
  std::vector<int> di_slack_conv, di_slack_bus;     // per DC island
};

Merged merge_view(const Network& net) {
  Merged mv;
  const int na = (int)net.ac_buses.size(), nd = (int)net.dc_buses.size();
  Dsu ad(na), dd(nd);
  for (const Switch& sw : net.switches) {
    if (!sw.closed) continue;
    if (sw.side == 'a')
      ad.unite(sw.from_bus, sw.to_bus);
    else
      dd.unite(sw.from_bus, sw.to_bus);
  }
  mv.ac_rep.assign(na, -1);
  mv.dc_rep.assign(nd, -1);
  for (int i = 0; i < na; ++i)
    if (ad.find(i) == i) {
      mv.ac_rep[i] = mv.nac++;
      mv.ac_lowest.push_back(i);
    }
  for (int i = 0; i < na; ++i) mv.ac_rep[i] = mv.ac_rep[ad.find(i)];
  for (int i = 0; i < nd; ++i)
    if (dd.find(i) == i) {
      mv.dc_rep[i] = mv.ndc++;
      mv.dc_lowest.push_back(i);
    }
  for (int i = 0; i < nd; ++i) mv.dc_rep[i] = mv.dc_rep[dd.find(i)];

  // Islands over in-service branches.
  auto islands = [](int n, const std::vector<std::pair<int, int>>& edges,
                    std::vector<int>& isl) {
    isl.assign(n, -1);
    std::vector<std::vector<int>> adj(n);
    for (auto& [u, v] : edges) {
      adj[u].push_back(v);
      adj[v].push_back(u);
    }
    int count = 0;
    for (int s = 0; s < n; ++s) {
      if (isl[s] >= 0) continue;
      std::vector<int> stack{s};
      isl[s] = count;
      while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (int v : adj[u])
          if (isl[v] < 0) {
            isl[v] = count;
            stack.push_back(v);
          }
      }
      ++count;
    }
    return count;
  };
  std::vector<std::pair<int, int>> ae, de;
  for (const AcBranch& br : net.ac_branches) {
    if (!br.in_service) continue;
    int u = mv.ac_rep[br.from], v = mv.ac_rep[br.to];
    if (u != v) ae.push_back({u, v});
  }
  for (const DcBranch& br : net.dc_branches) {
    if (!br.in_service) continue;
    int u = mv.dc_rep[br.from], v = mv.dc_rep[br.to];
    if (u != v) de.push_back({u, v});
  }
  mv.n_ai = islands(mv.nac, ae, mv.ac_island);
  mv.n_di = islands(mv.ndc, de, mv.dc_island);

  mv.gs.assign(mv.nac, 0.0);
  mv.bs.assign(mv.nac, 0.0);
  mv.pd.assign(mv.nac, 0.0);
  mv.qd.assign(mv.nac, 0.0);
  mv.pd_dc.assign(mv.ndc, 0.0);
  for (int i = 0; i < na; ++i) {
    mv.gs[mv.ac_rep[i]] += net.ac_buses[i].gs;
    mv.bs[mv.ac_rep[i]] += net.ac_buses[i].bs;
  }
  for (const Converter& cv : net.converters)
    if (cv.in_service && cv.has_filter && cv.b_filter != 0.0 && cv.filter_bus >= 0)
      mv.bs[mv.ac_rep[cv.filter_bus]] += cv.b_filter;
  for (const Load& l : net.loads) {
    if (l.side == 'a') {
      mv.pd[mv.ac_rep[l.bus]] += l.pd;
      mv.qd[mv.ac_rep[l.bus]] += l.qd;
    } else {
      mv.pd_dc[mv.dc_rep[l.bus]] += l.pd;
    }
  }

  mv.ai_live.assign(mv.n_ai, 0);
  mv.di_live.assign(mv.n_di, 0);
  for (const Generator& g : net.gens)
    if (g.in_service) mv.ai_live[mv.ac_island[mv.ac_rep[g.bus]]] = 1;
  for (const Converter& cv : net.converters)
    if (cv.in_service) {
      mv.ai_live[mv.ac_island[mv.ac_rep[cv.terminal_bus]]] = 1;
      mv.di_live[mv.dc_island[mv.dc_rep[cv.dc_bus]]] = 1;
    }

  // One slack per live island with an absorber element on it.
  mv.ai_slack_bus.assign(mv.n_ai, -1);
  mv.ai_slack_gen.assign(mv.n_ai, -1);
  mv.ai_slack_conv.assign(mv.n_ai, -1);
  std::vector<int> first_gen(mv.n_ai, -1), ref_bus(mv.n_ai, -1);
  for (size_t g = 0; g < net.gens.size(); ++g) {
    if (!net.gens[g].in_service) continue;
    int isl = mv.ac_island[mv.ac_rep[net.gens[g].bus]];
    if (first_gen[isl] < 0) first_gen[isl] = (int)g;
  }
  for (int i = 0; i < na; ++i)
    if (net.ac_buses[i].reference) {
      int isl = mv.ac_island[mv.ac_rep[i]];
      if (ref_bus[isl] < 0) ref_bus[isl] = i;
    }
  for (int isl = 0; isl < mv.n_ai; ++isl) {
    if (!mv.ai_live[isl]) continue;
    // Prefer the reference bus when a generator sits on its merged node.
    if (ref_bus[isl] >= 0) {
      int rb = mv.ac_rep[ref_bus[isl]];
      for (size_t g = 0; g < net.gens.size(); ++g)
        if (net.gens[g].in_service && mv.ac_rep[net.gens[g].bus] == rb) {
          mv.ai_slack_bus[isl] = rb;
          mv.ai_slack_gen[isl] = (int)g;
          break;
        }
    }
    if (mv.ai_slack_bus[isl] < 0 && first_gen[isl] >= 0) {
      mv.ai_slack_bus[isl] = mv.ac_rep[net.gens[first_gen[isl]].bus];
      mv.ai_slack_gen[isl] = first_gen[isl];
    }
    if (mv.ai_slack_bus[isl] < 0) {
      for (size_t c = 0; c < net.converters.size(); ++c) {
        const Converter& cv = net.converters[c];
        if (!cv.in_service) continue;
        if (mv.ac_island[mv.ac_rep[cv.terminal_bus]] != isl) continue;
        mv.ai_slack_bus[isl] = mv.ac_rep[cv.terminal_bus];
        mv.ai_slack_conv[isl] = (int)c;
        break;
      }
    }
  }

  mv.di_slack_conv.assign(mv.n_di, -1);
  mv.di_slack_bus.assign(mv.n_di, -1);
  for (int pass = 0; pass < 2; ++pass) {
    for (size_t c = 0; c < net.converters.size(); ++c) {
      const Converter& cv = net.converters[c];
      if (!cv.in_service) continue;
      if (pass == 0 && cv.type_dc != 2) continue;  // voltage-controlling first
      int isl = mv.dc_island[mv.dc_rep[cv.dc_bus]];
      if (mv.di_slack_conv[isl] < 0) {
        mv.di_slack_conv[isl] = (int)c;
        mv.di_slack_bus[isl] = mv.dc_rep[cv.dc_bus];
      }
    }
  }
  return mv;
}

// Flow partials of one branch at the present voltages, from-side and
// to-side. Values match ac_flow_exact.
struct BranchTangent {
  double pf, qf, pt, qt;
  double dpf_vf, dpf_vt, dpf_af, dpf_at;
  double dqf_vf, dqf_vt, dqf_af, dqf_at;
  double dpt_vf, dpt_vt, dpt_af, dpt_at;
  double dqt_vf, dqt_vt, dqt_af, dqt_at;
};

BranchTangent branch_tangent(const AcBranch& br, double vf, double vt, double af,
                             double at) {
  BranchTangent o;
  const double g = br.r / (br.r * br.r + br.x * br.x);
  const double b = -br.x / (br.r * br.r + br.x * br.x);
  const double t = br.tap == 0.0 ? 1.0 : br.tap;
  const double kf = 1.0 / (t * t), km = 1.0 / t;
  const double d = af - at - br.shift;
  const double C = std::cos(d), S = std::sin(d);
  const double u = vf * vt * km;
  o.pf = g * kf * vf * vf - u * (g * C + b * S);
  o.dpf_vf = 2.0 * g * kf * vf - vt * km * (g * C + b * S);
  o.dpf_vt = -vf * km * (g * C + b * S);
  o.dpf_af = u * (g * S - b * C);
  o.dpf_at = -o.dpf_af;
  o.qf = -(b + br.b_fr) * kf * vf * vf - u * (g * S - b * C);
  o.dqf_vf = -2.0 * (b + br.b_fr) * kf * vf - vt * km * (g * S - b * C);
  o.dqf_vt = -vf * km * (g * S - b * C);
  o.dqf_af = -u * (g * C + b * S);
  o.dqf_at = -o.dqf_af;
  const double d2 = at - af + br.shift;
  const double C2 = std::cos(d2), S2 = std::sin(d2);
  o.pt = g * vt * vt - u * (g * C2 + b * S2);
  o.dpt_vt = 2.0 * g * vt - vf * km * (g * C2 + b * S2);
  o.dpt_vf = -vt * km * (g * C2 + b * S2);
  o.dpt_at = u * (g * S2 - b * C2);
  o.dpt_af = -o.dpt_at;
  o.qt = -(b + br.b_to) * vt * vt - u * (g * S2 - b * C2);
  o.dqt_vt = -2.0 * (b + br.b_to) * vt - vf * km * (g * S2 - b * C2);
  o.dqt_vf = -vt * km * (g * S2 - b * C2);
  o.dqt_at = -u * (g * C2 + b * S2);
  o.dqt_af = -o.dqt_at;
  return o;
}

}  // namespace

double ResidualMaxima::worst() const {
  return std::max({balance, flow, converter, bounds, switch_eq});
}

Topology topology_all_on(const Network& net) {
  Topology t;
  t.acbr.assign(net.ac_branches.size(), 1);
  t.dcbr.assign(net.dc_branches.size(), 1);
  t.conv.assign(net.converters.size(), 1);
  t.sw.assign(net.switches.size(), 1);
  return t;
}

Topology topology_from_solution(const Network& net, const MathModel& m,
                                const std::vector<double>& binary_values) {
  std::vector<double> zval(m.vars.size(), -1.0);
  for (size_t k = 0; k < m.binaries.size() && k < binary_values.size(); ++k)
    zval[m.binaries[k]] = binary_values[k];
  auto pick = [&](int zv, bool stored) {
    if (zv < 0 || zval[zv] < 0.0) return stored;
    return zval[zv] >= 0.5;
  };
  Topology t;
  t.acbr.resize(net.ac_branches.size());
  for (size_t l = 0; l < net.ac_branches.size(); ++l)
    t.acbr[l] = pick(l < m.idx.z_acbr.size() ? m.idx.z_acbr[l] : -1,
                     net.ac_branches[l].in_service);
  t.dcbr.resize(net.dc_branches.size());
  for (size_t l = 0; l < net.dc_branches.size(); ++l)
    t.dcbr[l] = pick(l < m.idx.z_dcbr.size() ? m.idx.z_dcbr[l] : -1,
                     net.dc_branches[l].in_service);
  t.conv.resize(net.converters.size());
  for (size_t c = 0; c < net.converters.size(); ++c)
    t.conv[c] = pick(c < m.idx.z_conv.size() ? m.idx.z_conv[c] : -1,
                     net.converters[c].in_service);
  t.sw.resize(net.switches.size());
  for (size_t s = 0; s < net.switches.size(); ++s)
    t.sw[s] = pick(s < m.idx.z_sw.size() ? m.idx.z_sw[s] : -1,
                   net.switches[s].closed);
  return t;
}

Network apply_topology(const Network& net, const Topology& topo) {
  Network out = net;
  for (size_t l = 0; l < out.ac_branches.size(); ++l) {
    AcBranch& br = out.ac_branches[l];
    if (br.conv_owner >= 0)
      br.in_service = topo.conv.size() > (size_t)br.conv_owner
                          ? topo.conv[br.conv_owner] != 0
                          : br.in_service;
    else if (l < topo.acbr.size())
      br.in_service = topo.acbr[l] != 0;
  }
  for (size_t l = 0; l < out.dc_branches.size() && l < topo.dcbr.size(); ++l)
    out.dc_branches[l].in_service = topo.dcbr[l] != 0;
  for (size_t c = 0; c < out.converters.size() && c < topo.conv.size(); ++c)
    out.converters[c].in_service = topo.conv[c] != 0;
  for (size_t s = 0; s < out.switches.size() && s < topo.sw.size(); ++s)
    out.switches[s].closed = topo.sw[s] != 0;
  return out;
}

Dispatch dispatch_from_case(const Network& net) {
  Dispatch d;
  d.pg.resize(net.gens.size());
  d.qg.resize(net.gens.size());
  for (size_t g = 0; g < net.gens.size(); ++g) {
    d.pg[g] = net.gens[g].pg0;
    d.qg[g] = net.gens[g].qg0;
  }
  d.pc_ac.resize(net.converters.size());
  d.qc_ac.resize(net.converters.size());
  for (size_t c = 0; c < net.converters.size(); ++c) {
    d.pc_ac[c] = -net.converters[c].p_set;
    d.qc_ac[c] = -net.converters[c].q_set;
  }
  d.vm_slack.resize(net.ac_buses.size());
  for (size_t i = 0; i < net.ac_buses.size(); ++i) d.vm_slack[i] = net.ac_buses[i].vm0;
  d.udc_slack.resize(net.dc_buses.size());
  for (size_t e = 0; e < net.dc_buses.size(); ++e) d.udc_slack[e] = net.dc_buses[e].vdc0;
  return d;
}

PfResult newton_acdc_power_flow(const Network& net, const Dispatch& dispatch,
                                const PfOptions& opt, const GridState* start) {
  PfResult res;
  if (dispatch.pg.size() != net.gens.size() ||
      dispatch.pc_ac.size() != net.converters.size()) {
    res.msg = "dispatch does not cover the network";
    return res;
  }
  Merged mv = merge_view(net);

  // Merged state, flat or seeded.
  std::vector<double> vm(mv.nac, 1.0), va(mv.nac, 0.0), ud(mv.ndc, 1.0);
  if (start) {
    for (int k = 0; k < mv.nac; ++k) {
      vm[k] = start->vm[mv.ac_lowest[k]];
      va[k] = start->va[mv.ac_lowest[k]];
    }
    for (int k = 0; k < mv.ndc; ++k) ud[k] = start->udc[mv.dc_lowest[k]];
  }
  std::vector<char> ac_live(mv.nac, 0), dc_live(mv.ndc, 0);
  for (int k = 0; k < mv.nac; ++k) ac_live[k] = mv.ai_live[mv.ac_island[k]];
  for (int k = 0; k < mv.ndc; ++k) dc_live[k] = mv.di_live[mv.dc_island[k]];
  std::vector<char> ac_slack(mv.nac, 0), dc_slack(mv.ndc, 0);
  for (int isl = 0; isl < mv.n_ai; ++isl)
    if (mv.ai_slack_bus[isl] >= 0) {
      ac_slack[mv.ai_slack_bus[isl]] = 1;
      int member = mv.ai_slack_gen[isl] >= 0
                       ? net.gens[mv.ai_slack_gen[isl]].bus
                       : net.converters[mv.ai_slack_conv[isl]].terminal_bus;
      vm[mv.ai_slack_bus[isl]] = dispatch.vm_slack[member];
      va[mv.ai_slack_bus[isl]] = 0.0;
    }
  for (int isl = 0; isl < mv.n_di; ++isl)
    if (mv.di_slack_bus[isl] >= 0) {
      dc_slack[mv.di_slack_bus[isl]] = 1;
      ud[mv.di_slack_bus[isl]] =
          dispatch.udc_slack[net.converters[mv.di_slack_conv[isl]].dc_bus];
    }

  // Fixed injections, slack generators excluded (they absorb).
  std::vector<double> base_p(mv.nac, 0.0), base_q(mv.nac, 0.0);
  for (int k = 0; k < mv.nac; ++k) {
    base_p[k] = -mv.pd[k];
    base_q[k] = -mv.qd[k];
  }
  for (size_t g = 0; g < net.gens.size(); ++g) {
    if (!net.gens[g].in_service) continue;
    int isl = mv.ac_island[mv.ac_rep[net.gens[g].bus]];
    if (mv.ai_slack_gen[isl] == (int)g) continue;
    base_p[mv.ac_rep[net.gens[g].bus]] += dispatch.pg[g];
    base_q[mv.ac_rep[net.gens[g].bus]] += dispatch.qg[g];
  }

  // Converter working values; slack converters update between passes.
  std::vector<double> pac(net.converters.size(), 0.0), qac(net.converters.size(), 0.0);
  std::vector<double> pdc(net.converters.size(), 0.0);
  std::vector<char> conv_ac_slack(net.converters.size(), 0);
  std::vector<char> conv_dc_slack(net.converters.size(), 0);
  for (int isl = 0; isl < mv.n_ai; ++isl)
    if (mv.ai_slack_conv[isl] >= 0) conv_ac_slack[mv.ai_slack_conv[isl]] = 1;
  for (int isl = 0; isl < mv.n_di; ++isl)
    if (mv.di_slack_conv[isl] >= 0) conv_dc_slack[mv.di_slack_conv[isl]] = 1;
  for (size_t c = 0; c < net.converters.size(); ++c) {
    if (!net.converters[c].in_service) continue;
    pac[c] = dispatch.pc_ac[c];
    qac[c] = dispatch.qc_ac[c];
  }

  // Unknown layout for the AC pass.
  std::vector<int> col_th(mv.nac, -1), col_vm(mv.nac, -1), row_of(mv.nac, -1);
  int nun = 0;
  for (int k = 0; k < mv.nac; ++k) {
    if (!ac_live[k] || ac_slack[k]) continue;
    row_of[k] = nun;
    col_th[k] = 2 * nun;
    col_vm[k] = 2 * nun + 1;
    ++nun;
  }
  std::vector<int> dc_row(mv.ndc, -1);
  int ndun = 0;
  for (int k = 0; k < mv.ndc; ++k)
    if (dc_live[k] && !dc_slack[k]) dc_row[k] = ndun++;

  struct MBranch {
    int f, t;
    const AcBranch* br;
  };
  std::vector<MBranch> mbr;
  for (const AcBranch& br : net.ac_branches) {
    if (!br.in_service) continue;
    int f = mv.ac_rep[br.from], t = mv.ac_rep[br.to];
    if (f == t) continue;
    mbr.push_back({f, t, &br});
  }
  struct MDcBranch {
    int f, t;
    const DcBranch* br;
  };
  std::vector<MDcBranch> mdbr;
  for (const DcBranch& br : net.dc_branches) {
    if (!br.in_service) continue;
    int f = mv.dc_rep[br.from], t = mv.dc_rep[br.to];
    if (f == t) continue;
    mdbr.push_back({f, t, &br});
  }

  auto ac_residual = [&](std::vector<double>& F) {
    F.assign(2 * nun, 0.0);
    for (int k = 0; k < mv.nac; ++k) {
      if (row_of[k] < 0) continue;
      F[2 * row_of[k]] = base_p[k] - mv.gs[k] * vm[k] * vm[k];
      F[2 * row_of[k] + 1] = base_q[k] + mv.bs[k] * vm[k] * vm[k];
    }
    for (size_t c = 0; c < net.converters.size(); ++c) {
      if (!net.converters[c].in_service) continue;
      int k = mv.ac_rep[net.converters[c].terminal_bus];
      if (row_of[k] < 0) continue;
      F[2 * row_of[k]] -= pac[c];
      F[2 * row_of[k] + 1] -= qac[c];
    }
    for (const MBranch& e : mbr) {
      BranchFlows fl = ac_flow_exact(*e.br, vm[e.f], vm[e.t], va[e.f], va[e.t]);
      if (row_of[e.f] >= 0) {
        F[2 * row_of[e.f]] -= fl.p_fr;
        F[2 * row_of[e.f] + 1] -= fl.q_fr;
      }
      if (row_of[e.t] >= 0) {
        F[2 * row_of[e.t]] -= fl.p_to;
        F[2 * row_of[e.t] + 1] -= fl.q_to;
      }
    }
  };

  auto ac_pass = [&]() -> bool {
    if (nun == 0) return true;
    std::vector<double> F;
    ac_residual(F);
    double norm = 0.0;
    for (double v : F) norm = std::max(norm, std::fabs(v));
    int grow = 0;
    for (int it = 0; it < opt.max_iter; ++it) {
      if (norm < opt.tol) return true;
      std::vector<Eigen::Triplet<double>> jt;
      for (int k = 0; k < mv.nac; ++k) {
        if (row_of[k] < 0) continue;
        jt.emplace_back(2 * row_of[k], col_vm[k], 2.0 * mv.gs[k] * vm[k]);
        jt.emplace_back(2 * row_of[k] + 1, col_vm[k], -2.0 * mv.bs[k] * vm[k]);
      }
      for (const MBranch& e : mbr) {
        BranchTangent tg = branch_tangent(*e.br, vm[e.f], vm[e.t], va[e.f], va[e.t]);
        if (row_of[e.f] >= 0) {
          int rp = 2 * row_of[e.f], rq = rp + 1;
          if (col_th[e.f] >= 0) {
            jt.emplace_back(rp, col_th[e.f], tg.dpf_af);
            jt.emplace_back(rq, col_th[e.f], tg.dqf_af);
            jt.emplace_back(rp, col_vm[e.f], tg.dpf_vf);
            jt.emplace_back(rq, col_vm[e.f], tg.dqf_vf);
          }
          if (col_th[e.t] >= 0) {
            jt.emplace_back(rp, col_th[e.t], tg.dpf_at);
            jt.emplace_back(rq, col_th[e.t], tg.dqf_at);
            jt.emplace_back(rp, col_vm[e.t], tg.dpf_vt);
            jt.emplace_back(rq, col_vm[e.t], tg.dqf_vt);
          }
        }
        if (row_of[e.t] >= 0) {
          int rp = 2 * row_of[e.t], rq = rp + 1;
          if (col_th[e.t] >= 0) {
            jt.emplace_back(rp, col_th[e.t], tg.dpt_at);
            jt.emplace_back(rq, col_th[e.t], tg.dqt_at);
            jt.emplace_back(rp, col_vm[e.t], tg.dpt_vt);
            jt.emplace_back(rq, col_vm[e.t], tg.dqt_vt);
          }
          if (col_th[e.f] >= 0) {
            jt.emplace_back(rp, col_th[e.f], tg.dpt_af);
            jt.emplace_back(rq, col_th[e.f], tg.dqt_af);
            jt.emplace_back(rp, col_vm[e.f], tg.dpt_vf);
            jt.emplace_back(rq, col_vm[e.f], tg.dqt_vf);
          }
        }
      }
      // F holds injections minus flows; the Jacobian above is of the flow
      // side, so J dx = F is the Newton step.
      Eigen::SparseMatrix<double> J(2 * nun, 2 * nun);
      J.setFromTriplets(jt.begin(), jt.end());
      Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
      lu.compute(J);
      if (lu.info() != Eigen::Success) {
        res.msg = "singular ac jacobian";
        return false;
      }
      Eigen::VectorXd rhs(2 * nun);
      for (int i = 0; i < 2 * nun; ++i) rhs[i] = F[i];
      Eigen::VectorXd dx = lu.solve(rhs);
      if (dx.hasNaN()) {
        res.msg = "ac newton step failed";
        return false;
      }
      std::vector<double> vms = vm, vas = va;
      double alpha = 1.0;
      double nnorm = norm;
      for (int h = 0; h <= opt.max_halvings; ++h) {
        for (int k = 0; k < mv.nac; ++k) {
          if (row_of[k] < 0) continue;
          va[k] = vas[k] + alpha * dx[col_th[k]];
          vm[k] = std::max(1e-4, vms[k] + alpha * dx[col_vm[k]]);
        }
        ac_residual(F);
        nnorm = 0.0;
        for (double v : F) nnorm = std::max(nnorm, std::fabs(v));
        if (nnorm < norm || norm < opt.tol) break;
        alpha *= 0.5;
      }
      grow = nnorm >= norm ? grow + 1 : 0;
      if (grow >= 5) {
        res.msg = "ac mismatch diverging";
        return false;
      }
      norm = nnorm;
      ++res.iters;
    }
    if (norm < opt.tol) return true;
    res.msg = "ac iteration limit";
    return false;
  };

  auto dc_residual = [&](std::vector<double>& F) {
    F.assign(ndun, 0.0);
    for (int k = 0; k < mv.ndc; ++k)
      if (dc_row[k] >= 0) F[dc_row[k]] = -mv.pd_dc[k];
    for (size_t c = 0; c < net.converters.size(); ++c) {
      if (!net.converters[c].in_service || conv_dc_slack[c]) continue;
      int k = mv.dc_rep[net.converters[c].dc_bus];
      if (dc_row[k] >= 0) F[dc_row[k]] -= pdc[c];
    }
    for (const MDcBranch& e : mdbr) {
      auto [p_ft, p_tf] = dc_flow(*e.br, ud[e.f], ud[e.t]);
      if (dc_row[e.f] >= 0) F[dc_row[e.f]] -= p_ft;
      if (dc_row[e.t] >= 0) F[dc_row[e.t]] -= p_tf;
    }
  };

  auto dc_pass = [&]() -> bool {
    if (ndun == 0) return true;
    std::vector<double> F;
    dc_residual(F);
    double norm = 0.0;
    for (double v : F) norm = std::max(norm, std::fabs(v));
    for (int it = 0; it < opt.max_iter; ++it) {
      if (norm < opt.tol) return true;
      std::vector<Eigen::Triplet<double>> jt;
      for (const MDcBranch& e : mdbr) {
        double pg = e.br->poles / e.br->r;
        if (dc_row[e.f] >= 0) {
          jt.emplace_back(dc_row[e.f], dc_row[e.f], pg * (2.0 * ud[e.f] - ud[e.t]));
          if (dc_row[e.t] >= 0)
            jt.emplace_back(dc_row[e.f], dc_row[e.t], -pg * ud[e.f]);
        }
        if (dc_row[e.t] >= 0) {
          jt.emplace_back(dc_row[e.t], dc_row[e.t], pg * (2.0 * ud[e.t] - ud[e.f]));
          if (dc_row[e.f] >= 0)
            jt.emplace_back(dc_row[e.t], dc_row[e.f], -pg * ud[e.t]);
        }
      }
      Eigen::SparseMatrix<double> J(ndun, ndun);
      J.setFromTriplets(jt.begin(), jt.end());
      Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
      lu.compute(J);
      if (lu.info() != Eigen::Success) {
        res.msg = "singular dc jacobian";
        return false;
      }
      Eigen::VectorXd rhs(ndun);
      for (int i = 0; i < ndun; ++i) rhs[i] = F[i];
      Eigen::VectorXd dx = lu.solve(rhs);
      if (dx.hasNaN()) {
        res.msg = "dc newton step failed";
        return false;
      }
      std::vector<double> uds = ud;
      double alpha = 1.0, nnorm = norm;
      for (int h = 0; h <= opt.max_halvings; ++h) {
        for (int k = 0; k < mv.ndc; ++k)
          if (dc_row[k] >= 0) ud[k] = std::max(1e-4, uds[k] + alpha * dx[dc_row[k]]);
        dc_residual(F);
        nnorm = 0.0;
        for (double v : F) nnorm = std::max(nnorm, std::fabs(v));
        if (nnorm < norm || norm < opt.tol) break;
        alpha *= 0.5;
      }
      norm = nnorm;
      ++res.iters;
    }
    if (norm < opt.tol) return true;
    res.msg = "dc iteration limit";
    return false;
  };

  // Sequential AC/DC with converter coupling refreshed between passes.
  bool ok = false;
  for (int outer = 0; outer < 25; ++outer) {
    if (!ac_pass()) break;
    // Converter losses at the solved AC state.
    for (size_t c = 0; c < net.converters.size(); ++c) {
      const Converter& cv = net.converters[c];
      if (!cv.in_service) continue;
      double ut = vm[mv.ac_rep[cv.terminal_bus]];
      double cur = std::hypot(pac[c], qac[c]) / std::max(ut, 1e-6);
      pdc[c] = cv.loss_a + cv.loss_b * cur + cv.loss_c * cur * cur - pac[c];
    }
    if (!dc_pass()) break;
    // Close each DC island on its slack converter and push the change back
    // to its AC injection through the loss equation.
    double delta = 0.0;
    for (int isl = 0; isl < mv.n_di; ++isl) {
      int c = mv.di_slack_conv[isl];
      if (c < 0) continue;
      const Converter& cv = net.converters[c];
      int bus = mv.dc_rep[cv.dc_bus];
      double closure = -mv.pd_dc[bus];
      for (size_t o = 0; o < net.converters.size(); ++o) {
        if ((int)o == c || !net.converters[o].in_service) continue;
        if (mv.dc_rep[net.converters[o].dc_bus] == bus) closure -= pdc[o];
      }
      for (const MDcBranch& e : mdbr) {
        auto [p_ft, p_tf] = dc_flow(*e.br, ud[e.f], ud[e.t]);
        if (e.f == bus) closure -= p_ft;
        if (e.t == bus) closure -= p_tf;
      }
      // closure is the power the slack converter must take from its bus.
      double target_pdc = closure;
      double ut = vm[mv.ac_rep[cv.terminal_bus]];
      double p = pac[c];
      for (int fp = 0; fp < 40; ++fp) {
        double cur = std::hypot(p, qac[c]) / std::max(ut, 1e-6);
        double pn = cv.loss_a + cv.loss_b * cur + cv.loss_c * cur * cur - target_pdc;
        if (std::fabs(pn - p) < 1e-14) {
          p = pn;
          break;
        }
        p = pn;
      }
      delta = std::max(delta, std::fabs(p - pac[c]));
      pac[c] = p;
      pdc[c] = target_pdc;
    }
    if (delta < std::max(opt.tol * 0.1, 1e-13)) {
      ok = true;
      break;
    }
  }

  res.converged = ok;
  if (ok) res.msg = "converged";
  std::vector<double> Fa, Fd;
  ac_residual(Fa);
  dc_residual(Fd);
  res.max_mismatch = 0.0;
  for (double v : Fa) res.max_mismatch = std::max(res.max_mismatch, std::fabs(v));
  for (double v : Fd) res.max_mismatch = std::max(res.max_mismatch, std::fabs(v));

  res.vm.assign(net.ac_buses.size(), 0.0);
  res.va.assign(net.ac_buses.size(), 0.0);
  for (size_t i = 0; i < net.ac_buses.size(); ++i) {
    int k = mv.ac_rep[i];
    if (ac_live[k]) {
      res.vm[i] = vm[k];
      res.va[i] = va[k];
    }
  }
  res.udc.assign(net.dc_buses.size(), 0.0);
  for (size_t e = 0; e < net.dc_buses.size(); ++e) {
    int k = mv.dc_rep[e];
    if (dc_live[k]) res.udc[e] = ud[k];
  }
  // Final converter values ride along for the caller's state assembly.
  res.conv_pac = std::move(pac);
  res.conv_qac = std::move(qac);
  res.conv_pdc = std::move(pdc);
  return res;
}

namespace {

// Per-bus power sums at a state, switches excluded; flows re-derived from
// the voltages with the exact element evaluators.
struct BusAccum {
  std::vector<double> p, q, d;
};

BusAccum accumulate_no_switch(const Network& net, const GridState& st) {
  BusAccum a;
  a.p.assign(net.ac_buses.size(), 0.0);
  a.q.assign(net.ac_buses.size(), 0.0);
  a.d.assign(net.dc_buses.size(), 0.0);
  for (size_t g = 0; g < net.gens.size(); ++g) {
    if (!net.gens[g].in_service) continue;
    a.p[net.gens[g].bus] += st.pg[g];
    a.q[net.gens[g].bus] += st.qg[g];
  }
  for (const Load& l : net.loads) {
    if (l.side == 'a') {
      a.p[l.bus] -= l.pd;
      a.q[l.bus] -= l.qd;
    } else {
      a.d[l.bus] -= l.pd;
    }
  }
  for (size_t i = 0; i < net.ac_buses.size(); ++i) {
    a.p[i] -= net.ac_buses[i].gs * st.vm[i] * st.vm[i];
    a.q[i] += net.ac_buses[i].bs * st.vm[i] * st.vm[i];
  }
  for (const AcBranch& br : net.ac_branches) {
    if (!br.in_service) continue;
    BranchFlows fl = ac_flow_exact(br, st.vm[br.from], st.vm[br.to], st.va[br.from],
                                   st.va[br.to]);
    a.p[br.from] -= fl.p_fr;
    a.q[br.from] -= fl.q_fr;
    a.p[br.to] -= fl.p_to;
    a.q[br.to] -= fl.q_to;
  }
  for (const DcBranch& br : net.dc_branches) {
    if (!br.in_service) continue;
    auto [p_ft, p_tf] = dc_flow(br, st.udc[br.from], st.udc[br.to]);
    a.d[br.from] -= p_ft;
    a.d[br.to] -= p_tf;
  }
  for (size_t c = 0; c < net.converters.size(); ++c) {
    const Converter& cv = net.converters[c];
    if (!cv.in_service) continue;
    a.p[cv.terminal_bus] -= st.pc_ac[c];
    a.q[cv.terminal_bus] -= st.qc_ac[c];
    if (cv.filter_bus >= 0) a.q[cv.filter_bus] += st.qflt[c];
    a.d[cv.dc_bus] -= st.pc_dc[c];
  }
  return a;
}

GridState assemble_state(const Network& net, const Merged& mv, const Dispatch& d,
                         const PfResult& pf) {
  GridState st;
  st.vm = pf.vm;
  st.va = pf.va;
  st.udc = pf.udc;
  st.pg = d.pg;
  st.qg = d.qg;
  for (size_t g = 0; g < net.gens.size(); ++g)
    if (!net.gens[g].in_service) st.pg[g] = st.qg[g] = 0.0;
  st.pc_ac = pf.conv_pac;
  st.qc_ac = pf.conv_qac;
  st.pc_dc = pf.conv_pdc;
  st.ic.assign(net.converters.size(), 0.0);
  st.idc.assign(net.converters.size(), 0.0);
  st.qflt.assign(net.converters.size(), 0.0);
  for (size_t c = 0; c < net.converters.size(); ++c) {
    const Converter& cv = net.converters[c];
    if (!cv.in_service) {
      st.pc_ac[c] = st.qc_ac[c] = st.pc_dc[c] = 0.0;
      continue;
    }
    double ut = std::max(st.vm[cv.terminal_bus], 1e-6);
    st.ic[c] = std::hypot(st.pc_ac[c], st.qc_ac[c]) / ut;
    st.idc[c] = st.pc_dc[c] / std::max(st.udc[cv.dc_bus], 1e-6);
    if (cv.has_filter && cv.filter_bus >= 0)
      st.qflt[c] = cv.b_filter * st.vm[cv.filter_bus] * st.vm[cv.filter_bus];
  }
  st.psw.assign(net.switches.size(), 0.0);
  st.qsw.assign(net.switches.size(), 0.0);

  BusAccum acc = accumulate_no_switch(net, st);
  // Element switches zero their stub, then each ZIL zeroes the second half;
  // what remains of a merged busbar lands on the original half.
  for (int pass = 0; pass < 2; ++pass) {
    for (size_t s = 0; s < net.switches.size(); ++s) {
      const Switch& sw = net.switches[s];
      if (!sw.closed) continue;
      bool zil = sw.target == SwitchTarget::Zil;
      if (zil != (pass == 1)) continue;
      if (sw.side == 'a') {
        double p = zil ? -acc.p[sw.to_bus] : acc.p[sw.from_bus];
        double q = zil ? -acc.q[sw.to_bus] : acc.q[sw.from_bus];
        st.psw[s] = p;
        st.qsw[s] = q;
        acc.p[sw.from_bus] -= p;
        acc.q[sw.from_bus] -= q;
        acc.p[sw.to_bus] += p;
        acc.q[sw.to_bus] += q;
      } else {
        double p = zil ? -acc.d[sw.to_bus] : acc.d[sw.from_bus];
        st.psw[s] = p;
        acc.d[sw.from_bus] -= p;
        acc.d[sw.to_bus] += p;
      }
    }
  }
  // Slack elements absorb their island's residual.
  for (int isl = 0; isl < mv.n_ai; ++isl) {
    if (mv.ai_slack_gen[isl] >= 0) {
      int g = mv.ai_slack_gen[isl];
      int bus = net.gens[g].bus;
      st.pg[g] -= acc.p[bus];
      st.qg[g] -= acc.q[bus];
      acc.p[bus] = acc.q[bus] = 0.0;
    } else if (mv.ai_slack_conv[isl] >= 0) {
      int c = mv.ai_slack_conv[isl];
      int bus = net.converters[c].terminal_bus;
      st.pc_ac[c] += acc.p[bus];
      st.qc_ac[c] += acc.q[bus];
      acc.p[bus] = acc.q[bus] = 0.0;
      const Converter& cv = net.converters[c];
      double ut = std::max(st.vm[cv.terminal_bus], 1e-6);
      st.ic[c] = std::hypot(st.pc_ac[c], st.qc_ac[c]) / ut;
      st.pc_dc[c] = cv.loss_a + cv.loss_b * st.ic[c] + cv.loss_c * st.ic[c] * st.ic[c] -
                    st.pc_ac[c];
      st.idc[c] = st.pc_dc[c] / std::max(st.udc[cv.dc_bus], 1e-6);
    }
  }
  for (int isl = 0; isl < mv.n_di; ++isl) {
    int c = mv.di_slack_conv[isl];
    if (c < 0) continue;
    int bus = net.converters[c].dc_bus;
    st.pc_dc[c] += acc.d[bus];
    acc.d[bus] = 0.0;
    st.idc[c] = st.pc_dc[c] / std::max(st.udc[bus], 1e-6);
  }
  return st;
}

}  // namespace

namespace {

std::vector<double> start_from_dispatch(const Network& net, const MathModel& m,
                                        const Dispatch& d, const char* what) {
  PfOptions po;
  PfResult pf = newton_acdc_power_flow(net, d, po);
  if (!pf.converged) {
    log_debug("%s start: power flow did not converge (%s)", what, pf.msg.c_str());
    return {};
  }
  GridState st = assemble_state(net, merge_view(net), d, pf);

  std::vector<double> x(m.vars.size());
  for (size_t k = 0; k < m.vars.size(); ++k) x[k] = m.vars[k].x0;
  auto put = [&](const std::vector<int>& ix, size_t i, double val) {
    if (i < ix.size() && ix[i] >= 0) x[ix[i]] = val;
  };
  for (size_t b = 0; b < net.ac_buses.size(); ++b) {
    put(m.idx.vm, b, st.vm[b]);
    put(m.idx.va, b, st.va[b]);
  }
  for (size_t b = 0; b < net.dc_buses.size(); ++b) put(m.idx.udc, b, st.udc[b]);
  for (size_t g = 0; g < net.gens.size(); ++g) {
    put(m.idx.pg, g, st.pg[g]);
    put(m.idx.qg, g, st.qg[g]);
  }
  for (size_t c = 0; c < net.converters.size(); ++c) {
    put(m.idx.pc_ac, c, st.pc_ac[c]);
    put(m.idx.qc_ac, c, st.qc_ac[c]);
    put(m.idx.pc_dc, c, st.pc_dc[c]);
    put(m.idx.ic, c, st.ic[c]);
    put(m.idx.idc, c, st.idc[c]);
    put(m.idx.q_filter, c, st.qflt[c]);
  }
  for (size_t s = 0; s < net.switches.size(); ++s) {
    put(m.idx.psw, s, st.psw[s]);
    put(m.idx.qsw, s, st.qsw[s]);
  }
  for (size_t l = 0; l < net.ac_branches.size(); ++l) {
    const AcBranch& br = net.ac_branches[l];
    if (!br.in_service) continue;
    BranchFlows fl = ac_flow_exact(br, st.vm[br.from], st.vm[br.to],
                                   st.va[br.from], st.va[br.to]);
    put(m.idx.pf, l, fl.p_fr);
    put(m.idx.qf, l, fl.q_fr);
    put(m.idx.pt, l, fl.p_to);
    put(m.idx.qt, l, fl.q_to);
  }
  for (size_t l = 0; l < net.dc_branches.size(); ++l) {
    const DcBranch& br = net.dc_branches[l];
    if (!br.in_service) continue;
    auto [p_ft, p_tf] = dc_flow(br, st.udc[br.from], st.udc[br.to]);
    put(m.idx.pdc_f, l, p_ft);
    put(m.idx.pdc_t, l, p_tf);
  }
  return x;
}

}  // namespace

std::vector<double> setpoint_start(const Network& net, const MathModel& m) {
  Dispatch d;
  for (const Generator& g : net.gens) {
    d.pg.push_back(g.pg0);
    d.qg.push_back(g.qg0);
  }
  for (const Converter& cv : net.converters) {
    d.pc_ac.push_back(-cv.p_set);
    d.qc_ac.push_back(-cv.q_set);
  }
  d.vm_slack.resize(net.ac_buses.size());
  for (size_t b = 0; b < net.ac_buses.size(); ++b)
    d.vm_slack[b] = net.ac_buses[b].vm0;
  for (const Generator& g : net.gens)
    if (g.in_service && g.bus >= 0) d.vm_slack[g.bus] = g.vg;
  d.udc_slack.resize(net.dc_buses.size());
  for (size_t b = 0; b < net.dc_buses.size(); ++b)
    d.udc_slack[b] = net.dc_buses[b].vdc0;
  return start_from_dispatch(net, m, d, "setpoint");
}

std::vector<double> lpac_start(const Network& net, const MathModel& m) {
  ProblemSpec ps;
  ps.kind = ProblemKind::Opf;
  ps.formulation = Formulation::Lpac;
  MathModel lm;
  try {
    lm = build_model(net, ps);
  } catch (const ModelError& e) {
    log_debug("lpac start: model build failed (%s)", e.what());
    return {};
  }
  LpProblem lp;
  try {
    lp = lp_from_model(lm);
  } catch (const ModelError& e) {
    log_debug("lpac start: fold failed (%s)", e.what());
    return {};
  }
  LpResult lr = lp_solve(lp, LpOptions{}, nullptr);
  if (lr.status != LpStatus::Optimal) {
    log_debug("lpac start: lp status %d", (int)lr.status);
    return {};
  }

  auto grab = [&](const std::vector<int>& ix, size_t i, double fallback) {
    return (i < ix.size() && ix[i] >= 0) ? lr.x[ix[i]] : fallback;
  };
  Dispatch d;
  for (size_t g = 0; g < net.gens.size(); ++g) {
    d.pg.push_back(grab(lm.idx.pg, g, net.gens[g].pg0));
    d.qg.push_back(grab(lm.idx.qg, g, net.gens[g].qg0));
  }
  for (size_t c = 0; c < net.converters.size(); ++c) {
    d.pc_ac.push_back(grab(lm.idx.pc_ac, c, -net.converters[c].p_set));
    d.qc_ac.push_back(grab(lm.idx.qc_ac, c, -net.converters[c].q_set));
  }
  // LPAC's phi is the magnitude offset from one, phid the DC counterpart.
  d.vm_slack.resize(net.ac_buses.size());
  for (size_t b = 0; b < net.ac_buses.size(); ++b)
    d.vm_slack[b] = 1.0 + grab(lm.idx.phi, b, net.ac_buses[b].vm0 - 1.0);
  d.udc_slack.resize(net.dc_buses.size());
  for (size_t b = 0; b < net.dc_buses.size(); ++b)
    d.udc_slack[b] = 1.0 + grab(lm.idx.phid, b, net.dc_buses[b].vdc0 - 1.0);
  return start_from_dispatch(net, m, d, "lpac");
}

ResidualMaxima residual_audit(const Network& net, const GridState& st) {
  ResidualMaxima rm;
  Merged mv = merge_view(net);
  std::vector<char> ac_live(net.ac_buses.size(), 0), dc_live(net.dc_buses.size(), 0);
  for (size_t i = 0; i < net.ac_buses.size(); ++i)
    ac_live[i] = mv.ai_live[mv.ac_island[mv.ac_rep[i]]];
  for (size_t e = 0; e < net.dc_buses.size(); ++e)
    dc_live[e] = mv.di_live[mv.dc_island[mv.dc_rep[e]]];

  BusAccum acc = accumulate_no_switch(net, st);
  for (size_t s = 0; s < net.switches.size(); ++s) {
    const Switch& sw = net.switches[s];
    if (sw.closed) {
      if (sw.side == 'a') {
        acc.p[sw.from_bus] -= st.psw[s];
        acc.q[sw.from_bus] -= st.qsw[s];
        acc.p[sw.to_bus] += st.psw[s];
        acc.q[sw.to_bus] += st.qsw[s];
        rm.switch_eq = std::max({rm.switch_eq,
                                 std::fabs(st.vm[sw.from_bus] - st.vm[sw.to_bus]),
                                 std::fabs(st.va[sw.from_bus] - st.va[sw.to_bus])});
        if (sw.s_max > 0.0)
          rm.switch_eq = std::max(
              rm.switch_eq, std::hypot(st.psw[s], st.qsw[s]) - sw.s_max);
      } else {
        acc.d[sw.from_bus] -= st.psw[s];
        acc.d[sw.to_bus] += st.psw[s];
        rm.switch_eq = std::max(
            rm.switch_eq, std::fabs(st.udc[sw.from_bus] - st.udc[sw.to_bus]));
        if (sw.s_max > 0.0)
          rm.switch_eq = std::max(rm.switch_eq, std::fabs(st.psw[s]) - sw.s_max);
      }
    } else {
      rm.switch_eq = std::max({rm.switch_eq, std::fabs(st.psw[s]), std::fabs(st.qsw[s])});
    }
  }
  for (double v : acc.p) rm.balance = std::max(rm.balance, std::fabs(v));
  for (double v : acc.q) rm.balance = std::max(rm.balance, std::fabs(v));
  for (double v : acc.d) rm.balance = std::max(rm.balance, std::fabs(v));

  for (const AcBranch& br : net.ac_branches) {
    if (!br.in_service) continue;
    BranchFlows fl = ac_flow_exact(br, st.vm[br.from], st.vm[br.to], st.va[br.from],
                                   st.va[br.to]);
    if (br.s_max > 0.0) {
      rm.flow = std::max(rm.flow, std::hypot(fl.p_fr, fl.q_fr) - br.s_max);
      rm.flow = std::max(rm.flow, std::hypot(fl.p_to, fl.q_to) - br.s_max);
    }
    if (ac_live[br.from] && ac_live[br.to]) {
      double dd = st.va[br.from] - st.va[br.to];
      if (br.ang_max < M_PI - 1e-9) rm.flow = std::max(rm.flow, dd - br.ang_max);
      if (br.ang_min > -M_PI + 1e-9) rm.flow = std::max(rm.flow, br.ang_min - dd);
    }
  }
  for (const DcBranch& br : net.dc_branches) {
    if (!br.in_service || br.p_max <= 0.0) continue;
    auto [p_ft, p_tf] = dc_flow(br, st.udc[br.from], st.udc[br.to]);
    rm.flow = std::max({rm.flow, std::fabs(p_ft) - br.p_max, std::fabs(p_tf) - br.p_max});
  }

  for (size_t c = 0; c < net.converters.size(); ++c) {
    const Converter& cv = net.converters[c];
    if (!cv.in_service) {
      rm.converter = std::max({rm.converter, std::fabs(st.pc_ac[c]), std::fabs(st.qc_ac[c]),
                               std::fabs(st.pc_dc[c]), std::fabs(st.ic[c]),
                               std::fabs(st.idc[c]), std::fabs(st.qflt[c])});
      continue;
    }
    ConverterState cs;
    cs.p_ac = st.pc_ac[c];
    cs.q_ac = st.qc_ac[c];
    cs.p_dc = st.pc_dc[c];
    cs.i_ac = st.ic[c];
    cs.i_dc = st.idc[c];
    cs.u_term = st.vm[cv.terminal_bus];
    cs.u_dc = st.udc[cv.dc_bus];
    cs.z = 1.0;
    ConverterResiduals r = converter_coupling(cv, cs);
    rm.converter = std::max({rm.converter, std::fabs(r.loss_eq), std::fabs(r.ac_coupling),
                             std::fabs(r.dc_product), r.current_bound, r.power_bound});
    rm.converter = std::max({rm.converter, cv.p_ac_min - st.pc_ac[c],
                             st.pc_ac[c] - cv.p_ac_max, cv.q_ac_min - st.qc_ac[c],
                             st.qc_ac[c] - cv.q_ac_max});
    if (cv.has_filter && cv.filter_bus >= 0)
      rm.converter = std::max(
          rm.converter,
          std::fabs(st.qflt[c] -
                    cv.b_filter * st.vm[cv.filter_bus] * st.vm[cv.filter_bus]));
  }

  for (size_t i = 0; i < net.ac_buses.size(); ++i) {
    if (!ac_live[i]) continue;
    rm.bounds = std::max({rm.bounds, net.ac_buses[i].vmin - st.vm[i],
                          st.vm[i] - net.ac_buses[i].vmax});
  }
  for (size_t e = 0; e < net.dc_buses.size(); ++e) {
    if (!dc_live[e]) continue;
    rm.bounds = std::max({rm.bounds, net.dc_buses[e].vmin - st.udc[e],
                          st.udc[e] - net.dc_buses[e].vmax});
  }
  for (size_t g = 0; g < net.gens.size(); ++g) {
    if (!net.gens[g].in_service) continue;
    rm.bounds = std::max({rm.bounds, net.gens[g].p_min - st.pg[g],
                          st.pg[g] - net.gens[g].p_max, net.gens[g].q_min - st.qg[g],
                          st.qg[g] - net.gens[g].q_max});
  }
  rm.balance = std::max(rm.balance, 0.0);
  rm.flow = std::max(rm.flow, 0.0);
  rm.converter = std::max(rm.converter, 0.0);
  rm.bounds = std::max(rm.bounds, 0.0);
  rm.switch_eq = std::max(rm.switch_eq, 0.0);
  return rm;
}

FeasibilityReport fix_and_check(const Network& net, const Topology& topo,
                                double baseline, double tol) {
  auto t0 = std::chrono::steady_clock::now();
  FeasibilityReport rep;
  rep.baseline = baseline;
  Network applied = apply_topology(net, topo);
  Merged mv = merge_view(applied);

  for (const Load& l : applied.loads) {
    bool live = l.side == 'a' ? mv.ai_live[mv.ac_island[mv.ac_rep[l.bus]]] != 0
                              : mv.di_live[mv.dc_island[mv.dc_rep[l.bus]]] != 0;
    if (!live && (l.pd != 0.0 || l.qd != 0.0)) {
      rep.msg = "topology leaves a load without any source";
      rep.time_s = elapsed_s(t0);
      return rep;
    }
  }
  rep.topology_ok = true;

  // De-energized islands keep their buses but lose their branches, so the
  // fixed-topology model stays solvable with box voltages there.
  Network solved_net = applied;
  for (AcBranch& br : solved_net.ac_branches)
    if (br.in_service && !mv.ai_live[mv.ac_island[mv.ac_rep[br.from]]])
      br.in_service = false;
  for (DcBranch& br : solved_net.dc_branches)
    if (br.in_service && !mv.di_live[mv.dc_island[mv.dc_rep[br.from]]])
      br.in_service = false;

  ProblemSpec ps;
  ps.kind = ProblemKind::Opf;
  ps.formulation = Formulation::ExactBigM;
  MathModel m;
  try {
    m = build_exact(solved_net, ps);
  } catch (const ModelError& e) {
    rep.msg = e.what();
    rep.time_s = elapsed_s(t0);
    return rep;
  }
  SolverOptions so;
  so.feas_tol = tol;
  SolveResult sr = solve_continuous(m, solved_net, so);
  rep.opf_converged = sr.status == SolveStatus::Optimal;
  if (!rep.opf_converged) {
    rep.msg = "fixed-topology resolve failed: " + sr.msg;
    rep.time_s = elapsed_s(t0);
    return rep;
  }
  rep.objective = sr.obj;

  Dispatch d = dispatch_from_case(solved_net);
  for (size_t g = 0; g < solved_net.gens.size(); ++g)
    if (m.idx.pg[g] >= 0) {
      d.pg[g] = sr.x[m.idx.pg[g]];
      d.qg[g] = sr.x[m.idx.qg[g]];
    }
  for (size_t c = 0; c < solved_net.converters.size(); ++c)
    if (m.idx.pc_ac[c] >= 0) {
      d.pc_ac[c] = sr.x[m.idx.pc_ac[c]];
      d.qc_ac[c] = sr.x[m.idx.qc_ac[c]];
    }
  for (size_t i = 0; i < solved_net.ac_buses.size(); ++i)
    d.vm_slack[i] = sr.x[m.idx.vm[i]];
  for (size_t e = 0; e < solved_net.dc_buses.size(); ++e)
    d.udc_slack[e] = sr.x[m.idx.udc[e]];

  PfOptions po;
  po.tol = std::min(1e-8, tol * 1e-2);
  PfResult pf = newton_acdc_power_flow(solved_net, d, po);
  rep.pf_converged = pf.converged;
  if (!pf.converged) {
    rep.msg = "audit power flow failed: " + pf.msg;
    rep.time_s = elapsed_s(t0);
    return rep;
  }

  rep.state = assemble_state(solved_net, mv, d, pf);
  rep.state.topo = topo;
  rep.residuals = residual_audit(applied, rep.state);
  rep.ac_feasible = rep.residuals.worst() <= tol;
  if (rep.ac_feasible && baseline != 0.0) {
    rep.lower_than_baseline = rep.objective < baseline;
    rep.benefit_pct = (baseline - rep.objective) / baseline * 100.0;
  }
  rep.msg = rep.ac_feasible ? "ac feasible" : "residuals above tolerance";
  rep.time_s = elapsed_s(t0);
  log_info("feasibility: %s obj %.6f worst %.3e", rep.msg.c_str(), rep.objective,
           rep.residuals.worst());
  return rep;
}

std::string report_to_json(const FeasibilityReport& rep) {
  nlohmann::ordered_json j;
  j["topology_ok"] = rep.topology_ok;
  j["opf_converged"] = rep.opf_converged;
  j["pf_converged"] = rep.pf_converged;
  j["ac_feasible"] = rep.ac_feasible;
  j["lower_than_baseline"] = rep.lower_than_baseline;
  j["objective"] = rep.objective;
  j["baseline"] = rep.baseline;
  j["benefit_pct"] = rep.benefit_pct;
  nlohmann::ordered_json r;
  r["balance"] = rep.residuals.balance;
  r["flow"] = rep.residuals.flow;
  r["converter"] = rep.residuals.converter;
  r["bounds"] = rep.residuals.bounds;
  r["switch"] = rep.residuals.switch_eq;
  r["worst"] = rep.residuals.worst();
  j["residuals"] = r;
  j["msg"] = rep.msg;
  return j.dump(2) + "\n";
}

}  // namespace gridtopo
