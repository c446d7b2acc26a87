#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <vector>

#include "gridtopo/bnb.hpp"
#include "gridtopo/feasibility.hpp"
#include "gridtopo/log.hpp"

namespace gridtopo {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct QNode {
  double bound = -kInf;
  long seq = 0;
  std::map<int, double> fixes;  // binary var -> 0/1
  LpBasis basis;
  std::vector<double> zvals;  // relaxed binary values at evaluation
};

struct NodeOrder {
  bool operator()(const QNode& a, const QNode& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;  // min bound on top
    return a.seq > b.seq;                              // FIFO tie break
  }
};

struct Ev {
  LpStatus st = LpStatus::Numeric;
  double obj = 0.0;
  std::vector<double> x;
  LpBasis basis;
  double cone_viol = 0.0;
};

}  // namespace

const char* solve_status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Feasible: return "feasible-gap";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::Limit: return "limit";
    case SolveStatus::Error: return "error";
  }
  return "?";
}

double max_violation(const MathModel& m, const std::vector<double>& x) {
  double w = 0.0;
  for (const Constraint& con : m.cons) {
    double v = eval_constraint(con, x);
    if (con.lb > -kInf) w = std::max(w, con.lb - v);
    if (con.ub < kInf) w = std::max(w, v - con.ub);
  }
  for (size_t i = 0; i < m.vars.size(); ++i) {
    w = std::max(w, m.vars[i].lb - x[i]);
    w = std::max(w, x[i] - m.vars[i].ub);
  }
  return w;
}

SolveResult solve(const MathModel& m, const Network& net, const SolverOptions& opt) {
  auto t0 = std::chrono::steady_clock::now();
  SolveResult out;
  const Formulation fm = m.spec.formulation;
  const int nb = (int)m.binaries.size();

  // Bounding problem: the model itself, or its conic lift for the exact
  // formulation.
  MathModel lifted;
  const MathModel* bm = &m;
  if (fm == Formulation::ExactBigM) {
    try {
      lifted = soc_lift(m, net);
    } catch (const ModelError& e) {
      out.msg = e.what();
      return out;
    }
    bm = &lifted;
  }
  LpProblem base;
  try {
    base = lp_from_model(*bm);
  } catch (const ModelError& e) {
    out.msg = e.what();
    return out;
  }
  const bool use_conic = !bm->cones.empty();
  std::vector<LpRow> pool;
  ConicOptions copt;
  copt.cone_tol = opt.cone_tol;
  copt.lp = opt.lp;

  std::map<int, std::vector<int>> partner;
  for (const auto& [a, b] : m.excl_pairs) {
    partner[a].push_back(b);
    partner[b].push_back(a);
  }

  // Fix one binary and chase the pairing rows; false on a 0/1 conflict.
  auto propagate = [&](std::map<int, double>& fx, int var, double val) {
    std::vector<std::pair<int, double>> stack{{var, val}};
    while (!stack.empty()) {
      auto [b, v] = stack.back();
      stack.pop_back();
      auto it = fx.find(b);
      if (it != fx.end()) {
        if (std::fabs(it->second - v) > 0.5) return false;
        continue;
      }
      fx[b] = v;
      auto pit = partner.find(b);
      if (pit == partner.end()) continue;
      for (int p : pit->second) {
        if (m.spec.exclusivity == Exclusivity::Equal)
          stack.push_back({p, 1.0 - v});
        else if (v == 1.0)
          stack.push_back({p, 0.0});
      }
    }
    return true;
  };

  auto eval = [&](const std::map<int, double>& fx, const LpBasis* warm) {
    LpProblem p = base;
    for (const auto& [b, v] : fx) {
      p.lb[b] = v;
      p.ub[b] = v;
    }
    Ev ev;
    if (use_conic) {
      ConicResult cr = conic_solve(p, bm->cones, copt, pool, warm);
      ev.st = cr.status;
      ev.obj = cr.obj;
      ev.x = std::move(cr.x);
      ev.basis = std::move(cr.basis);
      ev.cone_viol = cr.worst_violation;
    } else {
      LpResult lr = lp_solve(p, opt.lp, warm);
      ev.st = lr.status;
      ev.obj = lr.obj;
      ev.x = std::move(lr.x);
      ev.basis = std::move(lr.basis);
    }
    return ev;
  };

  double inc = kInf;
  std::vector<double> inc_x, inc_z;
  bool have_inc = false;
  std::vector<double> leaf_bounds;
  double leaf_min = kInf;
  std::priority_queue<QNode, std::vector<QNode>, NodeOrder> open;
  long seq = 0;
  bool hit_limit = false;
  bool root_unbounded = false;

  auto gap_tol = [&]() {
    return have_inc ? std::max(opt.abs_gap, opt.rel_gap * std::fabs(inc)) : 0.0;
  };
  auto cutoff = [&]() { return have_inc ? inc - gap_tol() : kInf; };

  // Evaluates one node; integral nodes become leaves (and incumbent
  // candidates), fractional ones enter the queue.
  auto handle = [&](std::map<int, double>&& fixes, const LpBasis* warm) {
    Ev ev = eval(fixes, warm);
    ++out.nodes;
    if (ev.st == LpStatus::Infeasible) return;
    if (ev.st == LpStatus::Unbounded) {
      root_unbounded = true;
      return;
    }
    if (ev.st != LpStatus::Optimal) {
      log_info("bnb: dropping node on numeric relaxation failure");
      return;
    }

    std::vector<double> zv(nb);
    bool integral = true;
    for (int k = 0; k < nb; ++k) {
      auto it = fixes.find(m.binaries[k]);
      zv[k] = it != fixes.end() ? it->second : ev.x[m.binaries[k]];
      double f = zv[k] - std::floor(zv[k]);
      if (std::min(f, 1.0 - f) > opt.int_tol) integral = false;
    }

    if (!integral) {
      if (ev.obj < cutoff()) {
        QNode n;
        n.bound = ev.obj;
        n.seq = seq++;
        n.fixes = std::move(fixes);
        n.basis = std::move(ev.basis);
        n.zvals = std::move(zv);
        open.push(std::move(n));
      }
      return;
    }

    // Integral leaf. The relaxation objective is its certified bound.
    leaf_bounds.push_back(ev.obj);
    leaf_min = std::min(leaf_min, ev.obj);
    if (fm == Formulation::ExactBigM) {
      std::vector<double> zfix(nb);
      for (int k = 0; k < nb; ++k) zfix[k] = zv[k] >= 0.5 ? 1.0 : 0.0;
      NlpResult nr = nlp_solve(m, zfix, opt.nlp, have_inc ? &inc_x : nullptr);
      if (!nr.converged || max_violation(m, nr.x) > opt.feas_tol) {
        // Retry from the cold model start before giving up on the leaf.
        if (have_inc) nr = nlp_solve(m, zfix, opt.nlp, nullptr);
        if (!nr.converged || max_violation(m, nr.x) > opt.feas_tol) {
          log_info("bnb: leaf without certified point (%s)", nr.msg.c_str());
          return;
        }
      }
      if (nr.obj < inc) {
        inc = nr.obj;
        inc_x = nr.x;
        inc_z = zfix;
        have_inc = true;
      }
    } else {
      if (use_conic && ev.cone_viol > 10.0 * opt.cone_tol) {
        log_info("bnb: integral leaf kept only as bound, cone residual %.3e",
                 ev.cone_viol);
        return;
      }
      if (ev.obj < inc) {
        inc = ev.obj;
        inc_x = ev.x;
        inc_z.assign(nb, 0.0);
        for (int k = 0; k < nb; ++k) inc_z[k] = zv[k] >= 0.5 ? 1.0 : 0.0;
        have_inc = true;
      }
    }
  };

  handle({}, nullptr);
  if (root_unbounded) {
    out.status = SolveStatus::Unbounded;
    out.time_s = elapsed_s(t0);
    return out;
  }

  while (!open.empty()) {
    if ((opt.time_limit > 0.0 && elapsed_s(t0) > opt.time_limit) ||
        (opt.max_nodes > 0 && out.nodes >= opt.max_nodes)) {
      hit_limit = true;
      break;
    }
    QNode node = open.top();
    open.pop();
    double lb_now = std::min(node.bound, leaf_min);
    if (have_inc && inc - lb_now <= gap_tol()) {
      open.push(std::move(node));  // keep it for the final bound
      break;
    }
    if (node.bound >= cutoff()) continue;

    int bvar = -1;
    double best_frac = opt.int_tol;
    for (int k = 0; k < nb; ++k) {
      double f = node.zvals[k] - std::floor(node.zvals[k]);
      double d = std::min(f, 1.0 - f);
      if (d > best_frac) {
        best_frac = d;
        bvar = m.binaries[k];
      }
    }
    if (bvar < 0) continue;  // numerically integral after all; already a leaf bound? drop

    for (double val : {0.0, 1.0}) {
      std::map<int, double> child = node.fixes;
      if (!propagate(child, bvar, val)) continue;
      handle(std::move(child), &node.basis);
    }
  }

  double final_lb = leaf_min;
  while (!open.empty()) {
    final_lb = std::min(final_lb, open.top().bound);
    open.pop();
  }
  if (have_inc) final_lb = std::min(final_lb, inc);

  out.time_s = elapsed_s(t0);
  out.bound = final_lb;
  if (have_inc) {
    out.obj = inc;
    out.x = std::move(inc_x);
    out.binary_values = std::move(inc_z);
    out.status = (inc - final_lb <= gap_tol()) ? SolveStatus::Optimal
                                               : SolveStatus::Feasible;
    if (out.status == SolveStatus::Feasible)
      out.msg = hit_limit ? "stopped at limit with open gap"
                          : "tree exhausted with open gap";
  } else {
    out.status = hit_limit ? SolveStatus::Limit : SolveStatus::Infeasible;
    if (hit_limit) out.msg = "stopped at limit without incumbent";
  }
  log_info("bnb: %s obj %.6f bound %.6f nodes %ld", solve_status_name(out.status),
           out.obj, out.bound, out.nodes);
  return out;
}

SolveResult solve_continuous(const MathModel& m, const Network& net,
                             const SolverOptions& opt) {
  auto t0 = std::chrono::steady_clock::now();
  SolveResult out;
  if (m.spec.formulation == Formulation::ExactBigM) {
    if (!m.binaries.empty()) {
      out.msg = "continuous exact solve needs a model without free binaries";
      return out;
    }
    // Local method: try a few starts and keep the best point that checks out.
    // The linearized dispatch tends to find the cheaper basin, the setpoint
    // flow covers cases where the linearization is off, and the model's own
    // x0 is the fallback when no flow converges.
    NlpResult nr;
    bool have = false;
    std::string last_msg;
    auto attempt = [&](const std::vector<double>* x0) {
      NlpResult r = nlp_solve(m, {}, opt.nlp, x0);
      ++out.nodes;
      if (!r.converged || max_violation(m, r.x) > opt.feas_tol) {
        last_msg = r.msg;
        return;
      }
      if (!have || r.obj < nr.obj) nr = std::move(r);
      have = true;
    };
    std::vector<double> wl = lpac_start(net, m);
    if (!wl.empty()) attempt(&wl);
    std::vector<double> ws = setpoint_start(net, m);
    if (!ws.empty()) attempt(&ws);
    if (!have) attempt(nullptr);
    out.time_s = elapsed_s(t0);
    if (!have) {
      out.msg = last_msg.empty() ? "no start converged" : last_msg;
      out.status = SolveStatus::Error;
      return out;
    }
    out.msg = nr.msg;
    out.x = std::move(nr.x);
    out.obj = nr.obj;
    out.bound = -kInf;  // local method, no certificate
    out.status = SolveStatus::Optimal;
    return out;
  }

  LpProblem base;
  try {
    base = lp_from_model(m);
  } catch (const ModelError& e) {
    out.msg = e.what();
    return out;
  }
  out.nodes = 1;
  if (!m.cones.empty()) {
    std::vector<LpRow> pool;
    ConicOptions copt;
    copt.cone_tol = opt.cone_tol;
    copt.lp = opt.lp;
    ConicResult cr = conic_solve(base, m.cones, copt, pool, nullptr);
    out.time_s = elapsed_s(t0);
    out.x = std::move(cr.x);
    out.obj = cr.obj;
    out.bound = cr.obj;
    switch (cr.status) {
      case LpStatus::Optimal: out.status = SolveStatus::Optimal; break;
      case LpStatus::Infeasible: out.status = SolveStatus::Infeasible; break;
      case LpStatus::Unbounded: out.status = SolveStatus::Unbounded; break;
      default: out.status = SolveStatus::Error; break;
    }
    if (cr.worst_violation > opt.cone_tol) out.msg = "cone residual above tolerance";
    return out;
  }
  LpResult lr = lp_solve(base, opt.lp, nullptr);
  out.time_s = elapsed_s(t0);
  out.x = std::move(lr.x);
  out.obj = lr.obj;
  out.bound = lr.obj;
  switch (lr.status) {
    case LpStatus::Optimal: out.status = SolveStatus::Optimal; break;
    case LpStatus::Infeasible: out.status = SolveStatus::Infeasible; break;
    case LpStatus::Unbounded: out.status = SolveStatus::Unbounded; break;
    default: out.status = SolveStatus::Error; break;
  }
  return out;
}

SolveResult enumerate_oracle(const MathModel& m, const Network& net,
                             const SolverOptions& opt) {
  auto t0 = std::chrono::steady_clock::now();
  SolveResult out;
  const int nb = (int)m.binaries.size();
  if (nb > 20) {
    out.msg = "too many binaries for enumeration";
    return out;
  }
  (void)net;
  std::map<int, int> pos;
  for (int k = 0; k < nb; ++k) pos[m.binaries[k]] = k;

  const bool exact = m.spec.formulation == Formulation::ExactBigM;
  LpProblem base;
  std::vector<LpRow> pool;
  ConicOptions copt;
  copt.cone_tol = opt.cone_tol;
  copt.lp = opt.lp;
  if (!exact) base = lp_from_model(m);

  bool found = false;
  for (long mask = 0; mask < (1L << nb); ++mask) {
    std::vector<double> zfix(nb);
    for (int k = 0; k < nb; ++k) zfix[k] = (mask >> k) & 1 ? 1.0 : 0.0;
    bool ok = true;
    for (const auto& [a, b] : m.excl_pairs) {
      double s = zfix[pos.at(a)] + zfix[pos.at(b)];
      if (m.spec.exclusivity == Exclusivity::Equal ? s != 1.0 : s > 1.0) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;

    double obj;
    std::vector<double> x;
    if (exact) {
      NlpResult nr = nlp_solve(m, zfix, opt.nlp, nullptr);
      ++out.nodes;
      if (!nr.converged || max_violation(m, nr.x) > opt.feas_tol) continue;
      obj = nr.obj;
      x = std::move(nr.x);
    } else {
      LpProblem p = base;
      for (int k = 0; k < nb; ++k) {
        p.lb[m.binaries[k]] = zfix[k];
        p.ub[m.binaries[k]] = zfix[k];
      }
      ++out.nodes;
      if (!m.cones.empty()) {
        ConicResult cr = conic_solve(p, m.cones, copt, pool, nullptr);
        if (cr.status != LpStatus::Optimal || cr.worst_violation > 10.0 * opt.cone_tol)
          continue;
        obj = cr.obj;
        x = std::move(cr.x);
      } else {
        LpResult lr = lp_solve(p, opt.lp, nullptr);
        if (lr.status != LpStatus::Optimal) continue;
        obj = lr.obj;
        x = std::move(lr.x);
      }
    }
    if (!found || obj < out.obj) {
      found = true;
      out.obj = obj;
      out.x = std::move(x);
      out.binary_values = zfix;
    }
  }
  out.time_s = elapsed_s(t0);
  out.bound = found ? out.obj : -kInf;
  out.status = found ? SolveStatus::Optimal : SolveStatus::Infeasible;
  return out;
}

}  // namespace gridtopo
