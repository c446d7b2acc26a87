#include "gridtopo/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "gridtopo/log.hpp"

namespace gridtopo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr char kBasic = 0, kAtLower = 1, kAtUpper = 2, kFree = 3;

struct Eta {
  int r = 0;
  std::vector<double> w;
};

// Revised bounded-variable primal simplex over the equality system
// A x - s = 0 with slack bounds carrying the row ranges. The basis inverse
// lives as a sparse LU factorization of B (and of B transposed) plus a
// chain of product-form updates, refactored periodically.
struct Simplex {
  const LpProblem& p;
  int n, m, ncols;
  std::vector<std::vector<std::pair<int, double>>> cols;  // structural columns
  std::vector<double> lo, hi;
  std::vector<double> cost;  // phase 2 cost, slacks 0
  std::vector<int> basis;
  std::vector<char> vstat;
  std::vector<double> xb;       // basic values
  std::vector<double> xn;       // value of every column (basics refreshed on demand)
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu, lut;
  std::vector<Eta> etas;
  bool fact_ok = false;
  int iters = 0, max_iters = 0;
  int stall = 0;
  bool bland = false;
  double last_obj = kInf;

  explicit Simplex(const LpProblem& prob) : p(prob) {
    n = static_cast<int>(p.num_cols());
    m = static_cast<int>(p.rows.size());
    ncols = n + m;
    cols.assign(static_cast<size_t>(n), {});
    for (int i = 0; i < m; ++i)
      for (const LinTerm& t : p.rows[static_cast<size_t>(i)].a)
        if (t.c != 0.0) cols[static_cast<size_t>(t.v)].push_back({i, t.c});
    lo.resize(static_cast<size_t>(ncols));
    hi.resize(static_cast<size_t>(ncols));
    cost.assign(static_cast<size_t>(ncols), 0.0);
    for (int j = 0; j < n; ++j) {
      lo[static_cast<size_t>(j)] = p.lb[static_cast<size_t>(j)];
      hi[static_cast<size_t>(j)] = p.ub[static_cast<size_t>(j)];
      cost[static_cast<size_t>(j)] = p.c[static_cast<size_t>(j)];
    }
    for (int i = 0; i < m; ++i) {
      lo[static_cast<size_t>(n + i)] = p.rows[static_cast<size_t>(i)].lb;
      hi[static_cast<size_t>(n + i)] = p.rows[static_cast<size_t>(i)].ub;
    }
    max_iters = 2000 + 60 * (n + m);
  }

  // column j of [A | -I] into dense vector out (must be zeroed by caller)
  void scatter(int j, std::vector<double>& out) const {
    if (j < n) {
      for (const auto& [r, v] : cols[static_cast<size_t>(j)]) out[static_cast<size_t>(r)] += v;
    } else {
      out[static_cast<size_t>(j - n)] -= 1.0;
    }
  }

  bool refactor() {
    std::vector<Eigen::Triplet<double>> tr;
    for (int i = 0; i < m; ++i) {
      const int j = basis[static_cast<size_t>(i)];
      if (j < n) {
        for (const auto& [r, v] : cols[static_cast<size_t>(j)]) tr.push_back({r, i, v});
      } else {
        tr.push_back({j - n, i, -1.0});
      }
    }
    Eigen::SparseMatrix<double> B(m, m);
    B.setFromTriplets(tr.begin(), tr.end());
    lu.compute(B);
    if (lu.info() != Eigen::Success) return false;
    Eigen::SparseMatrix<double> Bt = B.transpose();
    lut.compute(Bt);
    if (lut.info() != Eigen::Success) return false;
    etas.clear();
    fact_ok = true;
    return true;
  }

  void ftran(std::vector<double>& v) const {
    Eigen::Map<Eigen::VectorXd> mv(const_cast<double*>(v.data()), m);
    Eigen::VectorXd out = lu.solve(mv);
    for (int i = 0; i < m; ++i) v[static_cast<size_t>(i)] = out[i];
    for (const Eta& e : etas) {
      const double piv = v[static_cast<size_t>(e.r)] / e.w[static_cast<size_t>(e.r)];
      for (int i = 0; i < m; ++i)
        v[static_cast<size_t>(i)] -= e.w[static_cast<size_t>(i)] * piv;
      v[static_cast<size_t>(e.r)] = piv;
    }
  }

  void btran(std::vector<double>& v) const {
    for (auto it = etas.rbegin(); it != etas.rend(); ++it) {
      const Eta& e = *it;
      double dot = 0.0;
      for (int i = 0; i < m; ++i)
        if (i != e.r) dot += e.w[static_cast<size_t>(i)] * v[static_cast<size_t>(i)];
      v[static_cast<size_t>(e.r)] =
          (v[static_cast<size_t>(e.r)] - dot) / e.w[static_cast<size_t>(e.r)];
    }
    Eigen::Map<Eigen::VectorXd> mv(const_cast<double*>(v.data()), m);
    Eigen::VectorXd out = lut.solve(mv);
    for (int i = 0; i < m; ++i) v[static_cast<size_t>(i)] = out[i];
  }

  double nb_value(int j) const {
    switch (vstat[static_cast<size_t>(j)]) {
      case kAtLower: return lo[static_cast<size_t>(j)];
      case kAtUpper: return hi[static_cast<size_t>(j)];
      default: return 0.0;
    }
  }

  void recompute_xb() {
    std::vector<double> rhs(static_cast<size_t>(m), 0.0);
    for (int j = 0; j < ncols; ++j) {
      if (vstat[static_cast<size_t>(j)] == kBasic) continue;
      const double v = nb_value(j);
      if (v == 0.0) continue;
      if (j < n) {
        for (const auto& [r, a] : cols[static_cast<size_t>(j)])
          rhs[static_cast<size_t>(r)] -= a * v;
      } else {
        rhs[static_cast<size_t>(j - n)] += v;
      }
    }
    ftran(rhs);
    xb = rhs;
  }

  double infeasibility(std::vector<double>* dir = nullptr) const {
    double total = 0.0;
    if (dir) dir->assign(static_cast<size_t>(m), 0.0);
    for (int i = 0; i < m; ++i) {
      const int j = basis[static_cast<size_t>(i)];
      const double v = xb[static_cast<size_t>(i)];
      const double l = lo[static_cast<size_t>(j)], u = hi[static_cast<size_t>(j)];
      if (v < l - 1e-9) {
        total += l - v;
        if (dir) (*dir)[static_cast<size_t>(i)] = -1.0;
      } else if (v > u + 1e-9) {
        total += v - u;
        if (dir) (*dir)[static_cast<size_t>(i)] = 1.0;
      }
    }
    return total;
  }

  LpStatus run(const LpOptions& opt);
};

LpStatus Simplex::run(const LpOptions& opt) {
  if (opt.max_iters > 0) max_iters = opt.max_iters;
  if (!fact_ok && !refactor()) return LpStatus::Numeric;
  recompute_xb();

  std::vector<double> y(static_cast<size_t>(m));
  std::vector<double> w(static_cast<size_t>(m));
  double ctol = 0.0;
  for (int j = 0; j < n; ++j) ctol = std::max(ctol, std::abs(cost[static_cast<size_t>(j)]));
  const double dual_tol = opt.opt_tol * (1.0 + ctol);

  while (iters < max_iters) {
    ++iters;
    std::vector<double> d;
    const double infeas = infeasibility(&d);
    const bool phase1 = infeas > 1e-7;

    // simplex multipliers for the active cost
    if (phase1) {
      y = d;
    } else {
      for (int i = 0; i < m; ++i)
        y[static_cast<size_t>(i)] = cost[static_cast<size_t>(basis[static_cast<size_t>(i)])];
    }
    btran(y);

    // pricing
    int q = -1;
    double best = phase1 ? 1e-8 : dual_tol;
    double q_dir = 0.0;
    for (int j = 0; j < ncols; ++j) {
      const char st = vstat[static_cast<size_t>(j)];
      if (st == kBasic) continue;
      if (lo[static_cast<size_t>(j)] == hi[static_cast<size_t>(j)]) continue;
      double dj = phase1 ? 0.0 : cost[static_cast<size_t>(j)];
      if (j < n) {
        for (const auto& [r, a] : cols[static_cast<size_t>(j)])
          dj -= a * y[static_cast<size_t>(r)];
      } else {
        dj += y[static_cast<size_t>(j - n)];
      }
      double score = 0.0, dir = 0.0;
      if (st == kAtLower || st == kFree) {
        if (dj < 0.0) {
          score = -dj;
          dir = 1.0;
        }
      }
      if (score == 0.0 && (st == kAtUpper || st == kFree)) {
        if (dj > 0.0) {
          score = dj;
          dir = -1.0;
        }
      }
      if (score <= (phase1 ? 1e-8 : dual_tol)) continue;
      if (bland) {
        q = j;
        q_dir = dir;
        break;
      }
      if (score > best) {
        best = score;
        q = j;
        q_dir = dir;
      }
    }
    if (q < 0) {
      if (phase1) return LpStatus::Infeasible;
      return LpStatus::Optimal;
    }

    // direction through the basis
    std::fill(w.begin(), w.end(), 0.0);
    scatter(q, w);
    ftran(w);

    // ratio test
    double tmax = kInf;
    int leave = -1;  // basis position
    double leave_to = 0.0;
    const double range_q = hi[static_cast<size_t>(q)] - lo[static_cast<size_t>(q)];
    if (std::isfinite(range_q)) tmax = range_q;
    for (int i = 0; i < m; ++i) {
      const double delta = -q_dir * w[static_cast<size_t>(i)];
      if (std::abs(delta) < 1e-11) continue;
      const int j = basis[static_cast<size_t>(i)];
      const double v = xb[static_cast<size_t>(i)];
      const double l = lo[static_cast<size_t>(j)], u = hi[static_cast<size_t>(j)];
      double t = kInf, target = 0.0;
      if (phase1 && v < l - 1e-9) {
        if (delta > 0.0) {
          t = (l - v) / delta;
          target = l;
        }
      } else if (phase1 && v > u + 1e-9) {
        if (delta < 0.0) {
          t = (u - v) / delta;
          target = u;
        }
      } else if (delta > 0.0) {
        if (std::isfinite(u)) {
          t = (u - v) / delta;
          target = u;
        }
      } else {
        if (std::isfinite(l)) {
          t = (l - v) / delta;
          target = l;
        }
      }
      if (t < -1e-12) t = 0.0;
      if (t < tmax - 1e-12 ||
          (t < tmax + 1e-12 && leave >= 0 &&
           std::abs(w[static_cast<size_t>(i)]) >
               std::abs(w[static_cast<size_t>(leave)]))) {
        tmax = t;
        leave = i;
        leave_to = target;
      }
    }

    if (!std::isfinite(tmax)) {
      if (phase1) return LpStatus::Numeric;
      return LpStatus::Unbounded;
    }
    if (tmax < 0.0) tmax = 0.0;

    // stall detection drives the Bland fallback
    if (tmax < 1e-11) {
      if (++stall > 300) bland = true;
    } else {
      stall = 0;
    }

    if (leave < 0) {
      // bound flip: entering runs to its opposite bound
      for (int i = 0; i < m; ++i)
        xb[static_cast<size_t>(i)] -= q_dir * tmax * w[static_cast<size_t>(i)];
      vstat[static_cast<size_t>(q)] =
          vstat[static_cast<size_t>(q)] == kAtLower ? kAtUpper : kAtLower;
      continue;
    }

    if (std::abs(w[static_cast<size_t>(leave)]) < 1e-9) {
      if (!refactor()) return LpStatus::Numeric;
      recompute_xb();
      continue;
    }

    // pivot
    const int jout = basis[static_cast<size_t>(leave)];
    for (int i = 0; i < m; ++i)
      xb[static_cast<size_t>(i)] -= q_dir * tmax * w[static_cast<size_t>(i)];
    const double enter_val = (vstat[static_cast<size_t>(q)] == kFree
                                  ? 0.0
                                  : nb_value(q)) +
                             q_dir * tmax;
    vstat[static_cast<size_t>(jout)] =
        std::abs(leave_to - lo[static_cast<size_t>(jout)]) <
                std::abs(leave_to - hi[static_cast<size_t>(jout)])
            ? kAtLower
            : kAtUpper;
    basis[static_cast<size_t>(leave)] = q;
    vstat[static_cast<size_t>(q)] = kBasic;
    xb[static_cast<size_t>(leave)] = enter_val;
    etas.push_back({leave, w});
    if (etas.size() > 64) {
      if (!refactor()) return LpStatus::Numeric;
      recompute_xb();
    }
  }
  return LpStatus::IterLimit;
}

}  // namespace

LpResult lp_solve(const LpProblem& p, const LpOptions& opt, const LpBasis* warm) {
  LpResult res;
  Simplex s(p);
  const int ncols = s.ncols;

  bool warmed = false;
  if (warm && static_cast<int>(warm->vstat.size()) == ncols &&
      static_cast<int>(warm->basis.size()) == s.m) {
    s.basis = warm->basis;
    s.vstat = warm->vstat;
    if (s.refactor()) warmed = true;
  }
  if (!warmed) {
    s.basis.resize(static_cast<size_t>(s.m));
    s.vstat.assign(static_cast<size_t>(ncols), kAtLower);
    for (int j = 0; j < s.n; ++j) {
      const double l = p.lb[static_cast<size_t>(j)], u = p.ub[static_cast<size_t>(j)];
      if (std::isfinite(l)) {
        s.vstat[static_cast<size_t>(j)] =
            (std::isfinite(u) && std::abs(u) < std::abs(l)) ? kAtUpper : kAtLower;
      } else if (std::isfinite(u)) {
        s.vstat[static_cast<size_t>(j)] = kAtUpper;
      } else {
        s.vstat[static_cast<size_t>(j)] = kFree;
      }
    }
    for (int i = 0; i < s.m; ++i) {
      s.basis[static_cast<size_t>(i)] = s.n + i;
      s.vstat[static_cast<size_t>(s.n + i)] = kBasic;
    }
    if (!s.refactor()) {
      res.status = LpStatus::Numeric;
      return res;
    }
  }

  res.status = s.run(opt);
  res.iters = s.iters;

  // read the point back
  s.recompute_xb();
  std::vector<double> full(static_cast<size_t>(ncols), 0.0);
  for (int j = 0; j < ncols; ++j)
    if (s.vstat[static_cast<size_t>(j)] != kBasic) full[static_cast<size_t>(j)] = s.nb_value(j);
  for (int i = 0; i < s.m; ++i)
    full[static_cast<size_t>(s.basis[static_cast<size_t>(i)])] = s.xb[static_cast<size_t>(i)];
  res.x.assign(full.begin(), full.begin() + s.n);
  res.obj = p.c0;
  for (int j = 0; j < s.n; ++j) res.obj += p.c[static_cast<size_t>(j)] * res.x[static_cast<size_t>(j)];
  res.basis.basis = s.basis;
  res.basis.vstat = s.vstat;
  if (res.status == LpStatus::Optimal) {
    // final feasibility audit at the reported point
    double worst = 0.0;
    for (size_t i = 0; i < p.rows.size(); ++i) {
      double v = 0.0;
      for (const LinTerm& t : p.rows[i].a) v += t.c * res.x[static_cast<size_t>(t.v)];
      if (p.rows[i].lb > -kInf) worst = std::max(worst, p.rows[i].lb - v);
      if (p.rows[i].ub < kInf) worst = std::max(worst, v - p.rows[i].ub);
    }
    if (worst > 1e-5) {
      log_warn("lp: reported optimum violates rows by %.3e", worst);
      res.status = LpStatus::Numeric;
    }
  }
  return res;
}

LpProblem lp_from_model(const MathModel& m) {
  LpProblem p;
  const size_t n = m.vars.size();
  p.lb.resize(n);
  p.ub.resize(n);
  p.c.assign(n, 0.0);
  for (size_t j = 0; j < n; ++j) {
    p.lb[j] = m.vars[j].lb;
    p.ub[j] = m.vars[j].ub;
  }
  for (const LinTerm& t : m.objective) p.c[static_cast<size_t>(t.v)] += t.c;
  p.c0 = m.obj_const;
  p.rows.reserve(m.cons.size());
  for (const Constraint& c : m.cons) {
    if (!c.nl.empty())
      throw ModelError("nonlinear row in linear relaxation: " + c.name);
    LpRow r;
    r.a = c.lin;
    r.lb = c.lb;
    r.ub = c.ub;
    p.rows.push_back(std::move(r));
  }
  return p;
}

}  // namespace gridtopo
