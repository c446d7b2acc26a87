#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "gridtopo/log.hpp"
#include "gridtopo/nlp.hpp"

namespace gridtopo {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
using Trip = Eigen::Triplet<double>;

// One equality of the interior point problem: lin + nl terms (nlp variable
// indices, binaries folded away) minus an optional range slack equals b.
struct FoldedRow {
  std::vector<LinTerm> lin;
  std::vector<NlTerm> nl;
  double lb = 0.0;
  double ub = 0.0;
  int slack = -1;  // -1 when lb == ub (pure equality with b = lb)
};

double interior(double x, double l, double h) {
  if (!std::isfinite(x)) x = 0.0;
  if (l > -kInf && h < kInf) {
    double pad = 0.01 * (h - l);
    return std::min(std::max(x, l + pad), h - pad);
  }
  if (l > -kInf) return std::max(x, l + 0.1);
  if (h < kInf) return std::min(x, h - 0.1);
  return x;
}

// Value of one term; first derivatives accumulate into g, second
// derivatives scaled by w go to H (both optional). Coincident indices
// (x == y, u == v) come out right because every partial is accumulated
// separately.
double term_eval(const NlTerm& t, const std::vector<double>& v,
                 std::map<int, double>* g, double w, std::vector<Trip>* H) {
  double x = v[t.x], y = v[t.y];
  switch (t.kind) {
    case TermKind::Quad: {
      if (g) {
        (*g)[t.x] += t.c * y;
        (*g)[t.y] += t.c * x;
      }
      if (H && w != 0.0) {
        H->emplace_back(t.x, t.y, w * t.c);
        H->emplace_back(t.y, t.x, w * t.c);
      }
      return t.c * x * y;
    }
    case TermKind::SqSq: {
      if (g) {
        (*g)[t.x] += 2.0 * t.c * x * y * y;
        (*g)[t.y] += 2.0 * t.c * x * x * y;
      }
      if (H && w != 0.0) {
        H->emplace_back(t.x, t.x, 2.0 * w * t.c * y * y);
        H->emplace_back(t.y, t.y, 2.0 * w * t.c * x * x);
        H->emplace_back(t.x, t.y, 4.0 * w * t.c * x * y);
        H->emplace_back(t.y, t.x, 4.0 * w * t.c * x * y);
      }
      return t.c * x * x * y * y;
    }
    case TermKind::TrigCos:
    case TermKind::TrigSin: {
      double d = v[t.u] - v[t.v] - t.phi;
      double C = std::cos(d), S = std::sin(d);
      double F, Fd;
      if (t.kind == TermKind::TrigCos) {
        F = C;
        Fd = -S;
      } else {
        F = S;
        Fd = C;
      }
      double Fdd = -F;
      double p = x * y;
      if (g) {
        (*g)[t.x] += t.c * y * F;
        (*g)[t.y] += t.c * x * F;
        (*g)[t.u] += t.c * p * Fd;
        (*g)[t.v] -= t.c * p * Fd;
      }
      if (H && w != 0.0) {
        double cw = w * t.c;
        H->emplace_back(t.x, t.y, cw * F);
        H->emplace_back(t.y, t.x, cw * F);
        H->emplace_back(t.x, t.u, cw * y * Fd);
        H->emplace_back(t.u, t.x, cw * y * Fd);
        H->emplace_back(t.x, t.v, -cw * y * Fd);
        H->emplace_back(t.v, t.x, -cw * y * Fd);
        H->emplace_back(t.y, t.u, cw * x * Fd);
        H->emplace_back(t.u, t.y, cw * x * Fd);
        H->emplace_back(t.y, t.v, -cw * x * Fd);
        H->emplace_back(t.v, t.y, -cw * x * Fd);
        H->emplace_back(t.u, t.u, cw * p * Fdd);
        H->emplace_back(t.v, t.v, cw * p * Fdd);
        H->emplace_back(t.u, t.v, -cw * p * Fdd);
        H->emplace_back(t.v, t.u, -cw * p * Fdd);
      }
      return t.c * p * F;
    }
  }
  return 0.0;
}

}  // namespace

NlpResult nlp_solve(const MathModel& m, const std::vector<double>& zfix,
                    const NlpOptions& opt, const std::vector<double>* x_init) {
  NlpResult res;
  const int nmv = (int)m.vars.size();
  if (zfix.size() != m.binaries.size()) {
    res.msg = "binary fix vector does not match the model";
    return res;
  }

  std::vector<double> fixval(nmv, std::numeric_limits<double>::quiet_NaN());
  for (size_t k = 0; k < m.binaries.size(); ++k)
    fixval[m.binaries[k]] = zfix[k] >= 0.5 ? 1.0 : 0.0;

  std::vector<int> vx(nmv, -1);
  int nx = 0;
  for (int i = 0; i < nmv; ++i)
    if (std::isnan(fixval[i])) vx[i] = nx++;

  std::vector<double> lo(nx), hi(nx), vinit(nx);
  for (int i = 0; i < nmv; ++i) {
    int k = vx[i];
    if (k < 0) continue;
    const Variable& mv = m.vars[i];
    bool pinned = mv.lb == mv.ub;  // handled by an equality row below
    lo[k] = pinned ? -kInf : mv.lb;
    hi[k] = pinned ? kInf : mv.ub;
    double seed = x_init && (int)x_init->size() == nmv ? (*x_init)[i] : mv.x0;
    vinit[k] = pinned ? mv.lb : interior(seed, lo[k], hi[k]);
  }

  // Fold the fixed binaries out of every row.
  std::vector<FoldedRow> rows;
  std::vector<std::string> row_names;
  for (const Constraint& con : m.cons) {
    if (con.shape == ConShape::Soc) {
      res.msg = "conic row in smooth solve: " + con.name;
      return res;
    }
    FoldedRow fr;
    fr.lb = con.lb;
    fr.ub = con.ub;
    for (const LinTerm& t : con.lin) {
      if (vx[t.v] >= 0) {
        fr.lin.push_back({t.c, vx[t.v]});
      } else {
        if (fr.lb > -kInf) fr.lb -= t.c * fixval[t.v];
        if (fr.ub < kInf) fr.ub -= t.c * fixval[t.v];
      }
    }
    for (NlTerm t : con.nl) {
      if (t.z >= 0) {
        if (vx[t.z] >= 0) {
          res.msg = "free on/off factor in smooth solve: " + con.name;
          return res;
        }
        t.c *= fixval[t.z];
        t.z = -1;
        if (t.c == 0.0) continue;
      }
      bool trig = t.kind == TermKind::TrigCos || t.kind == TermKind::TrigSin;
      t.x = vx[t.x];
      t.y = vx[t.y];
      if (trig) {
        t.u = vx[t.u];
        t.v = vx[t.v];
      }
      if (t.x < 0 || t.y < 0 || (trig && (t.u < 0 || t.v < 0))) {
        res.msg = "fixed variable inside a nonlinear term: " + con.name;
        return res;
      }
      fr.nl.push_back(t);
    }
    if (fr.lin.empty() && fr.nl.empty()) {
      // Everything folded away; the remaining bounds must admit zero.
      if (fr.lb > 1e-6 || fr.ub < -1e-6) {
        res.msg = "row '" + con.name + "' cannot hold under the given fixing";
        return res;
      }
      continue;
    }
    rows.push_back(std::move(fr));
    row_names.push_back(con.name);
  }
  // Variables with tied bounds stay free and get pinned by an equality, so
  // nonlinear terms never need substitution.
  for (int i = 0; i < nmv; ++i) {
    if (vx[i] < 0 || m.vars[i].lb != m.vars[i].ub) continue;
    FoldedRow fr;
    fr.lin.push_back({1.0, vx[i]});
    fr.lb = fr.ub = m.vars[i].lb;
    rows.push_back(std::move(fr));
    row_names.push_back("pin:" + m.vars[i].name);
  }

  // Range rows get a bounded slack variable.
  const int ne = (int)rows.size();
  int nv = nx;
  for (FoldedRow& fr : rows)
    if (fr.lb < fr.ub) fr.slack = nv++;
  lo.resize(nv);
  hi.resize(nv);
  vinit.resize(nv);
  std::vector<double> v = vinit;
  for (const FoldedRow& fr : rows) {
    if (fr.slack < 0) continue;
    lo[fr.slack] = fr.lb;
    hi[fr.slack] = fr.ub;
    double rv = 0.0;
    for (const LinTerm& t : fr.lin) rv += t.c * v[t.v];
    for (const NlTerm& t : fr.nl) rv += term_eval(t, v, nullptr, 0.0, nullptr);
    v[fr.slack] = interior(rv, fr.lb, fr.ub);
  }

  std::vector<std::string> vname(nv);
  for (int i = 0; i < nmv; ++i)
    if (vx[i] >= 0) vname[vx[i]] = m.vars[i].name;
  for (int i = 0; i < ne; ++i)
    if (rows[i].slack >= 0) vname[rows[i].slack] = "s(" + row_names[i] + ")";

  double fconst = m.obj_const;
  std::vector<double> gradf(nv, 0.0);
  for (const LinTerm& t : m.objective) {
    if (vx[t.v] >= 0)
      gradf[vx[t.v]] += t.c;
    else
      fconst += t.c * fixval[t.v];
  }

  std::vector<char> has_lo(nv), has_hi(nv);
  std::vector<double> zl(nv, 0.0), zh(nv, 0.0);
  int nb = 0;
  for (int k = 0; k < nv; ++k) {
    has_lo[k] = lo[k] > -kInf;
    has_hi[k] = hi[k] < kInf;
    if (has_lo[k]) {
      zl[k] = 1.0;
      ++nb;
    }
    if (has_hi[k]) {
      zh[k] = 1.0;
      ++nb;
    }
  }
  auto comp_gap = [&]() {
    double s = 0.0;
    for (int k = 0; k < nv; ++k) {
      if (has_lo[k]) s += zl[k] * (v[k] - lo[k]);
      if (has_hi[k]) s += zh[k] * (hi[k] - v[k]);
    }
    return s;
  };

  std::vector<double> lam(ne, 0.0);
  double gap = comp_gap();
  double mu = nb > 0 ? opt.sigma * std::max(gap, 0.0) / nb : 0.0;
  double fprev = kInf;
  double delta_p = 0.0, delta_d = 0.0;
  const int N = nv + ne;

  auto scatter = [&](double fval) {
    res.obj = fval;
    res.x.assign(nmv, 0.0);
    for (int i = 0; i < nmv; ++i) res.x[i] = vx[i] >= 0 ? v[vx[i]] : fixval[i];
  };

  for (int iter = 0; iter < opt.max_iter; ++iter) {
    res.iters = iter;
    std::vector<double> r(ne, 0.0), jtl(nv, 0.0);
    std::vector<Trip> jt, ht;
    for (int i = 0; i < ne; ++i) {
      const FoldedRow& fr = rows[i];
      std::map<int, double> g;
      double rv = 0.0;
      for (const LinTerm& t : fr.lin) {
        rv += t.c * v[t.v];
        g[t.v] += t.c;
      }
      for (const NlTerm& t : fr.nl) rv += term_eval(t, v, &g, lam[i], &ht);
      if (fr.slack >= 0) {
        rv -= v[fr.slack];
        g[fr.slack] += -1.0;
      } else {
        rv -= fr.lb;
      }
      r[i] = rv;
      for (const auto& [k, c] : g) {
        jt.emplace_back(i, k, c);
        jtl[k] += c * lam[i];
      }
    }

    double f = fconst;
    for (int k = 0; k < nv; ++k) f += gradf[k] * v[k];

    double vinf = 0.0, rinf = 0.0, rdinf = 0.0, dualinf = 0.0;
    int rdarg = -1;
    for (int k = 0; k < nv; ++k) {
      vinf = std::max(vinf, std::fabs(v[k]));
      double rd = gradf[k] + jtl[k] - zl[k] + zh[k];
      if (std::fabs(rd) > rdinf) rdarg = k;
      rdinf = std::max(rdinf, std::fabs(rd));
      dualinf = std::max({dualinf, zl[k], zh[k]});
    }
    if (iter > 0 && iter % 30 == 0 && rdarg >= 0)
      log_debug("nlp stuck probe: %s v=%.6g lo=%.6g hi=%.6g zl=%.3g zh=%.3g",
                vname[rdarg].c_str(), v[rdarg], lo[rdarg], hi[rdarg], zl[rdarg],
                zh[rdarg]);
    int rarg = -1;
    for (int i = 0; i < ne; ++i) {
      if (std::fabs(r[i]) > rinf) rarg = i;
      rinf = std::max(rinf, std::fabs(r[i]));
      dualinf = std::max(dualinf, std::fabs(lam[i]));
    }
    if (iter > 0 && iter % 30 == 0 && rarg >= 0)
      log_debug("nlp stuck probe: worst row %s r=%.3e lam=%.3e",
                row_names[rarg].c_str(), r[rarg], lam[rarg]);
    gap = comp_gap();
    double feascond = rinf / (1.0 + vinf);
    double gradcond = rdinf / (1.0 + dualinf);
    double compcond = gap / (1.0 + vinf);
    double costcond = std::fabs(f - fprev) / (1.0 + std::fabs(fprev));
    if (feascond < opt.tol && gradcond < opt.tol && compcond < opt.tol &&
        costcond < opt.tol) {
      res.converged = true;
      res.msg = "converged";
      scatter(f);
      return res;
    }
    fprev = f;

    // Monotone barrier update: mu decreases only once the current barrier
    // subproblem is solved to within a factor of mu. Cutting mu on the raw
    // complementarity gap alone can drive it to machine zero while the dual
    // residual still lags, which starves the bound multipliers and lets the
    // step push straight through an activating bound.
    if (nb > 0) {
      const double mu_min = opt.tol * 1e-3;
      auto barrier_err = [&]() {
        double cm = 0.0;
        for (int k = 0; k < nv; ++k) {
          if (has_lo[k])
            cm = std::max(cm, std::fabs(zl[k] * (v[k] - lo[k]) - mu));
          if (has_hi[k])
            cm = std::max(cm, std::fabs(zh[k] * (hi[k] - v[k]) - mu));
        }
        return std::max({feascond, gradcond, cm / (1.0 + vinf)});
      };
      while (mu > mu_min && barrier_err() <= 10.0 * mu)
        mu = std::max(mu_min, std::min(opt.sigma * mu, std::pow(mu, 1.5)));
    }

    // Reduced KKT system in (dv, dlambda).
    Eigen::VectorXd rhs(N);
    for (int k = 0; k < nv; ++k) {
      double b = -gradf[k] - jtl[k];
      if (has_lo[k]) b += mu / std::max(v[k] - lo[k], 1e-14);
      if (has_hi[k]) b -= mu / std::max(hi[k] - v[k], 1e-14);
      rhs[k] = b;
    }
    for (int i = 0; i < ne; ++i) rhs[nv + i] = -r[i];

    Eigen::VectorXd sol;
    bool solved = false;
    for (int attempt = 0; attempt < 12 && !solved; ++attempt) {
      std::vector<Trip> kt = ht;
      kt.reserve(ht.size() + 2 * jt.size() + nv + ne);
      for (int k = 0; k < nv; ++k) {
        double sig = delta_p;
        // the multiplier entering the barrier diagonal is kept within a
        // factor 1e10 of mu/s, so a stale dual can neither hide a bound
        // from the step nor make it artificially stiff
        if (has_lo[k]) {
          double sl = std::max(v[k] - lo[k], 1e-14);
          double ze = std::min(std::max(zl[k], mu / (1e10 * sl)), 1e10 * mu / sl);
          sig += ze / sl;
        }
        if (has_hi[k]) {
          double sh = std::max(hi[k] - v[k], 1e-14);
          double ze = std::min(std::max(zh[k], mu / (1e10 * sh)), 1e10 * mu / sh);
          sig += ze / sh;
        }
        kt.emplace_back(k, k, sig);
      }
      for (const Trip& t : jt) {
        kt.emplace_back(nv + t.row(), t.col(), t.value());
        kt.emplace_back(t.col(), nv + t.row(), t.value());
      }
      for (int i = 0; i < ne; ++i) kt.emplace_back(nv + i, nv + i, -delta_d);
      Eigen::SparseMatrix<double> K(N, N);
      K.setFromTriplets(kt.begin(), kt.end());
      Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
      lu.compute(K);
      if (lu.info() == Eigen::Success) {
        sol = lu.solve(rhs);
        if (lu.info() == Eigen::Success && !sol.hasNaN()) {
          // one round of iterative refinement; the barrier diagonal makes
          // the system stiff near active bounds
          Eigen::VectorXd resid = rhs - K * sol;
          Eigen::VectorXd corr = lu.solve(resid);
          if (!corr.hasNaN()) sol += corr;
          solved = true;
        }
      }
      // an absurd step means the system was near singular even though the
      // factorization went through; regularize and try again
      if (solved && sol.head(nv).cwiseAbs().maxCoeff() > 1e6 * (1.0 + vinf))
        solved = false;
      if (!solved) {
        delta_p = delta_p == 0.0 ? 1e-8 : delta_p * 10.0;
        delta_d = delta_d == 0.0 ? 1e-10 : delta_d * 10.0;
        if (delta_p > 1e6) {
          res.msg = "kkt factorization failed";
          scatter(f);
          return res;
        }
      }
    }
    if (delta_p > 0.0) delta_p = delta_p > 1e-12 ? delta_p * 0.3 : 0.0;
    if (delta_d > 0.0) delta_d = delta_d > 1e-14 ? delta_d * 0.3 : 0.0;

    std::vector<double> dzl(nv, 0.0), dzh(nv, 0.0);
    double ap = 1.0, ad = 1.0;
    int apk = -1, adk = -1;
    for (int k = 0; k < nv; ++k) {
      double dv = sol[k];
      if (has_lo[k]) {
        double raw = v[k] - lo[k];
        double sl = std::max(raw, 1e-14);
        dzl[k] = mu / sl - zl[k] - zl[k] * dv / sl;
        // step limits use the raw distance so a variable parked at its
        // bound cannot be pushed across it
        if (dv < 0.0 && std::max(raw, 0.0) / -dv < ap) { ap = std::max(raw, 0.0) / -dv; apk = k; }
        if (dzl[k] < 0.0 && zl[k] / -dzl[k] < ad) { ad = zl[k] / -dzl[k]; adk = k; }
      }
      if (has_hi[k]) {
        double raw = hi[k] - v[k];
        double sh = std::max(raw, 1e-14);
        dzh[k] = mu / sh - zh[k] + zh[k] * dv / sh;
        if (dv > 0.0 && std::max(raw, 0.0) / dv < ap) { ap = std::max(raw, 0.0) / dv; apk = k; }
        if (dzh[k] < 0.0 && zh[k] / -dzh[k] < ad) { ad = zh[k] / -dzh[k]; adk = k; }
      }
    }
    if (iter > 0 && iter % 30 == 0)
      log_debug("nlp step probe: ap=%.3e(%s) ad=%.3e(%s) |dv|=%.3e mu=%.3e",
                ap, apk >= 0 ? vname[apk].c_str() : "-", ad,
                adk >= 0 ? vname[adk].c_str() : "-",
                sol.head(nv).cwiseAbs().maxCoeff(), mu);
    ap = std::min(1.0, opt.tau * ap);
    ad = std::min(1.0, opt.tau * ad);

    for (int k = 0; k < nv; ++k) {
      v[k] += ap * sol[k];
      // cancellation near a bound can land exactly on it or cross by an
      // ulp; nudge back inside so every slack stays strictly positive
      if (has_lo[k] && v[k] - lo[k] <= 0.0)
        v[k] = lo[k] + 1e-14 * (1.0 + std::fabs(lo[k]));
      if (has_hi[k] && hi[k] - v[k] <= 0.0)
        v[k] = hi[k] - 1e-14 * (1.0 + std::fabs(hi[k]));
      zl[k] += ad * dzl[k];
      zh[k] += ad * dzh[k];
      // keep the stored duals within a factor 1e10 of mu/s; an unchecked
      // dual can grow geometrically when its primal partner is parked at a
      // bound, and a starved one hides the bound from the next step
      if (has_lo[k]) {
        double sl = std::max(v[k] - lo[k], 1e-14);
        zl[k] = std::min(std::max(zl[k], mu / (1e10 * sl)), 1e10 * mu / sl);
      }
      if (has_hi[k]) {
        double sh = std::max(hi[k] - v[k], 1e-14);
        zh[k] = std::min(std::max(zh[k], mu / (1e10 * sh)), 1e10 * mu / sh);
      }
    }
    for (int i = 0; i < ne; ++i) lam[i] += ad * sol[nv + i];
    log_debug("nlp iter %d f %.8g feas %.3e grad %.3e comp %.3e cost %.3e mu %.3e",
              iter, f, feascond, gradcond, compcond, costcond, mu);
  }

  res.msg = "iteration limit";
  double f = fconst;
  for (int k = 0; k < nv; ++k) f += gradf[k] * v[k];
  scatter(f);
  return res;
}

}  // namespace gridtopo
