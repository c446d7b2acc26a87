#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "gridtopo/log.hpp"
#include "gridtopo/lp.hpp"

namespace gridtopo {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// scale * (affine expression) accumulated into a coefficient map; the
// constant part is returned so the caller can move it to the rhs.
double accumulate(std::map<int, double>& coef, const AffExpr& e, double scale) {
  for (const LinTerm& t : e.lin) coef[t.v] += scale * t.c;
  return scale * e.c;
}

LpRow make_row(const std::map<int, double>& coef, double lb, double ub) {
  LpRow row;
  row.lb = lb;
  row.ub = ub;
  for (const auto& [v, c] : coef)
    if (std::fabs(c) > 1e-12) row.a.push_back({c, v});
  return row;
}

// a'x >= 0 for a nontrivial affine; returns false when the expression is a
// bare constant (nothing to cut, possibly structurally infeasible).
bool nonneg_row(const AffExpr& e, LpRow& out) {
  std::map<int, double> coef;
  double k = accumulate(coef, e, 1.0);
  out = make_row(coef, -k, kInf);
  return !out.a.empty();
}

// Tangent cuts taken at nearby points are almost identical and together they
// stall the simplex with degenerate pivots, so near-duplicates are dropped.
// The offset takes part in the comparison: parallel rows with different
// right-hand sides are distinct cuts (one dominates) and both may stay.
bool near_duplicate(const LpRow& a, const LpRow& b) {
  const double ra = std::isfinite(a.ub) ? a.ub : -a.lb;
  const double rb = std::isfinite(b.ub) ? b.ub : -b.lb;
  const double sa = std::isfinite(a.ub) ? 1.0 : -1.0;
  const double sb = std::isfinite(b.ub) ? 1.0 : -1.0;
  double dot = ra * rb, na = ra * ra, nb = rb * rb;
  size_t i = 0, j = 0;
  while (i < a.a.size() && j < b.a.size()) {
    if (a.a[i].v == b.a[j].v) {
      dot += sa * a.a[i].c * sb * b.a[j].c;
      ++i, ++j;
    } else if (a.a[i].v < b.a[j].v) {
      ++i;
    } else {
      ++j;
    }
  }
  for (const auto& t : a.a) na += t.c * t.c;
  for (const auto& t : b.a) nb += t.c * t.c;
  if (na <= 0.0 || nb <= 0.0) return false;
  return dot > 0.0 && dot * dot > (1.0 - 1e-9) * na * nb;
}

}  // namespace

ConicResult conic_solve(const LpProblem& base, const std::vector<Cone>& cones,
                        const ConicOptions& opt, std::vector<LpRow>& pool,
                        const LpBasis* warm) {
  ConicResult res;
  const int n = base.num_cols();

  if (pool.empty()) {
    // Seed the pool with the nonnegativity halves of every cone once; the
    // tangent cuts below are only valid on that side.
    for (const Cone& cn : cones) {
      LpRow r;
      if (nonneg_row(cn.x, r)) pool.push_back(r);
      if (nonneg_row(cn.y, r)) pool.push_back(r);
    }
  }

  LpBasis cur;
  bool have_basis = false;
  if (warm && !warm->basis.empty()) {
    cur = *warm;
    have_basis = true;
  }

  for (int round = 0;; ++round) {
    LpProblem p = base;
    p.rows.insert(p.rows.end(), pool.begin(), pool.end());
    if (have_basis && (int)cur.basis.size() != (int)p.rows.size()) {
      // Pool grew since the basis was taken (another node added cuts):
      // start the extra rows with their slacks basic.
      size_t have = cur.basis.size();
      for (size_t i = have; i < p.rows.size(); ++i) {
        cur.basis.push_back(n + (int)i);
        cur.vstat.push_back(0);
      }
    }

    LpResult lr = lp_solve(p, opt.lp, have_basis ? &cur : nullptr);
    res.status = lr.status;
    res.lp_iters += lr.iters;
    res.rounds = round + 1;
    if (lr.status != LpStatus::Optimal) {
      log_debug("conic: lp status %d in round %d (%d iters, %zu pool rows)",
                (int)lr.status, round, lr.iters, pool.size());
      return res;
    }

    res.obj = lr.obj;
    res.x = lr.x;
    cur = lr.basis;
    have_basis = true;

    double worst = 0.0;
    std::vector<std::pair<double, LpRow>> cand;
    for (const Cone& cn : cones) {
      double xh = eval_affine(cn.x, lr.x);
      double yh = eval_affine(cn.y, lr.x);
      double usq = 0.0;
      std::vector<double> uh(cn.u.size());
      for (size_t k = 0; k < cn.u.size(); ++k) {
        uh[k] = eval_affine(cn.u[k], lr.x);
        usq += uh[k] * uh[k];
      }
      double viol = std::max({usq - xh * yh, -xh, -yh});
      worst = std::max(worst, viol);
      if (viol <= opt.cone_tol) continue;

      // Second-order-cone face ||(2u, x-y)|| <= x+y; the supporting
      // hyperplane at the current point is grad . (x,y,u) <= 0 because the
      // residual is positively homogeneous.
      double rho = std::sqrt(4.0 * usq + (xh - yh) * (xh - yh));
      std::map<int, double> coef;
      double k = 0.0;
      if (rho < 1e-14) {
        continue;  // only negativity remains; the seeded rows carry it
      }
      k += accumulate(coef, cn.x, (xh - yh) / rho - 1.0);
      k += accumulate(coef, cn.y, -(xh - yh) / rho - 1.0);
      for (size_t j = 0; j < cn.u.size(); ++j)
        k += accumulate(coef, cn.u[j], 4.0 * uh[j] / rho);
      LpRow cut = make_row(coef, -kInf, -k);
      if (cut.a.empty()) continue;
      cand.emplace_back(viol, std::move(cut));
    }
    res.worst_violation = worst;

    std::stable_sort(cand.begin(), cand.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    size_t added = 0;
    for (auto& [viol, cut] : cand) {
      if (added >= 16) break;
      bool dup = false;
      for (const LpRow& r : pool)
        if (near_duplicate(cut, r)) {
          dup = true;
          break;
        }
      if (dup) continue;
      pool.push_back(std::move(cut));
      ++added;
    }

    if (worst <= opt.cone_tol) return res;
    if (added == 0 || round + 1 >= opt.max_rounds) {
      // No progress is possible or the budget ran out. Every pool row is
      // valid for the cones, so the last objective is still a lower bound.
      log_info("conic: stopping with residual %.3e after %d rounds", worst,
               res.rounds);
      return res;
    }
  }
}

}  // namespace gridtopo
