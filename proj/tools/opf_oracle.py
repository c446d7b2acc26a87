#!/usr/bin/env python3
"""Independent AC/DC optimal power flow recomputation.

Reads a converter-extended matpower case and solves the continuous OPF with
scipy's interior trust-region method and autodiff derivatives. Serves as a
second opinion on the C++ solver: same station layout (transformer, filter,
reactor), same loss model, no shared code. Multistart keeps it honest about
local minima.

Usage: tools/opf_oracle.py data/cases/case5_acdc.m [--starts N] [--seed S]
"""

import argparse
import re
import sys

import numpy as np

import jax

jax.config.update("jax_enable_x64", True)
import jax.numpy as jnp
from scipy.optimize import Bounds, NonlinearConstraint, minimize


def parse_matrix(text, name):
    m = re.search(r"mpc\.%s\s*=\s*\[(.*?)\];" % re.escape(name), text, re.S)
    if not m:
        return None
    rows = []
    for line in m.group(1).strip().splitlines():
        line = line.split("%")[0].strip().rstrip(";")
        if not line:
            continue
        rows.append([float(t) for t in line.split()])
    return np.array(rows)


def parse_scalar(text, name, default=None):
    m = re.search(r"mpc\.%s\s*=\s*([-\d.eE+]+)\s*;" % re.escape(name), text)
    return float(m.group(1)) if m else default


def build(case_path):
    text = open(case_path).read()
    base = parse_scalar(text, "baseMVA", 100.0)
    bus = parse_matrix(text, "bus")
    gen = parse_matrix(text, "gen")
    gencost = parse_matrix(text, "gencost")
    branch = parse_matrix(text, "branch")
    busdc = parse_matrix(text, "busdc")
    branchdc = parse_matrix(text, "branchdc")
    convdc = parse_matrix(text, "convdc")
    poles = parse_scalar(text, "dcpol", 2.0)

    id2i = {int(b[0]): i for i, b in enumerate(bus)}
    n_grid = len(bus)
    nc = len(convdc)

    # Station expansion: grid -(rtf,xtf)- filter[bf] -(rc,xc)- terminal.
    n_ac = n_grid + 2 * nc
    vmin = np.concatenate([bus[:, 12], np.repeat(convdc[:, 20], 2)])
    vmax = np.concatenate([bus[:, 11], np.repeat(convdc[:, 19], 2)])
    pd = np.concatenate([bus[:, 2] / base, np.zeros(2 * nc)])
    qd = np.concatenate([bus[:, 3] / base, np.zeros(2 * nc)])
    gs = np.concatenate([bus[:, 4] / base, np.zeros(2 * nc)])
    bs = np.concatenate([bus[:, 5] / base, np.zeros(2 * nc)])
    for c in range(nc):
        bs[n_grid + 2 * c] = convdc[c, 13]  # filter susceptance

    lines = []  # (f, t, r, x, btot, rate) with rate 0 meaning unlimited
    for b in branch:
        if b[10] == 0:
            continue
        lines.append((id2i[int(b[0])], id2i[int(b[1])], b[2], b[3], b[4], b[5] / base))
    conv_term = []
    for c in range(nc):
        grid_i = id2i[int(convdc[c, 1])]
        f_i, t_i = n_grid + 2 * c, n_grid + 2 * c + 1
        lines.append((grid_i, f_i, convdc[c, 9], convdc[c, 10], 0.0, 0.0))
        lines.append((f_i, t_i, convdc[c, 15], convdc[c, 16], 0.0, 0.0))
        conv_term.append(t_i)

    dcid2i = {int(b[0]): i for i, b in enumerate(busdc)}
    n_dc = len(busdc)
    udc_min, udc_max = busdc[:, 6], busdc[:, 5]
    dclines = []
    for b in branchdc:
        if b[8] == 0:
            continue
        dclines.append((dcid2i[int(b[0])], dcid2i[int(b[1])], b[2], b[5] / base))
    conv_dcbus = [dcid2i[int(convdc[c, 0])] for c in range(nc)]

    ng = len(gen)
    gen_bus = [id2i[int(g[0])] for g in gen]
    pg_lo, pg_hi = gen[:, 9] / base, gen[:, 8] / base
    qg_lo, qg_hi = gen[:, 4] / base, gen[:, 3] / base
    cost1 = gencost[:, 5] * base  # $/h per pu

    loss_a = convdc[:, 23] / base
    loss_b = convdc[:, 24] / base
    loss_c = convdc[:, 25] / base
    imax = convdc[:, 21]
    pac_lo, pac_hi = convdc[:, 32] / base, convdc[:, 31] / base
    qac_lo, qac_hi = convdc[:, 34] / base, convdc[:, 33] / base

    meta = dict(
        n_ac=n_ac, n_dc=n_dc, ng=ng, nc=nc, base=base, poles=poles,
        lines=lines, dclines=dclines, gen_bus=gen_bus, conv_term=conv_term,
        conv_dcbus=conv_dcbus, pd=pd, qd=qd, gs=gs, bs=bs,
        vmin=vmin, vmax=vmax, udc_min=udc_min, udc_max=udc_max,
        pg_lo=pg_lo, pg_hi=pg_hi, qg_lo=qg_lo, qg_hi=qg_hi, cost1=cost1,
        loss_a=loss_a, loss_b=loss_b, loss_c=loss_c, imax=imax,
        pac_lo=pac_lo, pac_hi=pac_hi, qac_lo=qac_lo, qac_hi=qac_hi,
        vm0=bus[:, 7], ref=[i for i, b in enumerate(bus) if b[1] == 3][0],
    )
    return meta


def solver_functions(meta):
    n_ac, n_dc = meta["n_ac"], meta["n_dc"]
    ng, nc = meta["ng"], meta["nc"]
    off_vm, off_va = 0, n_ac
    off_udc = 2 * n_ac
    off_pg = off_udc + n_dc
    off_qg = off_pg + ng
    off_pac = off_qg + ng
    off_qac = off_pac + nc
    off_ic = off_qac + nc
    off_pdc = off_ic + nc
    nx = off_pdc + nc

    lines = meta["lines"]
    dclines = meta["dclines"]

    def flows(x):
        vm, va = x[off_vm:off_vm + n_ac], x[off_va:off_va + n_ac]
        out = []
        for (f, t, r, xr, btot, _) in lines:
            g = r / (r * r + xr * xr)
            b = -xr / (r * r + xr * xr)
            d = va[f] - va[t]
            uu = vm[f] * vm[t]
            pf = g * vm[f] ** 2 - uu * (g * jnp.cos(d) + b * jnp.sin(d))
            qf = -(b + btot / 2) * vm[f] ** 2 - uu * (g * jnp.sin(d) - b * jnp.cos(d))
            pt = g * vm[t] ** 2 - uu * (g * jnp.cos(-d) + b * jnp.sin(-d))
            qt = -(b + btot / 2) * vm[t] ** 2 - uu * (g * jnp.sin(-d) - b * jnp.cos(-d))
            out.append((pf, qf, pt, qt))
        return out

    def dc_flows(x):
        u = x[off_udc:off_udc + n_dc]
        out = []
        for (f, t, r, _) in dclines:
            out.append((meta["poles"] * u[f] * (u[f] - u[t]) / r,
                        meta["poles"] * u[t] * (u[t] - u[f]) / r))
        return out

    def residuals(x):
        vm = x[off_vm:off_vm + n_ac]
        udc = x[off_udc:off_udc + n_dc]
        pg, qg = x[off_pg:off_pg + ng], x[off_qg:off_qg + ng]
        pac, qac = x[off_pac:off_pac + nc], x[off_qac:off_qac + nc]
        ic, pdc = x[off_ic:off_ic + nc], x[off_pdc:off_pdc + nc]

        p_inj = -meta["pd"] - meta["gs"] * vm ** 2
        q_inj = -meta["qd"] + meta["bs"] * vm ** 2
        p_inj = p_inj.at[jnp.array(meta["gen_bus"])].add(pg)
        q_inj = q_inj.at[jnp.array(meta["gen_bus"])].add(qg)
        p_inj = p_inj.at[jnp.array(meta["conv_term"])].add(-pac)
        q_inj = q_inj.at[jnp.array(meta["conv_term"])].add(-qac)

        fl = flows(x)
        for k, (f, t, *_rest) in enumerate(lines):
            pf, qf, pt, qt = fl[k]
            p_inj = p_inj.at[f].add(-pf)
            q_inj = q_inj.at[f].add(-qf)
            p_inj = p_inj.at[t].add(-pt)
            q_inj = q_inj.at[t].add(-qt)

        pdc_inj = jnp.zeros(n_dc)
        pdc_inj = pdc_inj.at[jnp.array(meta["conv_dcbus"])].add(-pdc)
        dfl = dc_flows(x)
        for k, (f, t, _r, _rate) in enumerate(dclines):
            pff, ptt = dfl[k]
            pdc_inj = pdc_inj.at[f].add(-pff)
            pdc_inj = pdc_inj.at[t].add(-ptt)

        vm_t = vm[jnp.array(meta["conv_term"])]
        cur = pac ** 2 + qac ** 2 - vm_t ** 2 * ic ** 2
        loss = pac + pdc - (jnp.array(meta["loss_a"]) + jnp.array(meta["loss_b"]) * ic
                            + jnp.array(meta["loss_c"]) * ic ** 2)
        ref = x[off_va + meta["ref"]]
        return jnp.concatenate([p_inj, q_inj, pdc_inj, cur, loss, jnp.array([ref])])

    def thermal(x):
        fl = flows(x)
        dfl = dc_flows(x)
        out = []
        for k, (f, t, r, xr, btot, rate) in enumerate(lines):
            if rate <= 0:
                continue
            pf, qf, pt, qt = fl[k]
            out.append(pf ** 2 + qf ** 2 - rate ** 2)
            out.append(pt ** 2 + qt ** 2 - rate ** 2)
        for k, (f, t, r, rate) in enumerate(dclines):
            if rate <= 0:
                continue
            pff, ptt = dfl[k]
            out.append(pff ** 2 - rate ** 2)
            out.append(ptt ** 2 - rate ** 2)
        return jnp.stack(out)

    def objective(x):
        pg = x[off_pg:off_pg + ng]
        return jnp.dot(jnp.array(meta["cost1"]), pg)

    lo = np.empty(nx)
    hi = np.empty(nx)
    lo[off_vm:off_vm + n_ac], hi[off_vm:off_vm + n_ac] = meta["vmin"], meta["vmax"]
    lo[off_va:off_va + n_ac], hi[off_va:off_va + n_ac] = -np.pi, np.pi
    lo[off_udc:off_udc + n_dc], hi[off_udc:off_udc + n_dc] = meta["udc_min"], meta["udc_max"]
    lo[off_pg:off_pg + ng], hi[off_pg:off_pg + ng] = meta["pg_lo"], meta["pg_hi"]
    lo[off_qg:off_qg + ng], hi[off_qg:off_qg + ng] = meta["qg_lo"], meta["qg_hi"]
    lo[off_pac:off_pac + nc], hi[off_pac:off_pac + nc] = meta["pac_lo"], meta["pac_hi"]
    lo[off_qac:off_qac + nc], hi[off_qac:off_qac + nc] = meta["qac_lo"], meta["qac_hi"]
    lo[off_ic:off_ic + nc], hi[off_ic:off_ic + nc] = 0.0, meta["imax"]
    lo[off_pdc:off_pdc + nc], hi[off_pdc:off_pdc + nc] = -5.0, 5.0

    offs = dict(vm=off_vm, va=off_va, udc=off_udc, pg=off_pg, qg=off_qg,
                pac=off_pac, qac=off_qac, ic=off_ic, pdc=off_pdc, nx=nx)
    return objective, residuals, thermal, lo, hi, offs


def start_point(meta, offs, rng=None):
    x = np.zeros(offs["nx"])
    n_ac, n_dc = meta["n_ac"], meta["n_dc"]
    x[offs["vm"]:offs["vm"] + n_ac] = 1.0
    x[offs["udc"]:offs["udc"] + n_dc] = 1.0
    x[offs["pg"]:offs["pg"] + meta["ng"]] = 0.5 * (meta["pg_lo"] + meta["pg_hi"])
    x[offs["ic"]:offs["ic"] + meta["nc"]] = 0.1
    if rng is not None:
        x[offs["vm"]:offs["vm"] + n_ac] += rng.uniform(-0.05, 0.05, n_ac)
        x[offs["va"]:offs["va"] + n_ac] = rng.uniform(-0.3, 0.3, n_ac)
        x[offs["udc"]:offs["udc"] + n_dc] += rng.uniform(-0.05, 0.05, n_dc)
        x[offs["pg"]:offs["pg"] + meta["ng"]] *= rng.uniform(0.2, 1.8, meta["ng"])
        x[offs["pac"]:offs["pac"] + meta["nc"]] = rng.uniform(-0.8, 0.8, meta["nc"])
        x[offs["qac"]:offs["qac"] + meta["nc"]] = rng.uniform(-0.4, 0.4, meta["nc"])
        x[offs["ic"]:offs["ic"] + meta["nc"]] = rng.uniform(0.0, 0.9, meta["nc"])
        x[offs["pdc"]:offs["pdc"] + meta["nc"]] = rng.uniform(-0.8, 0.8, meta["nc"])
    return x


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("case")
    ap.add_argument("--starts", type=int, default=8)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--lossb-scale", type=float, default=1.0,
                    help="extra factor on the linear loss coefficient")
    ap.add_argument("--lossc-scale", type=float, default=1.0,
                    help="extra factor on the quadratic loss coefficient")
    args = ap.parse_args()

    meta = build(args.case)
    meta["loss_b"] = meta["loss_b"] * args.lossb_scale
    meta["loss_c"] = meta["loss_c"] * args.lossc_scale
    objective, residuals, thermal, lo, hi, offs = solver_functions(meta)

    obj_j = jax.jit(objective)
    obj_g = jax.jit(jax.grad(objective))
    res_j = jax.jit(residuals)
    res_J = jax.jit(jax.jacfwd(residuals))
    th_j = jax.jit(thermal)
    th_J = jax.jit(jax.jacfwd(thermal))

    cons = [
        NonlinearConstraint(lambda x: np.array(res_j(x)), 0.0, 0.0,
                            jac=lambda x: np.array(res_J(x))),
        NonlinearConstraint(lambda x: np.array(th_j(x)), -np.inf, 0.0,
                            jac=lambda x: np.array(th_J(x))),
    ]
    bounds = Bounds(lo, hi)

    rng = np.random.default_rng(args.seed)
    best = None
    for s in range(args.starts):
        x0 = start_point(meta, offs, rng if s else None)
        r = minimize(lambda x: float(obj_j(x)), x0, jac=lambda x: np.array(obj_g(x)),
                     bounds=bounds, constraints=cons, method="trust-constr",
                     options=dict(maxiter=3000, gtol=1e-10, xtol=1e-12, verbose=0))
        feas = max(np.max(np.abs(res_j(r.x))), float(np.max(th_j(r.x))), 0.0)
        ok = r.status in (1, 2) and feas < 1e-6
        print("start %d: obj %.6f $/h  feas %.2e  %s" %
              (s, r.fun, feas, "ok" if ok else "reject(status=%d)" % r.status))
        if ok and (best is None or r.fun < best.fun):
            best = r
    if best is None:
        print("no feasible solution found")
        return 1

    print("\nbest objective: %.6f $/h" % best.fun)
    x = best.x
    base = meta["base"]
    for g in range(meta["ng"]):
        print("  gen %d: pg %.3f MW  qg %.3f MVAr" %
              (g + 1, x[offs["pg"] + g] * base, x[offs["qg"] + g] * base))
    for c in range(meta["nc"]):
        print("  conv %d: pac %.3f  qac %.3f  pdc %.3f MW  ic %.4f" %
              (c + 1, x[offs["pac"] + c] * base, x[offs["qac"] + c] * base,
               x[offs["pdc"] + c] * base, x[offs["ic"] + c]))
    print("  vm " + " ".join("%.4f" % v for v in x[offs["vm"]:offs["vm"] + meta["n_ac"]]))
    print("  udc " + " ".join("%.4f" % v for v in x[offs["udc"]:offs["udc"] + meta["n_dc"]]))
    return 0


if __name__ == "__main__":
    sys.exit(main())
