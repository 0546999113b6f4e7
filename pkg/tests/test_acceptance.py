"""End-to-end acceptance suite.

Each test covers one advertised guarantee of the package and prints a single
PASS/FAIL verdict line with the measured numbers (collected into the test log
via the -rA pytest option), plus informational lines where a check depends on
an empirically confirmed constant.
"""

import json
import subprocess
import sys
import time

import numpy as np

from stsplit import (
    ManufacturedSolution,
    ResolventConfig,
    SchemeConfig,
    SolverError,
    TimeGrid,
    anti_monotone_model,
    apply_F,
    build_context,
    build_decomposition,
    build_mesh,
    check_p_structure,
    constant_gamma,
    cosine_solution,
    h_inner,
    h_norm,
    indicator_gamma,
    interpolate_exact,
    manufactured_rhs,
    p_laplace_model,
    primal_F,
    resolvent_solve,
    run_scheme,
    shift_model,
    solve_monolithic,
)


def _verdict(num, name, ok, detail):
    print(f"[criterion {num:02d}] {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    return ok


def _manufactured_model(p, lam, mesh, grid, amplitude=1.0, gamma=None):
    model = p_laplace_model(p, lam=lam,
                            gamma=gamma if gamma is not None else constant_gamma(1.0))
    exact = cosine_solution(mesh.dim, amplitude=amplitude)
    return model.with_source(manufactured_rhs(model, exact, mesh, grid))


def test_criterion_01_decomposition_identity():
    t0 = time.perf_counter()
    mesh = build_mesh((1.0,), (64,))
    grid = TimeGrid(T=1.0, n_steps=32)
    model = _manufactured_model(3.0, 1.0, mesh, grid)
    dec = build_decomposition(mesh, 2, 0.5, c_min=0.1)
    ctx = build_context(mesh, model, grid, dec)
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(20):
        u = rng.standard_normal((grid.n_steps, mesh.n_nodes))
        total = apply_F(ctx, None, u)
        split = np.zeros_like(total)
        for ell in range(dec.q):
            split += dec.extend(ell, apply_F(ctx, ell, dec.restrict(ell, u)))
        worst = max(worst, np.linalg.norm(split - total) / np.linalg.norm(total))
    wall = time.perf_counter() - t0
    ok = worst <= 1e-11 and wall < 5.0
    assert _verdict(1, "decomposition identity",
                    ok, f"rel err {worst:.2e} over 20 fields, {wall:.2f}s")


def test_criterion_02_resolvent_nonexpansiveness():
    t0 = time.perf_counter()
    mesh = build_mesh((1.0,), (16,))
    grid = TimeGrid(T=1.0, n_steps=8)
    dec = build_decomposition(mesh, 2, 0.5, c_min=0.1)
    rng = np.random.default_rng(3)
    worst = 0.0
    for p in (2.0, 3.0):
        ctx = build_context(mesh, p_laplace_model(p, lam=1.0), grid, dec)
        for s in (0.5, 2.0, 10.0):
            rcfg = ResolventConfig(s=s)
            for i in range(50):
                g1 = rng.standard_normal((grid.n_steps, mesh.n_nodes))
                g2 = rng.standard_normal((grid.n_steps, mesh.n_nodes))
                ell = i % dec.q
                r1 = resolvent_solve(ctx, ell, g1, rcfg)
                r2 = resolvent_solve(ctx, ell, g2, rcfg)
                ratio = h_norm(ctx, r1 - r2) / h_norm(ctx, g1 - g2)
                worst = max(worst, s * ratio)
    wall = time.perf_counter() - t0
    ok = worst <= 1.0 + 1e-8 and wall < 60.0
    assert _verdict(2, "resolvent nonexpansiveness",
                    ok, f"max s*ratio {worst:.10f} over 300 pairs, {wall:.1f}s")


def _alternating_problem():
    # short horizon and wide overlap give a usable contraction rate
    mesh = build_mesh((1.0,), (32,))
    grid = TimeGrid(T=0.25, n_steps=8)
    model = _manufactured_model(3.0, 1.0, mesh, grid)
    dec = build_decomposition(mesh, 2, 0.9, c_min=0.1)
    return build_context(mesh, model, grid, dec)


def test_criterion_03_alternating_convergence():
    t0 = time.perf_counter()
    ctx = _alternating_problem()
    u_h = solve_monolithic(ctx)

    pr = run_scheme(ctx, SchemeConfig(scheme="PR", s=1.0, max_sweeps=200,
                                      stop_tol=0.0), u_ref=u_h)
    v = pr.trace.v_sequence()
    w = pr.trace.w_sequence()
    slack = 1e-10 * (1.0 + v[0] ** 2)
    mono_ok = all(v[n + 1] ** 2 <= w[n] ** 2 + slack
                  and w[n] ** 2 <= v[n] ** 2 + slack
                  for n in range(len(v) - 1))
    pr_k = pr.trace.err_k_total[-1]

    dr = run_scheme(ctx, SchemeConfig(scheme="DR", s=1.0, max_sweeps=200,
                                      stop_tol=0.0), u_ref=u_h)
    dr_k = dr.trace.err_k_total[-1]

    wall = time.perf_counter() - t0
    ok = mono_ok and pr_k <= 1e-8 and dr_k <= 1e-8 and wall < 120.0
    assert _verdict(3, "alternating scheme convergence", ok,
                    f"PR transformed norm non-increasing over 200 sweeps: "
                    f"{mono_ok}, final sum k_l: PR {pr_k:.2e}, DR {dr_k:.2e}, "
                    f"{wall:.1f}s")


def test_criterion_04_equilibrium_preservation():
    ctx = _alternating_problem()
    u_h = solve_monolithic(ctx)
    # 10x the resolvent Newton absolute residual tolerance (1e-12)
    tol = 1e-11
    drifts = {}
    for scheme in ("PR", "DR"):
        cfg = SchemeConfig(scheme=scheme, s=1.0, max_sweeps=10, stop_tol=1e-16)
        res = run_scheme(ctx, cfg, u_ref=u_h, initial=u_h)
        drifts[scheme] = max(res.trace.err_H)
    ok = all(d <= tol for d in drifts.values())
    assert _verdict(4, "equilibrium preservation", ok,
                    f"max drift over 10 sweeps: PR {drifts['PR']:.2e}, "
                    f"DR {drifts['DR']:.2e}, bound {tol:.0e}")


def test_criterion_05_shifted_additive_envelope():
    t0 = time.perf_counter()
    mesh = build_mesh((1.0,), (48,))
    grid = TimeGrid(T=0.25, n_steps=32)
    model = _manufactured_model(2.0, 0.0, mesh, grid)
    gamma0, c_min = 1.0, 0.1

    ok = True
    details = []
    for q in (2, 3):
        dec = build_decomposition(mesh, q, 0.6, c_min=c_min)
        ctx = build_context(mesh, model, grid, dec)
        ctx_hat = build_context(mesh, shift_model(model, dec), grid, dec,
                                reaction_shift=float(q))
        u_hat_h = solve_monolithic(ctx_hat)
        up = np.exp(q * grid.times)[:, None]
        u_ref = up * u_hat_h

        # sampled confirmation that every shifted subdomain operator is
        # H-monotone with constant >= q * c_min * gamma0 on its own nodes
        c_ing = q * c_min * gamma0
        rng = np.random.default_rng(1)
        sampled = np.inf
        for _ in range(5):
            x = rng.standard_normal(u_ref.shape)
            y = rng.standard_normal(u_ref.shape)
            for ell in range(q):
                dF = primal_F(ctx_hat, ell, x) - primal_F(ctx_hat, ell, y)
                num = h_inner(ctx, dF, x - y)
                own = np.zeros_like(x)
                nodes = dec.subdomains[ell].nodes
                own[:, nodes] = (x - y)[:, nodes]
                sampled = min(sampled, num / h_norm(ctx, own) ** 2)
        ok &= sampled >= c_ing

        # coverage-deficit correction turns the per-subdomain ingredient
        # into a constant valid for the averaged sweep map
        theta = 1.0 - 1.0 / q
        C_F = sum(h_norm(ctx, primal_F(ctx_hat, ell, u_hat_h)) ** 2
                  for ell in range(q)) / q

        errs = []
        for N in (16, 64, 256):
            s = float(np.sqrt(N))
            res = run_scheme(ctx, SchemeConfig(scheme="AS_shifted", s=s,
                                               max_sweeps=N, stop_tol=0.0),
                             u_ref=u_ref)
            err_un = res.trace.err_H[-1]
            err_hat2 = h_norm(ctx, (1.0 / up) * res.u - u_hat_h) ** 2
            c_star = c_min * gamma0 / (1.0 + 2.0 * c_ing * theta / s)
            env = ((1.0 + 2.0 * c_star / s) ** (-N) * h_norm(ctx, u_hat_h) ** 2
                   + C_F / (2.0 * c_star * s))
            ok &= err_hat2 <= env
            errs.append(err_un)
            print(f"  q={q} N={N:3d}: confirmed constant c={c_star:.4f}, "
                  f"err {err_un:.4e}, shifted err^2 {err_hat2:.4e} "
                  f"<= envelope {env:.4e}")
        print(f"  q={q}: sampled subdomain monotonicity ratio {sampled:.1f} "
              f">= ingredient {c_ing:.2f}")
        ok &= errs[0] > errs[1] > errs[2]
        details.append(f"q={q} errs " + ">".join(f"{e:.3e}" for e in errs))

    wall = time.perf_counter() - t0
    ok = ok and wall < 600.0
    assert _verdict(5, "shifted additive envelope", ok,
                    "; ".join(details) + f", {wall:.1f}s")


def test_criterion_06_degenerate_capacity():
    mesh = build_mesh((1.0,), (32,))
    grid = TimeGrid(T=0.1, n_steps=8)
    model = _manufactured_model(3.0, 1.0, mesh, grid, amplitude=0.25,
                                gamma=indicator_gamma(0.0, 0.5))
    dec = build_decomposition(mesh, 2, 1.0, c_min=0.1)
    ctx = build_context(mesh, model, grid, dec)
    try:
        u_h = solve_monolithic(ctx)
        res = run_scheme(ctx, SchemeConfig(scheme="PR", s=8.0, max_sweeps=200,
                                           stop_tol=0.0), u_ref=u_h)
        err = res.trace.err_H[-1]
        ok = err <= 1e-6
        detail = f"capacity vanishes on half the domain, final err_H {err:.2e}"
    except SolverError as exc:
        ok, detail = False, f"solver failure: {exc}"
    assert _verdict(6, "degenerate capacity", ok, detail)


def test_criterion_07_structural_invariants():
    tol = 1e-12
    worst = {"pou_a": 0.0, "pou_b": 0.0, "pou_g": 0.0, "capacity": 0.0,
             "adjointness": 0.0}
    rng = np.random.default_rng(9)
    cases = (
        (build_mesh((1.0,), (24,)), 3, 0.5),
        (build_mesh((1.0, 1.0), (8, 8)), 2, 0.5),
    )
    for mesh, q, overlap in cases:
        grid = TimeGrid(T=1.0, n_steps=3)
        model = p_laplace_model(3.0, lam=1.0,
                                gamma=lambda x: 1.0 + np.asarray(x)[..., 0] ** 2)
        dec = build_decomposition(mesh, q, overlap, c_min=0.1)
        ctx = build_context(mesh, model, grid, dec)

        a = sum(dec.weights[ell].a for ell in range(q))
        b = sum(dec.weights[ell].b_elem for ell in range(q))
        g = sum(dec.weights[ell].g_node for ell in range(q))
        worst["pou_a"] = max(worst["pou_a"], float(np.max(np.abs(a - 1.0))))
        worst["pou_b"] = max(worst["pou_b"], float(np.max(np.abs(b - 1.0))))
        worst["pou_g"] = max(worst["pou_g"], float(np.max(np.abs(g - 1.0))))

        cap_sum = np.zeros(mesh.n_nodes)
        for ell in range(q):
            bundle = ctx.bundle(ell)
            np.add.at(cap_sum, bundle.nodes, bundle.cap)
        cap_ref = ctx.bundle().cap
        scale = max(1.0, float(np.max(np.abs(cap_ref))))
        worst["capacity"] = max(worst["capacity"],
                                float(np.max(np.abs(cap_sum - cap_ref))) / scale)

        for _ in range(10):
            v = rng.standard_normal((grid.n_steps, mesh.n_nodes))
            for ell in range(q):
                ul = rng.standard_normal(
                    (grid.n_steps, dec.subdomains[ell].nodes.size))
                lhs = h_inner(ctx, dec.extend(ell, ul), v)
                rhs = h_inner(ctx, ul, dec.restrict(ell, v), ell=ell)
                worst["adjointness"] = max(
                    worst["adjointness"],
                    abs(lhs - rhs) / max(1.0, abs(lhs)))

    ok = all(val <= tol for val in worst.values())
    assert _verdict(7, "structural invariants", ok,
                    ", ".join(f"{k} {v:.2e}" for k, v in worst.items())
                    + " on 1D q=3 and 2D 8x8 q=2")


def test_criterion_08_p_structure_sampling():
    ok = True
    margins = []
    for p in (2.0, 3.0, 4.0):
        report = check_p_structure(p_laplace_model(p, lam=1.0),
                                   num_samples=10_000, seed=5, dim=2)
        ok &= report.passed
        margins.append(f"p={p:g} worst {min(report.worst_margins.values()):.1e}")
    mutant = check_p_structure(anti_monotone_model(), num_samples=10_000,
                               seed=5, dim=1)
    ok &= not mutant.passed
    assert _verdict(8, "pointwise structure sampling", ok,
                    "; ".join(margins) + "; anti-monotone mutant rejected: "
                    f"{not mutant.passed}")


def _discretization_error(exact, cells, nt):
    mesh = build_mesh((1.0,), (cells,))
    grid = TimeGrid(T=1.0, n_steps=nt)
    model = p_laplace_model(2.0, lam=1.0)
    model = model.with_source(manufactured_rhs(model, exact, mesh, grid))
    ctx = build_context(mesh, model, grid)
    u_h = solve_monolithic(ctx)
    return h_norm(ctx, u_h - interpolate_exact(exact, mesh, grid))


def _quadratic_time_solution():
    def u(x, t):
        return t * t * np.cos(np.pi * np.asarray(x)[..., 0])

    def du_dt(x, t):
        return 2.0 * t * np.cos(np.pi * np.asarray(x)[..., 0])

    def grad(x, t):
        x = np.asarray(x)
        out = np.empty(x.shape)
        out[..., 0] = -t * t * np.pi * np.sin(np.pi * x[..., 0])
        return out

    return ManufacturedSolution(u, du_dt, grad)


def test_criterion_09_discretization_sanity():
    exact = cosine_solution(1)
    errs = [_discretization_error(exact, c, n)
            for c, n in ((16, 4), (32, 8), (64, 16), (128, 32))]
    mono = all(errs[i] > errs[i + 1] for i in range(3))

    # the cosine solution is linear in t (integrated exactly by implicit
    # Euler), so measure the temporal order on a time-quadratic solution
    # with the spatial error frozen out on a fine mesh
    terrs = [_discretization_error(_quadratic_time_solution(), 256, n)
             for n in (4, 8, 16)]
    torders = [float(np.log2(terrs[i] / terrs[i + 1])) for i in range(2)]

    ok = mono and min(torders) >= 0.8
    assert _verdict(9, "discretization sanity", ok,
                    "errors " + ">".join(f"{e:.2e}" for e in errs)
                    + f", temporal orders {torders[0]:.2f}, {torders[1]:.2f}")


def test_criterion_10_thread_determinism(tmp_path):
    outputs = {}
    for threads in (1, 4):
        csv_path = tmp_path / f"trace_{threads}.csv"
        config = {
            "mesh": {"dim": 1, "extent": [1.0], "cells": [24]},
            "time": {"T": 0.5, "N_t": 4},
            "model": {"name": "p_laplace", "p": 3.0, "lambda": 1.0},
            "source": {"name": "custom", "amplitude": 0.5, "mode": 2,
                       "decay": 1.0},
            "decomposition": {"q": 3, "overlap_fraction": 0.5},
            "scheme": {"scheme": "AS", "s": 2.0, "max_sweeps": 5,
                       "stop_tol": 0.0},
            "output": {"csv_path": str(csv_path),
                       "json_summary_path": str(tmp_path / f"s{threads}.json")},
        }
        cfg_path = tmp_path / f"cfg_{threads}.json"
        cfg_path.write_text(json.dumps(config))
        proc = subprocess.run(
            [sys.executable, "-m", "stsplit", "run", str(cfg_path),
             "--threads", str(threads)],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outputs[threads] = csv_path.read_text().strip().split("\n")

    header = outputs[1][0].split(",")
    wall_col = header.index("wall_ms")
    assert outputs[4][0] == outputs[1][0]
    assert len(outputs[1]) == len(outputs[4])
    worst = 0.0
    for row1, row4 in zip(outputs[1][1:], outputs[4][1:]):
        c1, c4 = row1.split(","), row4.split(",")
        for j, (a, b) in enumerate(zip(c1, c4)):
            if j == wall_col:
                continue  # timing noise is the one permitted difference
            if a == "" or b == "":
                assert a == b
            else:
                worst = max(worst, abs(float(a) - float(b)))
    ok = worst <= 1e-14
    assert _verdict(10, "thread-count determinism", ok,
                    f"max per-entry difference {worst:.1e} over "
                    f"{len(outputs[1]) - 1} sweeps")
