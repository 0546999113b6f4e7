"""Discretization orders from manufactured solutions.

Picks an exact solution, generates the matching source densities by
substitution, solves, and measures the error against the interpolated
exact field.  Two experiments:

  1. simultaneous space-time refinement on a time-linear solution, where
     implicit Euler is exact and the spatial O(h^2) rate of P1 elements
     shows cleanly;
  2. time refinement on a fixed fine mesh for a time-quadratic solution,
     which isolates the O(dt) rate of implicit Euler.

Run:  python3 demos/manufactured_convergence.py
"""

import numpy as np

from stsplit import (
    ManufacturedSolution,
    TimeGrid,
    build_context,
    build_mesh,
    cosine_solution,
    h_norm,
    interpolate_exact,
    manufactured_rhs,
    p_laplace_model,
    solve_monolithic,
)


def error_for(exact, cells, nt):
    mesh = build_mesh((1.0,), (cells,))
    grid = TimeGrid(T=1.0, n_steps=nt)
    model = p_laplace_model(2.0, lam=1.0)
    model = model.with_source(manufactured_rhs(model, exact, mesh, grid))
    ctx = build_context(mesh, model, grid)
    u_h = solve_monolithic(ctx)
    return h_norm(ctx, u_h - interpolate_exact(exact, mesh, grid))


def quadratic_time():
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


def report(title, pairs, errs):
    print(title)
    prev = None
    for (label, err) in zip(pairs, errs):
        order = "" if prev is None else f"  order {np.log2(prev / err):5.2f}"
        print(f"  {label:>12s}  err {err:.4e}{order}")
        prev = err


def main():
    grids = ((16, 4), (32, 8), (64, 16), (128, 32))
    errs = [error_for(cosine_solution(1), c, n) for c, n in grids]
    report("space-time refinement, time-linear solution:",
           [f"{c}x{n}" for c, n in grids], errs)

    nts = (4, 8, 16, 32)
    errs = [error_for(quadratic_time(), 256, n) for n in nts]
    report("\ntime refinement at 256 cells, time-quadratic solution:",
           [f"N_t={n}" for n in nts], errs)


if __name__ == "__main__":
    main()
