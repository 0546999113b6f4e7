"""Shared problem builders for the test suite."""

import numpy as np

from stsplit import (
    TimeGrid,
    build_context,
    build_decomposition,
    build_mesh,
    constant_gamma,
    cosine_solution,
    manufactured_rhs,
    p_laplace_model,
)


def make_problem(cells=16, n_steps=4, T=1.0, p=2.0, lam=0.0, gamma=None,
                 q=2, overlap=0.5, c_min=0.1, source=None, amplitude=1.0):
    """1D problem bundle (mesh, grid, model, dec, ctx).

    source: None keeps the homogeneous equation, "cos" attaches the
    manufactured cosine load with the given amplitude.
    """
    mesh = build_mesh((1.0,), (cells,))
    grid = TimeGrid(T=T, n_steps=n_steps)
    model = p_laplace_model(p, lam=lam,
                            gamma=gamma if gamma is not None else constant_gamma(1.0))
    if source == "cos":
        exact = cosine_solution(1, amplitude=amplitude)
        model = model.with_source(manufactured_rhs(model, exact, mesh, grid))
    dec = build_decomposition(mesh, q, overlap, c_min=c_min)
    ctx = build_context(mesh, model, grid, dec)
    return mesh, grid, model, dec, ctx


def random_field(rng, grid, mesh, scale=1.0):
    return scale * rng.standard_normal((grid.n_steps, mesh.n_nodes))
