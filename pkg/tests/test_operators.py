import numpy as np
import pytest

from conftest import make_problem, random_field
from stsplit import (
    ConfigurationError,
    TimeGrid,
    apply_A,
    apply_F,
    build_context,
    build_decomposition,
    build_mesh,
    constant_gamma,
    cosine_solution,
    h_inner,
    h_norm,
    interpolate_exact,
    k_functional,
    manufactured_rhs,
    p_laplace_model,
    primal_F,
    v_norm_p,
)


def test_time_grid_consistency():
    grid = TimeGrid(T=2.0, n_steps=8)
    assert abs(grid.n_steps * grid.dt - grid.T) <= 1e-14
    np.testing.assert_allclose(grid.times, 0.25 * np.arange(1, 9))
    with pytest.raises(ConfigurationError):
        TimeGrid(T=0.0, n_steps=4)
    with pytest.raises(ConfigurationError):
        TimeGrid(T=1.0, n_steps=0)


def test_apply_A_zero_field_is_zero():
    _, _, _, _, ctx = make_problem(p=3.0, lam=2.0)
    r = apply_A(ctx, None, 0, np.zeros(ctx.mesh.n_nodes))
    assert np.all(r == 0.0)
    r0 = apply_A(ctx, 0, 1, np.zeros(ctx.bundle(0).n_nodes))
    assert np.all(r0 == 0.0)


def test_apply_A_matches_hand_assembly():
    # p = 2, lam = 0, unit weights: the dual action is stiffness + consistent
    # mass, both assembled by hand on the 4-element interval
    mesh = build_mesh((1.0,), (4,))
    grid = TimeGrid(T=1.0, n_steps=1)
    ctx = build_context(mesh, p_laplace_model(2.0), grid)
    h = 0.25
    n = mesh.n_nodes
    K = np.zeros((n, n))
    M = np.zeros((n, n))
    for e in range(4):
        K[e:e + 2, e:e + 2] += np.array([[1.0, -1.0], [-1.0, 1.0]]) / h
        M[e:e + 2, e:e + 2] += np.array([[2.0, 1.0], [1.0, 2.0]]) * h / 6.0
    rng = np.random.default_rng(0)
    for _ in range(5):
        u = rng.standard_normal(n)
        np.testing.assert_allclose(apply_A(ctx, None, 0, u), (K + M) @ u,
                                   rtol=1e-12, atol=1e-13)


def test_apply_A_monotone_pairing():
    _, grid, _, _, ctx = make_problem(cells=12, n_steps=2, p=3.0, lam=1.0)
    rng = np.random.default_rng(1)
    for ell in (None, 0, 1):
        n = ctx.bundle(ell).n_nodes
        for _ in range(50):
            u = rng.standard_normal(n)
            v = rng.standard_normal(n)
            gap = float(np.dot(apply_A(ctx, ell, 0, u) - apply_A(ctx, ell, 0, v),
                               u - v))
            assert gap >= -1e-12


def test_apply_F_zero_solution_zero_residual():
    _, grid, _, _, ctx = make_problem(p=3.0)
    u = np.zeros((grid.n_steps, ctx.mesh.n_nodes))
    assert np.all(apply_F(ctx, None, u) == 0.0)


def test_apply_F_rejects_mismatched_fields():
    _, grid, _, _, ctx = make_problem()
    with pytest.raises(ValueError):
        apply_F(ctx, None, np.zeros((grid.n_steps + 1, ctx.mesh.n_nodes)))
    with pytest.raises(ValueError):
        h_inner(ctx, np.zeros((grid.n_steps, 3)), np.zeros((grid.n_steps, 3)))


def test_decomposition_identity_small():
    # the weighted subdomain residuals sum to the global residual
    mesh, grid, model, dec, ctx = make_problem(
        cells=16, n_steps=3, p=3.0, lam=1.0, source="cos")
    rng = np.random.default_rng(2)
    for _ in range(5):
        u = random_field(rng, grid, mesh)
        total = np.zeros_like(u)
        for ell in range(dec.q):
            total += dec.extend(ell, apply_F(ctx, ell, dec.restrict(ell, u)))
        full = apply_F(ctx, None, u)
        rel = np.max(np.abs(total - full)) / np.max(np.abs(full))
        assert rel <= 1e-11


def test_h_inner_point_values():
    mesh, grid, _, _, ctx = make_problem(cells=8, n_steps=5, T=1.0)
    ones = np.ones((grid.n_steps, mesh.n_nodes))
    assert h_inner(ctx, ones, ones) == pytest.approx(1.0, rel=1e-13)
    u = np.zeros_like(ones)
    v = np.zeros_like(ones)
    u[:, 2] = 1.0
    v[:, 5] = 1.0  # disjoint nodal support
    assert h_inner(ctx, u, v) == 0.0
    # single hat: T times its lumped weight
    assert h_inner(ctx, u, u) == pytest.approx(
        grid.T * mesh.lumped_mass[2], rel=1e-13)


def test_v_norm_values_and_homogeneity():
    mesh = build_mesh((1.0,), (10,))
    grid = TimeGrid(T=2.0, n_steps=5)
    dec = build_decomposition(mesh, 2, 0.4, c_min=0.1)
    for p in (2.0, 3.0):
        ctx = build_context(mesh, p_laplace_model(p), grid, dec)
        assert v_norm_p(ctx, None, np.zeros((5, mesh.n_nodes))) == 0.0
        # constant field: gradient term drops, reaction term integrates b
        ones = np.ones((5, dec.subdomains[0].nodes.size))
        # int b_1 = 0.4 exclusive + half of the 0.2-wide overlap ramp
        assert v_norm_p(ctx, 0, ones) == pytest.approx(
            (grid.T * 0.5) ** (1.0 / p), rel=1e-13)
        assert v_norm_p(ctx, None, np.ones((5, mesh.n_nodes))) == pytest.approx(
            (grid.T * 1.0) ** (1.0 / p), rel=1e-13)
        rng = np.random.default_rng(3)
        u = rng.standard_normal((5, mesh.n_nodes))
        assert v_norm_p(ctx, None, 2.5 * u) == pytest.approx(
            2.5 * v_norm_p(ctx, None, u), rel=1e-12)


def test_k_functional_is_scaled_norm_power():
    mesh, grid, model, dec, ctx = make_problem(cells=12, n_steps=3, p=3.0)
    rng = np.random.default_rng(4)
    u = random_field(rng, grid, mesh)
    local = u[:, dec.subdomains[1].nodes]
    expected = model.mono_const * v_norm_p(ctx, 1, local) ** 3.0
    assert k_functional(ctx, 1, u) == pytest.approx(expected, rel=1e-12)
    assert k_functional(ctx, 1, u, constant=0.5) == pytest.approx(
        0.5 * v_norm_p(ctx, 1, local) ** 3.0, rel=1e-12)


@pytest.mark.parametrize("p", [2.0, 3.0])
def test_k_monotonicity_of_weighted_operator(p):
    # <A_l u - A_l v, u - v> >= c ||u - v||_{V_l}^p with the confirmed
    # constant c = 2^(2-p); the pairing is summed over levels with dt weight
    mesh, grid, model, dec, ctx = make_problem(cells=12, n_steps=3, p=p, lam=1.0)
    rng = np.random.default_rng(5)
    print(f"confirmed monotonicity constant for p={p}: {model.mono_const}")
    for ell in range(dec.q):
        n = ctx.bundle(ell).n_nodes
        for _ in range(10):
            u = rng.standard_normal((grid.n_steps, n))
            v = rng.standard_normal((grid.n_steps, n))
            pairing = grid.dt * sum(
                float(np.dot(apply_A(ctx, ell, k, u[k]) - apply_A(ctx, ell, k, v[k]),
                             u[k] - v[k]))
                for k in range(grid.n_steps))
            bound = model.mono_const * v_norm_p(ctx, ell, u - v) ** p
            assert pairing >= bound - 1e-10 * (1.0 + abs(pairing))


def test_time_difference_accretive():
    # <cap (u_k - u_{k-1})/dt, u>_H >= 0 given the zero initial state
    mesh, grid, _, _, ctx = make_problem(cells=10, n_steps=6)
    cap = ctx.bundle(None).cap
    rng = np.random.default_rng(6)
    for _ in range(25):
        u = random_field(rng, grid, mesh)
        du = np.diff(np.vstack([np.zeros(mesh.n_nodes), u]), axis=0) / grid.dt
        pairing = grid.dt * float(np.sum(cap * du * u))
        assert pairing >= -1e-12 * h_norm(ctx, u) ** 2


def test_coercivity_trend_for_large_fields():
    mesh, grid, model, dec, ctx = make_problem(cells=12, n_steps=3, p=3.0, lam=1.0)
    rng = np.random.default_rng(7)
    for ell in range(dec.q):
        n = ctx.bundle(ell).n_nodes
        u = 10.0 * rng.standard_normal((grid.n_steps, n))
        energy = grid.dt * sum(
            float(np.dot(apply_A(ctx, ell, k, u[k]), u[k]))
            for k in range(grid.n_steps))
        assert energy / v_norm_p(ctx, ell, u) ** 3.0 >= model.mono_const


def test_capacity_splits_across_subdomains():
    mesh = build_mesh((1.0,), (20,))
    grid = TimeGrid(T=1.0, n_steps=2)
    gamma = lambda x: 1.0 + np.asarray(x)[..., 0] ** 2
    dec = build_decomposition(mesh, 2, 0.4)
    ctx = build_context(mesh, p_laplace_model(2.0, gamma=gamma), grid, dec)
    cap_sum = np.zeros(mesh.n_nodes)
    for ell in range(dec.q):
        b = ctx.bundle(ell)
        np.add.at(cap_sum, b.nodes, b.cap)
    cap = ctx.bundle(None).cap
    assert np.max(np.abs(cap_sum - cap)) <= 1e-12 * max(1.0, cap.max())
    assert np.all(cap >= 0.0)
    assert np.all(ctx.bundle(None).m > 0.0)


def test_manufactured_residual_decays_under_refinement():
    norms = []
    for cells, nt in ((16, 4), (32, 8), (64, 16)):
        mesh = build_mesh((1.0,), (cells,))
        grid = TimeGrid(T=1.0, n_steps=nt)
        model = p_laplace_model(2.0, gamma=constant_gamma(1.0))
        exact = cosine_solution(1)
        model = model.with_source(manufactured_rhs(model, exact, mesh, grid))
        ctx = build_context(mesh, model, grid)
        norms.append(h_norm(ctx, primal_F(ctx, None, interpolate_exact(exact, mesh, grid))))
    assert norms[0] > norms[1] > norms[2]
    assert norms[2] <= norms[0] / 4.0
