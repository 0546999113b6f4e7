"""Coefficient models with p-structure and source-term functionals.

A model bundles the flux alpha(x, t, z), the reaction beta(x, t, y), the
capacity coefficient gamma(x) >= 0, and a source given by a pair of
densities (eta0, eta) that pair with test functions and their gradients.
All callables are numpy-vectorized: x has shape (..., dim), z has shape
(..., dim), y and t broadcast.
"""

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class SourceTerm:
    """Load densities: <f, v> = integral of eta0*v + eta . grad(v)."""

    eta0: Callable  # (x, t) -> (...)
    eta: Callable  # (x, t) -> (..., dim)


def zero_source():
    """Source with both densities identically zero."""
    return SourceTerm(
        eta0=lambda x, t: np.zeros(np.shape(x)[:-1]),
        eta=lambda x, t: np.zeros(np.shape(x)),
    )


def constant_gamma(value):
    """Spatially constant capacity coefficient."""
    value = float(value)
    if value < 0.0:
        raise ConfigurationError("gamma must be nonnegative")
    return lambda x: np.full(np.shape(x)[:-1], value)


def indicator_gamma(zero_lo, zero_hi, value=1.0, axis=0):
    """Capacity that vanishes for x[axis] in [zero_lo, zero_hi) and equals
    value elsewhere.  Models an elliptic region inside a parabolic problem."""
    zero_lo, zero_hi, value = float(zero_lo), float(zero_hi), float(value)
    if value < 0.0:
        raise ConfigurationError("gamma must be nonnegative")

    def gamma(x):
        coord = np.asarray(x)[..., axis]
        return np.where((coord >= zero_lo) & (coord < zero_hi), 0.0, value)

    return gamma


@dataclass(frozen=True)
class PStructureModel:
    """Nonlinear coefficients satisfying p-growth, monotonicity, coercivity.

    The declared constants are the ones the built-in constructors can
    guarantee; `check_p_structure` uses them as defaults when sampling the
    structural inequalities.
    """

    p: float
    lam: float
    alpha: Callable  # (x, t, z) -> (..., dim)
    beta: Callable  # (x, t, y) -> (...)
    gamma: Callable  # (x,) -> (...)
    source: SourceTerm = field(default_factory=zero_source)
    growth_const: float = 1.0  # C in |alpha| <= C|z|^{p-1} + d1
    growth_offset: float = 0.0  # d1
    mono_const: float = None  # c in the monotonicity inequality
    coer_const: float = 1.0  # c in the coercivity inequality
    coer_offset: float = 0.0  # d2
    # optional Newton linearization overrides; defaults use the power-law form
    flux_jacobian: Optional[Callable] = None  # (x, t, z, eps) -> (..., d, d)
    reaction_derivative: Optional[Callable] = None  # (x, t, y, eps) -> (...)

    def __post_init__(self):
        if self.p < 2.0:
            raise ConfigurationError("p must be >= 2")
        if self.mono_const is None:
            object.__setattr__(self, "mono_const", monotonicity_constant(self.p))

    def with_source(self, source):
        return replace(self, source=source)


def monotonicity_constant(p):
    """Lower bound c with (|a|^{p-2}a - |b|^{p-2}b).(a - b) >= c|a - b|^p.

    Sharp along antipodal pairs; the brute-force minimization in the test
    suite confirms the value before it is used in any monitor.
    """
    return 2.0 ** (2.0 - float(p))


def _power(mag, expo):
    # 0**0 == 1 covers p == 2 exactly; expo >= 0 always holds here
    return mag**expo


def p_laplace_model(p, lam=0.0, gamma=None, source=None):
    """Power-law model: alpha(z) = |z|^{p-2} z, beta(y) = |y|^{p-2} y + lam*y.

    Growth holds with C = 1, d1 = 0 for the flux.  For the reaction the pair
    (C, d1) = (1 + lam, lam) is declared when lam > 0, since lam*|y| cannot
    be bounded by C|y|^{p-1} alone near y = 0 once p > 2.
    """
    p = float(p)
    lam = float(lam)
    if lam < 0.0:
        raise ConfigurationError("lam must be nonnegative")
    if gamma is None:
        gamma = constant_gamma(1.0)

    def alpha(x, t, z):
        z = np.asarray(z, dtype=float)
        mag = np.linalg.norm(z, axis=-1, keepdims=True)
        return _power(mag, p - 2.0) * z

    def beta(x, t, y):
        y = np.asarray(y, dtype=float)
        return _power(np.abs(y), p - 2.0) * y + lam * y

    model = PStructureModel(
        p=p,
        lam=lam,
        alpha=alpha,
        beta=beta,
        gamma=gamma,
        source=source if source is not None else zero_source(),
        growth_const=1.0 + lam,
        growth_offset=lam,
    )
    return model


def anti_monotone_model(p=2.0, gamma=None):
    """Deliberately broken model with alpha(z) = -z; fails monotonicity.

    Kept as a verification fixture: structural checks must reject it.
    """
    base = p_laplace_model(p, 0.0, gamma=gamma)
    return replace(base, alpha=lambda x, t, z: -np.asarray(z, dtype=float))


def p_structure_margins(model, x, t, y1, y2, z1, z2, growth_const=None,
                        growth_offset=None, mono_const=None, coer_const=None,
                        coer_offset=None):
    """Slack arrays of the four structural inequalities on given samples.

    Every returned margin is >= 0 where the corresponding inequality holds.
    Shapes: x (..., d); z1, z2 (..., d); y1, y2, t (...) or scalars.
    """
    p = model.p
    C = model.growth_const if growth_const is None else growth_const
    d1 = model.growth_offset if growth_offset is None else growth_offset
    cm = model.mono_const if mono_const is None else mono_const
    cc = model.coer_const if coer_const is None else coer_const
    d2 = model.coer_offset if coer_offset is None else coer_offset

    a1 = model.alpha(x, t, z1)
    a2 = model.alpha(x, t, z2)
    b1 = model.beta(x, t, y1)
    b2 = model.beta(x, t, y2)
    z1n = np.linalg.norm(z1, axis=-1)
    dzn = np.linalg.norm(z1 - z2, axis=-1)

    growth_alpha = C * z1n ** (p - 1.0) + d1 - np.linalg.norm(a1, axis=-1)
    growth_beta = C * np.abs(y1) ** (p - 1.0) + d1 - np.abs(b1)
    pairing = np.sum((a1 - a2) * (z1 - z2), axis=-1) + (b1 - b2) * (y1 - y2)
    monotonicity = pairing - cm * (dzn**p + np.abs(y1 - y2) ** p)
    energy = np.sum(a1 * z1, axis=-1) + b1 * y1
    coercivity = energy - cc * (z1n**p + np.abs(y1) ** p) + d2
    return {
        "growth_alpha": growth_alpha,
        "growth_beta": growth_beta,
        "monotonicity": monotonicity,
        "coercivity": coercivity,
    }


def default_flux_jacobian(model):
    """Regularized flux linearization used by Newton.

    Returns the model's own flux_jacobian when present, otherwise the
    power-law form (|z|^2 + eps^2)^{(p-2)/2} I + (p-2)(|z|^2 + eps^2)^{(p-4)/2} z z^T.
    The residual is always evaluated exactly, so an approximate Jacobian
    only changes the iteration path, never the solution.
    """
    if model.flux_jacobian is not None:
        return model.flux_jacobian
    p = model.p

    def jac(x, t, z, eps):
        z = np.asarray(z, dtype=float)
        m2 = np.sum(z * z, axis=-1) + eps * eps
        c1 = m2 ** ((p - 2.0) / 2.0)
        c2 = (p - 2.0) * m2 ** ((p - 4.0) / 2.0)
        d = z.shape[-1]
        eye = np.eye(d)
        return c1[..., None, None] * eye + c2[..., None, None] * (
            z[..., :, None] * z[..., None, :]
        )

    return jac


def default_reaction_derivative(model):
    """Regularized reaction derivative: (p-1)(y^2 + eps^2)^{(p-2)/2} + lam."""
    if model.reaction_derivative is not None:
        return model.reaction_derivative
    p, lam = model.p, model.lam

    def deriv(x, t, y, eps):
        y = np.asarray(y, dtype=float)
        return (p - 1.0) * (y * y + eps * eps) ** ((p - 2.0) / 2.0) + lam

    return deriv


@dataclass(frozen=True)
class PStructureReport:
    passed: bool
    worst_margins: dict
    num_samples: int


def check_p_structure(model, num_samples=10_000, magnitude=2.0, seed=0, dim=1,
                      tol=1e-12, **constants):
    """Sample the structural inequalities on random arguments.

    Args:
        model: PStructureModel to probe.
        num_samples: number of random (x, t, y, z) tuples (and pairs).
        magnitude: half-width of the uniform sampling range for y and z.
        seed: RNG seed; the check is deterministic given the seed.
        dim: spatial dimension of the sampled gradients.
        tol: margins below -tol count as failures (floating-point slack).
        **constants: optional overrides (growth_const, mono_const, ...).

    Returns a PStructureReport with the per-inequality worst margins.
    """
    rng = np.random.default_rng(seed)
    n = int(num_samples)
    x = rng.uniform(0.0, 1.0, size=(n, dim))
    t = rng.uniform(0.0, 1.0, size=n)
    y1, y2 = rng.uniform(-magnitude, magnitude, size=(2, n))
    z1, z2 = rng.uniform(-magnitude, magnitude, size=(2, n, dim))
    margins = p_structure_margins(model, x, t, y1, y2, z1, z2, **constants)
    worst = {name: float(np.min(vals)) for name, vals in margins.items()}
    passed = all(np.isfinite(v) and v >= -tol for v in worst.values())
    return PStructureReport(passed=passed, worst_margins=worst, num_samples=n)
