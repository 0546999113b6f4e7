"""Structured P1 meshes with precomputed quadrature and basis tables.

Supports uniform interval meshes in 1D and structured triangulations of a
rectangle in 2D (each cell split along the lower-left to upper-right
diagonal).  All assembly-relevant data (physical quadrature points, scaled
weights, basis values and gradients per element) is precomputed so that
residual and matrix assembly can run vectorized over all elements.
"""

import numpy as np

from .errors import ConfigurationError, NumericError

# 2-point Gauss on the reference interval [0, 1]: degree-3 exact.
_GAUSS2_POINTS = np.array([[0.5 - 0.5 / np.sqrt(3.0)], [0.5 + 0.5 / np.sqrt(3.0)]])
_GAUSS2_WEIGHTS = np.array([0.5, 0.5])

# Edge-midpoint rule on the reference triangle (0,0)-(1,0)-(0,1): degree-2 exact.
_TRI3_POINTS = np.array([[0.5, 0.0], [0.5, 0.5], [0.0, 0.5]])
_TRI3_WEIGHTS = np.array([1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0])


class QuadratureRule:
    """Reference-element quadrature rule with strictly positive weights."""

    def __init__(self, points, weights, degree):
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self.weights = np.asarray(weights, dtype=float)
        self.degree = int(degree)
        if self.weights.ndim != 1 or len(self.weights) != len(self.points):
            raise ConfigurationError("quadrature points and weights disagree in length")
        if np.any(self.weights <= 0.0):
            raise ConfigurationError("quadrature weights must be strictly positive")

    def __len__(self):
        return len(self.weights)


def _reference_basis(dim, points):
    """P1 basis values at reference points; returns (n_q, n_loc)."""
    if dim == 1:
        xi = points[:, 0]
        return np.stack([1.0 - xi, xi], axis=1)
    xi, eta = points[:, 0], points[:, 1]
    return np.stack([1.0 - xi - eta, xi, eta], axis=1)


class Mesh:
    """Conforming simplicial mesh of an axis-aligned domain.

    Attributes
    ----------
    dim : spatial dimension (1 or 2)
    nodes : (n_nodes, dim) coordinates
    elements : (n_elements, dim + 1) node indices per element
    boundary_nodes : sorted indices of nodes on the outer boundary
    quadrature : reference QuadratureRule (degree >= 2)
    element_volumes : (n_elements,) measures, all positive
    lumped_mass : (n_nodes,) row-sum lumped mass weights
    node_column / element_column : index along the first axis, used to carve
        the domain into overlapping strips
    """

    def __init__(self, dim, nodes, elements, boundary_nodes, extent, cells):
        self.dim = dim
        self.nodes = nodes
        self.elements = elements
        self.boundary_nodes = boundary_nodes
        self.extent = tuple(extent)
        self.cells = tuple(cells)
        self.n_nodes = len(nodes)
        self.n_elements = len(elements)
        self.n_local = dim + 1
        if dim == 1:
            self.quadrature = QuadratureRule(_GAUSS2_POINTS, _GAUSS2_WEIGHTS, degree=3)
        else:
            self.quadrature = QuadratureRule(_TRI3_POINTS, _TRI3_WEIGHTS, degree=2)
        self._build_tables()

    def _build_tables(self):
        rule = self.quadrature
        verts = self.nodes[self.elements]  # (n_el, n_loc, dim)
        v0 = verts[:, 0, :]
        edges = verts[:, 1:, :] - v0[:, None, :]  # (n_el, dim, dim)
        if self.dim == 1:
            det = edges[:, 0, 0]
            inv_t = (1.0 / det)[:, None, None]  # d(xi)/dx
            ref_grads = np.array([[-1.0], [1.0]])
        else:
            det = edges[:, 0, 0] * edges[:, 1, 1] - edges[:, 0, 1] * edges[:, 1, 0]
            inv = np.empty((self.n_elements, 2, 2))
            inv[:, 0, 0] = edges[:, 1, 1]
            inv[:, 0, 1] = -edges[:, 1, 0]
            inv[:, 1, 0] = -edges[:, 0, 1]
            inv[:, 1, 1] = edges[:, 0, 0]
            inv_t = inv / det[:, None, None]
            ref_grads = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
        if np.any(det <= 0.0):
            raise ConfigurationError("element with non-positive volume")
        self.element_volumes = np.abs(det) / (1.0 if self.dim == 1 else 2.0)
        self.basis_at_quad = _reference_basis(self.dim, rule.points)  # (n_q, n_loc)
        # physical gradients are constant per element for P1
        self.basis_gradients = np.einsum("ld,edk->elk", ref_grads, inv_t)
        # physical quadrature points and |J|-scaled weights
        self.quad_points = v0[:, None, :] + np.einsum(
            "qd,edk->eqk", rule.points, edges
        )
        self.quad_weights = rule.weights[None, :] * np.abs(det)[:, None]
        self.lumped_mass = np.bincount(
            self.elements.ravel(),
            weights=np.repeat(self.element_volumes / self.n_local, self.n_local),
            minlength=self.n_nodes,
        )


def build_mesh(extent, cells):
    """Build a uniform mesh of the box (0, extent[0]) x ... with cells per axis.

    Args:
        extent: sequence of positive side lengths, one per axis (1 or 2 axes).
        cells: sequence of cell counts per axis, each >= 2.
    """
    extent = [float(e) for e in np.atleast_1d(extent)]
    cells = [int(c) for c in np.atleast_1d(cells)]
    if len(extent) != len(cells):
        raise ConfigurationError("extent and cells must have matching length")
    dim = len(extent)
    if dim not in (1, 2):
        raise ConfigurationError(f"unsupported dimension {dim}; expected 1 or 2")
    if any(e <= 0.0 for e in extent):
        raise ConfigurationError("extent entries must be positive")
    if any(c < 2 for c in cells):
        raise ConfigurationError("need at least 2 cells per axis")

    if dim == 1:
        nx = cells[0]
        nodes = np.linspace(0.0, extent[0], nx + 1)[:, None]
        elements = np.stack([np.arange(nx), np.arange(1, nx + 1)], axis=1)
        boundary = np.array([0, nx])
        mesh = Mesh(1, nodes, elements, boundary, extent, cells)
        mesh.node_column = np.arange(nx + 1)
        mesh.element_column = np.arange(nx)
        return mesh

    nx, ny = cells
    xs = np.linspace(0.0, extent[0], nx + 1)
    ys = np.linspace(0.0, extent[1], ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    nodes = np.stack([X.ravel(), Y.ravel()], axis=1)  # node id = i + j*(nx+1)
    i_idx, j_idx = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    i_idx, j_idx = i_idx.ravel(), j_idx.ravel()
    n00 = i_idx + j_idx * (nx + 1)
    n10 = n00 + 1
    n01 = n00 + (nx + 1)
    n11 = n01 + 1
    # diagonal from lower-left to upper-right in every cell
    lower = np.stack([n00, n10, n11], axis=1)
    upper = np.stack([n00, n11, n01], axis=1)
    elements = np.empty((2 * nx * ny, 3), dtype=int)
    elements[0::2] = lower
    elements[1::2] = upper
    col = np.arange(nx + 1)
    node_col = np.tile(col, ny + 1)
    on_boundary = (
        (node_col == 0)
        | (node_col == nx)
        | (np.repeat(np.arange(ny + 1), nx + 1) == 0)
        | (np.repeat(np.arange(ny + 1), nx + 1) == ny)
    )
    boundary = np.flatnonzero(on_boundary)
    mesh = Mesh(2, nodes, elements, boundary, extent, cells)
    mesh.node_column = node_col
    mesh.element_column = np.repeat(i_idx, 2)
    return mesh


def element_integrate(mesh, elem, integrand):
    """Integrate over one element with the mesh quadrature rule.

    The integrand is called per quadrature point as
    ``integrand(x, basis_values, basis_gradients)`` with physical coordinates
    x of shape (dim,), basis values of shape (n_local,) and constant basis
    gradients of shape (n_local, dim); it must return a finite scalar.
    """
    grads = mesh.basis_gradients[elem]
    total = 0.0
    for q in range(len(mesh.quadrature)):
        value = integrand(mesh.quad_points[elem, q], mesh.basis_at_quad[q], grads)
        if not np.isfinite(value):
            raise NumericError(
                f"non-finite integrand value on element {elem} at "
                f"x={mesh.quad_points[elem, q]}"
            )
        total += mesh.quad_weights[elem, q] * value
    return total
