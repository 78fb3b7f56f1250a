"""Quadrature grids, grid-function algebra, and integral-operator eigensolvers.

Functions on a compact box are represented by their values at quadrature
nodes, so every inner product and operator application is a finite weighted
sum. Two node layouts are used: midpoint rules for the coefficient domain,
and a right-endpoint rule for the outcome domain so that the last node sits
at the supremum of the support (where every CDF equals 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MAX_GRID_NODES = 10**7
MAX_EIG_SIZE = 2000


def _readonly(a):
    a = np.ascontiguousarray(np.asarray(a, dtype=float))
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Nodes and positive weights on an axis-aligned box.

    ``nodes`` has shape (n, dim), ``weights`` shape (n,); the weights sum to
    the box volume (1.0 for the unit box).
    """

    nodes: np.ndarray
    weights: np.ndarray
    bounds: np.ndarray  # shape (dim, 2)

    def __post_init__(self):
        object.__setattr__(self, "nodes", _readonly(np.atleast_2d(self.nodes)))
        object.__setattr__(self, "weights", _readonly(self.weights))
        object.__setattr__(self, "bounds", _readonly(np.atleast_2d(self.bounds)))
        if self.nodes.shape[0] != self.weights.shape[0]:
            raise ValueError("node and weight counts differ")
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")
        volume = float(np.prod(self.bounds[:, 1] - self.bounds[:, 0]))
        if abs(self.weights.sum() - volume) > 1e-12 * max(1.0, volume):
            raise ValueError("weights do not sum to the box measure")
        lo, hi = self.bounds[:, 0], self.bounds[:, 1]
        if np.any(self.nodes < lo - 1e-12) or np.any(self.nodes > hi + 1e-12):
            raise ValueError("nodes outside the box")

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    def coords(self) -> np.ndarray:
        """Node coordinates for 1-d grids, as a flat array."""
        if self.dim != 1:
            raise ValueError("coords() only makes sense for 1-d grids")
        return self.nodes[:, 0]


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Point values of a function at the nodes of a quadrature grid."""

    grid: QuadratureGrid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values))
        if self.values.shape != (self.grid.size,):
            raise ValueError("value count does not match node count")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid-function values must be finite")

    def integral(self) -> float:
        return float(self.grid.weights @ self.values)

    def norm(self) -> float:
        return float(np.sqrt(self.grid.weights @ self.values**2))


def same_grid(f: GridFunction, g: GridFunction) -> bool:
    if f.grid is g.grid:
        return True
    return f.grid.size == g.grid.size and np.array_equal(f.grid.nodes, g.grid.nodes)


def inner_product(f: GridFunction, g: GridFunction) -> float:
    """Quadrature inner product sum_i w_i f_i g_i."""
    if not same_grid(f, g):
        raise ValueError("grid functions live on different grids")
    return float(np.sum(f.grid.weights * f.values * g.values))


def build_uniform_grid(dim: int, nodes_per_dim: int) -> QuadratureGrid:
    """Midpoint product rule on the unit box [0,1]^dim."""
    if dim < 1 or nodes_per_dim < 2:
        raise ValueError("need dim >= 1 and nodes_per_dim >= 2")
    if dim * np.log(nodes_per_dim) > np.log(MAX_GRID_NODES):
        raise ValueError("grid would exceed the %d node limit" % MAX_GRID_NODES)
    axis = (np.arange(nodes_per_dim) + 0.5) / nodes_per_dim
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    nodes = np.stack([m.ravel() for m in mesh], axis=1)
    weights = np.full(nodes.shape[0], nodes_per_dim ** (-float(dim)))
    bounds = np.tile([0.0, 1.0], (dim, 1))
    return QuadratureGrid(nodes, weights, bounds)


def build_cdf_grid(n_nodes: int) -> QuadratureGrid:
    """Right-endpoint rule on [0,1]; the last node is exactly 1.

    Used for the outcome support so that indicator integrals, CDF terminal
    values, and inverse-CDF sampling are mutually consistent on the grid.
    """
    if n_nodes < 2:
        raise ValueError("need at least 2 nodes")
    if n_nodes > MAX_GRID_NODES:
        raise ValueError("grid would exceed the node limit")
    nodes = (np.arange(n_nodes) + 1.0) / n_nodes
    weights = np.full(n_nodes, 1.0 / n_nodes)
    return QuadratureGrid(nodes[:, None], weights, [[0.0, 1.0]])


def sym_eig(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and orthonormal eigenvector columns of a
    symmetric matrix.

    Backed by LAPACK's symmetric solver; the contract (residuals within
    1e-8 * ||A||, orthonormal vectors) is what the rest of the package
    relies on.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if a.shape[0] > MAX_EIG_SIZE:
        raise ValueError("matrix exceeds the %d size limit" % MAX_EIG_SIZE)
    if np.max(np.abs(a - a.T)) > 1e-10 * max(1.0, np.max(np.abs(a))):
        raise ValueError("matrix is not symmetric")
    vals, vecs = np.linalg.eigh((a + a.T) / 2.0)
    order = np.argsort(vals)[::-1]
    return vals[order], vecs[:, order]


def _legendre_and_derivative(r: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """P_r(x) and P_r'(x) by the three-term recurrence."""
    p_prev = np.ones_like(x)
    p = x.copy()
    if r == 1:
        return p, np.ones_like(x)
    for k in range(1, r):
        p_next = ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
        p_prev, p = p, p_next
    dp = r * (x * p - p_prev) / (x**2 - 1.0)
    return p, dp


def gauss_legendre(r: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [-1, 1].

    Roots of the degree-r Legendre polynomial by Newton iteration from
    Chebyshev initial guesses; exact for polynomials up to degree 2r-1.
    """
    if not 1 <= r <= 16:
        raise ValueError("degree r must be in [1, 16]")
    if r == 1:
        return np.zeros(1), np.full(1, 2.0)
    i = np.arange(1, r + 1)
    x = np.cos(np.pi * (4 * i - 1) / (4 * r + 2))
    for _ in range(100):
        p, dp = _legendre_and_derivative(r, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-14:
            break
    _, dp = _legendre_and_derivative(r, x)
    w = 2.0 / ((1.0 - x**2) * dp**2)
    order = np.argsort(x)
    return x[order], w[order]


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Descending nonnegative eigenvalues with quadrature-orthonormal
    eigenfunctions of a positive self-adjoint integral operator."""

    eigenvalues: np.ndarray
    eigenfunctions: list[GridFunction] = field(repr=False)
    grid: QuadratureGrid

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", _readonly(self.eigenvalues))
        vals = self.eigenvalues
        if len(self.eigenfunctions) != vals.shape[0]:
            raise ValueError("eigenvalue / eigenfunction counts differ")
        if np.any(vals < 0):
            raise ValueError("eigenvalues must be nonnegative")
        if np.any(np.diff(vals) > 1e-12):
            raise ValueError("eigenvalues must be descending")

    def eigenfunction_matrix(self) -> np.ndarray:
        """Eigenfunction values as columns, shape (n_nodes, n_eigs)."""
        return np.column_stack([f.values for f in self.eigenfunctions])


def _evaluate_kernel(kernel, s: np.ndarray, t: np.ndarray) -> np.ndarray:
    ss, tt = np.meshgrid(s, t, indexing="ij")
    try:
        k = np.asarray(kernel(ss, tt), dtype=float)
        if k.shape != ss.shape:
            raise TypeError
    except TypeError:
        k = np.array([[float(kernel(a, b)) for b in t] for a in s])
    return k


def degenerate_kernel_eig(kernel, n: int, r: int,
                          drop_tol: float = 1e-10) -> SpectralDecomposition:
    """Eigenpairs of the integral operator with symmetric kernel on [0,1]^2.

    The kernel is interpolated at piecewise Gauss points (n uniform cells,
    r points each), which reduces the operator eigenproblem to an
    (n*r) x (n*r) matrix eigenproblem. Because the Lagrange interpolants at
    Gauss points are exactly orthogonal in L^2, their Gram matrix is the
    diagonal of quadrature weights, and the eigenfunctions come out exactly
    orthonormal under the returned grid's quadrature.

    Negative numerical eigenvalues (round-off for these positive operators)
    are clamped to zero and dropped.
    """
    if n < 1 or r < 1:
        raise ValueError("need n >= 1 and r >= 1")
    if n * r > MAX_EIG_SIZE:
        raise ValueError("n*r exceeds the %d limit" % MAX_EIG_SIZE)

    y, gw = gauss_legendre(r)
    h = 1.0 / n
    # mapped Gauss points per cell, ascending over [0,1]
    cells = np.arange(n)[:, None]
    omega = (cells * h + (y[None, :] + 1.0) * h / 2.0).ravel()
    weights = np.tile(gw * h / 2.0, n)

    kmat = _evaluate_kernel(kernel, omega, omega)
    if np.max(np.abs(kmat - kmat.T)) > 1e-8 * max(1.0, np.max(np.abs(kmat))):
        raise ValueError("kernel is not symmetric")

    sqw = np.sqrt(weights)
    sym = sqw[:, None] * kmat * sqw[None, :]
    try:
        vals, vecs = sym_eig(sym)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise RuntimeError("eigensolver failed on the degenerate-kernel matrix") from exc

    lam_max = max(vals[0], 0.0) if vals.size else 0.0
    if vals.size and vals[-1] < -max(drop_tol * lam_max, 1e-12):
        raise ValueError("kernel operator is not positive semidefinite")
    keep = vals >= 0.0  # round-off negatives are clamped to zero and dropped
    vals = vals[keep]
    vecs = vecs[:, keep]

    grid = QuadratureGrid(omega[:, None], weights, [[0.0, 1.0]])
    funcs = []
    for j in range(vals.shape[0]):
        g = vecs[:, j] / sqw
        nrm = np.sqrt(weights @ g**2)
        funcs.append(GridFunction(grid, g / nrm))
    return SpectralDecomposition(np.maximum(vals, 0.0), funcs, grid)
