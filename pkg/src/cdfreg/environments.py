"""Synthetic ground-truth worlds: catalog CDF basis families, a hidden
coefficient function, context and outcome sampling, and oracle access to
optimal actions for regret accounting."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import GridFunction, QuadratureGrid
from .operators import CdfBasis


@dataclass(frozen=True, eq=False)
class Environment:
    basis: CdfBasis
    theta_star: GridFunction
    omega_grid: QuadratureGrid
    s_grid: QuadratureGrid
    context_dim: int
    action_count: int
    context_sampler: str = "uniform"
    rng_seed: int = 0

    def __post_init__(self):
        th = self.theta_star
        if np.min(th.values) < -1e-9:
            raise ValueError("theta_star must be nonnegative")
        if abs(th.integral() - 1.0) > 1e-9:
            raise ValueError("theta_star must integrate to 1")
        if th.norm() > self.basis.coeff_norm_bound_M + 1e-9:
            raise ValueError("theta_star exceeds the norm bound M")


@dataclass(frozen=True)
class SampleRecord:
    context: np.ndarray
    action: int
    outcome: float
    round: int

    def __post_init__(self):
        if not 0.0 <= self.outcome <= 1.0:
            raise ValueError("outcome outside S")
        if self.action < 0:
            raise ValueError("negative action index")


def _context_mean(x) -> float:
    return float(np.mean(np.atleast_1d(np.asarray(x, dtype=float))))


def _rank1_eval(x, a, omega_nodes, s):
    nw = omega_nodes.shape[0]
    return np.broadcast_to(s, (nw, s.shape[0])).copy()


def _kumaraswamy_eval(x, a, omega_nodes, s):
    xm = _context_mean(x)
    wm = omega_nodes.mean(axis=1)
    g1 = 0.5 * (1.0 + np.sin(2.0 * np.pi * (xm + 0.7 * wm + 0.31 * (a + 1))))
    g2 = 0.5 * (1.0 + np.cos(2.0 * np.pi * (0.8 * xm + 0.57 * wm + 0.13 * (a + 1))))
    alpha = 1.0 + g1
    beta = 1.0 + g2
    return 1.0 - (1.0 - s[None, :] ** alpha[:, None]) ** beta[:, None]


def _finite_rank_eval(rank, x, a, omega_nodes, s):
    # cell c carries the CDF of a uniform law on a short interval inside
    # [c/rank, (c+1)/rank]; the interval's offset moves with (x, a).  The
    # staggered supports keep all `rank` Gram eigenvalues well separated
    # from zero, unlike smooth families whose spectra collapse numerically.
    xm = _context_mean(x)
    cell = np.minimum((omega_nodes[:, 0] * rank).astype(int), rank - 1)
    u = 0.5 * (1.0 + np.sin(2.0 * np.pi * (0.9 * xm + 0.41 * (a + 1) + 1.7 * (cell + 1) / rank)))
    width = 0.5 / rank
    left = cell / rank + (1.0 / rank - width) * u
    return np.clip((s[None, :] - left[:, None]) / width, 0.0, 1.0)


def _bump_theta_star(omega_grid: QuadratureGrid, bumps, M: float) -> GridFunction:
    values = np.ones(omega_grid.size)
    for center, height, width in bumps:
        center = np.asarray(center, dtype=float)
        dist2 = np.sum((omega_grid.nodes - center) ** 2, axis=1)
        values = values + height * np.exp(-dist2 / (2.0 * width**2))
    values = np.maximum(values, 0.0)
    values = values / float(omega_grid.weights @ values)
    theta = GridFunction(omega_grid, values)
    if theta.norm() > M + 1e-9:
        raise ValueError("bump mixture violates the norm bound M")
    return theta


DEFAULT_BUMPS = (((0.3,), 2.0, 0.12), ((0.75,), -0.8, 0.1))


def make_catalog_env(name: str, omega_grid: QuadratureGrid, s_grid: QuadratureGrid,
                     context_dim: int = 2, action_count: int = 5,
                     theta_star: str = "uniform", bumps=DEFAULT_BUMPS,
                     rank: int = 8, rng_seed: int = 0) -> Environment:
    """Catalog environments.

    rank1-uniform: phi(x,a,w,s) = s for every argument (degenerate sanity
    world). kumaraswamy: phi = 1 - (1 - s^alpha)^beta with smooth bounded
    context/action/index dependence. finite-rank-r: phi piecewise constant
    in w over ``rank`` slabs, so the point operators have rank <= rank.
    """
    if name == "rank1-uniform":
        basis = CdfBasis("rank1-uniform", _rank1_eval, lipschitz_L0=0.0,
                         kernel_floor_eta=1.0 / 3.0, coeff_norm_bound_M=2.0,
                         covering_constant_A=1.0, context_dim=context_dim,
                         omega_dim=omega_grid.dim)
    elif name == "kumaraswamy":
        basis = CdfBasis("kumaraswamy", _kumaraswamy_eval, lipschitz_L0=2.5,
                         kernel_floor_eta=0.2, coeff_norm_bound_M=2.0,
                         covering_constant_A=1.0, context_dim=context_dim,
                         omega_dim=omega_grid.dim)
    elif name == "finite-rank-r":
        def evaluator(x, a, omega_nodes, s, _rank=rank):
            return _finite_rank_eval(_rank, x, a, omega_nodes, s)

        # piecewise-constant in w: L0 is an empirical constant for the
        # random-pair spot check, not a true Lipschitz bound across cell
        # edges.  The kernel floor is the squared mass of the last cell's
        # ramp, width/3 = 1/(6 rank), declared with a safety margin.
        basis = CdfBasis("finite-rank-%d" % rank, evaluator, lipschitz_L0=60.0,
                         kernel_floor_eta=1.0 / (8.0 * rank), coeff_norm_bound_M=2.0,
                         covering_constant_A=1.0, context_dim=context_dim,
                         omega_dim=omega_grid.dim)
    else:
        raise ValueError("unknown catalog environment %r" % name)

    if theta_star == "uniform":
        theta = GridFunction(omega_grid, np.ones(omega_grid.size))
    elif theta_star == "bumps":
        theta = _bump_theta_star(omega_grid, bumps, basis.coeff_norm_bound_M)
    else:
        raise ValueError("unknown theta_star %r" % theta_star)

    return Environment(basis, theta, omega_grid, s_grid, context_dim,
                       action_count, rng_seed=rng_seed)


def true_cdf(env: Environment, x, a: int, s_grid: QuadratureGrid | None = None) -> GridFunction:
    """F*(x, a, s_k) as the quadrature mixture of basis CDFs."""
    s_grid = env.s_grid if s_grid is None else s_grid
    phi = np.asarray(env.basis.eval_matrix(x, a, env.omega_grid.nodes, s_grid.coords()))
    values = (env.omega_grid.weights * env.theta_star.values) @ phi
    return GridFunction(s_grid, values)


def sample_context(env: Environment, rng: np.random.Generator) -> np.ndarray:
    return rng.random(env.context_dim)


def sample_outcomes(env: Environment, x, a: int, size: int,
                    rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF draws snapped to the outcome grid: the smallest node s
    with F*(x, a, s) >= u."""
    f = true_cdf(env, x, a)
    u = rng.random(size)
    idx = np.searchsorted(f.values, u, side="left")
    idx = np.minimum(idx, f.grid.size - 1)
    return f.grid.coords()[idx]


def sample_outcome(env: Environment, x, a: int, rng: np.random.Generator) -> float:
    return float(sample_outcomes(env, x, a, 1, rng)[0])


def optimal_action(env: Environment, functional, x,
                   s_grid: QuadratureGrid | None = None) -> tuple[int, float]:
    """Exhaustive argmax of the functional over true CDFs; ties break to
    the lowest index."""
    utilities = [functional(true_cdf(env, x, a, s_grid)) for a in range(env.action_count)]
    best = int(np.argmax(utilities))
    return best, float(utilities[best])
