"""The functional regression oracle: spectral truncation, pseudo-inverse,
least squares against indicator targets, and projection onto the admissible
coefficient set.

The admissible set C consists of nonnegative functions with unit integral
and L2 norm at most M; estimates are projected onto it under the
design-operator seminorm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import GridFunction, QuadratureGrid, SpectralDecomposition
from .operators import (
    CdfBasis,
    DesignOperator,
    design_operator,
    spectral_decompose,
    weighted_quadratic,
)


@dataclass(frozen=True)
class TruncationPlan:
    """Retained leading eigenvalues: everything at or above n * epsilon."""

    epsilon: float
    threshold: float
    n_eps: int
    retained_eigenvalues: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.retained_eigenvalues, dtype=float)
        if vals.shape[0] != self.n_eps:
            raise ValueError("retained eigenvalue count does not match n_eps")
        if np.any(vals < self.threshold):
            raise ValueError("retained eigenvalue below the threshold")
        vals.flags.writeable = False
        object.__setattr__(self, "retained_eigenvalues", vals)


@dataclass(frozen=True)
class Diagnostics:
    loss: float | None = None
    n_eps: int | None = None
    projection_iterations: int = 0
    converged: bool = True


@dataclass(frozen=True, eq=False)
class CoefficientEstimate:
    """A feasible coefficient function (in C) with fit diagnostics."""

    theta_hat: GridFunction
    norm_bound_M: float
    diagnostics: Diagnostics

    def __post_init__(self):
        th = self.theta_hat
        if np.min(th.values) < -1e-9:
            raise ValueError("estimate has negative values")
        if abs(th.integral() - 1.0) > 1e-6:
            raise ValueError("estimate does not integrate to 1")
        if th.norm() > self.norm_bound_M + 1e-6:
            raise ValueError("estimate exceeds the norm bound M")


@dataclass(frozen=True)
class ErrorBudget:
    """Closed-form error budget: the high-probability regression bound
    e_delta, the random-design constant c_const, and est = L^2 c e^2."""

    e_delta: float
    c_const: float
    est: float
    inputs: dict

    def __post_init__(self):
        expected = self.inputs["L"] ** 2 * self.c_const * self.e_delta**2
        if abs(self.est - expected) > 1e-9 * max(1.0, abs(expected)):
            raise ValueError("est is inconsistent with its factors")


def select_truncation(spec: SpectralDecomposition, n: int, gamma: float,
                      epsilon: float | None = None) -> TruncationPlan:
    """Truncation at threshold n * epsilon with epsilon = n^(-2/(gamma+2)).

    ``epsilon`` may be overridden for experiments with other schedules.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    if epsilon is None:
        epsilon = float(n) ** (-2.0 / (gamma + 2.0))
    threshold = n * epsilon
    vals = spec.eigenvalues
    n_eps = int(np.sum(vals >= threshold))
    return TruncationPlan(epsilon, threshold, n_eps, vals[:n_eps])


def pseudo_inverse_apply(spec: SpectralDecomposition, plan: TruncationPlan,
                         g: GridFunction) -> GridFunction:
    """sum_{i <= N_eps} (1/lambda_i) <g, e_i> e_i; zero when nothing is retained."""
    if g.grid is not spec.grid and not np.array_equal(g.grid.nodes, spec.grid.nodes):
        raise ValueError("input lives on a different grid")
    out = np.zeros(spec.grid.size)
    if plan.n_eps == 0:
        return GridFunction(spec.grid, out)
    emat = spec.eigenfunction_matrix()[:, : plan.n_eps]
    coeffs = emat.T @ (spec.grid.weights * g.values)
    out = emat @ (coeffs / plan.retained_eigenvalues)
    return GridFunction(spec.grid, out)


def _check_dataset(dataset):
    dataset = list(dataset)
    for _, _, y in dataset:
        if not 0.0 <= y <= 1.0:
            raise ValueError("outcome outside the support S = [0, 1]")
    return dataset


def empirical_target(dataset, basis: CdfBasis, omega_grid: QuadratureGrid,
                     s_grid: QuadratureGrid) -> GridFunction:
    """sum_j integral_S 1{y_j <= s} phi(x_j, a_j, w, s) dm(s) on the Omega grid."""
    dataset = _check_dataset(dataset)
    s = s_grid.coords()
    total = np.zeros(omega_grid.size)
    for x, a, y in dataset:
        phi = np.asarray(basis.eval_matrix(x, a, omega_grid.nodes, s))
        indicator = (s >= y).astype(float)
        total += phi @ (s_grid.weights * indicator)
    return GridFunction(omega_grid, total)


def loss(theta: GridFunction, dataset, basis: CdfBasis,
         omega_grid: QuadratureGrid, s_grid: QuadratureGrid) -> float:
    """Summed squared L2(S) distance between indicator targets and the
    mixture CDFs induced by theta."""
    dataset = _check_dataset(dataset)
    s = s_grid.coords()
    wtheta = omega_grid.weights * theta.values
    total = 0.0
    for x, a, y in dataset:
        phi = np.asarray(basis.eval_matrix(x, a, omega_grid.nodes, s))
        predicted = wtheta @ phi
        indicator = (s >= y).astype(float)
        total += float(s_grid.weights @ (indicator - predicted) ** 2)
    return total


def solve_least_squares(dataset, basis: CdfBasis, omega_grid: QuadratureGrid,
                        s_grid: QuadratureGrid, spec: SpectralDecomposition,
                        plan: TruncationPlan) -> GridFunction:
    """Least-squares solution over the retained eigenspace: the pseudo-inverse
    applied to the empirical target."""
    target = empirical_target(dataset, basis, omega_grid, s_grid)
    return pseudo_inverse_apply(spec, plan, target)


def _project_unit_mass(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Weighted projection onto {y >= 0, sum w_i y_i = 1}: y = max(v - t, 0)
    with t solving the mass constraint (water filling)."""
    order = np.argsort(values)[::-1]
    v = values[order]
    w = weights[order]
    cum_wv = np.cumsum(w * v)
    cum_w = np.cumsum(w)
    t_candidates = (cum_wv - 1.0) / cum_w
    # largest active set whose threshold stays below the smallest active value
    idx = np.nonzero(t_candidates < v)[0][-1]
    t = t_candidates[idx]
    return np.maximum(values - t, 0.0)


def _cap_l2_norm(values: np.ndarray, weights: np.ndarray, m_bound: float) -> np.ndarray:
    """Shrink toward the uniform density until the L2 norm is at most M.

    The map y -> 1 + t (y - 1) preserves nonnegativity and the unit
    integral, and ||1 + t(y-1)||^2 = 1 + t^2 (||y||^2 - 1).
    """
    sq = float(weights @ values**2)
    if sq <= m_bound**2:
        return values
    t = math.sqrt((m_bound**2 - 1.0) / (sq - 1.0))
    return 1.0 + t * (values - 1.0)


def _active_set_face(quad, bx, w, start, max_faces=200):
    """Minimize y' quad y / 2 - bx . y over {y >= 0, w . y = 1}.

    On each face (a fixed zero set) the minimizer solves a linear KKT
    system; faces are swapped primal-dual style until the bound
    multipliers are all nonnegative.
    """
    n = start.shape[0]
    current = np.maximum(start, 0.0)
    active = current <= 1e-12
    for _ in range(max_faces):
        free = np.nonzero(~active)[0]
        if free.size == 0:
            return current
        nf = free.size
        kkt = np.zeros((nf + 1, nf + 1))
        kkt[:nf, :nf] = quad[np.ix_(free, free)]
        kkt[:nf, nf] = -w[free]
        kkt[nf, :nf] = w[free]
        rhs = np.concatenate([bx[free], [1.0]])
        sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
        cand = np.zeros(n)
        cand[free] = sol[:nf]
        lam = sol[nf]
        if np.min(cand[free]) >= -1e-12:
            cand = np.maximum(cand, 0.0)
            mult = (quad @ cand - bx - lam * w)[active]
            current = cand
            if mult.size == 0 or np.min(mult) >= -1e-10:
                break
            release = np.nonzero(active)[0][int(np.argmin(mult))]
            active[release] = False
        else:
            # walk toward the face minimizer until the first bound hits
            direction = cand - current
            shrinking = direction < -1e-15
            with np.errstate(divide="ignore"):
                steps = -current[shrinking] / direction[shrinking]
            alpha = min(1.0, float(np.min(steps))) if steps.size else 1.0
            current = np.maximum(current + alpha * direction, 0.0)
            active = current <= 1e-12
    return current


def _refine_projection(y: np.ndarray, x: np.ndarray, op: DesignOperator,
                       M: float) -> np.ndarray:
    """Sharpen a near-converged projection iterate with an exact
    active-set solve.

    Projected gradient alone approaches the minimizer only sublinearly in
    the seminorm's near-kernel directions, which is not enough for tight
    non-expansiveness tolerances downstream. The nonnegativity and mass
    constraints are handled by an active-set solver; when the norm cap
    binds, its multiplier mu is found by bisection, since the norm of the
    mu-penalized solution decreases monotonically in mu. The candidate is
    accepted only when it is feasible and no worse than the input iterate.
    """
    w = op.grid.weights
    b_mat = w[:, None] * op.kernel_matrix * w[None, :]
    bx = b_mat @ x
    w_diag = np.diag(w)
    cand = _active_set_face(b_mat, bx, w, y)

    def norm_of(v):
        return math.sqrt(float(w @ v**2))

    if norm_of(cand) > M:
        lo, hi = 0.0, 1.0
        hi_cand = _active_set_face(b_mat + hi * w_diag, bx, w, cand)
        guard = 0
        while norm_of(hi_cand) > M and guard < 60:
            lo, hi = hi, 2.0 * hi
            hi_cand = _active_set_face(b_mat + hi * w_diag, bx, w, hi_cand)
            guard += 1
        cand = hi_cand
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            mid_cand = _active_set_face(b_mat + mid * w_diag, bx, w, cand)
            if norm_of(mid_cand) > M:
                lo = mid
            else:
                hi = mid
                cand = mid_cand

    mass = float(w @ cand)
    if mass <= 0.0:
        return y
    cand = cand / mass
    if norm_of(cand) > M + 1e-9:
        return y
    dy, dc = w * (y - x), w * (cand - x)
    if float(dc @ op.kernel_matrix @ dc) <= float(dy @ op.kernel_matrix @ dy) + 1e-15:
        return cand
    return y


def project_to_C(theta: GridFunction, op: DesignOperator, M: float,
                 tol: float = 1e-8, max_iter: int = 10000) -> CoefficientEstimate:
    """Projection onto C = {theta >= 0, integral = 1, ||theta|| <= M} under
    the design-operator seminorm, by projected gradient descent.

    Starts from the clipped-and-renormalized input (the canonical selection
    when the seminorm has a kernel) with step 1/(2 lambda_max). Stops when
    the per-iteration movement drops below ``tol`` (converged), or when the
    movement plateaus in the operator's near-kernel directions, in which
    case the best feasible iterate is returned with converged=False.
    """
    if M < 1.0:
        raise ValueError("M must be at least 1 (C must contain the uniform density)")
    weights = op.grid.weights
    lam_max = float(spectral_decompose(op).eigenvalues[0]) if op.grid.size else 0.0

    def feasible(v):
        return _cap_l2_norm(_project_unit_mass(v, weights), weights, M)

    y = feasible(theta.values.copy())
    if lam_max <= 0.0:
        return CoefficientEstimate(GridFunction(op.grid, y), M,
                                   Diagnostics(projection_iterations=0, converged=True))
    step = 1.0 / lam_max  # gradient of ||y - x||_U^2 is 2 U (y - x)
    kernel_w = op.kernel_matrix * weights[None, :]
    drive = kernel_w @ theta.values
    converged = False
    iterations = 0
    prev_move = math.inf
    plateau = 0
    dampings = 0
    for iterations in range(1, max_iter + 1):
        grad = kernel_w @ y - drive
        y_next = feasible(y - step * grad)
        move = math.sqrt(float(weights @ (y_next - y) ** 2))
        y = y_next
        if move < tol:
            converged = True
            break
        # the composite feasibility map is inexact, so the iteration can
        # settle into a small limit cycle; damp the step when progress
        # stalls, and stop once damping no longer helps
        plateau = plateau + 1 if move > 0.9999 * prev_move else 0
        prev_move = move
        if plateau >= 100:
            step *= 0.5
            plateau = 0
            dampings += 1
            if dampings >= 8:
                break
    y = _refine_projection(y, theta.values, op, M)
    return CoefficientEstimate(
        GridFunction(op.grid, y), M,
        Diagnostics(projection_iterations=iterations, converged=converged),
    )


def error_budget(n: int, delta: float, gamma: float, s0: float, M: float,
                 L: float, L0: float, A: float, d: int, eta: float) -> ErrorBudget:
    """Closed-form budgets: e_delta(n), the random-design constant, and
    est = L^2 * c_const * e_delta^2 at the confidence level passed in."""
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if min(n, s0, M, L, A, d, eta) <= 0 or L0 < 0 or not 0.0 < gamma <= 1.0:
        raise ValueError("all budget inputs must be positive (L0 nonnegative)")
    log_inv_delta = math.log(1.0 / delta)
    e_delta = 2.0 * math.sqrt(log_inv_delta) + (
        2.0 * math.sqrt(s0 * math.log(1.0 + n)) + M
    ) * float(n) ** (gamma / (gamma + 2.0))
    # d*log(2 L0 A) can go negative for very flat bases; clamp at 0
    cover = max(d * math.log(2.0 * L0 * A), 0.0) if L0 * A > 0 else 0.0
    c_const = 1.0 + (48.0 * math.sqrt(cover) + 2.0 * math.sqrt(log_inv_delta)) / eta
    est = L**2 * c_const * e_delta**2
    inputs = dict(n=n, delta=delta, gamma=gamma, s0=s0, M=M, L=L, L0=L0, A=A, d=d, eta=eta)
    return ErrorBudget(e_delta, c_const, est, inputs)


def predict_cdf(estimate: CoefficientEstimate, basis: CdfBasis, x, a: int,
                omega_grid: QuadratureGrid, s_grid: QuadratureGrid) -> GridFunction:
    """F_hat(x, a, s_k) = sum_i w_i theta_hat_i phi(x, a, w_i, s_k)."""
    phi = np.asarray(basis.eval_matrix(x, a, omega_grid.nodes, s_grid.coords()))
    values = (omega_grid.weights * estimate.theta_hat.values) @ phi
    return GridFunction(s_grid, values)


def regress(dataset, basis: CdfBasis, gamma: float, M: float,
            omega_grid: QuadratureGrid, s_grid: QuadratureGrid,
            epsilon: float | None = None) -> CoefficientEstimate:
    """The full oracle: design operator, spectral truncation, least squares,
    projection onto C. Deterministic given its inputs."""
    dataset = _check_dataset(dataset)
    if not dataset:
        raise ValueError("dataset must be nonempty")
    op = design_operator(basis, [(x, a) for x, a, _ in dataset], omega_grid, s_grid)
    spec = spectral_decompose(op)
    plan = select_truncation(spec, len(dataset), gamma, epsilon=epsilon)
    theta_d = solve_least_squares(dataset, basis, omega_grid, s_grid, spec, plan)
    estimate = project_to_C(theta_d, op, M)
    diag = Diagnostics(
        loss=loss(estimate.theta_hat, dataset, basis, omega_grid, s_grid),
        n_eps=plan.n_eps,
        projection_iterations=estimate.diagnostics.projection_iterations,
        converged=estimate.diagnostics.converged,
    )
    return CoefficientEstimate(estimate.theta_hat, M, diag)
