"""Numerical kernels for the trainer and the attacker sub-problems.

Three self-contained solvers:

* ``solve_box_qp``: maximize -1/2 l'Ql + c'l over a box 0 <= l <= ub by
  cyclic exact coordinate ascent. This is the per-node dual step and the
  runtime hot spot; the inner sweep is numba-compiled unless the pure
  numpy path is selected (see ``_accel``).
* ``solve_flip_lp``: the attacker's label-flip step, a fractional knapsack
  solved greedily (provably optimal for this structure).
* ``solve_poison_step``: the attacker's feature-shift step, a closed-form
  soft-threshold followed by scaling onto the norm ball.

Brute-force oracles used to cross-check these live in ``oracles``.
"""

from dataclasses import dataclass

import numpy as np

from ._accel import NUMBA_ENABLED, jit_compile


class KernelError(ValueError):
    """Invalid kernel inputs (NaN entries, negative bounds, bad shapes)."""


@dataclass
class BoxQP:
    """Box-constrained concave QP: maximize -1/2 l'Ql + c'l, 0 <= l <= upper.

    ``quad`` must be symmetric positive semidefinite.
    """

    quad: np.ndarray
    lin: np.ndarray
    upper: np.ndarray

    def objective(self, lam: np.ndarray) -> float:
        return float(-0.5 * lam @ self.quad @ lam + self.lin @ lam)

    def validate_psd(self, tol: float = 1e-8) -> None:
        """Eigenvalue nonnegativity check; intended for small test instances."""
        w = np.linalg.eigvalsh(0.5 * (self.quad + self.quad.T))
        if w[0] < -tol:
            raise KernelError(f"quad not PSD: min eigenvalue {w[0]:.3e}")


@dataclass
class QPResult:
    lam: np.ndarray
    converged: bool
    sweeps: int


@dataclass
class KnapsackLP:
    """Fractional knapsack: maximize gains'phi, costs'phi <= budget, 0 <= phi <= 1."""

    gains: np.ndarray
    costs: np.ndarray
    budget: float

    def objective(self, phi: np.ndarray) -> float:
        return float(self.gains @ phi)


def _box_qp_sweeps_scalar(quad, lin, upper, lam, grad, tol, max_sweeps):
    """Cyclic exact coordinate ascent; lam and grad (= lin - quad @ lam) update in place.

    Returns (sweeps_used, converged). Scalar loops; compiled by numba.
    """
    n = lam.shape[0]
    for s in range(max_sweeps):
        max_delta = 0.0
        for i in range(n):
            g = grad[i]
            d = quad[i, i]
            if d > 0.0:
                new = lam[i] + g / d
                if new < 0.0:
                    new = 0.0
                elif new > upper[i]:
                    new = upper[i]
            elif g > 0.0:
                # zero curvature: the 1-D problem is linear in this coordinate
                new = upper[i]
            else:
                new = 0.0
            delta = new - lam[i]
            if delta != 0.0:
                lam[i] = new
                for j in range(n):
                    grad[j] = grad[j] - quad[i, j] * delta
                if delta < 0.0:
                    delta = -delta
                if delta > max_delta:
                    max_delta = delta
        if max_delta < tol:
            return s + 1, True
    return max_sweeps, False


_box_qp_sweeps_jit = jit_compile(_box_qp_sweeps_scalar)


def _box_qp_sweeps_numpy(quad, lin, upper, lam, grad, tol, max_sweeps):
    """Pure numpy variant of the sweep loop (vectorized gradient update)."""
    n = lam.shape[0]
    diag = np.ascontiguousarray(np.diag(quad))
    for s in range(max_sweeps):
        max_delta = 0.0
        for i in range(n):
            g = grad[i]
            d = diag[i]
            if d > 0.0:
                new = lam[i] + g / d
                if new < 0.0:
                    new = 0.0
                elif new > upper[i]:
                    new = upper[i]
            elif g > 0.0:
                new = upper[i]
            else:
                new = 0.0
            delta = new - lam[i]
            if delta != 0.0:
                lam[i] = new
                grad -= quad[i] * delta
                max_delta = max(max_delta, abs(delta))
        if max_delta < tol:
            return s + 1, True
    return max_sweeps, False


def _sweep_impl():
    return _box_qp_sweeps_jit if NUMBA_ENABLED else _box_qp_sweeps_numpy


def solve_box_qp(problem: BoxQP, tol: float = 1e-8, max_sweeps: int = 1000,
                 warm_start: np.ndarray = None) -> QPResult:
    """Solve a BoxQP by cyclic exact coordinate ascent.

    Each 1-D update is the clamped closed-form maximizer, so the objective
    is non-decreasing across sweeps. Stops when the largest per-coordinate
    change within a sweep drops below ``tol``; if ``max_sweeps`` is reached
    first the best iterate is returned with ``converged=False``.
    """
    if tol <= 0:
        raise KernelError("tol must be > 0")
    quad = np.ascontiguousarray(problem.quad, dtype=np.float64)
    lin = np.asarray(problem.lin, dtype=np.float64)
    upper = np.asarray(problem.upper, dtype=np.float64)
    n = lin.shape[0]
    if quad.shape != (n, n) or upper.shape != (n,):
        raise KernelError(f"shape mismatch: quad {quad.shape}, lin {lin.shape}, upper {upper.shape}")
    if np.isnan(quad).any() or np.isnan(lin).any() or np.isnan(upper).any():
        raise KernelError("NaN in BoxQP inputs")
    if (upper < 0).any():
        raise KernelError("upper bounds must be >= 0")

    if warm_start is None:
        lam = np.zeros(n)
        grad = lin.copy()
    else:
        lam = np.clip(np.asarray(warm_start, dtype=np.float64), 0.0, upper)
        grad = lin - quad @ lam
    if max_sweeps < 1:
        return QPResult(lam=lam, converged=False, sweeps=0)

    sweeps, converged = _sweep_impl()(quad, lin, upper, lam, grad, tol, max_sweeps)
    return QPResult(lam=lam, converged=converged, sweeps=sweeps)


def solve_flip_lp(problem: KnapsackLP) -> np.ndarray:
    """Greedy fractional knapsack: flip fractions phi in [0,1] per sample.

    Samples are taken in descending gain/cost order (ties by lower index),
    positive gains only, fractional on the sample where the budget binds.
    Zero-cost positive-gain samples are always taken fully.
    """
    gains = np.asarray(problem.gains, dtype=np.float64)
    costs = np.asarray(problem.costs, dtype=np.float64)
    if gains.shape != costs.shape or gains.ndim != 1:
        raise KernelError("gains and costs must be equal-length vectors")
    if np.isnan(gains).any() or np.isnan(costs).any():
        raise KernelError("NaN in KnapsackLP inputs")
    if (costs < 0).any() or problem.budget < 0:
        raise KernelError("costs and budget must be >= 0")

    phi = np.zeros_like(gains)
    positive = gains > 0
    phi[positive & (costs == 0)] = 1.0
    priced = np.nonzero(positive & (costs > 0))[0]
    if priced.size == 0:
        return phi
    order = priced[np.argsort(-gains[priced] / costs[priced], kind="stable")]
    remaining = float(problem.budget)
    for i in order:
        if remaining <= 0.0:
            break
        take = min(1.0, remaining / costs[i])
        phi[i] = take
        remaining -= take * costs[i]
    return phi


def solve_poison_step(direction: np.ndarray, l1_weight: float, ball_radius_sq: float) -> np.ndarray:
    """Exact maximizer of c'd - a*||d||_1 subject to ||d||_2^2 <= C.

    Soft-threshold the direction by the l1 weight; if anything survives,
    scale it onto the sphere of radius sqrt(C), otherwise return zero.
    """
    c = np.asarray(direction, dtype=np.float64)
    if np.isnan(c).any():
        raise KernelError("NaN in poison direction")
    if l1_weight < 0 or ball_radius_sq < 0:
        raise KernelError("l1_weight and ball_radius_sq must be >= 0")
    g = np.sign(c) * np.maximum(np.abs(c) - l1_weight, 0.0)
    norm = np.linalg.norm(g)
    if norm == 0.0 or ball_radius_sq == 0.0:
        return np.zeros_like(c)
    return np.sqrt(ball_radius_sq) * g / norm + 0.0  # +0.0 clears signed zeros


def poison_objective(delta: np.ndarray, direction: np.ndarray, l1_weight: float) -> float:
    """Attacker objective c'd - a*||d||_1 for cross-checking solutions."""
    delta = np.asarray(delta, dtype=np.float64)
    return float(np.dot(direction, delta) - l1_weight * np.abs(delta).sum())
