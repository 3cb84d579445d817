"""Independent brute-force oracles for cross-checking the kernels.

These deliberately use different algorithms than ``kernels`` (vertex
enumeration, projected gradient) so that agreement between the two routes
certifies both. Test-suite use only; instances must stay small.
"""

import numpy as np

from .kernels import BoxQP, KnapsackLP


class OracleSizeError(ValueError):
    """Instance too large for exhaustive certification."""


def lp_vertex_oracle(problem: KnapsackLP) -> np.ndarray:
    """Optimal phi by exhaustive enumeration of polytope vertices.

    Every vertex of {0 <= phi <= 1, costs'phi <= budget} has at most one
    fractional coordinate, so enumerating all {0,1} subsets plus one
    budget-saturating fractional extension covers the optimum.
    """
    gains = np.asarray(problem.gains, dtype=np.float64)
    costs = np.asarray(problem.costs, dtype=np.float64)
    budget = float(problem.budget)
    n = gains.shape[0]
    if n > 10:
        raise OracleSizeError(f"vertex oracle limited to n <= 10, got {n}")

    best_phi = np.zeros(n)
    best_obj = 0.0
    for mask in range(1 << n):
        phi = np.array([(mask >> i) & 1 for i in range(n)], dtype=np.float64)
        spent = float(costs @ phi)
        if spent > budget + 1e-12:
            continue
        obj = float(gains @ phi)
        if obj > best_obj:
            best_obj, best_phi = obj, phi.copy()
        slack = budget - spent
        for j in range(n):
            if phi[j] == 1.0 or costs[j] <= 0.0:
                continue
            frac = min(1.0, slack / costs[j])
            if frac <= 0.0:
                continue
            obj_j = obj + gains[j] * frac
            if obj_j > best_obj:
                cand = phi.copy()
                cand[j] = frac
                best_obj, best_phi = obj_j, cand
    return best_phi


def pg_oracle(problem: BoxQP, max_iters: int = 100_000, step: float = None) -> np.ndarray:
    """Projected-gradient ascent on a BoxQP with step 1/L.

    Independent of the coordinate-ascent path used by ``solve_box_qp``.
    """
    quad = np.asarray(problem.quad, dtype=np.float64)
    lin = np.asarray(problem.lin, dtype=np.float64)
    upper = np.asarray(problem.upper, dtype=np.float64)
    if step is None:
        lmax = float(np.linalg.eigvalsh(0.5 * (quad + quad.T))[-1])
        step = 1.0 / lmax if lmax > 0 else 1.0
    lam = np.zeros_like(lin)
    for _ in range(max_iters):
        nxt = np.clip(lam + step * (lin - quad @ lam), 0.0, upper)
        if np.max(np.abs(nxt - lam)) < 1e-14:
            return nxt
        lam = nxt
    return lam


def pg_poison_oracle(direction: np.ndarray, l1_weight: float, ball_radius_sq: float,
                     max_iters: int = 100_000) -> np.ndarray:
    """Projected-gradient oracle for the poisoning step.

    Uses the sign-reduced form: with d_i = sign(c_i) * z_i, z >= 0, the
    program becomes a linear maximization of (|c| - a)'z over the
    nonnegative orthant intersected with the ball, whose projection is
    clip-to-orthant followed by radial scaling.
    """
    c = np.asarray(direction, dtype=np.float64)
    b = np.abs(c) - l1_weight
    radius = np.sqrt(ball_radius_sq)
    if radius == 0.0:
        return np.zeros_like(c)
    scale = float(np.max(np.abs(b)))
    step = 0.1 * radius / scale if scale > 0 else 0.1 * radius
    z = np.zeros_like(c)
    for _ in range(max_iters):
        w = np.maximum(z + step * b, 0.0)
        norm = np.linalg.norm(w)
        if norm > radius:
            w *= radius / norm
        if np.max(np.abs(w - z)) < 1e-15:
            z = w
            break
        z = w
    return np.sign(c) * z
