"""Empirical measures on a bounded convex domain and discrete optimal transport.

Exact Wasserstein distances are computed with three routes: monotone pairing
in 1-d for equal-weight clouds of equal size, the assignment problem in higher
dimension, and a transportation linear program for general weights. A sorted
quantile-merge oracle (independent of the plan machinery) covers 1-d, and an
entropic Sinkhorn solver covers supports beyond the exact-solver limits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment, linprog

from .geometry import Domain

#: exact transportation LP is refused above this support size
LP_SUPPORT_LIMIT = 512
#: equal-weight assignment route (monotone pairing / Hungarian) cap
ASSIGN_SUPPORT_LIMIT = 4096

MARGINAL_TOL = 1e-9
WEIGHT_TOL = 1e-12


class MeasureError(ValueError):
    pass


class SupportTooLarge(MeasureError):
    """Raised when the exact solver limit is exceeded; use wasserstein_sinkhorn."""


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Weighted point cloud on the closed domain; weights sum to one."""

    domain: Domain
    points: np.ndarray
    weights: np.ndarray

    @staticmethod
    def create(domain: Domain, points, weights=None, validate: bool = True) -> "EmpiricalMeasure":
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != domain.dim:
            raise MeasureError(f"points have dimension {pts.shape[1]}, domain has {domain.dim}")
        n = pts.shape[0]
        w = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, dtype=float)
        if validate:
            if w.shape != (n,):
                raise MeasureError("weights must match the number of support points")
            if np.any(w < -WEIGHT_TOL):
                raise MeasureError("weights must be nonnegative")
            if abs(w.sum() - 1.0) > WEIGHT_TOL:
                raise MeasureError(f"weights sum to {w.sum()}, expected 1")
            if not domain.contains_all(pts, tol=1e-9):
                raise MeasureError("support points must lie in the domain")
        pts = pts.copy()
        w = np.clip(w, 0.0, None)
        pts.setflags(write=False)
        w.setflags(write=False)
        return EmpiricalMeasure(domain=domain, points=pts, weights=w)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def mean(self) -> np.ndarray:
        return self.weights @ self.points

    def pair(self, f) -> float:
        """Integral of f against the measure; f maps (n,d) points to (n,) values."""
        return float(self.weights @ np.asarray(f(self.points), dtype=float))

    def __sub__(self, other: "EmpiricalMeasure") -> "SignedCombo":
        return SignedCombo(((1.0, self), (-1.0, other)))


@dataclass(frozen=True)
class SignedCombo:
    """Finite signed combination of empirical measures (e.g. mu - nu)."""

    terms: tuple

    def pair(self, f) -> float:
        return sum(c * m.pair(f) for c, m in self.terms)

    @property
    def total_abs_mass(self) -> float:
        return sum(abs(c) for c, _ in self.terms)

    @property
    def dim(self) -> int:
        return self.terms[0][1].dim


def moment(m, n) -> float:
    """Monomial moment <m, x^n> for a measure or signed combination."""
    n = tuple(int(k) for k in np.atleast_1d(n))

    def mono(pts):
        out = np.ones(pts.shape[0])
        for i, k in enumerate(n):
            if k:
                out *= pts[:, i] ** k
        return out

    return float(m.pair(mono))


@dataclass(frozen=True)
class TransportPlan:
    """Discrete coupling stored in sparse triplet form."""

    source: EmpiricalMeasure
    target: EmpiricalMeasure
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    order: int
    cost: float  # sum pi_ij |x_i - y_j|^order

    @property
    def value(self) -> float:
        return float(self.cost ** (1.0 / self.order))

    def row_marginals(self) -> np.ndarray:
        return np.bincount(self.rows, weights=self.vals, minlength=self.source.size)

    def col_marginals(self) -> np.ndarray:
        return np.bincount(self.cols, weights=self.vals, minlength=self.target.size)

    def marginal_violation(self) -> float:
        dr = np.abs(self.row_marginals() - self.source.weights).max()
        dc = np.abs(self.col_marginals() - self.target.weights).max()
        return float(max(dr, dc))

    def as_dense(self) -> np.ndarray:
        out = np.zeros((self.source.size, self.target.size))
        np.add.at(out, (self.rows, self.cols), self.vals)
        return out


def _pairwise_cost(x: np.ndarray, y: np.ndarray, p: int) -> np.ndarray:
    diff = x[:, None, :] - y[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    return dist if p == 1 else dist**p


def _plan_from_permutation(mu, nu, perm, p) -> TransportPlan:
    n = mu.size
    rows = np.arange(n)
    vals = np.full(n, 1.0 / n)
    cost = float(np.sum(np.linalg.norm(mu.points - nu.points[perm], axis=1) ** p) / n)
    return TransportPlan(mu, nu, rows, np.asarray(perm), vals, p, cost)


def wasserstein_exact(mu: EmpiricalMeasure, nu: EmpiricalMeasure, p: int = 2):
    """Exact W_p with an optimal plan.

    Equal-size equal-weight clouds are solved as an assignment problem
    (monotone pairing in 1-d, Hungarian otherwise, up to ASSIGN_SUPPORT_LIMIT
    points); general weights go through a transportation LP limited to
    LP_SUPPORT_LIMIT points per side. Ties are resolved deterministically
    (stable sort in 1-d, solver order otherwise).
    """
    if p not in (1, 2):
        raise MeasureError("order p must be 1 or 2")
    if mu.dim != nu.dim:
        raise MeasureError("dimension mismatch")
    n, m = mu.size, nu.size
    uniform = (
        n == m
        and np.all(np.abs(mu.weights - 1.0 / n) <= WEIGHT_TOL)
        and np.all(np.abs(nu.weights - 1.0 / n) <= WEIGHT_TOL)
    )
    if uniform and mu.dim == 1:
        if n > 10 * ASSIGN_SUPPORT_LIMIT:
            raise SupportTooLarge(f"support {n} too large; use wasserstein_sinkhorn")
        # monotone rearrangement is optimal for |x-y|^p, p >= 1, in 1-d
        src_order = np.argsort(mu.points[:, 0], kind="stable")
        dst_order = np.argsort(nu.points[:, 0], kind="stable")
        perm = np.empty(n, dtype=int)
        perm[src_order] = dst_order
        plan = _plan_from_permutation(mu, nu, perm, p)
        return plan.value, plan
    if uniform:
        if n > ASSIGN_SUPPORT_LIMIT:
            raise SupportTooLarge(f"support {n} too large; use wasserstein_sinkhorn")
        cost = _pairwise_cost(mu.points, nu.points, p)
        ri, ci = linear_sum_assignment(cost)
        perm = np.empty(n, dtype=int)
        perm[ri] = ci
        plan = _plan_from_permutation(mu, nu, perm, p)
        return plan.value, plan
    if n > LP_SUPPORT_LIMIT or m > LP_SUPPORT_LIMIT:
        raise SupportTooLarge(
            f"general-weight supports {n}x{m} exceed {LP_SUPPORT_LIMIT}; use wasserstein_sinkhorn"
        )
    cost = _pairwise_cost(mu.points, nu.points, p)
    # transportation LP: row sums = mu.weights, col sums = nu.weights (last
    # column constraint dropped as redundant); sparse constraints
    var = np.arange(n * m)
    row_con = np.repeat(np.arange(n), m)
    col_con = n + (var % m)
    keep = col_con < n + m - 1
    a_eq = sparse.coo_matrix(
        (
            np.ones(n * m + keep.sum()),
            (
                np.concatenate([row_con, col_con[keep]]),
                np.concatenate([var, var[keep]]),
            ),
        ),
        shape=(n + m - 1, n * m),
    ).tocsr()
    b_eq = np.concatenate([mu.weights, nu.weights[: m - 1]])
    res = linprog(cost.ravel(), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if not res.success:
        raise MeasureError(f"transportation LP failed: {res.message}")
    pi = res.x.reshape(n, m)
    rows, cols = np.nonzero(pi > WEIGHT_TOL / (n * m))
    vals = pi[rows, cols]
    total = float(np.sum(pi * cost))
    plan = TransportPlan(mu, nu, rows, cols, vals, p, total)
    return plan.value, plan


def wasserstein_1d_quantile(mu: EmpiricalMeasure, nu: EmpiricalMeasure, p: int = 2) -> float:
    """Exact 1-d W_p via the quantile coupling, W_p^p = int_0^1 |F_mu^-1 - F_nu^-1|^p.

    Independent oracle for the plan-based solver: works directly on the merged
    CDF breakpoints of the two samples.
    """
    if mu.dim != 1 or nu.dim != 1:
        raise MeasureError("quantile formula requires dimension 1")
    if p not in (1, 2):
        raise MeasureError("order p must be 1 or 2")
    xs, xw = _sorted_support(mu)
    ys, yw = _sorted_support(nu)
    cx = np.cumsum(xw)
    cy = np.cumsum(yw)
    levels = np.unique(np.concatenate([cx, cy, [1.0]]))
    levels = levels[levels <= 1.0 + 1e-15]
    total = 0.0
    prev = 0.0
    ix = iy = 0
    for u in levels:
        du = u - prev
        if du > 1e-16:
            total += du * abs(xs[ix] - ys[iy]) ** p
        prev = u
        while ix < len(cx) - 1 and cx[ix] <= u + 1e-15:
            ix += 1
        while iy < len(cy) - 1 and cy[iy] <= u + 1e-15:
            iy += 1
    return float(total ** (1.0 / p))


def _sorted_support(m: EmpiricalMeasure):
    order = np.argsort(m.points[:, 0], kind="stable")
    return m.points[order, 0], m.weights[order]


def wasserstein_sinkhorn(
    mu: EmpiricalMeasure,
    nu: EmpiricalMeasure,
    p: int = 2,
    eps: float = 1e-2,
    max_iter: int = 20000,
    tol: float = 1e-8,
):
    """Entropic-regularized transport in the log domain.

    Returns (value, plan, converged). The value reports the transport cost of
    the regularized plan (entropy excluded); marginal violation below `tol`
    defines convergence, non-convergence is reported rather than raised.
    """
    if eps <= 0:
        raise MeasureError("regularization eps must be positive")
    cost = _pairwise_cost(mu.points, nu.points, p)
    logw = np.log(np.clip(mu.weights, 1e-300, None))
    logv = np.log(np.clip(nu.weights, 1e-300, None))
    f = np.zeros(mu.size)
    g = np.zeros(nu.size)
    converged = False
    for _ in range(max_iter):
        # f-update then g-update; marginals checked on the primal plan
        mat = (f[:, None] + g[None, :] - cost) / eps
        f = f + eps * (logw - _logsumexp_rows(mat))
        mat = (f[:, None] + g[None, :] - cost) / eps
        g = g + eps * (logv - _logsumexp_rows(mat.T))
        pi = np.exp((f[:, None] + g[None, :] - cost) / eps)
        err = max(
            np.abs(pi.sum(axis=1) - mu.weights).max(),
            np.abs(pi.sum(axis=0) - nu.weights).max(),
        )
        if err < tol:
            converged = True
            break
    rows, cols = np.nonzero(pi > 1e-300)
    vals = pi[rows, cols]
    total = float(np.sum(pi * cost))
    plan = TransportPlan(mu, nu, rows, cols, vals, p, total)
    return plan.value, plan, converged


def _logsumexp_rows(mat: np.ndarray) -> np.ndarray:
    mx = mat.max(axis=1)
    return mx + np.log(np.exp(mat - mx[:, None]).sum(axis=1))


def w1_dual_gap(mu: EmpiricalMeasure, nu: EmpiricalMeasure, h, rng=None, n_checks: int = 2000) -> float:
    """<mu,h> - <nu,h> for a 1-Lipschitz h; a lower bound on W_1 by duality.

    The Lipschitz constant is spot-checked on sampled support pairs; a sampled
    violation raises.
    """
    pts = np.concatenate([mu.points, nu.points], axis=0)
    if rng is None:
        rng = np.random.default_rng(0)
    k = min(n_checks, pts.shape[0] ** 2)
    ii = rng.integers(0, pts.shape[0], size=k)
    jj = rng.integers(0, pts.shape[0], size=k)
    hv = np.asarray(h(pts), dtype=float)
    gap = np.abs(hv[ii] - hv[jj]) - np.linalg.norm(pts[ii] - pts[jj], axis=1)
    if np.any(gap > 1e-9):
        raise MeasureError("test function violates the 1-Lipschitz bound on sampled pairs")
    return float(mu.pair(h) - nu.pair(h))


def barycentric_map(plan: TransportPlan) -> np.ndarray:
    """Barycentric projection T(x_i) = sum_j pi_ij y_j / w_i of a plan."""
    w = plan.row_marginals()
    if np.any(w <= 0):
        raise MeasureError("plan has a zero-weight row")
    num = np.zeros((plan.source.size, plan.target.dim))
    np.add.at(num, plan.rows, plan.vals[:, None] * plan.target.points[plan.cols])
    return num / w[:, None]


def grad_w2_squared(mu: EmpiricalMeasure, zeta: EmpiricalMeasure) -> np.ndarray:
    """Intrinsic derivative field of mu -> W_2^2(mu, zeta) on the support of mu.

    Equals 2(x - T(x)) with T the barycentric projection of the optimal
    quadratic plan; exact when the plan is a map.
    """
    _, plan = wasserstein_exact(mu, zeta, p=2)
    return 2.0 * (mu.points - barycentric_map(plan))


def pushforward(mu: EmpiricalMeasure, v, eps: float) -> EmpiricalMeasure:
    """Image of mu under x -> project(x + eps * v(x)); weights unchanged."""
    if callable(v):
        field = np.asarray(v(mu.points), dtype=float)
    else:
        field = np.asarray(v, dtype=float)
    if field.shape != mu.points.shape:
        raise MeasureError(f"vector field shape {field.shape} != support shape {mu.points.shape}")
    moved = mu.points + eps * field
    proj, _ = mu.domain.project(moved)
    return EmpiricalMeasure.create(mu.domain, proj, mu.weights, validate=False)
