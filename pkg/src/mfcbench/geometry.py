"""Bounded convex domains (interval, ball, box) with projection and normal queries.

The reflected particle scheme only needs convexity: metric projection onto the
closure, the outward displacement direction of a projected point, and the
distance to the boundary for building interior-supported vector fields. Ball
and interval have smooth boundaries; the box has corners where the normal is
taken as the normalized sum of the active face normals (a normal-cone
selection). Corner hits are a measure-zero event for the simulated diffusion.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Absolute tolerance for boundary classification; projection onto these
# variants is exact in double precision.
TOL_BD = 1e-12


class GeometryError(ValueError):
    pass


def _as_points(x, dim: int) -> tuple[np.ndarray, bool]:
    """Coerce x to an (n, dim) array; returns (points, was_single)."""
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    if single:
        pts = pts[None, :]
    if pts.ndim != 2 or pts.shape[1] != dim:
        raise GeometryError(f"expected points of dimension {dim}, got shape {pts.shape}")
    return pts, single


@dataclass(frozen=True)
class Domain:
    """Closed bounded convex domain in R^d.

    kind is one of "interval" (d=1, [a,b]), "ball" (center, radius) or
    "box" ([lo_i, hi_i] per axis). Values are immutable; all queries are pure.
    """

    kind: str
    lo: np.ndarray = field(default=None)
    hi: np.ndarray = field(default=None)
    center: np.ndarray = field(default=None)
    radius: float = 0.0

    @staticmethod
    def interval(a: float, b: float) -> "Domain":
        if not a < b:
            raise GeometryError(f"interval needs a < b, got [{a}, {b}]")
        return Domain(kind="interval", lo=np.array([float(a)]), hi=np.array([float(b)]))

    @staticmethod
    def ball(center, radius: float) -> "Domain":
        c = np.asarray(center, dtype=float)
        if c.ndim != 1:
            raise GeometryError("ball center must be a 1-d point")
        if not radius > 0:
            raise GeometryError("ball radius must be positive")
        return Domain(kind="ball", center=c, radius=float(radius))

    @staticmethod
    def box(lo, hi) -> "Domain":
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise GeometryError("box corners must be 1-d points of equal dimension")
        if not np.all(lo < hi):
            raise GeometryError("box needs lo < hi componentwise")
        return Domain(kind="box", lo=lo, hi=hi)

    # -- basic descriptors -------------------------------------------------

    @property
    def dim(self) -> int:
        if self.kind == "ball":
            return self.center.shape[0]
        return self.lo.shape[0]

    def diameter(self) -> float:
        if self.kind == "ball":
            return 2.0 * self.radius
        return float(np.linalg.norm(self.hi - self.lo))

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        if self.kind == "ball":
            return self.center - self.radius, self.center + self.radius
        return self.lo.copy(), self.hi.copy()

    # -- queries -----------------------------------------------------------

    def contains(self, x) -> str:
        """Classify a point as "interior", "boundary" or "exterior"."""
        pts, single = _as_points(x, self.dim)
        if not single:
            raise GeometryError("contains() takes a single point; use contains_all for arrays")
        s = self._signed_dist(pts)[0]
        if s > TOL_BD:
            return "exterior"
        if s >= -TOL_BD:
            return "boundary"
        return "interior"

    def contains_all(self, pts, tol: float = TOL_BD) -> bool:
        pts, _ = _as_points(pts, self.dim)
        return bool(np.all(self._signed_dist(pts) <= tol))

    def _signed_dist(self, pts: np.ndarray) -> np.ndarray:
        """Negative inside, zero on the boundary, positive outside."""
        if self.kind == "ball":
            return np.linalg.norm(pts - self.center, axis=1) - self.radius
        below = self.lo - pts
        above = pts - self.hi
        return np.maximum(below, above).max(axis=1)

    def project(self, x):
        """Metric projection onto the closure.

        Returns (p, delta) with p = argmin_{y in domain} |x - y| (unique by
        convexity) and delta = |x - p|, the local-time increment of the
        reflection scheme. delta = 0 iff x already lies in the domain.
        """
        pts, single = _as_points(x, self.dim)
        if self.kind == "ball":
            rel = pts - self.center
            dist = np.linalg.norm(rel, axis=1)
            outside = dist > self.radius
            proj = pts.copy()
            if np.any(outside):
                proj[outside] = self.center + rel[outside] * (self.radius / dist[outside])[:, None]
        else:
            proj = np.clip(pts, self.lo, self.hi)
        delta = np.linalg.norm(pts - proj, axis=1)
        if single:
            return proj[0], float(delta[0])
        return proj, delta

    def outward_normal(self, x) -> np.ndarray:
        """Unit outward normal at a boundary point.

        Ball: (x-c)/r. Interval: -1 / +1. Box face: signed coordinate unit
        vector; box edge/corner: normalized sum of the active face normals.
        """
        pts, single = _as_points(x, self.dim)
        if not single:
            raise GeometryError("outward_normal() takes a single point")
        if self.contains(pts[0]) != "boundary":
            raise GeometryError("outward_normal requires a boundary point")
        p = pts[0]
        if self.kind == "ball":
            n = (p - self.center) / self.radius
        else:
            n = np.zeros(self.dim)
            n[np.abs(p - self.hi) <= TOL_BD] = 1.0
            n[np.abs(p - self.lo) <= TOL_BD] = -1.0
            n /= np.linalg.norm(n)
        return n

    def distance_to_boundary(self, x) -> float:
        """inf_{y on boundary} |x - y| for x in the domain."""
        pts, single = _as_points(x, self.dim)
        if not single:
            raise GeometryError("distance_to_boundary() takes a single point")
        s = self._signed_dist(pts)[0]
        if s > TOL_BD:
            raise GeometryError("point lies outside the domain")
        return max(-s, 0.0)

    def boundary_distance_all(self, pts) -> np.ndarray:
        pts, _ = _as_points(pts, self.dim)
        s = self._signed_dist(pts)
        if np.any(s > TOL_BD):
            raise GeometryError("some points lie outside the domain")
        return np.maximum(-s, 0.0)

    # -- sampling (test/benchmark plumbing) ---------------------------------

    def sample_uniform(self, rng: np.random.Generator, n: int) -> np.ndarray:
        lo, hi = self.bounding_box()
        if self.kind in ("interval", "box"):
            return rng.uniform(lo, hi, size=(n, self.dim))
        out = np.empty((n, self.dim))
        got = 0
        while got < n:
            cand = rng.uniform(lo, hi, size=(2 * (n - got) + 8, self.dim))
            keep = cand[np.linalg.norm(cand - self.center, axis=1) <= self.radius]
            take = min(len(keep), n - got)
            out[got : got + take] = keep[:take]
            got += take
        return out

    def boundary_samples(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Random boundary points (faces only for the box)."""
        if self.kind == "interval":
            return np.where(rng.random((n, 1)) < 0.5, self.lo, self.hi)
        if self.kind == "ball":
            z = rng.standard_normal((n, self.dim))
            z /= np.linalg.norm(z, axis=1, keepdims=True)
            return self.center + self.radius * z
        pts = rng.uniform(self.lo, self.hi, size=(n, self.dim))
        axes = rng.integers(0, self.dim, size=n)
        sides = rng.random(n) < 0.5
        for i in range(n):
            pts[i, axes[i]] = self.lo[axes[i]] if sides[i] else self.hi[axes[i]]
        return pts


def domain_from_config(cfg: dict) -> Domain:
    """Build a Domain from its JSON description (see cli module)."""
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise GeometryError("domain config must be an object with a 'kind' field")
    kind = cfg["kind"]
    if kind == "interval":
        return Domain.interval(cfg["a"], cfg["b"])
    if kind == "ball":
        return Domain.ball(cfg["center"], cfg["radius"])
    if kind == "box":
        return Domain.box(cfg["lo"], cfg["hi"])
    raise GeometryError(f"unknown domain kind {kind!r}")
