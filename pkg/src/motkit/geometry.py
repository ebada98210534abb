"""Convex-geometric predicates realized as small linear programs.

Finite point sets are the only convex bodies here, so relative interiors are
characterized exactly as strictly positive convex combinations of generators,
and hull membership as a Chebyshev-distance LP; no facet enumeration.  All
predicates carry explicit tolerances: tol_geom for point membership/equality,
tol_strict for strict positivity of weights, tol_rank as the relative
singular-value cutoff for affine ranks.  Borderline-rank inputs may classify
differently than an exact-arithmetic oracle; that is part of the contract.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .lp import EQ, LE, LinearProgram, feasibility_with_margin, solve_lp
from .tolerances import TOL_GEOM, TOL_RANK, TOL_STRICT


@dataclass(frozen=True)
class PointSet:
    """A finite set of points in R^d, duplicates collapsed on construction."""

    dim: int
    points: np.ndarray  # (n, dim)

    @staticmethod
    def build(points, tol_geom: float = TOL_GEOM) -> "PointSet":
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.size == 0:
            raise ValueError("point set must be nonempty")
        kept: list = []
        for p in pts:
            if not any(np.linalg.norm(p - q) <= tol_geom for q in kept):
                kept.append(p)
        return PointSet(pts.shape[1], np.array(kept))

    def __len__(self) -> int:
        return len(self.points)

    def drop(self, index: int) -> "PointSet":
        return PointSet(self.dim, np.delete(self.points, index, axis=0))


def as_point_set(obj, tol_geom: float = TOL_GEOM) -> PointSet:
    return obj if isinstance(obj, PointSet) else PointSet.build(obj, tol_geom)


@dataclass(frozen=True)
class AffineSubspace:
    """base + span(basis rows); basis rows are orthonormal."""

    base: np.ndarray
    basis: np.ndarray  # (dim, ambient)
    dim: int

    def coordinates(self, points: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(points) - self.base) @ self.basis.T

    def distance(self, x: np.ndarray) -> float:
        v = np.asarray(x, dtype=float) - self.base
        return float(np.linalg.norm(v - self.basis.T @ (self.basis @ v)))


def affine_span(P, tol_rank: float = TOL_RANK) -> AffineSubspace:
    """Lowest-dimensional affine subspace containing P (singleton -> dim 0)."""
    P = as_point_set(P)
    pts = P.points
    base = pts.mean(axis=0)
    if len(pts) == 1:
        return AffineSubspace(base, np.zeros((0, P.dim)), 0)
    _, s, Vt = np.linalg.svd(pts - base, full_matrices=False)
    if s[0] <= 1e-13 * (1.0 + np.abs(base).max()):
        return AffineSubspace(base, np.zeros((0, P.dim)), 0)
    rank = int(np.sum(s > tol_rank * s[0]))
    return AffineSubspace(base, Vt[:rank], rank)


def conv_distance(Q, x) -> float:
    """Chebyshev (L-infinity) distance from x to the convex hull of Q."""
    Q = as_point_set(Q)
    x = np.asarray(x, dtype=float)
    pts, n, d = Q.points, len(Q), Q.dim
    if n == 1:
        return float(np.abs(pts[0] - x).max())
    # min e  s.t.  -e <= Q^T lam - x <= e,  sum lam = 1,  lam >= 0
    A = np.zeros((2 * d + 1, n + 1))
    b = np.zeros(2 * d + 1)
    senses = [LE] * (2 * d) + [EQ]
    A[:d, :n] = pts.T
    A[:d, n] = -1.0
    b[:d] = x
    A[d:2 * d, :n] = -pts.T
    A[d:2 * d, n] = -1.0
    b[d:2 * d] = -x
    A[2 * d, :n] = 1.0
    b[2 * d] = 1.0
    c = np.zeros(n + 1)
    c[n] = 1.0
    sol = solve_lp(LinearProgram.build(c, A, senses, b))
    if not sol.optimal:  # cannot happen: e large enough is always feasible
        raise RuntimeError("hull-distance LP failed")
    return max(float(sol.objective), 0.0)


def rel_interior_contains(P, x, tol_geom: float = TOL_GEOM,
                          tol_strict: float = TOL_STRICT,
                          ) -> Tuple[bool, Optional[np.ndarray]]:
    """Is x a strictly positive convex combination of P?  Witness on success.

    Decided in the coordinates of the affine span of P: points further than
    tol_geom from the span are rejected outright; otherwise the maximum-margin
    weight LP must achieve a minimum weight above tol_strict.
    """
    P = as_point_set(P)
    x = np.asarray(x, dtype=float)
    if x.shape != (P.dim,):
        raise ValueError("query point has wrong dimension")
    span = affine_span(P)
    if span.distance(x) > tol_geom:
        return False, None
    if span.dim == 0:
        return True, np.full(len(P), 1.0 / len(P))
    coords = span.coordinates(P.points)        # (n, r)
    xc = span.coordinates(x[None, :])[0]       # (r,)
    fm = feasibility_with_margin(coords.T, xc, [len(P)])
    if fm.status != "optimal" or fm.t <= tol_strict:
        return False, None
    return True, fm.weights


def rel_interiors_intersect(P, Q, tol_geom: float = TOL_GEOM,
                            tol_strict: float = TOL_STRICT) -> bool:
    """ri conv(P) meets ri conv(Q)?

    Singletons follow the convention IC({x}) = {x}: two singletons intersect
    iff the points coincide within tol_geom.  The general case maximizes the
    joint minimum weight t subject to both combinations meeting, returning
    true iff t* > tol_strict.
    """
    P, Q = as_point_set(P), as_point_set(Q)
    if P.dim != Q.dim:
        raise ValueError("ambient dimensions differ")
    if len(P) == 1 and len(Q) == 1:
        return bool(np.linalg.norm(P.points[0] - Q.points[0]) <= tol_geom)
    if len(P) == 1:
        return rel_interior_contains(Q, P.points[0], tol_geom, tol_strict)[0]
    if len(Q) == 1:
        return rel_interior_contains(P, Q.points[0], tol_geom, tol_strict)[0]
    lo = np.maximum(P.points.min(axis=0), Q.points.min(axis=0))
    hi = np.minimum(P.points.max(axis=0), Q.points.max(axis=0))
    if np.any(lo > hi + tol_geom):  # bounding boxes strictly apart
        return False
    eqs = np.concatenate([P.points.T, -Q.points.T], axis=1)
    fm = feasibility_with_margin(eqs, np.zeros(P.dim), [len(P), len(Q)])
    return fm.status == "optimal" and fm.t > tol_strict


def rel_interior_subset(P, Q, tol_geom: float = TOL_GEOM,
                        tol_strict: float = TOL_STRICT) -> bool:
    """ri conv(P) contained in ri conv(Q)?

    Equivalent to conv(P) subset of conv(Q) together with the relative
    interiors meeting: a point of ri conv(P) on the relative boundary of
    conv(Q) would contradict the open-segment principle.
    """
    P, Q = as_point_set(P), as_point_set(Q)
    if any(conv_distance(Q, p) > tol_geom for p in P.points):
        return False
    return rel_interiors_intersect(P, Q, tol_geom, tol_strict)


def extreme_points(P, tol_geom: float = TOL_GEOM) -> PointSet:
    """Vertices of conv(P): the p with p not in conv(P minus p)."""
    P = as_point_set(P)
    if len(P) == 1:
        return P
    keep = [i for i in range(len(P))
            if conv_distance(P.drop(i), P.points[i]) > tol_geom]
    if not keep:  # cannot happen for a nonempty finite set
        raise RuntimeError("extreme-point scan removed every point")
    return PointSet(P.dim, P.points[keep])
