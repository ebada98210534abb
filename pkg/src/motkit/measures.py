"""Finitely supported probability measures on R^d.

Provides convex-order checking via the martingale-coupling feasibility LP
(in the discrete setting, order and coupling existence are the same finite
fact), common-mass splitting, and Newtonian potentials for the subharmonic
comparison of measures in dimension >= 3.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .lp import EQ, LinearProgram, solve_lp
from .tolerances import TOL_FEAS, TOL_GEOM


class UnsupportedDimensionError(ValueError):
    pass


class SingularPointError(ValueError):
    pass


@dataclass(frozen=True)
class DiscreteMeasure:
    """Atoms (pairwise distinct within tol_geom) with strictly positive
    weights summing to one."""

    dim: int
    atoms: np.ndarray    # (n, dim)
    weights: np.ndarray  # (n,)

    @staticmethod
    def build(atoms, weights=None, tol_geom: float = TOL_GEOM,
              normalize: bool = False) -> "DiscreteMeasure":
        pts = np.atleast_2d(np.asarray(atoms, dtype=float))
        n = pts.shape[0]
        w = (np.full(n, 1.0 / n) if weights is None
             else np.asarray(weights, dtype=float))
        if w.shape != (n,):
            raise ValueError("weights must match the number of atoms")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        keep = w > 0
        pts, w = pts[keep], w[keep]
        if len(pts) == 0:
            raise ValueError("measure must carry positive mass")
        # collapse duplicate atoms, merging weights onto the first occurrence
        rep: list = []
        merged: list = []
        for p, wi in zip(pts, w):
            for k, q in enumerate(rep):
                if np.linalg.norm(p - q) <= tol_geom:
                    merged[k] += wi
                    break
            else:
                rep.append(p)
                merged.append(wi)
        pts = np.array(rep)
        w = np.array(merged)
        total = w.sum()
        if not normalize and abs(total - 1.0) > 1e-9:
            raise ValueError(f"weights sum to {total!r}, not 1")
        return DiscreteMeasure(pts.shape[1], pts, w / total)

    def __len__(self) -> int:
        return len(self.atoms)

    def to_json(self) -> dict:
        return {"dim": self.dim,
                "atoms": [list(map(float, a)) for a in self.atoms],
                "weights": [float(w) for w in self.weights]}

    @staticmethod
    def from_json(obj: dict) -> "DiscreteMeasure":
        w = np.asarray(obj["weights"], dtype=float)
        if abs(w.sum() - 1.0) > 1e-9:
            warnings.warn(f"measure weights sum to {w.sum():.12g}; renormalizing")
        m = DiscreteMeasure.build(obj["atoms"], w, normalize=True)
        if m.dim != int(obj["dim"]):
            raise ValueError("measure dim field does not match atom length")
        return m


def barycenter(m: DiscreteMeasure) -> np.ndarray:
    return m.weights @ m.atoms


@dataclass(frozen=True)
class CommonMass:
    """mu ^ nu (unnormalized) plus renormalized remainders.

    ``residual_mass`` is the common total mass of both remainders; when the
    measures coincide it is zero and the remainders are None.
    """

    atoms: np.ndarray
    weights: np.ndarray
    mass: float
    residual_mu: Optional[DiscreteMeasure]
    residual_nu: Optional[DiscreteMeasure]
    residual_mass: float

    @property
    def empty_residual(self) -> bool:
        return self.residual_mu is None


def common_mass(mu: DiscreteMeasure, nu: DiscreteMeasure) -> CommonMass:
    """Atom-wise minimum over exactly coinciding atoms.

    Matching is by exact float equality (atoms within one measure are already
    collapsed); near-coincident atoms across measures are not merged.
    """
    if mu.dim != nu.dim:
        raise ValueError("measures live in different dimensions")
    index = {a.tobytes(): j for j, a in enumerate(nu.atoms)}
    com_atoms: list = []
    com_w: list = []
    mu_res = mu.weights.copy()
    nu_res = nu.weights.copy()
    for i, a in enumerate(mu.atoms):
        j = index.get(a.tobytes())
        if j is None:
            continue
        m = min(mu.weights[i], nu.weights[j])
        com_atoms.append(mu.atoms[i])
        com_w.append(m)
        mu_res[i] -= m
        nu_res[j] -= m
    mass = float(sum(com_w))
    residual = 1.0 - mass
    if residual <= 1e-12:
        return CommonMass(np.array(com_atoms), np.array(com_w), mass,
                          None, None, 0.0)
    rm = DiscreteMeasure.build(mu.atoms[mu_res > 0], mu_res[mu_res > 0],
                               normalize=True)
    rn = DiscreteMeasure.build(nu.atoms[nu_res > 0], nu_res[nu_res > 0],
                               normalize=True)
    com = (np.array(com_atoms) if com_atoms
           else np.zeros((0, mu.dim)))
    return CommonMass(com, np.array(com_w), mass, rm, rn, residual)


# ----------------------------------------------------------------------------
# convex order via the martingale feasibility LP


def martingale_system(mu: DiscreteMeasure, nu: DiscreteMeasure
                      ) -> Tuple[np.ndarray, np.ndarray]:
    """Equality system of MT(mu, nu) over variables pi_ij (i-major order):
    row marginals, column marginals, and per-row barycenter rows."""
    n, m, d = len(mu), len(nu), mu.dim
    A = np.zeros((n + m + n * d, n * m))
    b = np.zeros(n + m + n * d)
    for i in range(n):
        A[i, i * m:(i + 1) * m] = 1.0
        b[i] = mu.weights[i]
    for j in range(m):
        A[n + j, j::m] = 1.0
        b[n + j] = nu.weights[j]
    for i in range(n):
        block = nu.atoms - mu.atoms[i]  # (m, d)
        for k in range(d):
            A[n + m + i * d + k, i * m:(i + 1) * m] = block[:, k]
    return A, b


@dataclass(frozen=True)
class ConvexOrderWitness:
    """A convex function phi = max of affine pieces separating the measures:
    integral against mu exceeds the one against nu by ``gap`` > 0."""

    x_atoms: np.ndarray
    levels: np.ndarray   # (n,)
    slopes: np.ndarray   # (n, d)
    gap: float

    def __call__(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        vals = self.levels[None, :] + np.einsum(
            "nd,knd->kn", self.slopes, pts[:, None, :] - self.x_atoms[None, :, :])
        return vals.max(axis=1)

    def margin(self, mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
        return float(mu.weights @ self(mu.atoms) - nu.weights @ self(nu.atoms))


@dataclass(frozen=True)
class ConvexOrderResult:
    in_order: bool
    coupling: Optional[object]             # motkit.mot.Coupling when in order
    witness: Optional[ConvexOrderWitness]  # separating function otherwise


def check_convex_order(mu: DiscreteMeasure, nu: DiscreteMeasure,
                       tol_feas: float = TOL_FEAS) -> ConvexOrderResult:
    """mu <=_C nu, decided by feasibility of the martingale coupling LP.

    Returns a feasible coupling on success; otherwise the Farkas multipliers
    are rendered as a max-of-affine convex witness phi with
    integral(phi d mu) > integral(phi d nu).
    """
    from .mot import Coupling  # deferred: mot builds on this module

    if mu.dim != nu.dim:
        raise ValueError("measures live in different dimensions")
    A, b = martingale_system(mu, nu)
    lp = LinearProgram.build(np.zeros(A.shape[1]), A, (EQ,) * A.shape[0], b)
    sol = solve_lp(lp, tol_feas=tol_feas)
    n, m, d = len(mu), len(nu), mu.dim
    if sol.optimal:
        coupling = Coupling.from_dense(mu, nu, sol.x.reshape(n, m))
        return ConvexOrderResult(True, coupling, None)
    y = sol.certificate
    witness = ConvexOrderWitness(mu.atoms, y[:n], y[n + m:].reshape(n, d), 0.0)
    gap = witness.margin(mu, nu)
    witness = ConvexOrderWitness(mu.atoms, y[:n], y[n + m:].reshape(n, d), gap)
    return ConvexOrderResult(False, None, witness)


# ----------------------------------------------------------------------------
# Newtonian potentials (d >= 3)


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


def newtonian_potential(m: DiscreteMeasure, x, tol_geom: float = TOL_GEOM):
    """Potential sum_i w_i |x - y_i|^(2-d) / (d (2-d) omega_d).

    Negative everywhere and increasing to 0 at infinity; for d = 3 it equals
    -(1/4 pi) sum_i w_i / |x - y_i|.  Accepts a single point or a stack of
    points; evaluation at an atom raises.
    """
    if m.dim < 3:
        raise UnsupportedDimensionError("Newtonian potential needs d >= 3")
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    dist = np.linalg.norm(pts[:, None, :] - m.atoms[None, :, :], axis=2)
    if np.any(dist <= tol_geom):
        raise SingularPointError("potential evaluated at an atom")
    kappa = 1.0 / (m.dim * (2.0 - m.dim) * unit_ball_volume(m.dim))
    vals = kappa * (dist ** (2.0 - m.dim) @ m.weights)
    return vals if np.asarray(x).ndim == 2 else float(vals[0])


@dataclass(frozen=True)
class SubharmonicReport:
    gaps: np.ndarray       # P_nu - P_mu per grid point
    in_set_u: np.ndarray   # strict positivity mask
    min_gap: float
    fraction_positive: float
    consistent: bool       # gap >= -tol_feas on the whole grid


def subharmonic_order_report(mu: DiscreteMeasure, nu: DiscreteMeasure,
                             grid, tol_feas: float = TOL_FEAS
                             ) -> SubharmonicReport:
    """Pointwise potential comparison P_nu - P_mu on a finite grid.

    Declares the pair consistent with subharmonic order iff the gap is above
    -tol_feas everywhere on the grid; this is a grid check only, not a proof
    about the measures.
    """
    pts = np.atleast_2d(np.asarray(grid, dtype=float))
    gaps = newtonian_potential(nu, pts) - newtonian_potential(mu, pts)
    return SubharmonicReport(
        gaps=gaps,
        in_set_u=gaps > 0,
        min_gap=float(gaps.min()),
        fraction_positive=float(np.mean(gaps > 0)),
        consistent=bool(gaps.min() >= -tol_feas),
    )
