"""Discrete martingale transport: primal solver, dual triples, contact layers.

The primal problem is the finite LP over couplings of (mu, nu) with per-row
barycenter constraints; basic optimal couplings come from the simplex core.
Dual triples (alpha, gamma, beta) are read off the LP row multipliers, and
contact layers (sets where the dual inequality is tight) are verified or
synthesized by LP feasibility.  Euclidean-cost minimization splits the common
mass mu ^ nu off first and keeps it diagonal.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .geometry import rel_interior_contains
from .lp import EQ, LE, LinearProgram, LpSolution, farkas_gap, solve_lp
from .measures import (ConvexOrderWitness, DiscreteMeasure, common_mass,
                       martingale_system)
from .tolerances import TOL_FEAS, TOL_GAP, TOL_GEOM, gap_bound

_DROP_TOL = 1e-11  # masses at or below this are treated as zero


class ConvexOrderError(Exception):
    """Marginals are not in convex order; carries the convex witness."""

    def __init__(self, witness: ConvexOrderWitness):
        super().__init__(
            f"marginals are not in convex order (witness gap {witness.gap:.3e})")
        self.witness = witness


class OptimalityGapError(Exception):
    """A coupling handed in as optimal is not, within tolerance."""

    def __init__(self, residual: float):
        super().__init__(f"coupling is suboptimal by {residual:.3e}")
        self.residual = residual


class TripleDomainError(LookupError):
    """A dual triple was evaluated at a point it is not defined on."""


# ----------------------------------------------------------------------------
# cost specification


@dataclass(frozen=True)
class CostSpec:
    """|x-y| (euclidean) or |x-y|^p (power, p > 0), with a min/max sense."""

    kind: str
    sense: str
    p: Optional[float] = None

    @staticmethod
    def build(kind: str = "euclidean", sense: str = "min",
              p: Optional[float] = None) -> "CostSpec":
        if kind not in ("euclidean", "power"):
            raise ValueError(f"unknown cost kind {kind!r}")
        if sense not in ("min", "max"):
            raise ValueError(f"unknown sense {sense!r}")
        if kind == "power":
            if p is None or p <= 0:
                raise ValueError("power cost needs an exponent p > 0")
        else:
            p = None
        return CostSpec(kind, sense, p)

    @property
    def maximize(self) -> bool:
        return self.sense == "max"

    @property
    def triple_sense(self) -> str:
        return "E_M" if self.maximize else "E_m"

    @property
    def finite_images_applicable(self) -> bool:
        # the discrete-target polytope structure degenerates at p == 2
        return self.kind == "euclidean" or self.p != 2.0

    def pairwise(self, X, Y) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        dist = np.linalg.norm(X[:, None, :] - Y[None, :, :], axis=2)
        return dist if self.kind == "euclidean" else dist ** self.p

    def paired(self, X, Y) -> np.ndarray:
        """Elementwise costs for stacks of matched points."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        dist = np.linalg.norm(X - Y, axis=1)
        return dist if self.kind == "euclidean" else dist ** self.p

    def __call__(self, x, y) -> float:
        return float(self.pairwise(np.asarray(x)[None, :],
                                   np.asarray(y)[None, :])[0, 0])

    def to_json(self) -> dict:
        obj = {"kind": self.kind, "sense": self.sense}
        if self.p is not None:
            obj["p"] = self.p
        return obj

    @staticmethod
    def from_json(obj: dict) -> "CostSpec":
        return CostSpec.build(obj.get("kind", "euclidean"),
                              obj.get("sense", "min"), obj.get("p"))


# ----------------------------------------------------------------------------
# couplings and support sets


def _match_points(queries: np.ndarray, table: np.ndarray,
                  tol_geom: float = TOL_GEOM) -> np.ndarray:
    """Index of each query point in the table, matched within tol_geom."""
    q = np.atleast_2d(queries)
    dist = np.linalg.norm(q[:, None, :] - table[None, :, :], axis=2)
    idx = dist.argmin(axis=1)
    bad = dist[np.arange(len(q)), idx] > tol_geom
    if np.any(bad):
        raise TripleDomainError(
            f"point {q[int(np.flatnonzero(bad)[0])]} not found in table")
    return idx


@dataclass(frozen=True)
class Coupling:
    """Sparse martingale transport plan over the atoms of (mu, nu)."""

    mu: DiscreteMeasure
    nu: DiscreteMeasure
    rows: np.ndarray    # (k,) indices into mu.atoms
    cols: np.ndarray    # (k,) indices into nu.atoms
    masses: np.ndarray  # (k,) strictly positive
    value: Optional[float] = None  # objective cache from the producing solve

    @staticmethod
    def from_dense(mu: DiscreteMeasure, nu: DiscreteMeasure, matrix: np.ndarray,
                   value: Optional[float] = None,
                   drop_tol: float = _DROP_TOL) -> "Coupling":
        rows, cols = np.nonzero(matrix > drop_tol)
        return Coupling(mu, nu, rows, cols, matrix[rows, cols], value)

    def __len__(self) -> int:
        return len(self.masses)

    def cost_value(self, cost: CostSpec) -> float:
        c = cost.paired(self.mu.atoms[self.rows], self.nu.atoms[self.cols])
        return float(c @ self.masses)

    def fiber(self, i: int) -> Tuple[np.ndarray, np.ndarray]:
        """(y-atoms, masses) reached from atom i of mu."""
        sel = self.rows == i
        return self.nu.atoms[self.cols[sel]], self.masses[sel]

    def residuals(self) -> dict:
        n, m = len(self.mu), len(self.nu)
        row_sum = np.zeros(n)
        np.add.at(row_sum, self.rows, self.masses)
        col_sum = np.zeros(m)
        np.add.at(col_sum, self.cols, self.masses)
        bary = np.zeros((n, self.mu.dim))
        np.add.at(bary, self.rows,
                  self.masses[:, None] * (self.nu.atoms[self.cols] - self.mu.atoms[self.rows]))
        scale = 1.0 + np.linalg.norm(self.mu.atoms, axis=1)
        return {
            "row": float(np.abs(row_sum - self.mu.weights).max()),
            "col": float(np.abs(col_sum - self.nu.weights).max()),
            "barycenter": float((np.linalg.norm(bary, axis=1) / scale).max()),
        }

    def check(self, tol_feas: float = TOL_FEAS) -> bool:
        r = self.residuals()
        return (np.all(self.masses > 0)
                and r["row"] <= tol_feas and r["col"] <= tol_feas
                and r["barycenter"] <= tol_feas)

    def support_set(self, drop_tol: float = 1e-10) -> "SupportSet":
        keep = self.masses > drop_tol
        xs, fibers = [], []
        for i in sorted(set(self.rows[keep].tolist())):
            sel = keep & (self.rows == i)
            xs.append(self.mu.atoms[i])
            fibers.append(self.nu.atoms[self.cols[sel]])
        return SupportSet.build(np.array(xs), fibers)

    def to_json(self) -> dict:
        obj = {"entries": [{"i": int(i), "j": int(j), "mass": float(w)}
                           for i, j, w in zip(self.rows, self.cols, self.masses)]}
        if self.value is not None:
            obj["value"] = float(self.value)
        return obj

    @staticmethod
    def from_json(obj: dict, mu: DiscreteMeasure, nu: DiscreteMeasure) -> "Coupling":
        ent = obj["entries"]
        return Coupling(mu, nu,
                        np.array([e["i"] for e in ent], dtype=int),
                        np.array([e["j"] for e in ent], dtype=int),
                        np.array([e["mass"] for e in ent], dtype=float),
                        obj.get("value"))

    def to_csv(self) -> str:
        lines = ["i,j,mass," + ",".join(f"x{k}" for k in range(self.mu.dim))
                 + "," + ",".join(f"y{k}" for k in range(self.mu.dim))]
        for i, j, w in zip(self.rows, self.cols, self.masses):
            x = ",".join(repr(float(v)) for v in self.mu.atoms[i])
            y = ",".join(repr(float(v)) for v in self.nu.atoms[j])
            lines.append(f"{i},{j},{w!r},{x},{y}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SupportSet:
    """Finite Gamma stored as x-fibers; the object pavings operate on."""

    dim: int
    xs: np.ndarray   # (n, d) pairwise distinct
    fibers: tuple    # per x: (k_i, d) array, nonempty

    @staticmethod
    def build(xs, fibers, tol_geom: float = TOL_GEOM) -> "SupportSet":
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        fib = [np.atleast_2d(np.asarray(f, dtype=float)) for f in fibers]
        if len(xs) != len(fib):
            raise ValueError("one fiber per x-atom required")
        if any(len(f) == 0 for f in fib):
            raise ValueError("every fiber must be nonempty")
        # merge x-atoms that coincide within tol_geom
        keep_x: list = []
        keep_f: list = []
        for x, f in zip(xs, fib):
            for k, q in enumerate(keep_x):
                if np.linalg.norm(x - q) <= tol_geom:
                    keep_f[k] = np.vstack([keep_f[k], f])
                    break
            else:
                keep_x.append(x)
                keep_f.append(f)
        return SupportSet(xs.shape[1], np.array(keep_x), tuple(keep_f))

    def __len__(self) -> int:
        return len(self.xs)

    @property
    def x_projection(self) -> np.ndarray:
        return self.xs

    @cached_property
    def y_projection(self) -> np.ndarray:
        all_y = np.vstack(self.fibers)
        kept: list = []
        for p in all_y:
            if not any(np.linalg.norm(p - q) <= TOL_GEOM for q in kept):
                kept.append(p)
        return np.array(kept)

    def pairs(self):
        for i, f in enumerate(self.fibers):
            for y in f:
                yield i, y

    @cached_property
    def _supporting(self) -> Tuple[bool, tuple]:
        bad = tuple(i for i, f in enumerate(self.fibers)
                    if not rel_interior_contains(f, self.xs[i])[0])
        return (len(bad) == 0, bad)

    @property
    def martingale_supporting(self) -> bool:
        """x in ri conv(Gamma_x) for every x (singletons count as {x})."""
        return self._supporting[0]

    @property
    def offending_x(self) -> tuple:
        return self._supporting[1]

    def to_json(self) -> dict:
        return {"dim": self.dim,
                "fibers": [{"x": list(map(float, x)),
                            "ys": [list(map(float, y)) for y in f]}
                           for x, f in zip(self.xs, self.fibers)]}

    @staticmethod
    def from_json(obj: dict) -> "SupportSet":
        xs = [rec["x"] for rec in obj["fibers"]]
        fibers = [np.asarray(rec["ys"], dtype=float) for rec in obj["fibers"]]
        s = SupportSet.build(np.asarray(xs, dtype=float), fibers)
        if s.dim != int(obj["dim"]):
            raise ValueError("support set dim field mismatch")
        return s


# ----------------------------------------------------------------------------
# admissible triples


@dataclass(frozen=True)
class AdmissibleTriple:
    """(alpha, gamma, beta) with beta(y) - alpha(x) - gamma(x).(y-x) <= c(x,y)
    in the E_m sense (reversed for E_M).  Callables are vectorized over point
    stacks; tabulated triples also expose their raw tables."""

    sense: str
    alpha_fn: Callable
    gamma_fn: Callable
    beta_fn: Callable
    x_atoms: Optional[np.ndarray] = None
    alpha_values: Optional[np.ndarray] = None
    gamma_values: Optional[np.ndarray] = None
    y_atoms: Optional[np.ndarray] = None
    beta_values: Optional[np.ndarray] = None
    degenerate: bool = False

    def alpha(self, pts) -> np.ndarray:
        return self.alpha_fn(np.atleast_2d(np.asarray(pts, dtype=float)))

    def gamma(self, pts) -> np.ndarray:
        return self.gamma_fn(np.atleast_2d(np.asarray(pts, dtype=float)))

    def beta(self, pts) -> np.ndarray:
        return self.beta_fn(np.atleast_2d(np.asarray(pts, dtype=float)))

    def dual_objective(self, mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
        return float(self.beta(nu.atoms) @ nu.weights
                     - self.alpha(mu.atoms) @ mu.weights)

    @staticmethod
    def from_tables(x_atoms, alpha_values, gamma_values, y_atoms, beta_values,
                    sense: str, degenerate: bool = False,
                    tol_geom: float = TOL_GEOM) -> "AdmissibleTriple":
        xa = np.atleast_2d(np.asarray(x_atoms, dtype=float))
        ya = np.atleast_2d(np.asarray(y_atoms, dtype=float))
        av = np.asarray(alpha_values, dtype=float)
        gv = np.atleast_2d(np.asarray(gamma_values, dtype=float))
        bv = np.asarray(beta_values, dtype=float)
        return AdmissibleTriple(
            sense=sense,
            alpha_fn=lambda p: av[_match_points(p, xa, tol_geom)],
            gamma_fn=lambda p: gv[_match_points(p, xa, tol_geom)],
            beta_fn=lambda p: bv[_match_points(p, ya, tol_geom)],
            x_atoms=xa, alpha_values=av, gamma_values=gv,
            y_atoms=ya, beta_values=bv, degenerate=degenerate)

    @staticmethod
    def from_functions(alpha, gamma, beta, sense: str) -> "AdmissibleTriple":
        return AdmissibleTriple(sense, alpha, gamma, beta)


# ----------------------------------------------------------------------------
# primal solve


def _solve_instance_lp(mu: DiscreteMeasure, nu: DiscreteMeasure, cost: CostSpec,
                       tol_feas: float, tol_gap: float) -> LpSolution:
    A, b = martingale_system(mu, nu)
    c = cost.pairwise(mu.atoms, nu.atoms).ravel()
    lp = LinearProgram.build(c, A, (EQ,) * A.shape[0], b, maximize=cost.maximize)
    sol = solve_lp(lp, tol_feas=tol_feas, tol_gap=tol_gap)
    if sol.status == "infeasible":
        n, m, d = len(mu), len(nu), mu.dim
        y = sol.certificate
        w = ConvexOrderWitness(mu.atoms, y[:n], y[n + m:].reshape(n, d), 0.0)
        raise ConvexOrderError(
            ConvexOrderWitness(mu.atoms, y[:n], y[n + m:].reshape(n, d),
                               w.margin(mu, nu)))
    if sol.status != "optimal":  # a coupling polytope is bounded
        raise RuntimeError(f"unexpected LP status {sol.status}")
    return sol


_dual_cache: dict = {}


def _cache_key(mu, nu, cost) -> tuple:
    return (mu.atoms.tobytes(), mu.weights.tobytes(),
            nu.atoms.tobytes(), nu.weights.tobytes(),
            cost.kind, cost.sense, cost.p)


def solve_mot(mu: DiscreteMeasure, nu: DiscreteMeasure, cost: CostSpec,
              split_common_mass: bool = True, tol_feas: float = TOL_FEAS,
              tol_gap: float = TOL_GAP) -> Tuple[Coupling, float]:
    """Basic optimal martingale coupling and its value.

    Minimization splits mu ^ nu off first and keeps it diagonal (disable via
    ``split_common_mass`` for experimentation); the remainder LP is solved and
    the pieces recombined.  Marginals not in convex order raise
    ConvexOrderError carrying the convex witness.
    """
    if mu.dim != nu.dim:
        raise ValueError("measures live in different dimensions")
    if cost.sense == "min" and split_common_mass:
        split = common_mass(mu, nu)
        if split.mass > 0:
            return _solve_with_split(mu, nu, cost, split, tol_feas, tol_gap)
    sol = _solve_instance_lp(mu, nu, cost, tol_feas, tol_gap)
    coupling = Coupling.from_dense(mu, nu, sol.x.reshape(len(mu), len(nu)),
                                   value=sol.objective)
    _dual_cache.clear()
    _dual_cache[_cache_key(mu, nu, cost)] = sol
    return coupling, float(sol.objective)


def _solve_with_split(mu, nu, cost, split, tol_feas, tol_gap):
    mu_idx = {a.tobytes(): i for i, a in enumerate(mu.atoms)}
    nu_idx = {a.tobytes(): j for j, a in enumerate(nu.atoms)}
    rows = [mu_idx[a.tobytes()] for a in split.atoms]
    cols = [nu_idx[a.tobytes()] for a in split.atoms]
    masses = list(split.weights)
    value = float(sum(w * cost(a, a) for w, a in zip(split.weights, split.atoms)))
    if not split.empty_residual:
        rem_cpl, rem_val = solve_mot(split.residual_mu, split.residual_nu, cost,
                                     split_common_mass=False,
                                     tol_feas=tol_feas, tol_gap=tol_gap)
        scale = split.residual_mass
        value += scale * rem_val
        for i, j, w in zip(rem_cpl.rows, rem_cpl.cols, rem_cpl.masses):
            rows.append(mu_idx[split.residual_mu.atoms[i].tobytes()])
            cols.append(nu_idx[split.residual_nu.atoms[j].tobytes()])
            masses.append(scale * w)
    order = np.lexsort((cols, rows))
    coupling = Coupling(mu, nu, np.asarray(rows, dtype=int)[order],
                        np.asarray(cols, dtype=int)[order],
                        np.asarray(masses, dtype=float)[order], value)
    return coupling, value


def recover_dual(mu: DiscreteMeasure, nu: DiscreteMeasure, cost: CostSpec,
                 coupling: Coupling, tol_feas: float = TOL_FEAS,
                 tol_gap: float = TOL_GAP) -> AdmissibleTriple:
    """Dual triple from the LP row multipliers of the instance.

    mu-row multipliers give alpha, barycenter rows give gamma, nu-column
    multipliers give beta; the triple satisfies the sense inequality on all
    of X x Y and equality on the support of any optimal coupling.  A coupling
    whose cost is off the optimal value by more than the gap tolerance raises
    OptimalityGapError.
    """
    key = _cache_key(mu, nu, cost)
    sol = _dual_cache.get(key)
    if sol is None:
        sol = _solve_instance_lp(mu, nu, cost, tol_feas, tol_gap)
        _dual_cache.clear()
        _dual_cache[key] = sol
    residual = abs(coupling.cost_value(cost) - sol.objective)
    if residual > gap_bound(sol.objective, tol_gap):
        raise OptimalityGapError(residual)

    n, m, d = len(mu), len(nu), mu.dim
    y = sol.duals
    alpha = -y[:n]
    beta = y[n:n + m]
    gamma = -y[n + m:].reshape(n, d)
    # degenerate basis (a basic mass at zero) signals non-unique multipliers
    degenerate = bool(len(sol.basis) > int(np.sum(sol.x > _DROP_TOL)))
    triple = AdmissibleTriple.from_tables(mu.atoms, alpha, gamma, nu.atoms, beta,
                                          cost.triple_sense, degenerate)
    slack = (beta[None, :] - alpha[:, None]
             - np.einsum("id,ijd->ij", gamma, nu.atoms[None, :, :] - mu.atoms[:, None, :])
             - cost.pairwise(mu.atoms, nu.atoms))
    worst = slack.max() if cost.sense == "min" else (-slack).max()
    if worst > 10 * tol_feas:
        raise RuntimeError(f"recovered dual violates admissibility by {worst:.3e}")
    return triple


# ----------------------------------------------------------------------------
# contact layers


@dataclass(frozen=True)
class ContactCheck:
    ok: bool
    max_inequality_violation: float
    max_equality_residual: float


def verify_contact_layer(support: SupportSet, triple: AdmissibleTriple,
                         cost: CostSpec, ambient_x=None, ambient_y=None,
                         tol_feas: float = TOL_FEAS) -> ContactCheck:
    """Inequality on the ambient product, equality on the pairs of Gamma.

    The ambient space defaults to the projections of Gamma; passing wider
    X / Y checks admissibility there too.  The triple must be defined on the
    union (missing table entries raise TripleDomainError).
    """
    X = support.xs if ambient_x is None else np.vstack(
        [np.atleast_2d(np.asarray(ambient_x, dtype=float)), support.xs])
    Y = support.y_projection if ambient_y is None else np.vstack(
        [np.atleast_2d(np.asarray(ambient_y, dtype=float)), support.y_projection])
    alpha = triple.alpha(X)
    gamma = triple.gamma(X)
    beta = triple.beta(Y)
    slack = (beta[None, :] - alpha[:, None]
             - np.einsum("id,ijd->ij", gamma, Y[None, :, :] - X[:, None, :])
             - cost.pairwise(X, Y))
    violation = float(slack.max() if triple.sense == "E_m" else (-slack).max())

    eq_res = 0.0
    for i, yv in support.pairs():
        x = support.xs[i][None, :]
        e = (triple.beta(yv[None, :])[0] - triple.alpha(x)[0]
             - float(triple.gamma(x)[0] @ (yv - support.xs[i])) - cost(support.xs[i], yv))
        eq_res = max(eq_res, abs(e))
    ok = violation <= tol_feas and eq_res <= tol_feas
    return ContactCheck(ok, max(violation, 0.0), eq_res)


@dataclass(frozen=True)
class ContactFeasibility:
    feasible: bool
    triple: Optional[AdmissibleTriple]
    certificate_gap: Optional[float]  # Farkas validity margin when infeasible


def contact_layer_feasibility(support: SupportSet, cost: CostSpec,
                              sense: Optional[str] = None,
                              ambient_x=None, ambient_y=None,
                              tol_feas: float = TOL_FEAS) -> ContactFeasibility:
    """Find a triple exposing Gamma as a contact layer, or certify none exists.

    Variables are alpha(x), gamma(x), beta(y) over the ambient atoms (default:
    the projections of Gamma); inequality rows on the ambient product, with
    equality on the pairs of Gamma.  Infeasibility is a valid answer and comes
    with a positive Farkas margin.
    """
    sense = sense or cost.triple_sense
    if sense not in ("E_m", "E_M"):
        raise ValueError(f"unknown sense {sense!r}")
    d = support.dim
    X = support.xs
    if ambient_x is not None:
        X = np.vstack([X, np.atleast_2d(np.asarray(ambient_x, dtype=float))])
        X = _dedup(X)
    Y = support.y_projection
    if ambient_y is not None:
        Y = np.vstack([Y, np.atleast_2d(np.asarray(ambient_y, dtype=float))])
        Y = _dedup(Y)
    nX, nY = len(X), len(Y)
    eq_mask = np.zeros((nX, nY), dtype=bool)
    for i, yv in support.pairs():
        xi = int(_match_points(support.xs[i][None, :], X)[0])
        yj = int(_match_points(yv[None, :], Y)[0])
        eq_mask[xi, yj] = True

    # columns: alpha (nX) | gamma (nX*d) | beta (nY)
    ncols = nX + nX * d + nY
    C = cost.pairwise(X, Y)
    rows_A: list = []
    rows_b: list = []
    senses: list = []
    sign = 1.0 if sense == "E_m" else -1.0  # flip E_M rows into <= form
    for i in range(nX):
        for j in range(nY):
            row = np.zeros(ncols)
            row[i] = -1.0
            row[nX + i * d:nX + (i + 1) * d] = -(Y[j] - X[i])
            row[nX + nX * d + j] = 1.0
            if eq_mask[i, j]:
                rows_A.append(row)
                rows_b.append(C[i, j])
                senses.append(EQ)
            else:
                rows_A.append(sign * row)
                rows_b.append(sign * C[i, j])
                senses.append(LE)
    A = np.vstack(rows_A)
    b = np.asarray(rows_b)
    lp = LinearProgram.build(np.zeros(ncols), A, senses, b,
                             lower=np.full(ncols, -np.inf))
    sol = solve_lp(lp, tol_feas=tol_feas)
    if not sol.optimal:
        return ContactFeasibility(False, None, farkas_gap(lp, sol.certificate))
    alpha = sol.x[:nX]
    gamma = sol.x[nX:nX + nX * d].reshape(nX, d)
    beta = sol.x[nX + nX * d:]
    triple = AdmissibleTriple.from_tables(X, alpha, gamma, Y, beta, sense)
    return ContactFeasibility(True, triple, None)


def _dedup(points: np.ndarray, tol_geom: float = TOL_GEOM) -> np.ndarray:
    kept: list = []
    for p in points:
        if not any(np.linalg.norm(p - q) <= tol_geom for q in kept):
            kept.append(p)
    return np.array(kept)


@dataclass(frozen=True)
class ExposabilityResult:
    exposable: bool
    violating_subset: Optional[tuple]  # ((i, y), ...) pairs, when found
    subsets_tested: int


def check_finitely_exposable(support: SupportSet, cost: CostSpec,
                             k: int = 3, max_subsets: int = 20000,
                             sense: Optional[str] = None) -> ExposabilityResult:
    """Every subset of Gamma of size <= k is a contact layer (own projections).

    Enumerates subsets in deterministic order; the subset count is capped to
    guard the combinatorial blow-up (raise the cap explicitly for big Gamma).
    """
    if k < 1:
        raise ValueError("subset size must be at least 1")
    pairs = [(i, y) for i, y in support.pairs()]
    total = sum(len(list(itertools.combinations(range(len(pairs)), s)))
                for s in range(1, min(k, len(pairs)) + 1))
    if total > max_subsets:
        raise ValueError(f"{total} subsets exceed the cap {max_subsets}")
    tested = 0
    for s in range(1, min(k, len(pairs)) + 1):
        for combo in itertools.combinations(range(len(pairs)), s):
            chosen = [pairs[t] for t in combo]
            xs = [support.xs[i] for i, _ in chosen]
            fibers = [y[None, :] for _, y in chosen]
            sub = SupportSet.build(np.array(xs), fibers)
            tested += 1
            out = contact_layer_feasibility(sub, cost, sense=sense)
            if not out.feasible:
                return ExposabilityResult(False, tuple(chosen), tested)
    return ExposabilityResult(True, None, tested)


def delta_bounds(cost: CostSpec, omega, ypoints) -> Tuple[float, float]:
    """Exact maxima over the finite sets:
    delta1 = max_x c(x, x);  delta2 = max [c(x,y) - c(x,x') - c(x',y)]."""
    om = np.atleast_2d(np.asarray(omega, dtype=float))
    ys = np.atleast_2d(np.asarray(ypoints, dtype=float))
    d1 = float(max(cost(x, x) for x in om))
    C_xy = cost.pairwise(om, ys)          # (n, m)
    C_xx = cost.pairwise(om, om)          # (n, n)
    d2 = -np.inf
    for t in range(len(om)):
        term = C_xy - C_xx[:, t][:, None] - C_xy[t][None, :]
        d2 = max(d2, float(term.max()))
    return d1, d2
