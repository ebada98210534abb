"""Dense linear programming core.

A self-contained two-phase primal simplex on a dense tableau, returning basic
(vertex) solutions, dual multipliers per row, reduced costs, and Farkas-type
infeasibility certificates.  Instances in this package are small (at most a
few thousand variables), so a dense tableau with deterministic pivoting is
preferred over speed.

Pivoting is Dantzig pricing with lowest-index tie-breaking, switching to
Bland's entering rule whenever the objective stalls, which safeguards against
cycling.  The ratio test is a two-pass Harris test: among rows within a
feasibility tolerance of the minimum ratio it prefers the numerically largest
pivot, breaking remaining ties by the lowest basic-variable index, so results
are reproducible across runs and platforms.  The tableau is rebuilt from the
basis at phase boundaries, periodically, and whenever instability is detected;
a numerically singular basis is repaired by re-introducing artificials and
resuming phase 1.

There is no presolve; callers are responsible for removing zero-weight atoms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .tolerances import TOL_FEAS, TOL_GAP

_PIVOT_TOL = 1e-9
_RC_TOL = 1e-9
_RATIO_SLACK = 1e-7
_STALL_LIMIT = 64
_REFACTOR_EVERY = 300
_CHECK_EVERY = 32

LE, EQ, GE = "<=", "==", ">="


class LpError(Exception):
    """Malformed linear program."""


class _BasisSingular(Exception):
    """Internal: the working basis lost numerical rank."""


class _IterationLimit(Exception):
    """Internal: a pivoting phase failed to terminate (degenerate cycling)."""


@dataclass(frozen=True)
class LinearProgram:
    """min/max  c|x  s.t.  A x (<=,==,>=) b,  lower <= x <= upper."""

    c: np.ndarray
    A: np.ndarray
    senses: tuple
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    maximize: bool = False

    @staticmethod
    def build(c, A, senses, b, lower=None, upper=None, maximize=False) -> "LinearProgram":
        c = np.asarray(c, dtype=float)
        A = np.asarray(A, dtype=float)
        if A.ndim != 2:
            raise LpError("constraint matrix must be 2-dimensional")
        m, n = A.shape
        b = np.asarray(b, dtype=float)
        if c.shape != (n,) or b.shape != (m,) or len(senses) != m:
            raise LpError("inconsistent LP dimensions")
        lower = np.zeros(n) if lower is None else np.asarray(lower, dtype=float)
        upper = np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float)
        if lower.shape != (n,) or upper.shape != (n,):
            raise LpError("bound vectors must match the number of variables")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise LpError("objective, matrix and rhs entries must be finite")
        if np.any(lower > upper):
            raise LpError("lower bound exceeds upper bound")
        for s in senses:
            if s not in (LE, EQ, GE):
                raise LpError(f"unknown row sense {s!r}")
        return LinearProgram(c, A, tuple(senses), b, lower, upper, maximize)


@dataclass(frozen=True)
class LpSolution:
    """Outcome of a solve.

    For ``status == "optimal"`` the point is basic, ``duals``/``reduced_costs``
    certify optimality for the stated direction, and ``gap`` is the absolute
    primal-dual difference.  For ``status == "infeasible"`` the ``certificate``
    is a row combination y with  sup_x y|Ax < y|b  over the variable box; for
    ``status == "unbounded"`` it is an improving ray.
    """

    status: str
    x: Optional[np.ndarray] = None
    duals: Optional[np.ndarray] = None
    reduced_costs: Optional[np.ndarray] = None
    objective: Optional[float] = None
    gap: Optional[float] = None
    basis: tuple = ()
    certificate: Optional[np.ndarray] = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def farkas_gap(lp: LinearProgram, y: np.ndarray) -> float:
    """Validity margin of an infeasibility certificate (positive = valid):
    the certificate proves max over the box of (A|y)|x falls short of y|b."""
    g = lp.A.T @ y
    best = 0.0
    for j in range(lp.A.shape[1]):
        if g[j] > 0:
            if not np.isfinite(lp.upper[j]):
                return -np.inf
            best += g[j] * lp.upper[j]
        elif g[j] < 0:
            if not np.isfinite(lp.lower[j]):
                return -np.inf
            best += g[j] * lp.lower[j]
    return float(y @ lp.b - best)


# ----------------------------------------------------------------------------
# standard-form bookkeeping


@dataclass
class _Standardized:
    A: np.ndarray            # m_std x n_std, equalities with b >= 0
    b: np.ndarray
    c: np.ndarray            # min-sense costs over std variables
    col_var: list            # per std column: original variable index (-1 slack)
    col_sign: list           # +1 shifted, -1 mirrored / negative split half
    base: np.ndarray         # per original variable: constant offset
    row_orig: list           # per std row: original row index or -1 (bound row)
    row_sign: np.ndarray     # +-1 applied to reach b >= 0


def _standardize(c_min: np.ndarray, lp: LinearProgram) -> _Standardized:
    m, n = lp.A.shape
    col_var: list = []
    col_sign: list = []
    base = np.zeros(n)
    cols: list = []
    costs: list = []
    upper_caps: list = []  # (std column, cap) for two-sided bounds

    for j in range(n):
        lo, up = lp.lower[j], lp.upper[j]
        aj = lp.A[:, j]
        if np.isfinite(lo):
            base[j] = lo
            col_var.append(j)
            col_sign.append(1)
            cols.append(aj.copy())
            costs.append(c_min[j])
            if np.isfinite(up):
                upper_caps.append((len(cols) - 1, up - lo))
        elif np.isfinite(up):
            base[j] = up
            col_var.append(j)
            col_sign.append(-1)
            cols.append(-aj)
            costs.append(-c_min[j])
        else:
            col_var.extend([j, j])
            col_sign.extend([1, -1])
            cols.append(aj.copy())
            cols.append(-aj)
            costs.extend([c_min[j], -c_min[j]])

    n_struct = len(cols)
    ineq_rows = [i for i, s in enumerate(lp.senses) if s != EQ]
    n_slack = len(ineq_rows)
    n_bound = len(upper_caps)
    m_std = m + n_bound
    N = n_struct + n_slack + n_bound

    A_std = np.zeros((m_std, N))
    if n_struct:
        A_std[:m, :n_struct] = np.column_stack(cols)
    for t, i in enumerate(ineq_rows):
        A_std[i, n_struct + t] = 1.0 if lp.senses[i] == LE else -1.0
    for t, (k, cap) in enumerate(upper_caps):
        A_std[m + t, k] = 1.0
        A_std[m + t, n_struct + n_slack + t] = 1.0

    b_std = np.concatenate([lp.b - lp.A @ base,
                            np.array([cap for _, cap in upper_caps])])
    c_std = np.concatenate([np.asarray(costs), np.zeros(n_slack + n_bound)])
    col_var.extend([-1] * (n_slack + n_bound))
    col_sign.extend([0] * (n_slack + n_bound))
    row_orig = list(range(m)) + [-1] * n_bound

    row_sign = np.ones(m_std)
    neg = b_std < 0
    row_sign[neg] = -1.0
    A_std[neg] *= -1.0
    b_std[neg] *= -1.0
    return _Standardized(A_std, b_std, c_std, col_var, col_sign, base,
                         row_orig, row_sign)


# ----------------------------------------------------------------------------
# tableau simplex


def _pivot(T: np.ndarray, prow: int, pcol: int) -> None:
    T[prow] /= T[prow, pcol]
    col = T[:, pcol].copy()
    col[prow] = 0.0
    T -= np.outer(col, T[prow])
    T[:, pcol] = 0.0
    T[prow, pcol] = 1.0


class _Tableau:
    """Simplex tableau refreshed from the basis whenever drift shows.

    Rank-1 updates accumulate error; rebuilding B^-1 [A | b] at phase
    boundaries, every _REFACTOR_EVERY pivots, and on instability keeps
    residuals at factorization accuracy.  Artificial variables have ids
    N..N+m-1 (column e_{id-N}); their columns are never stored.
    """

    def __init__(self, A: np.ndarray, b: np.ndarray):
        self.A = A
        self.b = b
        self.m, self.N = A.shape
        self.basis = np.arange(self.N, self.N + self.m)
        self.T = np.zeros((self.m + 1, self.N + 1))
        self.costs: Optional[np.ndarray] = None
        self.scale = 1.0 + max(float(np.abs(A).max(initial=0.0)),
                               float(np.abs(b).max(initial=0.0)))
        # rows recognized as linearly dependent on the others; they keep a
        # zero-level artificial forever and only ever hold noise, so they are
        # barred from the ratio test
        self.dead = np.zeros(self.m, dtype=bool)
        # reference basis matrix of the lexicographic ratio test, when active
        self.lex_ref: Optional[np.ndarray] = None

    def set_lex(self, active: bool) -> None:
        """(De)activate the lexicographic ratio test.

        The reference is the current basis matrix, so the tracked block
        B^-1 B_ref starts as the identity and every row starts
        lexicographically positive; the test then provably prevents any
        basis from repeating, under any entering rule.
        """
        if active:
            self.lex_ref = self.basis_matrix()
            self.T = np.zeros((self.m + 1, self.N + self.m + 1))
        else:
            self.lex_ref = None
            self.T = np.zeros((self.m + 1, self.N + 1))

    def basis_matrix(self) -> np.ndarray:
        B = np.zeros((self.m, self.m))
        for r, col in enumerate(self.basis):
            if col < self.N:
                B[:, r] = self.A[:, col]
            else:
                B[col - self.N, r] = 1.0
        return B

    def rebuild(self, costs: Optional[np.ndarray]) -> None:
        """Tableau for the current basis; costs=None means the phase-1
        objective (total artificial mass)."""
        self.costs = costs
        m, N = self.m, self.N
        B = self.basis_matrix()
        rhs = [self.A, self.b[:, None]]
        if self.lex_ref is not None:
            rhs.append(self.lex_ref)
        try:
            sol = np.linalg.solve(B, np.concatenate(rhs, axis=1))
        except np.linalg.LinAlgError as exc:
            raise _BasisSingular from exc
        if not np.all(np.isfinite(sol)):
            raise _BasisSingular
        self.T[:m, :N] = sol[:, :N]
        self.T[:m, -1] = sol[:, N]
        if self.lex_ref is not None:
            self.T[:m, N:N + m] = sol[:, N + 1:]
        if costs is None:
            cB = (self.basis >= N).astype(float)
            cN = np.zeros(N)
        else:
            cB = np.where(self.basis < N, costs[np.minimum(self.basis, N - 1)], 0.0)
            cN = costs
        self.T[m, :N] = cN - cB @ self.T[:m, :N]
        self.T[m, -1] = -cB @ self.T[:m, -1]

    def run(self, rc_tol: float, max_iter: int, bland_start: bool = False,
            refactor_every: int = _REFACTOR_EVERY) -> str:
        """Pivot until no negative reduced cost remains ("optimal") or an
        improving ray appears ("unbounded").

        Optimality and unboundedness are only declared on a freshly
        refactorized tableau, so stale reduced costs cannot end a phase.
        """
        T, basis, m, N = self.T, self.basis, self.m, self.N
        in_basis = np.zeros(N, dtype=bool)
        in_basis[basis[basis < N]] = True
        bland = bland_start
        stall = 0
        best = T[m, -1]
        fresh = True  # tableau rebuilt since the last pivot
        for it in range(max_iter):
            if not fresh and (it % refactor_every == 0 or self._unstable()):
                self.rebuild(self.costs)
                best = T[m, -1]
                fresh = True
            r = np.where(in_basis, np.inf, T[m, :N])
            if bland:
                cand = np.flatnonzero(r < -rc_tol)
                j = int(cand[0]) if cand.size else -1
            else:
                j = int(np.argmin(r))
                if r[j] >= -rc_tol:
                    j = -1
            if j < 0:
                if fresh:
                    return "optimal"
                self.rebuild(self.costs)
                best = T[m, -1]
                fresh = True
                continue
            col = T[:m, j]
            pos = (col > _PIVOT_TOL) & ~self.dead
            if not np.any(pos):
                if fresh:
                    return "unbounded"
                self.rebuild(self.costs)
                best = T[m, -1]
                fresh = True
                continue
            rhs = np.maximum(T[:m, -1], 0.0)
            ratios = np.where(pos, rhs / np.where(pos, col, 1.0), np.inf)
            if self.lex_ref is not None:
                # lexicographic rule: unique among tight ties, cycling-proof
                theta = ratios.min()
                ties = np.flatnonzero(pos & (ratios <= theta * (1 + 1e-12) + 1e-300))
                prow = self._lex_leaving(ties, col)
            else:
                # Harris two-pass: admit rows within the feasibility slack of
                # the best ratio, prefer numerically large pivots, break the
                # remaining ties by the lowest basic-variable index
                theta = float((np.where(pos, (rhs + _RATIO_SLACK) /
                                        np.where(pos, col, 1.0), np.inf)).min())
                cand_rows = np.flatnonzero(pos & (ratios <= theta))
                strong = cand_rows[col[cand_rows] >= 0.5 * col[cand_rows].max()]
                prow = int(strong[np.argmin(basis[strong])])
            _pivot(T, prow, j)
            fresh = False
            if basis[prow] < N:
                in_basis[basis[prow]] = False
            basis[prow] = j
            in_basis[j] = True
            obj = T[m, -1]
            if obj > best + 1e-12 * (1.0 + abs(best)):
                best = obj
                stall = 0
                bland = bland_start
            else:
                stall += 1
                if stall >= _STALL_LIMIT:
                    bland = True
        raise _IterationLimit

    def _lex_leaving(self, ties: np.ndarray, col: np.ndarray) -> int:
        """Row whose scaled [rhs | B^-1 B_ref] row is lexicographically
        smallest; unique up to numerical noise."""
        N, T = self.N, self.T
        cand = ties
        for k in range(-1, self.m):
            if len(cand) == 1:
                break
            vals = T[cand, N + k if k >= 0 else -1] / col[cand]
            mn = vals.min()
            cand = cand[vals <= mn + 1e-12 * (1.0 + abs(mn))]
        return int(cand[np.argmin(self.basis[cand])])

    def _unstable(self) -> bool:
        m, N = self.m, self.N
        if not np.isfinite(self.T[m, -1]):
            return True
        if self.T[:m, -1].min(initial=0.0) < -1e-5 * self.scale:
            return True
        return bool(np.abs(self.T[m, :N]).max(initial=0.0) > 1e7 * self.scale)


# ----------------------------------------------------------------------------
# driver


def solve_lp(lp: LinearProgram, tol_feas: float = TOL_FEAS,
             tol_gap: float = TOL_GAP) -> LpSolution:
    """Solve a dense LP, returning a basic solution with duals.

    Optimal solutions satisfy the residual and duality-gap contracts of this
    module; infeasible instances carry a Farkas certificate over the original
    rows; unbounded instances carry a ray in the original variables.
    """
    c_min = -lp.c if lp.maximize else lp.c
    lp_min = LinearProgram(c_min, lp.A, lp.senses, lp.b, lp.lower, lp.upper, False)
    sol = _solve_min(lp_min, tol_feas)
    if not sol.optimal:
        return sol
    if lp.maximize:
        sol = LpSolution("optimal", sol.x, -sol.duals, -sol.reduced_costs,
                         -sol.objective, sol.gap, sol.basis, None)
    if sol.gap is not None and sol.gap > tol_gap * (1.0 + abs(sol.objective)):
        raise RuntimeError(f"duality gap {sol.gap:.3e} exceeds tolerance")
    return sol


def _solve_min(lp: LinearProgram, tol_feas: float) -> LpSolution:
    std = _standardize(lp.c, lp)
    A, b, costs = std.A, std.b, std.c
    m, N = A.shape
    max_iter = 50_000 + 50 * (m + N)
    rc_tol2 = _RC_TOL * (1.0 + float(np.abs(costs).max(initial=0.0)))

    # escalation on numerical failure (cycling or a wrecked basis), each from
    # a full phase-1 restart: later policies enable the lexicographic ratio
    # test, which is cycling-proof under any entering rule, with increasingly
    # frequent refactorization
    policies = [(False, _REFACTOR_EVERY, False), (False, 64, True),
                (True, 32, True), (True, 16, True)]

    tab = _Tableau(A, b)
    status = None
    for bland_start, refactor, lex in policies:
        try:
            tab.set_lex(lex)
            tab.rebuild(None)
            if -tab.T[m, -1] > tol_feas:  # artificial mass still present
                tab.run(_RC_TOL, max_iter, bland_start, refactor)
                tab.rebuild(None)
            if -tab.T[m, -1] > tol_feas:
                return _infeasible_solution(lp, std, tab)
            _drive_out_artificials(tab)
            if lex:
                tab.set_lex(True)  # re-reference at the phase-2 basis
            tab.rebuild(costs)
            status = tab.run(rc_tol2, max_iter, bland_start, refactor)
            break
        except (_BasisSingular, _IterationLimit):
            tab.basis = np.arange(N, N + m)
            tab.dead[:] = False
    else:
        raise RuntimeError("simplex failed to converge on a stable basis")

    T, basis = tab.T, tab.basis
    if status == "unbounded":
        j = int(np.argmin(np.where(np.isin(np.arange(N), basis), np.inf, T[m, :N])))
        ray = np.zeros(lp.A.shape[1])
        for r, col in enumerate(basis):
            if col < N and std.col_var[col] >= 0:
                ray[std.col_var[col]] -= std.col_sign[col] * T[r, j]
        if std.col_var[j] >= 0:
            ray[std.col_var[j]] += std.col_sign[j]
        return LpSolution("unbounded", certificate=ray)

    # refactorize from the final basis to wash out tableau drift
    B = tab.basis_matrix()
    xB = np.linalg.solve(B, b)
    c_full = np.concatenate([costs, np.zeros(m)])
    y_std = np.linalg.solve(B.T, c_full[basis])

    x = std.base.copy()
    basic_vars = set()
    for r, col in enumerate(basis):
        if col < N and std.col_var[col] >= 0:
            x[std.col_var[col]] += std.col_sign[col] * xB[r]
            basic_vars.add(std.col_var[col])

    y = np.zeros(lp.A.shape[0])
    for i, orig in enumerate(std.row_orig):
        if orig >= 0:
            y[orig] += std.row_sign[i] * y_std[i]

    rc = lp.c - lp.A.T @ y
    objective = float(lp.c @ x)
    dual_obj = float(lp.b @ y)
    scale = 1.0 + float(np.abs(lp.c).max(initial=0.0))
    for j in range(lp.A.shape[1]):
        r = rc[j]
        if abs(r) <= _RC_TOL * scale:
            continue
        if r > 0 and np.isfinite(lp.lower[j]):
            dual_obj += lp.lower[j] * r
        elif r < 0 and np.isfinite(lp.upper[j]):
            dual_obj += lp.upper[j] * r
    gap = abs(objective - dual_obj)

    return LpSolution("optimal", x, y, rc, objective, gap,
                      tuple(sorted(basic_vars)))


def _drive_out_artificials(tab: _Tableau) -> None:
    """Degenerate pivots expelling zero-level artificials; rows without an
    entry above the pivot tolerance are redundant constraints: they keep
    their artificial pinned at zero and are marked dead for ratio tests."""
    T, basis, N = tab.T, tab.basis, tab.N
    tab.dead[:] = False
    for r in np.flatnonzero(basis >= N):
        j = int(np.argmax(np.abs(T[r, :N])))
        if abs(T[r, j]) > 1e-9:
            _pivot(T, r, j)
            basis[r] = j
        else:
            tab.dead[r] = True


def _infeasible_solution(lp: LinearProgram, std: _Standardized,
                         tab: _Tableau) -> LpSolution:
    cB = (tab.basis >= tab.N).astype(float)
    y_std = np.linalg.solve(tab.basis_matrix().T, cB)
    y = np.zeros(lp.A.shape[0])
    for i, orig in enumerate(std.row_orig):
        if orig >= 0:
            y[orig] += std.row_sign[i] * y_std[i]
    return LpSolution("infeasible", certificate=y)


# ----------------------------------------------------------------------------
# strict feasibility margin


@dataclass(frozen=True)
class FeasibilityMargin:
    status: str                    # "optimal" | "infeasible"
    t: float                       # max over feasible weights of min weight
    weights: Optional[np.ndarray]  # the maximizing weights, when feasible


def feasibility_with_margin(equalities: np.ndarray, rhs: np.ndarray,
                            groups: Sequence[int]) -> FeasibilityMargin:
    """Maximize the minimum weight subject to per-group sum-to-one simplexes.

    The weight vector w (length = sum of group sizes) must satisfy
    ``equalities @ w = rhs`` with each consecutive group summing to one; the
    returned t is the largest value with all weights >= t.  An infeasible
    base system reports t = -inf.
    """
    equalities = np.atleast_2d(np.asarray(equalities, dtype=float))
    rhs = np.asarray(rhs, dtype=float)
    n = int(sum(groups))
    if equalities.size == 0:
        equalities = np.zeros((0, n))
        rhs = np.zeros(0)
    if equalities.shape[1] != n:
        raise LpError("equality system does not match the weight count")

    # substitute w = t + s with s >= 0, t free; maximize t
    k, offs = len(groups), np.cumsum([0] + list(groups))
    A = np.zeros((k + equalities.shape[0], n + 1))
    b = np.zeros(k + equalities.shape[0])
    for g in range(k):
        A[g, offs[g]:offs[g + 1]] = 1.0
        A[g, n] = groups[g]
        b[g] = 1.0
    A[k:, :n] = equalities
    A[k:, n] = equalities.sum(axis=1)
    b[k:] = rhs

    c = np.zeros(n + 1)
    c[n] = 1.0
    lower = np.zeros(n + 1)
    lower[n] = -np.inf
    lp = LinearProgram.build(c, A, (EQ,) * A.shape[0], b, lower=lower, maximize=True)
    sol = solve_lp(lp)
    if not sol.optimal:
        return FeasibilityMargin("infeasible", -np.inf, None)
    t = float(sol.x[n])
    return FeasibilityMargin("optimal", t, sol.x[:n] + t)
