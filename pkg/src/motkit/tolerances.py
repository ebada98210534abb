"""Shared numerical tolerances.

All predicates and solvers in this package are floating-point with explicit
tolerances; these module-level defaults are the contract values.  Callers may
override them per call where an operation exposes a keyword.
"""

# Membership / equality of points.
TOL_GEOM = 1e-9

# Strict positivity of convex-combination weights (relative-interior tests).
TOL_STRICT = 1e-7

# Relative singular-value cutoff for affine ranks.
TOL_RANK = 1e-8

# Feasibility residual accepted from the LP solver.
TOL_FEAS = 1e-8

# Duality gap: |primal - dual| <= TOL_GAP * (1 + |objective|).
TOL_GAP = 1e-6


def gap_bound(objective: float, tol_gap: float = TOL_GAP) -> float:
    return tol_gap * (1.0 + abs(objective))
