"""Exact-rational feasibility checks for small scenarios.

A dense phase-one simplex over rationals with Bland's pivoting rule, used to
confirm that a floating-point threshold separates feasible from infeasible
efficiencies and is not an artefact of solver tolerances.  Practical up to a
few thousand strategies.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .quantum import PhaseSettings, ideal_correlations
from .scenario import Scenario, _check_cap, strategy_array

try:  # gmpy2 rationals are an order of magnitude faster than Fraction
    from gmpy2 import mpq as _Q
except ImportError:  # pragma: no cover
    _Q = Fraction

EXACT_CAP = 5000


def _q(x) -> object:
    if isinstance(x, Fraction):
        return _Q(x.numerator, x.denominator)
    return _Q(x)


def phase_one(a_rows: list[list], b: list) -> tuple[bool, list | None, int]:
    """Decide whether ``A x = b, x >= 0`` has a solution, exactly.

    ``a_rows`` and ``b`` hold rationals (or ints).  Returns ``(feasible, x,
    pivots)``; ``x`` is an exact solution when feasible.  Bland's rule (lowest
    eligible index enters, lowest basic index leaves on ratio ties) rules out
    cycling.
    """
    m = len(a_rows)
    n = len(a_rows[0]) if m else 0
    tab = []
    for row, rhs in zip(a_rows, b):
        row = [_q(v) for v in row]
        rhs = _q(rhs)
        if rhs < 0:
            row = [-v for v in row]
            rhs = -rhs
        tab.append(row + [_Q(0)] * m + [rhs])
    for r in range(m):
        tab[r][n + r] = _Q(1)
    basis = [n + r for r in range(m)]
    width = n + m + 1
    # reduced costs of the phase-one objective (sum of artificials)
    cost = [_Q(0)] * width
    for r in range(m):
        for c in range(width):
            if c < n or c == width - 1:
                cost[c] -= tab[r][c]
    pivots = 0
    while True:
        enter = next((c for c in range(n + m) if cost[c] < 0), None)
        if enter is None:
            break
        best = None
        for r in range(m):
            coef = tab[r][enter]
            if coef > 0:
                ratio = tab[r][-1] / coef
                if best is None or ratio < best[0] or (ratio == best[0] and basis[r] < basis[best[1]]):
                    best = (ratio, r)
        if best is None:  # unbounded cannot happen in phase one
            raise ArithmeticError("phase-one objective unbounded")
        r = best[1]
        piv = tab[r][enter]
        prow = [v / piv for v in tab[r]]
        tab[r] = prow
        nz = [c for c in range(width) if prow[c] != 0]
        for rr in range(m):
            if rr != r:
                f = tab[rr][enter]
                if f != 0:
                    row = tab[rr]
                    for c in nz:
                        row[c] -= f * prow[c]
        f = cost[enter]
        for c in nz:
            cost[c] -= f * prow[c]
        basis[r] = enter
        pivots += 1
    if -cost[-1] != 0:
        return False, None, pivots
    x = [_Q(0)] * n
    for r, bv in enumerate(basis):
        if bv < n:
            x[bv] = tab[r][-1]
    return True, x, pivots


def rational_ideal_table(s: Scenario, ph: PhaseSettings, max_den: int = 10**12) -> np.ndarray:
    """Ideal result probabilities as Fractions, with marginals exactly ``1/d``.

    Entries are rounded to nearby rationals; the last row and column of each
    setting pair are then fixed from the marginal constraints so the table is
    exactly normalized and no-signalling.
    """
    p = ideal_correlations(s, ph).p
    d = s.d
    out = np.empty((s.na, s.nb, d, d), dtype=object)
    inv = Fraction(1, d)
    for i in range(s.na):
        for j in range(s.nb):
            blk = [[Fraction(float(p[i, j, k, l])).limit_denominator(max_den) for l in range(d - 1)]
                   for k in range(d - 1)]
            for k in range(d - 1):
                blk[k].append(inv - sum(blk[k]))
            blk.append([inv - sum(blk[k][l] for k in range(d - 1)) for l in range(d)])
            for k in range(d):
                for l in range(d):
                    out[i, j, k, l] = blk[k][l]
    return out


def rational_detected_table(s: Scenario, ph: PhaseSettings, eta, lam=1) -> np.ndarray:
    """Full table (with no-result entries) in exact arithmetic for rational ``eta``, ``lam``."""
    eta, lam = Fraction(eta), Fraction(lam)
    rr = rational_ideal_table(s, ph)
    d = s.d
    t = np.empty(s.table_shape, dtype=object)
    inv = Fraction(1, d)
    for i in range(s.na):
        for j in range(s.nb):
            for k in range(d):
                for l in range(d):
                    t[i, j, k, l] = lam * eta * eta * rr[i, j, k, l]
                t[i, j, k, d] = lam * eta * (1 - eta) * inv
                t[i, j, d, k] = lam * eta * (1 - eta) * inv
            t[i, j, d, d] = 1 - lam + lam * (1 - eta) ** 2
    return t


def exact_feasible(s: Scenario, table: np.ndarray) -> tuple[bool, list | None]:
    """Exact LHV membership of an object-array table of rationals."""
    _check_cap(s, EXACT_CAP)
    strat = strategy_array(s)
    n1 = s.d + 1
    flat = table.reshape(-1)
    m = flat.size
    rows = [[0] * s.n_strategies for _ in range(m)]
    for col, row in enumerate(strat):
        for i in range(s.na):
            for j in range(s.nb):
                rows[((i * s.nb + j) * n1 + int(row[i])) * n1 + int(row[s.na + j])][col] = 1
    ok, x, _ = phase_one(rows, list(flat))
    return ok, x


def verify_threshold(s: Scenario, ph: PhaseSettings, eta_star: float, lam=1,
                     delta: float = 1e-4) -> dict:
    """Check exactly that ``eta_star - delta`` is local and ``eta_star + delta`` is not."""
    lo = Fraction(eta_star - delta).limit_denominator(10**9)
    hi = Fraction(min(1.0, eta_star + delta)).limit_denominator(10**9)
    lam = Fraction(lam).limit_denominator(10**9)
    below, _ = exact_feasible(s, rational_detected_table(s, ph, lo, lam))
    above, _ = exact_feasible(s, rational_detected_table(s, ph, hi, lam))
    return {"eta_below": lo, "feasible_below": below, "eta_above": hi, "feasible_above": above,
            "confirmed": below and not above}
