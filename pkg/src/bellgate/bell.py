"""Bell inequalities with no-result terms.

An inequality is a coefficient tensor ``c[i, j, K, L]`` over the full outcome
alphabet plus a local bound.  Coefficients entered as :class:`fractions.Fraction`
keep classical bounds exact; evaluation on correlation tables is in floating
point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Mapping

import numpy as np

from .errors import NotUniversal, NoViolation, ScenarioMismatch
from .quantum import PhaseSettings, ideal_correlations, uniform_table
from .scenario import CorrelationTable, DeterministicStrategy, Scenario, _check_cap

Index = tuple[int, int, int, int]


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, Rational):
        return Fraction(x)
    raise TypeError(f"cannot convert {x!r} to an exact rational")


def fraction_str(x) -> str:
    x = to_fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


class BellInequality:
    """``sum c[i,j,K,L] P(A_i=K, B_j=L) <= bound``.

    Parameters
    ----------
    scenario : Scenario
    coeffs : mapping
        ``(i, j, K, L) -> coefficient``; zero entries are dropped.  ``K == d`` or
        ``L == d`` addresses the no-result outcome.
    bound : number
        Local bound.  Exact (``Fraction``/``int``/``"p/q"`` string) when the
        coefficients are exact.
    """

    def __init__(self, scenario: Scenario, coeffs: Mapping[Index, object], bound, name: str = ""):
        self.scenario = scenario
        self.name = name
        exact = all(isinstance(v, (Rational, str)) for v in coeffs.values()) and isinstance(bound, (Rational, str))
        clean: dict[Index, object] = {}
        n1 = scenario.d + 1
        for key, value in coeffs.items():
            i, j, k, l = (int(v) for v in key)
            if not (0 <= i < scenario.na and 0 <= j < scenario.nb and 0 <= k < n1 and 0 <= l < n1):
                raise IndexError(f"coefficient index {key} outside {scenario}")
            value = to_fraction(value) if exact else float(value)
            if not exact and not math.isfinite(value):
                raise ValueError("coefficients must be finite")
            if value != 0:
                clean[(i, j, k, l)] = value
        self.coeffs = dict(sorted(clean.items()))
        self.bound = to_fraction(bound) if exact else float(bound)
        self.exact = exact

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"BellInequality{label}({self.scenario}, {len(self.coeffs)} terms, bound={self.bound})"

    def dense(self) -> np.ndarray:
        c = np.zeros(self.scenario.table_shape)
        for key, value in self.coeffs.items():
            c[key] = float(value)
        return c

    def integer_form(self) -> tuple[np.ndarray, int]:
        """Coefficients scaled by the common denominator ``D``: ``(int array, D)``."""
        if not self.exact:
            raise TypeError("inequality has floating-point coefficients")
        denom = 1
        for v in list(self.coeffs.values()) + [self.bound]:
            denom = math.lcm(denom, v.denominator)
        c = np.zeros(self.scenario.table_shape, dtype=object)
        c[...] = 0
        for key, value in self.coeffs.items():
            c[key] = int(value * denom)
        return c, denom

    @property
    def null_null_sum(self):
        d = self.scenario.d
        total = Fraction(0) if self.exact else 0.0
        for (i, j, k, l), v in self.coeffs.items():
            if k == d and l == d:
                total += v
        return total

    @property
    def threshold_universal(self) -> bool:
        """True when the (no-result, no-result) weights sum to the bound."""
        if self.exact:
            return self.null_null_sum == self.bound
        return abs(self.null_null_sum - self.bound) <= 1e-9 * max(1.0, abs(self.bound))

    def add_normalization(self, mu, i: int = 0, j: int = 0) -> "BellInequality":
        """Add ``mu`` times the normalization identity of setting pair ``(i, j)``.

        Evaluation and bound both shift by ``mu``; the set of tables satisfying
        the inequality is unchanged.
        """
        n1 = self.scenario.d + 1
        coeffs = dict(self.coeffs)
        for k in range(n1):
            for l in range(n1):
                coeffs[(i, j, k, l)] = coeffs.get((i, j, k, l), 0) + mu
        return BellInequality(self.scenario, coeffs, self.bound + mu, self.name)

    def scaled(self, factor) -> "BellInequality":
        return BellInequality(self.scenario, {k: v * factor for k, v in self.coeffs.items()},
                              self.bound * factor, self.name)

    def to_dict(self) -> dict:
        fmt = fraction_str if self.exact else float
        return {
            "scenario": self.scenario.to_dict(),
            "bound": fmt(self.bound),
            "terms": [{"i": i, "j": j, "k": k, "l": l, "coeff": fmt(v)}
                      for (i, j, k, l), v in self.coeffs.items()],
        }

    @classmethod
    def from_dict(cls, data: dict, name: str = "") -> "BellInequality":
        s = Scenario.from_dict(data["scenario"])
        coeffs: dict[Index, object] = {}
        for t in data["terms"]:
            key = (int(t["i"]), int(t["j"]), int(t["k"]), int(t["l"]))
            coeffs[key] = coeffs.get(key, 0) + _parse_number(t["coeff"])
        return cls(s, coeffs, _parse_number(data["bound"]), name or data.get("name", ""))


def _parse_number(x):
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, int):
        return Fraction(x)
    return float(x)


@dataclass(frozen=True)
class BellDecomposition:
    """Partial sums of a Bell expression by outcome class."""

    i_rr: float
    i_0r: float
    i_r0: float
    i_00: float

    @property
    def total(self) -> float:
        return self.i_rr + self.i_0r + self.i_r0 + self.i_00


def _split(c: np.ndarray, p: np.ndarray, d: int) -> BellDecomposition:
    prod = c * p
    return BellDecomposition(
        i_rr=float(prod[:, :, :d, :d].sum()),
        i_0r=float(prod[:, :, d, :d].sum()),
        i_r0=float(prod[:, :, :d, d].sum()),
        i_00=float(prod[:, :, d, d].sum()),
    )


def evaluate(ineq: BellInequality, t: CorrelationTable) -> BellDecomposition:
    """Evaluate the Bell expression on ``t``, split into its four partial sums."""
    if ineq.scenario != t.scenario:
        raise ScenarioMismatch(f"inequality on {ineq.scenario}, table on {t.scenario}")
    return _split(ineq.dense(), t.p, t.scenario.d)


def quantum_terms(ineq: BellInequality, ph: PhaseSettings) -> BellDecomposition:
    """Coefficient sums entering the detection-efficiency analysis.

    ``i_rr`` is the expression on the ideal correlations; ``i_0r`` (``i_r0``)
    replaces each ``P(A_i = no-result, B_j = l)`` by Bob's (Alice's) ideal
    marginal; ``i_00`` is the plain sum of the no-result/no-result weights.
    """
    s = ineq.scenario
    d = s.d
    t = ideal_correlations(s, ph)
    c = ineq.dense()
    rr = t.p[:, :, :d, :d]
    pb = rr.sum(axis=2)  # (na, nb, d): P_l(B_j)
    pa = rr.sum(axis=3)  # P_k(A_i)
    return BellDecomposition(
        i_rr=float((c[:, :, :d, :d] * rr).sum()),
        i_0r=float((c[:, :, d, :d] * pb).sum()),
        i_r0=float((c[:, :, :d, d] * pa).sum()),
        i_00=float(c[:, :, d, d].sum()),
    )


def classical_bound(ineq: BellInequality, results_only: bool = False,
                    cap: int | None = None) -> tuple[object, DeterministicStrategy]:
    """Maximum of the expression over deterministic strategies, and the first maximiser.

    Exact (``Fraction``) for rational coefficients.  For each of Alice's
    assignments Bob's settings decouple, so the maximum over Bob is taken per
    setting; ties resolve to the first strategy in enumeration order.
    ``results_only`` restricts both parties to result outcomes.
    """
    s = ineq.scenario
    _check_cap(s, cap)
    n_out = s.d if results_only else s.d + 1
    if ineq.exact:
        c, denom = ineq.integer_form()
        c = c.astype(np.int64) if _fits_int64(c) else c
    else:
        c, denom = ineq.dense(), 1
    c = c[:, :, :n_out, :n_out]
    alice = np.array(np.unravel_index(np.arange(n_out**s.na), (n_out,) * s.na)).T
    # g[a, j, L] = sum_i c[i, j, alice[a, i], L]
    g = sum(c[i][:, alice[:, i], :].transpose(1, 0, 2) for i in range(s.na))
    best_l = np.argmax(g, axis=2) if g.dtype != object else _object_argmax(g)
    per_j = np.take_along_axis(g, best_l[:, :, None], axis=2)[:, :, 0]
    totals = per_j.sum(axis=1)
    a = int(np.argmax(totals)) if totals.dtype != object else max(range(len(totals)), key=lambda q: (totals[q], -q))
    strat = DeterministicStrategy(tuple(int(v) for v in alice[a]), tuple(int(v) for v in best_l[a]))
    value = totals[a]
    if ineq.exact:
        return Fraction(int(value), denom), strat
    return float(value), strat


def _fits_int64(c: np.ndarray) -> bool:
    return max((abs(int(v)) for v in c.ravel()), default=0) < 2**40


def _object_argmax(g: np.ndarray) -> np.ndarray:
    out = np.zeros(g.shape[:2], dtype=np.int64)
    for a in range(g.shape[0]):
        for j in range(g.shape[1]):
            row = list(g[a, j])
            out[a, j] = row.index(max(row))
    return out


def eta_threshold_universal(ineq: BellInequality, ph: PhaseSettings) -> float:
    """Efficiency above which the inequality is violated for every pair-production rate.

    ``(2c - I0r - Ir0) / (c + Irr - I0r - Ir0)`` with the terms of
    :func:`quantum_terms`; requires the no-result/no-result weights to sum to ``c``.
    """
    if not ineq.threshold_universal:
        raise NotUniversal(f"no-result weights sum to {ineq.null_null_sum}, bound is {ineq.bound}")
    q = quantum_terms(ineq, ph)
    c = float(ineq.bound)
    if q.i_rr <= c:
        raise NoViolation(f"ideal value {q.i_rr:.6g} does not exceed bound {c}")
    x = q.i_0r + q.i_r0
    return (2 * c - x) / (c + q.i_rr - x)


def eta_threshold_at_lambda(ineq: BellInequality, ph: PhaseSettings, lam: float) -> float:
    """Smallest efficiency above which the inequality is violated at fixed ``lam``.

    The expression is quadratic in ``eta``:
    ``lam eta^2 Irr + lam eta (1-eta)(I0r + Ir0) + (1 + lam (eta^2 - 2 eta)) S``
    with ``S`` the no-result/no-result weight sum.  Returns the largest root in
    ``[0, 1]`` of ``expression - c``.
    """
    if not 0 < lam <= 1:
        raise ValueError(f"lambda={lam} outside (0, 1]")
    q = quantum_terms(ineq, ph)
    c = float(ineq.bound)
    S = q.i_00
    x = q.i_0r + q.i_r0
    a = lam * (q.i_rr - x + S)
    b = lam * (x - 2 * S)
    c0 = S - c
    if a + b + c0 <= 1e-12:
        raise NoViolation(f"not violated even at eta=1 for lambda={lam}")
    roots = np.roots([a, b, c0]) if abs(a) > 1e-15 else np.array([-c0 / b])
    real = [float(r.real) for r in np.atleast_1d(roots) if abs(r.imag) < 1e-12 and -1e-12 <= r.real <= 1 + 1e-12]
    return max(real)


def inequality_noise_threshold(ineq: BellInequality, ph: PhaseSettings) -> float:
    """White-noise fraction at which this particular inequality stops being violated.

    ``(Irr(QM) - c_eff) / (Irr(QM) - Irr(uniform))`` where ``c_eff`` is the
    bound over strategies that always produce a result.
    """
    s = ineq.scenario
    c_eff = float(classical_bound(ineq, results_only=True)[0])
    i_q = evaluate(ineq, ideal_correlations(s, ph)).i_rr
    i_n = evaluate(ineq, uniform_table(s)).i_rr
    if i_q <= c_eff:
        raise NoViolation(f"ideal value {i_q:.6g} does not exceed {c_eff}")
    return (i_q - c_eff) / (i_q - i_n)


def noise_threshold(ineq: BellInequality, ph: PhaseSettings) -> float:
    """White-noise resistance of the correlations that violate ``ineq``.

    The smallest ``p`` for which ``(1 - p) P_QM + p/d^2`` admits a local model,
    optimised over every inequality of the scenario rather than only ``ineq``.
    It therefore never falls below :func:`inequality_noise_threshold`, and
    equals it when ``ineq`` happens to be the most noise-robust witness.
    ``ineq`` must be violated by the ideal correlations.
    """
    from .lhv import noise_threshold_lp

    s = ineq.scenario
    if ph.scenario != s:
        raise ScenarioMismatch(f"phases describe {ph.scenario}, inequality is for {s}")
    if evaluate(ineq, ideal_correlations(s, ph)).total <= float(ineq.bound) + 1e-12:
        raise NoViolation("the ideal correlations do not violate the inequality")
    return noise_threshold_lp(s, ph)
