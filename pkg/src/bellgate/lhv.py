"""Local-hidden-variable reproducibility by linear programming.

Variables are the weights of the ``(d+1)**(na+nb)`` deterministic strategies;
equality rows match every joint probability ``P(A_i=K, B_j=L)``.  Redundant
rows (normalization, no-signalling) are left in and handled by the solver.
Solves use HiGHS dual simplex through :func:`scipy.optimize.linprog`, or
through ``highspy`` directly where a warm start pays off.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache

import highspy
import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .errors import SolverFailure
from .quantum import DetectionModel, PhaseSettings, apply_detection, ideal_correlations
from .scenario import CorrelationTable, Scenario, strategy_array

log = logging.getLogger(__name__)

FEAS_TOL = 1e-9
SUPPORT_DUST = 1e-12
_HIGHS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10,
          "presolve": True}


@lru_cache(maxsize=8)
def constraint_matrix(s: Scenario) -> sp.csr_matrix:
    """0/1 matrix mapping strategy weights to the flattened correlation table."""
    strat = strategy_array(s)
    n = s.n_strategies
    n1 = s.d + 1
    rows, cols = [], []
    idx = np.arange(n)
    for i in range(s.na):
        for j in range(s.nb):
            rows.append(((i * s.nb + j) * n1 + strat[:, i]) * n1 + strat[:, s.na + j])
            cols.append(idx)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    m = sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(s.na * s.nb * n1 * n1, n))
    return m


@dataclass
class LhvModel:
    """Convex weights over deterministic strategies (sparse: index -> weight)."""

    scenario: Scenario
    weights: dict[int, float]

    def dense(self) -> np.ndarray:
        w = np.zeros(self.scenario.n_strategies)
        for k, v in self.weights.items():
            w[k] = v
        return w

    def table(self) -> CorrelationTable:
        flat = constraint_matrix(self.scenario) @ self.dense()
        return CorrelationTable(self.scenario, flat.reshape(self.scenario.table_shape))

    def support(self, threshold: float = 1e-7) -> list[int]:
        return sorted(k for k, v in self.weights.items() if v > threshold)

    def to_dict(self) -> dict:
        return {str(k): v for k, v in sorted(self.weights.items())}

    @classmethod
    def from_dict(cls, s: Scenario, data: dict) -> "LhvModel":
        return cls(s, {int(k): float(v) for k, v in data.items()})


def _sparse_weights(x: np.ndarray) -> dict[int, float]:
    x = np.where(x < 0, 0.0, x)
    return {int(k): float(x[k]) for k in np.flatnonzero(x > SUPPORT_DUST)}


def _solve(c, a_eq, b_eq, a_ub=None, b_ub=None, bounds=(0, None)):
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=bounds,
                  method="highs-ds", options=_HIGHS)
    if res.status not in (0, 2):
        raise SolverFailure(f"LP solver status {res.status}: {res.message}")
    return res


def lhv_feasible(t: CorrelationTable, tol: float = FEAS_TOL) -> LhvModel | None:
    """A local model reproducing ``t`` within ``tol`` in every entry, or ``None``."""
    s = t.scenario
    a = constraint_matrix(s)
    b = t.flat
    res = _solve(np.zeros(s.n_strategies), a, b)
    if res.status == 2:
        return None
    x = np.clip(res.x, 0.0, None)
    resid = np.abs(a @ x - b).max()
    if resid > tol:
        log.debug("solver returned a point with residual %.3g; treating as infeasible", resid)
        return None
    return LhvModel(s, _sparse_weights(x))


def detected_table(s: Scenario, ph: PhaseSettings, eta: float, lam: float) -> CorrelationTable:
    return apply_detection(ideal_correlations(s, ph), DetectionModel(eta, lam))


@dataclass
class ThresholdReport:
    """Detection-efficiency threshold of a set of quantum correlations.

    ``kind`` is ``"fixed_lambda"`` (with ``lam``) or ``"forall_lambda"``.
    ``violated`` is False when no efficiency in ``[0, 1]`` defeats local models;
    ``eta_star`` is then 1.  ``witness`` is a local model at (or just below) the
    threshold; for ``forall_lambda`` it reproduces the table at efficiency
    ``eta_star`` and pair-production rate ``witness_lambda``.
    """

    eta_star: float
    kind: str
    lam: float | None
    iterations: int
    tolerance: float
    violated: bool = True
    bracket: tuple[float, float] | None = None
    witness: LhvModel | None = None
    witness_lambda: float | None = None
    alpha: float | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "eta_star": self.eta_star,
            "kind": self.kind,
            "lambda": self.lam,
            "iterations": self.iterations,
            "tolerance": self.tolerance,
            "violated": self.violated,
        }
        if self.bracket is not None:
            out["bracket"] = list(self.bracket)
        if self.alpha is not None:
            out["alpha"] = self.alpha
        if self.witness is not None:
            out["witness"] = self.witness.to_dict()
            out["witness_lambda"] = self.witness_lambda
            out["scenario"] = self.witness.scenario.to_dict()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ThresholdReport":
        witness = None
        if data.get("witness") is not None:
            witness = LhvModel.from_dict(Scenario.from_dict(data["scenario"]), data["witness"])
        bracket = tuple(data["bracket"]) if data.get("bracket") is not None else None
        return cls(
            eta_star=float(data["eta_star"]), kind=data["kind"], lam=data.get("lambda"),
            iterations=int(data["iterations"]), tolerance=float(data["tolerance"]),
            violated=bool(data.get("violated", True)), bracket=bracket, witness=witness,
            witness_lambda=data.get("witness_lambda"), alpha=data.get("alpha"),
        )


def eta_threshold_fixed_lambda(s: Scenario, ph: PhaseSettings, lam: float = 1.0,
                               tol: float = 1e-6) -> ThresholdReport:
    """Bisection on ``eta`` for the largest efficiency admitting a local model.

    Maintains ``lo`` feasible and ``hi`` infeasible until ``hi - lo <= tol`` and
    reports the midpoint.
    """
    DetectionModel(1.0, lam)
    if tol < 1e-8:
        raise ValueError("bisection tolerance below 1e-8 is not meaningful at LP precision")
    it = 1
    top = lhv_feasible(detected_table(s, ph, 1.0, lam))
    if top is not None:
        return ThresholdReport(1.0, "fixed_lambda", lam, it, tol, violated=False,
                               bracket=(1.0, 1.0), witness=top, witness_lambda=lam)
    lo, hi = 0.0, 1.0
    witness = LhvModel(s, {s.n_strategies - 1: 1.0})  # all no-result
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        it += 1
        model = lhv_feasible(detected_table(s, ph, mid, lam))
        if model is None:
            hi = mid
        else:
            lo, witness = mid, model
    return ThresholdReport(0.5 * (lo + hi), "fixed_lambda", lam, it, tol,
                           bracket=(lo, hi), witness=witness, witness_lambda=lam)


def _rescaled_problem(s: Scenario, ph: PhaseSettings):
    """Equality system in (rescaled weights, alpha) with no-result/no-result rows dropped."""
    d = s.d
    t = ideal_correlations(s, ph).p
    keep = np.ones(s.table_shape, dtype=bool)
    keep[:, :, d, d] = False
    keep = keep.reshape(-1)
    a = constraint_matrix(s)[keep]
    rr = t[:, :, :d, :d]
    # rows: alpha * P_kl (results), (1 - alpha)/2 * marginals (one side no-result)
    coef_alpha = np.zeros(s.table_shape)
    rhs = np.zeros(s.table_shape)
    coef_alpha[:, :, :d, :d] = rr
    pb = rr.sum(axis=2)
    pa = rr.sum(axis=3)
    coef_alpha[:, :, d, :d] = -0.5 * pb
    rhs[:, :, d, :d] = 0.5 * pb
    coef_alpha[:, :, :d, d] = -0.5 * pa
    rhs[:, :, :d, d] = 0.5 * pa
    coef_alpha = coef_alpha.reshape(-1)[keep]
    rhs = rhs.reshape(-1)[keep]
    return a, coef_alpha, rhs


def rescaled_lp(s: Scenario, ph: PhaseSettings):
    """Maximise ``alpha = eta**2 / (1 - (1-eta)**2)`` over rescaled local weights.

    Returns ``(alpha, weights)``; weights are unnormalised with total >= 1.
    """
    a, coef_alpha, rhs = _rescaled_problem(s, ph)
    n = s.n_strategies
    a_eq = sp.hstack([a, sp.csr_matrix(-coef_alpha[:, None])], format="csr")
    a_ub = sp.csr_matrix(np.concatenate([-np.ones(n), [0.0]])[None, :])
    c = np.zeros(n + 1)
    c[-1] = -1.0
    bounds = [(0, None)] * n + [(0, 1)]
    res = _solve(c, a_eq, rhs, a_ub, [-1.0], bounds)
    if res.status != 0:
        raise SolverFailure(f"rescaled LP did not solve: {res.message}")
    x = np.clip(res.x, 0.0, None)
    return float(res.x[-1]), x[:n]


class WarmRescaledLP:
    """The rescaled LP solved repeatedly for nearby phase settings.

    The model is kept loaded and only the phase-dependent column and
    right-hand side are updated, so each solve starts from the previous
    optimal basis.  That cuts simplex iterations several-fold when consecutive settings are close (as along a
    Nelder-Mead run).  Only the optimal value is returned.  The optimum does
    not depend on the starting basis, so results agree with
    :func:`rescaled_lp` up to solver tolerance.
    """

    def __init__(self, s: Scenario):
        self.scenario = s
        self._h = highspy.Highs()
        self._h.setOptionValue("output_flag", False)
        self._h.setOptionValue("presolve", "off")
        self._h.setOptionValue("primal_feasibility_tolerance", 1e-10)
        self._h.setOptionValue("dual_feasibility_tolerance", 1e-10)
        self._loaded = False

    def _load(self, a, coef_alpha, rhs) -> None:
        n = self.scenario.n_strategies
        m = sp.vstack([sp.hstack([a, sp.csr_matrix(-coef_alpha[:, None])]),
                       sp.csr_matrix(np.concatenate([np.ones(n), [0.0]])[None, :])]).tocsc()
        lp = highspy.HighsLp()
        lp.num_col_ = n + 1
        lp.num_row_ = m.shape[0]
        cost = np.zeros(n + 1)
        cost[-1] = -1.0
        upper = np.full(n + 1, highspy.kHighsInf)
        upper[-1] = 1.0
        lp.col_cost_ = cost
        lp.col_lower_ = np.zeros(n + 1)
        lp.col_upper_ = upper
        lp.row_lower_ = np.concatenate([rhs, [1.0]])
        lp.row_upper_ = np.concatenate([rhs, [highspy.kHighsInf]])
        lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
        lp.a_matrix_.start_ = m.indptr
        lp.a_matrix_.index_ = m.indices
        lp.a_matrix_.value_ = m.data
        self._h.passModel(lp)
        self._loaded = True

    def eta(self, ph: PhaseSettings) -> float:
        s = self.scenario
        a, coef_alpha, rhs = _rescaled_problem(s, ph)
        h = self._h
        if self._loaded:
            # only the alpha column and the right-hand side depend on the phases
            col = s.n_strategies
            for r, v in enumerate(coef_alpha):
                h.changeCoeff(r, col, -float(v))
            h.changeRowsBounds(rhs.size, np.arange(rhs.size, dtype=np.int32), rhs, rhs)
        else:
            self._load(a, coef_alpha, rhs)
        h.run()
        if h.getModelStatus() != highspy.HighsModelStatus.kOptimal:
            self._loaded = False
            return eta_threshold_forall_lambda(s, ph).eta_star
        alpha = -h.getInfo().objective_function_value
        return 1.0 if alpha >= 1 - 1e-9 else eta_from_alpha(alpha)


def eta_from_alpha(alpha: float) -> float:
    return 2 * alpha / (1 + alpha)


def alpha_from_eta(eta: float) -> float:
    return eta / (2 - eta)


def eta_threshold_forall_lambda(s: Scenario, ph: PhaseSettings) -> ThresholdReport:
    """Threshold valid for every pair-production rate, from a single LP.

    The optimal rescaled weights ``w`` (total ``T >= 1``) give a local model for
    efficiency ``eta_star`` at any ``lam <= 1 / (T (1 - (1 - eta_star)**2))``;
    the witness is reported at the largest such ``lam`` capped at 1, with the
    remaining mass on the all-no-result strategy.
    """
    alpha, w = rescaled_lp(s, ph)
    eta = eta_from_alpha(alpha)
    violated = alpha < 1 - 1e-9
    if not violated:
        eta = 1.0
    total = w.sum()
    detect = 1 - (1 - eta) ** 2
    lam = min(1.0, 1.0 / (total * detect))
    p = lam * detect * w
    p[-1] += max(0.0, 1.0 - p.sum())
    witness = LhvModel(s, _sparse_weights(p))
    return ThresholdReport(eta, "forall_lambda", None, 1, 0.0, violated=violated,
                           witness=witness, witness_lambda=lam, alpha=alpha,
                           extra={"rescaled_total": float(total)})


def noise_threshold_lp(s: Scenario, ph: PhaseSettings) -> float:
    """Smallest white-noise fraction making the ideal correlations local (single LP).

    Solves ``min p`` subject to ``A w = (1 - p) T + p U``, ``w >= 0`` where ``T``
    is the ideal table and ``U`` the uniform result distribution.
    """
    from .quantum import uniform_table

    t = ideal_correlations(s, ph).flat
    u = uniform_table(s).flat
    a = constraint_matrix(s)
    n = s.n_strategies
    a_eq = sp.hstack([a, sp.csr_matrix((t - u)[:, None])], format="csr")
    c = np.zeros(n + 1)
    c[-1] = 1.0
    res = _solve(c, a_eq, t, bounds=[(0, None)] * n + [(0, 1)])
    if res.status != 0:
        raise SolverFailure(f"noise LP did not solve: {res.message}")
    return float(res.x[-1])
