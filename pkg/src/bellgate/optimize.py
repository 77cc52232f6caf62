"""Phase search: random seeding followed by Nelder-Mead refinement.

The objective is a detection threshold computed by linear programming, so it
is piecewise smooth at best; a derivative-free simplex search is used and
local minima are countered with restarts rather than gradients.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import BellgateError
from .lhv import WarmRescaledLP, eta_threshold_fixed_lambda, eta_threshold_forall_lambda
from .quantum import PhaseSettings
from .scenario import Scenario

log = logging.getLogger(__name__)

TWO_PI = 2 * np.pi
SEARCH_BISECTION_TOL = 1e-4
FINAL_BISECTION_TOL = 1e-6


@dataclass(frozen=True)
class SearchConfig:
    """Settings for a phase search.

    ``objective`` is ``"forall_lambda"`` or ``"fixed_lambda"`` (with ``lam``).
    ``restarts`` counts random draws in the seeding stage; ``refine_starts``
    is how many of the best draws are then refined by Nelder-Mead.  After
    that, ``hops`` basin-hopping rounds perturb the incumbent's free phases by
    Gaussian noise of width ``hop_scale`` radians and refine again, keeping
    the result only when it improves.
    """

    objective: str = "forall_lambda"
    lam: float = 1.0
    restarts: int = 50
    simplex_tolerance: float = 1e-4
    max_evals: int = 2000
    rng_seed: int = 0
    refine_starts: int = 1
    initial_step: float = 0.5
    hops: int = 100
    hop_scale: float = 1.0

    def __post_init__(self):
        if self.objective not in ("forall_lambda", "fixed_lambda"):
            raise ValueError(f"unknown objective {self.objective!r}")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.refine_starts < 1:
            raise ValueError("refine_starts must be at least 1")
        if not 0 < self.lam <= 1:
            raise ValueError(f"lambda={self.lam} outside (0, 1]")
        if self.hops < 0:
            raise ValueError("hops must be non-negative")
        if self.hop_scale <= 0:
            raise ValueError("hop_scale must be positive")
        if self.simplex_tolerance <= 0:
            raise ValueError("simplex_tolerance must be positive")

    def check(self, s: Scenario) -> None:
        n = (s.na + s.nb) * (s.d - 1)
        if self.max_evals < n + 1:
            raise ValueError(f"max_evals={self.max_evals} cannot even build a simplex in {n} dimensions")


def objective(s: Scenario, ph: PhaseSettings, cfg: SearchConfig, final: bool = False,
              solver: WarmRescaledLP | None = None) -> float:
    """Threshold efficiency of ``ph`` (lower is better); 1 when no violation exists.

    ``solver`` optionally supplies a warm-started LP for the every-lambda
    objective; the value is the same either way.
    """
    if cfg.objective == "forall_lambda":
        if solver is not None:
            return solver.eta(ph)
        return eta_threshold_forall_lambda(s, ph).eta_star
    tol = FINAL_BISECTION_TOL if final else SEARCH_BISECTION_TOL
    return eta_threshold_fixed_lambda(s, ph, cfg.lam, tol).eta_star


def _objective_job(args) -> float:
    s, alice, bob, cfg = args
    return objective(s, PhaseSettings(alice, bob), cfg)


class Trace:
    """Evaluation log; ``best`` is the best objective seen so far at each step."""

    def __init__(self):
        self.records: list[dict] = []

    def add(self, stage: str, value: float, ph: PhaseSettings) -> None:
        # "best" is a running minimum, so it never increases along the trace
        best = min(value, self.records[-1]["best"]) if self.records else value
        self.records.append({"eval": len(self.records) + 1, "stage": stage, "objective": float(value),
                             "best": float(best), "phases": ph.to_dict()})

    def __len__(self):
        return len(self.records)

    def jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records)


def random_phases(s: Scenario, rng: np.random.Generator) -> PhaseSettings:
    return PhaseSettings(rng.uniform(0, TWO_PI, (s.na, s.d)), rng.uniform(0, TWO_PI, (s.nb, s.d)))


def _random_draws(s: Scenario, cfg: SearchConfig, trace: Trace | None, jobs: int):
    rng = np.random.default_rng(cfg.rng_seed)
    draws = [random_phases(s, rng) for _ in range(cfg.restarts)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            values = list(pool.map(_objective_job, [(s, p.alice, p.bob, cfg) for p in draws]))
    else:
        values = [objective(s, p, cfg) for p in draws]
    if trace is not None:
        for p, v in zip(draws, values):
            trace.add("random", v, p)
    return draws, values


def random_seed_search(s: Scenario, cfg: SearchConfig, trace: Trace | None = None,
                       jobs: int = 1) -> PhaseSettings:
    """Best of ``cfg.restarts`` uniformly random, gauge-fixed phase draws."""
    draws, values = _random_draws(s, cfg, trace, jobs)
    return draws[int(np.argmin(values))]


def refine_nelder_mead(s: Scenario, start: PhaseSettings, cfg: SearchConfig,
                       trace: Trace | None = None,
                       stage: str = "nelder-mead") -> tuple[PhaseSettings, float, bool]:
    """Nelder-Mead over the free phases from ``start``.

    Stops when every simplex vertex lies within ``simplex_tolerance`` of the
    best one, or after ``max_evals`` evaluations.  Returns ``(phases,
    objective, converged)``; ``converged`` is False when the budget ran out, in
    which case the best point seen is returned.  The result is never worse than
    ``start``.
    """
    cfg.check(s)
    x0 = start.free_parameters()
    # a fresh warm-start chain per run keeps results independent of call history
    solver = WarmRescaledLP(s) if cfg.objective == "forall_lambda" else None
    f0 = objective(s, start, cfg, solver=solver)
    if trace is not None:
        trace.add(stage, f0, start)
    best = [f0, start]

    def f(x):
        ph = PhaseSettings.from_free_parameters(s, np.mod(x, TWO_PI))
        v = objective(s, ph, cfg, solver=solver)
        if trace is not None:
            trace.add(stage, v, ph)
        if v < best[0]:
            best[0], best[1] = v, ph
        return v

    simplex = np.vstack([x0, x0 + cfg.initial_step * np.eye(x0.size)])
    res = minimize(f, x0, method="Nelder-Mead",
                   options={"xatol": cfg.simplex_tolerance, "fatol": np.inf,
                            "maxfev": max(1, cfg.max_evals - 1), "initial_simplex": simplex,
                            "adaptive": False})
    converged = bool(res.status == 0)
    if not converged:
        log.info("Nelder-Mead stopped by evaluation budget: %s", res.message)
    return best[1], float(best[0]), converged


@dataclass
class SearchResult:
    phases: PhaseSettings
    objective: float
    n_evals: int
    converged: bool
    local_minima: list[float] = field(default_factory=list)
    trace: Trace | None = None

    def to_dict(self) -> dict:
        return {"phases": self.phases.to_dict(), "objective": self.objective, "n_evals": self.n_evals,
                "converged": self.converged, "local_minima": self.local_minima}


def search(s: Scenario, cfg: SearchConfig, jobs: int = 1, keep_trace: bool = True) -> SearchResult:
    """Random seeding, Nelder-Mead from the ``cfg.refine_starts`` best draws,
    then ``cfg.hops`` rounds of basin hopping around the incumbent.

    The objectives reached from each start are reported as ``local_minima`` so
    that disagreement between starts (a sign of a rugged landscape) is visible.
    """
    cfg.check(s)
    trace = Trace() if keep_trace else None
    draws, values = _random_draws(s, cfg, trace, jobs)
    order = np.argsort(values, kind="stable")[: cfg.refine_starts]
    best = None
    minima = []
    for k in order:
        ph, val, conv = refine_nelder_mead(s, draws[int(k)], cfg, trace)
        minima.append(val)
        if best is None or val < best[1]:
            best = (ph, val, conv)
    hop_rng = np.random.default_rng([cfg.rng_seed, 1])
    for _ in range(cfg.hops):
        x = best[0].free_parameters()
        x = np.mod(x + hop_rng.normal(0.0, cfg.hop_scale, x.size), TWO_PI)
        ph, val, conv = refine_nelder_mead(s, PhaseSettings.from_free_parameters(s, x), cfg, trace, "hop")
        minima.append(val)
        if val < best[1]:
            best = (ph, val, conv)
    final = best[1]
    if cfg.objective == "fixed_lambda":
        final = objective(s, best[0], cfg, final=True)
    n_evals = len(trace) if trace is not None else -1
    return SearchResult(best[0], float(final), n_evals, best[2], minima, trace)


class EvalBudgetExceeded(BellgateError):
    """Raised only on request, when a refinement stops on its evaluation budget."""
