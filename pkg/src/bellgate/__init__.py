"""Detection-efficiency thresholds and Bell inequalities for qudit correlations.

The library builds the correlations of a maximally entangled pair of qudits
measured with multiport beam splitters, decides by linear programming whether
a local-hidden-variable model reproduces them once detectors can fail, and
turns the local model found at the threshold into a certified Bell inequality.
"""

__version__ = "0.1.0"

from .bell import (BellDecomposition, BellInequality, classical_bound, eta_threshold_at_lambda,
                   eta_threshold_universal, evaluate, inequality_noise_threshold, noise_threshold,
                   quantum_terms)
from .errors import (BellgateError, CapExceeded, CertificationFailure, DegenerateFace, ModelInvalid,
                     NotOnBoundary, NotUniversal, NoViolation, ScenarioMismatch, SolverFailure)
from .facet import FaceData, extract, extract_inequality, polytope_center
from .lhv import (LhvModel, ThresholdReport, eta_threshold_fixed_lambda, eta_threshold_forall_lambda,
                  lhv_feasible, noise_threshold_lp)
from .optimize import SearchConfig, random_seed_search, refine_nelder_mead, search
from .quantum import DetectionModel, PhaseSettings, apply_detection, correlations, ideal_correlations
from .registry import lookup
from .scenario import (CorrelationTable, DeterministicStrategy, Outcome, Scenario, enumerate_strategies,
                       strategy_point)

__all__ = [name for name in dir() if not name.startswith("_")]
