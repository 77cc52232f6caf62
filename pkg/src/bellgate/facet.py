"""Bell inequalities from the local model found at a detection threshold.

At the threshold the quantum table sits on the boundary of the local
polytope.  The strategies carrying weight in a local model of that boundary
point span a face ``F``; a hyperplane through ``F`` is a candidate Bell
inequality.  When ``F`` has dimension below ``D - 1`` the hyperplane is not
unique, and the normal is taken as the part of ``P_QM(eta=1) - center`` that
is orthogonal to ``F``.  Every candidate is checked against all
deterministic strategies before it is returned.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .bell import BellInequality, classical_bound, eta_threshold_at_lambda, eta_threshold_universal, fraction_str
from .errors import CertificationFailure, DegenerateFace, NotOnBoundary, NoViolation
from .lhv import (ThresholdReport, _solve, constraint_matrix, detected_table, eta_from_alpha,
                  rescaled_lp)
from .quantum import PhaseSettings, ideal_correlations
from .scenario import CorrelationTable, Scenario, _check_cap

SUPPORT_THRESHOLD = 1e-7
SVD_CUTOFF = 1e-8
RATIONAL_DEN = 1000
RATIONAL_TOL = 1e-6
RESIDUAL_TOL = 1e-8


@dataclass
class FaceData:
    support: list[int]
    affine_dim: int
    ambient_dim: int


@dataclass
class Extraction:
    """An extracted inequality together with the evidence that it is valid."""

    inequality: BellInequality
    face: FaceData
    max_residual: float
    certified_bound: object
    eta_recomputed: float
    eta_extracted: float
    kind: str
    lam: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def certificate(self) -> dict:
        bound = self.certified_bound
        return {
            "support": list(self.face.support),
            "max_residual": self.max_residual,
            "certified_bound": fraction_str(bound) if isinstance(bound, Fraction) else repr(float(bound)),
        }

    def to_dict(self) -> dict:
        return {
            "inequality": self.inequality.to_dict(),
            "certificate": self.certificate,
            "face": {"affine_dim": self.face.affine_dim, "ambient_dim": self.face.ambient_dim},
            "kind": self.kind,
            "lambda": self.lam,
            "eta_threshold": self.eta_extracted,
            "eta_lp": self.eta_recomputed,
        }


def polytope_center(s: Scenario, cap: int | None = None) -> CorrelationTable:
    """Uniform average of all deterministic-strategy tables."""
    _check_cap(s, cap)
    a = constraint_matrix(s)
    flat = np.asarray(a.sum(axis=1)).ravel() / s.n_strategies
    return CorrelationTable(s, flat.reshape(s.table_shape))


def _orth_basis(m: np.ndarray) -> np.ndarray:
    """Orthonormal basis (columns) of the row space of ``m``."""
    if m.shape[0] == 0:
        return np.zeros((m.shape[1], 0))
    _, sv, vt = np.linalg.svd(m, full_matrices=False)
    if sv.size == 0 or sv[0] == 0:
        return np.zeros((m.shape[1], 0))
    rank = int((sv > SVD_CUTOFF * sv[0]).sum())
    return vt[:rank].T


@lru_cache(maxsize=8)
def _polytope_directions(s: Scenario) -> np.ndarray:
    a = constraint_matrix(s).toarray().T
    return _orth_basis(a - a.mean(axis=0))


def ambient_dimension(s: Scenario) -> int:
    """Dimension ``D`` of the local polytope (rank of the centred strategy points)."""
    return _polytope_directions(s).shape[1]


def _boundary_fixed(s: Scenario, ph: PhaseSettings, report: ThresholdReport) -> np.ndarray:
    """Weights of a local model for the exact boundary point on the reported bracket."""
    lam = report.lam if report.lam is not None else 1.0
    if report.bracket is not None and report.bracket[1] > report.bracket[0]:
        lo, hi = report.bracket
    else:
        step = max(report.tolerance, 1e-6)
        lo, hi = max(0.0, report.eta_star - step), min(1.0, report.eta_star + step)
    q_lo = detected_table(s, ph, lo, lam).flat
    q_hi = detected_table(s, ph, hi, lam).flat
    a = constraint_matrix(s)
    n = s.n_strategies
    a_eq = sp.hstack([a, sp.csr_matrix(-(q_hi - q_lo)[:, None])], format="csr")
    c = np.zeros(n + 1)
    c[-1] = -1.0
    res = _solve(c, a_eq, q_lo, bounds=[(0, None)] * n + [(0, 1)])
    if res.status != 0:
        raise NotOnBoundary(f"correlations at eta={lo:.8g} are already nonlocal; threshold is too high")
    t = res.x[-1]
    if t > 1 - 1e-9:
        raise NotOnBoundary(f"correlations at eta={hi:.8g} are still local; threshold is too low")
    return np.clip(res.x[:n], 0.0, None)


def _boundary_forall(s: Scenario, ph: PhaseSettings, report: ThresholdReport) -> np.ndarray:
    alpha, w = rescaled_lp(s, ph)
    eta = eta_from_alpha(alpha)
    slack = max(report.tolerance, 1e-6)
    if report.eta_star < eta - slack:
        raise NotOnBoundary(f"reported eta={report.eta_star:.8g} lies below the recomputed {eta:.8g}")
    if report.eta_star > eta + slack:
        raise NotOnBoundary(f"reported eta={report.eta_star:.8g} lies above the recomputed {eta:.8g}")
    w = w.copy()
    # the face must also contain the all-no-result strategy (the lambda -> 0 limit)
    w[-1] = max(w[-1], 1.0)
    return w


def _maximal_support(s: Scenario, w: np.ndarray, delta: float = 1e-6) -> np.ndarray:
    """Weights for the same point that are positive on as many strategies as possible.

    Any local model of a boundary point uses only vertices of its minimal
    face, but a basic LP solution may use just a few of them.  Maximising
    ``sum min(w_k, delta)`` spreads weight over the whole face.
    """
    a = constraint_matrix(s)
    x = a @ w
    n = s.n_strategies
    a_eq = sp.hstack([a, a], format="csr")
    c = np.concatenate([-np.ones(n), np.zeros(n)])
    res = _solve(c, a_eq, x, bounds=[(0, delta)] * n + [(0, None)] * n)
    if res.status != 0:
        return w
    return np.clip(res.x[:n] + res.x[n:], 0.0, None) * (res.x[:n] > 1e-3 * delta)


def _rationalize(n: np.ndarray) -> list[Fraction] | None:
    out = []
    for v in n:
        f = Fraction(float(v)).limit_denominator(RATIONAL_DEN)
        if abs(float(f) - v) > RATIONAL_TOL:
            return None
        out.append(f)
    return out


def extract(s: Scenario, ph: PhaseSettings, report: ThresholdReport) -> Extraction:
    """Run the face-to-hyperplane construction and certify the result.

    Raises :class:`NotOnBoundary` when the quantum point at the reported
    efficiency is not on the polytope boundary, :class:`DegenerateFace` when no
    orthogonal direction remains, and :class:`CertificationFailure` when some
    deterministic strategy exceeds the face value.
    """
    if not report.violated:
        raise NoViolation("the report shows no violation; there is no boundary point to use")
    if report.witness is None:
        raise ValueError("threshold report carries no local model")
    if report.witness.scenario != s:
        raise ValueError(f"report witness is for {report.witness.scenario}, not {s}")
    if report.kind == "forall_lambda":
        w = _boundary_forall(s, ph, report)
    elif report.kind == "fixed_lambda":
        w = _boundary_fixed(s, ph, report)
    else:
        raise ValueError(f"unknown threshold kind {report.kind!r}")
    try:
        return _extract_from(s, ph, report, w)
    except CertificationFailure:
        return _extract_from(s, ph, report, _maximal_support(s, w / w.sum()))


def _extract_from(s: Scenario, ph: PhaseSettings, report: ThresholdReport, w: np.ndarray) -> Extraction:
    support = [int(k) for k in np.flatnonzero(w > SUPPORT_THRESHOLD)]
    pts = constraint_matrix(s)[:, support].toarray().T
    center = polytope_center(s).flat
    poly = _polytope_directions(s)
    ambient = poly.shape[1]
    face_dirs = _orth_basis(pts[1:] - pts[0])
    face_dim = face_dirs.shape[1]
    g = ideal_correlations(s, ph).flat - center
    g = poly @ (poly.T @ g)
    g = g - face_dirs @ (face_dirs.T @ g)
    if np.linalg.norm(g) < 1e-8:
        raise DegenerateFace("quantum direction has no component orthogonal to the face")
    n = g / np.abs(g).max()
    c_face = float(pts[0] @ n)
    if n @ center > c_face:
        n, c_face = -n, -c_face
    rat = _rationalize(n)
    coeffs_shape = s.table_shape
    candidates = []
    if rat is not None:
        exact = BellInequality(s, {idx: v for idx, v in zip(np.ndindex(coeffs_shape), rat)}, 0)
        candidates.append(exact)
    candidates.append(BellInequality(s, {idx: float(v) for idx, v in zip(np.ndindex(coeffs_shape), n)}, 0.0))
    last_error = None
    for cand in candidates:
        dense = cand.dense().ravel()
        values = pts @ dense
        face_value = values[0]
        residual = float(np.abs(values - face_value).max())
        if residual > RESIDUAL_TOL:
            last_error = f"support residual {residual:.3g}"
            continue
        bound, _ = classical_bound(cand)
        if float(bound) > face_value + RESIDUAL_TOL * max(1.0, abs(face_value)):
            last_error = f"a strategy reaches {float(bound):.10g} above the face value {face_value:.10g}"
            continue
        ineq = BellInequality(s, cand.coeffs, bound, "extracted")
        if report.kind == "forall_lambda":
            eta = eta_threshold_universal(ineq, ph)
        else:
            eta = eta_threshold_at_lambda(ineq, ph, report.lam if report.lam is not None else 1.0)
        return Extraction(ineq, FaceData(support, face_dim, ambient), residual, bound,
                          float(report.eta_star), float(eta), report.kind, report.lam)
    raise CertificationFailure(f"extracted hyperplane is not a valid Bell inequality: {last_error}")


def extract_inequality(s: Scenario, ph: PhaseSettings, threshold: ThresholdReport) -> BellInequality:
    """The certified inequality of :func:`extract`."""
    return extract(s, ph, threshold).inequality
