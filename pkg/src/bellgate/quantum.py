"""Quantum correlations of multiport beam-splitter measurements.

Both parties measure the maximally entangled state of two qudits after applying
per-level phases and a discrete Fourier transform.  The ideal table only has
weight on result outcomes; :func:`apply_detection` then folds in detector
efficiency ``eta`` and pair-production probability ``lam``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ModelInvalid, ScenarioMismatch
from .scenario import CorrelationTable, Scenario

TWO_PI = 2.0 * np.pi

def _canonical(phases: np.ndarray) -> np.ndarray:
    out = np.mod(phases - phases[:, :1], TWO_PI)
    # fold values within rounding of 2*pi back to 0
    out[np.isclose(out, TWO_PI, rtol=0, atol=1e-13)] = 0.0
    return out


class PhaseSettings:
    """Per-level phases (radians) for each of Alice's and Bob's settings.

    Stored gauge-fixed: every setting is shifted so its first phase is zero and
    reduced modulo ``2*pi``.  Use ``raw=True`` to keep the phases verbatim.
    """

    def __init__(self, alice, bob, raw: bool = False):
        a = np.atleast_2d(np.asarray(alice, dtype=float))
        b = np.atleast_2d(np.asarray(bob, dtype=float))
        if a.shape[1] != b.shape[1]:
            raise ValueError("Alice and Bob phase lists must have the same length d")
        if a.shape[1] < 2:
            raise ValueError("need at least two phases per setting")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("phases must be finite")
        if not raw:
            a, b = _canonical(a), _canonical(b)
        a.setflags(write=False)
        b.setflags(write=False)
        self.alice = a
        self.bob = b

    @property
    def d(self) -> int:
        return self.alice.shape[1]

    @property
    def scenario(self) -> Scenario:
        return Scenario(self.d, self.alice.shape[0], self.bob.shape[0])

    def free_parameters(self) -> np.ndarray:
        """The ``(na + nb) * (d - 1)`` non-gauge phases, flattened."""
        return np.concatenate([self.alice[:, 1:].ravel(), self.bob[:, 1:].ravel()])

    @classmethod
    def from_free_parameters(cls, s: Scenario, x) -> "PhaseSettings":
        x = np.asarray(x, dtype=float)
        if x.size != (s.na + s.nb) * (s.d - 1):
            raise ValueError("wrong number of free phases")
        grid = np.zeros((s.na + s.nb, s.d))
        grid[:, 1:] = x.reshape(s.na + s.nb, s.d - 1)
        return cls(grid[: s.na], grid[s.na :])

    def to_dict(self) -> dict:
        return {"alice": self.alice.tolist(), "bob": self.bob.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "PhaseSettings":
        return cls(data["alice"], data["bob"])

    def __repr__(self):
        return f"PhaseSettings(d={self.d}, na={self.alice.shape[0]}, nb={self.bob.shape[0]})"


@dataclass(frozen=True)
class DetectionModel:
    eta: float = 1.0
    lam: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ModelInvalid(f"eta={self.eta} outside [0, 1]")
        if not 0.0 < self.lam <= 1.0:
            raise ModelInvalid(f"lambda={self.lam} outside (0, 1]")


def result_probabilities(ph: PhaseSettings) -> np.ndarray:
    """``P_kl(A_i, B_j)`` as an ``(na, nb, d, d)`` array."""
    d = ph.d
    rel = ph.alice[:, None, :] - ph.bob[None, :, :]
    c = np.exp(1j * rel)
    # amp[..., n] = sum_m c[..., m] exp(2 pi i m n / d), n = (k - l) mod d
    amp = np.fft.ifft(c, axis=-1) * d
    weight = np.abs(amp) ** 2 / d**3
    k = np.arange(d)
    return weight[:, :, (k[:, None] - k[None, :]) % d]


def ideal_correlations(s: Scenario, ph: PhaseSettings) -> CorrelationTable:
    """Perfect-detection table: result pairs only, every marginal ``1/d``."""
    if ph.scenario != s:
        raise ScenarioMismatch(f"phases describe {ph.scenario}, expected {s}")
    p = np.zeros(s.table_shape)
    p[:, :, : s.d, : s.d] = result_probabilities(ph)
    return CorrelationTable(s, p)


def _result_block(t: CorrelationTable) -> np.ndarray:
    d = t.scenario.d
    if np.any(t.p[:, :, d, :] != 0) or np.any(t.p[:, :, :, d] != 0):
        raise ValueError("expected an ideal table with empty no-result rows and columns")
    return t.p[:, :, :d, :d]


def apply_detection(t: CorrelationTable, model: DetectionModel) -> CorrelationTable:
    """Fold detector efficiency and pair-production probability into an ideal table."""
    if not isinstance(model, DetectionModel):
        model = DetectionModel(*model)
    s = t.scenario
    d = s.d
    eta, lam = model.eta, model.lam
    rr = _result_block(t)
    p = np.zeros(s.table_shape)
    p[:, :, :d, :d] = lam * eta**2 * rr
    p[:, :, d, :d] = lam * eta * (1 - eta) * rr.sum(axis=2)
    p[:, :, :d, d] = lam * eta * (1 - eta) * rr.sum(axis=3)
    p[:, :, d, d] = 1 - lam + lam * (1 - eta) ** 2
    return CorrelationTable(s, p)


def white_noise_mix(t: CorrelationTable, p: float) -> CorrelationTable:
    """Mix an ideal table with the uniform result distribution ``1/d**2``."""
    if not 0.0 <= p <= 1.0:
        raise ModelInvalid(f"noise fraction {p} outside [0, 1]")
    s = t.scenario
    d = s.d
    rr = _result_block(t)
    out = np.zeros(s.table_shape)
    out[:, :, :d, :d] = (1 - p) * rr + p / d**2
    return CorrelationTable(s, out)


def uniform_table(s: Scenario) -> CorrelationTable:
    out = np.zeros(s.table_shape)
    out[:, :, : s.d, : s.d] = 1.0 / s.d**2
    return CorrelationTable(s, out)


def correlations(s: Scenario, ph: PhaseSettings, eta: float = 1.0, lam: float = 1.0,
                 noise: float = 0.0) -> CorrelationTable:
    """Ideal table, optionally noise-mixed, then passed through the detection model."""
    t = ideal_correlations(s, ph)
    if noise:
        t = white_noise_mix(t, noise)
    return apply_detection(t, DetectionModel(eta, lam))
