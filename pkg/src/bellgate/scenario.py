"""Measurement scenarios, outcome encoding and deterministic strategies.

Outcomes of a ``d``-dimensional measurement are the integers ``0..d-1``; the
no-result outcome is encoded as ``d`` so that every per-party index runs over
``0..d`` contiguously.  Strategies are enumerated in lexicographic order of
``(alice..., bob...)`` with Bob's last setting varying fastest; that order is
what the LP variable indices refer to.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np

from .errors import CapExceeded

DEFAULT_CAP = 10**7
CAP_ENV_VAR = "BELLGATE_CAP"


def enumeration_cap() -> int:
    """Current enumeration cap, honouring the ``BELLGATE_CAP`` override."""
    raw = os.environ.get(CAP_ENV_VAR)
    return int(raw) if raw else DEFAULT_CAP


@dataclass(frozen=True)
class Scenario:
    d: int
    na: int
    nb: int

    def __post_init__(self):
        if self.d < 2 or self.na < 1 or self.nb < 1:
            raise ValueError(f"invalid scenario d={self.d}, na={self.na}, nb={self.nb}")

    @property
    def null(self) -> int:
        """Index of the no-result outcome."""
        return self.d

    @property
    def n_outcomes(self) -> int:
        return self.d + 1

    @property
    def n_strategies(self) -> int:
        return (self.d + 1) ** (self.na + self.nb)

    @property
    def table_shape(self) -> tuple[int, int, int, int]:
        return (self.na, self.nb, self.d + 1, self.d + 1)

    def to_dict(self) -> dict:
        return {"d": self.d, "na": self.na, "nb": self.nb}

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        return cls(int(data["d"]), int(data["na"]), int(data["nb"]))


class CorrelationTable:
    """Joint probabilities ``p[i, j, K, L] = P(A_i = K, B_j = L)`` including no-result.

    Index ``d`` along the last two axes is the no-result outcome.
    """

    def __init__(self, scenario: Scenario, p):
        p = np.array(p, dtype=float)
        if p.shape != scenario.table_shape:
            raise ValueError(f"table shape {p.shape} != {scenario.table_shape}")
        p.setflags(write=False)
        self.scenario = scenario
        self.p = p

    def __repr__(self):
        return f"CorrelationTable({self.scenario})"

    @property
    def flat(self) -> np.ndarray:
        return self.p.reshape(-1)

    def alice_marginals(self) -> np.ndarray:
        """``P(A_i = K)`` as seen from each of Bob's settings, shape ``(na, nb, d+1)``."""
        return self.p.sum(axis=3)

    def bob_marginals(self) -> np.ndarray:
        return self.p.sum(axis=2)

    def check(self, tol: float = 1e-12) -> None:
        """Raise ``ValueError`` unless entries, normalization and no-signalling hold."""
        p = self.p
        if not np.all(np.isfinite(p)) or p.min() < -tol or p.max() > 1 + tol:
            raise ValueError("table entries outside [0, 1]")
        norm = p.sum(axis=(2, 3))
        if np.abs(norm - 1).max() > tol:
            raise ValueError(f"normalization violated by {np.abs(norm - 1).max():.3g}")
        pa, pb = self.alice_marginals(), self.bob_marginals()
        if np.abs(pa - pa[:, :1]).max() > tol or np.abs(pb - pb[:1]).max() > tol:
            raise ValueError("no-signalling violated")

    def to_dict(self) -> dict:
        return {"scenario": self.scenario.to_dict(), "p": self.p.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "CorrelationTable":
        return cls(Scenario.from_dict(data["scenario"]), data["p"])


@dataclass(frozen=True)
class Outcome:
    value: int
    d: int

    def __post_init__(self):
        if not 0 <= self.value <= self.d:
            raise ValueError(f"outcome {self.value} outside 0..{self.d}")

    def is_result(self) -> bool:
        return self.value < self.d

    def __str__(self):
        return str(self.value) if self.is_result() else "∅"


@dataclass(frozen=True)
class DeterministicStrategy:
    """One outcome per setting for each party (values in ``0..d``, ``d`` = no result)."""

    alice: tuple[int, ...]
    bob: tuple[int, ...]

    def outcomes(self, d: int) -> tuple[list[Outcome], list[Outcome]]:
        return [Outcome(k, d) for k in self.alice], [Outcome(l, d) for l in self.bob]

    def index(self, s: Scenario) -> int:
        """Position of this strategy in the lexicographic enumeration of ``s``."""
        check_strategy(s, self)
        idx = 0
        for v in self.alice + self.bob:
            idx = idx * (s.d + 1) + v
        return idx


def check_strategy(s: Scenario, strat: DeterministicStrategy) -> None:
    if len(strat.alice) != s.na or len(strat.bob) != s.nb:
        raise ValueError("strategy length does not match scenario")
    if any(not 0 <= v <= s.d for v in strat.alice + strat.bob):
        raise ValueError("strategy outcome out of range")


def _check_cap(s: Scenario, cap: int | None) -> None:
    cap = enumeration_cap() if cap is None else cap
    if s.n_strategies > cap:
        raise CapExceeded(f"{s.n_strategies} strategies exceed the cap of {cap}")


def strategy_array(s: Scenario, cap: int | None = None) -> np.ndarray:
    """All strategies as an ``(N, na + nb)`` integer array in enumeration order."""
    _check_cap(s, cap)
    return _strategy_array(s)


@lru_cache(maxsize=16)
def _strategy_array(s: Scenario) -> np.ndarray:
    n = s.na + s.nb
    idx = np.arange(s.n_strategies)
    digits = np.empty((s.n_strategies, n), dtype=np.int64)
    for pos in range(n - 1, -1, -1):
        digits[:, pos] = idx % (s.d + 1)
        idx //= s.d + 1
    digits.setflags(write=False)
    return digits


def strategy_from_index(s: Scenario, index: int) -> DeterministicStrategy:
    if not 0 <= index < s.n_strategies:
        raise IndexError(index)
    n = s.na + s.nb
    digits = [0] * n
    for pos in range(n - 1, -1, -1):
        index, digits[pos] = divmod(index, s.d + 1)
    return DeterministicStrategy(tuple(digits[: s.na]), tuple(digits[s.na :]))


def enumerate_strategies(s: Scenario, cap: int | None = None) -> Iterator[DeterministicStrategy]:
    """Yield every deterministic strategy of ``s`` in lexicographic order.

    Raises :class:`CapExceeded` before yielding anything if the count
    ``(d+1)**(na+nb)`` is above ``cap`` (default: :func:`enumeration_cap`).
    """
    _check_cap(s, cap)
    for row in _strategy_array(s):
        yield DeterministicStrategy(tuple(int(v) for v in row[: s.na]), tuple(int(v) for v in row[s.na :]))


def strategy_point(s: Scenario, strat: DeterministicStrategy) -> "CorrelationTable":
    """0/1 correlation table induced by ``strat``."""
    check_strategy(s, strat)
    point = np.zeros(s.table_shape)
    for i, k in enumerate(strat.alice):
        for j, l in enumerate(strat.bob):
            point[i, j, k, l] = 1.0
    return CorrelationTable(s, point)


def strategy_points(s: Scenario, cap: int | None = None) -> np.ndarray:
    """Flattened points of all strategies, shape ``(N, na*nb*(d+1)**2)``.

    Dense; intended for the geometric routines that need the full point set.
    """
    strat = strategy_array(s, cap)
    n1 = s.d + 1
    out = np.zeros((s.n_strategies, s.na * s.nb * n1 * n1))
    rows = np.arange(s.n_strategies)
    for i in range(s.na):
        for j in range(s.nb):
            col = ((i * s.nb + j) * n1 + strat[:, i]) * n1 + strat[:, s.na + j]
            out[rows, col] = 1.0
    return out
