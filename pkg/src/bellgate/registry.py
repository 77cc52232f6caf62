"""Named inequalities with their optimal phase settings and expected figures.

Inequalities are written with correlation shorthands (shifted agreement,
correlators, no-result groupings) through :class:`Expr`, which expands them to
raw ``(i, j, K, L)`` coefficients.  Settings are 1-based in the builder calls
to match how the expressions are usually written down.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction as F
from functools import lru_cache
import numpy as np

from .bell import BellInequality
from .quantum import PhaseSettings
from .scenario import Scenario


class Expr:
    """Accumulates a Bell expression from shorthand terms (settings 1-based)."""

    def __init__(self, s: Scenario):
        self.s = s
        self.coeffs: dict[tuple[int, int, int, int], F] = {}

    def _add(self, i, j, k, l, w):
        key = (i - 1, j - 1, k, l)
        self.coeffs[key] = self.coeffs.get(key, F(0)) + F(w)

    def P(self, i, j, k, l, w=1):
        """Raw joint probability; ``k`` or ``l`` equal to ``d`` means no result."""
        self._add(i, j, k, l, w)
        return self

    def same(self, i, j, n=0, w=1):
        """``P(A_i = B_j + n)``: sum over results with ``A - B = n (mod d)``."""
        d = self.s.d
        for l in range(d):
            self._add(i, j, (l + n) % d, l, w)
        return self

    def differ(self, i, j, n=0, w=1):
        """``P(A_i != B_j + n)`` over result pairs."""
        d = self.s.d
        for k in range(d):
            for l in range(d):
                if (k - l - n) % d:
                    self._add(i, j, k, l, w)
        return self

    def bob_same(self, i, j, n=0, w=1):
        """``P(B_j = A_i + n)``."""
        return self.same(i, j, -n, w)

    def corr(self, i, j, n=0, w=1):
        """Generalised correlator ``E_n = P(A = B + n) - P(A != B + n)``."""
        return self.same(i, j, n, w).differ(i, j, n, -F(w))

    def a_null(self, i, j, w=1):
        """``P(A_i = no-result, B_j = result)``."""
        for l in range(self.s.d):
            self._add(i, j, self.s.d, l, w)
        return self

    def b_null(self, i, j, w=1):
        """``P(A_i = result, B_j = no-result)``."""
        for k in range(self.s.d):
            self._add(i, j, k, self.s.d, w)
        return self

    def both_null(self, i, j, w=1):
        self._add(i, j, self.s.d, self.s.d, w)
        return self

    def any_null(self, i, j, w=1):
        """At least one party without a result."""
        return self.a_null(i, j, w).b_null(i, j, w).both_null(i, j, w)

    def build(self, bound, name="") -> BellInequality:
        return BellInequality(self.s, self.coeffs, F(bound), name)


@dataclass(frozen=True)
class RegistryEntry:
    name: str
    inequality: BellInequality
    optimal_phases: PhaseSettings
    expected_violation: float
    expected_eta: float
    universal: bool
    expected_noise: float | None = None
    expected_eta_lambda1: float | None = None

    @property
    def scenario(self) -> Scenario:
        return self.inequality.scenario

    def to_dict(self) -> dict:
        return {"name": self.name, "inequality": self.inequality.to_dict(),
                "optimal_phases": self.optimal_phases.to_dict(),
                "expected_violation": self.expected_violation, "expected_eta": self.expected_eta,
                "universal": self.universal, "expected_noise": self.expected_noise,
                "expected_eta_lambda1": self.expected_eta_lambda1}


# ---------------------------------------------------------------- two settings, any d

def chsh_d(d: int) -> BellInequality:
    """Two-setting inequality for qudits with the no-result term ``1/2 sum P(null, null)``."""
    s = Scenario(d, 2, 2)
    e = Expr(s)
    for k in range(d // 2):
        w = 1 - F(2 * k, d - 1)
        e.same(1, 1, k, w).bob_same(2, 1, k + 1, w).same(2, 2, k, w).bob_same(1, 2, k, w)
        e.same(1, 1, -k - 1, -w).bob_same(2, 1, -k, -w).same(2, 2, -k - 1, -w).bob_same(1, 2, -k - 1, -w)
    for i in (1, 2):
        for j in (1, 2):
            e.both_null(i, j, F(1, 2))
    return e.build(2, f"chsh_d{d}")


def chsh_d_phases(d: int) -> PhaseSettings:
    j = np.arange(d)
    return PhaseSettings([0 * j, np.pi * j / d], [-np.pi * j / (2 * d), np.pi * j / (2 * d)])


def chsh_d_violation(d: int) -> float:
    """Closed-form ideal value of :func:`chsh_d` at :func:`chsh_d_phases`."""
    def q(k):
        return 1.0 / (2 * d**3 * np.sin(np.pi * (k + 0.25) / d) ** 2)
    return 4 * d * sum((1 - 2 * k / (d - 1)) * (q(k) - q(-k - 1)) for k in range(d // 2))


def chsh_d_eta(d: int) -> float:
    return 4.0 / (chsh_d_violation(d) + 2)


# ---------------------------------------------------------------- qubits

def _i2_3x3_lambda() -> BellInequality:
    e = Expr(Scenario(2, 3, 3))
    e.corr(1, 2).corr(1, 3).corr(2, 1).corr(3, 1).corr(2, 3, w=-1).corr(3, 2, w=-1)
    for i in (1, 2, 3):
        e.differ(i, i, w=F(-4, 3))
    return e.build(2, "i_3x3_d2_lambda")


def _i2_3x3_universal() -> BellInequality:
    e = Expr(Scenario(2, 3, 3))
    e.corr(1, 2, w=F(2, 3)).corr(1, 3, w=F(4, 3)).corr(2, 1, w=F(4, 3))
    e.corr(3, 1, w=F(2, 3)).corr(2, 3, w=F(-4, 3)).corr(3, 2, w=F(-2, 3))
    for i in (1, 2, 3):
        e.differ(i, i, w=F(-4, 3))
    e.any_null(1, 2, F(-2, 3)).any_null(2, 3, F(-4, 3)).any_null(3, 1, F(-2, 3)).any_null(3, 2, F(2, 3))
    e.a_null(2, 1, F(4, 3)).b_null(1, 3, F(4, 3))
    e.both_null(1, 1, F(4, 3)).both_null(2, 1, F(4, 3)).both_null(1, 3, F(4, 3))
    return e.build(2, "i_3x3_d2_universal")


def _i2_3x4_universal() -> BellInequality:
    e = Expr(Scenario(2, 3, 4))
    e.differ(1, 2, w=-1).differ(1, 3, w=-1).differ(1, 4, w=-1)
    e.same(2, 1).same(2, 2).differ(2, 3, w=-1).differ(2, 4)
    e.same(3, 1, w=-1).same(3, 2).differ(3, 2, w=-1).differ(3, 3).same(3, 4, w=-1)
    e.b_null(1, 1).a_null(2, 2).b_null(3, 1, -1).a_null(1, 2, -1)
    e.both_null(1, 1).both_null(2, 2)
    return e.build(2, "i_3x4_d2_universal")


def _i2_4x4_universal() -> BellInequality:
    e = Expr(Scenario(2, 4, 4))
    e.same(1, 1, w=-1).differ(1, 3).same(2, 1, w=-1)
    e.same(2, 2, w=-1).differ(2, 4).differ(3, 1)
    e.differ(3, 2, w=-1).differ(3, 3, w=-1).differ(4, 1, w=-1)
    e.same(4, 2).same(4, 3, w=-1).differ(4, 4)
    e.b_null(1, 4).b_null(4, 1, -1)
    e.both_null(1, 1).both_null(1, 4)
    return e.build(2, "i_4x4_d2_universal")


# ---------------------------------------------------------------- qutrits

def _i3_2x3_universal() -> BellInequality:
    s = Scenario(3, 2, 3)
    e = Expr(s)
    for i, j, n in [(1, 1, 0), (1, 2, 0), (1, 3, 0), (2, 1, 1), (2, 2, 2), (2, 3, 0)]:
        e.same(i, j, n).differ(i, j, n, -1)
    for i in (1, 2):
        for j in (1, 2, 3):
            e.a_null(i, j, F(-1, 3)).both_null(i, j, F(1, 3))
    return e.build(2, "i_2x3_d3_universal")


def _i3_3x3_lambda() -> BellInequality:
    e = Expr(Scenario(3, 3, 3))
    # Here the correlator is E_n = P(A = B) - P(A = B + n).
    for i, j, n, w in [(1, 2, 1, 1), (1, 3, 2, 1), (2, 1, 2, 1), (2, 3, 2, -1), (3, 1, 1, 1), (3, 2, 1, -1)]:
        e.same(i, j, 0, w).same(i, j, n, -w)
    for i in (1, 2, 3):
        e.differ(i, i, w=-1)
    return e.build(2, "i_3x3_d3_lambda")


def _i3_3x3_universal() -> BellInequality:
    e = Expr(Scenario(3, 3, 3))
    terms = [
        (1, 1, 0, F(-5, 3)), (1, 1, 2, F(-4, 3)), (1, 2, 0, 1), (1, 2, 1, F(5, 3)),
        (1, 3, 0, F(-5, 3)), (1, 3, 2, -1), (2, 1, 0, F(5, 3)), (2, 1, 1, -2),
        (2, 2, 0, F(-5, 3)), (2, 2, 1, 2), (2, 3, 1, -1), (2, 3, 2, F(-5, 3)),
        (3, 1, 0, F(-11, 3)), (3, 1, 2, -2), (3, 2, 0, F(2, 3)), (3, 2, 1, 2),
        (3, 3, 0, F(5, 3)), (3, 3, 2, 1),
    ]
    for i, j, n, w in terms:
        e.same(i, j, n, w)
    e.b_null(1, 1, F(5, 3)).b_null(2, 1, F(-5, 3)).b_null(3, 1, -2).b_null(1, 2, 2)
    e.both_null(1, 1, F(5, 3)).both_null(1, 2, 2)
    return e.build(F(11, 3), "i_3x3_d3_universal")


# ---------------------------------------------------------------- ququarts

def _i4_2x3_universal(variant: str = "bob_sum") -> BellInequality:
    e = Expr(Scenario(4, 2, 3))
    for i, j, n, w in [(1, 1, 1, 1), (1, 1, 2, 2), (1, 2, 0, 2), (1, 2, 1, 1), (1, 3, 0, 2),
                       (2, 1, 1, 2), (2, 1, 2, 1), (2, 2, 0, 1), (2, 2, 1, 2), (2, 3, 2, 2)]:
        e.same(i, j, n, w)
    for i in (1, 2):
        e.a_null(i, 1, F(4, 3)).a_null(i, 2, F(1, 3)).a_null(i, 3, F(1, 3))
    for i, w in ((1, F(5, 3)), (2, F(1, 3))):
        if variant == "bob_sum":
            for j in (1, 2, 3):
                e.b_null(i, j, w)
        elif variant == "single":
            e.b_null(i, 1, w)
        elif variant == "doubled":
            e.b_null(i, 1, 2 * w)
        else:
            raise ValueError(variant)
    for i, j, w in [(1, 1, F(8, 3)), (1, 2, F(5, 3)), (1, 3, F(5, 3)),
                    (2, 1, F(4, 3)), (2, 2, F(1, 3)), (2, 3, F(1, 3))]:
        e.both_null(i, j, w)
    return e.build(8, "i_2x3_d4_universal")


def _i4_3x3_universal() -> BellInequality:
    e = Expr(Scenario(4, 3, 3))
    for i, j, n, w in [(1, 1, 2, -1), (1, 1, 3, 1), (1, 2, 1, 2), (1, 2, 2, -1), (1, 3, 0, -1),
                       (1, 3, 1, -3), (1, 3, 2, -2), (2, 1, 0, -1), (2, 1, 1, 1), (2, 2, 1, -1),
                       (2, 2, 2, 1), (2, 3, 3, 2), (3, 1, 1, 2), (3, 2, 0, 1), (3, 2, 2, -2),
                       (3, 2, 3, -1), (3, 3, 0, 2), (3, 3, 2, 1)]:
        e.same(i, j, n, w)
    for i in (1, 2, 3):
        e.a_null(i, 1)
    e.b_null(1, 1).b_null(1, 2).a_null(1, 3, -1).a_null(3, 3).b_null(3, 3)
    for i, j, w in [(1, 1, 2), (1, 2, 1), (2, 1, 1), (3, 1, 1), (3, 3, 1)]:
        e.both_null(i, j, w)
    return e.build(6, "i_3x3_d4_universal")


# ---------------------------------------------------------------- optimal settings

_PI = np.pi


def _qutrit_2x3_phases() -> PhaseSettings:
    # Conjugated and relabelled form of the commonly quoted settings; the quoted
    # ones reach the same value only for an outcome-relabelled inequality.
    a = np.array([[0, 0, 0], [0, 2 * _PI / 3, 0]])
    b = np.array([[0, _PI / 3, 0], [0, 2 * _PI / 3, -_PI / 3], [0, -_PI / 3, -_PI / 3]])
    m = np.arange(3)
    ra, rb = np.array([0, 2]), np.array([0, 1, 0])
    return PhaseSettings(-a + 2 * _PI * np.outer(ra, m) / 3, -b + 2 * _PI * np.outer(rb, m) / 3)


def _sym_phases(step: float, d: int) -> PhaseSettings:
    m = np.arange(d)
    a = [0 * m, step * m, -step * m]
    return PhaseSettings(a, a)


_TABLE: dict[str, tuple] = {
    # name: (builder, phases factory, violation, eta, universal, noise)
    "i_3x3_d2_lambda": (_i2_3x3_lambda, lambda: _sym_phases(_PI / 3, 2),
                        3.0, float(np.sqrt(2 / 3)), False, 0.2000),
    "i_3x3_d2_universal": (_i2_3x3_universal,
                           lambda: PhaseSettings([[0, 0], [0, 1.3934], [0, -0.7558]],
                                                 [[0, 0.5525], [0, 1.3083], [0, -0.8410]]),
                           3.157, 0.8217, True, 0.2859),
    "i_3x4_d2_universal": (_i2_3x4_universal,
                           lambda: PhaseSettings([[0, 0], [0, 0.7388], [0, 2.1334]],
                                                 [[0, -0.1347], [0, 1.2938], [0, -0.0757], [0, -1.0891]]),
                           2.8683, 0.8216, True, 0.2862),
    "i_4x4_d2_universal": (_i2_4x4_universal,
                           lambda: PhaseSettings([[0, 0], [0, 0.0958], [0, 2.1856], [0, 4.5944]],
                                                 [[0, 4.0339], [0, 3.3011], [0, 2.2493], [0, 2.3454]]),
                           2.8697, 0.8214, True, 0.2863),
    "i_2x3_d3_universal": (_i3_2x3_universal, _qutrit_2x3_phases, 10 / 3, 9 / 11, True, 0.2500),
    "i_3x3_d3_lambda": (_i3_3x3_lambda, lambda: _sym_phases(2 * _PI / 9, 3),
                        3.0642, 0.8079, False, 0.2101),
    "i_3x3_d3_universal": (_i3_3x3_universal,
                           lambda: PhaseSettings([[0, 0, 0], [0, 1.4376, 2.8753], [0, 0.5063, 1.0125]],
                                                 [[0, 2.0452, 4.0904], [0, 2.9758, -0.3315], [0, 1.3839, 2.7678]]),
                           5.3358, 0.8146, True, 0.2971),
    "i_2x3_d4_universal": (_i4_2x3_universal,
                           lambda: PhaseSettings([[0, 0, 0, 0], [0, -1.1397, 2.0019, 3.1416]],
                                                 [[0, 1.7863, -0.5698, 2.3562], [0, 0.2155, 5.7133, 0.7854],
                                                  [0, 1.0009, 1.0009, 0]]),
                           9.4142, 0.8093, True, 0.2756),
    "i_3x3_d4_universal": (_i4_3x3_universal,
                           lambda: PhaseSettings([[0, 0, 0, 0], [0, -1.2238, -1.1546, 3.9048],
                                                  [0, 3.1572, 3.8330, 0.7070]],
                                                 [[0, -0.9042, 1.7066, 0.8025], [0, 2.5844, 3.6937, -0.0051],
                                                  [0, 4.1396, 3.0022, 7.1419]]),
                           7.5576, 0.7939, True, 0.2625),
}

# Table values of the white-noise resistance for the two-setting family.
_CHSH_NOISE = {2: 0.2929, 3: 0.3038, 4: 0.3095, 5: 0.3128, 6: 0.3151, 7: 0.3167}

ALIASES = {
    "i_4x2x3": "i_2x3_d4_universal",
    "i_2x3x3_lambda": "i_3x3_d2_lambda",
}


def chsh_entry(d: int) -> RegistryEntry:
    if d < 2:
        raise ValueError("d must be at least 2")
    return RegistryEntry(
        name=f"chsh_d{d}",
        inequality=chsh_d(d),
        optimal_phases=chsh_d_phases(d),
        expected_violation=chsh_d_violation(d),
        expected_eta=chsh_d_eta(d),
        universal=True,
        expected_noise=_CHSH_NOISE.get(d),
        expected_eta_lambda1=chsh_d_eta(d),
    )


@lru_cache(maxsize=None)
def _entry(name: str) -> RegistryEntry:
    build, phases, viol, eta, universal, noise = _TABLE[name]
    return RegistryEntry(
        name=name,
        inequality=build(),
        optimal_phases=phases(),
        expected_violation=viol,
        expected_eta=eta,
        universal=universal,
        expected_noise=noise,
        expected_eta_lambda1=None if universal else eta,
    )


def names() -> list[str]:
    return [f"chsh_d{d}" for d in sorted(_CHSH_NOISE)] + list(_TABLE)


def registry() -> dict[str, RegistryEntry]:
    """Every named entry, keyed by canonical name."""
    return {n: lookup(n) for n in names()}


def canonical_name(name: str) -> str:
    key = name.strip().lower()
    return ALIASES.get(key, key)


def lookup(name: str, d: int | None = None) -> RegistryEntry:
    """Find an entry by name or alias.

    ``"chsh_d"`` is the whole two-setting family and needs ``d``; ``"chsh_d5"``
    also works.  Raises ``KeyError`` for unknown names.
    """
    key = canonical_name(name)
    if key == "chsh_d":
        if d is None:
            raise KeyError("chsh_d needs a dimension d")
        return chsh_entry(d)
    if key.startswith("chsh_d") and key[6:].isdigit():
        entry = chsh_entry(int(key[6:]))
    elif key in _TABLE:
        entry = _entry(key)
    else:
        raise KeyError(f"unknown inequality {name!r}; known: {', '.join(names())}")
    if d is not None and entry.scenario.d != d:
        raise KeyError(f"{name!r} is defined for d={entry.scenario.d}, not d={d}")
    return entry


SNAPSHOT = "registry.json"


def snapshot() -> dict:
    """Every entry as plain JSON-ready data, in :func:`names` order."""
    return {"entries": [lookup(n).to_dict() for n in names()], "aliases": dict(sorted(ALIASES.items()))}


def load_snapshot() -> dict:
    """The registry snapshot shipped with the package (``data/registry.json``)."""
    from importlib.resources import files

    from .io import loads

    return loads(files(__package__).joinpath("data", SNAPSHOT).read_text())
