import dataclasses
import importlib
from fractions import Fraction


from bellgate import reproduce

registry = importlib.import_module("bellgate.registry")


def _failing(subset="quick"):
    rows = reproduce.run(subset)
    return {r.group for r in rows if not r.passed}


def _perturb(monkeypatch, name, key, delta):
    original = registry._entry
    e = registry.lookup(name)
    coeffs = dict(e.inequality.coeffs)
    coeffs[key] += delta
    bad = dataclasses.replace(e, inequality=type(e.inequality)(e.scenario, coeffs, e.inequality.bound))
    monkeypatch.setattr(registry, "_entry", lambda n: bad if n == name else original(n))


def test_quick_subset_passes():
    assert _failing() == set()


def test_rows_have_unique_labels():
    keys = [(r.group, r.label) for r, _ in reproduce.rows("full")]
    assert len(keys) == len(set(keys))
    assert not any(r.group.startswith("10") for r, _ in reproduce.rows("quick"))


def test_visible_perturbation_fails_physics_rows(monkeypatch):
    _perturb(monkeypatch, "i_2x3_d3_universal", (0, 0, 0, 0), Fraction(1, 100))
    failing = _failing()
    assert "0 registry integrity" in failing
    assert failing - {"0 registry integrity"}


def test_invisible_perturbation_caught_by_integrity_row(monkeypatch):
    # P(A=0, B=1) vanishes at the optimal phases, so only the snapshot notices
    _perturb(monkeypatch, "i_3x3_d2_lambda", (0, 0, 0, 1), Fraction(-1, 100))
    assert _failing() == {"0 registry integrity"}


def test_crashing_row_counts_as_failure(monkeypatch):
    monkeypatch.setattr(reproduce, "_lp_eta", lambda name: 1 / 0)
    rows = reproduce.run("quick")
    broken = [r for r in rows if r.group.startswith("1 ")]
    assert broken and all(not r.passed and "ZeroDivisionError" in r.error for r in broken)
