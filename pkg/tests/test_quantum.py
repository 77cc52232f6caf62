import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from bellgate.errors import ModelInvalid, ScenarioMismatch
from bellgate.quantum import (DetectionModel, PhaseSettings, apply_detection, correlations,
                              ideal_correlations, result_probabilities, uniform_table, white_noise_mix)
from bellgate.registry import lookup
from bellgate.scenario import Scenario

from oracles import detection_bruteforce, quantum_table_bruteforce

angles = st.floats(-10, 10, allow_nan=False)


@st.composite
def phase_settings(draw, max_d=4):
    d = draw(st.integers(2, max_d))
    na = draw(st.integers(1, 3))
    nb = draw(st.integers(1, 3))
    a = draw(arrays(float, (na, d), elements=angles))
    b = draw(arrays(float, (nb, d), elements=angles))
    return PhaseSettings(a, b)


@given(phase_settings())
def test_matches_explicit_state_vector(ph):
    expected = quantum_table_bruteforce(ph.alice, ph.bob)
    assert np.allclose(result_probabilities(ph), expected, atol=1e-12)


@given(phase_settings())
def test_ideal_marginals_are_uniform(ph):
    t = ideal_correlations(ph.scenario, ph)
    t.check(1e-12)
    d = ph.d
    assert np.allclose(t.alice_marginals()[:, :, :d], 1 / d)
    assert np.allclose(t.bob_marginals()[:, :, :d], 1 / d)


@given(phase_settings(), st.data())
def test_gauge_invariance(ph, data):
    """A constant added to every phase of one setting changes nothing."""
    shift_a = data.draw(arrays(float, (ph.alice.shape[0], 1), elements=angles))
    shift_b = data.draw(arrays(float, (ph.bob.shape[0], 1), elements=angles))
    moved = PhaseSettings(ph.alice + shift_a, ph.bob + shift_b, raw=True)
    assert np.allclose(result_probabilities(moved), result_probabilities(ph), atol=1e-12)


def test_canonical_form():
    ph = PhaseSettings([[1.0, 1.5, 1.0 + 2 * np.pi]], [[-1.0, 0.0, 1.0]])
    assert np.allclose(ph.alice, [[0, 0.5, 0]])
    assert np.allclose(ph.bob, [[0, 1, 2]])
    again = PhaseSettings.from_free_parameters(ph.scenario, ph.free_parameters())
    assert np.allclose(again.alice, ph.alice) and np.allclose(again.bob, ph.bob)


def test_phase_round_trip():
    ph = lookup("i_3x3_d3_universal").optimal_phases
    back = PhaseSettings.from_dict(ph.to_dict())
    assert np.array_equal(back.alice, ph.alice) and np.array_equal(back.bob, ph.bob)


@given(phase_settings(max_d=3), st.floats(0, 1), st.floats(0.01, 1))
def test_detection_matches_independent_detectors(ph, eta, lam):
    t = ideal_correlations(ph.scenario, ph)
    got = apply_detection(t, DetectionModel(eta, lam))
    got.check(1e-12)
    want = detection_bruteforce(t.p[:, :, :ph.d, :ph.d], eta, lam)
    assert np.allclose(got.p, want, atol=1e-14)


def test_qutrit_marginals_are_one_third():
    e = lookup("i_2x3_d3_universal")
    t = correlations(e.scenario, e.optimal_phases)
    assert np.allclose(t.alice_marginals()[:, :, :3], 1 / 3)


def test_zero_efficiency_never_clicks():
    e = lookup("chsh_d2")
    t = correlations(e.scenario, e.optimal_phases, eta=0.0)
    assert np.all(t.p[:, :, 2, 2] == 1)


def test_full_noise_is_uniform():
    e = lookup("chsh_d3")
    t = correlations(e.scenario, e.optimal_phases, noise=1.0)
    assert np.allclose(t.p[:, :, :3, :3], 1 / 9)
    assert np.allclose(t.p, uniform_table(e.scenario).p)


def test_noise_mix_is_linear():
    e = lookup("chsh_d2")
    t = ideal_correlations(e.scenario, e.optimal_phases)
    half = white_noise_mix(t, 0.5)
    assert np.allclose(half.p, 0.5 * t.p + 0.5 * uniform_table(e.scenario).p)


@pytest.mark.parametrize("eta,lam", [(-0.1, 1), (1.1, 1), (0.5, 0), (0.5, 1.5)])
def test_invalid_detection_model(eta, lam):
    with pytest.raises(ModelInvalid):
        DetectionModel(eta, lam)


def test_invalid_noise():
    e = lookup("chsh_d2")
    with pytest.raises(ModelInvalid):
        correlations(e.scenario, e.optimal_phases, noise=1.5)


def test_scenario_mismatch():
    ph = lookup("chsh_d2").optimal_phases
    with pytest.raises(ScenarioMismatch):
        ideal_correlations(Scenario(2, 3, 3), ph)


def test_phase_validation():
    with pytest.raises(ValueError):
        PhaseSettings([[0, 1]], [[0, 1, 2]])
    with pytest.raises(ValueError):
        PhaseSettings([[0]], [[0]])
    with pytest.raises(ValueError):
        PhaseSettings([[0, np.nan]], [[0, 1]])
