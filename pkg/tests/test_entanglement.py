import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mesofluct import dynamics, entanglement, models, thermal
from mesofluct.entanglement import ClosedFormContext, SqueezeVariant
from mesofluct.exceptions import BracketError, InputError, ParameterError

SPEC = models.ModelSpec.model1(1.0, 0.5, 1.0)
X = np.array([[0.0, 1.0], [1.0, 0.0]])


def two_mode_squeezed_thermal(r, eps):
    """Reduced covariance of a two-mode squeezed thermal state."""
    G = np.zeros((4, 4), dtype=complex)
    G[:2, :2] = G[2:, 2:] = np.cosh(2 * r) * np.eye(2)
    G[:2, 2:] = G[2:, :2] = -np.sinh(2 * r) * X
    return G / (2 * eps)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 3.0), st.floats(0.05, 1.0))
def test_negativity_of_two_mode_squeezed_thermal_state(r, eps):
    inv = entanglement.simon_invariants(two_mode_squeezed_thermal(r, eps))
    expected = max(0.0, (2 * r + math.log(eps)) / math.log(2))
    assert inv.E == pytest.approx(expected, abs=1e-10)
    assert (inv.S < -1e-12) <= (inv.E > 0)


def test_two_mode_squeezed_vacuum_exact():
    for r in (0.1, 0.5, 1.0, 2.0):
        inv = entanglement.simon_invariants(two_mode_squeezed_thermal(r, 1.0))
        assert inv.E == pytest.approx(2 * r / math.log(2), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 2.5), st.floats(0.0, 2.5), st.floats(0.1, 0.99))
def test_mixed_product_states_are_separable(r1, r3, eps):
    tp = thermal.thermal_params_from_epsilon(eps)
    G = dynamics.reduce_modes_13(dynamics.squeezed_initial_covariance(tp, r1, r3))
    inv = entanglement.simon_invariants(G)
    assert inv.E == 0.0
    assert inv.S == pytest.approx((1 - eps**2) ** 2 / (16 * eps**4), rel=1e-9, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 2.5), st.floats(0.0, 2.5))
def test_pure_product_states_are_separable(r1, r3):
    # At eps = 1 the state sits on the boundary nu = 1/2, so only the gated
    # verdict is exact; the raw negativity is roundoff of order eps * max|G|^4.
    tp = thermal.thermal_params_from_epsilon(1.0)
    G = dynamics.reduce_modes_13(dynamics.squeezed_initial_covariance(tp, r1, r3))
    assert entanglement.pt_margin_batch(G) >= -entanglement.margin_noise(tp, r1, r3)
    inv = entanglement.simon_invariants(G)
    assert inv.E <= 64 * np.finfo(float).eps * np.max(np.abs(G)) ** 4
    assert abs(inv.S) <= 1e-12


def test_partial_transpose_swaps_first_mode():
    G = np.arange(16.0).reshape(4, 4)
    pt = entanglement.partial_transpose(G)
    assert np.array_equal(pt[:2, :2], G[[1, 0]][:, [1, 0]])
    assert np.array_equal(pt[2:, 2:], G[2:, 2:])


@settings(max_examples=30, deadline=None)
@given(st.floats(0.3, 0.99), st.floats(0.0, 0.5), st.floats(0.1, 2.5), st.sampled_from(["symmetric", "one-mode"]))
def test_separability_criteria_agree_along_trajectories(eps, gamma, r, variant):
    spec = models.ModelSpec.model1(1.0, gamma, 1.0)
    tp = thermal.thermal_params_from_epsilon(eps)
    r1, r3 = SqueezeVariant(variant).squeezes(r)
    traj = entanglement.entanglement_trajectory(spec, tp, r1, r3, np.linspace(0, 10, 101))
    resolved = np.abs(traj.S) > 1e-10
    assert np.all(((traj.S < 0) == (traj.E > 0))[resolved])
    assert np.all(((traj.pt_margin < 0) == (traj.S < 0))[resolved])


def test_closed_form_S_frozen_values():
    ctx = ClosedFormContext(thermal.thermal_params_from_epsilon(0.8), 1.0, 0.3, 1.0, 1.0, "symmetric")
    S = entanglement.closed_form_S(ctx, np.array([0.5, 1.0, 2.0]))
    assert np.allclose(S, [0.3806368, 0.15097587, 0.03829144], rtol=1e-6)


@pytest.mark.parametrize("variant", list(SqueezeVariant))
def test_closed_form_matches_pipeline(variant):
    ctx = ClosedFormContext(thermal.thermal_params_from_epsilon(0.9), 1.0, 0.4, 1.3, 0.8, variant)
    assert entanglement.numeric_vs_closed_form(ctx, np.linspace(0, 6, 50)) <= 1e-9


def test_closed_form_at_zero_temperature_matches_symmetric_formula():
    ctx = ClosedFormContext(thermal.thermal_params(math.inf), 1.0, 0.3, 1.0, 1.2, "symmetric")
    t = np.linspace(0, 4, 41)
    assert np.allclose(entanglement.closed_form_S(ctx, t),
                       entanglement.symmetric_S_zero_temperature(1.2, 0.3, t), atol=1e-12)


@pytest.mark.parametrize("r,gamma", [(0.5, 0.1), (1.0, 0.3), (2.0, 0.5)])
def test_zero_temperature_curvature(r, gamma):
    d = entanglement.second_derivative_check_T0(r, gamma)
    sh2 = math.sinh(r) ** 2
    assert d["analytic"] == pytest.approx(8 * (sh2**2 * (1 - gamma**2) - sh2 * gamma**2))
    assert d["numeric"] == pytest.approx(d["analytic"], rel=1e-4)


def test_sudden_birth_condition():
    gamma = 0.4
    r_b = math.asinh(math.sqrt(gamma**2 / (1 - gamma**2)))
    assert entanglement.sudden_birth_condition_T0(0.9 * r_b, gamma)
    assert not entanglement.sudden_birth_condition_T0(1.1 * r_b, gamma)


def test_peak_and_birth_death_regression():
    tp = thermal.thermal_params_from_temperature(0.1)
    peak = entanglement.max_entanglement(SPEC, tp, 1.0, 1.0)
    assert peak.max_E == pytest.approx(0.1068989, abs=1e-6)
    assert peak.t_peak == pytest.approx(1.3777, abs=1e-3)
    grid = entanglement.time_grid(20.0)
    traj = entanglement.entanglement_trajectory(SPEC, tp, 1.0, 1.0, grid)
    bd_S = entanglement.detect_birth_death(grid, traj.E, entanglement.indicator_function(SPEC, tp, 1.0, 1.0))
    bd_mu = entanglement.detect_birth_death(grid, traj.E, entanglement.margin_function(SPEC, tp, 1.0, 1.0))
    assert bd_S.t_birth == pytest.approx(0.731227, abs=1e-5)
    assert bd_S.t_death == pytest.approx(8.468292, abs=1e-5)
    assert bd_mu.t_birth == pytest.approx(bd_S.t_birth, abs=2e-6)
    assert bd_mu.t_death == pytest.approx(bd_S.t_death, abs=2e-6)


def test_unsqueezed_state_never_entangles():
    tp = thermal.thermal_params_from_temperature(0.1)
    traj = entanglement.entanglement_trajectory(SPEC, tp, 0.0, 0.0, np.linspace(0, 20, 201))
    assert np.all(traj.E == 0.0)
    assert entanglement.max_entanglement(SPEC, tp, 0.0, 0.0).max_E == 0.0


def test_detect_birth_death_on_synthetic_signal():
    t = np.linspace(0, 10, 1001)
    E = np.maximum(0.0, -(t - 2.0) * (t - 6.0))
    bd = entanglement.detect_birth_death(t, E, lambda s: (s - 2.0) * (s - 6.0), refine_tol=1e-9)
    assert bd.t_birth == pytest.approx(2.0, abs=1e-8)
    assert bd.t_death == pytest.approx(6.0, abs=1e-8)
    still_on = entanglement.detect_birth_death(t, np.where(t > 3, 1.0, 0.0))
    assert still_on.t_death is None
    assert entanglement.detect_birth_death(t, np.zeros_like(t)) == entanglement.BirthDeath()


def test_detect_birth_death_input_checks():
    with pytest.raises(InputError):
        entanglement.detect_birth_death(np.linspace(0, 1, 10), np.zeros(10))
    t = np.linspace(0, 1, 100)
    t[50] = t[49]
    with pytest.raises(InputError):
        entanglement.detect_birth_death(t, np.zeros(100))


def test_time_grid_is_increasing_and_covers_range():
    g = entanglement.time_grid(50.0, n=128)
    assert g[0] == 0.0 and g[-1] == pytest.approx(50.0)
    assert np.all(np.diff(g) > 0)
    with pytest.raises(ParameterError):
        entanglement.time_grid(0.0)


def test_critical_temperature_frozen_values():
    tc_sym = entanglement.closed_form_critical_temperature(SPEC, 1.0, "symmetric", (0.005, 1.0))
    tc_one = entanglement.closed_form_critical_temperature(SPEC, 4.0, "one-mode", (0.005, 1.0))
    assert tc_sym == pytest.approx(0.2858, abs=2e-4)
    assert tc_one == pytest.approx(0.2950, abs=2e-4)
    tc_pipe = entanglement.critical_temperature(SPEC, 1.0, "symmetric", (0.005, 1.0), n_grid=256)
    assert tc_pipe == pytest.approx(tc_sym, abs=3e-4)


def test_critical_temperature_bracket_errors():
    with pytest.raises(BracketError):
        entanglement.critical_temperature(SPEC, 1.0, "symmetric", (0.5, 1.0), n_grid=128)
    with pytest.raises(BracketError):
        entanglement.closed_form_critical_temperature(SPEC, 1.0, "symmetric", (0.3, 0.1))
    with pytest.raises(ParameterError):
        entanglement.closed_form_critical_temperature(models.ModelSpec.model2(), 1.0, "symmetric",
                                                      (0.01, 1.0))


def test_large_squeezing_pipeline_agrees_with_closed_form_verdict():
    # The partial-transpose margin keeps the verdict reliable where S itself is noise.
    for r in (6.0, 8.0):
        tc = entanglement.closed_form_critical_temperature(SPEC, r, "symmetric", (0.005, 1.0))
        below = entanglement.SweepTask(SPEC, r, 0.97 * tc, SqueezeVariant.SYMMETRIC, 20.0, 256)
        above = entanglement.SweepTask(SPEC, r, 1.03 * tc, SqueezeVariant.SYMMETRIC, 20.0, 256)
        assert entanglement.evaluate_sweep_task(below).entangled
        assert not entanglement.evaluate_sweep_task(above).entangled


def test_run_sweep_is_order_preserving_and_parallel_safe():
    tasks = [entanglement.SweepTask(SPEC, r, T, SqueezeVariant.ONE_MODE, 10.0, 128)
             for r in (0.5, 1.5) for T in (0.1, 0.4)]
    serial = entanglement.run_sweep(tasks, workers=1)
    parallel = entanglement.run_sweep(tasks, workers=2)
    assert [res.task for res in serial] == tasks
    assert serial == parallel
    assert entanglement.run_sweep([]) == []


def test_worker_count_respects_environment(monkeypatch):
    monkeypatch.setenv("MESOFLUCT_THREADS", "1")
    assert entanglement.worker_count(100) == 1
    monkeypatch.setenv("MESOFLUCT_THREADS", "zero")
    with pytest.raises(ParameterError):
        entanglement.worker_count(4)
    monkeypatch.delenv("MESOFLUCT_THREADS")
    assert 1 <= entanglement.worker_count(3) <= 3


def test_squeeze_variants():
    assert SqueezeVariant("symmetric").squeezes(0.7) == (0.7, 0.7)
    assert SqueezeVariant("one-mode").squeezes(0.7) == (0.7, 0.0)
