import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mesofluct import dynamics, models, thermal
from mesofluct.exceptions import (
    ContractViolationError,
    DegenerateRegimeError,
    NumericalInstabilityError,
    ParameterError,
)
from mesofluct.thermal import Ordering

SPECS = (
    models.ModelSpec.model1(1.0, 0.5, 1.0),
    models.ModelSpec.model1(0.8, -0.3, 1.5, 0.7),
    models.ModelSpec.model2(0.0),
    models.ModelSpec.model2(1.5),
)


def _tp(eps, eta=1.0):
    return thermal.thermal_params_from_epsilon(eps, eta)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 0.999), st.floats(-0.5, 0.5), st.floats(0.0, 8.0))
def test_closed_form_propagator_matches_numeric(eps, gamma, t):
    spec = models.ModelSpec.model1(1.0, gamma, 1.0)
    tp = _tp(eps)
    a = dynamics.propagator(spec, tp, t, method="numeric").E
    b = dynamics.propagator(spec, tp, t, method="closed_form").E
    assert np.max(np.abs(a - b)) <= 1e-10


@pytest.mark.parametrize("spec", SPECS)
def test_semigroup_property(spec):
    tp = _tp(0.6, spec.eta)
    E = [dynamics.propagator(spec, tp, t).E for t in (0.3, 0.9, 1.2)]
    assert np.allclose(E[0] @ E[1], E[2], atol=1e-12)
    assert np.allclose(dynamics.propagator(spec, tp, 0.0).E, np.eye(8), atol=1e-14)


@pytest.mark.parametrize("spec", SPECS)
def test_propagator_is_a_contraction(spec):
    tp = _tp(0.8, spec.eta)
    for t in (0.1, 1.0, 5.0, 30.0):
        assert np.linalg.norm(dynamics.propagator(spec, tp, t).E, 2) <= 1 + 1e-12


def test_batch_matches_single_time():
    spec, tp = SPECS[2], _tp(0.7)
    times = [0.0, 0.4, 2.5]
    batch = dynamics.propagator_batch(spec, tp, times)
    for k, t in enumerate(times):
        assert np.allclose(batch[k], dynamics.propagator(spec, tp, t).E, atol=1e-13)


@pytest.mark.parametrize("spec", SPECS)
def test_thermal_covariance_is_stationary(spec):
    tp = _tp(0.45, spec.eta)
    G0 = dynamics.squeezed_initial_covariance(tp, 0.0, 0.0)
    assert np.allclose(G0.G, np.eye(8) / (2 * 0.45))
    for t in (0.5, 3.0):
        G = dynamics.evolve_covariance(G0, dynamics.propagator(spec, tp, t), tp).G
        assert np.allclose(G, G0.G, atol=1e-12)


@pytest.mark.parametrize("spec", SPECS)
def test_weyl_and_tilde_routes_agree(spec):
    tp = _tp(0.75, spec.eta)
    sm = thermal.build_structural_matrices(tp)
    G0 = dynamics.squeezed_initial_covariance(tp, 0.6, 0.2)
    Gf = dynamics.covariance_tilde_to_f(G0.G, sm)
    assert np.allclose(dynamics.covariance_f_to_tilde(Gf, sm), G0.G, atol=1e-12)
    L = dynamics.generator_matrix(spec, tp)
    for t in (0.3, 2.0):
        a = dynamics.covariance_f_to_tilde(dynamics.evolve_f_covariance(Gf, L, sm.Sigma, t), sm)
        b = dynamics.evolve_covariance(G0, dynamics.propagator(spec, tp, t, sm), tp).G
        assert np.allclose(a, b, atol=1e-11)


def test_thermal_covariance_in_weyl_ordering_is_sigma():
    tp = _tp(0.3)
    sm = thermal.build_structural_matrices(tp)
    G_th = np.eye(8) / (2 * 0.3)
    assert np.allclose(dynamics.covariance_tilde_to_f(G_th, sm), sm.Sigma, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 0.99), st.floats(0.0, 20.0), st.sampled_from(range(len(SPECS))))
def test_damping_matrix_is_psd(eps, t, k):
    spec = SPECS[k]
    tp = _tp(eps, spec.eta)
    sm = thermal.build_structural_matrices(tp)
    Y = dynamics.damping_matrix(dynamics.generator_matrix(spec, tp), sm.Sigma, t)
    assert np.linalg.eigvalsh(Y).min() >= -1e-10


def test_weyl_damping_starts_at_zero_and_saturates():
    spec, tp = SPECS[0], _tp(0.5)
    sm = thermal.build_structural_matrices(tp)
    L = dynamics.generator_matrix(spec, tp)
    f = dynamics.max_weyl_damping(L, sm.Sigma, [0.0, 1.0, 100.0])
    assert f[0] == pytest.approx(0.0, abs=1e-15)
    # Sigma has eigenvalues 1 -+ eps, so lambda_max / 2 = (1 + eps) / 2.
    assert f[2] == pytest.approx(0.75, abs=1e-12)
    r = np.zeros(8)
    r[0] = 1.0
    assert -dynamics.scalar_exponent(r, L, sm, 1.0) <= f[1] + 1e-15


@settings(max_examples=20, deadline=None)
@given(st.floats(0.2, 0.99), st.floats(0.0, 2.0), st.floats(0.0, 2.0), st.floats(0.0, 15.0))
def test_evolved_states_stay_physical(eps, r1, r3, t):
    for spec in (SPECS[0], SPECS[2]):
        tp = _tp(eps)
        G = dynamics.reduced_trajectory(spec, tp, r1, r3, [t])[0]
        assert dynamics.check_physicality(G) >= -1e-9


def test_reduced_trajectory_matches_object_pipeline():
    spec, tp = SPECS[1], _tp(0.65, 0.7)
    times = [0.0, 0.7, 3.0]
    fast = dynamics.reduced_trajectory(spec, tp, 1.2, 0.4, times)
    G0 = dynamics.squeezed_initial_covariance(tp, 1.2, 0.4)
    for k, t in enumerate(times):
        state = dynamics.evolve_covariance(G0, dynamics.propagator(spec, tp, t), tp)
        assert np.allclose(fast[k], dynamics.reduce_modes_13(state), atol=1e-12)


def test_model1_relaxes_to_thermal_state():
    spec = models.ModelSpec.model1(1.0, 0.4, 1.0)
    tp = _tp(0.8)
    G = dynamics.reduced_trajectory(spec, tp, 1.0, 1.0, [50.0])[0]
    assert np.allclose(G, np.eye(4) / 1.6, atol=1e-12)
    assert dynamics.check_physicality(G) == pytest.approx(0.2 / 1.6, abs=1e-12)


def test_auto_method_switches_near_zero_temperature():
    tp = thermal.thermal_params_from_temperature(0.05)
    assert dynamics.resolve_method(SPECS[0], tp) == "closed_form"
    assert dynamics.resolve_method(SPECS[0], _tp(0.5)) == "numeric"
    with pytest.raises(DegenerateRegimeError):
        dynamics.resolve_method(SPECS[2], tp)
    with pytest.raises(ParameterError):
        dynamics.resolve_method(SPECS[2], _tp(0.5), "closed_form")
    with pytest.raises(ParameterError):
        dynamics.resolve_method(SPECS[0], _tp(0.5), "bogus")


def test_zero_temperature_trajectory_via_closed_form():
    tp = thermal.thermal_params_from_temperature(0.0)
    G = dynamics.reduced_trajectory(SPECS[0], tp, 1.0, 1.0, [0.0, 1.0])
    assert dynamics.check_physicality(G[1]) >= -1e-12
    # At eps = 1 the initial squeezed state is pure.
    assert dynamics.check_physicality(G[0]) == pytest.approx(0.0, abs=1e-12)


def test_contract_errors():
    tp = _tp(0.5)
    with pytest.raises(ContractViolationError):
        dynamics.CovarianceState(G=np.array([[1.0, 2.0], [0.0, 1.0]]))
    state = dynamics.CovarianceState(G=np.eye(8), ordering=Ordering.F)
    with pytest.raises(ContractViolationError):
        dynamics.evolve_covariance(state, dynamics.propagator(SPECS[0], tp, 1.0), tp)
    with pytest.raises(ContractViolationError):
        dynamics.reduce_modes_13(np.eye(6))
    with pytest.raises(ParameterError):
        dynamics.propagator(SPECS[0], tp, -1.0)


def test_unphysical_covariance_is_reported():
    tp = _tp(0.5)
    bad = dynamics.CovarianceState(G=0.1 * np.eye(8, dtype=complex))
    with pytest.raises(NumericalInstabilityError):
        dynamics.evolve_covariance(bad, dynamics.propagator(SPECS[0], tp, 0.0), tp)
