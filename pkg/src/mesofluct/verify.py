"""Self-verification suite behind ``mesofluct verify``.

Each check compares two independently computed quantities, or tests a
structural property, and reports the worst residual against its tolerance.
Checks resolve library functions through their modules at call time, so a
test can monkeypatch e.g. :func:`mesofluct.models.closed_form_L` and watch
the matching check fail.
"""

from dataclasses import dataclass

import numpy as np

from . import dynamics, entanglement, linalg, models, thermal

EPS_GRID = (0.2, 0.5, 0.9)
EPS_GRID_WIDE = (0.1, 0.3, 0.5, 0.7, 0.9, 0.99)


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one named check."""

    name: str
    passed: bool
    residual: float
    tolerance: float
    detail: str = ""

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        text = f"{status} {self.name}  residual={self.residual:.3e}  tol={self.tolerance:.1e}"
        return f"{text}  {self.detail}" if self.detail else text


_REGISTRY = []


def check(name, tol, fast=True):
    """Register a check returning its residual (or ``(residual, detail)``)."""

    def wrap(fn):
        _REGISTRY.append((name, tol, fast, fn))
        return fn

    return wrap


def _tp(eps):
    return thermal.thermal_params_from_epsilon(eps)


def _sm(eps):
    return thermal.build_structural_matrices(_tp(eps))


def _model1(gamma=0.5, delta=1.0, J0=1.0, eta=1.0):
    return models.ModelSpec.model1(delta, gamma, J0, eta)


def _specs():
    return (_model1(0.5), _model1(-0.3, 0.8, 1.3), models.ModelSpec.model2(0.0),
            models.ModelSpec.model2(0.7))


def _kron_C(eps):
    s1 = np.array([[0, 1], [1, 0]])
    s2 = np.array([[0, -1j], [1j, 0]])
    return np.kron(np.eye(2) - eps * s1, np.kron(np.eye(2), np.eye(2) + eps * s2))


# -- structural matrices ------------------------------------------------------


@check("structural.C_equals_Sigma_plus_half_i_sigma", 1e-15)
def _c_decomposition(ctx):
    return max(
        float(np.max(np.abs(sm.C - (sm.Sigma + 0.5j * sm.sigma))))
        for sm in map(_sm, EPS_GRID_WIDE)
    )


@check("structural.sigma_antisymmetric", 0.0)
def _sigma_antisym(ctx):
    return max(float(np.max(np.abs(sm.sigma + sm.sigma.T))) for sm in map(_sm, EPS_GRID_WIDE))


@check("structural.kronecker_forms", 1e-14)
def _kron_forms(ctx):
    worst = 0.0
    for eps in EPS_GRID_WIDE:
        sm = _sm(eps)
        worst = max(worst, float(np.max(np.abs(sm.C - _kron_C(eps)))))
    return worst


@check("structural.mode_map_inverse", 1e-12)
def _mode_inverse(ctx):
    return max(float(np.max(np.abs(sm.M @ sm.M_inv - np.eye(8)))) for sm in map(_sm, EPS_GRID_WIDE))


@check("structural.permutation_orthogonal", 1e-12)
def _perm(ctx):
    sm = _sm(0.5)
    return float(np.max(np.abs(sm.P @ sm.P.T - np.eye(8))))


@check("structural.symplectic_inverse", 1e-12)
def _sig_inv(ctx):
    return max(
        float(np.max(np.abs(sm.sigma @ sm.sigma_inv - np.eye(8)))) for sm in map(_sm, EPS_GRID_WIDE)
    )


@check("structural.state_positivity", 1e-12)
def _state_pos(ctx):
    return max(
        max(0.0, -linalg.min_eigenvalue(sm.Sigma - 0.5j * sm.sigma)) for sm in map(_sm, EPS_GRID_WIDE)
    )


@check("structural.commutator_consistency", 1e-12)
def _commutators(ctx):
    worst = 0.0
    for eps in EPS_GRID_WIDE:
        sm = _sm(eps)
        f = sm.mode_vectors()
        gram = f.conj() @ f.T
        worst = max(worst, float(np.max(np.abs(2.0 * gram.imag - sm.sigma))))
    return worst


@check("thermal.characteristic_function_routes", 1e-12)
def _char_routes(ctx):
    rng = np.random.default_rng(ctx["seed"])
    worst = 0.0
    for eps in (0.3, 0.6, 0.9):
        tp = _tp(eps)
        sm = thermal.build_structural_matrices(tp)
        for _ in range(100 // 3 + 1):
            r = rng.normal(size=8)
            a = thermal.thermal_char_function(r, tp, sm, via="covariance")
            b = thermal.thermal_char_function(r, tp, sm, via="modes")
            worst = max(worst, abs(a - b))
    return worst


@check("thermal.weyl_displacement_roundtrip", 1e-12)
def _roundtrip(ctx):
    rng = np.random.default_rng(ctx["seed"] + 1)
    sm = _sm(0.7)
    worst = 0.0
    for _ in range(20):
        r = rng.normal(size=8)
        worst = max(worst, float(np.max(np.abs(thermal.displacement_to_weyl(
            thermal.weyl_to_displacement(r, sm), sm) - r))))
    return worst


# -- site algebra ---------------------------------------------------------------


@check("site.operator_invariants", 1e-14)
def _site_invariants(ctx):
    worst = 0.0
    for eps in EPS_GRID_WIDE:
        tp = _tp(eps)
        ops = models.build_site_operators(tp, _model1())
        rho = ops.rho_beta
        for x in ops.x:
            worst = max(worst, abs(np.trace(x)), abs(np.trace(rho @ x)),
                        float(np.max(np.abs(x - x.conj().T))))
        s3 = np.kron(models.PAULI_3, models.ID2)
        worst = max(worst, abs(np.trace(rho) - 1), abs(np.trace(rho @ s3) + eps),
                    abs(np.trace(rho @ np.kron(models.PAULI_3, models.PAULI_3)) - eps**2))
    return worst


@check("site.correlation_matrix", 1e-13)
def _corr(ctx):
    return max(
        models.correlation_matrix_check(models.build_site_operators(_tp(e), _model1()), _tp(e))
        for e in (0.0,) + EPS_GRID_WIDE
    )


def _oracle_residual(variant):
    worst = 0.0
    for eps in EPS_GRID:
        tp = _tp(eps)
        for spec in _specs():
            if spec.variant != variant:
                continue
            ops = models.build_site_operators(tp, spec)
            L = models.derive_L_matrix(ops, spec, tp)
            worst = max(worst, float(np.max(np.abs(L - models.closed_form_L(spec, eps)))))
    return worst


@check("model1.oracle_L", 1e-12)
def _oracle1(ctx):
    return _oracle_residual(1)


@check("model2.oracle_L", 1e-12)
def _oracle2(ctx):
    return _oracle_residual(2)


def _span_residual(variant):
    worst = 0.0
    for eps in EPS_GRID:
        for spec in _specs():
            if spec.variant == variant:
                ops = models.build_site_operators(_tp(eps), spec)
                worst = max(worst, models.projection_residual(ops, spec))
    return worst


@check("model1.span_stability", 1e-12)
def _span1(ctx):
    return _span_residual(1)


@check("model2.span_stability", 1e-12)
def _span2(ctx):
    return _span_residual(2)


def _invariance(variant):
    worst = 0.0
    for eps in EPS_GRID_WIDE + (1.0,):
        for spec in _specs():
            if spec.variant == variant:
                ops = models.build_site_operators(_tp(eps), spec)
                worst = max(worst, models.thermal_invariance_residual(ops, spec))
    return worst


@check("model1.thermal_invariance", 1e-13)
def _inv1(ctx):
    return _invariance(1)


@check("model2.thermal_invariance", 1e-13)
def _inv2(ctx):
    return _invariance(2)


@check("kossakowski.microscopic_psd", 1e-12)
def _micro_psd(ctx):
    worst = 0.0
    for eps in EPS_GRID_WIDE + (1.0,):
        for spec in _specs() + (_model1(0.0), _model1(-0.5)):
            D = models.microscopic_kossakowski(spec, _tp(eps))
            worst = max(worst, -linalg.min_eigenvalue(D))
    return max(worst, 0.0)


# -- mesoscopic generator ------------------------------------------------------


def _mesoscopic(spec, eps):
    tp = thermal.thermal_params_from_epsilon(eps, spec.eta)
    sm = thermal.build_structural_matrices(tp)
    L = models.derive_L_matrix(models.build_site_operators(tp, spec), spec, tp)
    return tp, models.mesoscopic_generator_matrices(L, sm)


@check("model1.mesoscopic_closed_forms", 1e-12)
def _meso1(ctx):
    worst = 0.0
    for eps in EPS_GRID:
        for spec in (_model1(0.5), _model1(-0.3, 0.8, 1.3, 0.7)):
            tp, g = _mesoscopic(spec, eps)
            worst = max(worst,
                        float(np.max(np.abs(g.H1 - models.closed_form_H1(tp)))),
                        float(np.max(np.abs(g.H2 - models.closed_form_H2(tp)))),
                        float(np.max(np.abs(g.K_beta - models.closed_form_K(spec, tp)))))
    return worst


@check("model2.mesoscopic_closed_forms", 1e-12)
def _meso2(ctx):
    worst = 0.0
    for eps in EPS_GRID:
        for spec in (models.ModelSpec.model2(0.0), models.ModelSpec.model2(0.7, 1.2)):
            tp, g = _mesoscopic(spec, eps)
            worst = max(worst,
                        float(np.max(np.abs(g.D2 - models.closed_form_D2(spec, tp)))),
                        float(np.max(np.abs(g.K_beta - models.closed_form_K(spec, tp)))))
    return worst


@check("mesoscopic.kossakowski_psd", 1e-10)
def _meso_psd(ctx):
    worst = 0.0
    for eps in EPS_GRID_WIDE:
        for spec in _specs() + (_model1(0.0), _model1(-0.5)):
            _, g = _mesoscopic(spec, eps)
            worst = max(worst, -linalg.min_eigenvalue(g.D1), -linalg.min_eigenvalue(g.K_beta))
    return max(worst, 0.0)


@check("model1.mode_eigenvalues", 1e-12)
def _modes(ctx):
    spec = _model1(0.0, 0.8, 1.3, 0.7)
    tp = thermal.thermal_params_from_epsilon(0.6, spec.eta)
    sm = thermal.build_structural_matrices(tp)
    A = models.mode_basis_generator(models.closed_form_L(spec, tp.epsilon), sm)
    lam = -(1j * spec.eta + spec.J0 * spec.delta)
    expected = np.diag([lam] * 4 + [lam.conjugate()] * 4)
    return float(np.max(np.abs(A - expected)))


# -- dynamics -------------------------------------------------------------------


@check("propagator.closed_form_vs_numeric", 1e-10)
def _prop(ctx):
    worst = 0.0
    ts = np.linspace(0.0, 5.0, 16)
    for eps in (0.5, 0.8, 0.9, 0.99):
        tp = _tp(eps)
        sm = thermal.build_structural_matrices(tp)
        for g in (0.1, 0.3, 0.5):
            spec = _model1(g)
            a = dynamics.propagator_batch(spec, tp, ts, sm=sm, method="numeric")
            b = dynamics.closed_form_propagator(spec, tp, ts)
            worst = max(worst, float(np.max(np.abs(a - b))))
    return worst


@check("propagator.semigroup_and_contraction", 1e-10)
def _semigroup(ctx):
    worst = 0.0
    tp = _tp(0.7)
    sm = thermal.build_structural_matrices(tp)
    for spec in _specs():
        Es = dynamics.propagator(spec, tp, 0.4, sm).E
        Et = dynamics.propagator(spec, tp, 1.1, sm).E
        Est = dynamics.propagator(spec, tp, 1.5, sm).E
        worst = max(worst, float(np.max(np.abs(Es @ Et - Est))))
        for t in (0.0, 0.3, 2.0, 10.0):
            worst = max(worst, np.linalg.norm(dynamics.propagator(spec, tp, t, sm).E, 2) - 1.0)
    return max(worst, 0.0)


@check("dynamics.thermal_stationarity", 1e-12)
def _stationary(ctx):
    worst = 0.0
    for eps in EPS_GRID:
        tp = _tp(eps)
        sm = thermal.build_structural_matrices(tp)
        G0 = dynamics.squeezed_initial_covariance(tp, 0.0, 0.0)
        for spec in _specs():
            for t in (0.1, 1.0, 10.0):
                G = dynamics.evolve_covariance(G0, dynamics.propagator(spec, tp, t, sm), tp).G
                worst = max(worst, float(np.max(np.abs(G - G0.G))))
    return worst


@check("dynamics.weyl_vs_tilde_evolution", 1e-10)
def _f_vs_tilde(ctx):
    worst = 0.0
    tp = _tp(0.75)
    sm = thermal.build_structural_matrices(tp)
    G0 = dynamics.squeezed_initial_covariance(tp, 0.8, 0.3)
    Gf = dynamics.covariance_tilde_to_f(G0.G, sm)
    for spec in _specs():
        L = dynamics.generator_matrix(spec, tp)
        for t in (0.2, 1.5):
            a = dynamics.covariance_f_to_tilde(dynamics.evolve_f_covariance(Gf, L, sm.Sigma, t), sm)
            b = dynamics.evolve_covariance(G0, dynamics.propagator(spec, tp, t, sm), tp).G
            worst = max(worst, float(np.max(np.abs(a - b))))
    return worst


@check("dynamics.damping_matrix_psd", 1e-10)
def _damping(ctx):
    worst = 0.0
    for eps in (0.3, 0.9):
        tp = _tp(eps)
        sm = thermal.build_structural_matrices(tp)
        for spec in _specs():
            L = dynamics.generator_matrix(spec, tp)
            for t in np.linspace(0.0, 20.0, 21):
                worst = max(worst, -linalg.min_eigenvalue(dynamics.damping_matrix(L, sm.Sigma, t)))
    return max(worst, 0.0)


@check("dynamics.physicality_along_trajectories", 1e-9)
def _physical(ctx):
    worst = 0.0
    ts = np.linspace(0.0, 20.0, 41)
    for eps in (0.5, 0.9):
        tp = _tp(eps)
        sm = thermal.build_structural_matrices(tp)
        for spec in _specs():
            G0 = dynamics.squeezed_initial_covariance(tp, 1.0, 0.5)
            for t in ts:
                E = dynamics.propagator(spec, tp, t, sm).E
                G = E.conj().T @ G0.G @ E + (np.eye(8) - E.conj().T @ E) / (2 * eps)
                worst = max(worst, -dynamics.physicality_margin(G))
    return max(worst, 0.0)


# -- entanglement ----------------------------------------------------------------


@check("closed_form.indicator_agreement", 1e-9)
def _cf_agreement(ctx):
    worst = 0.0
    if ctx["fast"]:
        grid = [(0.9, 0.5, 1.0)]
    else:
        grid = [(e, g, r) for e in (0.5, 0.8, 0.9, 0.99) for g in (0.1, 0.3, 0.5)
                for r in (0.5, 1.0, 2.0)]
    ts = np.linspace(0.0, 5.0, 64)
    for eps, g, r in grid:
        for variant in entanglement.SqueezeVariant:
            c = entanglement.ClosedFormContext(_tp(eps), 1.0, g, 1.0, r, variant)
            worst = max(worst, entanglement.numeric_vs_closed_form(c, ts))
    return worst, f"{len(grid) * 2} parameter sets"


@check("closed_form.small_time_limit", 1e-10)
def _small_t(ctx):
    worst = 0.0
    for eps in (0.3, 0.5, 0.8, 0.95):
        tp = _tp(eps)
        for variant in entanglement.SqueezeVariant:
            r1, r3 = variant.squeezes(1.0)
            traj = entanglement.entanglement_trajectory(_model1(0.5), tp, r1, r3, [0.0])
            worst = max(worst, abs(traj.S[0] - entanglement.thermal_indicator(eps)))
    return worst


@check("asymptotics.model1_thermalisation", 1e-8)
def _asym1(ctx):
    worst = 0.0
    for eps in (0.5, 0.8, 0.95):
        tp = _tp(eps)
        spec = _model1(0.5)
        t_star = 50.0 / spec.decay_rate
        G = dynamics.reduced_trajectory(spec, tp, 1.0, 1.0, [t_star])[0]
        worst = max(worst, float(np.max(np.abs(G - np.eye(4) / (2 * eps)))),
                    abs(dynamics.check_physicality(G) - (1 - eps) / (2 * eps)))
    return worst


@check("asymptotics.model2_thermalisation", 1e-8)
def _asym2(ctx):
    worst = 0.0
    for eps in (0.3, 0.5):
        tp = _tp(eps)
        for spec in (models.ModelSpec.model2(0.0), models.ModelSpec.model2(1.0)):
            G = dynamics.reduced_trajectory(spec, tp, 1.0, 1.0, [50.0])[0]
            worst = max(worst, float(np.max(np.abs(G - np.eye(4) / (2 * eps)))))
    return worst


@check("zero_temperature.curvature_at_origin", 1e-4)
def _curvature(ctx):
    worst = 0.0
    for r in (0.5, 1.0, 2.0):
        for g in (0.1, 0.3, 0.5):
            d = entanglement.second_derivative_check_T0(r, g)
            worst = max(worst, abs(d["numeric"] - d["analytic"]) / abs(d["analytic"]))
    return worst, "relative"


@check("zero_temperature.closed_forms_agree", 1e-12)
def _t0_forms(ctx):
    worst = 0.0
    ts = np.linspace(0.0, 5.0, 51)
    tp = thermal.thermal_params(np.inf)
    for r in (0.5, 1.0, 2.0):
        for g in (0.1, 0.3, 0.5):
            c = entanglement.ClosedFormContext(tp, 1.0, g, 1.0, r, "symmetric")
            a = entanglement.closed_form_S(c, ts)
            b = entanglement.symmetric_S_zero_temperature(r, g, ts)
            worst = max(worst, float(np.max(np.abs(a - b) / (1 + np.abs(b)))))
    return worst


@check("zero_temperature.sudden_birth_boundary", 0.0)
def _birth_boundary(ctx):
    mismatches = 0
    ts = np.linspace(1e-4, 1e-2, 100)
    for g in (0.2, 0.35, 0.5):
        r_b = np.arcsinh(np.sqrt(g * g / (1 - g * g)))
        for r in (0.5 * r_b, 0.8 * r_b, 1.2 * r_b, 2.0 * r_b):
            early = bool(np.any(entanglement.symmetric_S_zero_temperature(r, g, ts) < 0))
            if early != entanglement.sudden_birth_condition_T0(r, g):
                mismatches += 1
    return float(mismatches), "mismatching (r, gamma) points"


@check("entanglement.two_mode_squeezed_vacuum", 1e-12)
def _tmsv(ctx):
    worst = 0.0
    for r in (0.3, 1.0, 1.7):
        G = np.zeros((4, 4), dtype=complex)
        G[:2, :2] = G[2:, 2:] = 0.5 * np.cosh(2 * r) * np.eye(2)
        G[:2, 2:] = G[2:, :2] = -0.5 * np.sinh(2 * r) * np.array([[0, 1], [1, 0]])
        worst = max(worst, abs(entanglement.simon_invariants(G).E - 2 * r / np.log(2)))
    return worst


@check("entanglement.criterion_coherence", 0.0)
def _coherence(ctx):
    bad = 0
    ts = np.linspace(0.0, 20.0, 401)
    for T in (0.1, 0.2):
        tp = thermal.thermal_params_from_temperature(T)
        for spec in (_model1(0.5), models.ModelSpec.model2(0.0)):
            traj = entanglement.entanglement_trajectory(spec, tp, 1.0, 1.0, ts)
            band = np.abs(traj.S) > 1e-12
            bad += int(np.sum(((traj.S < 0) != (traj.E > 0)) & band))
    return float(bad), "disagreeing samples"


# -- qualitative figure behaviour (full suite only) ---------------------------


def _peak(spec, T, r1, r3, t_max=None):
    tp = thermal.thermal_params_from_temperature(T)
    return entanglement.max_entanglement(spec, tp, r1, r3, t_max=t_max).max_E


@check("figures.peak_grows_with_gamma", 0.0, fast=False)
def _fig_gamma(ctx):
    vals = [_peak(_model1(g), 0.1, 1.0, 1.0) for g in (0.1, 0.2, 0.3, 0.4, 0.5)]
    return float(np.sum(np.diff(vals) < 0)), "decreasing steps"


@check("figures.peak_falls_with_temperature", 0.0, fast=False)
def _fig_temp(ctx):
    vals = [_peak(_model1(0.5), T, 1.0, 1.0) for T in (0.05, 0.1, 0.2, 0.4)]
    return float(np.sum(np.diff(vals) > 0)), "increasing steps"


@check("figures.interior_optimal_squeezing", 0.0, fast=False)
def _fig_r(ctx):
    vals = [_peak(_model1(0.5), 0.1, r, r) for r in (0.25, 0.5, 1.0, 2.0, 4.0)]
    k = int(np.argmax(vals))
    return float(k in (0, len(vals) - 1)), f"argmax index {k}"


@check("figures.critical_temperature_trends", 0.0, fast=False)
def _fig_tc(ctx):
    spec = _model1(0.5)
    sym = [entanglement.closed_form_critical_temperature(spec, r, "symmetric", (0.005, 1.0))
           for r in (1.0, 2.0, 4.0, 8.0, 12.0)]
    one = [entanglement.closed_form_critical_temperature(spec, r, "one-mode", (0.005, 1.0))
           for r in (4.0, 6.0, 8.0, 12.0)]
    failures = int(np.sum(np.diff(sym) >= 0)) + int(sym[-1] >= sym[0] / 3)
    failures += int(max(one) - min(one) > 1e-3) + int(min(one) <= 0.25)
    return float(failures), f"symmetric {np.round(sym, 4).tolist()} one-mode {np.round(one, 4).tolist()}"


@check("figures.model2_persistence", 0.0, fast=False)
def _fig_m2(ctx):
    spec = models.ModelSpec.model2(0.0)
    failures = 0
    near_zero = thermal.thermal_params_from_epsilon(1 - 1e-6)
    if entanglement.entanglement_trajectory(spec, near_zero, 1.0, 1.0, [50.0]).E[0] <= 0:
        failures += 1
    grid = entanglement.time_grid(200.0)
    for T in (0.2, 0.3):
        tp = thermal.thermal_params_from_temperature(T)
        traj = entanglement.entanglement_trajectory(spec, tp, 1.0, 1.0, grid)
        if entanglement.detect_birth_death(grid, traj.E).t_death is None:
            failures += 1
    return float(failures)


def registered_checks(fast=False):
    """Names of the checks that :func:`run_checks` would execute."""
    return [name for name, _, is_fast, _ in _REGISTRY if is_fast or not fast]


def run_checks(fast=False, seed=0):
    """Run the suite and return a list of :class:`CheckResult`.

    Exceptions inside a check are reported as failures rather than raised.
    """
    ctx = {"fast": fast, "seed": int(seed)}
    results = []
    for name, tol, is_fast, fn in _REGISTRY:
        if fast and not is_fast:
            continue
        try:
            out = fn(ctx)
            residual, detail = out if isinstance(out, tuple) else (out, "")
            residual = float(residual)
            passed = bool(np.isfinite(residual) and residual <= tol)
        except Exception as exc:  # noqa: BLE001 - a crashing check is a failed check
            residual, detail, passed = float("nan"), f"{type(exc).__name__}: {exc}", False
        results.append(CheckResult(name, passed, residual, tol, detail))
    return results
