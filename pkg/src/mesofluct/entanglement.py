"""Entanglement between modes 1 and 3: Simon invariants, negativity, closed forms.

A two-mode Gaussian state with reduced covariance
``G_red = [[Sigma_1, Sigma_c], [Sigma_c^H, Sigma_2]]`` is separable iff the
Simon indicator ``S`` is non-negative. The logarithmic negativity ``E`` comes
from the smallest symplectic eigenvalue of the partial transpose. For
Model 1 the indicator is also known in closed form, which gives an oracle for
the whole numeric pipeline.
"""

import enum
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .dynamics import (
    check_physicality,
    evolve_covariance,
    propagator,
    reduce_modes_13,
    reduced_trajectory,
    squeezed_initial_covariance,
)
from .exceptions import (
    BracketError,
    InputError,
    NumericalInstabilityError,
    NumericContractError,
    ParameterError,
    PipelineDefectError,
)
from .models import ModelSpec
from .thermal import build_structural_matrices, thermal_params_from_temperature

RADICAND_RTOL = 1e-10
# A radicand within this multiple of its roundoff scale is treated as zero.
RADICAND_NOISE_FACTOR = 16.0
PHYSICALITY_TOL = 1e-8
#: Negativity values at or below this count as "no entanglement".
ENTANGLEMENT_TOL = 1e-12
PIPELINE_DEFECT_TOL = 1e-6
#: Resolution of the partial-transpose margin in units of ``eps_machine * g0``,
#: where ``g0`` is the largest entry of the initial reduced covariance.
MARGIN_NOISE_FACTOR = 64.0

_SZ = np.diag([1.0, -1.0])


class SqueezeVariant(str, enum.Enum):
    """Initial squeezing pattern: both modes (``r1 = r3 = r``) or mode 1 only."""

    SYMMETRIC = "symmetric"
    ONE_MODE = "one-mode"

    def squeezes(self, r):
        """``(r1, r3)`` for squeeze magnitude ``r``."""
        return (r, r) if self is SqueezeVariant.SYMMETRIC else (r, 0.0)


@dataclass(frozen=True)
class SimonInvariants:
    """Separability data of one reduced two-mode covariance.

    ``S < 0`` signals entanglement; ``script_I`` is the squared smallest
    symplectic eigenvalue of the partial transpose and
    ``E = max(0, -log2(4 script_I) / 2)``.
    """

    I1: float
    I2: float
    I3: float
    I4: float
    S: float
    script_I: float
    E: float

    @property
    def negativity_raw(self):
        """Unclipped ``-log2(4 script_I) / 2`` (negative for separable states)."""
        return -0.5 * math.log2(4.0 * self.script_I)


def _det2(A):
    return A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0]


def invariants_batch(G_red, enforce=None):
    """Vectorised Simon invariants for an array of reduced covariances.

    Args:
        G_red: Array of shape ``(..., 4, 4)``.
        enforce: Optional boolean mask of the samples on which the negativity
            contract is checked. Elsewhere an unresolvable negativity is
            returned as NaN. Defaults to checking every sample.

    Returns:
        dict with real arrays ``I1, I2, I3, I4, S, script_I, raw`` where
        ``raw`` is the unclipped negativity.

    Raises:
        NumericContractError: If, on an enforced sample, the square-root
            radicand is negative beyond roundoff or ``script_I`` is not
            positive.
    """
    G = np.asarray(G_red)
    s1 = G[..., :2, :2]
    s2 = G[..., 2:, 2:]
    sc = G[..., :2, 2:]
    sch = np.conj(np.swapaxes(sc, -1, -2))
    I1 = _det2(s1).real
    I2 = _det2(s2).real
    I3 = _det2(sc).real
    prod = s1 @ _SZ @ sc @ _SZ @ s2 @ _SZ @ sch @ _SZ
    I4 = np.trace(prod, axis1=-2, axis2=-1).real
    S = I1 * I2 + (0.25 - np.abs(I3)) ** 2 - I4 - 0.25 * (I1 + I2)
    a = 0.5 * (I1 + I2) - I3
    # LU determinant and the conjugate root form keep the small symplectic
    # eigenvalue accurate for strongly squeezed states.
    det_g = np.linalg.det(G).real
    rad = a * a - det_g
    # With degenerate symplectic eigenvalues the radicand is pure roundoff and
    # its square root would add an O(sqrt(eps)) error, so snap it to zero. The
    # LU determinant carries an error of order eps * max|G|**4.
    g_max = np.max(np.abs(G), axis=(-2, -1))
    rad_floor = RADICAND_NOISE_FACTOR * np.finfo(float).eps * np.maximum(a * a, g_max**4)
    with np.errstate(invalid="ignore", divide="ignore"):
        script_I = det_g / (a + np.sqrt(np.where(rad > rad_floor, rad, 0.0)))
    bad_rad = rad < -RADICAND_RTOL * np.maximum(1.0, a * a)
    bad_I = ~(script_I > 0)
    check = np.ones(np.shape(a), dtype=bool) if enforce is None else np.asarray(enforce, dtype=bool)
    if np.any(bad_rad & check):
        worst = float(np.min(rad[bad_rad & check]))
        raise NumericContractError(f"negative radicand {worst:.3e} in the negativity formula")
    if np.any(bad_I & check):
        raise NumericContractError("non-positive symplectic eigenvalue in the negativity formula")
    with np.errstate(invalid="ignore", divide="ignore"):
        raw = np.where(bad_rad | bad_I, np.nan, -0.5 * np.log2(np.where(bad_I, 1.0, 4.0 * script_I)))
    return dict(I1=I1, I2=I2, I3=I3, I4=I4, S=S, script_I=script_I, raw=raw)


def simon_invariants(G_red):
    """Simon invariants, indicator ``S`` and log-negativity of a 4x4 covariance.

    Args:
        G_red: Hermitian 4x4 matrix ordered ``(a1, a1^dag, a3, a3^dag)``.

    Raises:
        NumericalInstabilityError: If ``G_red`` is unphysical beyond 1e-8.
        NumericContractError: See :func:`invariants_batch`.
    """
    G = np.asarray(G_red)
    if G.shape != (4, 4):
        raise InputError(f"expected a 4x4 reduced covariance, got shape {G.shape}")
    lam = check_physicality(G)
    if lam < -PHYSICALITY_TOL:
        raise NumericalInstabilityError(f"reduced covariance is unphysical (min eig {lam:.3e})")
    inv = invariants_batch(G)
    return SimonInvariants(
        I1=float(inv["I1"]),
        I2=float(inv["I2"]),
        I3=float(inv["I3"]),
        I4=float(inv["I4"]),
        S=float(inv["S"]),
        script_I=float(inv["script_I"]),
        E=max(0.0, float(inv["raw"])),
    )


def partial_transpose(G_red):
    """Partial transpose on mode 1 (swap ``a1 <-> a1^dag``) of a reduced covariance."""
    perm = [1, 0, 2, 3]
    G = np.asarray(G_red)
    return G[..., perm, :][..., :, perm]


# ---------------------------------------------------------------------------
# Closed forms (Model 1)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClosedFormContext:
    """Parameters of the Model 1 closed-form separability indicator.

    Attributes:
        tp: Thermal parameters (``0 < eps <= 1``).
        delta, gamma, J0: Model 1 dissipation parameters.
        r: Squeeze magnitude.
        variant: :class:`SqueezeVariant`.
    """

    tp: object
    delta: float
    gamma: float
    J0: float
    r: float
    variant: SqueezeVariant = SqueezeVariant.SYMMETRIC

    def __post_init__(self):
        object.__setattr__(self, "variant", SqueezeVariant(self.variant))
        if not 0.0 < self.tp.epsilon <= 1.0:
            raise ParameterError("closed forms need 0 < epsilon <= 1")

    @classmethod
    def from_spec(cls, spec, tp, r, variant=SqueezeVariant.SYMMETRIC):
        """Build from a Model 1 :class:`~mesofluct.models.ModelSpec`."""
        if spec.variant != 1:
            raise ParameterError("closed-form indicators exist only for Model 1")
        return cls(tp=tp, delta=spec.delta, gamma=spec.gamma, J0=spec.J0, r=r, variant=variant)

    @property
    def spec(self):
        """Equivalent Model 1 :class:`~mesofluct.models.ModelSpec`."""
        return ModelSpec.model1(self.delta, self.gamma, self.J0, self.tp.eta)


def y_functions(ctx, t):
    """``(y1, y2, y3, y_eps)`` building blocks of the closed forms."""
    t = np.asarray(t, dtype=float)
    decay = 0.5 * np.exp(-2.0 * ctx.J0 * ctx.delta * t)
    arg = 2.0 * ctx.J0 * ctx.gamma * t
    y1 = decay * (np.cosh(arg) + 1.0)
    y2 = decay * (np.cosh(arg) - 1.0)
    y3 = decay * np.sinh(arg)
    eps = ctx.tp.epsilon
    return y1, y2, y3, y1 / eps + eps * y2


def thermal_indicator(eps):
    """``S`` of the pure thermal state, ``(1 - eps^2)^2 / (16 eps^4)``."""
    return (1.0 - eps * eps) ** 2 / (16.0 * eps**4)


def _closed_form_terms(ctx, t):
    eps = ctx.tp.epsilon
    y1, y2, y3, ye = y_functions(ctx, t)
    sh2 = np.sinh(ctx.r) ** 2
    base = (eps * eps - 1.0) ** 2 / (16.0 * eps**4)
    if ctx.variant is SqueezeVariant.SYMMETRIC:
        q = ye / eps - ye * ye
        second = (0.5 / eps**2 - 0.5) * q - 2.0 * (1.0 + 1.0 / eps**2) * y3 * y3
        fourth = (q + 4.0 * y3 * y3) ** 2 - 4.0 * y3 * y3 / eps**2
        value = base + sh2 * second + sh2 * sh2 * fourth
        scale = base + sh2 * np.abs(second) + sh2 * sh2 * (q + 4.0 * y3 * y3) ** 2
    else:
        bracket = (0.25 / eps**2 - 0.25) * ((y1 - y1 * y1) / eps**2 + y2 - eps**2 * y2 * y2)
        tail = y3 * y3 * (0.5 + 0.5 / eps**2)
        value = base + sh2 * (bracket - tail)
        scale = base + sh2 * (np.abs(bracket) + tail)
    return value, scale


def closed_form_S(ctx, t):
    """Closed-form Simon indicator for Model 1 (scalar or array ``t``)."""
    out, _ = _closed_form_terms(ctx, t)
    return out if np.ndim(out) else float(out)


def closed_form_S_scale(ctx, t):
    """Magnitude of the largest terms summed in :func:`closed_form_S`.

    Roundoff in the closed form is a small multiple of ``1e-16`` times this
    scale, which decays in time along with the terms themselves.
    """
    _, scale = _closed_form_terms(ctx, t)
    return scale if np.ndim(scale) else float(scale)


def symmetric_S_zero_temperature(r, gamma, t):
    """Zero-temperature symmetric indicator in units ``delta = J0 = 1``.

    ``sinh^4 r (e^{-8t} - 2 e^{-6t} cosh 2gt + e^{-4t}) - e^{-4t} sinh^2(2gt) sinh^2 r``.
    """
    t = np.asarray(t, dtype=float)
    sh2 = np.sinh(r) ** 2
    g2t = 2.0 * gamma * t
    out = sh2 * sh2 * (np.exp(-8 * t) - 2 * np.exp(-6 * t) * np.cosh(g2t) + np.exp(-4 * t))
    out = out - np.exp(-4 * t) * np.sinh(g2t) ** 2 * sh2
    return out if np.ndim(out) else float(out)


def symmetric_S_zero_temperature_curvature(r, gamma):
    """``d^2/dt^2`` of :func:`symmetric_S_zero_temperature` at ``t = 0``.

    ``8 [sinh^4 r (1 - gamma^2) - sinh^2 r gamma^2]``.
    """
    sh2 = math.sinh(r) ** 2
    return 8.0 * (sh2 * sh2 * (1.0 - gamma * gamma) - sh2 * gamma * gamma)


def sudden_birth_condition_T0(r, gamma):
    """Whether the symmetric zero-temperature state is entangled right after ``t = 0``.

    True iff ``sinh^2 r < gamma^2 / (1 - gamma^2)``.
    """
    if abs(gamma) >= 1:
        raise ParameterError(f"|gamma| must be < 1, got {gamma!r}")
    return math.sinh(r) ** 2 < gamma * gamma / (1.0 - gamma * gamma)


def second_derivative_check_T0(r, gamma, h=1e-4):
    """Compare the analytic curvature of the zero-temperature indicator with finite differences.

    The indicator is even in ``t`` to second order only through its Taylor
    series, so the central difference uses the analytic extension of the
    formula to ``t = -h``.

    Returns:
        dict with keys ``analytic`` and ``numeric``.
    """
    f = symmetric_S_zero_temperature
    numeric = (f(r, gamma, h) - 2.0 * f(r, gamma, 0.0) + f(r, gamma, -h)) / (h * h)
    return dict(analytic=symmetric_S_zero_temperature_curvature(r, gamma), numeric=float(numeric))


# ---------------------------------------------------------------------------
# Trajectories
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EntanglementTrajectory:
    """Time series of the separability data of modes 1 and 3."""

    times: np.ndarray = field(repr=False)
    E: np.ndarray = field(repr=False)
    S: np.ndarray = field(repr=False)
    I1: np.ndarray = field(repr=False)
    I2: np.ndarray = field(repr=False)
    I3: np.ndarray = field(repr=False)
    I4: np.ndarray = field(repr=False)
    script_I: np.ndarray = field(repr=False)
    negativity_raw: np.ndarray = field(repr=False)
    lambda_min: np.ndarray = field(repr=False)
    pt_margin: np.ndarray = field(repr=False, default=None)
    margin_noise: float = 0.0


def _initial_scale(tp, r1, r3):
    """Largest entry of the initial reduced covariance."""
    return math.cosh(2.0 * max(r1, r3)) / (2.0 * tp.epsilon)


def margin_noise(tp, r1, r3):
    """Expected absolute error of the partial-transpose margin."""
    return MARGIN_NOISE_FACTOR * np.finfo(float).eps * _initial_scale(tp, r1, r3)


def pt_margin_batch(G_red):
    """Smallest eigenvalue of ``PT(G) + diag(1, -1, 1, -1) / 2``.

    It is negative exactly when the partially transposed state is unphysical,
    i.e. when the two modes are entangled, so it carries the same sign
    information as ``-S`` and the unclipped negativity. Being a Hermitian
    eigenvalue it is accurate to ``eps_machine * max|G|`` in absolute terms,
    while ``S`` cancels terms as large as ``max|G|**4``.
    """
    shift = 0.5 * np.diag([1.0, -1.0, 1.0, -1.0])
    return np.linalg.eigvalsh(partial_transpose(G_red) + shift)[..., 0]


def entanglement_trajectory(spec, tp, r1, r3, times, method="auto", sm=None):
    """Evaluate the separability data of modes 1 and 3 on a time grid.

    Raises:
        NumericalInstabilityError: If any reduced covariance is unphysical, or
            if the squeezing is so large that roundoff in the covariance
            exceeds the largest possible entanglement margin.
    """
    t = np.atleast_1d(np.asarray(times, dtype=float))
    mu_noise = margin_noise(tp, r1, r3)
    # The margin of a physical state is above -1/2, so past this point no
    # entangled sample can be told apart from roundoff.
    if mu_noise >= 0.5:
        raise NumericalInstabilityError(
            f"squeezing too large for double precision (margin noise {mu_noise:.3e})"
        )
    G = reduced_trajectory(spec, tp, r1, r3, t, method=method, sm=sm)
    shift = 0.5 * np.diag([1.0, -1.0, 1.0, -1.0])
    lam = np.linalg.eigvalsh(G + shift[None])[:, 0]
    if np.any(lam < -PHYSICALITY_TOL):
        raise NumericalInstabilityError(
            f"reduced covariance lost physicality (min eig {float(np.min(lam)):.3e})"
        )
    mu = pt_margin_batch(G)
    entangled = mu < -mu_noise
    # The negativity contract is enforced where the well-conditioned margin
    # resolves entanglement; elsewhere E is 0 by definition.
    inv = invariants_batch(G, enforce=entangled)
    E = np.where(entangled, np.maximum(np.nan_to_num(inv["raw"], nan=0.0), 0.0), 0.0)
    return EntanglementTrajectory(
        times=t,
        E=E,
        S=inv["S"],
        I1=inv["I1"],
        I2=inv["I2"],
        I3=inv["I3"],
        I4=inv["I4"],
        script_I=inv["script_I"],
        negativity_raw=inv["raw"],
        lambda_min=lam,
        pt_margin=mu,
        margin_noise=mu_noise,
    )


def indicator_function(spec, tp, r1, r3, method="auto"):
    """Callable ``t -> S(t)`` from the numeric pipeline (scalar ``t``)."""

    def S_of_t(t):
        return float(entanglement_trajectory(spec, tp, r1, r3, [t], method=method).S[0])

    return S_of_t


def margin_function(spec, tp, r1, r3, method="auto"):
    """Callable ``t -> pt_margin(t)``, negative exactly where ``S(t)`` is.

    Bisecting this margin instead of ``S`` keeps the refinement reliable for
    squeezing levels at which ``S`` has lost its sign to roundoff.
    """

    def margin(t):
        G = reduced_trajectory(spec, tp, r1, r3, [t], method=method)
        return float(pt_margin_batch(G)[0])

    return margin


def numeric_vs_closed_form(ctx, t_grid):
    """Largest ``|S_numeric - S_closed|`` over a time grid for Model 1.

    The numeric side runs the full chain squeezed state -> exponentiated
    generator -> evolved covariance -> reduction -> Simon invariants.

    Raises:
        PipelineDefectError: If the disagreement exceeds 1e-6.
    """
    tp = ctx.tp
    tp.require_numeric("numeric_vs_closed_form")
    spec = ctx.spec
    r1, r3 = ctx.variant.squeezes(ctx.r)
    sm = build_structural_matrices(tp)
    traj = entanglement_trajectory(spec, tp, r1, r3, t_grid, method="numeric", sm=sm)
    diff = float(np.max(np.abs(traj.S - closed_form_S(ctx, traj.times))))
    if diff > PIPELINE_DEFECT_TOL:
        raise PipelineDefectError(f"numeric and closed-form indicators differ by {diff:.3e}")
    return diff


def pointwise_pipeline_S(spec, tp, r1, r3, t, sm=None):
    """Indicator at one time through the non-vectorised object pipeline."""
    G0 = squeezed_initial_covariance(tp, r1, r3)
    state = evolve_covariance(G0, propagator(spec, tp, t, sm=sm, method="numeric"), tp)
    return simon_invariants(reduce_modes_13(state)).S


# ---------------------------------------------------------------------------
# Birth/death detection and maximisation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BirthDeath:
    """Entanglement onset and extinction times (``None`` when absent)."""

    t_birth: object = None
    t_death: object = None


def _bisect_sign(S_func, lo, hi, tol):
    s_lo = S_func(lo) < 0
    s_hi = S_func(hi) < 0
    if s_lo == s_hi:
        return 0.5 * (lo + hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if (S_func(mid) < 0) == s_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def detect_birth_death(times, E, S_func=None, refine_tol=1e-6):
    """Locate the first onset and last extinction of entanglement.

    Args:
        times: Strictly increasing grid with at least 64 points.
        E: Log-negativity sampled on ``times``.
        S_func: Optional callable that is negative exactly when the state is
            entangled, such as :func:`margin_function` or
            :func:`indicator_function`. When given, each crossing is refined
            by bisection on its sign down to ``refine_tol``;
            otherwise the grid midpoint of the crossing interval is returned.
        refine_tol: Target bracket width of the refinement.

    Returns:
        :class:`BirthDeath`. ``t_birth`` equals ``times[0]`` if the state is
        already entangled at the first sample. ``t_death`` is ``None`` when the
        state is still entangled at the last sample.
    """
    t = np.asarray(times, dtype=float)
    e = np.asarray(E, dtype=float)
    if t.ndim != 1 or t.shape != e.shape:
        raise InputError("times and E must be 1-D arrays of equal length")
    if t.size < 64:
        raise InputError(f"need at least 64 samples, got {t.size}")
    if np.any(np.diff(t) <= 0):
        raise InputError("time grid must be strictly increasing")
    pos = e > ENTANGLEMENT_TOL
    if not np.any(pos):
        return BirthDeath()
    idx = np.flatnonzero(pos)
    first, last = int(idx[0]), int(idx[-1])

    def refine(lo, hi):
        if S_func is None:
            return 0.5 * (lo + hi)
        return _bisect_sign(S_func, lo, hi, refine_tol)

    t_birth = float(t[0]) if first == 0 else refine(t[first - 1], t[first])
    t_death = None if last == t.size - 1 else refine(t[last], t[last + 1])
    return BirthDeath(t_birth=t_birth, t_death=t_death)


def time_grid(t_max, n=512, t_min=1e-3):
    """Union of ``{0}``, ``n`` log-spaced and ``n`` linear points up to ``t_max``."""
    if not t_max > t_min:
        raise ParameterError(f"t_max must exceed {t_min}, got {t_max!r}")
    log_part = np.logspace(np.log10(t_min), np.log10(t_max), n)
    lin_part = np.linspace(0.0, t_max, n)
    return np.unique(np.concatenate([[0.0], log_part, lin_part]))


@dataclass(frozen=True)
class PeakEntanglement:
    """Largest negativity over a time window."""

    max_E: float
    t_peak: float
    negativity_raw: float


def max_entanglement(spec, tp, r1, r3, t_max=None, n_grid=512, method="auto"):
    """Maximise the log-negativity over ``[0, t_max]``.

    The unclipped negativity is scanned on ``{0}`` plus ``n_grid`` log-spaced
    points in ``[1e-3, t_max]`` and the best point is polished with a bounded
    scalar minimiser on its neighbouring interval. Working with the unclipped
    value keeps the objective smooth across the separability boundary. Only
    samples whose partial-transpose margin is resolved below zero count as
    entangled, which rejects roundoff-level negativity at large squeezing.
    """
    if t_max is None:
        t_max = 20.0 if spec.variant == 1 else 50.0
    grid = np.concatenate([[0.0], np.logspace(-3, np.log10(t_max), n_grid)])
    sm = build_structural_matrices(tp) if tp.numeric_ok else None
    traj = entanglement_trajectory(spec, tp, r1, r3, grid, method=method, sm=sm)
    raw = traj.negativity_raw
    resolved = traj.pt_margin < -traj.margin_noise
    if not np.any(resolved):
        k = int(np.argmax(np.nan_to_num(raw, nan=-np.inf)))
        return PeakEntanglement(max_E=0.0, t_peak=float(grid[k]), negativity_raw=float(raw[k]))
    k = int(np.argmax(np.where(resolved, raw, -np.inf)))
    best_t, best = float(grid[k]), float(raw[k])
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    if hi > lo:

        def objective(tt):
            return -float(
                entanglement_trajectory(spec, tp, r1, r3, [tt], method=method, sm=sm).negativity_raw[0]
            )

        res = minimize_scalar(objective, bounds=(lo, hi), method="bounded", options={"xatol": 1e-9})
        if res.success and -res.fun > best:
            best_t, best = float(res.x), float(-res.fun)
    max_E = best if best > ENTANGLEMENT_TOL else 0.0
    return PeakEntanglement(max_E=max_E, t_peak=best_t, negativity_raw=best)


def critical_temperature(spec, r, variant, T_bracket, t_max=None, tol_T=1e-4, n_grid=512):
    """Temperature above which no entanglement is generated within ``t_max``.

    Args:
        spec: Model specification (its ``eta`` sets the temperature scale).
        r: Squeeze magnitude.
        variant: :class:`SqueezeVariant` or its string value.
        T_bracket: ``(T_lo, T_hi)`` with entanglement at ``T_lo`` and none at ``T_hi``.
        t_max: Time horizon of the inner maximisation.
        tol_T: Bisection stops when the bracket is narrower than this.

    Raises:
        BracketError: If the bracket does not straddle the transition.
    """
    variant = SqueezeVariant(variant)
    r1, r3 = variant.squeezes(r)
    T_lo, T_hi = (float(x) for x in T_bracket)
    if not 0 < T_lo < T_hi:
        raise BracketError(f"need 0 < T_lo < T_hi, got ({T_lo}, {T_hi})")

    def entangled(T):
        tp = thermal_params_from_temperature(T, spec.eta)
        return max_entanglement(spec, tp, r1, r3, t_max=t_max, n_grid=n_grid).max_E > 0

    ind_lo, ind_hi = entangled(T_lo), entangled(T_hi)
    if not ind_lo or ind_hi:
        raise BracketError(
            f"invalid bracket: entangled(T_lo={T_lo})={ind_lo}, entangled(T_hi={T_hi})={ind_hi}; "
            "expected True at T_lo and False at T_hi"
        )
    return _bisect_temperature(entangled, T_lo, T_hi, tol_T)


def _bisect_temperature(entangled, T_lo, T_hi, tol_T):
    while T_hi - T_lo > tol_T:
        mid = 0.5 * (T_lo + T_hi)
        if entangled(mid):
            T_lo = mid
        else:
            T_hi = mid
    return 0.5 * (T_lo + T_hi)


def min_closed_form_S(ctx, t_max=20.0, n_grid=512, rel_floor=1e-13):
    """Most negative closed-form indicator over ``[0, t_max]``, relative to its scale.

    Returns ``min_t S(t) / scale(t)`` where ``scale`` is
    :func:`closed_form_S_scale`; values above ``-rel_floor`` are reported as
    0 because their sign is not resolved in double precision.
    """
    grid = np.concatenate([[0.0], np.logspace(-3, np.log10(t_max), n_grid)])

    def ratio(tt):
        v, sc = _closed_form_terms(ctx, tt)
        # All terms vanish together only at a pure product state (t = 0, eps = 1).
        return np.divide(v, sc, out=np.zeros_like(sc), where=sc > 0)

    vals = ratio(grid)
    k = int(np.argmin(vals))
    best = float(vals[k])
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    if hi > lo:
        res = minimize_scalar(lambda tt: float(ratio(tt)), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-10})
        if res.success:
            best = min(best, float(res.fun))
    return best if best < -rel_floor else 0.0


def closed_form_critical_temperature(spec, r, variant, T_bracket, t_max=20.0, tol_T=1e-4,
                                     n_grid=512):
    """Model 1 critical temperature from the closed-form indicator.

    Same bisection as :func:`critical_temperature`, but entanglement is
    decided by ``min_t S(t) < 0`` with ``S`` from :func:`closed_form_S`.
    The closed form stays accurate for squeezing far beyond the range where
    the covariance route keeps enough significant digits (roughly ``r > 5``),
    which makes it the tool for large-``r`` asymptotics.
    """
    if spec.variant != 1:
        raise ParameterError("closed-form critical temperature exists only for Model 1")
    variant = SqueezeVariant(variant)
    T_lo, T_hi = (float(x) for x in T_bracket)
    if not 0 < T_lo < T_hi:
        raise BracketError(f"need 0 < T_lo < T_hi, got ({T_lo}, {T_hi})")
    def entangled(T):
        tp = thermal_params_from_temperature(T, spec.eta)
        ctx = ClosedFormContext.from_spec(spec, tp, r, variant)
        return min_closed_form_S(ctx, t_max, n_grid) < 0

    ind_lo, ind_hi = entangled(T_lo), entangled(T_hi)
    if not ind_lo or ind_hi:
        raise BracketError(
            f"invalid bracket: entangled(T_lo={T_lo})={ind_lo}, entangled(T_hi={T_hi})={ind_hi}; "
            "expected True at T_lo and False at T_hi"
        )
    return _bisect_temperature(entangled, T_lo, T_hi, tol_T)


# ---------------------------------------------------------------------------
# Parameter sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepTask:
    """One point of a parameter sweep."""

    spec: ModelSpec
    r: float
    T: float
    variant: SqueezeVariant
    t_max: float
    n_grid: int = 512
    refine_tol: float = 1e-6


@dataclass(frozen=True)
class SweepResult:
    """Outcome of a :class:`SweepTask`."""

    task: SweepTask
    max_E: float
    t_birth: object
    t_death: object

    @property
    def entangled(self):
        return self.max_E > 0


def evaluate_sweep_task(task):
    """Peak negativity plus birth/death times for one sweep point."""
    spec = task.spec
    tp = thermal_params_from_temperature(task.T, spec.eta)
    r1, r3 = SqueezeVariant(task.variant).squeezes(task.r)
    peak = max_entanglement(spec, tp, r1, r3, t_max=task.t_max, n_grid=task.n_grid)
    grid = time_grid(task.t_max, task.n_grid)
    traj = entanglement_trajectory(spec, tp, r1, r3, grid)
    bd = detect_birth_death(
        grid, traj.E, margin_function(spec, tp, r1, r3), refine_tol=task.refine_tol
    )
    return SweepResult(task=task, max_E=peak.max_E, t_birth=bd.t_birth, t_death=bd.t_death)


def worker_count(n_tasks):
    """Number of sweep workers, capped by the ``MESOFLUCT_THREADS`` variable."""
    n = os.cpu_count() or 1
    env = os.environ.get("MESOFLUCT_THREADS")
    if env:
        try:
            cap = int(env)
        except ValueError as exc:
            raise ParameterError(f"MESOFLUCT_THREADS must be an integer, got {env!r}") from exc
        if cap < 1:
            raise ParameterError(f"MESOFLUCT_THREADS must be >= 1, got {cap}")
        n = min(n, cap)
    return max(1, min(n, n_tasks))


def run_sweep(tasks, workers=None):
    """Evaluate sweep tasks, in parallel when more than one worker is allowed.

    Results are returned in task order regardless of completion order, so
    the output does not depend on scheduling.
    """
    tasks = list(tasks)
    if not tasks:
        return []
    workers = worker_count(len(tasks)) if workers is None else max(1, int(workers))
    if workers == 1:
        return [evaluate_sweep_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(evaluate_sweep_task, tasks))
