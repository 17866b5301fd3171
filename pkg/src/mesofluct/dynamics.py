"""Gaussian covariance dynamics of the four emergent bosonic modes.

The mesoscopic semigroup is quasi-free: a Weyl operator ``W(r)`` evolves into
``exp(f_r(t)) W(exp(t L^T) r)``. For zero-mean Gaussian states this means the
covariance matrix evolves by a congruence plus an inhomogeneous term, so a
whole trajectory follows from matrix exponentials of the 8x8 generator. No
ODE integration is involved.

The canonical representation is the tilde ordering
``(a_1, a_1^dag, a_2, a_2^dag, a_3, a_3^dag, a_4, a_4^dag)``. In it the thermal
state has covariance ``I / (2 eps)`` and the propagator is
``E_t = P^T Sigma3 M^H exp(t L^T) (M^H)^-1 Sigma3 P``.
"""

import functools
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ContractViolationError, NumericalInstabilityError, ParameterError
from .linalg import hermitian_eigenvalues, is_hermitian, mat_exp, mat_exp_batch
from .models import build_site_operators, derive_L_matrix
from .thermal import EPS_NUMERIC_MAX, SIGMA3, Ordering, build_structural_matrices

PHYSICALITY_TOL = 1e-8

#: Tilde-ordered positions of ``a_1, a_1^dag, a_3, a_3^dag``.
REDUCED_INDEX = np.array([0, 1, 4, 5])


def tilde_symplectic(n_modes):
    """Tilde-ordered symplectic form ``-i blockdiag(sigma_3, ..., sigma_3)``."""
    return -1j * np.kron(np.eye(n_modes), np.diag([1.0, -1.0]))


def _physicality_shift(n_modes):
    # (i/2) * tilde_symplectic = blockdiag(sigma_3) / 2, a real diagonal matrix.
    return 0.5 * np.kron(np.eye(n_modes), np.diag([1.0, -1.0]))


@dataclass(frozen=True)
class CovarianceState:
    """Hermitian covariance matrix of a zero-mean Gaussian state.

    Attributes:
        G: Covariance matrix, 8x8 in tilde ordering by default.
        ordering: :class:`~mesofluct.thermal.Ordering` tag of ``G``.
        time: Time at which the state is evaluated.
    """

    G: np.ndarray = field(repr=False)
    ordering: Ordering = Ordering.TILDE
    time: float = 0.0

    def __post_init__(self):
        G = np.asarray(self.G)
        if G.ndim != 2 or G.shape[0] != G.shape[1]:
            raise ContractViolationError(f"covariance must be square, got shape {G.shape}")
        if not is_hermitian(G):
            raise ContractViolationError("covariance matrix is not Hermitian")


@dataclass(frozen=True)
class Propagator:
    """Tilde-ordered one-particle propagator ``E_t`` at time ``t``.

    Attributes:
        E: 8x8 complex matrix.
        t: Time.
        model: Model variant (1 or 2) it was built for.
        method: ``"numeric"`` or ``"closed_form"``.
    """

    E: np.ndarray = field(repr=False)
    t: float
    model: int
    method: str = "numeric"


def squeezing_block(r):
    """4x4 block with ``cosh 2r, -sinh 2r`` in the upper 2x2 and identity below."""
    ch, sh = np.cosh(2.0 * r), np.sinh(2.0 * r)
    S = np.eye(4)
    S[0, 0] = S[1, 1] = ch
    S[0, 1] = S[1, 0] = -sh
    return S


def squeezed_initial_covariance(tp, r1, r3):
    """Thermal state with mode 1 squeezed by ``r1`` and mode 3 by ``r3``.

    ``G = blockdiag(S(r1), S(r3)) / (2 eps)``. Works up to and including
    ``eps = 1``.
    """
    eps = tp.epsilon
    if not 0.0 < eps <= 1.0:
        raise ParameterError(f"squeezed state needs 0 < epsilon <= 1, got {eps!r}")
    z = np.zeros((4, 4))
    G = np.block([[squeezing_block(r1), z], [z, squeezing_block(r3)]]) / (2.0 * eps)
    return CovarianceState(G=G.astype(complex), ordering=Ordering.TILDE, time=0.0)


@functools.lru_cache(maxsize=256)
def generator_matrix(spec, tp):
    """Generator ``L`` for ``spec`` at ``tp``, derived from site algebra (cached)."""
    ops = build_site_operators(tp, spec)
    L = derive_L_matrix(ops, spec, tp)
    L.setflags(write=False)
    return L


def resolve_method(spec, tp, method="auto"):
    """Pick the propagator route.

    ``"auto"`` uses the exponential of the generator whenever the temperature
    allows it and falls back to the Model 1 closed form near zero
    temperature.
    """
    if method not in ("auto", "numeric", "closed_form"):
        raise ParameterError(f"unknown propagator method {method!r}")
    if method == "auto":
        if tp.epsilon <= EPS_NUMERIC_MAX:
            return "numeric"
        if spec.variant == 1:
            return "closed_form"
        tp.require_numeric("Model 2 propagator")
    if method == "closed_form" and spec.variant != 1:
        raise ParameterError("the closed-form propagator exists only for Model 1")
    if method == "numeric":
        tp.require_numeric("numeric propagator")
    return method


def _conversion(sm):
    left = sm.P.T @ SIGMA3 @ sm.M.conj().T
    right = sm.M_inv.conj().T @ SIGMA3 @ sm.P
    return left, right


def closed_form_propagator(spec, tp, times):
    """Model 1 propagator from hyperbolic functions, for an array of times.

    ``E_t = exp(-delta J0 t) B(t) (x) diag(exp(i eta t), exp(-i eta t))`` where
    the 4x4 ``B`` holds ``cosh(J0 gamma t)`` on the diagonal and
    ``eps sinh``/``c sinh`` couplings between the two chains.

    Returns:
        ndarray of shape ``(len(times), 8, 8)``.
    """
    if spec.variant != 1:
        raise ParameterError("the closed-form propagator exists only for Model 1")
    t = np.atleast_1d(np.asarray(times, dtype=float))
    eps, c = tp.epsilon, tp.c
    ch = np.cosh(spec.J0 * spec.gamma * t)
    sh = np.sinh(spec.J0 * spec.gamma * t)
    B = np.zeros((t.size, 4, 4))
    B[:, 0, 0] = B[:, 1, 1] = B[:, 2, 2] = B[:, 3, 3] = ch
    B[:, 0, 2] = B[:, 2, 0] = -eps * sh
    B[:, 0, 3] = B[:, 3, 0] = c * sh
    B[:, 1, 2] = B[:, 2, 1] = c * sh
    B[:, 1, 3] = B[:, 3, 1] = eps * sh
    phase = np.exp(1j * spec.eta * t)
    E = np.zeros((t.size, 8, 8), dtype=complex)
    E[:, 0::2, 0::2] = B * phase[:, None, None]
    E[:, 1::2, 1::2] = B * phase.conj()[:, None, None]
    return E * np.exp(-spec.delta * spec.J0 * t)[:, None, None]


def propagator_batch(spec, tp, times, sm=None, method="auto"):
    """Propagators ``E_t`` for every entry of ``times``.

    Args:
        spec: :class:`~mesofluct.models.ModelSpec`.
        tp: Thermal parameters.
        times: 1-D array of non-negative times.
        sm: Structural matrices (built on demand).
        method: ``"auto"``, ``"numeric"`` or ``"closed_form"``.

    Returns:
        ndarray of shape ``(len(times), 8, 8)``.
    """
    t = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(t < 0):
        raise ParameterError("propagator times must be non-negative")
    method = resolve_method(spec, tp, method)
    if method == "closed_form":
        return closed_form_propagator(spec, tp, t)
    if sm is None:
        sm = build_structural_matrices(tp)
    L = generator_matrix(spec, tp)
    left, right = _conversion(sm)
    return left @ mat_exp_batch(L.T, t) @ right


def propagator(spec, tp, t, sm=None, method="numeric"):
    """Single-time :class:`Propagator`.

    The numeric route exponentiates the generator; the closed-form route
    (Model 1 only) evaluates hyperbolic functions. The two agree to about
    1e-15 wherever both are defined.
    """
    if t < 0:
        raise ParameterError(f"t must be non-negative, got {t!r}")
    method = resolve_method(spec, tp, method)
    if method == "closed_form":
        E = closed_form_propagator(spec, tp, [t])[0]
    else:
        if sm is None:
            sm = build_structural_matrices(tp)
        left, right = _conversion(sm)
        E = left @ mat_exp(generator_matrix(spec, tp).T, t) @ right
    return Propagator(E=E, t=float(t), model=spec.variant, method=method)


def physicality_margin(G):
    """Smallest eigenvalue of ``G + (i/2) sigma_tilde`` for any tilde-ordered size."""
    G = np.asarray(G)
    n = G.shape[0] // 2
    return float(hermitian_eigenvalues(G + _physicality_shift(n))[0])


def evolve_covariance(G0, prop, tp):
    """Evolve a tilde-ordered covariance by a propagator.

    ``G(t) = E^H G0 E + (I - E^H E) / (2 eps)``.

    Raises:
        ContractViolationError: If ``G0`` is not tilde ordered.
        NumericalInstabilityError: If the result is unphysical beyond 1e-8.
    """
    if G0.ordering is not Ordering.TILDE:
        raise ContractViolationError(f"expected tilde ordering, got {G0.ordering}")
    E = prop.E
    Eh = E.conj().T
    G = Eh @ G0.G @ E + (np.eye(8) - Eh @ E) / (2.0 * tp.epsilon)
    G = 0.5 * (G + G.conj().T)
    lam = physicality_margin(G)
    if lam < -PHYSICALITY_TOL:
        raise NumericalInstabilityError(f"evolved covariance is unphysical (min eig {lam:.3e})")
    return CovarianceState(G=G, ordering=Ordering.TILDE, time=G0.time + prop.t)


def damping_matrix(L, Sigma, t):
    """``Y_t = Sigma - exp(tL) Sigma exp(tL^T)``, PSD for a valid semigroup."""
    et = mat_exp(L, t)
    Y = Sigma - et @ Sigma @ et.T
    return 0.5 * (Y + Y.T)


def scalar_exponent(r, L, sm, t):
    """Log-prefactor ``f_r(t) = -(r, Y_t r) / 2`` of an evolved Weyl operator."""
    r = np.asarray(r, dtype=float)
    return float(-0.5 * r @ damping_matrix(L, sm.Sigma, t) @ r)


def max_weyl_damping(L, Sigma, times):
    """``max_{|r|=1} -f_r(t) = lambda_max(Y_t) / 2`` for each time.

    This is the largest damping exponent any unit Weyl vector can suffer and
    is reported as ``f_deficit`` by the command line tools.
    """
    t = np.atleast_1d(np.asarray(times, dtype=float))
    et = mat_exp_batch(L, t)
    Y = Sigma[None] - et @ Sigma[None] @ np.swapaxes(et, 1, 2)
    Y = 0.5 * (Y + np.swapaxes(Y, 1, 2))
    return 0.5 * np.linalg.eigvalsh(Y)[:, -1]


def reduce_modes_13(state):
    """Reduced 4x4 covariance of modes 1 and 3, ordered ``(a1, a1^dag, a3, a3^dag)``.

    Accepts a :class:`CovarianceState` (which must be tilde ordered) or a
    raw tilde-ordered 8x8 array.
    """
    if isinstance(state, CovarianceState):
        if state.ordering is not Ordering.TILDE:
            raise ContractViolationError(f"expected tilde ordering, got {state.ordering}")
        G = state.G
    else:
        G = np.asarray(state)
    if G.shape != (8, 8):
        raise ContractViolationError(f"expected an 8x8 covariance, got shape {G.shape}")
    return G[np.ix_(REDUCED_INDEX, REDUCED_INDEX)].copy()


def check_physicality(G_red):
    """Smallest eigenvalue of ``G_red + (i/2) sigma_tilde`` for a 4x4 reduced matrix."""
    return physicality_margin(np.asarray(G_red))


def reduced_trajectory(spec, tp, r1, r3, times, method="auto", sm=None):
    """Reduced covariances of modes 1 and 3 along a time grid.

    Only the four propagator columns that feed modes 1 and 3 are used, so
    the cost per time point is a few 8x4 products.

    Returns:
        ndarray of shape ``(len(times), 4, 4)``.
    """
    t = np.atleast_1d(np.asarray(times, dtype=float))
    E = propagator_batch(spec, tp, t, sm=sm, method=method)
    G0 = squeezed_initial_covariance(tp, r1, r3).G
    Ec = E[:, :, REDUCED_INDEX]
    Ech = np.conj(np.swapaxes(Ec, 1, 2))
    G = Ech @ G0 @ Ec + (np.eye(4)[None] - Ech @ Ec) / (2.0 * tp.epsilon)
    return 0.5 * (G + np.conj(np.swapaxes(G, 1, 2)))


def covariance_f_to_tilde(G_f, sm):
    """Convert a real F-ordered covariance to the tilde-ordered complex one.

    Uses ``(r, G r) = (Z, G_tilde Z)`` with ``Z`` the displacement vector of ``r``.
    """
    Mi = sm.M_inv
    return sm.P.T @ SIGMA3 @ Mi @ G_f @ Mi.conj().T @ SIGMA3 @ sm.P


def covariance_tilde_to_f(G_tilde, sm):
    """Inverse of :func:`covariance_f_to_tilde`; the result is real."""
    G = sm.M @ SIGMA3 @ sm.P @ G_tilde @ sm.P.T @ SIGMA3 @ sm.M.conj().T
    return G.real


def evolve_f_covariance(G_f, L, Sigma, t):
    """F-ordered covariance evolution ``Y_t + exp(tL) G exp(tL^T)``."""
    et = mat_exp(L, t)
    return Sigma - et @ Sigma @ et.T + et @ G_f @ et.T
