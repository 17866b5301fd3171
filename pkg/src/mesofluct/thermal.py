"""Thermal parameters and the fixed structural matrices of the fluctuation algebra.

Each of the two chains carries, per site, a pair of spin-1/2 particles
(a 4-dimensional site space). Eight traceless Pauli products ``x_1..x_8``
generate the fluctuation operators, and in the thermal product state their
correlations are captured by a handful of 8x8 matrices that only depend on
``eps = tanh(beta * eta / 2)``:

* ``C``: two-point correlation matrix ``Tr(rho x_i x_j)``.
* ``Sigma``: its real symmetric part (covariance).
* ``sigma``: twice its imaginary part (symplectic form).
* ``M``: map from Weyl vectors to the four bosonic modes ``a_1..a_4``.
* ``P``: permutation between the stacked ``(a, a^dag)`` ordering and the
  mode-interleaved tilde ordering.

The matrices are written out block by block rather than through Kronecker
products, so the Kronecker forms can serve as an independent check in the
test suite.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegenerateRegimeError, DimensionError, ParameterError

#: Largest epsilon the generic (inverse-based) pipeline accepts.
EPS_NUMERIC_MAX = 1.0 - 1e-8

#: Sign matrix separating annihilation from creation components.
SIGMA3 = np.diag([1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0])

# 4x4 symplectic unit that appears throughout: blockdiag of [[0,-1],[1,0]].
S4 = np.array(
    [[0.0, -1.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, -1.0], [0.0, 0.0, 1.0, 0.0]]
)


class Ordering(enum.Enum):
    """Named orderings of the eight components used across the package.

    ``F``: Weyl/fluctuation ordering ``x_1..x_8``.
    ``A``: stacked ordering ``a_1..a_4, a_1^dag..a_4^dag``.
    ``TILDE``: interleaved ordering ``a_1, a_1^dag, ..., a_4, a_4^dag``.
    ``V``: ``a_1, a_2, a_1^dag, a_2^dag, a_3, a_4, a_3^dag, a_4^dag``, used
    for the mesoscopic Kossakowski matrices.
    ``REDUCED13``: ``a_1, a_1^dag, a_3, a_3^dag`` after tracing out modes 2, 4.
    """

    F = "F"
    A = "A"
    TILDE = "tilde"
    V = "V"
    REDUCED13 = "reduced13"


#: Positions of the V-ordered components inside the A ordering.
V_FROM_A = np.array([0, 1, 4, 5, 2, 3, 6, 7])


@dataclass(frozen=True)
class ThermalParams:
    """Inverse temperature and the dimensionless numbers derived from it.

    Attributes:
        beta: Inverse temperature, ``math.inf`` at zero temperature.
        eta: Level splitting of the single-site Hamiltonian.
        epsilon: ``tanh(beta * eta / 2)``.
        c: ``sqrt(1 - epsilon**2)``.
        zero_temperature: True iff ``beta`` is infinite.
    """

    beta: float
    eta: float
    epsilon: float
    c: float
    zero_temperature: bool = False

    @property
    def temperature(self):
        """Temperature ``1 / beta`` (zero when ``beta`` is infinite)."""
        if self.zero_temperature:
            return 0.0
        return np.inf if self.beta == 0 else 1.0 / self.beta

    @property
    def numeric_ok(self):
        """Whether the inverse-based numeric pipeline accepts this epsilon."""
        return 0.0 < self.epsilon <= EPS_NUMERIC_MAX

    def require_numeric(self, what="numeric pipeline"):
        """Raise :class:`DegenerateRegimeError` unless ``numeric_ok``."""
        if self.epsilon <= 0.0:
            raise DegenerateRegimeError(
                f"{what}: epsilon=0 (infinite temperature) makes sigma^-1 undefined"
            )
        if self.epsilon > EPS_NUMERIC_MAX:
            raise DegenerateRegimeError(
                f"{what}: epsilon={self.epsilon!r} exceeds {EPS_NUMERIC_MAX!r}; "
                "M^-1 and sigma^-1 carry 1/c factors that blow up near zero "
                "temperature (use a closed-form route instead)"
            )


def thermal_params(beta, eta=1.0):
    """Build :class:`ThermalParams` from an inverse temperature.

    Args:
        beta: Inverse temperature, ``>= 0`` or ``math.inf``.
        eta: Level splitting, strictly positive.

    Raises:
        ParameterError: If ``eta <= 0`` or ``beta`` is negative or NaN.
    """
    eta = float(eta)
    beta = float(beta)
    if not np.isfinite(eta) or eta <= 0:
        raise ParameterError(f"eta must be a positive finite number, got {eta!r}")
    if np.isnan(beta) or beta < 0:
        raise ParameterError(f"beta must be >= 0 or infinite, got {beta!r}")
    if np.isinf(beta):
        return ThermalParams(beta=np.inf, eta=eta, epsilon=1.0, c=0.0, zero_temperature=True)
    x = 0.5 * beta * eta
    eps = float(np.tanh(x))
    # 1 - tanh(x) = 2 / (exp(2x) + 1) keeps full relative accuracy for large x.
    one_minus = 2.0 / (np.exp(2.0 * x) + 1.0) if x < 350 else 0.0
    c = float(np.sqrt(one_minus * (1.0 + eps)))
    return ThermalParams(beta=beta, eta=eta, epsilon=eps, c=c, zero_temperature=False)


def thermal_params_from_temperature(T, eta=1.0):
    """Same as :func:`thermal_params` with ``beta = 1 / T`` (``T = 0`` allowed)."""
    T = float(T)
    if np.isnan(T) or T < 0:
        raise ParameterError(f"temperature must be >= 0, got {T!r}")
    beta = np.inf if T == 0 else 1.0 / T
    return thermal_params(beta, eta)


def thermal_params_from_epsilon(eps, eta=1.0):
    """Build :class:`ThermalParams` for a prescribed ``epsilon`` in ``[0, 1]``.

    ``epsilon`` is stored exactly as given; ``beta`` is back-computed.
    """
    eps = float(eps)
    eta = float(eta)
    if not 0.0 <= eps <= 1.0:
        raise ParameterError(f"epsilon must lie in [0, 1], got {eps!r}")
    if eta <= 0:
        raise ParameterError(f"eta must be positive, got {eta!r}")
    if eps == 1.0:
        return ThermalParams(beta=np.inf, eta=eta, epsilon=1.0, c=0.0, zero_temperature=True)
    beta = 2.0 * np.arctanh(eps) / eta
    c = float(np.sqrt((1.0 - eps) * (1.0 + eps)))
    return ThermalParams(beta=float(beta), eta=eta, epsilon=eps, c=c)


def correlation_matrix(eps):
    """Closed-form correlation matrix ``C`` for any ``eps`` in ``[0, 1]``.

    ``C = [[Ce, -eps Ce], [-eps Ce, Ce]]`` with ``Ce = blockdiag(B, B)`` and
    ``B = [[1, -i eps], [i eps, 1]]``.
    """
    b = np.array([[1.0, -1j * eps], [1j * eps, 1.0]])
    ce = np.zeros((4, 4), dtype=complex)
    ce[:2, :2] = b
    ce[2:, 2:] = b
    return np.block([[ce, -eps * ce], [-eps * ce, ce]])


def covariance_matrix(eps):
    """Closed-form real covariance ``Sigma = [[I, -eps I], [-eps I, I]]``."""
    one = np.eye(4)
    return np.block([[one, -eps * one], [-eps * one, one]])


def symplectic_matrix(eps):
    """Closed-form real antisymmetric ``sigma = 2 eps [[S, -eps S], [-eps S, S]]``."""
    return 2.0 * eps * np.block([[S4, -eps * S4], [-eps * S4, S4]])


def symplectic_inverse(eps, c):
    """Closed-form ``sigma^-1 = -(1 / 2 c^2 eps) [[S, eps S], [eps S, S]]``."""
    return -(1.0 / (2.0 * c * c * eps)) * np.block([[S4, eps * S4], [eps * S4, S4]])


def mode_map(eps, c):
    """The matrix ``M`` whose rows are ``(conj(f_i), f_i)`` for the mode vectors f_i."""
    k = np.array([[1, 0, 0, 0], [1j, 0, 0, 0], [0, 0, 1, 0], [0, 0, 1j, 0]], dtype=complex)
    q = np.array(
        [
            [-eps, c, 0, 0],
            [1j * eps, -1j * c, 0, 0],
            [0, 0, -eps, c],
            [0, 0, 1j * eps, -1j * c],
        ],
        dtype=complex,
    )
    return np.sqrt(eps) * np.block([[k, k.conj()], [q.conj(), q]])


def mode_map_inverse(eps, c):
    """Closed-form inverse of :func:`mode_map` (requires ``0 < eps < 1``)."""
    w = np.array(
        [
            [c, -1j * c, 0, 0],
            [eps, -1j * eps, 0, 0],
            [0, 0, c, -1j * c],
            [0, 0, eps, -1j * eps],
        ],
        dtype=complex,
    )
    z = np.array([[0, 0, 0, 0], [1, 1j, 0, 0], [0, 0, 0, 0], [0, 0, 1, 1j]], dtype=complex)
    return (1.0 / (2.0 * c * np.sqrt(eps))) * np.block([[w, z.conj()], [w.conj(), z]])


def tilde_permutation():
    """Permutation ``P`` with ``P^T`` sending A-ordering to tilde ordering."""
    p11 = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 0, 0, 0], [0, 0, 0, 0]])
    p12 = np.array([[0, 0, 0, 0], [0, 0, 0, 0], [1, 0, 0, 0], [0, 0, 1, 0]])
    p21 = np.array([[0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 0, 0], [0, 0, 0, 0]])
    p22 = np.array([[0, 0, 0, 0], [0, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1]])
    return np.block([[p11, p12], [p21, p22]]).astype(float)


@dataclass(frozen=True)
class StructuralMatrices:
    """The fixed 8x8 matrices at one temperature.

    ``C``, ``Sigma``, ``sigma`` and ``sigma_inv`` act in F-ordering. ``M`` maps
    F-ordered Weyl vectors to A-ordered mode amplitudes and ``P`` converts
    between A and tilde orderings.
    """

    epsilon: float
    c: float
    C: np.ndarray = field(repr=False)
    Sigma: np.ndarray = field(repr=False)
    sigma: np.ndarray = field(repr=False)
    sigma_inv: np.ndarray = field(repr=False)
    M: np.ndarray = field(repr=False)
    M_inv: np.ndarray = field(repr=False)
    P: np.ndarray = field(repr=False)
    Sigma3: np.ndarray = field(repr=False, default_factory=lambda: SIGMA3.copy())

    def mode_vectors(self):
        """The eight complex 4-vectors ``f_i`` (rows of ``M``, second half)."""
        return self.M[:, 4:].copy()


def build_structural_matrices(tp):
    """Assemble :class:`StructuralMatrices` for a temperature.

    Args:
        tp: :class:`ThermalParams` with ``0 < epsilon < 1``.

    Raises:
        DegenerateRegimeError: At ``epsilon = 0`` (no ``sigma^-1``) or
            ``epsilon = 1`` (no ``M^-1``, no ``sigma^-1``).
    """
    eps, c = tp.epsilon, tp.c
    if eps <= 0.0:
        raise DegenerateRegimeError("epsilon=0: sigma^-1 does not exist (sigma vanishes)")
    if eps >= 1.0 or c <= 0.0:
        raise DegenerateRegimeError(
            "epsilon=1: M^-1 and sigma^-1 do not exist (coarse-grained zero temperature)"
        )
    mats = dict(
        C=correlation_matrix(eps),
        Sigma=covariance_matrix(eps),
        sigma=symplectic_matrix(eps),
        sigma_inv=symplectic_inverse(eps, c),
        M=mode_map(eps, c),
        M_inv=mode_map_inverse(eps, c),
        P=tilde_permutation(),
    )
    for arr in mats.values():
        arr.setflags(write=False)
    return StructuralMatrices(epsilon=eps, c=c, **mats)


def _as_vector(r, n=8, name="r"):
    r = np.asarray(r)
    if r.shape != (n,):
        raise DimensionError(f"{name} must have shape ({n},), got {r.shape}")
    return r


def weyl_to_displacement(r, sm):
    """Displacement amplitudes ``Z = i Sigma3 M^H r`` of a Weyl vector.

    The upper half of ``Z`` holds ``z_1..z_4``, the lower half their complex
    conjugates.
    """
    r = _as_vector(r).astype(float)
    return 1j * (sm.Sigma3 @ (sm.M.conj().T @ r))


def displacement_to_weyl(Z, sm):
    """Inverse of :func:`weyl_to_displacement`, ``r = -i (M^H)^-1 Sigma3 Z``."""
    Z = _as_vector(Z, name="Z")
    r = -1j * (sm.M_inv.conj().T @ (sm.Sigma3 @ Z))
    return r.real


def thermal_char_function(r, tp, sm, via="covariance"):
    """Expectation of the Weyl operator ``W(r)`` in the thermal state.

    Args:
        r: Real 8-vector.
        tp: Thermal parameters matching ``sm``.
        sm: Structural matrices.
        via: ``"covariance"`` evaluates ``exp(-(r, Sigma r) / 2)``;
            ``"modes"`` evaluates ``exp(-|Z_r|^2 / (4 eps))`` from the
            displacement amplitudes. The two agree identically.

    Returns:
        float in ``(0, 1]``.
    """
    r = _as_vector(r).astype(float)
    if via == "covariance":
        return float(np.exp(-0.5 * r @ sm.Sigma @ r))
    if via == "modes":
        z = weyl_to_displacement(r, sm)
        return float(np.exp(-np.vdot(z, z).real / (4.0 * tp.epsilon)))
    raise ValueError(f"unknown route {via!r}; use 'covariance' or 'modes'")
