"""Microscopic Lindblad models and their mesoscopic generators.

Two dissipative models are supported:

* **Model 1** couples the two chains through the jump operators
  ``sigma_+ (x) sigma_-``, ``sigma_- (x) sigma_+`` and the two dephasing
  operators ``sigma_3 / 2``. Its Kossakowski matrix has diagonal ``delta``
  and cross couplings ``gamma``; the overall rate is ``J0``.
* **Model 2** uses the collective spins ``w_mu = sigma_mu (x) 1 + 1 (x) sigma_mu``
  with a temperature-dependent Kossakowski matrix parametrised by ``xi``.

Because the dynamics factorises over sites in the mesoscopic limit, the 8x8
generator ``L`` acting on the fluctuation basis ``x_1..x_8`` can be computed
exactly from 4x4 single-site algebra. :func:`derive_L_matrix` does this by
Hilbert-Schmidt projection; :func:`closed_form_L` is an independent
transcription of the same matrix. The pair is the main guard against
transcription mistakes.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    CompletePositivityError,
    ParameterError,
    PositivityViolationError,
    SpanStabilityError,
)
from .linalg import hermitian_eigenvalues, is_psd
from .thermal import S4, V_FROM_A, correlation_matrix

ID2 = np.eye(2, dtype=complex)
PAULI_1 = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_3 = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_PLUS = 0.5 * (PAULI_1 + 1j * PAULI_2)
SIGMA_MINUS = 0.5 * (PAULI_1 - 1j * PAULI_2)

SPAN_TOL = 1e-12
CP_TOL = 1e-10


@dataclass(frozen=True)
class ModelSpec:
    """Choice of microscopic model and its dissipation parameters.

    Use :meth:`model1` or :meth:`model2` instead of the raw constructor.

    Attributes:
        variant: 1 or 2.
        delta: Model 1 diagonal Kossakowski strength (``> 0``).
        gamma: Model 1 inter-chain coupling, ``|gamma| <= delta / 2``.
        J0: Model 1 overall rate (``> 0``).
        xi: Model 2 dephasing weight (``>= 0``).
        eta: Level splitting.
    """

    variant: int
    delta: float = 1.0
    gamma: float = 0.0
    J0: float = 1.0
    xi: float = 0.0
    eta: float = 1.0

    def __post_init__(self):
        if self.variant not in (1, 2):
            raise ParameterError(f"model variant must be 1 or 2, got {self.variant!r}")
        vals = dict(delta=self.delta, gamma=self.gamma, J0=self.J0, xi=self.xi, eta=self.eta)
        for name, v in vals.items():
            if not np.isfinite(v):
                raise ParameterError(f"{name} must be finite, got {v!r}")
        if self.eta <= 0:
            raise ParameterError(f"eta must be positive, got {self.eta!r}")
        if self.variant == 1:
            if self.delta <= 0:
                raise ParameterError(f"delta must be positive, got {self.delta!r}")
            if self.J0 <= 0:
                raise ParameterError(f"J0 must be positive, got {self.J0!r}")
            if abs(self.gamma) > 0.5 * self.delta:
                raise PositivityViolationError(
                    f"|gamma|={abs(self.gamma)!r} exceeds delta/2={0.5 * self.delta!r}; "
                    "the Kossakowski matrix would not be positive"
                )
        elif self.xi < 0:
            raise PositivityViolationError(f"xi must be >= 0, got {self.xi!r}")

    @classmethod
    def model1(cls, delta=1.0, gamma=0.0, J0=1.0, eta=1.0):
        """Model 1 with Kossakowski parameters ``delta``, ``gamma`` and rate ``J0``."""
        return cls(variant=1, delta=float(delta), gamma=float(gamma), J0=float(J0), eta=float(eta))

    @classmethod
    def model2(cls, xi=0.0, eta=1.0):
        """Model 2 with dephasing weight ``xi``."""
        return cls(variant=2, xi=float(xi), eta=float(eta))

    @property
    def decay_rate(self):
        """Reference rate used to pick asymptotic times (``delta * J0`` or 1)."""
        return self.delta * self.J0 if self.variant == 1 else 1.0


@dataclass(frozen=True)
class SiteOperators:
    """Single-site 4x4 matrices for one model at one temperature.

    Attributes:
        x: The eight Hermitian basis operators ``x_1..x_8``.
        kraus: Jump operators weighted by the Kossakowski matrix; four for
            Model 1, the three collective spins ``w_mu`` for Model 2.
        kossakowski: Coefficient matrix paired with ``kraus``.
        rate: Overall prefactor of the dissipator (``J0`` or 1).
        h: Site Hamiltonian ``(eta / 2)(sigma_3 (x) 1 + 1 (x) sigma_3)``.
        rho_beta: Site thermal density matrix.
    """

    x: tuple = field(repr=False)
    kraus: tuple = field(repr=False)
    kossakowski: np.ndarray = field(repr=False)
    rate: float
    h: np.ndarray = field(repr=False)
    rho_beta: np.ndarray = field(repr=False)


def basis_operators():
    """The eight Pauli products ``x_1..x_8`` spanning the fluctuation algebra."""
    k = np.kron
    return (
        k(PAULI_1, ID2),
        k(PAULI_2, ID2),
        k(ID2, PAULI_1),
        k(ID2, PAULI_2),
        k(PAULI_1, PAULI_3),
        k(PAULI_2, PAULI_3),
        k(PAULI_3, PAULI_1),
        k(PAULI_3, PAULI_2),
    )


def model1_kraus():
    """``(s+ (x) s-, s- (x) s+, s3 (x) 1 / 2, 1 (x) s3 / 2)``."""
    k = np.kron
    return (
        k(SIGMA_PLUS, SIGMA_MINUS),
        k(SIGMA_MINUS, SIGMA_PLUS),
        0.5 * k(PAULI_3, ID2),
        0.5 * k(ID2, PAULI_3),
    )


def model2_kraus_six():
    """The six single-spin Paulis ``s_mu (x) 1`` then ``1 (x) s_mu``."""
    k = np.kron
    paulis = (PAULI_1, PAULI_2, PAULI_3)
    return tuple(k(s, ID2) for s in paulis) + tuple(k(ID2, s) for s in paulis)


def model2_collective_spins():
    """``w_mu = s_mu (x) 1 + 1 (x) s_mu`` for mu = 1, 2, 3."""
    k = np.kron
    return tuple(k(s, ID2) + k(ID2, s) for s in (PAULI_1, PAULI_2, PAULI_3))


def site_hamiltonian(eta):
    """``(eta / 2)(sigma_3 (x) 1 + 1 (x) sigma_3)``."""
    return 0.5 * eta * (np.kron(PAULI_3, ID2) + np.kron(ID2, PAULI_3))


def site_thermal_state(eps):
    """Site thermal state written through ``eps`` (valid up to ``eps = 1``).

    ``rho = (1 - eps (s3 (x) 1 + 1 (x) s3) + eps^2 s3 (x) s3) / 4``.
    """
    s3i = np.kron(PAULI_3, ID2)
    is3 = np.kron(ID2, PAULI_3)
    return 0.25 * (np.eye(4) - eps * (s3i + is3) + eps**2 * np.kron(PAULI_3, PAULI_3))


def model2_matrix(xi, eps):
    """3x3 block ``[[1, -i eps, 0], [i eps, 1, 0], [0, 0, xi]]``."""
    return np.array([[1.0, -1j * eps, 0.0], [1j * eps, 1.0, 0.0], [0.0, 0.0, xi]])


def microscopic_kossakowski(spec, tp):
    """Microscopic Kossakowski matrix of the model.

    Returns:
        The 4x4 Model 1 matrix, or the 6x6 Model 2 matrix ``[[M, M], [M, M]]``
        paired with :func:`model2_kraus_six`.

    Raises:
        PositivityViolationError: If the matrix is not PSD within 1e-12.
    """
    if spec.variant == 1:
        d, g = spec.delta, spec.gamma
        D = np.array(
            [[d, 0.0, g, g], [0.0, d, g, g], [g, g, d, 0.0], [g, g, 0.0, d]], dtype=complex
        )
    else:
        m = model2_matrix(spec.xi, tp.epsilon)
        D = np.block([[m, m], [m, m]])
    if not is_psd(D, 1e-12):
        raise PositivityViolationError(
            f"microscopic Kossakowski matrix has eigenvalue {hermitian_eigenvalues(D)[0]:.3e}"
        )
    return D


def build_site_operators(tp, spec):
    """Assemble the single-site matrices for ``spec`` at temperature ``tp``.

    Raises:
        ParameterError: If ``spec.eta`` and ``tp.eta`` differ.
    """
    if spec.eta != tp.eta:
        raise ParameterError(f"model eta={spec.eta!r} differs from thermal eta={tp.eta!r}")
    if spec.variant == 1:
        kraus = model1_kraus()
        koss = microscopic_kossakowski(spec, tp)
        rate = spec.J0
    else:
        microscopic_kossakowski(spec, tp)  # positivity check on the 6x6 form
        kraus = model2_collective_spins()
        koss = model2_matrix(spec.xi, tp.epsilon)
        rate = 1.0
    return SiteOperators(
        x=basis_operators(),
        kraus=kraus,
        kossakowski=koss,
        rate=rate,
        h=site_hamiltonian(spec.eta),
        rho_beta=site_thermal_state(tp.epsilon),
    )


def _dissipator(kraus, D, X):
    out = np.zeros((4, 4), dtype=complex)
    for m, vm in enumerate(kraus):
        for n, vn in enumerate(kraus):
            if D[m, n] == 0:
                continue
            vnd = vn.conj().T
            out += D[m, n] * (vm @ X @ vnd - 0.5 * (vm @ vnd @ X + X @ vm @ vnd))
    return out


def _dual_dissipator(kraus, D, rho):
    out = np.zeros((4, 4), dtype=complex)
    for m, vm in enumerate(kraus):
        for n, vn in enumerate(kraus):
            if D[m, n] == 0:
                continue
            vnd = vn.conj().T
            out += D[m, n] * (vnd @ rho @ vm - 0.5 * (vm @ vnd @ rho + rho @ vm @ vnd))
    return out


def lindblad_action_site(ops, spec, X):
    """Heisenberg-picture generator on one site.

    ``L[X] = i[h, X] + rate * sum_{mn} D_mn (v_m X v_n^dag - {v_m v_n^dag, X} / 2)``,
    which for Model 1 equals
    ``(J0 / 2) sum D_mn (v_m [X, v_n^dag] + [v_m, X] v_n^dag)``.
    """
    X = np.asarray(X, dtype=complex)
    h = ops.h
    return 1j * (h @ X - X @ h) + ops.rate * _dissipator(ops.kraus, ops.kossakowski, X)


def lindblad_dual_site(ops, spec, rho):
    """Schrödinger-picture (dual) generator on one site.

    Satisfies ``Tr(L*[rho] X) = Tr(rho L[X])`` for all ``X``.
    """
    rho = np.asarray(rho, dtype=complex)
    h = ops.h
    return -1j * (h @ rho - rho @ h) + ops.rate * _dual_dissipator(
        ops.kraus, ops.kossakowski, rho
    )


def derive_L_matrix(ops, spec, tp=None):
    """Generator matrix ``L`` on the fluctuation basis, from site algebra.

    ``L_ij = Tr(x_j^dag L[x_i]) / 4``, so that ``L[x_i] = sum_j L_ij x_j``.

    Raises:
        SpanStabilityError: If some ``L[x_i]`` leaves ``span{x_j}`` or the
            projection is not real.
    """
    images = [lindblad_action_site(ops, spec, xi) for xi in ops.x]
    L = np.array([[np.trace(xj.conj().T @ y) / 4.0 for xj in ops.x] for y in images])
    residual = max(
        float(np.max(np.abs(y - sum(L[i, j] * ops.x[j] for j in range(8)))))
        for i, y in enumerate(images)
    )
    if residual > SPAN_TOL:
        raise SpanStabilityError(f"generator leaves the fluctuation span (residual {residual:.3e})")
    imag = float(np.max(np.abs(L.imag)))
    if imag > SPAN_TOL:
        raise SpanStabilityError(f"projected generator is not real (max imag {imag:.3e})")
    return L.real


def projection_residual(ops, spec):
    """Largest ``|L[x_i] - sum_j L_ij x_j|`` over the basis, without raising."""
    images = [lindblad_action_site(ops, spec, xi) for xi in ops.x]
    L = np.array([[np.trace(xj.conj().T @ y) / 4.0 for xj in ops.x] for y in images])
    return max(
        float(np.max(np.abs(y - sum(L[i, j] * ops.x[j] for j in range(8)))))
        for i, y in enumerate(images)
    )


def hamiltonian_part(eta):
    """``eta * blockdiag(S, S)``, the Hamiltonian contribution to ``L``."""
    z = np.zeros((4, 4))
    return eta * np.block([[S4, z], [z, S4]])


def closed_form_L(spec, eps):
    """Transcribed generator matrix ``L`` (F-ordering) for either model.

    Model 1: ``eta blockdiag(S, S) + J0 [[-delta I, G], [G, -delta I]]`` with
    ``G = gamma [[0, I2], [I2, 0]]``.

    Model 2: ``eta blockdiag(S, S) - 2 A`` with ``A`` the fixed 8x8 pattern
    built from ``1 + xi``, ``3 + xi``, ``eps`` and ``2 eps``.
    """
    H = hamiltonian_part(spec.eta)
    if spec.variant == 1:
        one = np.eye(4)
        g = spec.gamma * np.array(
            [[0, 0, 1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, 1, 0, 0]], dtype=float
        )
        return H + spec.J0 * np.block([[-spec.delta * one, g], [g, -spec.delta * one]])
    a = 1.0 + spec.xi
    b = 3.0 + spec.xi
    e = eps
    A = np.array(
        [
            [a, 0, 0, 0, 0, 0, -e, 0],
            [0, a, 0, 0, 0, 0, 0, -e],
            [0, 0, a, 0, -e, 0, 0, 0],
            [0, 0, 0, a, 0, -e, 0, 0],
            [2 * e, 0, e, 0, b, 0, 2, 0],
            [0, 2 * e, 0, e, 0, b, 0, 2],
            [e, 0, 2 * e, 0, 2, 0, b, 0],
            [0, e, 0, 2 * e, 0, 2, 0, b],
        ],
        dtype=float,
    )
    return H - 2.0 * A


def mode_basis_generator(L, sm):
    """Generator acting on the A-ordered modes, ``M^-1 L M``.

    Row ``k`` gives ``L[A_k]`` in terms of ``(a_1..a_4, a_1^dag..a_4^dag)``.
    """
    return sm.M_inv @ L @ sm.M


@dataclass(frozen=True)
class MesoscopicGenerator:
    """Hamiltonian and Kossakowski matrices of the emergent bosonic generator.

    ``H1``/``D1`` are F-ordered, ``H2``/``D2`` are A-ordered and ``K_beta`` is
    ``D2`` in V-ordering.
    """

    H1: np.ndarray = field(repr=False)
    D1: np.ndarray = field(repr=False)
    H2: np.ndarray = field(repr=False)
    D2: np.ndarray = field(repr=False)
    K_beta: np.ndarray = field(repr=False)


def mesoscopic_generator_matrices(L, sm):
    """Mesoscopic Hamiltonian and Kossakowski matrices from ``L``.

    ``H1 = -i s^-1 (L C - C L^T) s^-1`` and ``D1 = s^-1 (L C + C L^T) s^-1``
    with ``s`` the symplectic matrix; ``H2``, ``D2`` are their images under
    the mode map and ``K_beta`` re-orders ``D2`` to V-ordering.

    Raises:
        CompletePositivityError: If ``D1`` has an eigenvalue below ``-1e-10``.
    """
    si = sm.sigma_inv
    C = sm.C
    H1 = -1j * si @ (L @ C - C @ L.T) @ si
    D1 = si @ (L @ C + C @ L.T) @ si
    # Both are Hermitian by construction; remove roundoff asymmetry.
    H1 = 0.5 * (H1 + H1.conj().T)
    D1 = 0.5 * (D1 + D1.conj().T)
    lam = hermitian_eigenvalues(D1)[0]
    if lam < -CP_TOL:
        raise CompletePositivityError(f"D1 has eigenvalue {lam:.3e} < -{CP_TOL}")
    Md = sm.M.conj().T
    H2 = Md @ H1 @ sm.M
    D2 = Md @ D1 @ sm.M
    K = D2[np.ix_(V_FROM_A, V_FROM_A)]
    return MesoscopicGenerator(H1=H1, D1=D1, H2=H2, D2=D2, K_beta=K)


def closed_form_H1(tp):
    """Transcribed F-ordered mesoscopic Hamiltonian ``H1``.

    ``H1 = eta / (2 c^2 eps^2) [[E, eps E], [eps E, E]]`` with
    ``E = blockdiag([[eps, -i], [i, eps]], [[eps, -i], [i, eps]])``.
    """
    eps, c = tp.epsilon, tp.c
    e2 = np.array([[eps, -1j], [1j, eps]])
    E = np.zeros((4, 4), dtype=complex)
    E[:2, :2] = e2
    E[2:, 2:] = e2
    return tp.eta / (2 * c * c * eps * eps) * np.block([[E, eps * E], [eps * E, E]])


def closed_form_H2(tp):
    """Transcribed A-ordered Hamiltonian ``(eta / eps) diag((1+eps) I4, (eps-1) I4)``."""
    eps = tp.epsilon
    d = np.concatenate([np.full(4, 1.0 + eps), np.full(4, eps - 1.0)])
    return (tp.eta / eps) * np.diag(d)


def closed_form_K(spec, tp):
    """Transcribed V-ordered mesoscopic Kossakowski matrix ``K_beta``.

    Model 1: ``(J0 / eps) [[A, B], [B, A]]`` with ``A = delta diag(1+e, 1+e, 1-e, 1-e)``
    and ``B`` proportional to ``gamma``.
    Model 2: ``(2 / eps)`` times a matrix assembled from ``diag(1+xi, 3+xi)`` and
    ``[[e^2, -e c], [-e c, 1 + c^2]]`` blocks weighted by ``1 +- eps``.
    """
    eps, c = tp.epsilon, tp.c
    z = np.zeros((2, 2))
    p, m = 1.0 + eps, 1.0 - eps
    if spec.variant == 1:
        A = spec.delta * np.diag([p, p, m, m])
        B = spec.gamma * np.array(
            [
                [eps * p, -p * c, 0, 0],
                [-p * c, -eps * p, 0, 0],
                [0, 0, eps * m, -m * c],
                [0, 0, -m * c, -eps * m],
            ]
        )
        return (spec.J0 / eps) * np.block([[A, B], [B, A]]).astype(complex)
    mb = np.diag([1.0 + spec.xi, 3.0 + spec.xi])
    nb = np.array([[eps**2, -eps * c], [-eps * c, 1.0 + c**2]])
    K = np.block(
        [
            [p * mb, z, p * nb, z],
            [z, m * mb, z, m * nb],
            [p * nb, z, p * mb, z],
            [z, m * nb, z, m * mb],
        ]
    )
    return (2.0 / eps) * K.astype(complex)


def closed_form_D2(spec, tp):
    """Transcribed A-ordered ``D2`` (same numbers as :func:`closed_form_K`).

    For Model 2 this is ``(2 / eps) blockdiag((1+eps) A, (1-eps) A)`` with the
    4x4 ``A`` written out directly. The (2,4) and (4,2) entries of ``A`` are
    ``+(1 + c^2)``, which is the sign that makes ``A`` agree with ``K_beta``
    and with the matrix derived from the site algebra.
    """
    if spec.variant == 1:
        inv = np.argsort(V_FROM_A)
        K = closed_form_K(spec, tp)
        return K[np.ix_(inv, inv)]
    eps, c = tp.epsilon, tp.c
    xi = spec.xi
    A = np.array(
        [
            [1 + xi, 0, eps**2, -eps * c],
            [0, 3 + xi, -eps * c, 1 + c**2],
            [eps**2, -eps * c, 1 + xi, 0],
            [-eps * c, 1 + c**2, 0, 3 + xi],
        ]
    )
    z = np.zeros((4, 4))
    return (2.0 / eps) * np.block([[(1 + eps) * A, z], [z, (1 - eps) * A]]).astype(complex)


def correlation_matrix_check(ops, tp):
    """Max entrywise ``|Tr(rho x_i x_j) - C_ij|`` against the closed-form ``C``."""
    rho = ops.rho_beta
    C = np.array([[np.trace(rho @ a @ b) for b in ops.x] for a in ops.x])
    return float(np.max(np.abs(C - correlation_matrix(tp.epsilon))))


def thermal_invariance_residual(ops, spec):
    """Largest entry of the dual generator applied to the site thermal state."""
    return float(np.max(np.abs(lindblad_dual_site(ops, spec, ops.rho_beta))))
