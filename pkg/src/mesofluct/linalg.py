"""Small dense linear algebra helpers.

Every matrix in this package is at most 8x8, so the helpers favour strict
input checking over speed. The matrix exponential delegates to
:func:`scipy.linalg.expm`, which implements scaling and squaring with a
degree-13 Padé approximant and therefore handles the non-normal generators
that appear for the second dissipative model.
"""

import numpy as np
import scipy.linalg

from .exceptions import ContractViolationError, DimensionError, NonFiniteError

HERMITIAN_RTOL = 1e-12


def as_square(A, name="A"):
    """Return ``A`` as a finite square complex or real ndarray.

    Args:
        A: Array-like matrix.
        name: Name used in error messages.

    Raises:
        DimensionError: If ``A`` is not two dimensional and square.
        NonFiniteError: If ``A`` contains NaN or infinite entries.
    """
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NonFiniteError(f"{name} contains non-finite entries")
    return A


def hermiticity_defect(A):
    """Largest entrywise deviation from Hermiticity, ``max |A - A^H|``."""
    A = np.asarray(A)
    return float(np.max(np.abs(A - A.conj().T))) if A.size else 0.0


def is_hermitian(A, rtol=HERMITIAN_RTOL):
    """Check Hermiticity relative to the magnitude of the entries.

    The test is ``max|A_ij - conj(A_ji)| <= rtol * (1 + max|A_ij|)``.
    """
    A = np.asarray(A)
    scale = 1.0 + (float(np.max(np.abs(A))) if A.size else 0.0)
    return hermiticity_defect(A) <= rtol * scale


def mat_exp(A, t=1.0):
    """Matrix exponential ``exp(t * A)``.

    Args:
        A: Square matrix, real or complex.
        t: Finite real scalar multiplying ``A``.

    Returns:
        ndarray: ``exp(t * A)`` with the dtype promoted from ``A``.

    Raises:
        DimensionError: For non-square input.
        NonFiniteError: For non-finite entries in ``A`` or a non-finite ``t``.
    """
    A = as_square(A)
    if not np.isfinite(t):
        raise NonFiniteError(f"t must be finite, got {t!r}")
    return scipy.linalg.expm(t * A)


def mat_exp_batch(A, times):
    """Stack of exponentials ``exp(t_k * A)`` for every entry of ``times``.

    Args:
        A: Square matrix.
        times: 1-D array of finite reals.

    Returns:
        ndarray of shape ``(len(times), n, n)``.
    """
    A = as_square(A)
    times = np.asarray(times, dtype=float).ravel()
    if not np.all(np.isfinite(times)):
        raise NonFiniteError("times must be finite")
    if times.size == 0:
        return np.zeros((0,) + A.shape, dtype=np.result_type(A, float))
    return scipy.linalg.expm(times[:, None, None] * A[None, :, :])


def hermitian_eigenvalues(A, rtol=HERMITIAN_RTOL):
    """Ascending eigenvalues of a Hermitian matrix.

    The input is symmetrised as ``(A + A^H) / 2`` before the eigensolve so that
    roundoff-level asymmetry does not leak into the spectrum.

    Args:
        A: Square matrix that is Hermitian within ``rtol``.
        rtol: Relative Hermiticity tolerance.

    Returns:
        ndarray: Real eigenvalues in ascending order.

    Raises:
        ContractViolationError: If ``A`` is not Hermitian within tolerance.
    """
    A = as_square(A)
    if not is_hermitian(A, rtol):
        raise ContractViolationError(
            f"matrix is not Hermitian (defect {hermiticity_defect(A):.3e})"
        )
    return np.linalg.eigvalsh(0.5 * (A + A.conj().T))


def min_eigenvalue(A, rtol=HERMITIAN_RTOL):
    """Smallest eigenvalue of a Hermitian matrix."""
    return float(hermitian_eigenvalues(A, rtol)[0])


def is_psd(A, tol=0.0):
    """Whether a Hermitian matrix is positive semidefinite up to ``tol``.

    Returns:
        bool: ``True`` iff the smallest eigenvalue is ``>= -tol``.
    """
    return min_eigenvalue(A) >= -tol
