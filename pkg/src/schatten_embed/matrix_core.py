"""Hermitian matrix arithmetic, eigendecomposition, Schatten norms and the
Hermitian dilation.

Matrices are plain complex ``numpy`` arrays. Functions that require a
Hermitian argument validate it with :func:`as_hermitian`, which returns an
exactly Hermitian copy (the average with the conjugate transpose).
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import ConvergenceFailure, DimensionMismatch, InvalidP, NotHermitian

MAX_DIM = 64
HERMITIAN_RTOL = 1e-8
JACOBI_MAX_SWEEPS = 100
JACOBI_OFFDIAG_RTOL = 1e-14


class EigenDecomposition(NamedTuple):
    """Ascending eigenvalues and the unitary matrix of eigenvectors (columns)."""

    values: np.ndarray
    vectors: np.ndarray


def _square(M) -> np.ndarray:
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {M.shape}")
    if M.shape[0] < 1 or M.shape[0] > MAX_DIM:
        raise DimensionMismatch(f"dimension {M.shape[0]} outside 1..{MAX_DIM}")
    return M


def hermitian_defect(M) -> float:
    """Largest entry of ``|M - M^*|`` relative to the largest entry of ``|M|``."""
    M = np.asarray(M, dtype=complex)
    scale = np.max(np.abs(M)) if M.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(M - M.conj().T)) / scale)


def is_hermitian(M, rtol: float = HERMITIAN_RTOL) -> bool:
    M = np.asarray(M)
    return M.ndim == 2 and M.shape[0] == M.shape[1] and hermitian_defect(M) <= rtol


def as_hermitian(M, rtol: float = HERMITIAN_RTOL) -> np.ndarray:
    """Validate ``M`` and return its Hermitian part with a real diagonal.

    Raises :class:`NotHermitian` if the asymmetry exceeds ``rtol`` times the
    largest entry.
    """
    M = _square(M)
    defect = hermitian_defect(M)
    if defect > rtol:
        raise NotHermitian(f"asymmetry {defect:.3e} exceeds tolerance {rtol:.1e}")
    H = 0.5 * (M + M.conj().T)
    H[np.diag_indices_from(H)] = H.diagonal().real
    return H


def hermitian_from_parts(re, im, rtol: float = HERMITIAN_RTOL) -> np.ndarray:
    re = np.asarray(re, dtype=float)
    im = np.asarray(im, dtype=float)
    if re.shape != im.shape:
        raise DimensionMismatch(f"real part {re.shape} and imaginary part {im.shape} differ")
    return as_hermitian(re + 1j * im, rtol=rtol)


def _offdiag_norm(a) -> float:
    return float(np.linalg.norm(a - np.diag(a.diagonal())))


def jacobi_eigh(A, max_sweeps: int = JACOBI_MAX_SWEEPS, rtol: float = JACOBI_OFFDIAG_RTOL) -> EigenDecomposition:
    """Cyclic complex Jacobi eigensolver for a Hermitian matrix.

    Each rotation first removes the phase of the pivot ``a_pq`` with a diagonal
    unitary and then applies the classical real Jacobi rotation. Sweeps stop
    once the off-diagonal Frobenius norm drops below ``rtol * ||A||_F``.
    """
    a = as_hermitian(A).copy()
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    threshold = rtol * np.linalg.norm(a)
    for _ in range(max_sweeps):
        off = _offdiag_norm(a)
        if off <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= 1e-300:
                    continue
                app, aqq = a[p, p].real, a[q, q].real
                theta = (aqq - app) / (2.0 * mag)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                phase = apq / mag
                # G = diag(1, conj(phase)) @ [[c, s], [-s, c]]
                g = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
                cols = a[:, [p, q]] @ g
                a[:, [p, q]] = cols
                rows = g.conj().T @ a[[p, q], :]
                a[[p, q], :] = rows
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                v[:, [p, q]] = v[:, [p, q]] @ g
    else:
        off = _offdiag_norm(a)
        if off > threshold:
            raise ConvergenceFailure(f"Jacobi did not converge in {max_sweeps} sweeps (off={off:.3e})")
    w = a.diagonal().real
    order = np.argsort(w, kind="stable")
    return EigenDecomposition(w[order], v[:, order])


def eigh(A, method: str = "lapack") -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    ``method="lapack"`` uses :func:`numpy.linalg.eigh`; ``method="jacobi"`` uses
    the self-contained :func:`jacobi_eigh`.
    """
    if method == "jacobi":
        return jacobi_eigh(A)
    if method != "lapack":
        raise ValueError(f"unknown method {method!r}")
    H = as_hermitian(A)
    w, V = np.linalg.eigh(H)
    return EigenDecomposition(w, V)


def singular_values(M) -> np.ndarray:
    """Singular values as square roots of the (clamped) eigenvalues of ``M^* M``."""
    M = _square(M)
    w = np.linalg.eigvalsh(M.conj().T @ M)
    return np.sqrt(np.clip(w, 0.0, None))[::-1]


def schatten_norm(M, p: float) -> float:
    r"""Schatten-p norm :math:`(\sum_i \sigma_i^p)^{1/p}`.

    For Hermitian input the singular values are taken as ``|eigenvalues|``,
    which is the same quantity computed more accurately.
    """
    if not p >= 1:
        raise InvalidP(f"Schatten norm needs p >= 1, got {p}")
    M = _square(M)
    if hermitian_defect(M) <= 1e-14:
        s = np.abs(np.linalg.eigvalsh(0.5 * (M + M.conj().T)))
    else:
        s = singular_values(M)
    smax = s.max()
    if smax == 0.0:
        return 0.0
    return float(smax * np.sum((s / smax) ** p) ** (1.0 / p))


def schatten_power_batch(mats: np.ndarray, p: float) -> np.ndarray:
    """``||M_j||_p^p`` for a stack of Hermitian matrices of shape (m, n, n)."""
    lam = np.linalg.eigvalsh(mats)
    return np.sum(np.abs(lam) ** p, axis=-1)


def dilate(M) -> np.ndarray:
    """Hermitian dilation ``2^{-1/3} [[0, M], [M^*, 0]]``.

    The result has the same Schatten-3 norm as ``M`` and depends real-linearly
    on ``M``.
    """
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {M.shape}")
    n = M.shape[0]
    if 2 * n > MAX_DIM:
        raise DimensionMismatch(f"dilation of size {2 * n} exceeds {MAX_DIM}")
    out = np.zeros((2 * n, 2 * n), dtype=complex)
    out[:n, n:] = M
    out[n:, :n] = M.conj().T
    return out * 2.0 ** (-1.0 / 3.0)


def op_norm(M) -> float:
    return float(np.linalg.norm(np.asarray(M, dtype=complex), 2))
