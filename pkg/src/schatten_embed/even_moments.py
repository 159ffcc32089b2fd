r"""Even-p embedding criteria through trigonometric moments.

For even ``p`` the norm ``||xA + yB||_p^p`` is a homogeneous polynomial, so a
representing measure ``nu`` on ``[0, pi)`` exists iff its low Fourier
coefficients

.. math:: \hat\mu(k) = \sum_j m_j e^{2 i k \theta_j}

(computed from traces of ``A`` and ``B``) form a positive semidefinite Toeplitz
matrix. This module evaluates those coefficients for ``p = 2`` and ``p = 4``,
recovers a nonnegative measure from them, checks the sum-of-squares identity
behind positivity for ``p = 4``, and reproduces the moment obstruction for the
3-space of real symmetric 2x2 matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.optimize

from .embed_l3 import CircleMeasure
from .errors import InvalidP, NotPsd
from .matrix_core import as_hermitian

PSD_RTOL = 1e-10
FEASIBLE_RTOL = 1e-12
NNLS_GRID = 721
PRUNE_RTOL = 1e-12
RECOVERY_RTOL = 1e-9


@dataclass(frozen=True)
class MomentTriple:
    """Fourier coefficients ``m0`` (real), ``m1``, ``m2`` of a measure on [0, pi)."""

    m0: float
    m1: complex
    m2: complex = 0j

    def as_array(self) -> np.ndarray:
        return np.array([self.m0, self.m1, self.m2], dtype=complex)


@dataclass
class ToeplitzReport:
    matrix: np.ndarray
    min_eigenvalue: float
    psd: bool


def _tr(M) -> float:
    return float(np.trace(M).real)


def moments_of(nu: CircleMeasure, order: int = 2) -> np.ndarray:
    """``[sum m e^{2ik theta}]_{k=0..order}`` for a circle measure."""
    k = np.arange(order + 1)
    return np.exp(2j * np.outer(k, nu.angles)) @ nu.masses


# --------------------------------------------------------------------------
# p = 2


def p2_moments(A, B):
    """``(m0, m1, feasible, nu)`` for ``p = 2``.

    ``nu`` is the two-atom measure obtained by diagonalising the Gram form
    ``x^2 tr A^2 + 2xy tr AB + y^2 tr B^2``; it reproduces ``||xA + yB||_2^2``.
    """
    A = as_hermitian(A)
    B = as_hermitian(B)
    a, b, c = _tr(A @ A), _tr(A @ B), _tr(B @ B)
    m0 = a + c
    m1 = complex(a - c, 2.0 * b)
    feasible = abs(m1) <= m0 + FEASIBLE_RTOL * m0
    w, U = np.linalg.eigh(np.array([[a, b], [b, c]]))
    w = np.clip(w, 0.0, None)
    keep = w > PRUNE_RTOL * max(m0, 1e-300)
    angles = np.arctan2(U[1], U[0])[keep] % math.pi
    nu = CircleMeasure(angles, w[keep])
    return m0, m1, bool(feasible), nu


# --------------------------------------------------------------------------
# p = 4


def p4_moments(A, B) -> MomentTriple:
    A = as_hermitian(A)
    B = as_hermitian(B)
    A2, B2 = A @ A, B @ B
    a4 = _tr(A2 @ A2)
    b4 = _tr(B2 @ B2)
    a3b = _tr(A2 @ A @ B)
    ab3 = _tr(A @ B2 @ B)
    mixed = 2.0 * _tr(A2 @ B2) + _tr(A @ B @ A @ B)
    m0 = a4 + 2.0 / 3.0 * mixed + b4
    m1 = complex(a4 - b4, 2.0 * (a3b + ab3))
    m2 = complex(a4 + b4 - 2.0 * mixed, 4.0 * (a3b - ab3))
    return MomentTriple(m0, m1, m2)


def toeplitz_matrix(m: MomentTriple) -> np.ndarray:
    m0, m1, m2 = m.m0, complex(m.m1), complex(m.m2)
    return np.array(
        [
            [m0, m1, m2],
            [m1.conjugate(), m0, m1],
            [m2.conjugate(), m1.conjugate(), m0],
        ],
        dtype=complex,
    )


def toeplitz_check(m: MomentTriple) -> ToeplitzReport:
    T = toeplitz_matrix(m)
    lo = float(np.linalg.eigvalsh(T)[0])
    return ToeplitzReport(T, lo, lo >= -PSD_RTOL * abs(m.m0))


def _masses_for(psi, target):
    """Nonnegative masses at frequencies ``psi`` best matching ``target`` moments."""
    k = np.arange(target.size)
    V = np.exp(1j * np.outer(k, psi))
    M = np.vstack([V.real, V.imag])
    rhs = np.concatenate([target.real, target.imag])
    c, _ = scipy.optimize.nnls(M, rhs)
    return c


def _recover_exact(target: np.ndarray, scale: float):
    """Atoms from the Toeplitz structure: one atom split off a positive definite
    matrix, then the kernel polynomial of the rank-deficient remainder."""
    T = toeplitz_matrix(MomentTriple(target[0].real, target[1], target[2]))
    w, V = np.linalg.eigh(T)
    tol = 1e-11 * scale
    psi: list[float] = []
    if w[0] > tol:
        # split an atom at psi = 0 (mass 1/(v^* T^{-1} v)); the rest has rank 2
        v = np.ones(3, dtype=complex)
        c0 = 1.0 / float(np.real(v.conj() @ np.linalg.solve(T, v)))
        T = T - c0 * np.outer(v, v.conj())
        psi.append(0.0)
        w, V = np.linalg.eigh(T)
    rank = int(np.sum(w > tol))
    if rank == 0:
        return np.empty(0), np.empty(0)
    if rank == 1:
        psi.append(float(np.angle(T[0, 1])) if abs(T[0, 1]) > tol else 0.0)
    else:
        # T = sum c conj(w) w^T with w = (1, z, z^2): kernel q gives sum q_k z^k = 0
        q = V[:, 0]
        roots = np.roots(q[::-1]) if abs(q[2]) > 1e-14 else np.roots(q[1::-1])
        psi += [float(np.angle(z)) for z in roots]
    psi_arr = np.asarray(psi)
    masses = _masses_for(psi_arr, target)
    return psi_arr, masses


def _recover_nnls(target: np.ndarray, scale: float, grid: int):
    psi = np.arange(grid) * 2.0 * math.pi / grid
    c = _masses_for(psi, target)
    keep = c > PRUNE_RTOL * scale
    psi, c = psi[keep], c[keep]
    if psi.size == 0:
        return psi, c
    k = np.arange(target.size)

    def resid(x):
        n = psi.size
        V = np.exp(1j * np.outer(k, x[:n])) @ x[n:]
        return np.concatenate([(V - target).real, (V - target).imag]) / scale

    x0 = np.concatenate([psi, c])
    lower = np.concatenate([np.full(psi.size, -np.inf), np.zeros(psi.size)])
    sol = scipy.optimize.least_squares(resid, x0, bounds=(lower, np.inf), xtol=1e-15, ftol=1e-15, gtol=1e-15)
    return sol.x[: psi.size], sol.x[psi.size :]


def recover_trig_measure(m: MomentTriple, method: str = "exact", grid: int = NNLS_GRID) -> CircleMeasure:
    """Nonnegative measure on [0, pi) with the prescribed moments ``m0, m1, m2``.

    ``method="exact"`` returns at most three atoms from the Toeplitz structure;
    ``method="nnls"`` fits masses on a grid of ``grid`` angles and then refines
    the surviving atoms by bounded least squares.

    Raises
    ------
    NotPsd
        If the Toeplitz matrix is not positive semidefinite, or if the recovered
        atoms miss the moments by more than ``1e-9 m0``.
    """
    rep = toeplitz_check(m)
    if not rep.psd:
        raise NotPsd(f"Toeplitz matrix has eigenvalue {rep.min_eigenvalue:.3e}")
    target = m.as_array()
    scale = max(abs(m.m0), 1e-300)
    if m.m0 <= 0.0:
        return CircleMeasure(np.empty(0), np.empty(0))
    if method == "exact":
        psi, c = _recover_exact(target, scale)
    elif method == "nnls":
        psi, c = _recover_nnls(target, scale, grid)
    else:
        raise ValueError(f"unknown method {method!r}")
    keep = c > PRUNE_RTOL * scale
    nu = CircleMeasure((psi[keep] / 2.0) % math.pi, c[keep])
    err = float(np.max(np.abs(moments_of(nu) - target)))
    nu.info["moment_residual"] = err
    if err > RECOVERY_RTOL * scale:
        raise NotPsd(f"recovered atoms miss the moments by {err:.3e} (m0 = {m.m0:.3e})")
    return nu


def p4_verify(A, B, nu: CircleMeasure, directions: int = 180) -> float:
    """Largest relative error of ``sum m |<v, u>|^4`` against ``||v1 A + v2 B||_4^4``."""
    A = as_hermitian(A)
    B = as_hermitian(B)
    phi = np.arange(directions) * math.pi / directions
    mats = np.cos(phi)[:, None, None] * A + np.sin(phi)[:, None, None] * B
    exact = np.sum(np.linalg.eigvalsh(mats) ** 4, axis=-1)
    approx = np.sum(nu.masses[None, :] * np.cos(phi[:, None] - nu.angles[None, :]) ** 4, axis=1)
    floor = 1e-10 * max(float(np.max(exact)), 1e-300)
    return float(np.max(np.abs(approx - exact) / np.maximum(exact, floor)))


# --------------------------------------------------------------------------
# sum-of-squares identity


def sos_identity_eval(A, B, theta1: float, theta2: float):
    """Both sides of the identity showing ``mu(|(z - e1)(z - e2)|^2) >= 0`` for ``p = 4``.

    Returns ``(lhs, rhs, commutator_term)``: ``lhs`` is the trigonometric
    combination of ``tr A^4, tr A^3 B, (2 tr A^2 B^2 + tr ABAB)/3, tr AB^3,
    tr B^4``; ``rhs`` is a squared Hilbert-Schmidt norm plus
    ``commutator_term = |e1 - e2|^2 / 3 * ||AB - BA||_2^2``.
    """
    A = as_hermitian(A)
    B = as_hermitian(B)
    e1, e2 = np.exp(1j * theta1), np.exp(1j * theta2)
    e12 = e1 * e2
    A2, B2 = A @ A, B @ B
    a4 = np.trace(A2 @ A2).real
    b4 = np.trace(B2 @ B2).real
    a3b = np.trace(A2 @ A @ B).real
    ab3 = np.trace(A @ B2 @ B).real
    mixed = (2.0 * np.trace(A2 @ B2).real + np.trace(A @ B @ A @ B).real) / 3.0

    c1, c2 = np.conj(e1), np.conj(e2)
    lhs = (
        (2 - e1 - c1) * (2 - e2 - c2) * a4
        + 4j * (e1 + e2 - e12 - c1 - c2 + np.conj(e12)) * a3b
        + (8 + 2 * (e1 * c2 + e2 * c1) - 6 * (e12 + np.conj(e12))) * mixed
        + 4j * (e1 + e2 + e12 - c1 - c2 - np.conj(e12)) * ab3
        + (2 + e1 + c1) * (2 + e2 + c2) * b4
    )
    X = (e1 - 1) * (e2 - 1) * A2 - 1j * (e12 - 1) * (A @ B + B @ A) - (e1 + 1) * (e2 + 1) * B2
    C = A @ B - B @ A
    comm = abs(e1 - e2) ** 2 / 3.0 * float(np.sum(np.abs(C) ** 2))
    rhs = float(np.sum(np.abs(X) ** 2)) + comm
    return float(lhs.real), rhs, comm


def moment_form(m: MomentTriple, theta1: float, theta2: float) -> float:
    """The same quadratic form written through the Fourier coefficients."""
    e1, e2 = np.exp(1j * theta1), np.exp(1j * theta2)
    m1, m2 = complex(m.m1), complex(m.m2)
    val = (
        (4 + e1 * np.conj(e2) + e2 * np.conj(e1)) * m.m0
        - 2 * (np.conj(e1) + np.conj(e2)) * m1
        - 2 * (e1 + e2) * np.conj(m1)
        + np.conj(e1 * e2) * m2
        + e1 * e2 * np.conj(m2)
    )
    return float(val.real)


# --------------------------------------------------------------------------
# 3-space obstruction


def _wallis(k: int) -> Fraction:
    """Average of ``cos^k`` over a full period (``k`` even)."""
    return Fraction(math.comb(k, k // 2), 2**k)


def refute_3d_moments(p: int):
    """Moments forced on a representing measure of real symmetric 2x2 matrices in S_p.

    Matching the ``r^0, r^2, r^4`` coefficients of ``|z + r|^p + |z - r|^p``
    against ``int |r w + z t3|^p dmu`` averaged over the rotation angle gives
    ``mu(t3^p)``, ``mu(t3^{p-2}(1 - t3^2))`` and ``mu(t3^{p-4}(1 - t3^2)^2)``.
    The returned ``combo`` is ``mu((2 t3^2 - 1)^2 t3^{p-4})``; a negative value
    rules out a nonnegative ``mu``.
    """
    if not isinstance(p, (int, np.integer)) or p < 4 or p % 2:
        raise InvalidP(f"p must be an even integer >= 4, got {p!r}")
    p = int(p)
    vals = []
    for k in (0, 2, 4):
        lhs = 2 * math.comb(p, k)
        # int w^k = (1 - t3^2)^{k/2} * wallis(k) after averaging the angle
        vals.append(Fraction(lhs) / (math.comb(p, k) * _wallis(k)))
    mu_p, mu_mid, mu_low = vals
    # (2t^2 - 1)^2 = t^4 - 2 t^2 (1 - t^2) + (1 - t^2)^2
    combo = mu_p - 2 * mu_mid + mu_low
    return mu_p, mu_mid, mu_low, combo


def fibonacci_sphere(count: int) -> np.ndarray:
    i = np.arange(count) + 0.5
    z = 1.0 - 2.0 * i / count
    r = np.sqrt(1.0 - z * z)
    phi = math.pi * (3.0 - math.sqrt(5.0)) * i
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def refute_3d_nnls(p: int = 4, points: int = 2000):
    """Best nonnegative fit of the three forced moments on an S^2 grid.

    Returns ``(residual, masses)``; a residual bounded away from zero shows that
    no nonnegative discrete measure on the grid satisfies the system.
    """
    mu_p, mu_mid, mu_low, _ = refute_3d_moments(p)
    t3 = fibonacci_sphere(points)[:, 2]
    s = 1.0 - t3**2
    M = np.vstack([t3**p, t3 ** (p - 2) * s, t3 ** (p - 4) * s**2])
    b = np.array([float(mu_p), float(mu_mid), float(mu_low)])
    x, resid = scipy.optimize.nnls(M, b)
    return float(resid), x
