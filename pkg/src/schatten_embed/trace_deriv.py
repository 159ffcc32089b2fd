r"""Derivatives of trace functions :math:`F(t) = \operatorname{tr} f(A + tB)`.

* :func:`trace_fun_derivative` evaluates :math:`F^{(k)}(0)/k!` through the
  divided-difference expansion over eigenvalue index tuples of ``A``.
* :func:`fd_oracle` is the independent finite-difference check.
* :func:`pattern_sums4`, :func:`sos_form_values` and :func:`pattern_sums3`
  split the expansion for :math:`|x|^3` (order 4) and :math:`x|x|` (order 3)
  by the sign pattern of the eigenvalues involved and return the
  sum-of-squares certificates for the mixed-sign parts.
* :func:`spline_positivity_check` and :func:`conjecture_probe` sample
  derivative signs for spline (and exponential) trace functions.

Normalisations. With ``g(x) = x|x|`` and ``W`` the sum of
``[l_i1, l_i2, l_i3, l_i4]_g B_i1i2 B_i2i3 B_i3i4 B_i4i1`` over all index
tuples, the fourth derivative of ``tr|A + tB|^3`` at 0 is ``18 W``. The
third derivative of ``tr (A+tB)|A+tB|`` at 0 is ``12 (S_-++ + S_+--)``.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .divdiff import ScalarFunction, divided_difference
from .errors import NotPsd, SignCondition, SingularityTooClose, SmoothnessViolation, ZeroEigenvalue
from .matrix_core import as_hermitian, op_norm

log = logging.getLogger(__name__)

QUARTIC_FACTOR = 18  # F''''(0) = 18 * W for f = |x|^3
CUBIC_FACTOR = 12  # F'''(0) = 12 * (S_-++ + S_+--) for f = x|x|
ZERO_EIG_RTOL = 1e-9
JITTER_RTOL = 2e-7


def eigen_frame(A, B):
    """Eigenvalues of ``A`` (ascending) and ``B`` written in the eigenbasis of ``A``."""
    A = as_hermitian(A)
    B = as_hermitian(B)
    lam, V = np.linalg.eigh(A)
    Bt = V.conj().T @ B @ V
    return lam, 0.5 * (Bt + Bt.conj().T)


def cyclic_products(Bt: np.ndarray, k: int) -> np.ndarray:
    """Tensor ``P[i1..ik] = B[i1,i2] B[i2,i3] ... B[ik,i1]``."""
    n = Bt.shape[0]
    if k == 1:
        return Bt.diagonal().copy()
    T = Bt.copy()  # indices (i1, i_r)
    for r in range(2, k):
        # T[i1, ..., ir] -> T[i1, ..., ir, i_{r+1}]
        T = T[..., None] * Bt.reshape((1,) * (r - 1) + (n, n))
    close = Bt.T.reshape((n,) + (1,) * (k - 2) + (n,))  # B[ik, i1] indexed [i1, ..., ik]
    return T * close


def divided_difference_tensor(f: ScalarFunction, lam, k: int) -> np.ndarray:
    """``D[i1..ik] = [l_i1, ..., l_ik]_f`` computed once per multiset of indices."""
    lam = np.asarray(lam, dtype=float)
    n = lam.size
    D = np.empty((n,) * k)
    cache = {}
    for idx in itertools.combinations_with_replacement(range(n), k):
        cache[idx] = divided_difference(f, lam[list(idx)])
    for idx in itertools.product(range(n), repeat=k):
        D[idx] = cache[tuple(sorted(idx))]
    return D


def _jitter(lam, scale):
    eps = JITTER_RTOL * (1.0 + scale)
    return lam + eps * np.arange(1, lam.size + 1)


def trace_fun_derivative(f: ScalarFunction, A, B, k: int, full_output: bool = False):
    """``F^{(k)}(0) / k!`` for ``F(t) = tr f(A + tB)``, ``1 <= k <= 4``.

    Evaluates ``(1/k) sum [l_i1..l_ik]_{f'} B_i1i2 ... B_iki1`` in the
    eigenbasis of ``A``. If a cluster of coincident eigenvalues sits on a kink
    of ``f'``, the spectrum is shifted by ``eps * (1, 2, ..., n)`` with
    ``eps = 2e-7 (1 + ||A||)`` and the sum re-evaluated once.

    With ``full_output=True`` returns ``(value, info)`` where ``info`` holds
    ``jittered`` and the imaginary residue.
    """
    if not 1 <= k <= 4:
        raise ValueError("k must be in 1..4")
    lam, Bt = eigen_frame(A, B)
    fp = f.differentiated()
    jittered = False
    try:
        D = divided_difference_tensor(fp, lam, k)
    except SmoothnessViolation:
        lam = _jitter(lam, float(np.max(np.abs(lam))))
        jittered = True
        log.info("eigenvalue cluster on a kink; spectrum jittered")
        D = divided_difference_tensor(fp, lam, k)
    total = np.sum(D * cyclic_products(Bt, k)) / k
    value = float(total.real)
    if full_output:
        return value, {"jittered": jittered, "imag": float(total.imag)}
    return value


# --------------------------------------------------------------------------
# finite-difference oracle


def central_weights(k: int) -> tuple[int, list[Fraction]]:
    """Exact weights of the minimal central stencil for the k-th derivative.

    Returns ``(m, w)`` with ``F^{(k)}(0) ~ sum_j w[j+m] F(j h) / h^k`` for
    ``j = -m..m``, accurate to ``O(h^2)``.
    """
    m = (k + 1) // 2
    nodes = list(range(-m, m + 1))
    size = len(nodes)
    # Vandermonde system sum_j w_j j^r = k! delta_rk, r = 0..2m
    M = [[Fraction(j) ** r for j in nodes] + [Fraction(math.factorial(k) if r == k else 0)] for r in range(size)]
    for col in range(size):
        piv = next(r for r in range(col, size) if M[r][col] != 0)
        M[col], M[piv] = M[piv], M[col]
        for r in range(size):
            if r != col and M[r][col] != 0:
                factor = M[r][col] / M[col][col]
                M[r] = [a - factor * b for a, b in zip(M[r], M[col])]
    return m, [M[r][size] / M[r][r] for r in range(size)]


def _trace_fun_float(f, A, B):
    def F(t):
        return float(np.sum(f(np.linalg.eigvalsh(A + t * B))))

    return F


def _trace_fun_mp(f, A, B, dps):
    import mpmath as mp

    real = np.all(A.imag == 0) and np.all(B.imag == 0)
    n = A.shape[0]
    with mp.workdps(dps):
        conv = (lambda z: mp.mpf(float(z.real))) if real else (lambda z: mp.mpc(complex(z)))
        mA = [[conv(A[i, j]) for j in range(n)] for i in range(n)]
        mB = [[conv(B[i, j]) for j in range(n)] for i in range(n)]

    def F(t):
        with mp.workdps(dps):
            t = mp.mpf(t)
            M = mp.matrix([[mA[i][j] + t * mB[i][j] for j in range(n)] for i in range(n)])
            if n == 1:
                ev = [M[0, 0].real if not real else M[0, 0]]
            elif real:
                ev = mp.eigsy(M, eigvals_only=True)
            else:
                ev = mp.eighe(M, eigvals_only=True)
            return sum(f.evaluate_mp(mp.re(e)) for e in ev)

    return F


def default_step(A, B) -> float:
    nb = op_norm(B)
    return 1e-2 * (1.0 + op_norm(A) / nb) if nb > 0 else 1e-2


def oracle_settings(f: ScalarFunction, A, B, k: int) -> tuple[float, int | None]:
    """Step and precision for :func:`fd_oracle` suited to ``f`` and ``k``.

    * Polynomials of degree ``<= k + 3``: the Richardson-corrected central
      stencil is exact, so a large step only reduces roundoff.
    * Kinked ``f``: the step keeps the stencil ``10.5 h ||B||`` clear of the
      nearest knot and is a tenth of the default (truncation dominates for
      ``k <= 2``); orders ``k >= 3`` use 30-digit arithmetic.
    * Otherwise the float default.
    """
    A = as_hermitian(A)
    B = as_hermitian(B)
    nb = op_norm(B)
    if not f.exp and not f.kinks and len(f.poly) - 1 <= k + 3:
        return 0.5 * (1.0 + op_norm(A) / nb) if nb > 0 else 0.5, None
    if f.kinks:
        lam = np.linalg.eigvalsh(A)
        dist = min(float(np.min(np.abs(lam - c))) for c in f.knots)
        dps = 30 if k >= 3 else None
        h = default_step(A, B) * (0.01 if dps else 0.1)
        return min(h, dist / (10.5 * nb)), dps
    return default_step(A, B), None


def fd_oracle(f: ScalarFunction, A, B, k: int, h: float | None = None, dps: int | None = None) -> float:
    """Central finite difference of ``t -> tr f(A + tB)`` at 0, order ``k``.

    Returns the raw derivative ``F^{(k)}(0)`` (not divided by ``k!``). One
    Richardson step combines steps ``h`` and ``h/2``. With ``dps`` set, the
    traces are evaluated in ``mpmath`` at that many digits, which keeps
    higher-order differences accurate.

    Raises
    ------
    SingularityTooClose
        If ``f`` has a kink ``c`` and some eigenvalue of ``A`` lies within
        ``10 h ||B||`` of ``c`` (so ``A + tB - c`` may turn singular near 0).
    """
    if not 1 <= k <= 12:
        raise ValueError("k must be in 1..12")
    A = as_hermitian(A)
    B = as_hermitian(B)
    if h is None:
        h = default_step(A, B) * (0.01 if dps else 1.0)
    nb = op_norm(B)
    if f.kinks:
        lam = np.linalg.eigvalsh(A)
        dist = min(float(np.min(np.abs(lam - c))) for c in f.knots)
        if dist <= 10.0 * h * nb:
            raise SingularityTooClose(f"kink at distance {dist:.3e} <= 10 h ||B|| = {10 * h * nb:.3e}")
    F = _trace_fun_mp(f, A, B, dps) if dps else _trace_fun_float(f, A, B)
    m, w = central_weights(k)

    if dps:
        import mpmath as mp

        with mp.workdps(dps):
            def D(step):
                step = mp.mpf(step)
                acc = mp.mpf(0)
                for j, wj in zip(range(-m, m + 1), w):
                    if wj:
                        acc += mp.mpf(wj.numerator) / wj.denominator * F(j * step)
                return acc / step**k

            return float((4 * D(h / 2) - D(h)) / 3)

    def D(step):
        acc = math.fsum(float(wj) * F(j * step) for j, wj in zip(range(-m, m + 1), w) if wj)
        return acc / step**k

    return (4.0 * D(h / 2) - D(h)) / 3.0


# --------------------------------------------------------------------------
# sign-pattern decomposition, order 4


GROUPS4 = {
    "a": ("----",),
    "b": ("+---", "-+--", "--+-", "---+"),
    "c": ("++--", "-++-", "--++", "+--+"),
    "d": ("+-+-", "-+-+"),
    "e": ("-+++", "+-++", "++-+", "+++-"),
    "f": ("++++",),
}


def g_dd_tensor4(lam: np.ndarray) -> np.ndarray:
    """``[x1,x2,x3,x4]_g`` for g = x|x| over all index tuples, via the closed forms.

    ``lam`` may carry leading batch axes: shape ``(..., n)`` gives ``(..., n, n, n, n)``.
    Only differences of opposite-sign nodes appear in denominators, so
    repeated eigenvalues need no special treatment.
    """
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    batch = lam.shape[:-1]
    e = lambda axis: lam.reshape(batch + tuple(n if a == axis else 1 for a in range(4)))
    x = np.stack(np.broadcast_arrays(e(0), e(1), e(2), e(3)), axis=-1)
    x = np.sort(x, axis=-1)
    x1, x2, x3, x4 = (x[..., i] for i in range(4))
    npos = np.sum(x > 0, axis=-1)
    out = np.zeros(x1.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        one = 2 * x4**2 / ((x4 - x1) * (x4 - x2) * (x4 - x3))
        two = (2 * (x3 + x4) * x1 * x2 - 2 * (x1 + x2) * x3 * x4) / (
            (x3 - x1) * (x3 - x2) * (x4 - x1) * (x4 - x2)
        )
        three = 2 * x1**2 / ((x2 - x1) * (x3 - x1) * (x4 - x1))
    out = np.where(npos == 1, one, out)
    out = np.where(npos == 2, two, out)
    out = np.where(npos == 3, three, out)
    return out


def cyclic_products4(Bt: np.ndarray) -> np.ndarray:
    """Batched ``B_ij B_jk B_kl B_li`` of shape ``(..., n, n, n, n)``."""
    BT = np.swapaxes(Bt, -1, -2)
    return (
        Bt[..., :, :, None, None]
        * Bt[..., None, :, :, None]
        * Bt[..., None, None, :, :]
        * BT[..., :, None, None, :]
    )


def quartic_weighted_total(lam: np.ndarray, Bt: np.ndarray) -> np.ndarray:
    """``W`` for a batch of eigenvalue vectors and matching rotated ``B`` matrices."""
    terms = g_dd_tensor4(lam) * cyclic_products4(Bt)
    return np.sum(terms.real, axis=(-4, -3, -2, -1))


def _check_nonsingular(lam):
    scale = float(np.max(np.abs(lam))) if lam.size else 0.0
    if scale == 0.0 or np.min(np.abs(lam)) <= ZERO_EIG_RTOL * scale:
        raise ZeroEigenvalue("A has an eigenvalue at (or numerically at) zero")


@dataclass
class PatternSums4:
    """Sign-pattern sums of the order-4 expansion for ``|x|^3``.

    ``patterns`` maps each of the 16 sign strings to ``S_pattern``; ``groups``
    collects them into the labels ``a``..``f``; ``total`` is ``W``, the sum
    over all tuples (``= 4 S_+--- + 4 S_++-- + 2 S_+-+- + 4 S_-+++``).
    """

    patterns: dict[str, float]
    groups: dict[str, float]
    total: float
    scale: float

    @property
    def form1_group(self) -> float:
        return self.patterns["+---"] + self.patterns["++--"] + self.patterns["-+++"]

    @property
    def alternating(self) -> float:
        return self.patterns["+-+-"]

    @property
    def decomposition(self) -> float:
        p = self.patterns
        return 4 * p["+---"] + 4 * p["++--"] + 2 * p["+-+-"] + 4 * p["-+++"]

    @property
    def fourth_derivative(self) -> float:
        """``d^4/dt^4 tr|A + tB|^3`` at 0."""
        return QUARTIC_FACTOR * self.total


def pattern_sums4(A, B) -> PatternSums4:
    lam, Bt = eigen_frame(A, B)
    _check_nonsingular(lam)
    terms = (g_dd_tensor4(lam) * cyclic_products4(Bt)).real
    neg = lam < 0
    patterns = {}
    for signs in itertools.product("+-", repeat=4):
        key = "".join(signs)
        masks = [neg if s == "-" else ~neg for s in signs]
        patterns[key] = float(np.sum(terms[np.ix_(*masks)]))
    groups = {label: sum(patterns[p] for p in members) for label, members in GROUPS4.items()}
    return PatternSums4(patterns, groups, float(np.sum(terms)), float(np.sum(np.abs(terms))))


def enumerate_quartic(A, B) -> float:
    """``W`` by direct enumeration with the generic divided difference of ``g``."""
    lam, Bt = eigen_frame(A, B)
    D = divided_difference_tensor(ScalarFunction.signed_square(), lam, 4)
    return float(np.sum(D * cyclic_products(Bt, 4)).real)


@dataclass
class SosCertificate:
    """A value written as ``sum(weight * square)`` with every weight and square >= 0."""

    kind: str
    value: float
    parts: list[tuple[float, float]] = field(default_factory=list)

    @property
    def min_part(self) -> float:
        return min((min(w, s) for w, s in self.parts), default=0.0)


def sos_form_values(A, B) -> tuple[SosCertificate, SosCertificate]:
    """Sum-of-squares forms of ``S_+--- + S_++-- + S_-+++`` and of ``S_+-+-``."""
    lam, Bt = eigen_frame(A, B)
    _check_nonsingular(lam)
    N = np.flatnonzero(lam < 0)
    P = np.flatnonzero(lam > 0)

    parts1 = []
    for i in P:
        for j in N:
            inner = sum(lam[i] * Bt[i, l] * Bt[l, j] / (lam[i] - lam[l]) for l in N)
            inner += sum(lam[j] * Bt[i, l] * Bt[l, j] / (lam[j] - lam[l]) for l in P)
            parts1.append((2.0 / (lam[i] - lam[j]), float(abs(inner) ** 2)))

    parts2 = []
    for same, other, sign in ((N, P, -1.0), (P, N, 1.0)):
        for i1 in same:
            for i2 in same:
                inner = sum(
                    lam[l] * Bt[i1, l] * Bt[l, i2] / ((lam[i1] - lam[l]) * (lam[i2] - lam[l])) for l in other
                )
                parts2.append((2.0 * sign * (lam[i1] + lam[i2]), float(abs(inner) ** 2)))

    form1 = SosCertificate("form1", math.fsum(w * s for w, s in parts1), parts1)
    form2 = SosCertificate("form2", math.fsum(w * s for w, s in parts2), parts2)
    return form1, form2


# --------------------------------------------------------------------------
# order 3


def abs_dd_tensor3(lam: np.ndarray) -> np.ndarray:
    """``[x1,x2,x3]_{|.|}`` over all index triples via the closed forms."""
    lam = np.asarray(lam, dtype=float)
    x = np.stack(np.broadcast_arrays(lam[:, None, None], lam[None, :, None], lam[None, None, :]), axis=-1)
    x = np.sort(x, axis=-1)
    x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
    npos = np.sum(x > 0, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        one = 2 * x3 / ((x3 - x1) * (x3 - x2))
        two = -2 * x1 / ((x2 - x1) * (x3 - x1))
    out = np.where(npos == 1, one, 0.0)
    return np.where(npos == 2, two, out)


def pattern_sums3(A, B, psd_rtol: float = 1e-10) -> SosCertificate:
    """``S_-++ + S_+--`` as a sum of ``|lambda_i| <B w_i, w_i>`` terms.

    The full order-3 expansion with ``|.|`` equals three times this value and
    the third derivative of ``tr (A+tB)|A+tB|`` at 0 is twelve times it.
    """
    lam, Bt = eigen_frame(A, B)
    nb = op_norm(Bt)
    if np.min(np.linalg.eigvalsh(Bt)) < -psd_rtol * nb:
        raise NotPsd("B must be positive semidefinite")
    _check_nonsingular(lam)
    N = np.flatnonzero(lam < 0)
    P = np.flatnonzero(lam > 0)
    parts = []
    for i in N:
        v = Bt[P, i] / (lam[P] - lam[i])
        quad = float((v.conj() @ Bt[np.ix_(P, P)] @ v).real)
        parts.append((-2.0 * lam[i], quad))
    for i in P:
        u = Bt[N, i] / (lam[i] - lam[N])
        quad = float((u.conj() @ Bt[np.ix_(N, N)] @ u).real)
        parts.append((2.0 * lam[i], quad))
    return SosCertificate("third_deriv", math.fsum(w * s for w, s in parts), parts)


def enumerate_cubic(A, B) -> float:
    """``sum [l_i1, l_i2, l_i3]_{|.|} B_i1i2 B_i2i3 B_i3i1`` by generic enumeration."""
    lam, Bt = eigen_frame(A, B)
    D = divided_difference_tensor(ScalarFunction.abs(), lam, 3)
    return float(np.sum(D * cyclic_products(Bt, 3)).real)


def cubic_scale(A, B) -> float:
    lam, Bt = eigen_frame(A, B)
    return float(np.sum(np.abs(abs_dd_tensor3(lam) * cyclic_products(Bt, 3))))


# --------------------------------------------------------------------------
# 2x2, odd p


def two_by_two_terms(A, B, p: int) -> list[float]:
    """Summands of the 2x2 closed form, ``i = 0..(p-1)/2`` (before normalisation)."""
    if p < 1 or p % 2 == 0:
        raise ValueError("p must be an odd positive integer")
    lam, Bt = eigen_frame(A, B)
    if lam.size != 2:
        raise ValueError("closed form is for 2x2 matrices")
    l1, l2 = lam
    if not l1 < 0 < l2:
        raise SignCondition("eigenvalues of A must straddle zero")
    mix = (Bt[0, 0].real * l2 - Bt[1, 1].real * l1) / (l2 - l1)
    off2 = abs(Bt[0, 1]) ** 2
    ratio = -l1 * l2 / (l2 - l1) ** 2
    terms = []
    for i in range((p - 1) // 2 + 1):
        j = p - 1 - 2 * i
        coef = math.factorial(p - 1) / (math.factorial(j) * math.factorial(i) * math.factorial(i + 1))
        terms.append(coef * mix**j * off2 ** (i + 1) * ratio**i)
    return terms


def two_by_two_odd_p(A, B, p: int) -> float:
    """``d^{p+1}/dt^{p+1} tr|A + tB|^p`` at 0 for 2x2 ``A`` with ``l1 < 0 < l2``.

    The closed-form sum is scaled by ``2 p (p+1)! / (l2 - l1)``.
    """
    if p not in (3, 5, 7):
        raise ValueError("p must be 3, 5 or 7")
    l1, l2 = np.linalg.eigvalsh(as_hermitian(A))
    return 2 * p * math.factorial(p + 1) / (l2 - l1) * math.fsum(two_by_two_terms(A, B, p))


# --------------------------------------------------------------------------
# sampled positivity


@dataclass
class PositivityReport:
    order: int
    min_value: float | None
    argmin_t: float | None
    min_normalized: float | None
    evaluated: int
    skipped: int
    tol: float = 1e-6
    high_precision: int = 0

    @property
    def passed(self) -> bool:
        return self.min_normalized is None or self.min_normalized >= -self.tol


def derivative_scale(f: ScalarFunction, A, B, order: int) -> tuple[float, float]:
    """Natural size of the ``order``-th derivative and the kink distance.

    For kink terms of degree ``order - 1`` the derivative of the trace function
    is of size ``n (order-1)! w ||B||^order / dist``, where ``dist`` is the
    distance from the spectrum of ``A`` to the nearest knot.
    """
    A = as_hermitian(A)
    n = A.shape[0]
    nb = op_norm(B)
    lam = np.linalg.eigvalsh(A)
    dist = min((float(np.min(np.abs(lam - c))) for c in f.knots), default=math.inf)
    kink = sum(abs(t.weight) * math.factorial(order - 1) for t in f.kinks)
    poly = sum(abs(a) for a in f.poly) * max(1.0, float(np.max(np.abs(lam)))) ** max(len(f.poly) - 1, 0)
    scale = n * nb**order * (kink / dist + poly) if dist > 0 else math.inf
    return (scale if scale > 0 else 1.0), dist


def fd_roundoff(f: ScalarFunction, A, k: int, h: float) -> float:
    """Bound on the float roundoff of :func:`fd_oracle` at step ``h``."""
    m, w = central_weights(k)
    size = float(np.sum(np.abs(f(np.linalg.eigvalsh(as_hermitian(A)))))) + 1.0
    weights = sum(abs(float(x)) for x in w)
    # Richardson: (4 D(h/2) - D(h)) / 3
    return float(np.finfo(float).eps * size * weights * (4 * 2**k + 1) / 3 / h**k)


def spline_positivity_check(
    f: ScalarFunction,
    A,
    B,
    grid,
    order: int,
    h: float | None = None,
    min_step: float | None = None,
    tol: float = 1e-6,
    dps: int = 30,
) -> PositivityReport:
    """Smallest finite-difference ``order``-th derivative of ``tr f(A + tB)`` on a grid.

    ``grid`` is an array of t values or a ``(t_min, t_max, count)`` triple. The
    step at each point is shrunk so the stencil stays clear of kinks; points
    needing a step below ``min_step`` are skipped and counted. Points whose
    float roundoff bound exceeds ``1e-3 tol`` of the derivative scale are
    evaluated with ``dps`` digits.
    """
    if order not in (3, 4):
        raise ValueError("order must be 3 or 4")
    A = as_hermitian(A)
    B = as_hermitian(B)
    nb = op_norm(B)
    if order == 3 and np.min(np.linalg.eigvalsh(B)) < -1e-10 * nb:
        raise NotPsd("order-3 check needs B positive semidefinite")
    if isinstance(grid, tuple) and len(grid) == 3:
        grid = np.linspace(*grid)
    if h is None:
        h0 = oracle_settings(f, A, B, order)[0] if not f.kinks else default_step(A, B)
    else:
        h0 = h
    if min_step is None:
        min_step = 0.05 * h0

    best = None
    evaluated = skipped = promoted = 0
    for t in np.asarray(grid, dtype=float):
        At = A + t * B
        scale, dist = derivative_scale(f, At, B, order)
        step = h0 if not f.kinks else min(h0, dist / (10.5 * nb))
        if step < min_step:
            skipped += 1
            continue
        precise = fd_roundoff(f, At, order, step) > 1e-3 * tol * scale
        promoted += precise
        value = fd_oracle(f, At, B, order, h=step, dps=dps if precise else None)
        evaluated += 1
        normalized = value / scale
        if best is None or normalized < best[2]:
            best = (value, float(t), normalized)
    if best is None:
        return PositivityReport(order, None, None, None, 0, skipped, tol, promoted)
    return PositivityReport(order, best[0], best[1], best[2], evaluated, skipped, tol, promoted)


@dataclass
class ProbeReport:
    k: int
    family: str
    trials: int
    min_normalized: float | None = None
    argmin: dict | None = None
    values: list[float] = field(default_factory=list)


def conjecture_probe(
    k: int,
    trials: int,
    seed: int,
    family: str = "spline",
    n_max: int = 3,
    dps: int = 40,
) -> ProbeReport:
    """Random search for a negative k-th derivative of ``tr f(A + tB)``.

    ``family="spline"`` uses ``f = sum_i w_i (t - c_i)^{k-1} sgn(t - c_i)``
    (non-negative k-th derivative), ``family="exp"`` uses ``exp``. For odd k,
    ``B`` is drawn positive semidefinite. Nothing is asserted; the report
    carries the smallest normalised derivative and the instance attaining it.
    """
    from .sampling import random_hermitian, random_psd

    if not 2 <= k <= 7:
        raise ValueError("k must be in 2..7")
    report = ProbeReport(k, family, trials)
    for trial in range(trials):
        rng = np.random.default_rng(seed + trial)
        n = int(rng.integers(2, n_max + 1))
        A = random_hermitian(rng, n)
        B = random_psd(rng, n) if k % 2 else random_hermitian(rng, n)
        nb = op_norm(B)
        lam = np.linalg.eigvalsh(A)
        if family == "exp":
            f = ScalarFunction.exponential()
            scale = nb**k * float(np.sum(np.exp(lam)))
            step = 1e-3 * (1.0 + op_norm(A) / nb)
        elif family == "spline":
            count = int(rng.integers(1, 4))
            span = (lam[0] - 1.0, lam[-1] + 1.0)
            knots = []
            while len(knots) < count:
                c = float(rng.uniform(*span))
                if np.min(np.abs(lam - c)) > 0.05 * (1 + nb) and all(abs(c - o) > 1e-3 for o in knots):
                    knots.append(c)
            knots.sort()
            f = ScalarFunction.truncated_power(k, knots, rng.uniform(0.1, 1.0, size=count))
            scale, dist = derivative_scale(f, A, B, k)
            step = min(1e-3 * (1.0 + op_norm(A) / nb), dist / (11.0 * nb))
        else:
            raise ValueError(f"unknown family {family!r}")
        value = fd_oracle(f, A, B, k, h=step, dps=dps)
        normalized = value / scale
        report.values.append(normalized)
        if report.min_normalized is None or normalized < report.min_normalized:
            report.min_normalized = normalized
            report.argmin = {
                "trial": trial,
                "seed": seed + trial,
                "A": A,
                "B": B,
                "function": f.label,
                "knots": list(f.knots),
                "value": value,
            }
    return report
