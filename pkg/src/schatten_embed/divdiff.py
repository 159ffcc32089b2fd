r"""Divided differences.

A :class:`ScalarFunction` is a polynomial plus a non-negative combination of
kink terms :math:`|t-c|^q \operatorname{sgn}(t-c)^s`. This covers monomials,
:math:`|x|^3`, :math:`x|x|`, :math:`|x|`, the cubic and quadratic splines
used in the positivity checks, and the truncated powers of the
higher-order probes. An exponential kind is provided for the
completely-monotone probe.

:func:`divided_difference` expands f as a local polynomial when no knot is
near the nodes and otherwise evaluates the recursive definition on sorted
nodes. Nodes closer than ``1e-7 * (1 + max|x|)`` are treated as coincident and
handled through derivatives (the Hermite table), so the value is continuous
across confluence and exactly symmetric under permutations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import Overflow, SignMismatch, SmoothnessViolation

MAX_NODES = 8
CONFLUENCE_RTOL = 1e-7


@dataclass(frozen=True)
class KinkTerm:
    """``weight * |t - c|**q * sgn(t - c)**s`` with integer ``q >= 1`` and ``s`` in {0, 1}."""

    c: float
    q: int
    s: int
    weight: float = 1.0

    @property
    def is_polynomial(self) -> bool:
        return (self.q + self.s) % 2 == 0

    @property
    def smoothness(self) -> int:
        """Largest ``j`` such that the term is ``C^j`` at ``c``."""
        return self.q - 1

    def derivative(self, x, order: int):
        u = np.asarray(x, dtype=float) - self.c
        q, s = self.q, self.s
        if self.is_polynomial:
            # |u|^q sgn(u)^s == u^q
            if order > q:
                return np.zeros_like(u)
            return self.weight * math.perm(q, order) * u ** (q - order)
        if order > q:
            return np.zeros_like(u)
        coef = self.weight * math.perm(q, order)
        au = np.abs(u)
        sg = np.sign(u)
        par = (s + order) % 2
        if order == q:
            # piecewise constant; value at the kink itself is the mean
            return coef * (sg if par else np.ones_like(u))
        return coef * au ** (q - order) * (sg if par else 1.0)

    def derivative_mp(self, x, order: int):
        import mpmath as mp

        u = x - self.c
        q, s = self.q, self.s
        if order > q:
            return mp.mpf(0)
        coef = self.weight * math.perm(q, order)
        if self.is_polynomial:
            return coef * u ** (q - order)
        par = (s + order) % 2
        sg = mp.sign(u) if par else 1
        if order == q:
            return coef * sg
        return coef * abs(u) ** (q - order) * sg

    def differentiated(self) -> KinkTerm | None:
        if self.is_polynomial:
            raise ValueError("polynomial-like terms are folded into the polynomial part")
        if self.q == 1:
            return None  # derivative is a step; not representable as a kink term
        return KinkTerm(self.c, self.q - 1, (self.s + 1) % 2, self.weight * self.q)


@dataclass(frozen=True)
class ScalarFunction:
    """Polynomial part (ascending coefficients) plus kink terms, or ``exp``.

    Use the constructors :meth:`monomial`, :meth:`abs_pow`, :meth:`signed_square`,
    :meth:`abs`, :meth:`spline3`, :meth:`spline2`, :meth:`truncated_power`,
    :meth:`exponential`.
    """

    poly: tuple[float, ...] = ()
    kinks: tuple[KinkTerm, ...] = ()
    exp: bool = False
    label: str = field(default="", compare=False)

    # constructors -----------------------------------------------------
    @classmethod
    def monomial(cls, m: int) -> ScalarFunction:
        if m < 0:
            raise ValueError("monomial degree must be >= 0")
        return cls(poly=(0.0,) * m + (1.0,), label=f"x^{m}")

    @classmethod
    def abs_pow(cls, q: int, c: float = 0.0) -> ScalarFunction:
        return cls._from_terms((), [KinkTerm(c, q, 0)], label=f"|x|^{q}")

    @classmethod
    def abs_pow3(cls) -> ScalarFunction:
        return cls.abs_pow(3)

    @classmethod
    def signed_square(cls) -> ScalarFunction:
        return cls._from_terms((), [KinkTerm(0.0, 2, 1)], label="x|x|")

    @classmethod
    def abs(cls) -> ScalarFunction:
        return cls._from_terms((), [KinkTerm(0.0, 1, 0)], label="|x|")

    @classmethod
    def spline3(cls, knots, weights, poly=(0.0, 0.0, 0.0, 0.0)) -> ScalarFunction:
        """``p(t) + sum_i w_i |t - c_i|^3`` with ``deg p <= 3``."""
        knots, weights = _check_spline(knots, weights)
        if len(poly) > 4:
            raise ValueError("spline3 polynomial part must have degree <= 3")
        terms = [KinkTerm(c, 3, 0, w) for c, w in zip(knots, weights)]
        return cls._from_terms(tuple(poly), terms, label="spline3")

    @classmethod
    def spline2(cls, knots, weights, poly=(0.0, 0.0, 0.0)) -> ScalarFunction:
        """``p(t) + sum_i w_i |t - c_i| (t - c_i)`` with ``deg p <= 2``."""
        knots, weights = _check_spline(knots, weights)
        if len(poly) > 3:
            raise ValueError("spline2 polynomial part must have degree <= 2")
        terms = [KinkTerm(c, 2, 1, w) for c, w in zip(knots, weights)]
        return cls._from_terms(tuple(poly), terms, label="spline2")

    @classmethod
    def truncated_power(cls, k: int, knots, weights) -> ScalarFunction:
        """``sum_i w_i (t - c_i)^{k-1} sgn(t - c_i)``, whose k-th derivative is
        ``sum_i 2 (k-1)! w_i delta_{c_i}``."""
        if k < 2:
            raise ValueError("truncated power needs k >= 2")
        knots, weights = _check_spline(knots, weights)
        terms = [KinkTerm(c, k - 1, k % 2, w) for c, w in zip(knots, weights)]
        return cls._from_terms((), terms, label=f"tpow{k}")

    @classmethod
    def exponential(cls) -> ScalarFunction:
        return cls(exp=True, label="exp")

    @classmethod
    def _from_terms(cls, poly, terms, label="") -> ScalarFunction:
        coeffs = list(poly)
        kept = []
        for term in terms:
            if term.weight == 0:
                continue
            if term.is_polynomial:
                # weight * (t - c)^q folded into the polynomial part
                expanded = np.polynomial.polynomial.polyfromroots([term.c] * term.q) * term.weight
                if len(expanded) > len(coeffs):
                    coeffs += [0.0] * (len(expanded) - len(coeffs))
                for i, a in enumerate(expanded):
                    coeffs[i] += float(a)
            else:
                kept.append(term)
        return cls(poly=tuple(float(a) for a in coeffs), kinks=tuple(kept), label=label)

    # evaluation -------------------------------------------------------
    def __call__(self, x):
        return self.derivative(x, 0)

    def derivative(self, x, order: int = 0):
        x = np.asarray(x, dtype=float)
        if self.exp:
            return np.exp(x)
        out = np.zeros_like(x)
        if self.poly:
            c = np.asarray(self.poly, dtype=float)
            for _ in range(order):
                c = np.polynomial.polynomial.polyder(c) if len(c) > 1 else np.zeros(1)
            out = out + np.polynomial.polynomial.polyval(x, c)
        for term in self.kinks:
            out = out + term.derivative(x, order)
        return out

    def evaluate_mp(self, x):
        """Value at an ``mpmath`` number (used by the high-precision oracle)."""
        import mpmath as mp

        if self.exp:
            return mp.exp(x)
        out = mp.mpf(0)
        for i, a in enumerate(self.poly):
            if a:
                out += a * x ** i
        for term in self.kinks:
            out += term.derivative_mp(x, 0)
        return out

    def differentiated(self) -> ScalarFunction:
        """The derivative ``f'`` as a :class:`ScalarFunction`."""
        if self.exp:
            return self
        poly = tuple(float(a) for a in np.polynomial.polynomial.polyder(self.poly)) if len(self.poly) > 1 else ()
        terms = []
        for term in self.kinks:
            d = term.differentiated()
            if d is None:
                raise ValueError(f"{self.label or 'f'} has a derivative with a jump; not representable")
            terms.append(d)
        return ScalarFunction._from_terms(poly, terms, label=f"({self.label})'")

    def scaled(self, factor: float) -> ScalarFunction:
        if self.exp:
            raise ValueError("cannot rescale the exponential kind")
        return ScalarFunction(
            poly=tuple(factor * a for a in self.poly),
            kinks=tuple(KinkTerm(t.c, t.q, t.s, factor * t.weight) for t in self.kinks),
            label=self.label,
        )

    @property
    def knots(self) -> tuple[float, ...]:
        return tuple(sorted({t.c for t in self.kinks}))

    def smoothness_at(self, x: float, tol: float) -> int:
        """Smoothness class ``C^j`` of f near ``x`` (large number if smooth)."""
        j = 10**6
        for term in self.kinks:
            if abs(x - term.c) <= tol:
                j = min(j, term.smoothness)
        return j


def _check_spline(knots, weights):
    knots = tuple(float(c) for c in knots)
    weights = tuple(float(w) for w in weights)
    if len(knots) != len(weights):
        raise ValueError("knots and weights must have equal length")
    if any(b <= a for a, b in zip(knots, knots[1:])):
        raise ValueError("knots must be strictly increasing")
    return knots, weights


def confluence_tol(nodes) -> float:
    return CONFLUENCE_RTOL * (1.0 + float(np.max(np.abs(nodes))))


def divided_difference(f: ScalarFunction, nodes) -> float:
    """``[x_0, ..., x_k]_f`` with continuous extension to repeated nodes.

    Raises
    ------
    SmoothnessViolation
        If ``m`` nodes coincide at a point where f is not ``C^{m-1}``.
    Overflow
        If the result is not finite.
    """
    z = np.sort(np.asarray(nodes, dtype=float).ravel())
    k = z.size - 1
    if k < 0 or k + 1 > MAX_NODES:
        raise ValueError(f"need 1..{MAX_NODES} nodes, got {k + 1}")
    if not np.all(np.isfinite(z)):
        raise ValueError("nodes must be finite")
    tol = confluence_tol(z)

    # cluster id per node: consecutive sorted nodes closer than tol share a cluster
    cluster = np.concatenate([[0], np.cumsum(np.diff(z) > tol)])
    for cid in np.unique(cluster):
        members = z[cluster == cid]
        m = members.size
        if m > 1 and f.smoothness_at(float(members.mean()), tol) < m - 1:
            raise SmoothnessViolation(
                f"{m} coincident nodes near {members.mean():.6g} need C^{m - 1}; "
                f"f is only C^{f.smoothness_at(float(members.mean()), tol)} there"
            )

    local = _local_polynomial_dd(f, z, tol)
    if local is not None:
        return local

    # Newton table on sorted nodes; table[i] holds [z_i, ..., z_{i+j}]
    table = [float(v) for v in f.derivative(z, 0)]
    for j in range(1, k + 1):
        new = []
        for i in range(k + 1 - j):
            if cluster[i] == cluster[i + j]:
                centre = float(z[i : i + j + 1].mean())
                new.append(float(f.derivative(centre, j)) / math.factorial(j))
            else:
                new.append((table[i + 1] - table[i]) / (z[i + j] - z[i]))
        table = new
    value = table[0]
    if not math.isfinite(value):
        raise Overflow(f"divided difference overflowed at nodes {z.tolist()}")
    return value


def _local_polynomial_dd(f: ScalarFunction, z, tol):
    """Divided difference when no knot lies within ``tol`` of the node hull.

    On such a hull every kink term is the polynomial ``sigma^(q+s) (x - c)^q``
    (``sigma`` the side of the knot), so the value is a sum of complete
    homogeneous polynomials of shifted nodes. The Newton table would instead
    cancel badly for clustered nodes. Returns None if a knot is too close.
    """
    if f.exp:
        return None
    lo, hi = float(z[0]) - tol, float(z[-1]) + tol
    if any(lo <= t.c <= hi for t in f.kinks):
        return None
    value = math.fsum(a * dd_monomial(z, i) for i, a in enumerate(f.poly) if a)
    terms = []
    for t in f.kinks:
        sigma = 1.0 if z[0] > t.c else -1.0
        terms.append(t.weight * sigma ** (t.q + t.s) * dd_monomial(z - t.c, t.q))
    value += math.fsum(terms)
    if not math.isfinite(value):
        raise Overflow(f"divided difference overflowed at nodes {z.tolist()}")
    return value


def dd_g_closed(nodes, signs=None) -> float:
    """Closed form of ``[x_1, x_2, x_3, x_4]_g`` for ``g(x) = x|x|``.

    Nodes must be non-zero. ``signs`` (a string or sequence of ``'+'``/``'-'``)
    is optional and, when given, must agree with the node signs.
    """
    x = _signed_nodes(nodes, signs, 4)
    a = sorted(v for v in x if v < 0)
    b = sorted(v for v in x if v > 0)
    npos = len(b)
    if npos in (0, 4):
        return 0.0
    if npos == 1:
        (b1,) = b
        return 2 * b1**2 / ((b1 - a[0]) * (b1 - a[1]) * (b1 - a[2]))
    if npos == 2:
        a1, a2 = a
        b1, b2 = b
        num = 2 * (b1 + b2) * a1 * a2 - 2 * (a1 + a2) * b1 * b2
        return num / ((b1 - a1) * (b1 - a2) * (b2 - a1) * (b2 - a2))
    (a1,) = a
    return 2 * a1**2 / ((b[0] - a1) * (b[1] - a1) * (b[2] - a1))


def dd_abs_closed(nodes, signs=None) -> float:
    """Closed form of ``[x_1, x_2, x_3]_{|.|}`` for non-zero nodes."""
    x = _signed_nodes(nodes, signs, 3)
    a = [v for v in x if v < 0]
    b = [v for v in x if v > 0]
    if len(b) in (0, 3):
        return 0.0
    if len(b) == 1:
        (b1,) = b
        return 2 * b1 / ((b1 - a[0]) * (b1 - a[1]))
    (a1,) = a
    return -2 * a1 / ((b[0] - a1) * (b[1] - a1))


def _signed_nodes(nodes, signs, count):
    x = [float(v) for v in np.asarray(nodes, dtype=float).ravel()]
    if len(x) != count:
        raise ValueError(f"expected {count} nodes, got {len(x)}")
    if any(v == 0.0 for v in x):
        raise SignMismatch("closed forms need non-zero nodes")
    if signs is not None:
        if len(signs) != count:
            raise SignMismatch("sign pattern length differs from node count")
        for v, sg in zip(x, signs):
            want = 1 if sg in ("+", 1, +1.0) else -1
            if (v > 0) != (want > 0):
                raise SignMismatch(f"node {v} does not match sign {sg!r}")
    return x


def dd_monomial(nodes, m: int) -> float:
    """``[x_0, ..., x_k]_{x^m}``: the complete homogeneous symmetric polynomial
    of degree ``m - k`` in the nodes (zero if ``m < k``)."""
    x = [float(v) for v in np.asarray(nodes, dtype=float).ravel()]
    degree = m - (len(x) - 1)
    if degree < 0:
        return 0.0
    # h_d over the first r nodes, updated one node at a time
    h = [1.0] + [0.0] * degree
    for r, xr in enumerate(x):
        if r == 0:
            h = [xr**d for d in range(degree + 1)]
            continue
        for d in range(1, degree + 1):
            h[d] = h[d] + xr * h[d - 1]
    return h[degree]
