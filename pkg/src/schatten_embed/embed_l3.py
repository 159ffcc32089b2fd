r"""Isometric embedding of a real plane of Schatten-3 matrices into L_3.

For Hermitian ``A, B`` write ``N(x, y) = tr|xA + yB|^3``. The representing
measure ``nu`` on directions ``u_theta = (cos theta, sin theta)``,
``theta in [0, pi)``, satisfies

.. math:: N(x, y) = \sum_j m_j |x \cos\theta_j + y \sin\theta_j|^3 .

It is assembled from two parts.

* Atoms at the angles where ``M_perp(theta) = cos(theta) B - sin(theta) A`` is
  singular. The mass is ``sum |eta|^3`` over the eigenvalues ``eta`` of
  ``M_u`` compressed to the null space of ``M_perp``, where
  ``M_u = cos(theta) A + sin(theta) B``.
* A density ``nu'(theta) = (1/12) d^4/dt^4 tr|M_perp + t M_u|^3`` at ``t = 0``,
  integrated by adaptive Gauss-Legendre panels between consecutive singular
  angles. Every quadrature node becomes an atom.

In the line parametrisation ``t -> tr|A + tB|^3`` the same measure is the
fourth distributional derivative: an atom of mass ``m`` at ``s`` corresponds to
the direction ``(-s, 1)/sqrt(1+s^2)`` with circle mass ``m (1+s^2)^{3/2}/12``.
:func:`line_measure` exposes that view.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    EmptyMeasure,
    NegativeResidualMass,
    NullSpaceFailure,
    SingularB,
    TooCloseToSingularPoint,
)
from .matrix_core import as_hermitian, dilate, hermitian_defect, op_norm, schatten_norm
from .trace_deriv import QUARTIC_FACTOR, eigen_frame, quartic_weighted_total

log = logging.getLogger(__name__)

GL_ORDER = 10
QUAD_RTOL = 1e-11
MAX_DEPTH = 40
NULL_RTOL = 1e-9
REAL_ROOT_RTOL = 1e-7
REGULARIZE_RTOL = 1e-6
DIRECTIONS = 180
MAX_PANEL = math.pi / 32

_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)


@dataclass
class CircleMeasure:
    """Discrete measure on directions ``theta in [0, pi)``.

    Each atom stands for the symmetric pair ``{theta, theta + pi}``; the norm is
    ``||xA + yB||_3^3 = sum_j masses[j] |x cos(angles[j]) + y sin(angles[j])|^3``.
    """

    angles: np.ndarray
    masses: np.ndarray
    residual_mass: float = 0.0
    info: dict = field(default_factory=dict)

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.masses))

    def __len__(self) -> int:
        return self.angles.size

    def moment(self, x: float, y: float, p: float = 3.0) -> float:
        return float(np.sum(self.masses * np.abs(x * np.cos(self.angles) + y * np.sin(self.angles)) ** p))

    def sorted(self) -> CircleMeasure:
        order = np.argsort(self.angles, kind="stable")
        return CircleMeasure(self.angles[order], self.masses[order], self.residual_mass, dict(self.info))

    def to_dict(self) -> dict:
        return {
            "angles": self.angles.tolist(),
            "masses": self.masses.tolist(),
            "residual_mass": self.residual_mass,
        }

    @classmethod
    def from_dict(cls, data: dict) -> CircleMeasure:
        return cls(
            np.asarray(data["angles"], dtype=float),
            np.asarray(data["masses"], dtype=float),
            float(data.get("residual_mass", 0.0)),
        )


@dataclass
class LineMeasure:
    """Fourth distributional derivative of ``t -> tr|A + tB|^3``.

    ``atoms`` is an ``(m, 2)`` array of (location, mass); ``density`` is a
    ``(k, 3)`` array of (t, h(t), quadrature weight); ``tail_bound`` estimates
    the mass beyond ``|t| > t_max`` from a ``K/|t|^5`` fit.
    """

    atoms: np.ndarray
    density: np.ndarray
    tail_bound: float
    t_max: float

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.atoms[:, 1]) + np.sum(self.density[:, 1] * self.density[:, 2]))


@dataclass
class StepFunctionPair:
    """Step functions ``f, g`` on (0, 1) with ``f = a_i``, ``g = b_i`` on the
    i-th piece ``[breakpoints[i], breakpoints[i+1])``."""

    breakpoints: np.ndarray
    a: np.ndarray
    b: np.ndarray

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def norm(self, alpha: float, beta: float, p: float = 3.0) -> float:
        """``||alpha f + beta g||_{L_p(0,1)}``, computed exactly piece by piece."""
        return float(np.sum(self.lengths * np.abs(alpha * self.a + beta * self.b) ** p) ** (1.0 / p))

    def __call__(self, x):
        i = np.clip(np.searchsorted(self.breakpoints, x, side="right") - 1, 0, self.a.size - 1)
        return self.a[i], self.b[i]


# --------------------------------------------------------------------------
# pencil geometry


def plane_pair(A, B, theta):
    """``(M_perp, M_u)`` for one angle or an array of angles (stacked)."""
    theta = np.asarray(theta, dtype=float)
    c = np.cos(theta)[..., None, None]
    s = np.sin(theta)[..., None, None]
    return c * B - s * A, c * A + s * B


def _closest_eig(M):
    w, V = np.linalg.eigh(M)
    i = int(np.argmin(np.abs(w)))
    return w[i], V[:, i]


def singular_angles(A, B) -> np.ndarray:
    """Angles ``theta in [0, pi)`` where ``cos(theta) B - sin(theta) A`` is singular.

    Candidates are the real homogeneous eigenvalues of the pencil, polished by
    Newton steps on the eigenvalue of ``M_perp`` closest to zero. Candidates that
    do not reach a zero eigenvalue are discarded.
    """
    A = as_hermitian(A)
    B = as_hermitian(B)
    scale = op_norm(A) + op_norm(B)
    alpha, beta = scipy.linalg.eig(B, A, right=False, homogeneous_eigvals=True)
    out = []
    for a, b in zip(alpha, beta):
        size = abs(a) ** 2 + abs(b) ** 2
        if size <= 1e-24:
            continue
        # rotate the pair so beta is real and nonnegative; beta = 0 means theta = pi/2
        r = a * np.conj(b) / abs(b) if abs(b) > 0 else complex(abs(a))
        if abs(r.imag) > REAL_ROOT_RTOL * math.sqrt(size):
            continue
        theta = math.atan2(r.real, abs(b)) % math.pi
        for _ in range(8):
            mu, v = _closest_eig(plane_pair(A, B, theta)[0])
            Mu = plane_pair(A, B, theta)[1]
            slope = -float((v.conj() @ Mu @ v).real)
            if abs(slope) <= 1e-12 * scale or abs(mu) <= 1e-15 * scale:
                break
            theta = (theta - mu / slope) % math.pi
        mu, _ = _closest_eig(plane_pair(A, B, theta)[0])
        if abs(mu) <= 1e-8 * scale:
            out.append(theta)
    out.sort()
    merged: list[float] = []
    for t in out:
        if merged and (t - merged[-1] < 1e-9):
            continue
        merged.append(t)
    if len(merged) > 1 and merged[0] + math.pi - merged[-1] < 1e-9:
        merged.pop()
    return np.asarray(merged)


def _null_basis(M, scale, rtol=NULL_RTOL):
    w, V = np.linalg.eigh(M)
    scale = max(scale, 1e-300)
    keep = np.abs(w) <= rtol * scale
    return V[:, keep], w


def angle_atom_mass(A, B, theta: float) -> float:
    """Circle mass at a singular angle: ``sum |eta|^3`` over first-order branches."""
    Mp, Mu = plane_pair(A, B, theta)
    X, w = _null_basis(Mp, op_norm(A) + op_norm(B))
    if X.shape[1] == 0:
        raise NullSpaceFailure(f"no null vector at theta={theta!r} (min |eig| {np.min(np.abs(w)):.3e})")
    eta = np.linalg.eigvalsh(X.conj().T @ Mu @ X)
    eta = eta[np.abs(eta) > 1e-9 * (op_norm(A) + op_norm(B))]
    return float(np.sum(np.abs(eta) ** 3))


def singular_points(A, B) -> np.ndarray:
    """Real ``t`` with ``det(A + tB) = 0``, for invertible ``B``."""
    A = as_hermitian(A)
    B = as_hermitian(B)
    nb = op_norm(B)
    smin = float(np.min(np.abs(np.linalg.eigvalsh(B))))
    if smin < 1e-8 * nb or nb == 0.0:
        raise SingularB(f"smallest singular value of B is {smin:.3e}")
    # t = -cot(theta) on the singular angles; theta = 0 would need singular B
    thetas = singular_angles(A, B)
    thetas = thetas[np.abs(np.sin(thetas)) > 0]
    return np.sort(-np.cos(thetas) / np.sin(thetas))


def atom_weight(A, B, c: float) -> float:
    """Mass of the line measure at a singular point ``c``: ``12 sum |eta|^3``,
    ``eta`` the eigenvalues of ``B`` compressed to the null space of ``A + cB``."""
    A = as_hermitian(A)
    B = as_hermitian(B)
    X, w = _null_basis(A + c * B, op_norm(A) + abs(c) * op_norm(B))
    if X.shape[1] == 0:
        raise NullSpaceFailure(f"A + cB is not singular at c={c!r} (min |eig| {np.min(np.abs(w)):.3e})")
    eta = np.linalg.eigvalsh(X.conj().T @ B @ X)
    eta = eta[np.abs(eta) > 1e-9 * op_norm(B)]
    return float(12.0 * np.sum(np.abs(eta) ** 3))


# --------------------------------------------------------------------------
# densities


def circle_density(A, B, thetas) -> np.ndarray:
    """``nu'(theta)`` for an array of angles (vectorised)."""
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    Mp, Mu = plane_pair(A, B, thetas)
    lam, V = np.linalg.eigh(Mp)
    Bt = np.swapaxes(V.conj(), -1, -2) @ Mu @ V
    n = lam.shape[-1]
    chunk = max(1, int(2_000_000 // n**4))
    out = np.empty(thetas.size)
    for i in range(0, thetas.size, chunk):
        out[i : i + chunk] = quartic_weighted_total(lam[i : i + chunk], Bt[i : i + chunk])
    return QUARTIC_FACTOR / 12.0 * out


def smooth_density(A, B, t: float, singular=None) -> float:
    """``h(t) = d^4/dt^4 tr|A + tB|^3`` away from singular points (clamped at 0)."""
    A = as_hermitian(A)
    B = as_hermitian(B)
    if singular is None:
        singular = singular_points(A, B)
    singular = np.asarray(singular, dtype=float)
    if singular.size and np.min(np.abs(singular - t)) < 1e-6 * (1.0 + abs(t)):
        raise TooCloseToSingularPoint(f"t={t!r} is within 1e-6 (1+|t|) of a singular point")
    lam, Bt = eigen_frame(A + t * B, B)
    value = QUARTIC_FACTOR * float(quartic_weighted_total(lam, Bt))
    if value < 0.0:
        log.debug("negative density %.3e at t=%r clamped", value, t)
        return 0.0
    return value


# --------------------------------------------------------------------------
# quadrature


def _panel_nodes(a, b):
    half = 0.5 * (b - a)
    return a + half * (_GL_X + 1.0), half * _GL_W


def _adaptive_panels(A, B, intervals, tol_abs, max_panel=MAX_PANEL):
    """Adaptive Gauss-Legendre on each interval; returns accepted (nodes, weights, values).

    Panels are first cut to width ``<= max_panel``: the discrete measure is later
    integrated against ``|cos(phi - theta)|^3``, whose third derivative jumps, so
    resolving the density alone is not enough.
    """
    pending = []
    for a, b in intervals:
        if b <= a:
            continue
        k = max(1, math.ceil((b - a) / max_panel))
        cuts = np.linspace(a, b, k + 1)
        pending += [(lo, hi, 0) for lo, hi in zip(cuts[:-1], cuts[1:])]
    nodes, weights, values = [], [], []
    while pending:
        xs, ws = [], []
        for a, b, _ in pending:
            m = 0.5 * (a + b)
            for lo, hi in ((a, b), (a, m), (m, b)):
                x, w = _panel_nodes(lo, hi)
                xs.append(x)
                ws.append(w)
        dens = circle_density(A, B, np.concatenate(xs)).reshape(len(pending), 3, GL_ORDER)
        wts = np.asarray(ws).reshape(len(pending), 3, GL_ORDER)
        xs = np.asarray(xs).reshape(len(pending), 3, GL_ORDER)
        nxt = []
        for i, (a, b, depth) in enumerate(pending):
            coarse = float(dens[i, 0] @ wts[i, 0])
            fine = float(dens[i, 1] @ wts[i, 1] + dens[i, 2] @ wts[i, 2])
            budget = tol_abs * (b - a) / math.pi
            if abs(coarse - fine) <= budget or depth >= MAX_DEPTH or (b - a) < 1e-12:
                nodes.append(xs[i, 1:].ravel())
                weights.append(wts[i, 1:].ravel())
                values.append(dens[i, 1:].ravel())
            else:
                m = 0.5 * (a + b)
                nxt += [(a, m, depth + 1), (m, b, depth + 1)]
        pending = nxt
    if not nodes:
        return np.empty(0), np.empty(0), np.empty(0)
    return np.concatenate(nodes), np.concatenate(weights), np.concatenate(values)


def _prepare_plane(A, B):
    """Remove a common kernel; regularise ``B`` if the pencil is still singular."""
    A = as_hermitian(A)
    B = as_hermitian(B)
    info = {"n": A.shape[0], "deflated": 0, "regularized": 0.0}
    stacked = np.vstack([A, B])
    _, s, Vh = np.linalg.svd(stacked)
    smax = s[0] if s.size else 0.0
    if smax == 0.0:
        return A, B, info
    rank = int(np.sum(s > 1e-12 * smax))
    if rank < A.shape[0]:
        Q = Vh[:rank].conj().T
        A = as_hermitian(Q.conj().T @ A @ Q)
        B = as_hermitian(Q.conj().T @ B @ Q)
        info["deflated"] = info["n"] - rank
    # a singular Hermitian pencil has det(xA + yB) == 0 identically
    rng = np.random.default_rng(0)
    probes = rng.normal(size=(3, 2))
    dets = []
    for x, y in probes:
        w = np.abs(np.linalg.eigvalsh(x * A + y * B))
        dets.append(float(np.min(w) / max(np.max(w), 1e-300)))
    if max(dets) < 1e-10:
        eps = REGULARIZE_RTOL * op_norm(B) if op_norm(B) > 0 else REGULARIZE_RTOL * op_norm(A)
        B = B + eps * np.eye(B.shape[0])
        info["regularized"] = eps
        log.info("singular pencil; B regularised by %.3e I", eps)
    return A, B, info


def circle_measure(A, B, rtol: float = QUAD_RTOL, max_panel: float = MAX_PANEL) -> CircleMeasure:
    """Representing measure of the plane ``span{A, B}`` (Hermitian) in S_3.

    Raises
    ------
    NegativeResidualMass
        If the matched residual at ``theta = 0`` is below ``-1e-6`` times the
        mass scale, which signals an inaccurate pipeline.
    """
    A0 = as_hermitian(A)
    B0 = as_hermitian(B)
    A, B, info = _prepare_plane(A0, B0)
    scale = schatten_norm(A, 3) ** 3 + schatten_norm(B, 3) ** 3
    if scale == 0.0:
        raise EmptyMeasure("the plane is {0}")

    sing = singular_angles(A, B)
    atom_angles = list(sing)
    atom_masses = [angle_atom_mass(A, B, t) for t in sing]

    if sing.size == 0:
        intervals = [(0.0, math.pi)]
    else:
        edges = list(sing) + [sing[0] + math.pi]
        intervals = list(zip(edges[:-1], edges[1:]))
    x, w, v = _adaptive_panels(A, B, intervals, rtol * scale, max_panel)
    if np.any(v < -1e-9 * scale):
        log.warning("density dipped to %.3e (scale %.3e)", float(np.min(v)), scale)
    v = np.clip(v, 0.0, None)

    angles = np.concatenate([np.asarray(atom_angles, dtype=float), x % math.pi])
    masses = np.concatenate([np.asarray(atom_masses, dtype=float), w * v])
    keep = masses > 0
    angles, masses = angles[keep], masses[keep]

    # the A-direction is the one the t -> A + tB line does not see; match ||A||^3
    residual = schatten_norm(A, 3) ** 3 - float(np.sum(masses * np.abs(np.cos(angles)) ** 3))
    if residual < -1e-6 * scale:
        raise NegativeResidualMass(f"residual mass {residual:.3e} (scale {scale:.3e})")
    if residual > 1e-12 * scale:
        angles = np.append(angles, 0.0)
        masses = np.append(masses, residual)

    info.update(
        {
            "singular_angles": sing.tolist(),
            "singular_masses": atom_masses,
            "quadrature_nodes": int(x.size),
            "mass_scale": scale,
        }
    )
    return CircleMeasure(angles, masses, residual, info)


def line_measure(A, B, rtol: float = QUAD_RTOL) -> LineMeasure:
    """Line-parametrised view of :func:`circle_measure` (``B`` invertible)."""
    A = as_hermitian(A)
    B = as_hermitian(B)
    points = singular_points(A, B)
    atoms = np.array([[c, atom_weight(A, B, c)] for c in points]).reshape(-1, 2)

    sing = singular_angles(A, B)
    edges = list(sing) + [sing[0] + math.pi] if sing.size else [0.0, math.pi]
    x, w, v = _adaptive_panels(A, B, list(zip(edges[:-1], edges[1:])), rtol * (
        schatten_norm(A, 3) ** 3 + schatten_norm(B, 3) ** 3
    ))
    theta = x % math.pi
    s = np.sin(theta)
    ok = s > 1e-12
    t = -np.cos(theta[ok]) / s[ok]
    h = 12.0 * s[ok] ** 5 * np.clip(v[ok], 0.0, None)
    wt = w[ok] / s[ok] ** 2
    order = np.argsort(t)
    density = np.column_stack([t[order], h[order], wt[order]])

    t_max = float(np.max(np.abs(t))) if t.size else 0.0
    tail = 0.0
    for side in (1.0, -1.0):
        st = side * t
        sel = np.argsort(-st)[:3]
        sel = sel[(st[sel] > 0) & (h[sel] > 0)]
        if sel.size:
            # fit log h = log K - 5 log |t| (fixed exponent; K by least squares)
            K = float(np.exp(np.mean(np.log(h[sel]) + 5.0 * np.log(np.abs(t[sel])))))
            tail += K / (4.0 * t_max**4)
    return LineMeasure(atoms, density, tail, t_max)


def polynomial_residual(nu: CircleMeasure, A, B, span: float | None = None, count: int = 41):
    """Cubic fit of ``tr|A + tB|^3 - sum m |cos + t sin|^3`` over ``|t| <= span``.

    Returns ascending coefficients ``[c0, c1, c2, c3]`` and the largest residual.
    """
    A = as_hermitian(A)
    B = as_hermitian(B)
    if span is None:
        nb = op_norm(B)
        span = 2.0 * (1.0 + op_norm(A) / nb) if nb > 0 else 2.0
    t = np.linspace(-span, span, count)
    lhs = np.array([schatten_norm(A + ti * B, 3) ** 3 for ti in t])
    rhs = np.array([nu.moment(1.0, ti) for ti in t])
    resid = lhs - rhs
    coefs = np.polynomial.polynomial.polyfit(t, resid, 3)
    return coefs, float(np.max(np.abs(resid)))


# --------------------------------------------------------------------------
# verification and outputs


def _s3_cubed(mats: np.ndarray) -> np.ndarray:
    herm = all(hermitian_defect(M) <= 1e-14 for M in mats)
    if herm:
        lam = np.linalg.eigvalsh(0.5 * (mats + np.swapaxes(mats.conj(), -1, -2)))
        return np.sum(np.abs(lam) ** 3, axis=-1)
    s = np.linalg.svd(mats, compute_uv=False)
    return np.sum(s**3, axis=-1)


def verify_isometry(nu: CircleMeasure, A, B, directions: int = DIRECTIONS) -> float:
    """Largest relative error of ``sum m |<v, u>|^3`` against ``||v1 A + v2 B||_3^3``
    over ``directions`` equally spaced angles in ``[0, pi)``."""
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    phi = np.arange(directions) * math.pi / directions
    exact = _s3_cubed(np.cos(phi)[:, None, None] * A + np.sin(phi)[:, None, None] * B)
    approx = np.sum(nu.masses[None, :] * np.abs(np.cos(phi[:, None] - nu.angles[None, :])) ** 3, axis=1)
    floor = 1e-10 * max(float(np.max(exact)), 1e-300)
    return float(np.max(np.abs(approx - exact) / np.maximum(exact, floor)))


def build_step_functions(nu: CircleMeasure) -> StepFunctionPair:
    total = nu.total_mass
    if len(nu) == 0 or total <= 0.0:
        raise EmptyMeasure("measure has no mass")
    lengths = nu.masses / total
    breakpoints = np.concatenate([[0.0], np.cumsum(lengths)])
    breakpoints[-1] = 1.0
    radius = total ** (1.0 / 3.0)
    return StepFunctionPair(breakpoints, radius * np.cos(nu.angles), radius * np.sin(nu.angles))


@dataclass
class Embedding:
    measure: CircleMeasure
    steps: StepFunctionPair
    report: dict
    A: np.ndarray
    B: np.ndarray


def embed_plane(A, B, p: int = 3, directions: int = DIRECTIONS, rtol: float = QUAD_RTOL) -> Embedding:
    """Embed ``span_R{A, B}`` (any square matrices) isometrically into L_3(0, 1).

    Non-Hermitian pairs go through the Hermitian dilation first. The returned
    ``Embedding`` holds the measure, the step functions, the Hermitian pair
    actually used, and a report with the isometry error over ``directions``.
    """
    if p != 3:
        raise ValueError("only p = 3 is supported")
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    if A.shape != B.shape:
        from .errors import DimensionMismatch

        raise DimensionMismatch(f"A {A.shape} and B {B.shape} differ")
    dilated = hermitian_defect(A) > 1e-12 or hermitian_defect(B) > 1e-12
    if dilated:
        A, B = dilate(A), dilate(B)
    A = as_hermitian(A)
    B = as_hermitian(B)
    nu = circle_measure(A, B, rtol=rtol)
    steps = build_step_functions(nu)
    report = {
        "dilated": dilated,
        "n": int(A.shape[0]),
        "atoms": len(nu),
        "total_mass": nu.total_mass,
        "residual_mass": nu.residual_mass,
        "deflated": nu.info.get("deflated", 0),
        "regularized": nu.info.get("regularized", 0.0),
        "singular_angles": nu.info.get("singular_angles", []),
        "max_isometry_error": verify_isometry(nu, A, B, directions),
        "directions": directions,
    }
    return Embedding(nu, steps, report, A, B)


def hanner_sides(nA: float, nB: float, nSum: float, nDiff: float, p: float):
    lhs = nSum**p + nDiff**p
    rhs = (nA + nB) ** p + abs(nA - nB) ** p
    return lhs, rhs


def hanner_check(A, B, p: float, mode: str = "direct", embedding: Embedding | None = None) -> float:
    """Slack in Hanner's inequality: ``rhs - lhs`` for ``p >= 2`` and
    ``lhs - rhs`` for ``1 <= p < 2``. Non-negative slack means the inequality holds.

    ``mode="via_embedding"`` (p = 3 only) measures all four norms through the
    L_3 step functions of :func:`embed_plane`.
    """
    if mode == "direct":
        norms = [schatten_norm(M, p) for M in (A, B, np.add(A, B), np.subtract(A, B))]
    elif mode == "via_embedding":
        if p != 3:
            raise ValueError("via_embedding requires p = 3")
        emb = embedding if embedding is not None else embed_plane(A, B)
        st = emb.steps
        norms = [st.norm(1, 0), st.norm(0, 1), st.norm(1, 1), st.norm(1, -1)]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    lhs, rhs = hanner_sides(*norms, p)
    return rhs - lhs if p >= 2 else lhs - rhs
