"""Seeded random matrices for tests, probes and batch drivers."""

from __future__ import annotations

import numpy as np


def random_complex(rng: np.random.Generator, n: int) -> np.ndarray:
    return (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(2 * n)


def random_hermitian(rng: np.random.Generator, n: int, real: bool = False) -> np.ndarray:
    """GUE-like Hermitian matrix with operator norm of order 1."""
    if real:
        X = rng.normal(size=(n, n)) / np.sqrt(n)
    else:
        X = random_complex(rng, n)
    return (X + X.conj().T) / np.sqrt(2)


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    Q, R = np.linalg.qr(random_complex(rng, n))
    d = np.diag(R)
    return Q * (d / np.abs(d))


def random_psd(rng: np.random.Generator, n: int, rank: int | None = None) -> np.ndarray:
    rank = n if rank is None else rank
    X = (rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))) / np.sqrt(2 * n)
    return X @ X.conj().T


def hermitian_with_spectrum(rng: np.random.Generator, eigenvalues) -> np.ndarray:
    lam = np.asarray(eigenvalues, dtype=float)
    U = random_unitary(rng, lam.size)
    H = (U * lam) @ U.conj().T
    return (H + H.conj().T) / 2


def separated_spectrum(rng: np.random.Generator, n: int, gap: float = 0.3, low: float = 0.2, high: float = 2.0):
    """Eigenvalues with random signs (at least one of each when n >= 2),
    ``|l| >= low`` and pairwise gaps of at least ``gap``."""
    while True:
        lam = rng.uniform(low, high, size=n) * rng.choice([-1.0, 1.0], size=n)
        if n >= 2 and (np.all(lam > 0) or np.all(lam < 0)):
            lam[0] = -lam[0]
        s = np.sort(lam)
        if n == 1 or np.min(np.diff(s)) >= gap:
            return s


def invertible_hermitian(rng: np.random.Generator, n: int, min_abs: float = 0.2) -> np.ndarray:
    lam = rng.uniform(min_abs, 1.5, size=n) * rng.choice([-1.0, 1.0], size=n)
    return hermitian_with_spectrum(rng, lam)
