import numpy as np
import pytest

from schatten_embed.sampling import random_hermitian


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def seeded_pairs(count, n_choices=(2, 3, 4), seed=0, real=False):
    """Yield (seed, A, B) with per-instance generators seed + i."""
    for i in range(count):
        r = np.random.default_rng(seed + i)
        n = int(r.choice(n_choices))
        yield seed + i, random_hermitian(r, n, real=real), random_hermitian(r, n, real=real)


PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
