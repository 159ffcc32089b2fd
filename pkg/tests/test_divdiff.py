import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from schatten_embed.divdiff import (
    ScalarFunction,
    dd_abs_closed,
    dd_g_closed,
    dd_monomial,
    divided_difference,
)
from schatten_embed.errors import SignMismatch, SmoothnessViolation


def exact_dd(func, nodes):
    """Recursive divided difference in rational arithmetic (distinct nodes)."""
    nodes = [Fraction(x) for x in nodes]
    if len(nodes) == 1:
        return func(nodes[0])
    return (exact_dd(func, nodes[1:]) - exact_dd(func, nodes[:-1])) / (nodes[-1] - nodes[0])


def g_exact(x):
    return x * abs(x)


def rational_nodes(draw_signs, count, rng):
    """Distinct nonzero rationals with prescribed signs."""
    while True:
        mags = [Fraction(int(rng.integers(1, 400)), int(rng.integers(1, 60))) for _ in range(count)]
        nodes = [m if s > 0 else -m for m, s in zip(mags, draw_signs)]
        if len(set(nodes)) == count:
            return nodes


class TestDividedDifference:
    def test_order_zero(self):
        f = ScalarFunction.abs_pow3()
        assert divided_difference(f, [-1.5]) == pytest.approx(1.5**3)

    def test_g_mixed(self):
        assert divided_difference(ScalarFunction.signed_square(), [-1, -2, -3, 1]) == pytest.approx(1 / 12, rel=1e-12)

    def test_g_confluent(self):
        assert divided_difference(ScalarFunction.signed_square(), [2, 2, 2]) == pytest.approx(1.0, rel=1e-12)

    def test_confluent_at_kink_rejected(self):
        with pytest.raises(SmoothnessViolation):
            divided_difference(ScalarFunction.abs(), [0.0, 0.0])

    def test_confluent_cubic_at_kink_allowed_to_order_two(self):
        # |x|^3 is C^2 at 0: [0, 0, 0] = f''(0)/2 = 0
        assert divided_difference(ScalarFunction.abs_pow3(), [0.0, 0.0, 0.0]) == pytest.approx(0.0, abs=1e-15)

    def test_too_many_nodes(self):
        with pytest.raises(ValueError):
            divided_difference(ScalarFunction.monomial(2), list(range(9)))

    @pytest.mark.parametrize(
        "f, exact",
        [
            (ScalarFunction.signed_square(), g_exact),
            (ScalarFunction.abs(), abs),
            (ScalarFunction.abs_pow3(), lambda x: abs(x) ** 3),
            (ScalarFunction.monomial(5), lambda x: x**5),
        ],
    )
    def test_matches_rational_recursion(self, f, exact):
        rng = np.random.default_rng(11)
        for _ in range(200):
            k = int(rng.integers(1, 6))
            nodes = rational_nodes(rng.choice([-1, 1], size=k), k, rng)
            want = float(exact_dd(exact, nodes))
            got = divided_difference(f, [float(x) for x in nodes])
            assert got == pytest.approx(want, rel=1e-9, abs=1e-12)

    def test_confluent_convergence(self):
        f = ScalarFunction.exponential()
        a = 0.3
        errs = []
        for h in (1e-2, 1e-3, 1e-4):
            val = divided_difference(f, [a, a + h, a + 2 * h, a + 3 * h])
            errs.append(abs(val - math.exp(a) / 6))
        # first-order convergence in h
        assert errs[1] < errs[0] / 5 and errs[2] < errs[1] / 5
        assert divided_difference(f, [a] * 4) == pytest.approx(math.exp(a) / 6, rel=1e-12)

    def test_spline_knot_inside_cluster_rejected(self):
        f = ScalarFunction.spline3([0.5], [1.0])
        with pytest.raises(SmoothnessViolation):
            divided_difference(f, [0.5, 0.5, 0.5, 0.5])


@settings(max_examples=300, deadline=None)
@given(
    nodes=st.lists(st.floats(-5, 5, allow_nan=False).filter(lambda x: abs(x) > 1e-3), min_size=2, max_size=6, unique=True),
    kind=st.sampled_from(["g", "abs", "abs3", "x4"]),
    seed=st.integers(0, 1000),
)
def test_permutation_symmetry(nodes, kind, seed):
    if min(np.diff(np.sort(nodes))) < 1e-2:
        return
    f = {
        "g": ScalarFunction.signed_square(),
        "abs": ScalarFunction.abs(),
        "abs3": ScalarFunction.abs_pow3(),
        "x4": ScalarFunction.monomial(4),
    }[kind]
    perm = list(np.random.default_rng(seed).permutation(nodes))
    a, b = divided_difference(f, nodes), divided_difference(f, perm)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-12 * max(1.0, abs(a)))


class TestLocalPolynomial:
    def test_clustered_same_side_is_zero(self):
        # |x|^3 is a cubic on (0, inf): its fourth divided difference vanishes
        nodes = [1.422, 1.4221, 1.43, 1.4302, 1.5]
        assert divided_difference(ScalarFunction.abs_pow3(), nodes) == 0.0

    def test_clustered_against_rationals(self):
        f = ScalarFunction.spline3([-1.0, 2.5], [0.7, 0.4], poly=(0.3, -1.0, 0.0, 0.2))

        def exact(x):
            return Fraction(3, 10) - x + Fraction(1, 5) * x**3 + Fraction(7, 10) * abs(x + 1) ** 3 + Fraction(2, 5) * abs(x - Fraction(5, 2)) ** 3

        nodes = [Fraction(1, 10), Fraction(101, 1000), Fraction(103, 1000), Fraction(1037, 10000)]
        got = divided_difference(f, [float(x) for x in nodes])
        assert got == pytest.approx(float(exact_dd(exact, nodes)), rel=1e-12)

    def test_knot_inside_uses_recursion(self):
        nodes = [Fraction(-1, 2), Fraction(1, 3), Fraction(2)]
        want = exact_dd(lambda x: abs(x) ** 3, nodes)
        got = divided_difference(ScalarFunction.abs_pow3(), [float(x) for x in nodes])
        assert got == pytest.approx(float(want), rel=1e-13)


class TestClosedForms:
    def test_g_all_negative(self):
        assert dd_g_closed([-1, -2, -3, -4]) == 0.0

    def test_g_all_positive(self):
        assert dd_g_closed([1, 2, 3, 4]) == 0.0

    def test_g_mid1(self):
        assert dd_g_closed([-1, -2, -3, 1]) == pytest.approx(1 / 12, rel=1e-14)

    def test_g_sign_mismatch(self):
        with pytest.raises(SignMismatch):
            dd_g_closed([-1, -2, -3, 1], signs="+---")

    def test_abs_examples(self):
        assert dd_abs_closed([-1, -2, -3]) == 0.0
        assert dd_abs_closed([-1, -2, 1]) == pytest.approx(1 / 3, rel=1e-14)
        assert dd_abs_closed([-1, 1, 2]) == pytest.approx(1 / 3, rel=1e-14)

    def test_g_against_recursion(self):
        rng = np.random.default_rng(5)
        for _ in range(1000):
            signs = rng.choice([-1, 1], size=4)
            nodes = rational_nodes(signs, 4, rng)
            want = float(exact_dd(g_exact, nodes))
            got = dd_g_closed([float(x) for x in nodes])
            assert got == pytest.approx(want, rel=1e-10, abs=1e-14)

    def test_abs_against_recursion(self):
        rng = np.random.default_rng(6)
        for _ in range(1000):
            signs = rng.choice([-1, 1], size=3)
            nodes = rational_nodes(signs, 3, rng)
            want = float(exact_dd(abs, nodes))
            got = dd_abs_closed([float(x) for x in nodes])
            assert got == pytest.approx(want, rel=1e-10, abs=1e-14)


class TestMonomial:
    def test_examples(self):
        assert dd_monomial([1, 2], 2) == 3
        assert dd_monomial([5], 3) == 125
        assert dd_monomial([1, 1, 1], 2) == 1
        assert dd_monomial([1, 2, 3, 4], 2) == 0

    def test_against_recursion(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            k = int(rng.integers(1, 8))
            m = int(rng.integers(0, 9))
            nodes = rational_nodes(rng.choice([-1, 1], size=k), k, rng)
            want = float(exact_dd(lambda x: x**m, nodes))
            got = dd_monomial([float(x) for x in nodes], m)
            assert got == pytest.approx(want, rel=1e-11, abs=1e-11)
