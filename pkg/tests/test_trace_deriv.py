import math

import numpy as np
import pytest

from schatten_embed.divdiff import ScalarFunction
from schatten_embed.errors import NotPsd, SignCondition, SingularityTooClose, ZeroEigenvalue
from schatten_embed.sampling import (
    hermitian_with_spectrum,
    invertible_hermitian,
    random_hermitian,
    random_psd,
    random_unitary,
    separated_spectrum,
)
from schatten_embed.trace_deriv import (
    GROUPS4,
    central_weights,
    conjecture_probe,
    cubic_scale,
    enumerate_cubic,
    enumerate_quartic,
    fd_oracle,
    fd_roundoff,
    oracle_settings,
    pattern_sums3,
    pattern_sums4,
    sos_form_values,
    spline_positivity_check,
    trace_fun_derivative,
    two_by_two_odd_p,
    two_by_two_terms,
)

from conftest import PAULI_X

ONES = np.ones((2, 2))


def checked(f, A, B, k):
    """k! * trace_fun_derivative against the finite-difference oracle."""
    h, dps = oracle_settings(f, A, B, k)
    exact = trace_fun_derivative(f, A, B, k) * math.factorial(k)
    approx = fd_oracle(f, A, B, k, h=h, dps=dps)
    return exact, approx


class TestTraceFunDerivative:
    def test_cubic_first_derivative(self):
        val = trace_fun_derivative(ScalarFunction.monomial(3), np.diag([1.0, 2.0]), PAULI_X, 1)
        assert val == pytest.approx(0.0, abs=1e-14)

    def test_square_second(self):
        val = trace_fun_derivative(ScalarFunction.monomial(2), np.diag([0.3, -1.0]), ONES, 2)
        assert val == pytest.approx(4.0, rel=1e-13)

    def test_abs3_fourth_against_fd(self):
        exact, approx = checked(ScalarFunction.abs_pow3(), np.diag([-1.0, 1.0]), ONES, 4)
        assert exact == pytest.approx(approx, rel=1e-6)
        assert exact == pytest.approx(90.0, rel=1e-12)

    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    @pytest.mark.parametrize("name", ["x3", "x4", "abs3"])
    def test_oracle_agreement(self, k, name):
        f = {"x3": ScalarFunction.monomial(3), "x4": ScalarFunction.monomial(4), "abs3": ScalarFunction.abs_pow3()}[name]
        for seed in range(12):
            r = np.random.default_rng(seed)
            n = int(r.integers(2, 7))
            A = invertible_hermitian(r, n) if name == "abs3" else random_hermitian(r, n)
            B = random_hermitian(r, n)
            exact, approx = checked(f, A, B, k)
            assert abs(exact - approx) <= max(1e-6 * abs(exact), 1e-8)

    def test_basis_invariance(self, rng):
        f = ScalarFunction.abs_pow3()
        for _ in range(20):
            n = int(rng.integers(2, 6))
            A, B, U = invertible_hermitian(rng, n), random_hermitian(rng, n), random_unitary(rng, n)
            a = trace_fun_derivative(f, A, B, 4)
            b = trace_fun_derivative(f, U @ A @ U.conj().T, U @ B @ U.conj().T, 4)
            assert b == pytest.approx(a, rel=1e-9)

    def test_jitter_on_cluster_at_kink(self):
        A = np.diag([0.0, 0.0, 1.0])
        B = random_hermitian(np.random.default_rng(0), 3)
        val, info = trace_fun_derivative(ScalarFunction.abs_pow3(), A, B, 4, full_output=True)
        assert info["jittered"] and math.isfinite(val)

    def test_imaginary_residue_small(self, rng):
        A, B = random_hermitian(rng, 4), random_hermitian(rng, 4)
        _, info = trace_fun_derivative(ScalarFunction.monomial(4), A, B, 3, full_output=True)
        assert abs(info["imag"]) < 1e-12


class TestFdOracle:
    def test_polynomial_beyond_degree(self, rng):
        A, B = random_hermitian(rng, 3), random_hermitian(rng, 3)
        assert abs(fd_oracle(ScalarFunction.monomial(2), A, B, 3)) < 1e-8

    def test_square(self):
        assert fd_oracle(ScalarFunction.monomial(2), np.diag([0.3, -1.0]), ONES, 2) == pytest.approx(8.0, rel=1e-9)

    def test_locally_polynomial(self):
        val = fd_oracle(ScalarFunction.abs_pow3(), np.diag([-1.0, 1.0]), np.eye(2), 4, h=0.01, dps=30)
        assert abs(val) < 1e-6

    def test_kink_guard(self):
        with pytest.raises(SingularityTooClose):
            fd_oracle(ScalarFunction.abs_pow3(), np.diag([-1e-3, 1.0]), np.eye(2), 4)

    @pytest.mark.parametrize("k", range(1, 9))
    def test_weights_annihilate_low_powers(self, k):
        m, w = central_weights(k)
        for power in range(k):
            assert sum(wj * j**power for j, wj in zip(range(-m, m + 1), w)) == 0
        assert sum(wj * j**k for j, wj in zip(range(-m, m + 1), w)) == math.factorial(k)


class TestPatternSums4:
    def test_reference(self):
        ps = pattern_sums4(np.diag([-1.0, 1.0]), ONES)
        assert ps.form1_group == pytest.approx(1.0, rel=1e-13)
        assert ps.alternating == pytest.approx(0.5, rel=1e-13)
        assert ps.fourth_derivative == pytest.approx(90.0, rel=1e-13)

    def test_all_positive(self, rng):
        ps = pattern_sums4(np.diag([1.0, 2.0]), random_hermitian(rng, 2))
        assert all(abs(v) < 1e-14 for v in ps.groups.values())

    def test_commuting(self):
        ps = pattern_sums4(np.diag([-1.0, 0.5, 2.0]), np.diag([1.0, -2.0, 0.3]))
        assert all(abs(v) < 1e-14 for v in ps.patterns.values())

    def test_zero_eigenvalue(self):
        with pytest.raises(ZeroEigenvalue):
            pattern_sums4(np.diag([0.0, 1.0]), ONES)

    def test_groups_partition(self):
        members = [p for g in GROUPS4.values() for p in g]
        assert sorted(members) == sorted({"".join(s) for s in __import__("itertools").product("+-", repeat=4)})

    def test_identities_random(self):
        for seed in range(100):
            r = np.random.default_rng(seed)
            n = int(r.integers(2, 6))
            A, B = random_hermitian(r, n), random_hermitian(r, n)
            ps = pattern_sums4(A, B)
            tol = 1e-12 * ps.scale + 1e-14
            enum = enumerate_quartic(A, B)
            assert ps.total == pytest.approx(enum, rel=1e-9, abs=tol)
            assert ps.decomposition == pytest.approx(ps.total, rel=1e-9, abs=tol)
            assert abs(ps.groups["a"]) <= 1e-12 * ps.scale
            assert abs(ps.groups["f"]) <= 1e-12 * ps.scale
            f1, f2 = sos_form_values(A, B)
            assert f1.value == pytest.approx(ps.form1_group, rel=1e-9, abs=tol)
            assert f2.value == pytest.approx(ps.alternating, rel=1e-9, abs=tol)
            assert f1.value >= -1e-10 * ps.scale and f2.value >= -1e-10 * ps.scale
            assert f1.min_part >= 0 and f2.min_part >= 0


class TestSosForms:
    def test_reference(self):
        f1, f2 = sos_form_values(np.diag([-1.0, 1.0]), ONES)
        assert f1.value == pytest.approx(1.0, rel=1e-13)
        assert f2.value == pytest.approx(0.5, rel=1e-13)

    def test_identity_b(self):
        f1, f2 = sos_form_values(np.diag([-1.0, 0.4, 2.0]), np.eye(3))
        assert f1.value == 0.0 and f2.value == 0.0

    def test_two_negative(self, rng):
        A = hermitian_with_spectrum(rng, [-1.3, -0.4, 0.7, 1.9])
        B = random_hermitian(rng, 4)
        ps = pattern_sums4(A, B)
        f1, f2 = sos_form_values(A, B)
        assert f1.value >= 0 and f2.value >= 0
        assert f1.value == pytest.approx(ps.form1_group, rel=1e-9)


class TestPatternSums3:
    def test_reference(self):
        A = np.diag([-1.0, 1.0])
        cert = pattern_sums3(A, ONES)
        assert cert.value == pytest.approx(enumerate_cubic(A, ONES) / 3, rel=1e-12)
        assert cert.value > 0

    def test_zero_b(self):
        assert pattern_sums3(np.diag([-1.0, 1.0]), np.zeros((2, 2))).value == 0.0

    def test_positive_definite_a(self, rng):
        cert = pattern_sums3(np.diag([0.5, 1.0, 2.0]), random_psd(rng, 3))
        assert cert.value == 0.0

    def test_indefinite_b(self):
        with pytest.raises(NotPsd):
            pattern_sums3(np.diag([-1.0, 1.0]), np.diag([1.0, -1.0]))

    def test_third_derivative(self, rng):
        f = ScalarFunction.signed_square()
        for _ in range(10):
            n = int(rng.integers(2, 5))
            A, B = invertible_hermitian(rng, n), random_psd(rng, n)
            cert = pattern_sums3(A, B)
            h, dps = oracle_settings(f, A, B, 3)
            assert 12 * cert.value == pytest.approx(fd_oracle(f, A, B, 3, h=h, dps=dps), rel=1e-6)
            assert cert.value >= -1e-10 * cubic_scale(A, B)


class TestTwoByTwo:
    def test_diagonal_b(self):
        assert two_by_two_odd_p(np.diag([-1.0, 1.0]), np.eye(2), 3) == 0.0

    def test_pauli_x(self):
        A = np.diag([-1.0, 1.0])
        val = two_by_two_odd_p(A, PAULI_X, 3)
        ref = fd_oracle(ScalarFunction.abs_pow(3), A, PAULI_X, 4, h=1e-3, dps=40)
        assert val == pytest.approx(ref, rel=1e-5)

    @pytest.mark.parametrize("p", [3, 5, 7])
    def test_random_against_fd(self, p):
        for seed in range(5):
            r = np.random.default_rng(seed)
            lam = separated_spectrum(r, 2)
            A, B = hermitian_with_spectrum(r, lam), random_hermitian(r, 2)
            val = two_by_two_odd_p(A, B, p)
            h = np.min(np.abs(lam)) / (1000 * np.linalg.norm(B, 2))
            assert val == pytest.approx(fd_oracle(ScalarFunction.abs_pow(p), A, B, p + 1, h=h, dps=60), rel=1e-5)
            assert all(t >= 0 for t in two_by_two_terms(A, B, p))

    def test_sign_condition(self):
        with pytest.raises(SignCondition):
            two_by_two_odd_p(np.diag([1.0, 2.0]), PAULI_X, 3)


class TestSplinePositivity:
    def test_abs3(self):
        rep = spline_positivity_check(
            ScalarFunction.abs_pow3(), np.diag([-1.0, 1.0]), np.eye(2), np.linspace(-0.8, 0.8, 9), order=4
        )
        assert rep.passed and rep.evaluated == 9

    def test_cubic_polynomial(self, rng):
        f = ScalarFunction.spline3([0.0], [0.0], poly=(1.0, -2.0, 0.5, 3.0))
        rep = spline_positivity_check(f, random_hermitian(rng, 3), random_hermitian(rng, 3), (-1, 1, 7), order=4)
        assert abs(rep.min_value) < 1e-6

    def test_signed_square_order3(self, rng):
        for _ in range(5):
            A, B = random_hermitian(rng, 3), random_psd(rng, 3)
            rep = spline_positivity_check(ScalarFunction.spline2([0.0], [1.0]), A, B, (-1, 1, 15), order=3)
            assert rep.passed

    def test_roundoff_promotes_to_mp(self, rng):
        # float fourth differences near knots are roundoff; the check must not report them
        f = ScalarFunction.spline3([-0.3, 0.4], [0.5, 0.5], poly=(1.0, 2.0, -1.0, 0.5))
        A, B = random_hermitian(rng, 3), random_hermitian(rng, 3)
        rep = spline_positivity_check(f, A, B, (-1, 1, 21), order=4)
        assert rep.high_precision > 0 and rep.passed
        assert rep.min_normalized > -1e-12

    def test_roundoff_bound(self):
        f = ScalarFunction.monomial(4)
        A = np.diag([1.0, 2.0])
        assert fd_roundoff(f, A, 4, 1e-2) == pytest.approx(16 * fd_roundoff(f, A, 4, 2e-2))
        assert fd_roundoff(f, A, 4, 1.0) < 1e-11

    def test_order3_needs_psd(self):
        with pytest.raises(NotPsd):
            spline_positivity_check(ScalarFunction.abs_pow3(), np.eye(2), np.diag([1.0, -1.0]), [0.0], order=3)


class TestConjectureProbe:
    def test_convexity(self):
        rep = conjecture_probe(2, 10, seed=1)
        assert rep.min_normalized >= -1e-6

    def test_fourth(self):
        rep = conjecture_probe(4, 10, seed=2)
        assert rep.min_normalized >= -1e-6

    def test_empty(self):
        rep = conjecture_probe(5, 0, seed=0)
        assert rep.values == [] and rep.argmin is None

    def test_reproducible(self):
        assert conjecture_probe(3, 3, seed=4).values == conjecture_probe(3, 3, seed=4).values
