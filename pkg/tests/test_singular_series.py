"""The shifted-pair constant S(n): closed product vs defining modulus sum."""
import math
from fractions import Fraction

import pytest

from kfree.gauss_local import delta_p_cases
from kfree.local_densities import rho_cached
from kfree.singular_series import (
    admissible_moduli,
    base_constant,
    odd_prime_corrections,
    sing_value,
    two_adic_factor,
)


class TestBaseConstant:
    def test_tiny_cutoff(self):
        got = base_constant(2, 3)
        rho = rho_cached(2)
        assert got.value == pytest.approx(rho.value**2 * (1 - 4 / 49), rel=1e-14)

    def test_cutoff_self_consistency(self):
        coarse = base_constant(2, 100_000)
        fine = base_constant(2, 1_000_000)
        assert coarse.intersects(fine)
        assert fine.tail < coarse.tail

    def test_high_k_tail_is_tiny(self):
        assert base_constant(4, 1000).tail < 1e-10

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            base_constant(1, 100)
        with pytest.raises(ValueError):
            base_constant(2, 2)


class TestTwoAdicFactor:
    def test_power_divides_n(self):
        assert two_adic_factor(4, 2) == Fraction(2)
        assert two_adic_factor(8, 3) == Fraction(4, 3)

    def test_power_divides_neighbor(self):
        assert two_adic_factor(3, 2) == Fraction(1)
        assert two_adic_factor(9, 2) == Fraction(1)
        assert two_adic_factor(7, 3) == 1 + Fraction(4, 36)

    def test_even_residue_vanishes_at_k2(self):
        # n ≡ 2 (mod 4) makes the factor 1 - 4/4 = 0
        assert two_adic_factor(2, 2) == 0
        assert two_adic_factor(6, 2) == 0

    def test_odd_generic_at_k3(self):
        assert two_adic_factor(11, 3) == 1 - Fraction(4, 36)

    def test_equals_local_factor_at_two(self):
        for k in (2, 3):
            for n in range(2, 51):
                assert two_adic_factor(n, k) == delta_p_cases(2, n, k), (n, k)


class TestOddPrimeCorrections:
    def test_no_high_powers(self):
        assert odd_prime_corrections(3, 2) == 1
        assert odd_prime_corrections(4, 2) == 1

    def test_power_divides_n(self):
        assert odd_prime_corrections(9, 2) == Fraction(7, 5)
        assert odd_prime_corrections(27, 3) == Fraction(25, 23)

    def test_power_divides_neighbor(self):
        assert odd_prime_corrections(10, 2) == Fraction(6, 5)
        assert odd_prime_corrections(26, 3) == Fraction(24, 23)

    def test_regrouping_identity(self):
        # grouping the local factors by divisibility class equals pulling
        # out the generic factor and applying the closed corrections
        for k in (2, 3):
            for n in range(2, 51):
                odd_ps = set()
                for m in (n - 1, n, n + 1):
                    if m < 2:
                        continue
                    d = 3
                    mm = m
                    while d * d <= mm:
                        if mm % d == 0:
                            odd_ps.add(d)
                            while mm % d == 0:
                                mm //= d
                        d += 2
                    if mm > 2:
                        odd_ps.add(mm)
                lhs = Fraction(1)
                rhs = odd_prime_corrections(n, k)
                for p in sorted(odd_ps):
                    if p == 2:
                        continue
                    lhs *= delta_p_cases(p, n, k)
                    rhs *= 1 - Fraction(4, (p**k - 2) ** 2)
                assert lhs == rhs, (n, k)


class TestAdmissibleModuli:
    def test_exponent_cap(self):
        mods = admissible_moduli(30, 2)
        assert 8 not in mods and 27 not in mods and 16 not in mods
        assert {1, 2, 3, 4, 9, 12, 30} <= set(mods)

    def test_brute_definition(self):
        def ok(q, k):
            m = q
            d = 2
            while d * d <= m:
                e = 0
                while m % d == 0:
                    m //= d
                    e += 1
                if e > k:
                    return False
                d += 1
            return True

        for k in (2, 3):
            assert admissible_moduli(100, k) == [q for q in range(1, 101) if ok(q, k)]


class TestSingValue:
    def test_closed_examples_frozen(self):
        # frozen from an independent local-product evaluation
        assert sing_value(3, 2).value.value == pytest.approx(
            0.09464987718220674, rel=1e-9
        )
        assert sing_value(4, 2).value.value == pytest.approx(
            0.1892997543644135, rel=1e-9
        )
        assert sing_value(9, 2).value.value == pytest.approx(
            0.1325098280550865, rel=1e-9
        )
        assert sing_value(11, 3).value.value == pytest.approx(
            0.4045456336196077, rel=1e-9
        )

    def test_closed_structure(self):
        base = base_constant(2).value
        assert sing_value(3, 2).value.value == pytest.approx(base, rel=1e-13)
        assert sing_value(9, 2).value.value == pytest.approx(base * 7 / 5, rel=1e-13)
        assert sing_value(4, 2).value.value == pytest.approx(
            2 * sing_value(3, 2).value.value, rel=1e-13
        )

    def test_vanishing_classes(self):
        assert sing_value(2, 2).value.value == 0.0
        assert sing_value(6, 2).value.value == 0.0
        assert sing_value(10, 2).value.value == 0.0

    def test_def_vs_closed_intervals(self):
        for k in (2, 3):
            for n in range(2, 16):
                d = sing_value(n, k, method="def", q_max=500)
                c = sing_value(n, k, method="closed")
                assert d.value.intersects(c.value, slack=1e-9), (n, k)

    def test_def_converges_toward_closed(self):
        c = sing_value(9, 2).value.value
        err_small = abs(sing_value(9, 2, "def", q_max=60).value.value - c)
        err_large = abs(sing_value(9, 2, "def", q_max=500).value.value - c)
        assert err_large <= err_small + 1e-12

    def test_euler_product_consistency(self):
        # closed mode vs the raw truncated local product
        for (n, k) in [(3, 2), (9, 2), (12, 2), (11, 3), (8, 3)]:
            closed = sing_value(n, k)
            rho = rho_cached(k)
            prod = rho.value * rho.value
            p = 2
            while p <= 10_000:
                prod *= float(delta_p_cases(p, n, k))
                p += 1
                while any(p % d == 0 for d in range(2, int(math.isqrt(p)) + 1)):
                    p += 1
            assert abs(closed.value.value - prod) <= closed.value.tail + 1e-6

    def test_nonnegative(self):
        for n in range(2, 61):
            assert sing_value(n, 2).value.value >= 0

    def test_result_fields(self):
        sv = sing_value(5, 2, method="def", q_max=100)
        assert (sv.n, sv.k, sv.method) == (5, 2, "def")
        assert sv.value.tail > 0

    def test_rejects_degenerate_shift(self):
        with pytest.raises(ValueError):
            sing_value(1, 2)
        with pytest.raises(ValueError):
            sing_value(1, 2, method="def")

    def test_rejects_bad_method_and_range(self):
        with pytest.raises(ValueError):
            sing_value(5, 2, method="magic")
        with pytest.raises(ValueError):
            sing_value(5, 1)
        with pytest.raises(ValueError):
            sing_value(5, 2, method="def", q_max=0)
