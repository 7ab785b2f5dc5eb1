"""Exponential sums, Farey-arc classification, and the autocorrelation identity."""
import cmath
import math
import random

import pytest

from conftest import oracle_parseval, oracle_twins
from kfree.errors import CapacityError
from kfree.circle_method import (
    ArcParams,
    L2Row,
    arc_classify,
    autocorr_identity,
    i_beta,
    k_alpha,
    l2_bound_shape,
    l2_delta_report,
    s_alpha,
    s_star_delta,
)
from kfree.kfree_core import build_sieve
from kfree.local_densities import rho_cached


def literal_k(alpha: float, x: int, Q: int) -> complex:
    return sum(
        cmath.exp(2j * math.pi * (alpha * u * v))
        for u in range(1, Q + 1)
        for v in range(1, x // u + 1)
    )


class TestSAlpha:
    def test_zero_frequency_counts_twins(self):
        sv = build_sieve(10, 2)
        assert s_alpha(sv, 0.0) == pytest.approx(5 + 0j)

    def test_half_frequency_alternating_sum(self):
        # twins up to 10 sit at 1, 2, 5, 6, 10; e(n/2) = (-1)^n
        sv = build_sieve(10, 2)
        assert s_alpha(sv, 0.5) == pytest.approx(1 + 0j, abs=1e-12)

    def test_peak_at_zero(self):
        sv = build_sieve(3000, 2)
        peak = abs(s_alpha(sv, 0.0))
        rng = random.Random(7)
        for _ in range(25):
            assert abs(s_alpha(sv, rng.random())) <= peak + 1e-9

    def test_conjugate_symmetry(self):
        sv = build_sieve(500, 3)
        for alpha in (0.3, 0.123456, 0.9):
            lhs = s_alpha(sv, -alpha)
            rhs = s_alpha(sv, alpha).conjugate()
            assert lhs == pytest.approx(rhs, abs=1e-9)

    def test_matches_literal_sum(self):
        sv = build_sieve(200, 2)
        alpha = 0.237
        lit = sum(
            cmath.exp(2j * math.pi * alpha * int(n)) for n in sv.twin_positions
        )
        assert s_alpha(sv, alpha) == pytest.approx(lit, abs=1e-9)


class TestIBeta:
    def test_zero_is_length(self):
        assert i_beta(0.0, 137) == pytest.approx(137 + 0j)
        assert i_beta(1.0, 137) == pytest.approx(137 + 0j)

    def test_half_cancels_even_length(self):
        assert i_beta(0.5, 10) == pytest.approx(0j, abs=1e-12)

    def test_matches_literal_sum(self):
        for beta in (0.1, 0.77, -0.3):
            lit = sum(cmath.exp(2j * math.pi * beta * m) for m in range(1, 51))
            assert i_beta(beta, 50) == pytest.approx(lit, abs=1e-10)

    def test_reciprocal_distance_bound(self):
        # |I(beta)| <= 1 / (2 ||beta||)
        for beta in (0.1, 0.25, 0.41):
            dist = min(beta % 1.0, 1.0 - beta % 1.0)
            assert abs(i_beta(beta, 10_000)) <= 1.0 / (2.0 * dist) + 1e-9

    def test_rejects_bad_x(self):
        with pytest.raises(ValueError):
            i_beta(0.1, 0)


class TestKAlpha:
    def test_zero_frequency_divisor_sum(self):
        # sum_{u<=4} floor(30/u) = 30 + 15 + 10 + 7
        assert k_alpha(0.0, 30, 4) == pytest.approx(62 + 0j)

    def test_full_matches_literal_both_regimes(self):
        rng = random.Random(11)
        for x, Q in [(100, 9), (100, 40), (300, 17), (300, 120), (50, 50)]:
            alpha = rng.random()
            got = k_alpha(alpha, x, Q)
            assert got == pytest.approx(literal_k(alpha, x, Q), abs=1e-7), (x, Q)

    def test_split_identity_small_Q(self):
        alpha, x, Q, q = 0.318, 30, 4, 2
        full = k_alpha(alpha, x, Q)
        sm = k_alpha(alpha, x, Q, part="smooth", q=q)
        ro = k_alpha(alpha, x, Q, part="rough", q=q)
        assert sm + ro == pytest.approx(full, abs=1e-9)

    def test_split_identity_large_Q(self):
        rng = random.Random(3)
        for x, Q, q in [(30, 10, 3), (200, 60, 4), (200, 200, 7), (64, 9, 2)]:
            alpha = rng.random()
            full = k_alpha(alpha, x, Q)
            sm = k_alpha(alpha, x, Q, part="smooth", q=q)
            ro = k_alpha(alpha, x, Q, part="rough", q=q)
            assert sm + ro == pytest.approx(full, abs=1e-7), (x, Q, q)

    def test_unit_modulus_degenerate_split(self):
        alpha = 0.41
        assert k_alpha(alpha, 100, 30, part="rough", q=1) == 0j
        assert k_alpha(alpha, 100, 30, part="smooth", q=1) == pytest.approx(
            k_alpha(alpha, 100, 30), abs=1e-9
        )

    def test_smooth_part_matches_literal_small_regime(self):
        # Q <= sqrt(x): the smooth part is the literal q | u subsum
        alpha, x, Q, q = 0.2718, 150, 12, 3
        lit = sum(
            cmath.exp(2j * math.pi * alpha * u * v)
            for u in range(1, Q + 1)
            if u % q == 0
            for v in range(1, x // u + 1)
        )
        got = k_alpha(alpha, x, Q, part="smooth", q=q)
        assert got == pytest.approx(lit, abs=1e-8)

    def test_smooth_part_matches_literal_large_regime(self):
        # Q > sqrt(x): the split lives in swapped coordinates, where the
        # first index runs to sqrt(x) and carries both column ranges
        alpha, x, Q, q = 0.2718, 150, 100, 3
        rx = math.isqrt(x)
        lit = sum(
            cmath.exp(2j * math.pi * alpha * u * v)
            for u in range(q, rx + 1, q)
            for v in range(1, x // u + 1)
        ) + sum(
            cmath.exp(2j * math.pi * alpha * u * v)
            for v in range(q, rx + 1, q)
            for u in range(rx + 1, min(Q, x // v) + 1)
        )
        got = k_alpha(alpha, x, Q, part="smooth", q=q)
        assert got == pytest.approx(lit, abs=1e-8)

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            k_alpha(0.1, 10, 0)
        with pytest.raises(ValueError):
            k_alpha(0.1, 10, 11)
        with pytest.raises(ValueError):
            k_alpha(0.1, 10, 2, part="half")
        with pytest.raises(ValueError):
            k_alpha(0.1, 10, 2, q=0)


class TestSStarDelta:
    def test_unit_modulus_at_center(self):
        sv = build_sieve(1000, 2)
        rho = rho_cached(2)
        star, delta = s_star_delta(sv, 1, 1, 0.0)
        assert star == pytest.approx(rho.value * 1000 + 0j, rel=1e-12)
        assert delta == pytest.approx(sv.twin_count - rho.value * 1000, rel=1e-9)

    def test_model_tracks_sum_at_center(self):
        # at alpha = a/q the defect is o(x); crude 10% screen at x = 1e5
        sv = build_sieve(100_000, 2)
        for q, a in [(1, 1), (3, 1), (4, 3), (5, 2)]:
            star, delta = s_star_delta(sv, q, a, a / q)
            assert abs(delta) < 0.1 * sv.x, (q, a)
            assert abs(star) < 2 * sv.x

    def test_finite_off_center(self):
        sv = build_sieve(2000, 3)
        star, delta = s_star_delta(sv, 3, 1, 1 / 3 + 1e-4)
        assert math.isfinite(abs(star)) and math.isfinite(abs(delta))
        assert star + delta == pytest.approx(s_alpha(sv, 1 / 3 + 1e-4), abs=1e-9)

    def test_rejects_bad_class(self):
        sv = build_sieve(100, 2)
        with pytest.raises(ValueError):
            s_star_delta(sv, 4, 2, 0.5)
        with pytest.raises(ValueError):
            s_star_delta(sv, 4, 5, 0.5)


class TestArcParams:
    def test_dissection_scales(self):
        p = ArcParams(10_000, tau=0.05)
        assert p.R == pytest.approx(158.48931924611142)
        assert p.q_cap == 63
        assert p.T == 1.0

    def test_rejects_bad_values(self):
        with pytest.raises(ValueError):
            ArcParams(3)
        with pytest.raises(ValueError):
            ArcParams(100, tau=0.0)
        with pytest.raises(ValueError):
            ArcParams(100, tau=0.5)
        with pytest.raises(ValueError):
            ArcParams(10_000, T=0.5)
        with pytest.raises(ValueError):
            ArcParams(10_000, T=64.0)


class TestArcClassify:
    def test_near_one_half(self):
        p = ArcParams(10_000)
        assert arc_classify(0.5 + 1e-9, p) == (True, 2, 1)

    def test_frozen_interior_point(self):
        # independently located: |23 * 0.434881 - 10| ~ 0.00226 <= 1/R
        p = ArcParams(10_000)
        assert arc_classify(0.434881, p) == (True, 23, 10)

    def test_golden_ratio_is_minor(self):
        p = ArcParams(10_000)
        alpha = (math.sqrt(5.0) - 1.0) / 2.0
        assert arc_classify(alpha, p) == (False, 0, 0)

    def test_near_boundary_major(self):
        p = ArcParams(10_000)
        alpha = 1.0 + 0.999 / p.R
        assert arc_classify(alpha, p) == (True, 1, 1)

    def test_grid_classification_is_consistent(self):
        p = ArcParams(4096, tau=0.06)
        lo, hi = 1.0 / p.R + 1e-12, 1.0 + 1.0 / p.R
        n_major = 0
        for i in range(1000):
            alpha = lo + (hi - lo) * i / 999.0
            major, q, a = arc_classify(alpha, p)
            if major:
                n_major += 1
                assert 1 <= q <= p.q_cap
                assert 1 <= a <= q
                assert math.gcd(a, q) == 1
                assert abs(q * alpha - a) <= 1.0 / p.R + 1e-12
            else:
                assert (q, a) == (0, 0)
        assert 0 < n_major < 1000

    def test_rejects_outside_window(self):
        p = ArcParams(10_000)
        with pytest.raises(ValueError):
            arc_classify(0.0, p)
        with pytest.raises(ValueError):
            arc_classify(1.2, p)


class TestAutocorrIdentity:
    def test_tiny_case(self):
        sv = build_sieve(10, 2)
        assert autocorr_identity(sv, 2) == (14, 14)

    def test_degenerate_x(self):
        sv = build_sieve(1, 2)
        assert autocorr_identity(sv, 1) == (0, 0)

    def test_frozen_values(self):
        assert autocorr_identity(build_sieve(200, 2), 14) == (7802, 7802)
        assert autocorr_identity(build_sieve(200, 3), 14) == (29932, 29932)
        assert autocorr_identity(build_sieve(37, 2), 37) == (338, 338)

    def test_matches_independent_enumeration(self):
        rng = random.Random(23)
        for _ in range(6):
            x = rng.randint(5, 150)
            Q = rng.randint(1, x)
            k = rng.choice([2, 3])
            sv = build_sieve(x, k)
            lhs, rhs = autocorr_identity(sv, Q)
            o_lhs, o_rhs = oracle_parseval(oracle_twins(x, k), Q)
            assert lhs == rhs == o_lhs == o_rhs, (x, Q, k)

    def test_identity_holds_at_scale(self):
        sv = build_sieve(100_000, 2)
        lhs, rhs = autocorr_identity(sv, 300)
        assert lhs == rhs
        assert lhs > 0

    def test_capacity_cap(self):
        sv = build_sieve(2**24 + 1, 2)
        with pytest.raises(CapacityError):
            autocorr_identity(sv, 2)

    def test_rejects_bad_Q(self):
        sv = build_sieve(10, 2)
        with pytest.raises(ValueError):
            autocorr_identity(sv, 0)


class TestL2Report:
    def test_bound_shape_positive(self):
        assert l2_bound_shape(1.0, 400, 2) > 0
        assert l2_bound_shape(4.0, 400, 3) > 0
        assert l2_bound_shape(8.0, 10_000, 2) > l2_bound_shape(2.0, 10_000, 2)

    def test_rows_well_formed(self):
        sv = build_sieve(400, 2)
        params = ArcParams(400, T=1.0)
        rows = l2_delta_report(sv, params, [1.0, 2.0, 4.0], grid_per_arc=16)
        assert len(rows) == 3
        for row in rows:
            assert isinstance(row, L2Row)
            assert row.integral >= 0 and math.isfinite(row.integral)
            assert row.bound_shape > 0
            assert row.ratio == pytest.approx(row.integral / row.bound_shape)
        assert rows[0].T == 1.0 and rows[2].T == 4.0

    def test_empty_list(self):
        sv = build_sieve(400, 2)
        assert l2_delta_report(sv, ArcParams(400), []) == []

    def test_grid_refinement_converges(self):
        sv = build_sieve(400, 2)
        params = ArcParams(400)
        coarse = l2_delta_report(sv, params, [2.0], grid_per_arc=32)[0].integral
        fine = l2_delta_report(sv, params, [2.0], grid_per_arc=64)[0].integral
        assert fine == pytest.approx(coarse, rel=0.5)

    def test_rejects_out_of_range_T(self):
        sv = build_sieve(400, 2)
        params = ArcParams(400)
        with pytest.raises(ValueError):
            l2_delta_report(sv, params, [0.5])
        with pytest.raises(ValueError):
            l2_delta_report(sv, params, [20.0])
        with pytest.raises(ValueError):
            l2_delta_report(sv, params, [1.0], grid_per_arc=0)
