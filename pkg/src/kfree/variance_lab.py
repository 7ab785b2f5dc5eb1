"""Variance of twin k-free counts over residue classes, and its pieces.

With A(x; q, a) the count of n <= x, n ≡ a (mod q), n and n+1 both k-free,
and g(q, a) the local density, the variance over all classes up to Q is

    Y_k(x, Q) = sum_{q <= Q} sum_{a=1}^{q} (A(x; q, a) - g(q, a) x / q)^2
              = S1 - 2 x S2 + x^2 S3,

    S1 = ΣΣ A^2,   S2 = ΣΣ A g / q,   S3 = ΣΣ g^2 / q^2.

S3 equals the constant

    c1(Q) = sum_{q <= Q} q^{-1} sum_{u,v} μ(uv) (u v)^{-k}
            sum_{r,s : (r,v,q) = (s,u,q) = (s,r) = 1}
                μ(r) μ(s) r^{-k} s^{-k} (s^k, v^k, q) (r^k, u^k, q)

exactly; ``c1_truncated`` evaluates the literal box truncation u,v,r,s <=
trunc of this quadruple sum (organized by gcd classes with the radical of q,
which is an exact regrouping, not an approximation) plus a tail bound.

``delta_count`` counts residues a <= q with (u^k,q) | a, (r^k,q) | a,
(v^k,q) | a+1, (s^k,q) | a+1 and compares with the product formula
q (r^k,u^k,q) (s^k,v^k,q) / ((u^k,q)(r^k,q)(v^k,q)(s^k,q)), applicable when
(u,s,q) = (v,r,q) = 1 and the two lcm blocks are coprime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import CapacityError
from .exact_arith import factorize, gcd_pow_k
from .kfree_core import SieveTable, build_sieve
from .local_densities import (
    BoundedReal,
    f_factor,
    h_profile,
    rho_cached,
    _series_context,
)

DEFAULT_C1_TRUNC = 500


@dataclass
class VarianceStats:
    """One (x, Q, k) evaluation of the variance and its decomposition."""

    x: int
    Q: int
    k: int
    Y: float
    S1: float
    S2: float
    S3: float
    g_tail: float  # worst per-class shift from the ϱ interval, max over q


def variance_stats(
    sieve: SieveTable, Q: int, rho: Optional[BoundedReal] = None
) -> VarianceStats:
    """Exact class counts against closed-mode densities, accumulated in
    ascending q with pairwise per-q reductions (deterministic)."""
    x, k = sieve.x, sieve.k
    if not 1 <= Q <= x:
        raise ValueError(f"Q must be in 1..x = 1..{x}, got {Q}")
    if Q > 10_000:
        raise CapacityError(
            f"variance accumulation is capped at Q <= 10000 (O(Q^2) class "
            f"values), got {Q}"
        )
    rho = rho if rho is not None else rho_cached(k)
    tw = sieve.twin_positions
    Y = S1 = S2 = S3 = 0.0
    g_tail = 0.0
    for q in range(1, Q + 1):
        counts = np.bincount(tw % q, minlength=q).astype(np.float64)
        A = np.roll(counts, -1)  # index a-1 for a = 1..q (a = q wraps to 0)
        fac = factorize(q)
        f = float(f_factor(q, k))
        g = rho.value * f * h_profile(q, k, fac)
        res = A - g * (x / q)
        Y += float(np.sum(res * res))
        S1 += float(np.sum(A * A))
        S2 += float(np.sum(A * g)) / q
        S3 += float(np.sum(g * g)) / (q * q)
        g_tail = max(g_tail, rho.tail * f * (x / q))
    return VarianceStats(x=x, Q=Q, k=k, Y=Y, S1=S1, S2=S2, S3=S3, g_tail=g_tail)


def decomposition_residual(stats: VarianceStats) -> float:
    """Relative defect of Y = S1 - 2 x S2 + x^2 S3."""
    lhs = stats.Y
    rhs = stats.S1 - 2 * stats.x * stats.S2 + stats.x**2 * stats.S3
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1.0)


def _radical(fac) -> int:
    out = 1
    for p, _ in fac:
        out *= p
    return out


def _divisors_of_radical(rad: int) -> list[int]:
    fac = factorize(rad)
    divs = [1]
    for p, _ in fac:
        divs += [d * p for d in divs]
    return sorted(divs)


class _ClassSums:
    """Box sums of μ(a) a^{-k} over classes gcd(a, rad) = d, with pair
    coupling (a, b) = 1 carried by an explicit coprimality matrix."""

    def __init__(self, rad: int, k: int, trunc: int):
        ctx = _series_context(trunc)
        a = ctx.n
        w = ctx.mu * a.astype(np.float64) ** (-float(k))
        gcd_rad = np.gcd(a, rad)
        self.divs = _divisors_of_radical(rad)
        self.masks = {d: gcd_rad == d for d in self.divs}
        self.pair = {}
        for d1 in self.divs:
            m1 = self.masks[d1]
            row = w[m1] @ ctx.coprime[m1]
            for d2 in self.divs:
                m2 = self.masks[d2]
                self.pair[(d1, d2)] = float(row[m2] @ w[m2])
        # absolute class sums for the tail: within the box, and beyond it
        self.abs_box = {
            d: float(np.sum(np.abs(w[self.masks[d]]))) for d in self.divs
        }
        self.abs_tail = {}
        for d in self.divs:
            m = max(trunc / d - 1.0, 1.0)
            self.abs_tail[d] = d ** (-float(k)) * m ** (1.0 - k) / (k - 1)
        self.abs_full = {
            d: self.abs_box[d] + self.abs_tail[d] for d in self.divs
        }


@lru_cache(maxsize=32)
def _class_sums(rad: int, k: int, trunc: int) -> _ClassSums:
    return _ClassSums(rad, k, trunc)


def c1_truncated(Q: int, k: int, trunc: int = DEFAULT_C1_TRUNC) -> BoundedReal:
    """The quadruple sum c1(Q) truncated at u, v, r, s <= trunc.

    The box sum is exact; the tail bounds the omitted terms (any variable
    beyond trunc) by absolute values class-by-class, dropping only the
    coprimality couplings, so it is a valid if conservative envelope.
    """
    if Q < 1:
        raise ValueError(f"Q must be >= 1, got {Q}")
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if trunc < 2:
        raise ValueError(f"trunc must be >= 2, got {trunc}")
    value = 0.0
    tail = 0.0
    for q in range(1, Q + 1):
        fac = factorize(q)
        rad = _radical(fac)
        cs = _class_sums(rad, k, trunc)
        exps = dict(fac)

        def weight(d: int) -> float:
            out = 1.0
            for p, e in factorize(d):
                out *= p ** min(k, exps[p])
            return out

        wcache = {d: weight(d) for d in cs.divs}
        vq = 0.0
        tq = 0.0
        for du in cs.divs:
            for dv in cs.divs:
                a_pair = cs.pair[(du, dv)]
                a_abs = cs.abs_full[du] * cs.abs_full[dv]
                a_tail = (
                    cs.abs_tail[du] * cs.abs_full[dv]
                    + cs.abs_full[du] * cs.abs_tail[dv]
                )
                for dr in cs.divs:
                    if math.gcd(dr, dv) != 1:
                        continue
                    for ds in cs.divs:
                        if math.gcd(ds, du) != 1:
                            continue
                        w = wcache[math.gcd(dr, du)] * wcache[math.gcd(ds, dv)]
                        b_pair = cs.pair[(dr, ds)]
                        vq += w * a_pair * b_pair
                        b_abs = cs.abs_full[dr] * cs.abs_full[ds]
                        b_tail = (
                            cs.abs_tail[dr] * cs.abs_full[ds]
                            + cs.abs_full[dr] * cs.abs_tail[ds]
                        )
                        tq += w * (a_tail * b_abs + a_abs * b_tail)
        value += vq / q
        tail += tq / q
    return BoundedReal(value, tail)


def delta_count(
    q: int, u: int, v: int, r: int, s: int, k: int
) -> tuple[int, Optional[Fraction]]:
    """Solutions a <= q of the four divisibility conditions, against the
    product formula (None when its side conditions fail)."""
    for name, val in (("q", q), ("u", u), ("v", v), ("r", r), ("s", s)):
        if val < 1:
            raise ValueError(f"{name} must be >= 1, got {val}")
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    du = gcd_pow_k(q, u, k)
    dr = gcd_pow_k(q, r, k)
    dv = gcd_pow_k(q, v, k)
    ds = gcd_pow_k(q, s, k)
    a = np.arange(1, q + 1, dtype=np.int64)
    brute = int(
        np.count_nonzero(
            (a % du == 0) & (a % dr == 0) & ((a + 1) % dv == 0) & ((a + 1) % ds == 0)
        )
    )
    lcm1 = du * dr // math.gcd(du, dr)
    lcm2 = dv * ds // math.gcd(dv, ds)
    applicable = (
        math.gcd(math.gcd(u, s), q) == 1
        and math.gcd(math.gcd(v, r), q) == 1
        and math.gcd(lcm1, lcm2) == 1
    )
    formula = Fraction(q, lcm1 * lcm2) if applicable else None
    return brute, formula


def bound_new_shape(x: float, Q: float, k: int) -> float:
    """x^{1/k} Q^{2-1/k} + x^{1+2/k} log Q + x^{3/2 + 1/(2k)} (ε dropped)."""
    return (
        x ** (1.0 / k) * Q ** (2.0 - 1.0 / k)
        + x ** (1.0 + 2.0 / k) * math.log(max(Q, 1.0))
        + x ** (1.5 + 1.0 / (2 * k))
    )


def bound_old_shape(x: float, Q: float, k: int) -> float:
    """x^{2/k} Q^{2-2/k} + x^{4/(k+1)} (ε dropped)."""
    return x ** (2.0 / k) * Q ** (2.0 - 2.0 / k) + x ** (4.0 / (k + 1))


@dataclass
class ScalingRow:
    x: int
    Q: int
    k: int
    Y: float
    S1: float
    S2: float
    S3: float
    bound_new: float
    bound_old: float
    ratio_new: float
    ratio_old: float


@dataclass
class ScalingReport:
    """Variance growth along an x grid with Q tied to x by a rule.

    For k = 2 the new bound shape is reported for reference only (that case
    is covered by the elementary estimate Y ≪ x^2 log Q + Q^2, not by the
    exponent in ``bound_new_shape``).
    """

    k: int
    q_rule: str
    reference_only: bool
    rows: list[ScalingRow]


def scaling_report(
    k: int,
    x_grid: Sequence[int],
    q_rule: Callable[[int], int] | float = 0.75,
    rho: Optional[BoundedReal] = None,
) -> ScalingReport:
    if isinstance(q_rule, (int, float)):
        expo = float(q_rule)
        rule = lambda x: max(1, int(x**expo))  # noqa: E731
        desc = f"Q = floor(x^{expo:g})"
    else:
        rule = q_rule
        desc = "Q = user rule"
    rows = []
    for x in x_grid:
        sieve = build_sieve(int(x), k)
        Q = min(rule(int(x)), int(x))
        st = variance_stats(sieve, Q, rho=rho)
        bn = bound_new_shape(x, Q, k)
        bo = bound_old_shape(x, Q, k)
        rows.append(
            ScalingRow(
                x=int(x),
                Q=Q,
                k=k,
                Y=st.Y,
                S1=st.S1,
                S2=st.S2,
                S3=st.S3,
                bound_new=bn,
                bound_old=bo,
                ratio_new=st.Y / bn,
                ratio_old=st.Y / bo,
            )
        )
    return ScalingReport(k=k, q_rule=desc, reference_only=(k == 2), rows=rows)
