"""Singular series for shifted pairs of consecutive k-free integers.

The correlation sum over n' of t(n') t(n'+n), where t marks starts of
consecutive k-free pairs, has main-term coefficient

    S(n) = sum_{q >= 1} q^{-2} sum over a coprime to q of |G(q,a)|^2 e(an/q)
         = ϱ^2 sum_{q} q^{-2} f(q)^2 J(q; n)
         = ϱ^2 prod_p Δ_p(n),

with J as in ``gauss_local``.  Only q whose prime exponents are <= k
contribute (J vanishes otherwise).  The closed product form factors as

    ϱ^2 prod_{p odd} (1 - 4 (p^k-2)^{-2})          [the base constant]
    * a 2-adic branch factor
    * (p^k-2)/(p^k-4)   for every odd p with p^k | n
    * (p^k-3)/(p^k-4)   for every odd p with p^k | n+1 or p^k | n-1.

Note S(n) can vanish exactly: e.g. k = 2, n ≡ 2 (mod 4) forces one of four
consecutive integers to be divisible by 4.

The shift n = 1 is rejected: the defining correlation degenerates (t(n')
and t(n'+1) overlap in the middle element) and neither form above is
derived for it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .exact_arith import factorize, primes_up_to
from .gauss_local import j_value_exact
from .local_densities import BoundedReal, f_factor, rho_cached

DEFAULT_Q_MAX = 500
DEFAULT_BASE_CUTOFF = 1_000_000


@dataclass
class SingularValue:
    """S(n) for one shift, with the interval carried by ``value``."""

    n: int
    k: int
    method: str
    value: BoundedReal


@lru_cache(maxsize=None)
def base_constant(k: int, prime_cutoff: int = DEFAULT_BASE_CUTOFF) -> BoundedReal:
    """ϱ^2 * prod over odd p <= cutoff of (1 - 4 (p^k-2)^{-2}), with tail.

    The omitted odd-prime factors satisfy
    sum_{p > cutoff} 4 (p^k-2)^{-2} <= 16 cutoff^{1-2k} / (2k-1), inflated
    for log(1-x) <= x/(1-x) and propagated multiplicatively; ϱ carries its
    own cached interval.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if prime_cutoff < 3:
        raise ValueError(f"prime_cutoff must be >= 3, got {prime_cutoff}")
    rho = rho_cached(k)
    p = primes_up_to(prime_cutoff)[1:].astype(np.float64)  # odd primes
    prod = float(np.prod(1.0 - 4.0 / (p**k - 2.0) ** 2))
    log_tail = (16.0 * prime_cutoff ** (1.0 - 2 * k) / (2 * k - 1)) / (
        1.0 - 4.0 / (prime_cutoff**k - 2) ** 2
    )
    odd_part = BoundedReal(prod, abs(prod) * math.expm1(log_tail))
    return rho.times(rho).times(odd_part)


def two_adic_factor(n: int, k: int) -> Fraction:
    """The p = 2 branch of the closed product, exact."""
    m = 2**k
    if n % m == 0:
        return 1 + Fraction(2, m - 2)
    if n % 2 == 0:
        return 1 - Fraction(4, (m - 2) ** 2)
    if (n + 1) % m == 0 or (n - 1) % m == 0:
        return 1 + Fraction(m - 4, (m - 2) ** 2)
    return 1 - Fraction(4, (m - 2) ** 2)


def odd_prime_corrections(n: int, k: int) -> Fraction:
    """Corrections relative to the base constant for odd p^k | n(n+1)(n-1)."""
    out = Fraction(1)
    for m, kind in ((n, "n"), (n + 1, "pm"), (n - 1, "pm")):
        if m < 2:
            continue
        for p, e in factorize(m):
            if p == 2 or e < k:
                continue
            pk = p**k
            if kind == "n":
                out *= Fraction(pk - 2, pk - 4)
            else:
                out *= Fraction(pk - 3, pk - 4)
    return out


def admissible_moduli(q_max: int, k: int) -> list[int]:
    """All q <= q_max whose prime exponents are all <= k, ascending."""
    primes = [int(p) for p in primes_up_to(q_max)]
    out: list[int] = []

    def descend(idx: int, q: int) -> None:
        out.append(q)
        for j in range(idx, len(primes)):
            p = primes[j]
            if q * p > q_max:
                break
            qq = q
            for _ in range(k):
                qq *= p
                if qq > q_max:
                    break
                descend(j + 1, qq)

    descend(0, 1)
    return sorted(out)


def _def_term_bound(p: int, t: int, n: int, k: int) -> float:
    """Upper bound for q^{-2} f(p^t)^2 |J(p^t; n)|, used by the tail.

    |J(p^t)| <= p^{3t-2k-1} (2p + 4) always; it vanishes for t >= 2 unless
    p^{t-1} divides one of n, n+1, n-1, and for t = 1 it is at most
    4 p^{2-2k} unless p | n(n+1)(n-1).
    """
    f2 = float(f_factor(p, k)) ** 2
    if t == 1:
        divides = n % p == 0 or (n + 1) % p == 0 or (n - 1) % p == 0
        core = 2.0 * p if divides else 4.0
        return f2 * core * float(p) ** (-2.0 * k)
    m = p ** (t - 1)
    if not (n % m == 0 or (n + 1) % m == 0 or (n - 1) % m == 0):
        return 0.0
    return f2 * (2.0 * p + 4.0) * float(p) ** (3 * t - 2 * k - 1 - 2 * t)


def _def_tail(n: int, k: int, q_max: int) -> float:
    """Bound the q > q_max remainder of the defining sum (times ϱ^{-2}).

    Every term is bounded by the multiplicative majorant of
    ``_def_term_bound``; the tail is the full Euler product of that
    majorant minus its partial sum over admissible q <= q_max.
    """
    p_max = max(q_max, n + 2, 100)
    full = 1.0
    for p in map(int, primes_up_to(p_max)):
        local = 1.0
        for t in range(1, k + 1):
            local += _def_term_bound(p, t, n, k)
        full *= local
    guard = (1.0 - 2.0 * float(p_max) ** (-k)) ** -2
    full *= math.exp(guard * 4.0 * p_max ** (1.0 - 2 * k) / (2 * k - 1))
    partial = 0.0
    for q in admissible_moduli(q_max, k):
        term = 1.0
        for p, t in factorize(q):
            term *= _def_term_bound(p, t, n, k)
        partial += term
    return max(full - partial, 0.0)


def sing_value(
    n: int, k: int, method: str = "closed", q_max: int = DEFAULT_Q_MAX
) -> SingularValue:
    """S(n) by the defining modulus sum or the closed product form."""
    if n < 2:
        raise ValueError(
            "shift n must be >= 2: the n = 1 correlation degenerates and is "
            "not covered by either evaluation"
        )
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if method == "closed":
        scale = two_adic_factor(n, k) * odd_prime_corrections(n, k)
        value = base_constant(k, DEFAULT_BASE_CUTOFF).scaled(scale)
        return SingularValue(n, k, method, value)
    if method != "def":
        raise ValueError(f"unknown method {method!r}")
    if q_max < 1:
        raise ValueError(f"q_max must be >= 1, got {q_max}")
    rho = rho_cached(k)
    rho2 = rho.times(rho)
    total = 0.0
    for q in admissible_moduli(q_max, k):
        j = j_value_exact(q, n, k)
        if j == 0:
            continue
        total += float(f_factor(q, k) ** 2 * j) / (q * q)
    inner = BoundedReal(total, _def_tail(n, k, q_max))
    return SingularValue(n, k, method, rho2.times(inner))
