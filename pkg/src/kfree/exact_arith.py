"""Exact integer and rational arithmetic helpers.

Everything downstream (local densities, correlation sums, variance
decompositions) reduces to gcds, factorizations, and exact rationals.  This
module keeps those primitives in one place:

* ``factorize`` — trial division over a cached prime table, with a
  deterministic Miller-Rabin check for large cofactors;
* ``moebius_tau`` — μ(n) and the divisor count τ(n) in one pass;
* ``gcd_pow_k`` — gcd(q, m^k) evaluated through valuations of q, so the
  power m^k is never formed;
* ``crt_solve`` — simultaneous congruences with non-coprime moduli, merged
  pairwise; incompatibility is reported as ``None``, not an exception.

Exact rationals are carried by ``fractions.Fraction`` (aliased
``RationalValue``): always reduced, positive denominator, arbitrary
precision, so products of large numerators cannot silently wrap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

RationalValue = Fraction

_PRIME_TABLE_LIMIT = 1_000_000
_prime_table: Optional[np.ndarray] = None

# Deterministic Miller-Rabin witnesses for n < 3.3 * 10^24.
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def primes_up_to(limit: int) -> np.ndarray:
    """All primes <= limit, ascending, as an int64 array."""
    if limit < 2:
        return np.empty(0, dtype=np.int64)
    is_prime = np.ones(limit + 1, dtype=bool)
    is_prime[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if is_prime[p]:
            is_prime[p * p :: p] = False
    return np.flatnonzero(is_prime).astype(np.int64)


def _primes() -> np.ndarray:
    global _prime_table
    if _prime_table is None:
        _prime_table = primes_up_to(_PRIME_TABLE_LIMIT)
    return _prime_table


@dataclass(frozen=True)
class Factorization:
    """Prime factorization as an ascending tuple of (prime, exponent) pairs."""

    factors: tuple[tuple[int, int], ...]

    @property
    def n(self) -> int:
        out = 1
        for p, e in self.factors:
            out *= p**e
        return out

    def __iter__(self):
        return iter(self.factors)

    def __len__(self) -> int:
        return len(self.factors)


def _is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin for n below the witness bound."""
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for w in _MR_WITNESSES:
        x = pow(w, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def factorize(n: int) -> Factorization:
    """Factor n >= 1 by trial division; n = 1 yields the empty factorization."""
    if n < 1:
        raise ValueError(f"factorize requires n >= 1, got {n}")
    n = int(n)
    factors: list[tuple[int, int]] = []
    m = n
    for p in map(int, _primes()):
        if p * p > m:
            break
        if m % p == 0:
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            factors.append((p, e))
    if m > 1:
        if m < _PRIME_TABLE_LIMIT * _PRIME_TABLE_LIMIT or _is_prime(m):
            factors.append((m, 1))
        else:
            # Rare path: cofactor above the table square that is composite.
            q = _PRIME_TABLE_LIMIT + 1
            while q * q <= m:
                if m % q == 0:
                    e = 0
                    while m % q == 0:
                        m //= q
                        e += 1
                    factors.append((q, e))
                q += 2
            if m > 1:
                factors.append((m, 1))
            factors.sort()
    return Factorization(tuple(factors))


def moebius_tau(n: int) -> tuple[int, int]:
    """Return (μ(n), τ(n)) for n >= 1."""
    fac = factorize(n)
    tau = 1
    mu = 1
    for _, e in fac:
        tau *= e + 1
        if e > 1:
            mu = 0
        else:
            mu = -mu
    return mu, tau


def gcd_pow_k(q: int, m: int, k: int) -> int:
    """gcd(q, m^k) without forming m^k.

    Equals the product over primes p | q of p^min(v_p(q), k * v_p(m)).
    """
    if q < 1 or m < 1 or k < 1:
        raise ValueError(f"gcd_pow_k requires q, m, k >= 1, got {(q, m, k)}")
    out = 1
    for p, e in factorize(q):
        v = 0
        mm = m
        while mm % p == 0 and v * k < e:
            mm //= p
            v += 1
        out *= p ** min(e, k * v)
    return out


def crt_solve(
    congruences: Sequence[tuple[int, int]],
) -> Optional[tuple[int, int]]:
    """Merge congruences x ≡ r_i (mod m_i) with arbitrary moduli.

    Returns (residue, lcm) with 0 <= residue < lcm, or None when the system
    is incompatible.  The empty system yields (0, 1).
    """
    r0, m0 = 0, 1
    for r, m in congruences:
        if m < 1:
            raise ValueError(f"moduli must be >= 1, got {m}")
        r %= m
        g = math.gcd(m0, m)
        if (r - r0) % g != 0:
            return None
        lcm = m0 // g * m
        if m > 1:
            t = ((r - r0) // g * pow(m0 // g, -1, m // g)) % (m // g)
            r0 = (r0 + m0 * t) % lcm
        m0 = lcm
    return r0 % m0, m0
