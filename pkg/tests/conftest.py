"""Shared fixtures and independent brute-force oracles.

The oracle helpers below are deliberately naive (trial division, literal
sums) and import nothing from the package, so that tests compare two
independent routes to the same quantity.
"""
import cmath
import math
from fractions import Fraction

import pytest

from kfree.kfree_core import build_sieve


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------

def oracle_factor(n: int) -> dict[int, int]:
    """Prime factorization by trial division."""
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def oracle_mu(n: int) -> int:
    fac = oracle_factor(n)
    if any(e > 1 for e in fac.values()):
        return 0
    return -1 if len(fac) % 2 else 1


def oracle_is_kfree(n: int, k: int) -> bool:
    return all(e < k for e in oracle_factor(n).values())


def oracle_twins(x: int, k: int) -> list[int]:
    free = [True] * (x + 2)
    for n in range(2, x + 2):
        free[n] = oracle_is_kfree(n, k)
    return [n for n in range(1, x + 1) if free[n] and free[n + 1]]


def oracle_h(q: int, a: int, k: int) -> Fraction:
    """h(q, a) = prod over p | q, (p^k, q) | a(a+1) of (1 - (p^k, q)/p^k)."""
    out = Fraction(1)
    for p, e in oracle_factor(q).items():
        d = p ** min(k, e)
        if (a * (a + 1)) % d == 0:
            out *= Fraction(p**k - d, p**k)
    return out


def oracle_f(q: int, k: int) -> Fraction:
    out = Fraction(1)
    for p in oracle_factor(q):
        out *= Fraction(p**k, p**k - 2)
    return out


def oracle_g_series(q: int, a: int, k: int, T: int) -> float:
    """Direct double sum of mu(uv) (q, u^k v^k) / (u^k v^k) over the class."""
    tot = 0.0
    for u in range(1, T + 1):
        uk = u**k
        if a % math.gcd(uk, q):
            continue
        for v in range(1, T + 1):
            m = oracle_mu(u * v)
            if m == 0:
                continue
            vk = v**k
            if (a + 1) % math.gcd(vk, q):
                continue
            tot += m * math.gcd(q, uk * vk) / (uk * vk)
    return tot


def oracle_H(q: int, a: int, k: int) -> complex:
    """H(q, a) = sum_b h(q, b) e(ab/q), literal sum."""
    tot = 0j
    for b in range(1, q + 1):
        tot += float(oracle_h(q, b, k)) * cmath.exp(2j * math.pi * a * b / q)
    return tot


def oracle_J(q: int, n: int, k: int) -> complex:
    """J(q; n) = sum over a coprime to q of |H(q, a)|^2 e(an/q)."""
    tot = 0j
    for a in range(1, q + 1):
        if math.gcd(a, q) == 1:
            tot += abs(oracle_H(q, a, k)) ** 2 * cmath.exp(2j * math.pi * a * n / q)
    return tot


def oracle_phi25(p: int, t: int, n: int) -> tuple[int, int]:
    """Literal set counts behind the local factor tables."""
    pt = p**t
    B = [b for b in range(1, pt + 1) if (b * (b + 1)) % pt == 0]
    phi2 = sum(1 for b in B if ((b + n) * (b + n + 1)) % pt == 0)
    mod = p ** (t - 1)
    phi5 = sum(1 for b1 in B for b2 in B if (b1 - b2 + n) % mod == 0)
    return phi2, phi5


def oracle_parseval(tw: list[int], Q: int) -> tuple[int, int]:
    """Both sides of the pair-correlation identity, by literal counting."""
    lhs = 0
    for q in range(1, Q + 1):
        counts = [0] * q
        for t in tw:
            counts[t % q] += 1
        lhs += sum(c * (c - 1) // 2 for c in counts)
    diffs: dict[int, int] = {}
    for i, t1 in enumerate(tw):
        for t2 in tw[:i]:
            diffs[t1 - t2] = diffs.get(t1 - t2, 0) + 1
    rhs = 0
    for d, cnt in diffs.items():
        rhs += cnt * sum(1 for u in range(1, Q + 1) if d % u == 0)
    return lhs, rhs


# ---------------------------------------------------------------------------
# fixtures
# ---------------------------------------------------------------------------

@pytest.fixture(scope="session")
def sieve_1e5_k2():
    return build_sieve(100_000, 2)


@pytest.fixture(scope="session")
def sieve_1e5_k3():
    return build_sieve(100_000, 3)


@pytest.fixture(scope="session")
def sieve_1e5_k4():
    return build_sieve(100_000, 4)


@pytest.fixture(scope="session")
def sieve_1e6_k2():
    return build_sieve(1_000_000, 2)
