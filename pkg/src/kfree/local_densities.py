"""Local densities of consecutive k-free pairs in residue classes.

The expected count of n <= x with n, n+1 both k-free and n ≡ a (mod q) is
(g(q,a)/q) * x, where the local density g(q,a) has two equivalent forms:

* a double series over pairs (u, v) weighted by μ(uv) (q, u^k v^k) / (u^k v^k),
  restricted to (u^k, q) | a and (v^k, q) | a + 1 — evaluated here with an
  explicit truncation and a documented tail bound;
* the closed product ϱ · f(q) · h(q, a), where
  ϱ   = prod over all primes of (1 - 2 p^{-k}),
  f(q) = prod over p | q of (1 - 2 p^{-k})^{-1},
  h(q,a) = prod over p | q with (p^k, q) | a(a+1) of (1 - (p^k, q) / p^k).

f and h are exact rationals; ϱ is irrational and is carried as a value plus
a rigorous interval half-width (``BoundedReal``).  Note h(q, a) = 0 exactly
when some p with v_p(q) >= k has p^k | a(a+1): every factor lies in [0, 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import numpy as np

from .exact_arith import Factorization, factorize, primes_up_to

DEFAULT_RHO_CUTOFF = 1_000_000
DEFAULT_SERIES_TRUNC = 500


@dataclass
class BoundedReal:
    """A real number known to lie in [value - tail, value + tail]."""

    value: float
    tail: float = 0.0

    def __post_init__(self) -> None:
        if self.tail < 0:
            raise ValueError("tail must be non-negative")

    def interval(self) -> tuple[float, float]:
        return self.value - self.tail, self.value + self.tail

    def intersects(self, other: "BoundedReal", slack: float = 0.0) -> bool:
        return abs(self.value - other.value) <= self.tail + other.tail + slack

    def scaled(self, c) -> "BoundedReal":
        """Multiply by an exactly known constant c."""
        c = float(c)
        return BoundedReal(self.value * c, self.tail * abs(c))

    def times(self, other: "BoundedReal") -> "BoundedReal":
        """Interval product, keeping value * value as the representative."""
        lo1, hi1 = self.interval()
        lo2, hi2 = other.interval()
        corners = (lo1 * lo2, lo1 * hi2, hi1 * lo2, hi1 * hi2)
        v = self.value * other.value
        return BoundedReal(v, max(max(corners) - v, v - min(corners)))


@dataclass
class DensityValue(BoundedReal):
    """A local density g(q, a) together with the parameters that produced it."""

    q: int = 1
    a: int = 1
    k: int = 2
    mode: str = "closed"


@lru_cache(maxsize=None)
def rho_approx(k: int, prime_cutoff: int = DEFAULT_RHO_CUTOFF) -> BoundedReal:
    """The twin k-free density ϱ = prod over primes of (1 - 2 p^{-k}).

    The product is taken over p <= prime_cutoff; |log| of the omitted factor
    is bounded by sum_{m > cutoff} 2 m^{-k} <= 2 cutoff^{1-k} / (k - 1),
    inflated by (1 - 2 cutoff^{-k})^{-1} to cover log(1-x) <= x/(1-x), and
    propagated multiplicatively.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if prime_cutoff < 2:
        raise ValueError(f"prime_cutoff must be >= 2, got {prime_cutoff}")
    p = primes_up_to(prime_cutoff).astype(np.float64)
    value = float(np.prod(1.0 - 2.0 * p ** (-float(k))))
    log_tail = (2.0 * prime_cutoff ** (1.0 - k) / (k - 1)) / (
        1.0 - 2.0 * prime_cutoff ** (-float(k))
    )
    return BoundedReal(value, abs(value) * math.expm1(log_tail))


def rho_cached(k: int) -> BoundedReal:
    """ϱ at the standard cutoff, computed once per k."""
    return rho_approx(k, DEFAULT_RHO_CUTOFF)


def f_factor(q: int, k: int) -> Fraction:
    """f(q) = prod over p | q of (1 - 2 p^{-k})^{-1}, exact."""
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    out = Fraction(1)
    for p, _ in factorize(q):
        pk = p**k
        out *= Fraction(pk, pk - 2)
    return out


def h_local(q: int, a: int, k: int) -> Fraction:
    """h(q, a) = prod over p | q with (p^k, q) | a(a+1) of (1 - (p^k, q)/p^k).

    a is treated as a residue class mod q.  Factors lie in [0, 1): the value
    is 0 exactly when v_p(q) >= k and p^k | a(a+1) for some p.
    """
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    a = a % q
    prod = Fraction(1)
    for p, e in factorize(q):
        pk = p**k
        d = p ** min(k, e)
        if (a * (a + 1)) % d == 0:
            prod *= Fraction(pk - d, pk)
    return prod


def h_profile(q: int, k: int, fac: Optional[Factorization] = None) -> np.ndarray:
    """h(q, a) for a = 1..q as a float array (index a-1)."""
    fac = fac if fac is not None else factorize(q)
    a = np.arange(1, q + 1, dtype=np.int64)
    h = np.ones(q, dtype=np.float64)
    for p, e in fac:
        d = p ** min(k, e)
        rem = a % d
        mask = (rem == 0) | (rem == d - 1)
        h[mask] *= 1.0 - d / float(p**k)
    return h


class _SeriesContext:
    """Shared arrays for truncated double-series evaluations."""

    def __init__(self, trunc: int):
        self.trunc = trunc
        n = np.arange(1, trunc + 1, dtype=np.int64)
        self.n = n
        mu = np.ones(trunc + 1, dtype=np.int64)
        for p in map(int, primes_up_to(trunc)):
            mu[p::p] *= -1
            sq = p * p
            if sq <= trunc:
                mu[sq::sq] = 0
        mu[0] = 0
        self.mu = mu[1:]  # μ(n), 0 for non-squarefree
        self.coprime = (np.gcd.outer(n, n) == 1).astype(np.float64)


@lru_cache(maxsize=4)
def _series_context(trunc: int) -> _SeriesContext:
    return _SeriesContext(trunc)


def _gcd_pow_profile(q: int, k: int, n: np.ndarray, fac: Factorization) -> np.ndarray:
    """gcd(q, m^k) for each squarefree m in the array n (junk elsewhere)."""
    d = np.ones(len(n), dtype=np.int64)
    for p, e in fac:
        d[n % p == 0] *= p ** min(e, k)
    return d


def series_tail_bound(q: int, k: int, trunc: int) -> float:
    """Bound for the mass of series terms with max(u, v) > trunc.

    Each omitted term is at most q / (u^k v^k); summing over u > trunc (and
    symmetrically v > trunc) gives 2 ζ(k) q trunc^{1-k} / (k-1).  The larger
    of that and the conventional 4 q ln(trunc) trunc^{1-k} / (k-1) is used.
    """
    zeta2 = math.pi**2 / 6.0
    c = max(4.0 * math.log(trunc), 2.0 * zeta2)
    return q * c * trunc ** (1.0 - k) / (k - 1)


def g_density(
    q: int,
    a: int,
    k: int,
    mode: str = "closed",
    trunc: int = DEFAULT_SERIES_TRUNC,
    rho: Optional[BoundedReal] = None,
) -> DensityValue:
    """Local density g(q, a) of twin k-free integers in the class a mod q.

    mode="closed" evaluates ϱ f(q) h(q, a) with f, h exact and the ϱ tail
    propagated.  mode="series" sums the double series over u, v <= trunc
    directly and carries the truncation tail from ``series_tail_bound``.
    """
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if mode == "closed":
        rho = rho if rho is not None else rho_cached(k)
        fh = float(f_factor(q, k) * h_local(q, a, k))
        return DensityValue(rho.value * fh, rho.tail * fh, q=q, a=a, k=k, mode=mode)
    if mode != "series":
        raise ValueError(f"unknown mode {mode!r}")
    if trunc < 2:
        raise ValueError(f"series mode requires trunc >= 2, got {trunc}")
    a = a % q
    ctx = _series_context(trunc)
    fac = factorize(q)
    d = _gcd_pow_profile(q, k, ctx.n, fac)
    inv_pow = ctx.n.astype(np.float64) ** (-float(k))
    w_u = np.where((a % d) == 0, ctx.mu * d, 0) * inv_pow
    w_v = np.where(((a + 1) % d) == 0, ctx.mu * d, 0) * inv_pow
    value = float(w_u @ ctx.coprime @ w_v)
    return DensityValue(
        value, series_tail_bound(q, k, trunc), q=q, a=a, k=k, mode=mode
    )
