"""Exponential sums of the local densities and their prime-power factors.

For the local weight h(q, b) (see ``local_densities``), define

    H(q, a) = sum_{b=1}^{q} h(q, b) e(ab/q),
    G(q, a) = ϱ f(q) H(q, a),
    H(q)   = sum over a coprime to q of |H(q, a)|^2,
    J(q; n) = sum over a coprime to q of |H(q, a)|^2 e(an/q).

J is multiplicative in q; at prime powers p^t it vanishes for t > k and
otherwise equals p^{3t-2k-1} (p Φ2 - Φ5), where Φ2 counts b <= p^t with
p^t | b(b+1) and p^t | (b+n)(b+n+1), and Φ5 counts pairs b1, b2 <= p^t with
p^t | b_i(b_i+1) and b1 - b2 + n ≡ 0 (mod p^{t-1}).  Both counts have small
closed tables driven by the p-adic valuations of n, n+1, n-1.

Δ_p = 1 + (p^k - 2)^{-2} sum_{t=1}^{k} p^{t-1} (p Φ2(p^t) - Φ5(p^t)) is the
per-prime factor of the shifted-pair singular series; ``delta_p_cases`` is
the same quantity through its case analysis, kept as an independent route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import CapacityError
from .exact_arith import factorize, moebius_tau
from .local_densities import BoundedReal, f_factor, h_local, h_profile, rho_cached

PHI_BRUTE_CAP = 10_000_000
_H_MATRIX_CACHE_LIMIT = 512


@dataclass(frozen=True)
class LocalContext:
    """Valuations of n, n+1, n-1 at p, capped at t+1 (v_p(0) maps to the cap)."""

    p: int
    t: int
    n: int
    beta1: int
    beta2: int
    beta3: int


def local_context(p: int, t: int, n: int) -> LocalContext:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    cap = t + 1

    def val(m: int) -> int:
        if m == 0:
            return cap
        v = 0
        while m % p == 0 and v < cap:
            m //= p
            v += 1
        return v

    return LocalContext(p, t, n, val(n), val(n + 1), val(n - 1))


@lru_cache(maxsize=None)
def unit_roots(q: int) -> np.ndarray:
    """e(j/q) for j = 0..q-1."""
    return np.exp(2j * np.pi * np.arange(q) / q)


_H_ALL_CACHE: dict[tuple[int, int], np.ndarray] = {}


def _h_transform(q: int, k: int) -> np.ndarray:
    """H(q, a) for a = 1..q (index a-1)."""
    cached = _H_ALL_CACHE.get((q, k))
    if cached is not None:
        return cached
    b = np.arange(1, q + 1, dtype=np.int64)
    roots = unit_roots(q)
    out = roots[np.outer(b, b) % q] @ h_profile(q, k)
    if q <= _H_MATRIX_CACHE_LIMIT:
        _H_ALL_CACHE[(q, k)] = out
    return out


def gauss_H(q: int, a: int, k: int) -> complex:
    """H(q, a) = sum_{b=1}^{q} h(q, b) e(ab/q)."""
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    b = np.arange(1, q + 1, dtype=np.int64)
    roots = unit_roots(q)
    return complex(roots[(a % q) * b % q] @ h_profile(q, k))


def gauss_G(
    q: int, a: int, k: int, rho: Optional[BoundedReal] = None
) -> complex:
    """G(q, a) = ϱ f(q) H(q, a).

    The complex carrier keeps only ϱ's central value; its interval tail is
    dropped here (callers needing rigor track it through BoundedReal).
    """
    rho = rho if rho is not None else rho_cached(k)
    return rho.value * float(f_factor(q, k)) * gauss_H(q, a, k)


def h_norm(q: int, k: int) -> float:
    """H(q) = sum over a coprime to q of |H(q, a)|^2."""
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    H = _h_transform(q, k)
    a = np.arange(1, q + 1, dtype=np.int64)
    mask = np.gcd(a, q) == 1
    return float(np.sum(np.abs(H[mask]) ** 2))


def _phi2_table(ctx: LocalContext) -> tuple[int, int]:
    """Φ2(p^t; n) and the table row applied (0-based)."""
    t = ctx.t
    c1 = ctx.beta1 >= t or ctx.beta2 >= t  # p^t | n(n+1)
    c2 = ctx.beta1 >= t or ctx.beta3 >= t  # p^t | n(n-1)
    if c1 and not c2:
        return 1, 0
    if c2 and not c1:
        return 1, 1
    if c1 and c2:
        return 2, 2
    return 0, 3


def _phi5_table(ctx: LocalContext) -> tuple[int, int]:
    """Φ5(p^t; n) and the table row applied (0-based)."""
    if ctx.t == 1:
        return 4, 0
    m = ctx.t - 1
    a = ctx.beta1 >= m
    b = ctx.beta2 >= m
    c = ctx.beta3 >= m
    if a:
        return 2, 1
    if b and c:
        return 2, 2
    if b:
        return 1, 3
    if c:
        return 1, 4
    return 0, 5


def phi_table_rows(p: int, t: int, n: int) -> tuple[int, int, int, int]:
    """(Φ2, Φ2 row, Φ5, Φ5 row) via the valuation tables."""
    ctx = local_context(p, t, n)
    phi2, row2 = _phi2_table(ctx)
    phi5, row5 = _phi5_table(ctx)
    return phi2, row2, phi5, row5


def phi_counts(p: int, t: int, n: int, mode: str = "table") -> tuple[int, int]:
    """(Φ2(p^t; n), Φ5(p^t; n)) by table lookup or literal enumeration."""
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    fac = factorize(p)
    if len(fac) != 1 or fac.factors[0][1] != 1:
        raise ValueError(f"p must be prime, got {p}")
    if mode == "table":
        phi2, _, phi5, _ = phi_table_rows(p, t, n)
        return phi2, phi5
    if mode != "brute":
        raise ValueError(f"unknown mode {mode!r}")
    pt = p**t
    if pt > PHI_BRUTE_CAP:
        raise CapacityError(f"p^t = {pt} exceeds the brute enumeration cap")
    b = np.arange(1, pt + 1, dtype=np.int64)
    pair_mask = (b % pt) * ((b + 1) % pt) % pt == 0
    B = b[pair_mask]
    nb = n % pt
    phi2 = int(
        np.count_nonzero(((B + nb) % pt) * ((B + nb + 1) % pt) % pt == 0)
    )
    mod = p ** (t - 1)
    if mod == 1:
        phi5 = len(B) ** 2
    else:
        diff = (B[:, None] - B[None, :] + n % mod) % mod
        phi5 = int(np.count_nonzero(diff == 0))
    return phi2, phi5


def j_value_exact(q: int, n: int, k: int) -> Fraction:
    """J(q; n) as an exact rational via the multiplicative closed form."""
    if q < 1 or n < 1:
        raise ValueError(f"q and n must be >= 1, got {(q, n)}")
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    out = Fraction(1)
    for p, t in factorize(q):
        if t > k:
            return Fraction(0)
        phi2, _, phi5, _ = phi_table_rows(p, t, n)
        core = p * phi2 - phi5
        exp = 3 * t - 2 * k - 1
        if exp >= 0:
            out *= Fraction(core * p**exp)
        else:
            out *= Fraction(core, p**(-exp))
    return out


def j_value(q: int, n: int, k: int, mode: str = "closed") -> complex:
    """J(q; n) = sum over a coprime to q of |H(q, a)|^2 e(an/q)."""
    if mode == "closed":
        return complex(float(j_value_exact(q, n, k)))
    if mode != "def":
        raise ValueError(f"unknown mode {mode!r}")
    if q < 1 or n < 1:
        raise ValueError(f"q and n must be >= 1, got {(q, n)}")
    H = _h_transform(q, k)
    a = np.arange(1, q + 1, dtype=np.int64)
    mask = np.gcd(a, q) == 1
    roots = unit_roots(q)
    phases = roots[(a[mask] * (n % q)) % q]
    return complex(np.sum(np.abs(H[mask]) ** 2 * phases))


def delta_p(p: int, n: int, k: int) -> Fraction:
    """Δ_p = 1 + (p^k-2)^{-2} sum_{t=1}^{k} p^{t-1} (p Φ2(p^t) - Φ5(p^t))."""
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    acc = 0
    for t in range(1, k + 1):
        phi2, _, phi5, _ = phi_table_rows(p, t, n)
        acc += p ** (t - 1) * (p * phi2 - phi5)
    return 1 + Fraction(acc, (p**k - 2) ** 2)


def delta_p_cases(p: int, n: int, k: int) -> Fraction:
    """Δ_p through its case analysis over the valuations of n, n+1, n-1.

    Kept separate from ``delta_p`` as an independent closed route: for odd p
    the branch depends on which of n, n+1, n-1 carries the valuation and
    whether it reaches k; for p = 2 with n odd, the relevant valuation is
    β = max(v_2(n+1), v_2(n-1)).
    """
    pk = p**k
    ctx = local_context(p, k, n)
    b1, b2, b3 = ctx.beta1, ctx.beta2, ctx.beta3
    low = 1 - Fraction(4, (pk - 2) ** 2)
    if p == 2:
        if b1 >= k:
            return 1 + Fraction(2, pk - 2)
        if b1 >= 1:
            return low
        beta = max(b2, b3)
        if beta >= k:
            return 1 + Fraction(pk - 4, (pk - 2) ** 2)
        return low
    if b1 >= k:
        return 1 + Fraction(2, pk - 2)
    if b1 >= 1:
        return low
    if b2 >= k or b3 >= k:
        return 1 + Fraction(pk - 4, (pk - 2) ** 2)
    return low


def fourier_inversion_residual(q: int, k: int) -> float:
    """|LHS - RHS| of the inversion identity

    sum_b h(q,b) sum_{r | q} μ(q/r) g(r,b)
        = q^{-1} sum_b h(q,b) sum over a coprime to q of G(q,a) e(-ab/q),

    with g and G in closed mode sharing one ϱ value.
    """
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    if q > 200:
        raise ValueError(f"identity check is wired for q <= 200, got {q}")
    rho = rho_cached(k)
    h_q = h_profile(q, k)
    divisors = [r for r in range(1, q + 1) if q % r == 0]
    mu = {r: moebius_tau(q // r)[0] for r in divisors}
    lhs = 0.0
    for b in range(1, q + 1):
        inner = 0.0
        for r in divisors:
            if mu[r] == 0:
                continue
            g_rb = rho.value * float(f_factor(r, k) * h_local(r, b % r, k))
            inner += mu[r] * g_rb
        lhs += h_q[b - 1] * inner
    H = _h_transform(q, k)
    a = np.arange(1, q + 1, dtype=np.int64)
    mask = np.gcd(a, q) == 1
    G = rho.value * float(f_factor(q, k)) * H[mask]
    roots = unit_roots(q)
    b = np.arange(1, q + 1, dtype=np.int64)
    phase = roots[(-np.outer(b, a[mask])) % q]
    rhs = complex(np.sum(h_q * (phase @ G))) / q
    return abs(lhs - rhs)
