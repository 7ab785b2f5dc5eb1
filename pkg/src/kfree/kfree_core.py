"""Sieving k-free integers and counting consecutive k-free pairs.

An integer is k-free when no prime power p^k divides it.  The sieve marks
1..x+1 (one past x so the pair test at n = x needs no special case), and the
counting helpers work with the "twin" indicator t(n) = [n and n+1 both
k-free].  ``j1_pair`` evaluates the lattice count behind the progression
main term: the number of n <= x with (u^k, q) | n, (v^k, q) | n + 1,
r^k | n, and s^k | n + 1, against its predicted density.
"""

from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import CapacityError, SieveCacheError
from .exact_arith import gcd_pow_k, primes_up_to
from .local_densities import BoundedReal, DensityValue

DEFAULT_SIEVE_CAP = 300_000_000
CACHE_MAGIC = b"KFSV"
CACHE_VERSION = 1


def _sieve_cap() -> int:
    env = os.environ.get("KFREE_SIEVE_CAP")
    return int(env) if env else DEFAULT_SIEVE_CAP


@dataclass(eq=False)
class SieveTable:
    """Bitmap of the k-free indicator on 1..x+1.

    ``bits[n]`` is True when n is k-free; index 0 is padding.  The table is
    immutable after construction (the twin-position array is derived lazily
    and cached).
    """

    k: int
    x: int
    bits: np.ndarray
    _twins: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def is_kfree(self, n: int) -> bool:
        if not 1 <= n <= self.x + 1:
            raise ValueError(f"n must be in 1..{self.x + 1}, got {n}")
        return bool(self.bits[n])

    @property
    def kfree_count(self) -> int:
        """Number of k-free integers in 1..x."""
        return int(np.count_nonzero(self.bits[1 : self.x + 1]))

    @property
    def twin_positions(self) -> np.ndarray:
        """Sorted array of n <= x with n and n+1 both k-free."""
        if self._twins is None:
            pair = self.bits[1 : self.x + 1] & self.bits[2 : self.x + 2]
            self._twins = (np.flatnonzero(pair) + 1).astype(np.int64)
        return self._twins

    @property
    def twin_count(self) -> int:
        return int(len(self.twin_positions))

    def to_bytes(self) -> bytes:
        """Serialize: magic, version byte, k byte, x as 8-byte LE, bitmap.

        Bit i (LSB-first within each byte) is the indicator of i + 1, for
        i = 0..x, i.e. ceil((x+1)/8) bitmap bytes.
        """
        packed = np.packbits(
            self.bits[1 : self.x + 2].astype(np.uint8), bitorder="little"
        )
        return (
            CACHE_MAGIC
            + struct.pack("<BB", CACHE_VERSION, self.k)
            + struct.pack("<Q", self.x)
            + packed.tobytes()
        )

    @classmethod
    def from_bytes(cls, blob: bytes) -> "SieveTable":
        header = len(CACHE_MAGIC) + 2 + 8
        if len(blob) < header or blob[:4] != CACHE_MAGIC:
            raise SieveCacheError("bad magic")
        version, k = struct.unpack("<BB", blob[4:6])
        if version != CACHE_VERSION:
            raise SieveCacheError(f"unsupported version {version}")
        (x,) = struct.unpack("<Q", blob[6:14])
        nbytes = (x + 1 + 7) // 8
        if len(blob) != header + nbytes:
            raise SieveCacheError("truncated or oversized bitmap")
        unpacked = np.unpackbits(
            np.frombuffer(blob[header:], dtype=np.uint8), bitorder="little"
        )[: x + 1].astype(bool)
        bits = np.concatenate(([False], unpacked))
        return cls(k=int(k), x=int(x), bits=bits)


def build_sieve(x: int, k: int, max_x: Optional[int] = None) -> SieveTable:
    """Sieve the k-free indicator on 1..x+1 by striking multiples of p^k."""
    if x < 1:
        raise ValueError(f"x must be >= 1, got {x}")
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    cap = max_x if max_x is not None else _sieve_cap()
    if x > cap:
        raise CapacityError(f"x = {x} exceeds the sieve capacity cap {cap}")
    bits = np.ones(x + 2, dtype=bool)
    bits[0] = False
    top = x + 1
    limit = int(round(top ** (1.0 / k)))
    while (limit + 1) ** k <= top:
        limit += 1
    for p in map(int, primes_up_to(limit)):
        pk = p**k
        bits[pk::pk] = False
    return SieveTable(k=k, x=x, bits=bits)


def cache_path(cache_dir: str, k: int, x: int) -> str:
    return os.path.join(cache_dir, f"sieve_k{k}_x{x}.bin")


def save_sieve(table: SieveTable, cache_dir: str) -> str:
    os.makedirs(cache_dir, exist_ok=True)
    path = cache_path(cache_dir, table.k, table.x)
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(table.to_bytes())
    os.replace(tmp, path)
    return path


def load_sieve(path: str) -> SieveTable:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise SieveCacheError(str(exc)) from exc
    return SieveTable.from_bytes(blob)


def load_or_build(
    x: int, k: int, cache_dir: Optional[str] = None, write: bool = False
) -> SieveTable:
    """Load a cached sieve when possible; silently rebuild on cache damage."""
    if cache_dir:
        try:
            table = load_sieve(cache_path(cache_dir, k, x))
            if table.k == k and table.x == x:
                return table
        except SieveCacheError:
            pass
    table = build_sieve(x, k)
    if cache_dir and write:
        save_sieve(table, cache_dir)
    return table


@dataclass
class ProgressionCount:
    """Count of twin k-free n <= x in a residue class, with its residual."""

    x: int
    q: int
    a: int
    count: int
    residual: Optional[BoundedReal] = None


def count_Ak(sieve: SieveTable, q: int, a: int) -> int:
    """Number of n <= x with n ≡ a (mod q) and n, n+1 both k-free."""
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    if not 1 <= a <= q:
        raise ValueError(f"a must be in 1..q = 1..{q}, got {a}")
    tw = sieve.twin_positions
    return int(np.count_nonzero(tw % q == a % q))


def residual_E(
    sieve: SieveTable, q: int, a: int, g_value: DensityValue
) -> BoundedReal:
    """E(x; q, a) = A_k(x; q, a) - (g(q, a)/q) x, with g's tail scaled along."""
    if g_value.k != sieve.k:
        raise ValueError(
            f"density was computed for k = {g_value.k}, sieve has k = {sieve.k}"
        )
    if (g_value.q, g_value.a % g_value.q) != (q, a % q):
        raise ValueError(
            f"density was computed for (q, a) = {(g_value.q, g_value.a)}, "
            f"requested {(q, a)}"
        )
    count = count_Ak(sieve, q, a)
    scale = sieve.x / q
    return BoundedReal(count - g_value.value * scale, g_value.tail * scale)


@dataclass
class J1Result:
    """Brute lattice count against the main-term prediction.

    ``main_term`` is None when the coprimality side conditions fail —
    inapplicability is a value, not an error.
    """

    brute: int
    main_term: Optional[float]


_J1_COUNT_CACHE: dict[tuple[int, int, int, int, int], int] = {}


def _j1_brute(x: int, d1: int, d2: int, rk: int, sk: int) -> int:
    """#{n <= x : d1 | n, rk | n, d2 | n+1, sk | n+1} by direct enumeration."""
    key = (x, d1, d2, rk, sk)
    hit = _J1_COUNT_CACHE.get(key)
    if hit is not None:
        return hit
    if rk > x or d1 > x or sk > x + 1 or d2 > x + 1:
        count = 0
    else:
        n = np.arange(1, x + 1, dtype=np.int64)
        mask = (n % d1 == 0) & (n % rk == 0)
        m = n[mask] + 1
        count = int(np.count_nonzero((m % d2 == 0) & (m % sk == 0)))
    if len(_J1_COUNT_CACHE) < 65536:
        _J1_COUNT_CACHE[key] = count
    return count


def j1_pair(
    sieve: SieveTable, q: int, u: int, v: int, r: int, s: int
) -> J1Result:
    """Count n <= x with (u^k,q) | n, (v^k,q) | n+1, r^k | n, s^k | n+1.

    The brute count enumerates n directly (no k-free condition is involved).
    The main term is the density
        (r^k, u^k, q) s0 / (r^k s^k (u^k,q) (v^k,q))
            * (s^k, r^k (u^k,q) (v^k,q) / (r^k, u^k, q))
    times x, valid under the side conditions
        ((u^k,q)(r^k,q)/(r^k,u^k,q), (v^k,q)) = 1,
        ((u^k,q)/((r^k,u^k,q) s0), s^k) = 1,
        (r, s) = 1, and (q, u, v) = 1,
    where s0 = ((u^k,q)/(r^k,u^k,q), r^k/(r^k,q)); s0 is computed literally
    and asserted to equal 1 whenever the conditions hold.
    """
    for name, val in (("q", q), ("u", u), ("v", v), ("r", r), ("s", s)):
        if val < 1:
            raise ValueError(f"{name} must be >= 1, got {val}")
    k, x = sieve.k, sieve.x
    d1 = gcd_pow_k(q, u, k)
    d2 = gcd_pow_k(q, v, k)
    rk = r**k
    sk = s**k
    brute = _j1_brute(x, d1, d2, rk, sk)

    g_ruq = gcd_pow_k(q, math.gcd(r, u), k)  # (r^k, u^k, q)
    rkq = gcd_pow_k(q, r, k)  # (r^k, q)
    s0 = math.gcd(d1 // g_ruq, rk // rkq)
    applicable = (
        math.gcd(d1 * rkq // g_ruq, d2) == 1
        and math.gcd(d1 // (g_ruq * s0), sk) == 1
        and math.gcd(r, s) == 1
        and math.gcd(math.gcd(q, u), v) == 1
    )
    if not applicable:
        return J1Result(brute, None)
    assert s0 == 1, f"s0 = {s0} != 1 under the side conditions"
    density = Fraction(g_ruq * s0, rk * sk * d1 * d2) * math.gcd(
        sk, rk * d1 * d2 // g_ruq
    )
    return J1Result(brute, float(density) * x)
