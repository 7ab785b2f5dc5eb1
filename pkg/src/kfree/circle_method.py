"""Exponential sums over twin k-free numbers and their major-arc models.

Objects:

* ``s_alpha``: S(α) = Σ e(nα) over twin positions n <= x (n, n+1 both
  k-free).
* ``k_alpha``: the divisor-driven sum K(α) = Σ_{u <= Q} Σ_{v <= x/u}
  e(uvα) and its split K = K_q + H_q into the part with q | u and the
  rest.  For Q > √x the split is evaluated in swapped coordinates
  (u <= √x, with the extra range √x < v <= min(Q, x/u)); the u <-> v swap
  is a bijection on lattice points, so the regrouped double sum equals the
  literal one exactly.
* ``i_beta``: I(β) = Σ_{m <= x} e(mβ).
* ``s_star_delta``: the major-arc model S*(α; q, a) = q^{-1} G(q, a)
  I(α - a/q) and the defect Δ = S - S*.
* ``arc_classify``: locate α in the Farey dissection |qα - a| <= 1/R,
  q <= x/R, R = x^{1/2 + τ}, via continued-fraction convergents (with an
  exhaustive fallback scan when the convergent criterion is not decisive).
* ``autocorr_identity``: the exact integer identity between pair counts in
  residue classes and the divisor-weighted autocorrelation of the twin
  indicator (two independent computations; any mismatch is a bug).
* ``l2_delta_report``: midpoint-rule estimates of ∫ over the union of
  major arcs of |Δ|² for a list of arc scales T, against the shape
  T^{3-2/k} x^{2/k-1} + x^{4/(k+1)-1} T².
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import CapacityError
from .gauss_local import gauss_G
from .kfree_core import SieveTable
from .local_densities import BoundedReal, rho_cached

_PHASE_EPS = 1e-12
_AUTOCORR_CAP = 1 << 24


def _unit(t: float) -> complex:
    """e(t) = exp(2πi t), with the argument reduced mod 1 first."""
    return cmath.exp(2j * math.pi * (t % 1.0))


def _geom_span(theta: float, lo: int, hi: int) -> complex:
    """Σ_{v=lo..hi} e(θ v), empty if hi < lo."""
    if hi < lo:
        return 0j
    m = hi - lo + 1
    t = theta % 1.0
    if t < _PHASE_EPS or 1.0 - t < _PHASE_EPS:
        return complex(m)
    ratio = _unit(t)
    return _unit(t * lo) * (_unit(t * m) - 1.0) / (ratio - 1.0)


def s_alpha(sieve: SieveTable, alpha: float) -> complex:
    """S(α) over the twin positions of the sieve."""
    tw = sieve.twin_positions
    phases = 2.0 * np.pi * ((tw * float(alpha)) % 1.0)
    return complex(np.sum(np.cos(phases)) + 1j * np.sum(np.sin(phases)))


def i_beta(beta: float, x: int) -> complex:
    """I(β) = Σ_{m <= x} e(mβ)."""
    if x < 1:
        raise ValueError(f"x must be >= 1, got {x}")
    return _geom_span(beta, 1, int(x))


def k_alpha(
    alpha: float, x: int, Q: int, part: str = "full", q: int = 1
) -> complex:
    """K(α), or its smooth part K_q (q | u) or rough part H_q (q ∤ u).

    Both regimes Q <= √x and Q > √x are evaluated by their own literal
    formulas; ``full`` always sums the defining double sum directly, so
    ``full == smooth + rough`` is a nontrivial cross-check.
    """
    if x < 1 or Q < 1 or Q > x:
        raise ValueError(f"need 1 <= Q <= x, got Q={Q}, x={x}")
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    if part not in ("full", "smooth", "rough"):
        raise ValueError(f"part must be full|smooth|rough, got {part!r}")
    if part == "full":
        return sum(
            (_geom_span(u * alpha, 1, x // u) for u in range(1, Q + 1)), 0j
        )
    rx = math.isqrt(x)
    if Q <= rx:
        if part == "smooth":
            return sum(
                (
                    _geom_span(q * u * alpha, 1, x // (q * u))
                    for u in range(1, Q // q + 1)
                ),
                0j,
            )
        if q == 1:
            return 0j
        return sum(
            (
                _geom_span(u * alpha, 1, x // u)
                for u in range(1, Q + 1)
                if u % q != 0
            ),
            0j,
        )

    # Q > √x: swapped coordinates, u <= √x throughout
    def both_ranges(u: int) -> complex:
        return _geom_span(u * alpha, 1, x // u) + _geom_span(
            u * alpha, rx + 1, min(Q, x // u)
        )

    if part == "smooth":
        return sum((both_ranges(q * u) for u in range(1, rx // q + 1)), 0j)
    if q == 1:
        return 0j
    return sum((both_ranges(u) for u in range(1, rx + 1) if u % q != 0), 0j)


def s_star_delta(
    sieve: SieveTable,
    q: int,
    a: int,
    alpha: float,
    rho: Optional[BoundedReal] = None,
) -> tuple[complex, complex]:
    """Model value S*(α; q, a) and defect Δ(α) = S(α) - S*(α; q, a)."""
    if not 1 <= a <= q:
        raise ValueError(f"need 1 <= a <= q, got a={a}, q={q}")
    if math.gcd(a, q) != 1:
        raise ValueError(f"a and q must be coprime, got a={a}, q={q}")
    g = gauss_G(q, a, sieve.k, rho=rho)
    star = g * i_beta(alpha - a / q, sieve.x) / q
    return star, s_alpha(sieve, alpha) - star


@dataclass
class ArcParams:
    """Farey dissection parameters: R = x^{1/2+τ}, moduli up to x/R, and
    the arc scale T (half-width T/(qx); arcs are disjoint for T <= √x/2)."""

    x: int
    tau: float = 0.05
    T: float = 1.0
    R: float = field(init=False)
    q_cap: int = field(init=False)

    def __post_init__(self) -> None:
        if self.x < 4:
            raise ValueError(f"x must be >= 4, got {self.x}")
        if not 0.0 < self.tau < 0.5:
            raise ValueError(f"tau must be in (0, 0.5), got {self.tau}")
        self.R = float(self.x) ** (0.5 + self.tau)
        self.q_cap = int(self.x / self.R)
        if not 1.0 <= self.T <= self.x / self.R:
            raise ValueError(
                f"T must be in [1, x/R] = [1, {self.x / self.R:.6g}], got {self.T}"
            )


def _convergents(alpha: float, q_cap: int):
    """Continued-fraction convergents (h, q) of alpha with q <= q_cap."""
    pm2, pm1 = 0, 1
    qm2, qm1 = 1, 0
    t = float(alpha)
    for _ in range(64):
        a0 = math.floor(t)
        h = a0 * pm1 + pm2
        q = a0 * qm1 + qm2
        if q > q_cap:
            return
        yield h, q
        frac = t - a0
        if frac < 1e-15:
            return
        t = 1.0 / frac
        pm2, pm1 = pm1, h
        qm2, qm1 = qm1, q


def arc_classify(alpha: float, params: ArcParams) -> tuple[bool, int, int]:
    """Classify α in the window (1/R, 1 + 1/R] as major (with its q, a) or
    minor.  Returns (is_major, q, a), with q = a = 0 on minor arcs."""
    R = params.R
    if not 1.0 / R < alpha <= 1.0 + 1.0 / R:
        raise ValueError(
            f"alpha must lie in (1/R, 1 + 1/R] = ({1.0 / R:.6g}, {1.0 + 1.0 / R:.6g}]"
        )
    q_cap = params.q_cap
    if q_cap >= 1 and 2.0 * q_cap <= R:
        # |qα - a| <= 1/R with q <= q_cap <= R/2 forces |α - a/q| <= 1/(2q²),
        # so a/q is a convergent; scan them in increasing q.
        for h, q in _convergents(alpha, q_cap):
            if q >= 1 and 1 <= h <= q and abs(q * alpha - h) <= 1.0 / R:
                return True, q, h
        # boundary cases (equality in the approximation criterion) can slip
        # past the convergent test; the exhaustive scan below settles them
    for q in range(1, q_cap + 1):
        a = round(q * alpha)
        if 1 <= a <= q and abs(q * alpha - a) <= 1.0 / R and math.gcd(a, q) == 1:
            return True, q, a
    return False, 0, 0


def autocorr_identity(sieve: SieveTable, Q: int) -> tuple[int, int]:
    """Two exact integer routes to Σ_{q<=Q} #{twin pairs m < n, q | n - m}.

    Left: per-modulus residue-class pair counts Σ_a C(c_a, 2).  Right:
    Σ_d r_Q(d) A(d) with r_Q(d) the number of divisors of d up to Q and
    A(d) the twin-indicator autocorrelation at shift d (computed by FFT,
    rounded back to integers; the rounding error is orders of magnitude
    below 1/2 at every admissible size)."""
    x = sieve.x
    if Q < 1:
        raise ValueError(f"Q must be >= 1, got {Q}")
    if x > _AUTOCORR_CAP:
        raise CapacityError(
            f"autocorrelation identity capped at x <= {_AUTOCORR_CAP}, got {x}"
        )
    tw = sieve.twin_positions
    lhs = 0
    for q in range(1, Q + 1):
        c = np.bincount(tw % q, minlength=q)
        lhs += int(np.sum(c * (c - 1) // 2))
    if x < 2:
        return lhs, 0
    t = np.zeros(x, dtype=np.float64)
    t[tw - 1] = 1.0
    L = 1 << (2 * x - 1).bit_length()
    ft = np.fft.rfft(t, L)
    corr = np.fft.irfft(ft * np.conj(ft), L)
    A = np.rint(corr[1:x]).astype(np.int64)  # A[d-1] = autocorr at shift d
    r = np.zeros(x, dtype=np.int64)  # r[d] = #divisors of d up to Q
    for u in range(1, min(Q, x - 1) + 1):
        r[u::u] += 1
    rhs = int(np.sum(r[1:x] * A))
    return lhs, rhs


def l2_bound_shape(T: float, x: int, k: int) -> float:
    """T^{3-2/k} x^{2/k-1} + x^{4/(k+1)-1} T² (ε dropped)."""
    return T ** (3.0 - 2.0 / k) * x ** (2.0 / k - 1.0) + x ** (
        4.0 / (k + 1) - 1.0
    ) * T**2


@dataclass
class L2Row:
    T: float
    integral: float
    bound_shape: float
    ratio: float


def l2_delta_report(
    sieve: SieveTable,
    params: ArcParams,
    T_list: list[float],
    grid_per_arc: int = 64,
) -> list[L2Row]:
    """Midpoint-rule ∫_{union of arcs 𝔐(q,a;T)} |Δ|² for each T.

    Arcs run over q <= T, gcd(a, q) = 1; each has half-width T/(qx).  The
    T's must stay within √x/2 so the arcs are pairwise disjoint and the
    union integral is the plain sum."""
    x, k = sieve.x, sieve.k
    if grid_per_arc < 1:
        raise ValueError(f"grid_per_arc must be >= 1, got {grid_per_arc}")
    rho = rho_cached(k)
    rows = []
    for T in T_list:
        if not 1.0 <= T <= math.sqrt(x) / 2.0:
            raise ValueError(
                f"each T must be in [1, sqrt(x)/2], got T={T} at x={x}"
            )
        total = 0.0
        for q in range(1, int(T) + 1):
            hw = T / (q * x)
            for a in range(1, q + 1):
                if math.gcd(a, q) != 1:
                    continue
                center = a / q
                step = 2.0 * hw / grid_per_arc
                acc = 0.0
                for i in range(grid_per_arc):
                    node = center - hw + (i + 0.5) * step
                    _, delta = s_star_delta(sieve, q, a, node, rho=rho)
                    acc += abs(delta) ** 2
                total += step * acc
        shape = l2_bound_shape(T, x, k)
        rows.append(
            L2Row(T=float(T), integral=total, bound_shape=shape, ratio=total / shape)
        )
    return rows
