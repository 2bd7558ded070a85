"""
skeleton.py — Offspring law of the skeleton forest and its volume tilt.

The critical law θ has generating function φ(u) = 1 − (1 + 1/√(1−u))^{−2}.
Weighting every slot vertex by s re-normalizes to the tilted law φ_t when
s² = t²(3−2t); with κ = t/(3−2t),

    φ_t(u) = 1 − κ(1−u) / (1 + √(1−κu))²,
    θ_t(0) = 1 − M_1,   θ_t(i) = M_i − M_{i+1},   M_i = (κ/4)^i · Catalan(i),

so P(c > K) = M_{K+1} exactly. Iterates have the closed form

    φ_t^{r}(u) = 1 − b² / sinh²(asinh(b/√(1−u)) + r·asinh b),   b² = 3(1−t)/t,

and φ_1^{r}(u) = 1 − (1/√(1−u) + r)^{−2}.

Usage (standalone self-check):
    python execution/skeleton.py

Usage (as module):
    from execution.skeleton import CriticalPair, iterate_closed, phi_coeffs
    pair = CriticalPair.from_s(0.9)
    iterate_closed(pair, 5, 0.0)
"""

from __future__ import annotations

import math
import sys
import threading
from collections import OrderedDict
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln

ROOT = Path(__file__).parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from db import get_store
from execution.enumeration import ALPHA, RHO, scaled_boundary_values
from execution.errors import SkeletonError, require
from execution.series import FLOAT, RATIONAL, SQRT3_RING, CoefficientRing, Series

U_ONE_CUTOFF = 1.0 - 1e-12
TABLE_HARD_LIMIT = 1 << 22


# ─── s ↔ t ────────────────────────────────────────────────────────────────────
def solve_cubic(y: float) -> float:
    """The root x ∈ [0,1] of x²(3−2x) = y, by bracketing then Newton polish."""
    require(0.0 <= y <= 1.0, f"cubic right-hand side must lie in [0,1], got {y}")
    if y == 0.0 or y == 1.0:
        return y
    f = lambda x: x * x * (3.0 - 2.0 * x) - y
    x = brentq(f, 0.0, 1.0, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    for _ in range(3):
        slope = 6.0 * x * (1.0 - x)
        if slope <= 0.0:
            break
        step = f(x) / slope
        if abs(step) < 1e-18:
            break
        x = min(1.0, max(0.0, x - step))
    return x


@dataclass(frozen=True)
class CriticalPair:
    """(s, t) with s² = t²(3−2t); eps = 1 − t is carried to full precision."""

    s: float
    t: float
    eps: float

    @classmethod
    def from_s(cls, s: float) -> "CriticalPair":
        require(0.0 <= s <= 1.0, f"s must lie in [0,1], got {s}")
        if s * s <= 0.5:
            t = solve_cubic(s * s)
            return cls(s, t, 1.0 - t)
        # ε = 1 − t solves the same cubic with right-hand side 1 − s²
        eps = solve_cubic((1.0 - s) * (1.0 + s))
        return cls(s, 1.0 - eps, eps)

    @classmethod
    def from_t(cls, t: float) -> "CriticalPair":
        require(0.0 <= t <= 1.0, f"t must lie in [0,1], got {t}")
        return cls(t * math.sqrt(3.0 - 2.0 * t), t, 1.0 - t)

    @classmethod
    def from_lambda(cls, lam: float, scale: float) -> "CriticalPair":
        """s = exp(−lam/scale), resolved without cancellation for tiny lam/scale."""
        require(lam >= 0 and scale > 0, f"need lam >= 0 and scale > 0, got {lam}, {scale}")
        s = math.exp(-lam / scale)
        d = -math.expm1(-2.0 * lam / scale)          # 1 − s²
        if d < 0.5:
            eps = solve_cubic(d)
            return cls(s, 1.0 - eps, eps)
        t = solve_cubic(s * s)
        return cls(s, t, 1.0 - t)

    @property
    def critical(self) -> bool:
        return self.eps == 0.0

    @property
    def b2(self) -> float:
        """3(1−t)/t."""
        return 3.0 * self.eps / self.t

    @property
    def b(self) -> float:
        return math.sqrt(self.b2)

    @property
    def a(self) -> float:
        """√((3−2t)/t) = √(1 + b²)."""
        return math.sqrt(1.0 + self.b2)

    @property
    def kappa(self) -> float:
        return self.t / (3.0 - 2.0 * self.t)

    @property
    def one_minus_kappa(self) -> float:
        return 3.0 * self.eps / (1.0 + 2.0 * self.eps)

    def residual(self) -> float:
        return self.t * self.t * (3.0 - 2.0 * self.t) - self.s * self.s


def as_pair(value) -> CriticalPair:
    """Accept a CriticalPair or a tilt parameter t."""
    if isinstance(value, CriticalPair):
        return value
    require(0.0 < float(value) <= 1.0, f"t must lie in (0,1], got {value}")
    return CriticalPair.from_t(float(value))


def t_from_s(s: float) -> float:
    return CriticalPair.from_s(s).t


# ─── Offspring law ────────────────────────────────────────────────────────────
class OffspringLaw:
    """θ_t with the exact telescoping tail P(c > K) = M_{K+1}.

    The table of log M_i grows by doubling under a lock; reads after warm-up
    are lock-free.
    """

    def __init__(self, pair: CriticalPair | float = 1.0, warm: int = 1024):
        self.pair = as_pair(pair)
        kappa = self.pair.kappa
        self._log_quarter_kappa = math.log(self.pair.t) - math.log1p(2.0 * self.pair.eps) - math.log(4.0)
        self._one_minus_kappa = self.pair.one_minus_kappa
        self.kappa = kappa
        self._lock = threading.Lock()
        self._neg_log_tail = np.empty(0)
        self._extend(warm)

    @property
    def t(self) -> float:
        return self.pair.t

    def log_m(self, i: np.ndarray) -> np.ndarray:
        """log M_i = i·log(κ/4) + log Catalan(i), i ≥ 1."""
        i = np.asarray(i, dtype=np.float64)
        return i * self._log_quarter_kappa + gammaln(2 * i + 1) - 2 * gammaln(i + 1) - np.log(i + 1)

    def _extend(self, size: int) -> None:
        with self._lock:
            if len(self._neg_log_tail) >= size:
                return
            # entry j holds −log M_{j+1} = −log P(c > j), increasing in j
            self._neg_log_tail = -self.log_m(np.arange(1, size + 1))

    def tail(self, K: int) -> float:
        """P(c > K)."""
        return float(np.exp(self.log_m(K + 1)))

    def coeffs(self, N: int) -> np.ndarray:
        """θ_t(0..N) as floats."""
        i = np.arange(1, N + 1, dtype=np.float64)
        m = np.exp(self.log_m(i))
        body = m * (3.0 + (2 * i + 1) * self._one_minus_kappa) / (2 * i + 4)
        return np.concatenate(([1.0 - self.kappa / 4.0], body))

    def series(self, N: int) -> Series:
        return Series(self.coeffs(N), N, FLOAT)

    def partial_mean(self, N: int) -> float:
        return math.fsum(np.arange(N + 1) * self.coeffs(N))

    # ─── Inverse CDF ─────────────────────────────────────────────────────────
    def inverse_cdf(self, v: np.ndarray) -> np.ndarray:
        """Smallest c with P(c' > c) < v, for v = 1 − uniform ∈ (0, 1]."""
        neg_log_v = -np.log(np.atleast_1d(np.asarray(v, dtype=np.float64)))
        if len(neg_log_v) == 0:
            return np.empty(0, dtype=np.int64)
        # the table must reach past the smallest v before searching
        worst = float(neg_log_v.max())
        while self._neg_log_tail[-1] <= worst and len(self._neg_log_tail) < TABLE_HARD_LIMIT:
            self._extend(min(2 * len(self._neg_log_tail), TABLE_HARD_LIMIT))
        table = self._neg_log_tail
        out = np.searchsorted(table, neg_log_v, side="right").astype(np.int64)
        for idx in np.flatnonzero(out == len(table)):
            out[idx] = self._locate_beyond(-neg_log_v[idx], len(table))
        return out

    def _locate_beyond(self, log_v: float, lo: int) -> int:
        """Largest i with log M_i ≥ log_v, searched past the table (log M_lo ≥ log_v)."""
        hi = 2 * lo
        while float(self.log_m(hi)) >= log_v:
            lo, hi = hi, 2 * hi
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if float(self.log_m(mid)) >= log_v:
                lo = mid
            else:
                hi = mid
        return lo


def exact_theta_t(t: Fraction, N: int) -> Series:
    """θ_t(0..N) in exact rationals for rational t."""
    kappa = Fraction(t) / (3 - 2 * Fraction(t))
    q = kappa / 4
    catalan = [Fraction(math.comb(2 * i, i), i + 1) for i in range(N + 2)]
    coeffs = [1 - q] + [q ** i * (catalan[i] - q * catalan[i + 1]) for i in range(1, N + 1)]
    return Series(coeffs, N, RATIONAL)


# ─── φ and φ_t as series ──────────────────────────────────────────────────────
def phi_closed_series(N: int, ring: CoefficientRing = RATIONAL) -> Series:
    """Expansion of 1 − (1−u)/(1 + √(1−u))²."""
    one_minus_u = Series([1, -1], N, ring)
    denom = 1 + one_minus_u.sqrt()
    return 1 - one_minus_u * (denom * denom).reciprocal()


def phi_definition_series(s, t, N: int, ring: CoefficientRing = SQRT3_RING) -> Series:
    """θ_t(i) = ρs (αt)^{i−1} T_{i+2}(ρs), from the closed-form T(x, y) at h = αt."""
    scaled = scaled_boundary_values(s, t, N + 2, ring)   # (αt)^p T_p(ρs), p = 1..N+2
    rho, at = ring.coerce(RHO), ring.coerce(ALPHA) * ring.coerce(t)
    factor = rho * ring.coerce(s) * ring.inverse(at * at * at)
    return Series([factor * scaled[i + 1] for i in range(N + 1)], N, ring)


def phi_coeffs(N: int, check: bool = True) -> Series:
    """θ(0..N) exactly; the closed-form and enumeration routes must agree."""
    require(N >= 0, f"N must be >= 0, got {N}")
    store = get_store()
    cached = store.load_series("theta", min_order=N)
    if cached is not None and not check:
        return cached.truncate(N)
    closed = phi_closed_series(max(N, 1), RATIONAL).truncate(N)
    if check:
        definition = phi_definition_series(1, 1, N, SQRT3_RING)
        if definition != closed.to_ring(SQRT3_RING):
            raise SkeletonError("θ from the closed form disagrees with the T-series route")
    store.save_series("theta", closed)
    return closed


def phi_t_series(pair, N: int, ring: CoefficientRing = FLOAT, u0=0) -> Series:
    """Taylor expansion of φ_t around u0 from 1 − w²/(a + √(w² + b²))², w² = 1−u.

    Exact rings need a and √(1 − u0 + b²) rational (e.g. t = 1 with
    u0 = 1 − 1/(k+1)²).
    """
    if ring.exact:
        t = Fraction(pair)
        b2 = 3 * (1 - t) / t
        a = RATIONAL.sqrt(1 + b2)
    else:
        pair = as_pair(pair)
        b2, a = pair.b2, pair.a
    u0 = ring.coerce(u0)
    w2 = Series([1 - u0, -1], N, ring)                    # 1 − u0 − z
    d = ring.coerce(a) + (w2 + ring.coerce(b2)).sqrt()
    return 1 - w2 * (d * d).reciprocal()


def phi_t_coeffs(pair, N: int, method: str = "closed", ring: CoefficientRing = FLOAT) -> Series:
    """θ_t(0..N).

    method="closed" uses the Catalan telescoping form, "definition" the
    T-series route ρs(αt)^{i−1}T_{i+2}(ρs), "taylor" the expansion of φ_t.
    """
    if method == "closed":
        if ring.exact:
            return exact_theta_t(Fraction(pair), N).to_ring(ring)
        return OffspringLaw(as_pair(pair), warm=1).series(N).to_ring(ring)
    if method == "definition":
        if ring.exact:
            raise SkeletonError("exact definition route needs explicit (s, t); use phi_definition_series")
        p = as_pair(pair)
        return phi_definition_series(p.s, p.t, N, FLOAT)
    if method == "taylor":
        return phi_t_series(pair, N, ring)
    raise SkeletonError(f"unknown method {method!r}")


# ─── Pointwise evaluation ─────────────────────────────────────────────────────
def phi_t_eval(t, u: float) -> float:
    """φ_t(u) = 1 − (a/√(1−u) + √(1 + b²/(1−u)))^{−2}."""
    pair = as_pair(t)
    require(0.0 <= u <= 1.0, f"u must lie in [0,1], got {u}")
    if u >= U_ONE_CUTOFF:
        return 1.0
    w2 = 1.0 - u
    d = pair.a + math.sqrt(w2 + pair.b2)
    return 1.0 - w2 / (d * d)


def phi_t_prime(t, u: float) -> float:
    """dφ_t/du = (D − w²/√(w² + b²)) / D³ with D = a + √(w² + b²)."""
    pair = as_pair(t)
    w2 = 1.0 - u
    root = math.sqrt(w2 + pair.b2)
    d = pair.a + root
    return (d - w2 / root) / d ** 3


def _inv_sinh2(A: float) -> float:
    """1/sinh²(A) = 4e/(1−e)² with e = exp(−2A)."""
    e = math.exp(-2.0 * A)
    one_minus_e = -math.expm1(-2.0 * A)
    return 4.0 * e / (one_minus_e * one_minus_e)


def _log_inv_sinh2(A: float) -> float:
    """log(1/sinh²(A)) = log 4 − 2A − 2·log(1 − e^{−2A}), finite for any A > 0."""
    return math.log(4.0) - 2.0 * A - 2.0 * math.log(-math.expm1(-2.0 * A))


def iterate_closed(t, r: int, u: float) -> float:
    """φ_t^{r}(u), the r-fold iterate in closed form."""
    pair = as_pair(t)
    require(r >= 0, f"r must be >= 0, got {r}")
    require(0.0 <= u <= 1.0, f"u must lie in [0,1], got {u}")
    if r == 0:
        return u
    if u >= U_ONE_CUTOFF:
        return 1.0
    w = math.sqrt(1.0 - u)
    if pair.critical:
        return 1.0 - 1.0 / (1.0 / w + r) ** 2
    b = pair.b
    A = math.asinh(b / w) + r * math.asinh(b)
    return 1.0 - pair.b2 * _inv_sinh2(A)


def iterate_prime0(t, r: int) -> float:
    """[u] φ_t^{r}(u) = b³ cosh(A) / (a sinh³(A)), A = (r+1)·asinh b."""
    pair = as_pair(t)
    require(r >= 0, f"r must be >= 0, got {r}")
    if r == 0:
        return 1.0
    if pair.critical:
        return 1.0 / (r + 1) ** 3
    b = pair.b
    A = (r + 1) * math.asinh(b)
    e = math.exp(-2.0 * A)
    one_minus_e = -math.expm1(-2.0 * A)
    coth = (1.0 + e) / one_minus_e
    return b ** 3 / pair.a * coth * _inv_sinh2(A)


def log_iterate_prime0(t, r: int) -> float:
    """log [u] φ_t^{r}(u), finite where the value itself underflows."""
    pair = as_pair(t)
    if r == 0:
        return 0.0
    if pair.critical:
        return -3.0 * math.log(r + 1)
    b = pair.b
    A = (r + 1) * math.asinh(b)
    one_minus_e = -math.expm1(-2.0 * A)
    return (3.0 * math.log(b) - math.log(pair.a) + math.log1p(math.exp(-2.0 * A)) - math.log(one_minus_e)
            + math.log(4.0) - 2.0 * A - 2.0 * math.log(one_minus_e))


def log_iterate_one_minus0(t, r: int) -> float:
    """log(1 − φ_t^{r}(0)), accurate when the iterate is close to 1."""
    pair = as_pair(t)
    if r == 0:
        return 0.0
    if pair.critical:
        return -2.0 * math.log(r + 1)
    A = (r + 1) * math.asinh(pair.b)
    return math.log(pair.b2) + _log_inv_sinh2(A)


def iterate_recurrence(t, r: int, u: float) -> float:
    """φ_t^{r}(u) through v_n = (1 − φ^{n}(u))^{−1/2}, v_{n+1} = 2a·v_n − v_{n−1}."""
    pair = as_pair(t)
    if r == 0 or u >= U_ONE_CUTOFF:
        return u if r == 0 else 1.0
    v_prev = 1.0 / math.sqrt(1.0 - u)
    v = pair.a * v_prev + math.sqrt(1.0 + pair.b2 * v_prev * v_prev)
    for _ in range(r - 1):
        v_prev, v = v, 2.0 * pair.a * v - v_prev
    return 1.0 - 1.0 / (v * v)


# ─── Iterate series ───────────────────────────────────────────────────────────
ITERATE_CACHE_SIZE = 32
_ITERATES: OrderedDict[tuple, list[Series]] = OrderedDict()
_ITERATES_LOCK = threading.Lock()


def _pair_key(pair, ring: CoefficientRing) -> tuple:
    if ring.exact:
        return ("exact", Fraction(pair), ring.name)
    p = as_pair(pair)
    return ("float", p.t, p.eps, ring.name)


def iterate_series(pair, r: int, N: int, ring: CoefficientRing = FLOAT) -> Series:
    """Expansion of φ_t^{r}(u) to order N by r-fold series composition.

    Each step recenters φ_t at the current constant term u0 and composes with
    the iterate minus u0. Results are cached by (t, ring) for every r and
    reused when a lower order is requested. Only the ITERATE_CACHE_SIZE most
    recently used (t, ring) keys are kept.
    """
    require(r >= 0 and N >= 0, f"need r, N >= 0, got r={r}, N={N}")
    key = _pair_key(pair, ring)
    with _ITERATES_LOCK:
        chain = _ITERATES.get(key)
        if chain is None or chain[0].order < N:
            chain = [Series.variable(max(N, 1), ring)]
        while len(chain) <= r:
            g = chain[-1]
            u0 = g.coeff(0)
            taylor = phi_t_series(pair, g.order, ring, u0=u0)
            chain.append(taylor.compose(g - u0))
        _ITERATES[key] = chain
        _ITERATES.move_to_end(key)
        while len(_ITERATES) > ITERATE_CACHE_SIZE:
            _ITERATES.popitem(last=False)
        return chain[r].truncate(N)


# ─── Self-check ───────────────────────────────────────────────────────────────
if __name__ == "__main__":
    theta = phi_coeffs(20)
    assert theta.coeff(0) == Fraction(3, 4) and theta.coeff(1) == Fraction(1, 8), f"θ → {theta}"
    pair = CriticalPair.from_s(0.9)
    assert abs(pair.residual()) < 1e-14, f"residual {pair.residual()}"
    assert abs(iterate_closed(0.7, 9, 0.2) - iterate_recurrence(0.7, 9, 0.2)) < 1e-12
    print("✅ skeleton self-check passed")
