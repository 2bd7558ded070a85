"""
enumeration.py — Counts of type-I triangulations with a boundary.

Exact series for h(x), T(x,0) and T_p(x) (the Tutte recurrence), the
critical constants ρ and α, C(p), and the Boltzmann laws of slot fillings.

Counts are produced by the coefficient recurrence of Tutte's equation,
    a_{k+1} = (a_k − δ_{k,1} − Σ_{i+j=k} a_i a_j) / x,   a_k = T_{k+1}(x),
where every division by x is asserted exact. Large-n Boltzmann tables use
the closed product formula for |T_{n,p}| in log space, which the tests pin
to the recurrence.

Usage (standalone self-check):
    python execution/enumeration.py

Usage (as module):
    from execution.enumeration import boundary_series, count, c_constant
    T3 = boundary_series(3, 20)
"""

from __future__ import annotations

import math
import sys
import threading
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.special import gammaln

ROOT = Path(__file__).parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from db import get_store
from execution.config import slot_hard_limit
from execution.errors import EnumerationError, SeriesError, require
from execution.reporting import warn
from execution.series import FLOAT, RATIONAL, CoefficientRing, QSqrt3, Series

# ─── Constants ────────────────────────────────────────────────────────────────
RHO = QSqrt3(0, Fraction(1, 36))             # 1/(12√3) = √3/36
ALPHA = Fraction(1, 12)
T_RHO_ALPHA = QSqrt3(Fraction(1, 2), Fraction(-1, 6))   # (3−√3)/6
RHO_FLOAT = float(RHO)
ALPHA_FLOAT = float(ALPHA)
LOG_RHO = math.log(RHO_FLOAT)
_LOG_GAMMA_M32 = math.log(4.0 * math.sqrt(math.pi) / 3.0)   # log Γ(−3/2) (positive)


@dataclass(frozen=True)
class Constants:
    rho: QSqrt3 = RHO
    rho_float: float = RHO_FLOAT
    alpha: Fraction = ALPHA
    t_rho_alpha: QSqrt3 = T_RHO_ALPHA

    def check(self) -> None:
        assert self.rho * self.rho == Fraction(1, 432), "ρ² must be 1/432"
        assert self.alpha == Fraction(1, 12), "α must be 1/12"


CONSTANTS = Constants()


# ─── h(x) ─────────────────────────────────────────────────────────────────────
def _log_h_coeffs(N: int) -> np.ndarray:
    """log h_n for n = 1..N, h_n = 8^{n−1} Γ(3n/2 − 1) / (n! Γ(n/2))."""
    n = np.arange(1, N + 1, dtype=np.float64)
    return (n - 1) * math.log(8.0) + gammaln(1.5 * n - 1) - gammaln(n + 1) - gammaln(n / 2)


def h_series(N: int, ring: CoefficientRing = RATIONAL) -> Series:
    """h with h(0)=0 solving x² = h²(1−8h), to order N."""
    require(N >= 1, f"h_series needs N >= 1, got {N}")
    if not ring.exact:
        logs = _log_h_coeffs(N)
        return Series([0.0, *np.exp(logs)], N, FLOAT).to_ring(ring)
    coeffs = [Fraction(0), Fraction(1), Fraction(4)][: N + 1]
    for n in range(1, N - 1):
        m = Fraction(3 * n, 2)
        step = 64 * (m - 1) * m * (m + 1) / ((n + 1) * (n + 2) * Fraction(n, 2))
        coeffs.append(coeffs[n] * step)
    return Series(coeffs, N, RATIONAL).to_ring(ring)


def h_value(x: float, N: int) -> float:
    """Σ_{n≤N} h_n xⁿ in floating point (x ≤ ρ)."""
    logs = _log_h_coeffs(N) + np.arange(1, N + 1) * math.log(x)
    return math.fsum(np.exp(logs))


def h_value_at_rho(N: int, tail_corrected: bool = True) -> float:
    """h(ρ) from N terms; h_n ρⁿ ~ c·n^{−3/2}, so the tail past N is ≈ 2N·h_N ρ^N."""
    partial = h_value(RHO_FLOAT, N)
    if not tail_corrected:
        return partial
    last = math.exp(float(_log_h_coeffs(N)[-1]) + N * LOG_RHO)
    return partial + 2.0 * N * last


# ─── T(x,0) ───────────────────────────────────────────────────────────────────
def t_disk_series(N: int, ring: CoefficientRing = RATIONAL) -> Series:
    """T(x,0) = (6h² + x − h) / (2x) to order N."""
    require(N >= 1, f"t_disk_series needs N >= 1, got {N}")
    h = h_series(N + 1, RATIONAL)
    numerator = 6 * h * h + Series.variable(N + 1) - h
    for k in (0, 1):
        if numerator.coeff(k) != 0:
            raise EnumerationError(f"6h²+x−h has nonzero coefficient {k}: {numerator.coeff(k)}")
    return (numerator.divide_by_x() / 2).to_ring(ring)


def t_disk_value_at_rho(N: int) -> float:
    """Σ_{n≤N} |T_{n,1}| ρⁿ, computed in the rescaled variable x = ρz."""
    scaled = np.concatenate(([0.0], np.exp(_log_h_coeffs(N + 1) + np.arange(1, N + 2) * LOG_RHO)))
    numerator = 6 * np.convolve(scaled, scaled)[: N + 2] - scaled
    numerator[1] += RHO_FLOAT
    return math.fsum(numerator[1:]) / (2 * RHO_FLOAT)


# ─── T_p(x): Tutte recurrence ─────────────────────────────────────────────────
class TriangulationCounts:
    """Cache of T_1(x), ..., T_p(x) as exact series.

    a_k (= T_{k+1}) is known to order M − k where M is the order of a_0.
    Extension recomputes from a longer a_0 under the lock.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._series: list[Series] = []
        self._base_order = -1

    def _rebuild(self, base_order: int, count: int) -> None:
        store = get_store()
        a = [t_disk_series(base_order)]
        for k in range(count - 1):
            key = f"boundary/p={k + 2}"
            cached = store.load_series(key, min_order=base_order - k - 1)
            if cached is not None:
                a.append(cached.truncate(base_order - k - 1))
                continue
            acc = a[k] - (1 if k == 1 else 0)
            for i in range(k + 1):
                acc = acc - a[i] * a[k - i]
            try:
                a.append(acc.divide_by_x())
            except SeriesError as e:
                raise EnumerationError(f"Tutte recurrence step {k}→{k + 1}: {e}") from None
            store.save_series(key, a[-1])
        self._series = a
        self._base_order = base_order

    def boundary_series(self, p: int, N: int) -> Series:
        require(p >= 1 and N >= 1, f"boundary_series needs p, N >= 1, got p={p}, N={N}")
        need = N + p - 1
        with self._lock:
            if self._base_order < need or len(self._series) < p:
                self._rebuild(max(need, self._base_order), max(p, len(self._series)))
            series = self._series[p - 1]
        return series.truncate(N)

    def count(self, n: int, p: int) -> int:
        value = self.boundary_series(p, max(n, 1)).coeff(n)
        if value.denominator != 1 or value < 0:
            raise EnumerationError(f"|T_{{{n},{p}}}| = {value} is not a nonnegative integer")
        return value.numerator

    def table(self, n_max: int, p_max: int) -> list[tuple[int, int, int]]:
        rows = []
        for p in range(1, p_max + 1):
            series = self.boundary_series(p, max(n_max, 1))
            rows.extend((n, p, int(series.coeff(n))) for n in range(n_max + 1))
        return rows


COUNTS = TriangulationCounts()


def boundary_series(p: int, N: int) -> Series:
    """T_p(x) = Σ_n |T_{n,p}| xⁿ to order N (exact)."""
    return COUNTS.boundary_series(p, N)


def count(n: int, p: int) -> int:
    return COUNTS.count(n, p)


# ─── Closed forms ─────────────────────────────────────────────────────────────
def _double_factorial_ratio(a: int, b: int) -> Fraction:
    """a!! / b!! for a ≡ b (mod 2), a, b ≥ −1."""
    if a >= b:
        return Fraction(math.prod(range(b + 2, a + 1, 2)))
    return Fraction(1, math.prod(range(a + 2, b + 1, 2)))


def count_closed(n: int, p: int) -> int:
    """|T_{n,p}| = 4^{n−1} p (2p)! (2p+3n−5)!! / ((p!)² n! (2p+n−1)!!)."""
    if p == 1 and n == 0:
        return 0
    value = (Fraction(4) ** (n - 1) * p * math.factorial(2 * p)
             * _double_factorial_ratio(2 * p + 3 * n - 5, 2 * p + n - 1)
             / (math.factorial(p) ** 2 * math.factorial(n)))
    if value.denominator != 1:
        raise EnumerationError(f"closed count for (n={n}, p={p}) is not an integer: {value}")
    return value.numerator


def log_count(n: np.ndarray, p: int) -> np.ndarray:
    """log |T_{n,p}| for an array of n (−inf where the count is zero)."""
    n = np.asarray(n, dtype=np.float64)
    a = 2 * p + 3 * n - 5
    b = 2 * p + n - 1
    with np.errstate(invalid="ignore"):
        out = ((n - 1) * math.log(4.0) + math.log(p) + gammaln(2 * p + 1) - 2 * gammaln(p + 1)
               - gammaln(n + 1) + (n - 2) * math.log(2.0) + gammaln(a / 2 + 1) - gammaln(b / 2 + 1))
    if p == 1:
        out = np.where(n == 0, -np.inf, out)
    return out


def binom_three_halves(p: int) -> Fraction:
    """Generalized binomial coefficient (3/2 choose p)."""
    out = Fraction(1)
    for j in range(p):
        out *= Fraction(3, 2) - j
    return out / math.factorial(p)


def boundary_value_at_rho(p: int) -> QSqrt3:
    """T_p(ρ) exactly: [y^{p−1}] of (y−ρ)/(2y) + (α−y)^{3/2}/y."""
    require(p >= 1, f"p must be >= 1, got {p}")
    value = QSqrt3(0, (-1) ** p * binom_three_halves(p) * Fraction(12) ** p / 72)
    return value + (Fraction(1, 2) if p == 1 else 0)


def log_boundary_value_at_rho(p: int) -> float:
    if p == 1:
        return math.log(float(boundary_value_at_rho(1)))
    return (gammaln(p - 1.5) - _LOG_GAMMA_M32 - gammaln(p + 1)
            + p * math.log(12.0) + math.log(math.sqrt(3.0) / 72))


def t_rho_alpha_value(P: int) -> float:
    """Σ_{p≤P} T_p(ρ) α^{p−1}, the partial sums of T(ρ, α)."""
    p = np.arange(2, P + 1, dtype=np.float64)
    # (−1)^p (3/2 choose p) = Γ(p − 3/2) / (Γ(−3/2) p!) is positive for p ≥ 2
    terms = np.exp(gammaln(p - 1.5) - _LOG_GAMMA_M32 - gammaln(p + 1)) * math.sqrt(3.0) / 6
    return float(boundary_value_at_rho(1)) + math.fsum(terms)


@dataclass(frozen=True)
class CConstant:
    """C(p) = rational · 1/√(2π)."""

    p: int
    rational: Fraction

    @property
    def value(self) -> float:
        return float(self.rational) / math.sqrt(2 * math.pi)


def c_constant(p: int) -> CConstant:
    """C(p) = 3^{p−2} p (2p)! / (4 √(2π) (p!)²)."""
    require(p >= 1, f"p must be >= 1, got {p}")
    rational = Fraction(3) ** (p - 2) * p * math.comb(2 * p, p) / 4
    return CConstant(p, rational)


def log_c_constant(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    return ((p - 2) * math.log(3.0) + np.log(p) + gammaln(2 * p + 1) - 2 * gammaln(p + 1)
            - math.log(4.0) - 0.5 * math.log(2 * math.pi))


# ─── T_p(ρs) via the closed-form radicand ─────────────────────────────────────
def scaled_boundary_values(s, t, p_max: int, ring: CoefficientRing = FLOAT) -> list:
    """(αt)^p · T_p(ρs) for p = 1..p_max, where h(ρs) = αt.

    Uses T(x, y) = (y − x + √(x² + y² − 4y³ + 12yh² − 2yh)) / (2y) in the
    rescaled variable y = αt·Y, which keeps float coefficients of order one.
    """
    require(p_max >= 1, f"p_max must be >= 1, got {p_max}")
    rho = ring.coerce(RHO)
    alpha = ring.coerce(ALPHA)
    s, t = ring.coerce(s), ring.coerce(t)
    x, at = rho * s, alpha * t
    # R(αtY) = x² + α²t²((t−2)Y + Y² − (t/3)Y³)
    a2t2 = at * at
    radicand = Series([x * x, a2t2 * (t - 2), a2t2, -a2t2 * t / 3], order=p_max, ring=ring)
    root = radicand.sqrt()
    half = ring.inverse(ring.coerce(2))
    return [(root.coeff(p) + (at if p == 1 else 0)) * half for p in range(1, p_max + 1)]


def boundary_values(s, t, p_max: int, ring: CoefficientRing = FLOAT) -> list:
    """T_p(ρs) for p = 1..p_max (exact rings, or floats for moderate p)."""
    at = ring.coerce(ALPHA) * ring.coerce(t)
    inv = ring.inverse(at)
    return [v * inv ** p for p, v in enumerate(scaled_boundary_values(s, t, p_max, ring), start=1)]


# ─── Boltzmann slot laws ──────────────────────────────────────────────────────
@dataclass(frozen=True)
class SlotPmf:
    """q_n = |T_{n,p}| ρⁿ / T_p(ρ) for n ≤ n_max."""

    p: int
    probs: np.ndarray
    tail: float
    truncated: bool

    @property
    def n_max(self) -> int:
        return len(self.probs) - 1


def slot_log_pmf(p: int, n_max: int) -> np.ndarray:
    n = np.arange(n_max + 1)
    return log_count(n, p) + n * LOG_RHO - log_boundary_value_at_rho(p)


def boltzmann_slot_pmf(p: int, n_max: int | None = None, tail_eps: float = 1e-9) -> SlotPmf:
    """Boltzmann law of the inner-vertex count of a p-gon slot.

    With n_max=None the cutoff doubles until the tail is ≤ tail_eps or the
    hard limit (UIPT_LAB_SLOT_HARD_LIMIT) is reached; a tail above tail_eps is
    flagged as truncated, never renormalized away.
    """
    require(p >= 1, f"p must be >= 1, got {p}")
    hard = slot_hard_limit()
    size = n_max if n_max is not None else max(1024, 64 * p * p)
    while True:
        probs = np.exp(slot_log_pmf(p, size))
        tail = max(0.0, 1.0 - math.fsum(probs))
        if n_max is not None or tail <= tail_eps or size >= hard:
            break
        size = min(2 * size, hard)
    truncated = tail > tail_eps
    if truncated:
        warn(f"Boltzmann slot law p={p} truncated at n={size}: tail mass {tail:.3e} > {tail_eps:.1e}")
    probs.setflags(write=False)
    return SlotPmf(p=p, probs=probs, tail=tail, truncated=truncated)


# ─── Self-check ───────────────────────────────────────────────────────────────
if __name__ == "__main__":
    CONSTANTS.check()
    assert h_series(5).tolist() == [0, 1, 4, 40, 512, 7392], "h coefficients"
    assert t_disk_series(4).tolist()[:3] == [0, 1, 4], "T(x,0) coefficients"
    assert all(count(n, p) == count_closed(n, p) for n in range(8) for p in range(1, 5))
    print(f"✅ enumeration self-check passed (T(ρ,α) ≈ {t_rho_alpha_value(10_000):.6f})")
