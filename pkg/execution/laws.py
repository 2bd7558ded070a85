"""
laws.py — Exact finite-size laws of hull perimeters and volumes.

    perimeter law      P(|∂B_r| = q) = 2q·w(q)·(1 − 1/(r+1)²)^{q−1} / (r+1)³,  w(q) = C(2q,q)/4^q
    transition kernel  K_r(p → q) = w(q)/w(p) · [u^p](φ^{r})^q
    hull volume GF     E[s^V] = s·(1 − tφ_t^{r}(0))^{−3/2}·φ_t^{r}′(0)
                              = 3^{3/2} cosh A / (cosh² A + 2)^{3/2},  A = (r+1)·asinh b
    layer volume GF    s^p t^{q−p} [u^p](φ_t^{r})^q / [u^p](φ^{r})^q
    slice volume GF    product over arcs times the root-slice mixture

Large powers are handled in log space; results carry their truncation tails.

Usage (as module):
    from execution.laws import hull_volume_gf_closed, perimeter_pmf
    hull_volume_gf_closed(0.9, 2)
    perimeter_pmf(3, 200).probs[:5]
"""

from __future__ import annotations

import math
import sys
import threading
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.special import gammaln

ROOT = Path(__file__).parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from execution.errors import LawsError, require
from execution.reporting import warn
from execution.series import FLOAT, RATIONAL, SQRT3, SQRT3_RING, Series
from execution.skeleton import (
    CriticalPair,
    OffspringLaw,
    iterate_prime0,
    iterate_series,
    log_iterate_one_minus0,
    log_iterate_prime0,
)

SQRT27 = 3.0 ** 1.5
NEGATIVE_TOL = 1e-9
CRITICAL = CriticalPair(1.0, 1.0, 0.0)


def _s_pair(s, allow_zero: bool = False) -> CriticalPair:
    """Accept a CriticalPair or a volume weight s."""
    if isinstance(s, CriticalPair):
        return s
    s = float(s)
    lower_ok = s >= 0.0 if allow_zero else s > 0.0
    require(lower_ok and s <= 1.0, f"s must lie in {'[' if allow_zero else '('}0,1], got {s}")
    return CriticalPair.from_s(s)


# ─── Perimeter law ────────────────────────────────────────────────────────────
def log_w(q) -> np.ndarray:
    """log(C(2q, q) / 4^q)."""
    q = np.asarray(q, dtype=np.float64)
    return gammaln(2 * q + 1) - 2 * gammaln(q + 1) - q * math.log(4.0)


def w_exact(q: int) -> Fraction:
    return Fraction(math.comb(2 * q, q), 4 ** q)


def perimeter_log_pmf(r: int, q) -> np.ndarray:
    """Vectorized log P(|∂B_r| = q) for q ≥ 1."""
    require(r >= 1, f"r must be >= 1, got {r}")
    q = np.asarray(q, dtype=np.float64)
    return (np.log(2 * q) + log_w(q) + (q - 1) * math.log1p(-1.0 / (r + 1) ** 2)
            - 3.0 * math.log(r + 1))


def perimeter_exact(r: int, q: int) -> Fraction:
    z = 1 - Fraction(1, (r + 1) ** 2)
    return 2 * q * w_exact(q) * z ** (q - 1) / (r + 1) ** 3


@dataclass(frozen=True)
class PerimeterPmf:
    """probs[q−1] = P(|∂B_r| = q) for q = 1..q_max."""

    r: int
    probs: np.ndarray
    tail: float
    exact: tuple | None = None

    @property
    def q_max(self) -> int:
        return len(self.probs)

    def __call__(self, q: int) -> float:
        if q < 1:
            return 0.0
        if q > self.q_max:
            return float(np.exp(perimeter_log_pmf(self.r, q)))
        return float(self.probs[q - 1])


@lru_cache(maxsize=None)
def perimeter_cutoff(r: int, tail_eps: float) -> int:
    """Smallest doubling cutoff whose float tail is below tail_eps."""
    size = 64
    while True:
        tail = 1.0 - math.fsum(np.exp(perimeter_log_pmf(r, np.arange(1, size + 1))))
        if tail <= tail_eps or size >= 1 << 24:
            return size
        size *= 2


def perimeter_pmf(r: int, q_max: int | None = None, exact: bool = False,
                  tail_eps: float = 1e-13) -> PerimeterPmf:
    """Law of the hull perimeter at radius r, truncated at q_max (adaptive when None)."""
    require(r >= 1, f"r must be >= 1, got {r}")
    if q_max is None:
        q_max = perimeter_cutoff(r, tail_eps)
    require(q_max >= 1, f"q_max must be >= 1, got {q_max}")
    if exact:
        values = tuple(perimeter_exact(r, q) for q in range(1, q_max + 1))
        tail = 1 - sum(values, Fraction(0))
        probs = np.array([float(v) for v in values])
        probs.setflags(write=False)
        return PerimeterPmf(r, probs, float(tail), values)
    probs = np.exp(perimeter_log_pmf(r, np.arange(1, q_max + 1)))
    probs.setflags(write=False)
    return PerimeterPmf(r, probs, max(0.0, 1.0 - math.fsum(probs)))


# ─── Powers of probability generating functions ──────────────────────────────
def log_power_coeff(coeffs: np.ndarray, q: int, p: int) -> float:
    """log [u^p] f(u)^q by binary powering with per-product rescaling.

    Returns −inf when the coefficient underflows the float range.
    """
    require(q >= 0 and p >= 0, f"need p, q >= 0, got p={p}, q={q}")
    f = np.asarray(coeffs, dtype=np.float64)
    if len(f) <= p:
        raise LawsError(f"series order {len(f) - 1} too short for [u^{p}]")
    f = f[: p + 1]
    result, result_log = np.zeros(p + 1), 0.0
    result[0] = 1.0
    scale = f.max()
    base, base_log = f / scale, math.log(scale)
    k = q
    while k:
        if k & 1:
            result, result_log = _scaled_product(result, result_log, base, base_log, p)
        k >>= 1
        if k:
            base, base_log = _scaled_product(base, base_log, base, base_log, p)
    value = result[p]
    return math.log(value) + result_log if value > 0 else -math.inf


def _scaled_product(a, a_log, b, b_log, p):
    c = np.convolve(a, b)[: p + 1]
    top = c.max()
    if top <= 0:
        return c, a_log + b_log
    return c / top, a_log + b_log + math.log(top)


class PowerTable:
    """rows[k][m] = [u^m] f(u)^k for a probability generating function f.

    Rows are plain pmfs of k-fold sums, so entries lie in [0, 1]; an entry at
    a given (k, m) does not depend on how far the table has grown.
    """

    def __init__(self, base: Callable[[int], np.ndarray]):
        self._base = base
        self._lock = threading.Lock()
        self._width = 0
        self._f = np.zeros(1)
        self._rows: list[np.ndarray] = []

    @property
    def width(self) -> int:
        return self._width

    def ensure(self, k_max: int, m_max: int) -> None:
        with self._lock:
            if m_max >= self._width:
                width = max(64, self._width)
                while width <= m_max:
                    width *= 2
                self._width = width
                self._f = np.asarray(self._base(width - 1), dtype=np.float64)[:width]
                first = np.zeros(width)
                first[0] = 1.0
                self._rows = [first]
            while len(self._rows) <= k_max:
                self._rows.append(np.convolve(self._rows[-1], self._f)[: self._width])

    def row(self, k: int) -> np.ndarray:
        self.ensure(k, 0)
        return self._rows[k]

    def coeff(self, k: int, m: int) -> float:
        self.ensure(k, m)
        return float(self._rows[k][m])

    def column(self, m: int, k_max: int) -> np.ndarray:
        """[u^m] f^k for k = 0..k_max."""
        self.ensure(k_max, m)
        return np.array([self._rows[k][m] for k in range(k_max + 1)])

    @property
    def base(self) -> np.ndarray:
        return self._f


def critical_power_table() -> PowerTable:
    law = OffspringLaw(1.0, warm=1)
    return PowerTable(law.coeffs)


def _iterate_coeffs(pair, r: int, p: int) -> np.ndarray:
    """Float coefficients 0..p of φ_t^{r}."""
    if r == 1:
        return OffspringLaw(pair, warm=1).coeffs(p)
    return np.asarray(iterate_series(pair, r, p, FLOAT).coeffs)


def perimeter_transition(p: int, q: int, r: int = 1, exact: bool = False):
    """P(|∂B_{r′+r}| = q | |∂B_{r′}| = p) = w(q)/w(p) · [u^p](φ^{r})^q."""
    require(p >= 1 and q >= 1 and r >= 1, f"need p, q, r >= 1, got p={p}, q={q}, r={r}")
    if exact:
        g = iterate_series(Fraction(1), r, p, RATIONAL)
        return w_exact(q) / w_exact(p) * g.powi(q).coeff(p)
    log_c = log_power_coeff(_iterate_coeffs(CRITICAL, r, p), q, p)
    return math.exp(float(log_w(q) - log_w(p)) + log_c) if log_c > -math.inf else 0.0


# ─── Hull volume ──────────────────────────────────────────────────────────────
def hull_volume_gf_closed(s, r: int) -> float:
    """E[s^{|B_r|}] = 3^{3/2} sech²A / (1 + 2 sech²A)^{3/2} with A = (r+1)·asinh b."""
    require(r >= 0, f"r must be >= 0, got {r}")
    pair = _s_pair(s, allow_zero=True)
    if pair.s == 0.0:
        return 0.0
    if pair.critical:
        return 1.0
    A = (r + 1) * math.asinh(pair.b)
    # sech²A = 4e/(1+e)², e = exp(−2A); underflows to 0 instead of overflowing cosh
    e = math.exp(-2.0 * A)
    sech2 = 4.0 * e / (1.0 + e) ** 2
    return SQRT27 * sech2 / (1.0 + 2.0 * sech2) ** 1.5


def hull_volume_gf_iterate(s, r: int) -> float:
    """s·(1 − tφ_t^{r}(0))^{−3/2}·φ_t^{r}′(0)."""
    require(r >= 0, f"r must be >= 0, got {r}")
    pair = _s_pair(s)
    # 1 − tV = ε + t(1 − V)
    one_minus_tv = pair.eps + pair.t * math.exp(log_iterate_one_minus0(pair, r))
    return pair.s * one_minus_tv ** -1.5 * iterate_prime0(pair, r)


@dataclass(frozen=True)
class VolumePmf:
    """probs[n] = P(|B_r| = n) for n = 0..n_max."""

    r: int
    probs: np.ndarray
    tail: float
    exact: tuple | None = None

    @property
    def n_max(self) -> int:
        return len(self.probs) - 1


def _hull_gf_t_series(r: int, order: int, ring) -> Series:
    """(1 − tV_r)^{−3/2}·Π_{k<r} φ_t′(V_k) as a series in t, V_k = φ_t^{k}(0)."""
    t = Series.variable(order, ring)
    kappa = t * Series([3, -2], order, ring).reciprocal()
    v = Series.constant(0, order, ring)
    d = Series.constant(1, order, ring)
    for _ in range(r):
        w = (1 - kappa * v).sqrt()
        one_plus_w = 1 + w
        inv2 = (one_plus_w * one_plus_w).reciprocal()
        # φ_t′(u) = κ/(1+w)² − κ²(1−u)/(w(1+w)³)
        d = d * (kappa * inv2 - kappa * kappa * (1 - v) * (w * one_plus_w).reciprocal() * inv2)
        v = 1 - kappa * (1 - v) * inv2
    base = (1 - t * v).sqrt()
    return d * (base * base * base).reciprocal()


def hull_volume_pmf(r: int, n_max: int, precision: str = "exact") -> VolumePmf:
    """P(|B_r| = n), n ≤ n_max, by expanding E[s^V] as a series in s.

    The generating function is a series in t; s = t√(3−2t) is reverted in
    Q(√3) (or floats) and composed in. Negative coefficients are an error.
    """
    require(r >= 0, f"r must be >= 0, got {r}")
    require(n_max >= 2, f"n_max must be >= 2, got {n_max}")
    require(precision in ("exact", "float"), f"precision must be exact or float, got {precision!r}")
    order = n_max - 1
    if precision == "exact":
        g = _hull_gf_t_series(r, order, RATIONAL).to_ring(SQRT3_RING)
        s_of_t = (Series([1, Fraction(-2, 3)], order, RATIONAL).sqrt().to_ring(SQRT3_RING)
                  .shift(1).truncate(order).scale(SQRT3))
    else:
        g = _hull_gf_t_series(r, order, FLOAT)
        s_of_t = Series([1.0, -2.0 / 3.0], order, FLOAT).sqrt().shift(1).truncate(order) * math.sqrt(3.0)
    t_of_s = s_of_t.revert()
    e = g.compose(t_of_s).shift(1)
    coeffs = e.tolist()
    for n, c in enumerate(coeffs):
        negative = c.sign() < 0 if precision == "exact" else c < -NEGATIVE_TOL
        if negative:
            raise LawsError(f"P(|B_{r}| = {n}) came out negative ({c}); wrong branch or ring")
    probs = np.array([max(0.0, float(c)) for c in coeffs])
    probs.setflags(write=False)
    if precision == "exact":
        total = sum(coeffs, SQRT3_RING.zero())
        return VolumePmf(r, probs, float(1 - total), tuple(coeffs))
    return VolumePmf(r, probs, max(0.0, 1.0 - math.fsum(probs)))


# ─── Conditioned laws ─────────────────────────────────────────────────────────
def _log_iterate0(pair: CriticalPair, r: int) -> float:
    """log φ_t^{r}(0)."""
    return math.log1p(-math.exp(log_iterate_one_minus0(pair, r)))


def hull_cond_gf(s, r: int, q: int) -> float:
    """E[s^{|B_r|} | |∂B_r| = q] = s·t^{q−1}(V_t/V)^{q−1}·D_t/D."""
    require(r >= 1 and q >= 1, f"need r, q >= 1, got r={r}, q={q}")
    pair = _s_pair(s)
    log_value = (math.log(pair.s) + (q - 1) * (math.log(pair.t) + _log_iterate0(pair, r) - _log_iterate0(CRITICAL, r))
                 + log_iterate_prime0(pair, r) - log_iterate_prime0(CRITICAL, r))
    return math.exp(log_value)


def layer_volume_gf(s, r: int, p: int, q: int) -> float:
    """E[s^{|L|} | inner perimeter p, outer perimeter q] for a layer of height r."""
    require(r >= 1 and p >= 1 and q >= 1, f"need r, p, q >= 1, got r={r}, p={p}, q={q}")
    if p == 1:
        return hull_cond_gf(s, r, q)
    pair = _s_pair(s)
    num = log_power_coeff(_iterate_coeffs(pair, r, p), q, p)
    den = log_power_coeff(_iterate_coeffs(CRITICAL, r, p), q, p)
    if den == -math.inf:
        raise LawsError(f"[u^{p}](φ^{{{r}}})^{q} underflows; the conditioning event is out of float range")
    if num == -math.inf:
        warn(f"layer GF underflow at s={pair.s}, r={r}, p={p}, q={q}; reporting 0")
        return 0.0
    return math.exp(p * math.log(pair.s) + (q - p) * math.log(pair.t) + num - den)


def jump_gf(s, p: int, q: int, r: int = 1) -> float:
    """t^{q−p}[u^p](φ_t^{r})^q / [u^p](φ^{r})^q, the layer GF without its inner boundary."""
    require(p >= 1 and q >= 1 and r >= 1, f"need p, q, r >= 1, got p={p}, q={q}, r={r}")
    pair = _s_pair(s)
    num = log_power_coeff(_iterate_coeffs(pair, r, p), q, p)
    den = log_power_coeff(_iterate_coeffs(CRITICAL, r, p), q, p)
    if den == -math.inf:
        raise LawsError(f"[u^{p}](φ^{{{r}}})^{q} underflows")
    if num == -math.inf:
        return 0.0
    return math.exp((q - p) * math.log(pair.t) + num - den)


# ─── Slices ───────────────────────────────────────────────────────────────────
def _check_arcs(q: int, arcs: Sequence[int]) -> None:
    require(len(arcs) >= 1, "at least one arc is required")
    require(all(int(a) == a and a >= 1 for a in arcs), f"arcs must be positive integers, got {list(arcs)}")
    require(sum(arcs) == q, f"arcs {list(arcs)} do not sum to q={q}")


def slice_root_weights(r: int, q: int, arcs: Sequence[int], values: Sequence[float]) -> np.ndarray:
    """Terms (q_k/q)(1/t_k)(D_{t_k}/D)(V/V_{t_k}) of the root-slice mixture."""
    require(r >= 1, f"r must be >= 1, got {r}")
    _check_arcs(q, arcs)
    require(len(values) == len(arcs), f"{len(arcs)} arcs but {len(values)} values")
    pairs = [_s_pair(v) for v in values]
    log_d_crit = log_iterate_prime0(CRITICAL, r)
    lv_crit = _log_iterate0(CRITICAL, r)
    out = []
    for qk, pair in zip(arcs, pairs):
        log_term = (math.log(qk / q) - math.log(pair.t) + log_iterate_prime0(pair, r)
                    - log_d_crit + lv_crit - _log_iterate0(pair, r))
        out.append(math.exp(log_term))
    return np.array(out)


def slice_gf(r: int, q: int, arcs: Sequence[int], values: Sequence[float]) -> float:
    """Joint GF of the shifted slice volumes given |∂B_r| = q and arcs q_1..q_n."""
    weights = slice_root_weights(r, q, arcs, values)
    lv_crit = _log_iterate0(CRITICAL, r)
    log_product = 0.0
    for qj, pair in zip(arcs, (_s_pair(v) for v in values)):
        log_product += qj * (math.log(pair.t) + _log_iterate0(pair, r) - lv_crit)
    return math.exp(log_product) * math.fsum(weights)
