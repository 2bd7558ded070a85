"""
asymptotics.py — Scaling limits of hull, slice and jump Laplace transforms.

With s = exp(−λ/R⁴), r = ⌊xR⌋, q = ⌊ℓR²⌋ and z = (6λ)^{1/4}·x:

    hull             3^{3/2} cosh z / (cosh² z + 2)^{3/2}
    hull | ∂ = ℓ     z³ cosh z / sinh³ z · exp(−(ℓ/x²)·g(z)),  g(z) = z² coth² z − (2/3) z² − 1
    slices           Σ_k (ℓ_k/ℓ)·pref(z_k) · exp(−Σ_j ℓ_j g(z_j)/x²)
    jump             e^{−c}(1 + c),  c = (2/3)·δ·√(6λ)

Every limit is paired with its exact finite-size counterpart from laws.py so
convergence can be tabulated along an R-ladder.

Usage (as module):
    from execution.asymptotics import hull_limit, convergence_table
    hull_limit(1.0, 1.0)
    convergence_table("hull", {"lambda": 1.0, "x": 1.0}).rows
"""

from __future__ import annotations

import math
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

from scipy import integrate

ROOT = Path(__file__).parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from execution.errors import AsymptoticsError, require
from execution.laws import hull_cond_gf, hull_volume_gf_closed, jump_gf, slice_gf
from execution.reporting import log
from execution.skeleton import CriticalPair

SQRT27 = 3.0 ** 1.5
SMALL_Z = 1e-3
QUAD_TOL = 1e-8
MAX_JUMP_ORDER = 10_000
LADDER = (25, 50, 100, 200)
JUMP_LADDER = (20, 40, 60)
FUNCTIONALS = ("hull", "hull_cond", "slice", "hulldiff")


# ─── Building blocks ──────────────────────────────────────────────────────────
def _z(lam: float, x: float) -> float:
    return (6.0 * lam) ** 0.25 * x


def _g(z: float) -> float:
    """z² coth² z − (2/3) z² − 1, which vanishes like z⁴/15 at 0."""
    if z < SMALL_Z:
        z2 = z * z
        return z2 * z2 * (1.0 / 15.0 - 2.0 * z2 / 189.0)
    coth = 1.0 / math.tanh(z)
    return z * z * coth * coth - 2.0 * z * z / 3.0 - 1.0


def _log_prefactor(z: float) -> float:
    """log(z³ cosh z / sinh³ z)."""
    if z == 0.0:
        return 0.0
    one_minus_e = -math.expm1(-2.0 * z)
    log_coth = math.log1p(math.exp(-2.0 * z)) - math.log(one_minus_e)
    return 3.0 * math.log(z) + log_coth + math.log(4.0) - 2.0 * z - 2.0 * math.log(one_minus_e)


# ─── Limit functionals ────────────────────────────────────────────────────────
def hull_limit(lam: float, x: float) -> float:
    """lim E[exp(−λ|B_{xR}|/R⁴)]."""
    require(lam >= 0 and x >= 0, f"need λ, x >= 0, got λ={lam}, x={x}")
    z = _z(lam, x)
    if z > 700.0:
        return 0.0
    sech2 = 1.0 / math.cosh(z) ** 2
    return SQRT27 * sech2 / (1.0 + 2.0 * sech2) ** 1.5


def hull_cond_limit(lam: float, x: float, ell: float) -> float:
    """lim E[exp(−λ|B_{xR}|/R⁴) | |∂B_{xR}| = ℓR²]."""
    require(lam >= 0 and x > 0 and ell > 0, f"need λ >= 0, x, ℓ > 0, got λ={lam}, x={x}, ℓ={ell}")
    z = _z(lam, x)
    return math.exp(_log_prefactor(z) - ell / (x * x) * _g(z))


def slice_limit(x: float, ell: float, arcs: Sequence[float], lambdas: Sequence[float]) -> float:
    """Joint limit transform of the slice volumes over arcs ℓ_1..ℓ_n of ∂B_{xR}."""
    require(x > 0 and ell > 0, f"need x, ℓ > 0, got x={x}, ℓ={ell}")
    require(len(arcs) >= 1 and len(arcs) == len(lambdas), f"{len(arcs)} arcs but {len(lambdas)} λ values")
    require(all(a > 0 for a in arcs), f"arcs must be positive, got {list(arcs)}")
    require(all(v >= 0 for v in lambdas), f"λ values must be >= 0, got {list(lambdas)}")
    require(math.isclose(math.fsum(arcs), ell, rel_tol=1e-12), f"arcs {list(arcs)} do not sum to ℓ={ell}")
    zs = [_z(lam, x) for lam in lambdas]
    mixture = math.fsum(a / ell * math.exp(_log_prefactor(z)) for a, z in zip(arcs, zs))
    exponent = math.fsum(a * _g(z) for a, z in zip(arcs, zs)) / (x * x)
    return mixture * math.exp(-exponent)


@dataclass(frozen=True)
class XiTransform:
    """E[exp(−λξ)] by quadrature, against the two closed forms in circulation.

    sqrt_form is (1 + √(2λ))·e^{−√(2λ)}; printed_form is (1 + √(2λ))·e^{−2λ}.
    """

    lam: float
    value: float
    abserr: float
    sqrt_form: float
    printed_form: float

    @property
    def sqrt_deviation(self) -> float:
        return abs(self.value - self.sqrt_form)

    @property
    def printed_deviation(self) -> float:
        return abs(self.value - self.printed_form)

    def matches(self, tol: float = 1e-6) -> str | None:
        """'sqrt', 'printed', 'both' or None."""
        hits = [name for name, dev in (("sqrt", self.sqrt_deviation), ("printed", self.printed_deviation))
                if dev <= tol]
        if len(hits) == 2:
            return "both"
        return hits[0] if hits else None

    def to_dict(self) -> dict:
        out = asdict(self)
        out.update(sqrt_deviation=self.sqrt_deviation, printed_deviation=self.printed_deviation,
                   matches=self.matches())
        return out


def xi_laplace(lam: float) -> XiTransform:
    """Laplace transform of the density (2πx⁵)^{−1/2}·e^{−1/(2x)}.

    After u = 1/x the integrand is u^{1/2}·e^{−u/2 − λ/u}/√(2π), integrated by
    QUADPACK on [0, 1] and [1, ∞).
    """
    require(lam >= 0, f"λ must be >= 0, got {lam}")
    norm = math.sqrt(2.0 * math.pi)

    def integrand(u: float) -> float:
        if u <= 0.0:
            return 0.0
        return math.sqrt(u) * math.exp(-0.5 * u - lam / u) / norm

    head, err_head = integrate.quad(integrand, 0.0, 1.0, epsabs=1e-12, epsrel=1e-12, limit=200)
    tail, err_tail = integrate.quad(integrand, 1.0, math.inf, epsabs=1e-12, epsrel=1e-12, limit=200)
    abserr = err_head + err_tail
    if not abserr <= QUAD_TOL:
        raise AsymptoticsError(f"ξ quadrature at λ={lam} did not converge (error estimate {abserr:.2e})")
    root = math.sqrt(2.0 * lam)
    return XiTransform(lam, head + tail, abserr, (1.0 + root) * math.exp(-root), (1.0 + root) * math.exp(-2.0 * lam))


def hulldiff_limit(lam: float, delta: float) -> float:
    """lim E[exp(−λ·ΔV/n⁴)] for the jump across a perimeter drop δn²."""
    require(lam >= 0 and delta >= 0, f"need λ, δ >= 0, got λ={lam}, δ={delta}")
    c = 2.0 / 3.0 * delta * math.sqrt(6.0 * lam)
    return math.exp(-c) * (1.0 + c)


# ─── Finite-size counterparts ─────────────────────────────────────────────────
@dataclass(frozen=True)
class FiniteCheck:
    finite: float
    limit: float

    @property
    def rel_gap(self) -> float:
        return abs(self.finite - self.limit) / self.limit if self.limit > 0 else abs(self.finite)


def hulldiff_finite_check(ell: float, delta: float, lam: float, n: int) -> FiniteCheck:
    """t^{q−p}[u^p]φ_t^q / [u^p]φ^q at p = ⌊ℓn²⌋, q = ⌊(ℓ−δ)n²⌋, s = e^{−λ/n⁴}."""
    require(ell > delta > 0 and lam >= 0 and n >= 1,
            f"need ℓ > δ > 0, λ >= 0, n >= 1, got ℓ={ell}, δ={delta}, λ={lam}, n={n}")
    p = math.floor(ell * n * n)
    q = math.floor((ell - delta) * n * n)
    require(q >= 1, f"(ℓ−δ)n² = {(ell - delta) * n * n} leaves no outer boundary")
    if p > MAX_JUMP_ORDER:
        raise AsymptoticsError(f"series order p={p} exceeds {MAX_JUMP_ORDER}")
    pair = CriticalPair.from_lambda(lam, float(n) ** 4)
    return FiniteCheck(jump_gf(pair, p, q, r=1), hulldiff_limit(lam, delta))


def split_arcs(arcs: Sequence[float], scale: float) -> list[int]:
    """Integer arcs by cumulative floors ⌊(ℓ_1+..+ℓ_i)·scale⌋."""
    cuts = [0]
    running = 0.0
    for a in arcs:
        running += a
        cuts.append(math.floor(running * scale))
    out = [b - a for a, b in zip(cuts, cuts[1:])]
    require(all(q >= 1 for q in out), f"arcs {list(arcs)} leave an empty block at scale {scale}")
    return out


def finite_value(functional: str, params: dict, R: int) -> FiniteCheck:
    """Exact finite-size value at size R next to its limit."""
    require(functional in FUNCTIONALS, f"functional must be one of {FUNCTIONALS}, got {functional!r}")
    if functional == "hulldiff":
        return hulldiff_finite_check(params["ell"], params["delta"], params["lambda"], R)
    x = params["x"]
    r = math.floor(x * R)
    require(r >= 1, f"xR = {x * R} is below one layer")
    scale = float(R) ** 4
    if functional == "hull":
        lam = params["lambda"]
        pair = CriticalPair.from_lambda(lam, scale)
        return FiniteCheck(hull_volume_gf_closed(pair, r), hull_limit(lam, x))
    if functional == "hull_cond":
        lam, ell = params["lambda"], params["ell"]
        q = max(1, math.floor(ell * R * R))
        pair = CriticalPair.from_lambda(lam, scale)
        return FiniteCheck(hull_cond_gf(pair, r, q), hull_cond_limit(lam, x, ell))
    arcs, lambdas = params["arcs"], params["lambdas"]
    ell = math.fsum(arcs)
    q_arcs = split_arcs(arcs, float(R) ** 2)
    pairs = [CriticalPair.from_lambda(lam, scale) for lam in lambdas]
    return FiniteCheck(slice_gf(r, sum(q_arcs), q_arcs, pairs), slice_limit(x, ell, arcs, lambdas))


@dataclass(frozen=True)
class ConvergenceRow:
    R: int
    finite: float
    limit: float
    rel_gap: float


@dataclass(frozen=True)
class ConvergenceTable:
    functional: str
    params: dict
    rows: tuple[ConvergenceRow, ...]

    @property
    def monotone(self) -> bool:
        gaps = [row.rel_gap for row in self.rows]
        return all(b < a for a, b in zip(gaps, gaps[1:]))

    @property
    def final_gap(self) -> float:
        return self.rows[-1].rel_gap

    def to_rows(self) -> list[dict]:
        return [asdict(row) for row in self.rows]


def convergence_table(functional: str, params: dict, ladder: Sequence[int] | None = None) -> ConvergenceTable:
    """Relative gaps |finite − limit|/limit along an increasing size ladder."""
    if ladder is None:
        ladder = JUMP_LADDER if functional == "hulldiff" else LADDER
    require(len(ladder) >= 1 and all(b > a for a, b in zip(ladder, ladder[1:])),
            f"ladder must be increasing, got {list(ladder)}")
    rows = []
    for R in ladder:
        check = finite_value(functional, params, R)
        rows.append(ConvergenceRow(R, check.finite, check.limit, check.rel_gap))
        log(f"   {functional} R={R}: finite={check.finite:.10g} limit={check.limit:.10g} gap={check.rel_gap:.3e}")
    return ConvergenceTable(functional, dict(params), tuple(rows))
