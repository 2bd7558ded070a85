"""
verify.py — Binds the sampler to the exact laws.

Estimators with standard errors, chi-square goodness of fit, a brute-force
forest enumeration for small slice laws, and the acceptance suite run by
`app.py verify all`. Every verdict is a dict

    {"test": name, "statistic": float, "p": p-value or None, "pass": bool, "seed": int or None}

and with a fixed seed every verdict is deterministic.

Usage (as module):
    from execution.verify import estimate_gf, run_acceptance
    verdicts = run_acceptance(trials=20_000, only={4, 6})
"""

from __future__ import annotations

import itertools
import json
import math
import sys
from dataclasses import asdict, dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

ROOT = Path(__file__).parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from execution.asymptotics import convergence_table, hulldiff_limit, xi_laplace
from execution.enumeration import (
    ALPHA_FLOAT,
    T_RHO_ALPHA,
    boltzmann_slot_pmf,
    boundary_series,
    c_constant,
    count_closed,
    h_series,
    h_value_at_rho,
    t_rho_alpha_value,
)
from execution.errors import SkeletonError, UiptLabError, VerifyError, require
from execution.laws import (
    hull_cond_gf,
    hull_volume_gf_closed,
    hull_volume_gf_iterate,
    log_w,
    perimeter_exact,
    perimeter_log_pmf,
    perimeter_pmf,
    perimeter_transition,
    slice_gf,
)
from execution.reporting import fail, log, ok, warn
from execution.sampler import run_trials
from execution.series import RATIONAL, Series
from execution.skeleton import OffspringLaw, iterate_closed, iterate_series, phi_coeffs, phi_t_eval

SIGNIFICANCE = 0.001
SIGMAS = 3.0
GF_VALUES = (0.5, 0.9, 0.99)
SLOT_CUT = 1e-13
MIN_RESTRICTED = 200


# ─── Estimators ───────────────────────────────────────────────────────────────
@dataclass(frozen=True)
class GfEstimate:
    """Monte Carlo estimate of E[Π s_j^{V_j}]."""

    s: float | tuple
    estimate: float
    stderr: float
    trials: int
    seed: int | None = None

    def deviation(self, exact: float) -> float:
        """|estimate − exact| in standard errors (0 or inf when stderr is 0)."""
        gap = abs(self.estimate - exact)
        if self.stderr > 0:
            return gap / self.stderr
        return 0.0 if gap <= 1e-12 else math.inf

    def within(self, exact: float, sigmas: float = SIGMAS) -> bool:
        return self.deviation(exact) <= sigmas

    def to_dict(self) -> dict:
        return asdict(self)


def estimate_gf(samples, s, seed: int | None = None) -> GfEstimate:
    """Mean of s^V (or Π_j s_j^{V_j} for a trials × n array) with its standard error."""
    values = np.asarray(samples, dtype=np.float64)
    if values.size == 0:
        raise VerifyError("cannot estimate a generating function from an empty sample")
    if values.ndim == 1:
        require(0.0 <= s <= 1.0, f"s must lie in [0,1], got {s}")
        weights = np.power(float(s), values)
        s_out = float(s)
    else:
        s_vec = np.asarray(s, dtype=np.float64)
        require(s_vec.shape == (values.shape[1],), f"{values.shape[1]} columns but {s_vec.size} values")
        require(bool(((s_vec >= 0) & (s_vec <= 1)).all()), f"values must lie in [0,1], got {s_vec.tolist()}")
        weights = np.prod(np.power(s_vec[None, :], values), axis=1)
        s_out = tuple(float(v) for v in s_vec)
    n = len(weights)
    stderr = float(weights.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return GfEstimate(s_out, float(weights.mean()), stderr, n, seed)


# ─── Goodness of fit ──────────────────────────────────────────────────────────
@dataclass(frozen=True)
class ChiSquare:
    statistic: float
    dof: int
    p: float
    bins: int


def _pool(observed: np.ndarray, expected: np.ndarray, min_bin: float) -> tuple[list[float], list[float]]:
    """Merge consecutive bins until each expected count reaches min_bin."""
    obs_bins, exp_bins = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(observed, expected):
        acc_o += o
        acc_e += e
        if acc_e >= min_bin:
            obs_bins.append(acc_o)
            exp_bins.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 or acc_o > 0:
        if exp_bins and acc_e < min_bin:
            obs_bins[-1] += acc_o
            exp_bins[-1] += acc_e
        else:
            obs_bins.append(acc_o)
            exp_bins.append(acc_e)
    return obs_bins, exp_bins


def chi_square_pmf(histogram, pmf, min_bin: float = 5.0) -> ChiSquare:
    """Pearson test of counts histogram[k] against probabilities pmf[k].

    Mass the pmf leaves unassigned (its truncation tail) and observations
    beyond len(pmf) form a final pooled bin.
    """
    observed = np.asarray(histogram, dtype=np.float64)
    probs = np.asarray(pmf, dtype=np.float64)
    total = observed.sum()
    if total <= 0:
        raise VerifyError("chi-square test on an empty histogram")
    size = max(len(observed), len(probs))
    obs = np.zeros(size + 1)
    obs[: len(observed)] = observed
    exp = np.zeros(size + 1)
    exp[: len(probs)] = total * probs
    # pmf tail goes into the last bin, together with unmatched observations
    exp[-1] = max(0.0, total * (1.0 - probs.sum()))
    obs[-1] += obs[len(probs): size].sum()
    obs[len(probs): size] = 0.0
    obs_bins, exp_bins = _pool(obs, exp, min_bin)
    dof = len(exp_bins) - 1
    if dof < 1:
        raise VerifyError(f"chi-square test has {dof} degrees of freedom after pooling")
    o, e = np.array(obs_bins), np.array(exp_bins)
    if (e <= 0).any():
        raise VerifyError("a pooled bin has zero expected count")
    statistic = float(((o - e) ** 2 / e).sum())
    pooled = size + 1 - len(exp_bins)
    if pooled:
        log(f"   chi-square: {pooled} sparse bin(s) pooled into neighbours")
    return ChiSquare(statistic, dof, float(stats.chi2.sf(statistic, dof)), len(exp_bins))


def chi_square_two_sample(a, b, min_bin: float = 5.0) -> ChiSquare:
    """Homogeneity of two histograms over the same support (chi2_contingency)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    size = max(len(a), len(b))
    a = np.pad(a, (0, size - len(a)))
    b = np.pad(b, (0, size - len(b)))
    both = a + b
    share = a.sum() / both.sum()
    cols_a, cols_b = [], []
    acc_a = acc_b = 0.0
    for x, y in zip(a, b):
        acc_a += x
        acc_b += y
        if min((acc_a + acc_b) * share, (acc_a + acc_b) * (1 - share)) >= min_bin:
            cols_a.append(acc_a)
            cols_b.append(acc_b)
            acc_a = acc_b = 0.0
    if cols_a:
        cols_a[-1] += acc_a
        cols_b[-1] += acc_b
    if len(cols_a) < 2:
        raise VerifyError("two-sample chi-square needs at least two pooled bins")
    statistic, p, dof, _ = stats.chi2_contingency(np.array([cols_a, cols_b]), correction=False)
    return ChiSquare(float(statistic), int(dof), float(p), len(cols_a))


# ─── Brute-force slice laws ───────────────────────────────────────────────────
@dataclass(frozen=True)
class BruteForce:
    value: float
    bound: float


@lru_cache(maxsize=None)
def _slot_gf(p: int, s: float) -> tuple[float, float]:
    """(E[s^{n+1}] for a Boltzmann p-gon, certified truncation error)."""
    if s == 1.0:
        return 1.0, 0.0
    n_max = max(64, math.ceil(math.log(SLOT_CUT) / math.log(s)))
    law = boltzmann_slot_pmf(p, n_max=n_max, tail_eps=1.0)
    powers = np.power(s, np.arange(1, n_max + 2, dtype=np.float64))
    return float(np.dot(law.probs, powers)), law.tail * s ** (n_max + 2)


def _compositions(total: int, parts: int) -> Iterable[tuple[int, ...]]:
    for cuts in itertools.combinations(range(total + parts - 1), parts - 1):
        prev, out = -1, []
        for c in cuts:
            out.append(c - prev - 1)
            prev = c
        out.append(total + parts - 2 - prev)
        yield tuple(out)


def _rotation_average(tree_factors: np.ndarray, root: int, arcs: Sequence[int]) -> float:
    """(1/q)·Σ_rotations Π_k factor(tree k, its block), root tree first."""
    q = tree_factors.shape[0]
    ends = np.cumsum(arcs)
    order = np.roll(np.arange(q), -root)
    total = 0.0
    for rot in range(q):
        block = np.searchsorted(ends, (np.arange(q) - rot) % q, side="right")
        total += float(np.prod(tree_factors[order, block]))
    return total / q


def brute_force_slice_gf(r: int, q: int, arcs: Sequence[int], values: Sequence[float],
                         m_tol: float = 1e-11) -> BruteForce:
    """Slice GF by enumerating every skeleton forest of a radius-1 or radius-2 hull."""
    require(r in (1, 2), f"brute force covers r ∈ {{1, 2}}, got {r}")
    require(sum(arcs) == q and all(a >= 1 for a in arcs), f"arcs {list(arcs)} must be positive and sum to {q}")
    require(len(values) == len(arcs), f"{len(arcs)} arcs but {len(values)} values")
    n = len(arcs)
    slot_error = [0.0]

    def factor(p: int, j: int) -> float:
        value, err = _slot_gf(p, float(values[j]))
        slot_error[0] = max(slot_error[0], err)
        return value

    if r == 1:
        # one tree carries the single child; the rest are leaves
        factors = np.array([[factor(2, j) for j in range(n)] for _ in range(q)])
        factors[0] = [factor(3, j) for j in range(n)]
        value = _rotation_average(factors, 0, arcs)
        return BruteForce(value, q * slot_error[0])

    law = OffspringLaw(1.0, warm=1)
    log_pi_q = float(perimeter_log_pmf(2, q))
    value, mass, m = 0.0, 0.0, 0
    while 1.0 - mass > m_tol and m < 400:
        m += 1
        theta = law.coeffs(m)
        power = np.zeros(m + 1)
        power[0] = 1.0
        for _ in range(q):
            power = np.convolve(power, theta)[: m + 1]
        # P(P_1 = m | P_2 = q) = π_1(m)·w(q)/w(m)·[u^m]φ^q / π_2(q)
        log_k = float(log_w(q) - log_w(m)) + math.log(power[m])
        p_m = math.exp(float(perimeter_log_pmf(1, m)) + log_k - log_pi_q)
        mass += p_m
        inner = 0.0
        for c in _compositions(m, q):
            weight = math.prod(theta[ci] for ci in c) / power[m]
            if weight == 0.0:
                continue
            base = np.array([[factor(ci + 2, j) * factor(2, j) ** ci for j in range(n)] for ci in c])
            for k, ck in enumerate(c):
                if ck == 0:
                    continue
                tree = base.copy()
                tree[k] = [factor(ck + 2, j) * factor(2, j) ** (ck - 1) * factor(3, j) for j in range(n)]
                inner += weight * ck / m * _rotation_average(tree, k, arcs)
        value += p_m * inner
    bound = max(0.0, 1.0 - mass) + (q + m) * slot_error[0]
    return BruteForce(value, bound)


# ─── Acceptance suite ─────────────────────────────────────────────────────────
def verdict(test: str, statistic: float, passed: bool, p: float | None = None, seed: int | None = None) -> dict:
    return {"test": test, "statistic": float(statistic), "p": None if p is None else float(p),
            "pass": bool(passed), "seed": seed}


def _criterion_equations() -> list[dict]:
    out = []
    N = 200
    x = Series.variable(N)
    h = h_series(N)
    residual = x * x - h * h * (1 - 8 * h)
    bad = sum(1 for c in residual.tolist() if c != 0)
    out.append(verdict("1.h-defining-equation", bad, bad == 0))
    # [y^k] of T = y + x(T − T(x,0))/y + T² for k < 20, to x-order 40
    bad = 0
    for k in range(20):
        lhs = boundary_series(k + 1, 40)
        rhs = boundary_series(k + 2, 39).shift(1)
        for i in range(k + 1):
            rhs = rhs + boundary_series(i + 1, 40) * boundary_series(k - i + 1, 40)
        if k == 1:
            rhs = rhs + 1
        bad += sum(1 for c in (lhs - rhs).tolist() if c != 0)
    bad += sum(1 for n in range(31) for p in range(1, 7)
               if boundary_series(p, 30).coeff(n) != count_closed(n, p))
    out.append(verdict("1.tutte-identity", bad, bad == 0))
    return out


def _criterion_constants() -> list[dict]:
    h_gap = abs(h_value_at_rho(10_000) - ALPHA_FLOAT)
    t_gap = abs(t_rho_alpha_value(10_000) - float(T_RHO_ALPHA))
    return [verdict("2.h-at-rho", h_gap, h_gap <= 1e-4), verdict("2.T-at-rho-alpha", t_gap, t_gap <= 1e-4)]


def _criterion_offspring() -> list[dict]:
    try:
        theta = phi_coeffs(100, check=True)
        routes = theta.coeff(0) == Fraction(3, 4) and theta.coeff(1) == Fraction(1, 8)
    except SkeletonError as e:
        warn(str(e))
        routes = False
    law = OffspringLaw(1.0)
    means = [law.partial_mean(N) for N in (10, 100, 1000, 10_000)]
    rising = all(b > a for a, b in zip(means, means[1:])) and means[-1] < 1.0
    return [verdict("3.theta-two-routes", 0 if routes else 1, routes),
            verdict("3.partial-means", 1.0 - means[-1], rising)]


def _criterion_iterates() -> list[dict]:
    worst = 0.0
    grid = np.linspace(0.0, 0.98, 50)
    for t in (0.3, 0.6, 0.9, 1.0):
        for u in grid:
            v = float(u)
            for r in range(1, 31):
                v = phi_t_eval(t, v)
                worst = max(worst, abs(iterate_closed(t, r, float(u)) - v))
    return [verdict("4.iterate-closed-form", worst, worst <= 1e-10)]


def _criterion_perimeter() -> list[dict]:
    worst = max(abs(1.0 - math.fsum(perimeter_pmf(r).probs)) for r in range(1, 21))
    bad = 0
    for r in range(1, 7):
        g = iterate_series(Fraction(1), r, 1, RATIONAL)
        for q in range(1, 31):
            c = c_constant(q).rational / c_constant(1).rational * Fraction(1, 12) ** (q - 1)
            if c / q * g.powi(q).coeff(1) != perimeter_exact(r, q):
                bad += 1
    return [verdict("5.perimeter-normalization", worst, worst <= 1e-10),
            verdict("5.perimeter-coefficient-route", bad, bad == 0)]


def _criterion_two_routes() -> list[dict]:
    worst = 0.0
    for s in np.linspace(0.05, 0.99, 20):
        for r in range(20):
            worst = max(worst, abs(hull_volume_gf_closed(float(s), r) - hull_volume_gf_iterate(float(s), r)))
    return [verdict("6.hull-gf-two-routes", worst, worst <= 1e-12)]


def _criterion_monte_carlo(trials: int, seed: int, workers: int) -> list[dict]:
    out = []
    for r in (1, 2, 3, 4):
        rows = run_trials("hull", {"r": r}, trials, seed, workers)
        volumes = np.array([row["V"] for row in rows])
        for s in GF_VALUES:
            est = estimate_gf(volumes, s, seed)
            exact = hull_volume_gf_closed(s, r)
            out.append(verdict(f"7.hull-gf.r={r}.s={s}", est.deviation(exact), est.within(exact), seed=seed))
        perimeters = np.array([row["P_r"] for row in rows])
        if r <= 3:
            pmf = perimeter_pmf(r)
            test = chi_square_pmf(np.bincount(perimeters), np.concatenate(([0.0], pmf.probs)))
            out.append(verdict(f"7.perimeter-chi2.r={r}", test.statistic, test.p > SIGNIFICANCE, test.p, seed))
        # restricted to {P_r = q} the unconditioned hull has the conditioned law
        q = int(np.argmax(np.bincount(perimeters)))
        restricted = volumes[perimeters == q]
        if len(restricted) < MIN_RESTRICTED:
            warn(f"only {len(restricted)} hulls with P_{r} = {q}; restricted-vs-conditioned check skipped")
            continue
        conditioned = run_trials("hull_conditioned", {"r": r, "q": q}, len(restricted), seed + 1, workers)
        test = chi_square_two_sample(np.bincount(restricted), np.bincount([row["V"] for row in conditioned]))
        out.append(verdict(f"7.restricted-vs-conditioned.r={r}.q={q}", test.statistic, test.p > SIGNIFICANCE,
                           test.p, seed))
    return out


def _criterion_mixtures() -> list[dict]:
    worst = 0.0
    for r in (1, 3, 5):
        pmf = perimeter_pmf(r)
        for s in GF_VALUES:
            mixed = math.fsum(pmf(q) * hull_cond_gf(s, r, q) for q in range(1, pmf.q_max + 1))
            worst = max(worst, abs(mixed - hull_volume_gf_closed(s, r)))
    ck = 0.0
    for p in (1, 2, 3):
        for q in (1, 2, 5):
            two = perimeter_transition(p, q, r=2)
            composed = math.fsum(perimeter_transition(p, m, 1) * perimeter_transition(m, q, 1) for m in range(1, 201))
            ck = max(ck, abs(two - composed))
    return [verdict("8.conditional-mixture", worst, worst <= 1e-8),
            verdict("8.chapman-kolmogorov", ck, ck <= 1e-8)]


def _criterion_slices(trials: int, seed: int, workers: int) -> list[dict]:
    worst = 0.0
    for r in (1, 2, 5):
        for q in (1, 3, 8):
            for s in GF_VALUES:
                ref = hull_cond_gf(s, r, q) / s
                worst = max(worst, abs(slice_gf(r, q, [q], [s]) - ref) / ref)
    out = [verdict("9.single-slice-is-hull", worst, worst <= 1e-12)]
    values = {1: (0.8,), 2: (0.8, 0.9), 3: (0.8, 0.9, 0.85)}
    gap = 0.0
    passed = True
    for q in (1, 2, 3):
        for n in range(1, q + 1):
            for arcs in (c for c in _compositions(q - n, n)):
                arcs = [a + 1 for a in arcs]
                brute = brute_force_slice_gf(1, q, arcs, values[n])
                diff = abs(brute.value - slice_gf(1, q, arcs, values[n]))
                gap = max(gap, diff)
                passed &= diff <= max(1e-8, brute.bound)
    out.append(verdict("9.slice-brute-force", gap, passed))
    arcs, s_vec = (1, 3), (0.8, 0.9)
    rows = run_trials("slices", {"r": 2, "q": 4, "arcs": list(arcs)}, trials, seed, workers)
    est = estimate_gf(np.array([row["slices"] for row in rows]), s_vec, seed)
    exact = slice_gf(2, 4, arcs, s_vec)
    out.append(verdict("9.slice-monte-carlo", est.deviation(exact), est.within(exact), seed=seed))
    return out


def _criterion_limits() -> list[dict]:
    cases = (
        ("hull", {"lambda": 1.0, "x": 1.0}),
        ("hull_cond", {"lambda": 1.0, "x": 1.0, "ell": 1.0}),
        ("slice", {"x": 1.0, "arcs": [0.5, 0.5], "lambdas": [1.0, 2.0]}),
    )
    out = []
    for name, params in cases:
        table = convergence_table(name, params)
        out.append(verdict(f"10.limit.{name}", table.final_gap, table.monotone and table.final_gap < 0.05))
    return out


def _criterion_jump() -> list[dict]:
    table = convergence_table("hulldiff", {"ell": 1.0, "delta": 0.3, "lambda": 1.0})
    return [verdict("11.jump-law", table.final_gap, table.monotone and table.final_gap < 0.05)]


def _criterion_xi() -> list[dict]:
    out = []
    for lam in (0.25, 1.0, 4.0):
        xi = xi_laplace(lam)
        match = xi.matches(1e-6)
        log(f"   ξ transform at λ={lam}: quadrature {xi.value:.12f}, matches {match}")
        out.append(verdict(f"12.xi-resolution.lambda={lam}", min(xi.sqrt_deviation, xi.printed_deviation),
                           match in ("sqrt", "printed")))
    worst = 0.0
    for lam, delta in ((1.0, 1.0), (0.5, 0.3), (2.0, 0.7)):
        worst = max(worst, abs(hulldiff_limit(lam, delta) - xi_laplace(4.0 / 3.0 * delta * delta * lam).value))
    out.append(verdict("12.jump-vs-xi", worst, worst <= 1e-6))
    return out


def _criterion_determinism(trials: int, seed: int) -> list[dict]:
    n = min(trials, 2000)
    runs = [json.dumps(run_trials("hull", {"r": 2}, n, seed, workers)) for workers in (1, 1, 2)]
    same = len(set(runs)) == 1
    return [verdict("13.determinism", 0 if same else 1, same, seed=seed)]


CRITERIA = {
    1: lambda cfg: _criterion_equations(),
    2: lambda cfg: _criterion_constants(),
    3: lambda cfg: _criterion_offspring(),
    4: lambda cfg: _criterion_iterates(),
    5: lambda cfg: _criterion_perimeter(),
    6: lambda cfg: _criterion_two_routes(),
    7: lambda cfg: _criterion_monte_carlo(*cfg),
    8: lambda cfg: _criterion_mixtures(),
    9: lambda cfg: _criterion_slices(*cfg),
    10: lambda cfg: _criterion_limits(),
    11: lambda cfg: _criterion_jump(),
    12: lambda cfg: _criterion_xi(),
    13: lambda cfg: _criterion_determinism(cfg[0], cfg[1]),
}


def run_acceptance(trials: int = 100_000, seed: int = 42, workers: int = 1,
                   only: Iterable[int] | None = None) -> list[dict]:
    """Run the acceptance criteria (all, or those in `only`) and return their verdicts."""
    selected = sorted(CRITERIA) if only is None else sorted(set(only))
    require(all(k in CRITERIA for k in selected), f"unknown criteria {sorted(set(selected) - set(CRITERIA))}")
    verdicts = []
    for key in selected:
        try:
            results = CRITERIA[key]((trials, seed, workers))
        except UiptLabError as e:
            fail(f"criterion {key}: {e}")
            results = [verdict(f"{key}.error", math.nan, False, seed=seed)]
        for v in results:
            (ok if v["pass"] else fail)(f"{v['test']}: statistic={v['statistic']:.4g}")
        verdicts.extend(results)
    return verdicts
