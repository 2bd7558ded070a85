#!/usr/bin/env python3
"""
Unit tests for skeleton.py
===================================
The (s, t) pairing, the offspring law θ_t, φ_t and its iterates.

Usage:
    python execution/test_skeleton.py
"""

import math
import sys
from fractions import Fraction
from pathlib import Path

# Add repo root to path so `execution.*` imports resolve
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

import numpy as np

from execution.errors import UsageError
from execution.series import FLOAT, RATIONAL
from execution.skeleton import (
    ITERATE_CACHE_SIZE,
    _ITERATES,
    CriticalPair,
    OffspringLaw,
    as_pair,
    exact_theta_t,
    iterate_closed,
    iterate_prime0,
    iterate_recurrence,
    iterate_series,
    log_iterate_one_minus0,
    log_iterate_prime0,
    phi_coeffs,
    phi_t_coeffs,
    phi_t_eval,
    solve_cubic,
)


def test_pairing():
    """s² = t²(3 − 2t), with ε = 1 − t resolved near criticality."""
    for y in (0.0, 1e-9, 0.3, 0.5, 0.99, 1.0):
        x = solve_cubic(y)
        assert abs(x * x * (3 - 2 * x) - y) < 1e-15, f"cubic at y={y} → {x}"
    for s in (0.1, 0.5, 0.9, 0.999999):
        pair = CriticalPair.from_s(s)
        assert abs(pair.residual()) < 1e-14, f"residual at s={s}: {pair.residual()}"
        assert 0 < pair.t < 1, f"t({s}) = {pair.t}"
    assert CriticalPair.from_s(1.0).critical, "s = 1 is critical"
    # λ/R⁴ = 1e−12: 1 − s² ≈ 2e−12 is lost in s but kept in ε ≈ √(2e−12/3)
    pair = CriticalPair.from_lambda(1.0, 1e12)
    assert abs(pair.eps - math.sqrt(2e-12 / 3)) / pair.eps < 1e-5, f"ε = {pair.eps}"
    try:
        CriticalPair.from_s(1.5)
        raise AssertionError("s > 1 must be rejected")
    except UsageError:
        pass
    try:
        as_pair(0)
        raise AssertionError("t = 0 must be rejected")
    except UsageError:
        pass
    print("  ✓ test_pairing PASSED")


def test_theta_closed_form():
    theta = phi_coeffs(30)
    assert theta.coeff(0) == Fraction(3, 4) and theta.coeff(1) == Fraction(1, 8), f"θ starts {theta.tolist()[:2]}"
    assert exact_theta_t(Fraction(1), 30) == theta, "telescoping form disagrees with φ"
    floats = OffspringLaw(1.0).coeffs(30)
    assert np.allclose(floats, [float(c) for c in theta.tolist()], rtol=1e-12, atol=0), "float θ drifted"
    print("  ✓ test_theta_closed_form PASSED")


def test_offspring_tail_is_exact():
    """Σ_{i≤K} θ_t(i) + P(c > K) = 1 for every K."""
    for t in (1.0, 0.7):
        law = OffspringLaw(t)
        for K in (0, 5, 200):
            total = math.fsum(law.coeffs(K)) + law.tail(K)
            assert abs(total - 1.0) < 1e-13, f"t={t}, K={K}: mass {total}"
    print("  ✓ test_offspring_tail_is_exact PASSED")


def test_phi_t_routes_agree():
    pair = CriticalPair.from_s(0.8)
    closed = phi_t_coeffs(pair, 20, "closed")
    for method in ("definition", "taylor"):
        other = phi_t_coeffs(pair, 20, method)
        assert closed.max_abs_diff(other) < 1e-10, f"{method} route differs by {closed.max_abs_diff(other)}"
    assert abs(closed.evaluate(0.3) - phi_t_eval(pair, 0.3)) < 1e-9, "series and pointwise φ_t differ"
    print("  ✓ test_phi_t_routes_agree PASSED")


def test_critical_iterates():
    for r in (1, 2, 5, 40):
        assert abs(iterate_closed(1.0, r, 0.0) - (1 - 1 / (r + 1) ** 2)) < 1e-15, f"φ^{r}(0)"
        assert abs(iterate_prime0(1.0, r) - 1 / (r + 1) ** 3) < 1e-15, f"φ^{r}′(0)"
    exact = iterate_series(Fraction(1), 2, 6, RATIONAL)
    assert exact.coeff(0) == Fraction(8, 9) and exact.coeff(1) == Fraction(1, 27), f"φ² starts {exact.tolist()[:2]}"
    print("  ✓ test_critical_iterates PASSED")


def test_iterate_routes_agree():
    pair = CriticalPair.from_s(0.9)
    for r in (1, 3, 10):
        for u in (0.0, 0.25, 0.9):
            a = iterate_closed(pair, r, u)
            b = iterate_recurrence(pair, r, u)
            assert abs(a - b) < 1e-12, f"r={r}, u={u}: closed {a} vs recurrence {b}"
        series = iterate_series(pair, r, 4, FLOAT)
        assert abs(series.coeff(0) - iterate_closed(pair, r, 0.0)) < 1e-12, f"constant term at r={r}"
        assert abs(series.coeff(1) - iterate_prime0(pair, r)) < 1e-10, f"linear term at r={r}"
        assert abs(log_iterate_prime0(pair, r) - math.log(iterate_prime0(pair, r))) < 1e-12, "log D"
        assert abs(math.exp(log_iterate_one_minus0(pair, r)) - (1 - iterate_closed(pair, r, 0.0))) < 1e-12, "log(1−V)"
    print("  ✓ test_iterate_routes_agree PASSED")


def test_deep_iterates_stay_finite():
    """Far past float underflow of φ_t^{r}′(0) the log form is still usable."""
    pair = CriticalPair.from_s(0.5)
    value = log_iterate_prime0(pair, 5000)
    assert math.isfinite(value) and value < -700, f"log D at r=5000: {value}"
    assert iterate_closed(pair, 5000, 0.0) == 1.0, "the iterate saturates at 1"
    b2 = pair.b2
    A = 5001 * math.asinh(pair.b)
    log_gap = log_iterate_one_minus0(pair, 5000)
    assert abs(log_gap - (math.log(b2) + math.log(4.0) - 2.0 * A)) < 1e-9 * abs(log_gap), f"log(1−V) = {log_gap}"
    print("  ✓ test_deep_iterates_stay_finite PASSED")


def test_iterates_compose_and_increase():
    """φ_t^{r}∘φ_t^{r′} = φ_t^{r+r′}; r ↦ φ_t^{r}(u) and u ↦ φ_t^{r}(u) increase."""
    for t in (1.0, CriticalPair.from_s(0.9), CriticalPair.from_s(0.5)):
        for r, r2 in ((1, 1), (2, 3), (5, 7)):
            for u in (0.0, 0.3, 0.8):
                nested = iterate_closed(t, r, iterate_closed(t, r2, u))
                direct = iterate_closed(t, r + r2, u)
                assert abs(nested - direct) < 1e-12, f"t={t}, r={r}+{r2}, u={u}: {nested} vs {direct}"
        grid = np.linspace(0.0, 0.99, 12)
        rows = np.array([[iterate_closed(t, r, u) for u in grid] for r in range(0, 8)])
        assert (np.diff(rows, axis=0) >= -1e-15).all(), f"not increasing in r at t={t}"
        assert (np.diff(rows, axis=1) >= -1e-15).all(), f"not increasing in u at t={t}"
    pair = CriticalPair.from_s(0.8)
    # the composed series route agrees with the closed form off the origin
    for r in (2, 5):
        series = iterate_series(pair, r, 16, FLOAT)
        assert abs(series.evaluate(0.1) - iterate_closed(pair, r, 0.1)) < 1e-10, f"series φ^{r}(0.1)"
    assert iterate_series(pair, 2, 6, FLOAT) == iterate_series(pair, 2, 6, FLOAT), "cached iterate changed"
    print("  ✓ test_iterates_compose_and_increase PASSED")


def test_iterate_cache_is_bounded():
    for k in range(ITERATE_CACHE_SIZE + 10):
        iterate_series(CriticalPair.from_s(0.5 + k / 200), 2, 4, FLOAT)
    assert len(_ITERATES) <= ITERATE_CACHE_SIZE, f"{len(_ITERATES)} cached chains"
    last = CriticalPair.from_s(0.5 + (ITERATE_CACHE_SIZE + 9) / 200)
    assert ("float", last.t, last.eps, "float") in _ITERATES, "most recent chain evicted"
    print("  ✓ test_iterate_cache_is_bounded PASSED")


if __name__ == "__main__":
    print("=" * 60)
    print("  skeleton.py — Unit Tests")
    print("=" * 60 + "\n")

    tests = [
        test_pairing,
        test_theta_closed_form,
        test_offspring_tail_is_exact,
        test_phi_t_routes_agree,
        test_critical_iterates,
        test_iterate_routes_agree,
        test_deep_iterates_stay_finite,
        test_iterates_compose_and_increase,
        test_iterate_cache_is_bounded,
    ]

    passed = 0
    failed = 0

    for test in tests:
        try:
            test()
            passed += 1
        except AssertionError as e:
            print(f"  ✗ {test.__name__} FAILED: {e}")
            failed += 1
        except Exception as e:
            print(f"  ✗ {test.__name__} ERROR: {e}")
            failed += 1

    print(f"\n  {'─'*40}")
    print(f"  Results: {passed} passed, {failed} failed")

    if failed > 0:
        sys.exit(1)
    else:
        print("  ✓ All tests passed!")
        sys.exit(0)
