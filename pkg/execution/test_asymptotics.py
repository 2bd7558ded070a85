#!/usr/bin/env python3
"""
Unit tests for asymptotics.py
===================================
Scaling-limit transforms, the ξ quadrature and finite-size convergence.

Usage:
    python execution/test_asymptotics.py
"""

import math
import sys
from pathlib import Path

# Add repo root to path so `execution.*` imports resolve
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from scipy import integrate

from execution.asymptotics import (
    convergence_table,
    finite_value,
    hull_cond_limit,
    hull_limit,
    hulldiff_finite_check,
    hulldiff_limit,
    slice_limit,
    split_arcs,
    xi_laplace,
)
from execution.errors import UsageError


def test_trivial_parameters():
    assert abs(hull_limit(0.0, 1.3) - 1.0) < 1e-15, "λ = 0 gives 1"
    assert abs(hull_limit(2.0, 0.0) - 1.0) < 1e-15, "x = 0 gives 1"
    assert abs(hull_cond_limit(0.0, 1.0, 2.0) - 1.0) < 1e-15, "conditional transform at λ = 0"
    assert hull_limit(5.0, 400.0) == 0.0, "huge z underflows to 0"
    print("  ✓ test_trivial_parameters PASSED")


def test_conditional_limit_mixes_to_hull_limit():
    """Averaging over ℓ ~ Gamma(3/2, scale x²) recovers the unconditional limit."""
    for lam, x in ((1.0, 1.0), (0.3, 2.0), (4.0, 0.5)):
        scale = x * x

        def integrand(ell):
            if ell <= 0.0:
                return 0.0
            density = 2.0 * math.sqrt(ell) * math.exp(-ell / scale) / (math.sqrt(math.pi) * scale ** 1.5)
            return density * hull_cond_limit(lam, x, ell)

        mixed, _ = integrate.quad(integrand, 0.0, math.inf, epsabs=1e-12, epsrel=1e-10, limit=200)
        assert abs(mixed - hull_limit(lam, x)) < 1e-8, f"λ={lam}, x={x}: {mixed} vs {hull_limit(lam, x)}"
    print("  ✓ test_conditional_limit_mixes_to_hull_limit PASSED")


def test_conditional_limit_decreases_in_perimeter():
    values = [hull_cond_limit(1.0, 1.0, ell) for ell in (0.5, 1.0, 2.0, 4.0)]
    assert all(b < a for a, b in zip(values, values[1:])), f"not decreasing: {values}"
    print("  ✓ test_conditional_limit_decreases_in_perimeter PASSED")


def test_slice_limit_reductions():
    x, ell = 0.8, 1.5
    single = slice_limit(x, ell, [ell], [2.0])
    assert abs(single - hull_cond_limit(2.0, x, ell)) < 1e-14, "one arc is the conditional hull limit"
    split = slice_limit(x, ell, [0.5, 1.0], [2.0, 2.0])
    assert abs(split - single) < 1e-14, "equal λ on every arc collapses to one arc"
    mixed = slice_limit(x, ell, [0.5, 1.0], [0.0, 2.0])
    assert single < mixed < 1.0, f"turning one arc off must raise the transform: {mixed}"
    try:
        slice_limit(x, ell, [0.5, 0.5], [1.0, 1.0])
        raise AssertionError("arcs must sum to ℓ")
    except UsageError:
        pass
    print("  ✓ test_slice_limit_reductions PASSED")


def test_xi_quadrature():
    assert abs(xi_laplace(0.0).value - 1.0) < 1e-10, "ξ is a probability law"
    one = xi_laplace(1.0)
    assert one.matches() == "sqrt", f"at λ=1 the quadrature matched {one.matches()}"
    assert one.printed_deviation > 1e-3, "the two closed forms differ at λ=1"
    # √(2λ) = 2λ at λ = 1/2, so both forms coincide there
    assert xi_laplace(0.5).matches() == "both", "forms coincide at λ = 1/2"
    try:
        xi_laplace(-1.0)
        raise AssertionError("negative λ must be rejected")
    except UsageError:
        pass
    print("  ✓ test_xi_quadrature PASSED")


def test_hulldiff_matches_xi():
    for lam, delta in ((1.0, 1.0), (0.5, 0.3), (2.0, 0.7)):
        xi = xi_laplace(4.0 / 3.0 * delta * delta * lam)
        assert abs(hulldiff_limit(lam, delta) - xi.value) < 1e-8, f"λ={lam}, δ={delta}"
    assert hulldiff_limit(1.0, 0.0) == 1.0, "no drop, no volume"
    print("  ✓ test_hulldiff_matches_xi PASSED")


def test_hulldiff_finite_size():
    coarse = hulldiff_finite_check(1.0, 0.5, 1.0, 10)
    fine = hulldiff_finite_check(1.0, 0.5, 1.0, 30)
    assert 0 < fine.finite <= 1, f"finite value {fine.finite}"
    assert fine.limit == hulldiff_limit(1.0, 0.5), "limit carried unchanged"
    assert fine.rel_gap < coarse.rel_gap, f"gap did not shrink: {coarse.rel_gap} → {fine.rel_gap}"
    try:
        hulldiff_finite_check(0.5, 1.0, 1.0, 10)
        raise AssertionError("δ ≥ ℓ must be rejected")
    except UsageError:
        pass
    print("  ✓ test_hulldiff_finite_size PASSED")


def test_split_arcs():
    assert split_arcs([0.5, 0.5], 4.0) == [2, 2], "even split"
    assert split_arcs([0.25, 0.25, 0.5], 8.0) == [2, 2, 4], "cumulative floors"
    assert split_arcs([0.3, 0.3], 5.0) == [1, 2], "floors of running sums, not of each arc"
    assert sum(split_arcs([0.25, 0.5, 0.25], 1e4)) == 10_000, "blocks tile the boundary"
    try:
        split_arcs([0.1], 4.0)
        raise AssertionError("an empty block must be rejected")
    except UsageError:
        pass
    print("  ✓ test_split_arcs PASSED")


def test_convergence_tables():
    table = convergence_table("hull", {"lambda": 1.0, "x": 0.5}, ladder=(20, 40, 80))
    assert [row.R for row in table.rows] == [20, 40, 80], "ladder order"
    assert table.final_gap < table.rows[0].rel_gap, f"gaps {[row.rel_gap for row in table.rows]}"
    cond = finite_value("hull_cond", {"lambda": 1.0, "x": 1.0, "ell": 1.0}, 60)
    assert cond.rel_gap < 0.2, f"conditional hull at R=60 is off by {cond.rel_gap}"
    sl = finite_value("slice", {"x": 1.0, "arcs": [0.5, 0.5], "lambdas": [1.0, 1.0]}, 40)
    assert 0 < sl.finite < 1 and 0 < sl.limit < 1, f"slice values {sl}"
    for bad in (("volume", {}), ("hull", {"lambda": 1.0, "x": 0.01})):
        try:
            finite_value(bad[0], bad[1], 20)
            raise AssertionError(f"{bad} must be rejected")
        except UsageError:
            pass
    try:
        convergence_table("hull", {"lambda": 1.0, "x": 0.5}, ladder=(40, 20))
        raise AssertionError("a decreasing ladder must be rejected")
    except UsageError:
        pass
    print("  ✓ test_convergence_tables PASSED")


if __name__ == "__main__":
    print("=" * 60)
    print("  asymptotics.py — Unit Tests")
    print("=" * 60 + "\n")

    tests = [
        test_trivial_parameters,
        test_conditional_limit_mixes_to_hull_limit,
        test_conditional_limit_decreases_in_perimeter,
        test_slice_limit_reductions,
        test_xi_quadrature,
        test_hulldiff_matches_xi,
        test_hulldiff_finite_size,
        test_split_arcs,
        test_convergence_tables,
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
