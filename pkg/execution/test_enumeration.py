#!/usr/bin/env python3
"""
Unit tests for enumeration.py
===================================
Triangulation counts, the constants ρ and α, and Boltzmann slot laws.

Usage:
    python execution/test_enumeration.py
"""

import math
import sys
from fractions import Fraction
from pathlib import Path

# Add repo root to path so `execution.*` imports resolve
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from execution.enumeration import (
    ALPHA,
    CONSTANTS,
    COUNTS,
    RHO,
    RHO_FLOAT,
    T_RHO_ALPHA,
    boltzmann_slot_pmf,
    boundary_value_at_rho,
    c_constant,
    count_closed,
    h_series,
    h_value_at_rho,
    t_disk_series,
    t_disk_value_at_rho,
    t_rho_alpha_value,
)
from execution.errors import UsageError
from execution.series import QSqrt3, Series


def test_constants_are_exact():
    CONSTANTS.check()
    assert RHO * RHO == Fraction(1, 432), "ρ² = 1/432"
    assert abs(RHO_FLOAT - math.sqrt(3) / 36) < 1e-17, f"ρ = {RHO_FLOAT}"
    assert ALPHA == Fraction(1, 12), "α = 1/12"
    assert abs(float(T_RHO_ALPHA) - (3 - math.sqrt(3)) / 6) < 1e-16, "T(ρ,α) = (3−√3)/6"
    print("  ✓ test_constants_are_exact PASSED")


def test_h_solves_its_equation():
    """x² = h²(1 − 8h) as series, and h(ρ) → α."""
    N = 60
    h = h_series(N)
    x = Series.variable(N)
    assert h * h * (1 - 8 * h) == x * x, "h does not solve x² = h²(1−8h)"
    assert h.tolist()[:4] == [0, 1, 4, 40], f"h starts {h.tolist()[:4]}"
    assert abs(h_value_at_rho(10_000) - 1 / 12) < 1e-6, f"h(ρ) ≈ {h_value_at_rho(10_000)}"
    # the raw partial sum converges like N^{−1/2}; the tail correction closes the gap
    raw = h_value_at_rho(10_000, tail_corrected=False)
    assert abs(raw - 1 / 12) > abs(h_value_at_rho(10_000) - 1 / 12), "tail correction should help"
    print("  ✓ test_h_solves_its_equation PASSED")


def test_small_counts():
    """Degenerate edge, single triangle and the one-vertex loop."""
    assert COUNTS.count(0, 2) == 1, "the 2-gon without inner vertices is the single edge"
    assert COUNTS.count(0, 3) == 1, "a single triangle"
    assert COUNTS.count(1, 1) == 1, "one inner vertex in a loop"
    assert COUNTS.count(0, 1) == 0, "no 1-gon without inner vertices"
    assert t_disk_series(5).coeff(0) == 0, "T(x,0) has no constant term"
    print("  ✓ test_small_counts PASSED")


def test_recurrence_matches_closed_form():
    for n, p, c in COUNTS.table(25, 5):
        expected = count_closed(n, p)
        assert c == expected, f"|T_{{{n},{p}}}| recurrence {c} vs closed {expected}"
    print("  ✓ test_recurrence_matches_closed_form PASSED")


def test_boundary_values_at_rho():
    assert boundary_value_at_rho(1) == QSqrt3(Fraction(1, 2), Fraction(-1, 4)), "T_1(ρ) = 1/2 − √3/4"
    assert abs(t_disk_value_at_rho(5000) - float(boundary_value_at_rho(1))) < 1e-4, "T(ρ,0) partial sums"
    total = float(T_RHO_ALPHA)
    assert abs(t_rho_alpha_value(200_000) - total) < 1e-6, f"Σ T_p(ρ) α^{{p−1}} → {t_rho_alpha_value(200_000)}"
    try:
        boundary_value_at_rho(0)
        raise AssertionError("p = 0 must be rejected")
    except UsageError:
        pass
    print("  ✓ test_boundary_values_at_rho PASSED")


def test_c_constant():
    c1 = c_constant(1)
    assert c1.rational == Fraction(1, 6), f"C(1) rational part {c1.rational}"
    assert abs(c1.value - 1 / (6 * math.sqrt(2 * math.pi))) < 1e-15, f"C(1) = {c1.value}"
    assert c_constant(3).rational == Fraction(3 * 3 * 20, 4), "C(3) = 3·3·C(6,3)/4 over √(2π)"
    print("  ✓ test_c_constant PASSED")


def test_boltzmann_slot_law():
    law = boltzmann_slot_pmf(2)
    assert abs(law.probs[0] - 1 / float(boundary_value_at_rho(2))) < 1e-12, "q_0 = 1/T_2(ρ)"
    assert law.tail <= 1e-9 or law.truncated, f"tail {law.tail} above tail_eps but not flagged"
    assert (law.probs >= 0).all(), "probabilities must be nonnegative"
    fixed = boltzmann_slot_pmf(3, n_max=50, tail_eps=1.0)
    assert fixed.n_max == 50, f"fixed cutoff → {fixed.n_max}"
    assert 0 < fixed.tail < 1, f"a cutoff of 50 leaves a visible tail, got {fixed.tail}"
    print("  ✓ test_boltzmann_slot_law PASSED")


if __name__ == "__main__":
    print("=" * 60)
    print("  enumeration.py — Unit Tests")
    print("=" * 60 + "\n")

    tests = [
        test_constants_are_exact,
        test_h_solves_its_equation,
        test_small_counts,
        test_recurrence_matches_closed_form,
        test_boundary_values_at_rho,
        test_c_constant,
        test_boltzmann_slot_law,
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
