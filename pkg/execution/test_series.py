#!/usr/bin/env python3
"""
Unit tests for series.py
===================================
Truncated power series over the rational, Q(√3), float and mpf rings.

Usage:
    python execution/test_series.py
"""

import math
import sys
from fractions import Fraction
from pathlib import Path

# Add repo root to path so `execution.*` imports resolve
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from execution.errors import SeriesError
from execution.series import FLOAT, MPF, RATIONAL, SQRT3, SQRT3_RING, QSqrt3, Series, get_ring


def test_qsqrt3_arithmetic():
    """Field operations, norm and float conversion in Q(√3)."""
    assert SQRT3 * SQRT3 == QSqrt3(3), f"√3·√3 = {SQRT3 * SQRT3}"
    x = QSqrt3(2, 1)
    assert x * x.inverse() == QSqrt3(1), "x·x⁻¹ should be 1"
    assert x.norm() == 1, f"norm(2+√3) = {x.norm()}"
    # 2 − √3 is tiny next to its parts; the conjugate trick keeps it accurate
    small = QSqrt3(2, -1)
    exact = 1.0 / (2.0 + math.sqrt(3.0))
    assert abs(float(small) - exact) <= 1e-15 * exact, f"float(2−√3) = {float(small)} vs {exact}"
    tiny = QSqrt3(97, -56)   # 1/(97 + 56√3) ≈ 5.15e−3
    exact = 1.0 / (97.0 + 56.0 * math.sqrt(3.0))
    assert abs(float(tiny) - exact) <= 1e-13 * exact, f"float(97−56√3) = {float(tiny)} vs {exact}"
    print("  ✓ test_qsqrt3_arithmetic PASSED")


def test_qsqrt3_sqrt_and_parse():
    assert QSqrt3(4, 2).sqrt() == QSqrt3(1, 1), "√(4+2√3) should be 1+√3"
    assert QSqrt3(Fraction(1, 3)).sqrt() == QSqrt3(0, Fraction(1, 3)), "√(1/3) = √3/3"
    try:
        QSqrt3(2).sqrt()
        raise AssertionError("√2 is not in Q(√3)")
    except SeriesError:
        pass
    q = QSqrt3(Fraction(-5, 7), Fraction(3, 11))
    assert QSqrt3.parse(str(q)) == q, f"{q} did not parse back"
    assert QSqrt3.parse("3/4") == QSqrt3(Fraction(3, 4)), "bare rationals parse too"
    print("  ✓ test_qsqrt3_sqrt_and_parse PASSED")


def test_arithmetic_and_truncation():
    x = Series.variable(8)
    f = (1 - x).reciprocal()
    assert f.tolist() == [1] * 9, f"1/(1−x) → {f}"
    g = f * Series([1, 0, 5], order=4)
    assert g.order == 4, f"product order should be the minimum, got {g.order}"
    try:
        f.coeff(9)
        raise AssertionError("coefficient past the order must raise")
    except SeriesError:
        pass
    assert f.shift(2).coeff(2) == 1 and f.shift(2).order == 10, "shift grows the order"
    print("  ✓ test_arithmetic_and_truncation PASSED")


def test_sqrt_and_catalan():
    """(1 − √(1−4x))/(2x) is the Catalan generating function."""
    N = 15
    root = Series([1, -4], order=N + 1).sqrt()
    catalan = ((1 - root) / 2).divide_by_x()
    expected = [math.comb(2 * n, n) // (n + 1) for n in range(N + 1)]
    assert [int(c) for c in catalan.tolist()] == expected, f"Catalan mismatch: {catalan}"
    print("  ✓ test_sqrt_and_catalan PASSED")


def test_compose_and_revert():
    x = Series.variable(10)
    f = x + x * x
    g = f.revert()
    assert f.compose(g) == x, f"f∘f⁻¹ = {f.compose(g)}"
    assert g.compose(f) == x, f"f⁻¹∘f = {g.compose(f)}"
    try:
        (1 + x).revert()
        raise AssertionError("revert of f(0) ≠ 0 must raise")
    except SeriesError:
        pass
    print("  ✓ test_compose_and_revert PASSED")


def test_rings_do_not_mix():
    a = Series([1, 1], order=3, ring=RATIONAL)
    b = Series([1, 1], order=3, ring=FLOAT)
    try:
        _ = a + b
        raise AssertionError("adding a rational and a float series must raise")
    except SeriesError:
        pass
    try:
        b.to_ring(RATIONAL)
        raise AssertionError("float → exact conversion must raise")
    except SeriesError:
        pass
    assert a.to_ring(SQRT3_RING).coeff(1) == QSqrt3(1), "rational lifts into Q(√3)"
    print("  ✓ test_rings_do_not_mix PASSED")


def test_float_and_mpf_agree_with_exact():
    exact = Series([1, Fraction(-1, 4)], order=20).sqrt()
    approx = Series([1.0, -0.25], order=20, ring=FLOAT).sqrt()
    assert exact.to_ring(FLOAT).max_abs_diff(approx) < 1e-14, "float sqrt drifted"
    mp = Series([1, Fraction(-1, 4)], order=20, ring=MPF).sqrt()
    assert exact.max_abs_diff(mp) < 1e-12, "mpf sqrt drifted"
    print("  ✓ test_float_and_mpf_agree_with_exact PASSED")


def test_json_schema():
    s = Series([Fraction(1, 3), 0, Fraction(-2, 5)], order=2)
    data = s.to_json()
    assert data == {"ring": "rational", "order": 2, "coeffs": ["1/3", "0/1", "-2/5"]}, f"schema: {data}"
    q = Series([QSqrt3(1, 2), QSqrt3(0, Fraction(1, 36))], order=1, ring=SQRT3_RING)
    assert Series.loads(q.dumps()) == q, "Q(√3) series did not survive JSON"
    try:
        get_ring("complex")
        raise AssertionError("unknown ring names must raise")
    except SeriesError:
        pass
    print("  ✓ test_json_schema PASSED")


if __name__ == "__main__":
    print("=" * 60)
    print("  series.py — Unit Tests")
    print("=" * 60 + "\n")

    tests = [
        test_qsqrt3_arithmetic,
        test_qsqrt3_sqrt_and_parse,
        test_arithmetic_and_truncation,
        test_sqrt_and_catalan,
        test_compose_and_revert,
        test_rings_do_not_mix,
        test_float_and_mpf_agree_with_exact,
        test_json_schema,
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
