#!/usr/bin/env python3
"""
Unit tests for verify.py
===================================
Estimators, chi-square tests, the brute-force slice oracle and the
acceptance runner.

Usage:
    python execution/test_verify.py
"""

import math
import sys
from pathlib import Path

# Add repo root to path so `execution.*` imports resolve
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

import numpy as np

from execution.errors import UsageError, VerifyError
from execution.laws import slice_gf
from execution.sampler import run_trials
from execution.verify import (
    CRITERIA,
    MIN_RESTRICTED,
    brute_force_slice_gf,
    chi_square_pmf,
    chi_square_two_sample,
    estimate_gf,
    run_acceptance,
    verdict,
)


def test_estimate_gf():
    est = estimate_gf(np.full(50, 3), 0.5, seed=1)
    assert est.estimate == 0.125 and est.stderr == 0.0, f"constant sample → {est}"
    assert est.within(0.125) and not est.within(0.2), "zero stderr means exact comparison"
    joint = estimate_gf(np.array([[1, 2], [3, 0]]), (0.5, 0.5))
    assert abs(joint.estimate - 0.125) < 1e-15, f"Π s^V averaged → {joint.estimate}"
    assert joint.s == (0.5, 0.5), f"s recorded as {joint.s}"
    try:
        estimate_gf(np.array([]), 0.5)
        raise AssertionError("empty samples must raise")
    except VerifyError:
        pass
    try:
        estimate_gf(np.array([[1, 2]]), (0.5,))
        raise AssertionError("a weight per column is required")
    except UsageError:
        pass
    print("  ✓ test_estimate_gf PASSED")


def test_chi_square_pmf():
    perfect = chi_square_pmf([500, 300, 200], [0.5, 0.3, 0.2])
    assert perfect.statistic < 1e-12 and perfect.p > 0.999, f"perfect fit → {perfect}"
    assert perfect.dof == 2, f"dof {perfect.dof}"
    skewed = chi_square_pmf([800, 100, 100], [0.5, 0.3, 0.2])
    assert skewed.p < 1e-6, f"a gross misfit must be rejected, p={skewed.p}"
    # the last two bins are pooled (expected 3 < 5), and values past the pmf join the tail bin
    pooled = chi_square_pmf([60, 37, 3, 0, 2], [0.6, 0.37, 0.03])
    assert pooled.bins == 2, f"bins after pooling: {pooled.bins}"
    try:
        chi_square_pmf([10], [1.0])
        raise AssertionError("no degrees of freedom must raise")
    except VerifyError:
        pass
    print("  ✓ test_chi_square_pmf PASSED")


def test_chi_square_two_sample():
    same = chi_square_two_sample([100, 50, 25], [100, 50, 25])
    assert same.statistic < 1e-12 and same.p > 0.999, f"identical samples → {same}"
    apart = chi_square_two_sample([200, 10, 5], [5, 10, 200])
    assert apart.p < 1e-6, f"disjoint samples → p={apart.p}"
    print("  ✓ test_chi_square_two_sample PASSED")


def test_restricted_hull_matches_conditioned():
    rows = run_trials("hull", {"r": 1}, 3000, seed=21)
    perimeters = np.array([row["P_r"] for row in rows])
    volumes = np.array([row["V"] for row in rows])
    q = int(np.argmax(np.bincount(perimeters)))
    restricted = volumes[perimeters == q]
    assert len(restricted) >= MIN_RESTRICTED, f"only {len(restricted)} hulls with P_1 = {q}"
    conditioned = run_trials("hull_conditioned", {"r": 1, "q": q}, len(restricted), seed=22)
    test = chi_square_two_sample(np.bincount(restricted), np.bincount([row["V"] for row in conditioned]))
    assert test.p > 1e-4, f"restricted vs conditioned: χ² = {test.statistic:.2f}, p = {test.p:.2e}"
    print("  ✓ test_restricted_hull_matches_conditioned PASSED")


def test_brute_force_slices():
    for r, q, arcs, values in ((1, 2, [1, 1], (0.8, 0.9)), (1, 3, [2, 1], (0.7, 0.95)), (2, 2, [1, 1], (0.8, 0.9))):
        brute = brute_force_slice_gf(r, q, arcs, values)
        exact = slice_gf(r, q, arcs, values)
        assert abs(brute.value - exact) <= max(1e-8, brute.bound), \
            f"r={r}, q={q}, arcs={arcs}: brute {brute.value} vs law {exact} (bound {brute.bound})"
    try:
        brute_force_slice_gf(3, 2, [1, 1], (0.8, 0.9))
        raise AssertionError("r = 3 is outside the brute-force range")
    except UsageError:
        pass
    print("  ✓ test_brute_force_slices PASSED")


def test_verdict_schema():
    v = verdict("x.y", 0.5, True, p=0.2, seed=3)
    assert set(v) == {"test", "statistic", "p", "pass", "seed"}, f"keys {sorted(v)}"
    assert verdict("x.y", 1, False)["p"] is None, "p defaults to null"
    assert sorted(CRITERIA) == list(range(1, 14)), "thirteen criteria"
    print("  ✓ test_verdict_schema PASSED")


def test_run_acceptance_subset():
    verdicts = run_acceptance(trials=100, seed=7, only=[2, 4, 12])
    names = [v["test"] for v in verdicts]
    assert names[0].startswith("2.") and names[-1].startswith("12."), f"order {names}"
    failing = [v for v in verdicts if not v["pass"]]
    assert not failing, f"failing verdicts: {failing}"
    assert all(math.isfinite(v["statistic"]) for v in verdicts), "statistics must be finite"
    try:
        run_acceptance(only=[14])
        raise AssertionError("unknown criteria must be rejected")
    except UsageError:
        pass
    print("  ✓ test_run_acceptance_subset PASSED")


if __name__ == "__main__":
    print("=" * 60)
    print("  verify.py — Unit Tests")
    print("=" * 60 + "\n")

    tests = [
        test_estimate_gf,
        test_chi_square_pmf,
        test_chi_square_two_sample,
        test_restricted_hull_matches_conditioned,
        test_brute_force_slices,
        test_verdict_schema,
        test_run_acceptance_subset,
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
