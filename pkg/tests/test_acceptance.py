"""Acceptance gate: one test per criterion, each at its stated tolerance and time limit.

A pass/fail line per criterion is printed in the terminal summary.
"""

import math
import time
from contextlib import contextmanager

import mpmath
import numpy as np
import pytest

from margulis.cf_engine import (angle_norm, closest_returns, curve_coefficient, denominators,
                                parse_angle, verify_norm_recursion)
from margulis.hyperbolic import (Point4, SamplerConfig, certify_bilipschitz, certify_composite,
                                 certify_quasi_isometry, cosh_dist, screw_apply)
from margulis.region import (RegionParams, comparability_report, decompose, envelope_value,
                             envelope_values, successor_intersection)

from conftest import ACCEPTANCE_RESULTS, GOLDEN, random_coefficients

RANDOM_SEEDS = range(10)


def bounded_type_angles():
    angles = [("golden", parse_angle(GOLDEN))]
    for seed in RANDOM_SEEDS:
        angles.append((f"random{seed}", parse_angle(random_coefficients(seed), depth=40)))
    return angles


@contextmanager
def criterion(name, limit):
    start = time.perf_counter()
    status = "FAIL"
    detail = ""
    notes = []
    try:
        yield notes
        elapsed = time.perf_counter() - start
        detail = "; ".join([f"{elapsed:.2f}s / {limit:g}s"] + notes)
        assert elapsed < limit, f"runtime {elapsed:.2f}s exceeds {limit}s"
        status = "PASS"
    except BaseException as exc:
        detail = detail or type(exc).__name__
        raise
    finally:
        ACCEPTANCE_RESULTS[name] = f"{status} ({detail})"


@pytest.fixture(scope="module")
def angles():
    return bounded_type_angles()


def test_01_closest_returns(angles):
    with criterion("1. closest returns equal convergent denominators up to 1e4", 5):
        for _, angle in angles:
            expected = sorted({q for q in denominators(angle) if q <= 10**4})
            assert closest_returns(angle, 10**4) == expected


def test_02_norm_bounds_and_recursion(angles):
    with criterion("2. norm bounds and recursion at depth 25", 1):
        for _, angle in angles:
            report = verify_norm_recursion(angle, 25, rel_tol=1e-12)
            assert report.passed
            assert report.max_relative_residual < 1e-12
            for n in range(1, 26):
                norm = angle_norm(angle, angle.q(n))
                assert mpmath.pi / angle.q(n + 1) < norm < 2 * mpmath.pi / angle.q(n + 1)


def test_03_envelope_oracle(angles):
    with criterion("3. decomposition equals brute-force envelope on 1e3 radii", 30):
        rng = np.random.default_rng(3)
        for _, angle in angles:
            params = RegionParams(angle, 0.1)
            d = decompose(params, 1e6)
            radii = rng.uniform(0, 1e6, size=1000)
            b, ks = envelope_values(params, radii)
            for r, v in zip(radii, b):
                assert abs(d.value(params, r) - v) <= 1e-12 * v
            assert set(ks.tolist()) <= set(denominators(angle))
            assert set(d.indices) <= set(denominators(angle))


def test_04_epsilon_invariance(angles):
    with criterion("4. pieces independent of epsilon", 60):
        for _, angle in angles:
            runs = [decompose(RegionParams(angle, eps), 1e6) for eps in (0.05, 0.1, 0.5)]
            for other in runs[1:]:
                assert other.indices == runs[0].indices
                assert np.allclose(other.breakpoints, runs[0].breakpoints, rtol=1e-9, atol=0)


def test_05_comparability():
    with criterion("5. b(r)/sqrt(r) bounded above and below on [1e3, 1e8]", 10) as notes:
        params = RegionParams(parse_angle(GOLDEN), 0.1)
        report = comparability_report(params, 1e3, 1e8, 10_000)
        assert 0 < report.inf_ratio <= report.sup_ratio < math.inf
        assert report.sup_ratio / report.inf_ratio < 1e3
        notes.append(f"golden ratio window [{report.inf_ratio:.6g}, {report.sup_ratio:.6g}]")


def test_06_breakpoint_growth(angles):
    with criterion("6. r_n / q_n^2 within a bounded window", 1):
        for _, angle in angles:
            params = RegionParams(angle, 0.1)
            ratios = [successor_intersection(params, n) / angle.q(n) ** 2 for n in range(1, 21)]
            assert min(ratios) > 0
            assert max(ratios) / min(ratios) < 1e3


def test_07_bilipschitz():
    with criterion("7. h bilipschitz on samples, slice and axis", 10):
        full = certify_bilipschitz(SamplerConfig(sample_count=10_000, seed=42))
        assert 0.25 <= full.min_ratio and full.max_ratio <= 4
        assert full.checks["axis_max_error"] <= 1e-12
        sliced = certify_bilipschitz(SamplerConfig(sample_count=10_000, seed=42, slice_z0=True))
        assert 0.5 <= sliced.min_ratio and sliced.max_ratio <= 2
        assert full.passed and sliced.passed


def test_08_quasi_isometry():
    with criterion("8. f additive defect within 2C, displacement within C", 30):
        params = RegionParams(parse_angle(GOLDEN), 0.1)
        report = certify_quasi_isometry(params, SamplerConfig(sample_count=10_000, seed=7))
        A, B = report.checks["A"], report.checks["B"]
        assert report.constant_C == max(abs(math.log(A)), abs(math.log(B)))
        assert report.max_additive_defect <= 2 * report.constant_C
        assert report.checks["max_displacement"] <= report.constant_C
        assert report.passed


def test_09_horoball_composite():
    with criterion("9. f o h carries the horosphere onto u = b(r)", 30):
        params = RegionParams(parse_angle(GOLDEN), 0.1)
        config = SamplerConfig(sample_count=1000, seed=42, horosphere_points=1000)
        report = certify_composite(params, config, decompose(params, config.r_max))
        assert report.checks["horosphere_max_error"] <= 1e-9
        assert report.passed


def test_10_rational_tail():
    with criterion("10. rational rotation 1/3 settles at 3/sqrt(E)", 1):
        params = RegionParams(parse_angle("rat:1/3"), 0.1)
        target = 3 / math.sqrt(math.cosh(0.1) - 1)
        for r in (1e3, 1e6):
            value, _ = envelope_value(params, r)
            assert abs(value - target) <= 1e-12 * target


def test_11_displacement_identity():
    with criterion("11. cosh of displacement matches the closed form", 1):
        params = RegionParams(parse_angle(GOLDEN), 0.1)
        rng = np.random.default_rng(11)
        for _ in range(100):
            x, y, z = rng.uniform(-1e3, 1e3, size=3)
            P = Point4(x, y, z, float(np.exp(rng.uniform(np.log(1e-3), np.log(1e3)))))
            k = int(rng.integers(1, 10**6))
            expected = 1 + (curve_coefficient(params.angle, k) * P.r ** 2 + k * k) / P.u ** 2
            got = cosh_dist(P, screw_apply(params, k, P))
            assert abs(got - expected) <= 1e-10 * expected
