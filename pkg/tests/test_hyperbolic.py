import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from margulis.cf_engine import curve_coefficient
from margulis.hyperbolic import (DistortionReport, Point4, SamplerConfig, b_over_a,
                                 certify_bilipschitz, certify_composite, certify_quasi_isometry,
                                 cosh_dist, dist, dist_arrays, horosphere_image_error,
                                 in_margulis_region, map_f, map_f_arrays, map_f_inverse_arrays,
                                 map_h, profile_a, profile_s, qi_bounds, screw_apply)
from margulis.region import decompose, envelope_value

coord = st.floats(-1e3, 1e3)
height = st.floats(1e-3, 1e3)
points = st.builds(Point4, coord, coord, coord, height)


def mp_dist(P, Q):
    """Distance through the arccosh form in 60-digit arithmetic."""
    with mpmath.workdps(60):
        sep = sum((mpmath.mpf(float(a)) - mpmath.mpf(float(b))) ** 2
                  for a, b in zip(P.as_array(), Q.as_array()))
        return mpmath.acosh(1 + sep / (2 * mpmath.mpf(P.u) * mpmath.mpf(Q.u)))


def random_point(rng, bound=1e3):
    x, y, z = rng.uniform(-bound, bound, size=3)
    return Point4(x, y, z, float(np.exp(rng.uniform(np.log(1e-3), np.log(1e3)))))


# -- points and distance ----------------------------------------------------------


def test_point_requires_positive_height():
    with pytest.raises(ValueError):
        Point4(0, 0, 0, 0.0)
    with pytest.raises(ValueError):
        Point4(0, 0, 0, math.inf)


def test_vertical_distance():
    assert dist(Point4(0, 0, 0, 1), Point4(0, 0, 0, math.e)) == pytest.approx(1, rel=1e-15)


def test_horizontal_unit_distance():
    assert dist(Point4(0, 0, 0, 1), Point4(1, 0, 0, 1)) == pytest.approx(0.9624236501,
                                                                         abs=1e-10)


@given(points)
def test_distance_to_self(P):
    assert dist(P, P) == 0


@given(points, points)
def test_distance_symmetric(P, Q):
    assert dist(P, Q) == pytest.approx(dist(Q, P), rel=1e-12, abs=0)
    # below ~1e-300 relative separation the distance underflows to zero
    if math.dist(P.as_array(), Q.as_array()) > 1e-300 * max(P.u, Q.u):
        assert dist(P, Q) > 0


def test_triangle_inequality():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        P, Q, R = (random_point(rng) for _ in range(3))
        assert dist(P, R) <= dist(P, Q) + dist(Q, R) + 1e-12 * dist(P, R)


def test_cosh_and_sinh_forms_agree():
    rng = np.random.default_rng(2)
    for _ in range(1000):
        P, Q = random_point(rng), random_point(rng)
        d = dist(P, Q)
        assert math.cosh(d) == pytest.approx(cosh_dist(P, Q), rel=1e-12)


def test_distance_matches_high_precision():
    rng = np.random.default_rng(3)
    for _ in range(200):
        P, Q = random_point(rng), random_point(rng)
        assert dist(P, Q) == pytest.approx(float(mp_dist(P, Q)), rel=1e-12)


def test_small_separation_keeps_precision():
    P, Q = Point4(0, 0, 0, 1), Point4(1e-9, 0, 0, 1)
    assert dist(P, Q) == pytest.approx(float(mp_dist(P, Q)), rel=1e-12)


def test_array_distance_matches_scalar():
    rng = np.random.default_rng(4)
    Ps = [random_point(rng) for _ in range(50)]
    Qs = [random_point(rng) for _ in range(50)]
    arr = dist_arrays(np.array([p.as_array() for p in Ps]), np.array([q.as_array() for q in Qs]))
    assert np.allclose(arr, [dist(p, q) for p, q in zip(Ps, Qs)], rtol=1e-14, atol=0)


# -- screw parabolic ---------------------------------------------------------------


def test_screw_zero_is_identity(golden_params):
    P = Point4(1, 2, 3, 4)
    assert screw_apply(golden_params, 0, P) == P


def test_screw_preserves_height_and_radius(golden_params):
    rng = np.random.default_rng(5)
    for _ in range(100):
        P = random_point(rng)
        k = int(rng.integers(-10**6, 10**6))
        Q = screw_apply(golden_params, k, P)
        assert Q.u == P.u
        assert Q.r == pytest.approx(P.r, rel=1e-12)
        assert Q.z == pytest.approx(P.z + k * math.sqrt(2), rel=1e-15)


def test_screw_composes(golden_params):
    P = Point4(3.0, -1.0, 0.5, 2.0)
    twice = screw_apply(golden_params, 7, screw_apply(golden_params, 5, P))
    once = screw_apply(golden_params, 12, P)
    assert np.allclose(twice.as_array(), once.as_array(), rtol=1e-12, atol=1e-12)


def test_screw_is_isometry(golden_params):
    rng = np.random.default_rng(6)
    for _ in range(200):
        P, Q = random_point(rng), random_point(rng)
        k = int(rng.integers(1, 10**6))
        gP, gQ = screw_apply(golden_params, k, P), screw_apply(golden_params, k, Q)
        assert dist(gP, gQ) == pytest.approx(dist(P, Q), rel=1e-10)


def test_displacement_identity(golden_params, mixed_params):
    rng = np.random.default_rng(7)
    for params in (golden_params, mixed_params):
        for _ in range(100):
            P = random_point(rng)
            k = int(rng.integers(1, 10**4))
            expected = 1 + (curve_coefficient(params.angle, k) * P.r ** 2 + k * k) / P.u ** 2
            assert cosh_dist(P, screw_apply(params, k, P)) == pytest.approx(expected, rel=1e-10)


# -- Margulis region membership ------------------------------------------------------


def test_membership_above_and_below(golden_params):
    for r in [1.0, 10.0, 1234.5, 1e5]:
        b, _ = envelope_value(golden_params, r)
        assert in_margulis_region(golden_params, Point4(r, 0, 0, b + 1))
        assert not in_margulis_region(golden_params, Point4(0, r, 0, b * (1 - 1e-6)))


def test_membership_flips_at_boundary(golden_params, mixed_params):
    rng = np.random.default_rng(8)
    for params in (golden_params, mixed_params):
        for r in np.exp(rng.uniform(0, np.log(1e5), size=50)):
            b, _ = envelope_value(params, r)
            lo, hi = 0.5 * b, 2 * b
            assert not in_margulis_region(params, Point4(r, 0, 0, lo))
            assert in_margulis_region(params, Point4(r, 0, 0, hi))
            while hi - lo > 1e-11 * b:
                mid = 0.5 * (lo + hi)
                if in_margulis_region(params, Point4(r, 0, 0, mid)):
                    hi = mid
                else:
                    lo = mid
            assert abs(hi - b) <= 1e-9 * b


def test_incomplete_k_max_rejected(golden_params):
    with pytest.raises(ValueError):
        in_margulis_region(golden_params, Point4(0, 0, 0, 1e3), k_max=2)


# -- profiles and the map h ---------------------------------------------------------


def test_profile_at_zero():
    assert profile_a(0.0) == 1.0 and profile_s(0.0) == 0.0


@given(st.floats(0, 1e6))
def test_profile_identities(r):
    a, s = float(profile_a(r)), float(profile_s(r))
    assert a * a - s * s == pytest.approx(1.0, abs=1e-12 * a * a)
    assert a ** 4 - a ** 2 - r * r == pytest.approx(0.0, abs=1e-12 * max(1.0, a ** 4))


def test_profile_quartic_random():
    rng = np.random.default_rng(9)
    r = rng.uniform(0, 100, size=100)
    a = profile_a(r)
    assert np.all(np.abs(a ** 4 - a ** 2 - r ** 2) <= 1e-12 * np.maximum(1, a ** 4))


def test_profile_a_increasing_and_asymptotic():
    r = np.geomspace(1e-3, 1e8, 1000)
    assert np.all(np.diff(profile_a(r)) > 0)
    assert abs(float(profile_a(1e8)) / 1e4 - 1) < 1e-7


def test_profile_s_small_r_against_mpmath():
    with mpmath.workdps(50):
        expected = mpmath.sqrt((mpmath.sqrt(4 * mpmath.mpf("1e-9") ** 2 + 1) - 1) / 2)
    assert float(profile_s(1e-9)) == pytest.approx(float(expected), rel=1e-14)


def test_h_on_axis():
    assert map_h(Point4(0, 0, 0, 3.0)) == Point4(0, 0, 0, 9.0)


def test_h_example():
    lam = math.sqrt(26)
    image = map_h(Point4(3, 4, 0, 1))
    assert np.allclose(image.as_array(), [3 * lam, 4 * lam, 0, lam], rtol=1e-15)


def test_h_on_slice_is_squaring():
    rng = np.random.default_rng(10)
    for _ in range(100):
        x, y, u = rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(0.1, 10)
        n = math.sqrt(x * x + y * y + u * u)
        image = map_h(Point4(x, y, 0.0, u))
        assert np.allclose(image.as_array(), [n * x, n * y, 0, n * u], rtol=1e-14)


def test_h_sends_horosphere_to_profile():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        r, psi, z = rng.uniform(0, 1e3), rng.uniform(0, 2 * np.pi), rng.uniform(-1e3, 1e3)
        image = map_h(Point4(r * math.cos(psi), r * math.sin(psi), z, 1.0))
        assert image.u == pytest.approx(float(profile_a(image.r)), rel=1e-12)


# -- the map f ------------------------------------------------------------------


def test_f_at_axis(golden_params):
    image = map_f(golden_params, Point4(0, 0, 5, 2.0))
    assert image.u == pytest.approx(2.0 / golden_params.sqrt_E, rel=1e-15)


def test_f_sends_profile_to_boundary(golden_params):
    for r in [0.5, 3.0, 200.0, 1e5]:
        a = float(profile_a(r))
        image = map_f(golden_params, Point4(0.6 * r, 0.8 * r, 1.0, a))
        b, _ = envelope_value(golden_params, image.r)
        assert image.u == pytest.approx(b, rel=1e-14)
        assert (image.x, image.y, image.z) == (0.6 * r, 0.8 * r, 1.0)


def test_f_displacement_bounded_by_C(golden_params):
    rng = np.random.default_rng(12)
    config = SamplerConfig(sample_count=1000, seed=12)
    P = np.array([random_point(rng).as_array() for _ in range(1000)])
    _, _, C = qi_bounds(golden_params, np.hypot(P[:, 0], P[:, 1]), config)
    fP = map_f_arrays(golden_params, P)
    disp = dist_arrays(P, fP)
    expected = np.abs(np.log(b_over_a(golden_params, np.hypot(P[:, 0], P[:, 1]))))
    assert np.allclose(disp, expected, rtol=1e-10)
    assert disp.max() <= C


def test_f_inverse(golden_params):
    rng = np.random.default_rng(13)
    P = np.array([random_point(rng).as_array() for _ in range(100)])
    back = map_f_inverse_arrays(golden_params, map_f_arrays(golden_params, P))
    assert np.allclose(back, P, rtol=1e-14, atol=0)


def test_f_same_ray_defect(golden_params):
    P, Q = Point4(3, 4, 0, 0.1), Point4(3, 4, 0, 70.0)
    fP, fQ = map_f(golden_params, P), map_f(golden_params, Q)
    assert dist(fP, fQ) == pytest.approx(dist(P, Q), rel=1e-12)


# -- certifiers ----------------------------------------------------------------


def test_bilipschitz_default_seed():
    report = certify_bilipschitz(SamplerConfig(sample_count=10_000, seed=42))
    assert report.passed
    assert 0.25 <= report.min_ratio <= report.max_ratio <= 4
    assert report.checks["axis_max_error"] <= 1e-12


def test_bilipschitz_slice():
    report = certify_bilipschitz(SamplerConfig(sample_count=5000, seed=3, slice_z0=True))
    assert report.passed
    assert 0.5 <= report.min_ratio <= report.max_ratio <= 2


def test_bilipschitz_reproducible():
    config = SamplerConfig(sample_count=500, seed=99)
    assert certify_bilipschitz(config) == certify_bilipschitz(config)


def test_quasi_isometry_golden(golden_params):
    report = certify_quasi_isometry(golden_params, SamplerConfig(sample_count=10_000, seed=7))
    assert report.passed
    assert report.max_additive_defect <= 2 * report.constant_C
    assert report.checks["max_displacement"] <= report.constant_C
    assert report.checks["surjectivity_max_error"] <= 1e-12
    A, B = report.checks["A"], report.checks["B"]
    assert report.constant_C == max(abs(math.log(A)), abs(math.log(B)))


def test_composite_golden(golden_params):
    config = SamplerConfig(sample_count=2000, seed=5)
    d = decompose(golden_params, config.r_max)
    report = certify_composite(golden_params, config, d)
    assert report.passed
    assert report.checks["horosphere_max_error"] <= 1e-9


def test_horosphere_image_matches_envelope(mixed_params):
    assert horosphere_image_error(mixed_params, SamplerConfig()) <= 1e-9


def test_report_round_trip():
    report = certify_bilipschitz(SamplerConfig(sample_count=100, seed=1))
    assert DistortionReport.from_dict(report.to_dict()) == report


@pytest.mark.parametrize("lo,hi,defect", [(0.0, 1.0, 0.0), (2.0, 1.0, 0.0), (1.0, 2.0, -1.0)])
def test_report_invariants(lo, hi, defect):
    with pytest.raises(ValueError):
        DistortionReport("h", 1, 0, lo, hi, defect, 0.0, True)


def test_sampler_needs_samples():
    with pytest.raises(ValueError):
        SamplerConfig(sample_count=0)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31))
def test_pairs_respect_minimum_separation(seed):
    from margulis.hyperbolic import sample_pairs
    config = SamplerConfig(sample_count=200, seed=seed)
    P, Q = sample_pairs(config)
    assert len(P) == 200
    assert np.all(dist_arrays(P, Q) >= 1e-6)
    assert np.all((P[:, 3] >= 1e-3) & (P[:, 3] <= 1e3))
