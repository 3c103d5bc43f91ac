from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hcm.coupling import constant, fourier_table, huygens_diffusive, sine_diffusive
from hcm.reduced import (
    EXPANDING,
    PERIODIC,
    UNRESOLVED,
    AttractorReport,
    bifurcation_scan,
    classify,
    find_orbit,
    lyapunov_estimate,
    make_reduced,
    mean_field_integral,
    regime_interval_check,
    shadow_check,
    tent_family,
    write_bifurcation_csv,
)
from hcm.torus import circle_dist, sample_uniform, wrap

TWO_PI = 2 * math.pi
BOUNDARIES = (1 / TWO_PI, 3 / TWO_PI, 4 / TWO_PI)


def test_mean_field_presets():
    y = np.linspace(0, 1, 33)
    for h in (sine_diffusive(), huygens_diffusive()):
        assert np.allclose(mean_field_integral(h)(y), -np.sin(TWO_PI * y), atol=1e-15)
    assert np.allclose(mean_field_integral(constant(0.7))(y), 0.7)


def test_mean_field_matches_quadrature():
    h = fourier_table([(0, 1, 0.3), (0, -2, -0.4), (1, 1, 0.9), (-1, 0, 0.2), (2, -1, 0.5)])
    hb = mean_field_integral(h)
    x = (np.arange(4096) + 0.5) / 4096
    for y in (0.1, 0.37, 0.8):
        assert hb(y) == pytest.approx(np.mean(h.evaluate_table(y, x)), abs=1e-12)


def test_make_reduced_is_tent_family():
    y = sample_uniform(200, 1)
    g = make_reduced(2, 0.6, 0.5, sine_diffusive())
    assert np.array_equal(g(y), tent_family(0.3)(y))
    assert np.allclose(g(y), wrap(2 * y - 0.3 * np.sin(TWO_PI * y)), atol=1e-15)
    assert np.array_equal(make_reduced(2, 0.0, 1.0, sine_diffusive())(y), wrap(2 * y))
    for beta in (0.1, 0.3, 0.6):
        assert tent_family(beta).deriv(0.0) == pytest.approx(2 - TWO_PI * beta)
    with pytest.raises(ValueError):
        make_reduced(2, 0.6, 0.0, sine_diffusive())
    with pytest.raises(ValueError):
        make_reduced(2, 0.6, 1.5, sine_diffusive())


@settings(max_examples=1000)
@given(st.floats(0.0, 1.0, exclude_max=True), st.floats(-1, 1), st.sampled_from([2, 3]))
def test_derivative_matches_finite_difference(y, beta, sigma):
    h = fourier_table([(0, -1, -1.0), (0, 2, 0.25), (1, 1, 3.0)])
    g = make_reduced(sigma, beta, 1.0, h) if beta else make_reduced(sigma, 0.0, 1.0, h)
    e = 1e-6
    fd = (g.lift(y + e) - g.lift(y - e)) / (2 * e)
    assert g.deriv(y) == pytest.approx(fd, abs=1e-6)


def test_classify_table_examples():
    r = classify(tent_family(0.15))
    assert r.regime == EXPANDING and r.orbit == [] and r.min_abs_derivative > 1
    r = classify(tent_family(0.3))
    assert r.regime == PERIODIC and r.period == 1
    assert circle_dist(r.orbit[0], 0.0) < 1e-10
    assert r.multiplier == pytest.approx(2 - 0.6 * math.pi, abs=1e-9)
    r = classify(tent_family(0.6))
    assert r.regime == PERIODIC and r.period == 2
    a, b = r.orbit
    assert circle_dist(a, wrap(-b)) < 1e-9
    assert abs(r.multiplier) < 1


def test_period_two_orbit_values():
    # independent check: z* solves T(z) = -z, i.e. 3z = 0.6 sin(2 pi z)
    from scipy.optimize import brentq

    zs = brentq(lambda z: 3 * z - 0.6 * math.sin(TWO_PI * z), 0.05, 0.25)
    r = classify(tent_family(0.6))
    assert min(circle_dist(zs, p) for p in r.orbit) < 1e-9
    assert r.multiplier == pytest.approx((2 - 1.2 * math.pi * math.cos(TWO_PI * zs)) ** 2, rel=1e-8)


def test_boundary_is_unresolved():
    assert classify(tent_family(1 / TWO_PI)).regime == UNRESOLVED


def _label(rep: AttractorReport) -> str:
    if rep.regime == EXPANDING:
        return "Expanding"
    if rep.regime == PERIODIC:
        return {1: "FixedPoint", 2: "Period2"}.get(rep.period, f"P{rep.period}")
    return rep.regime


def test_classify_agrees_with_intervals():
    for beta in np.linspace(0, 4 / TWO_PI, 200):
        if min(abs(beta - b) for b in BOUNDARIES) < 1e-3:
            continue
        assert _label(classify(tent_family(beta))) == regime_interval_check(beta), beta


def test_periodic_reports_close():
    for beta in np.linspace(0.17, 0.63, 24):
        r = classify(tent_family(beta))
        assert r.regime == PERIODIC
        g = tent_family(beta)
        assert abs(r.multiplier) < 1
        for p in r.orbit:
            assert circle_dist(g.iterate(p, r.period), p) < 1e-9


@settings(max_examples=1000)
@given(st.floats(0.0, 1.0, exclude_max=True), st.sampled_from([0.25, 0.3, 0.4, 0.5, 0.55, 0.6]))
def test_attractor_symmetry(z0, beta):
    if z0 in (0.0, 0.5):
        return  # self-mirror seeds
    g = tent_family(beta)
    a = find_orbit(g, z0, burn_in=300)
    b = find_orbit(g, wrap(-z0), burn_in=300)
    # a seed on the repelling fixed point 0 reaches no attractor, nor does its mirror
    assert (a is None) == (b is None)
    if a is None:
        return
    for p, q in zip(a[0], b[0]):
        assert circle_dist(p, wrap(-q)) < 1e-8


def test_regime_interval_check():
    assert regime_interval_check(0.15) == "Expanding"
    assert regime_interval_check(0.3) == "FixedPoint"
    assert regime_interval_check(0.6) == "Period2"
    assert regime_interval_check(1 / TWO_PI) == "Unknown"
    assert regime_interval_check(1.0) == "Unknown"
    with pytest.raises(ValueError):
        regime_interval_check(-0.1)


def test_bifurcation_scan(tmp_path):
    table = bifurcation_scan(2, sine_diffusive(), [0.0, 0.3, 0.6], transient=1000, keep=1000, seed=3)
    s0, s3, s6 = (t[1] for t in table)
    # beta = 0: the kept doubling orbit visits every tenth of the circle
    assert len(np.unique(np.floor(s0 * 10))) == 10
    assert np.max(circle_dist(s3, 0.0)) < 1e-6
    clusters = np.unique(np.round(s6, 6))
    assert len(clusters) == 2
    again = bifurcation_scan(2, sine_diffusive(), [0.0, 0.3, 0.6], transient=1000, keep=1000, seed=3)
    assert all(np.array_equal(a[1], b[1]) for a, b in zip(table, again))
    write_bifurcation_csv(table, tmp_path / "b.csv")
    lines = (tmp_path / "b.csv").read_text().splitlines()
    assert lines[0] == "beta,sample_index,value" and len(lines) == 3001
    with pytest.raises(ValueError):
        bifurcation_scan(2, sine_diffusive(), [], 10, 10)


def test_lyapunov_estimates():
    assert lyapunov_estimate(tent_family(0.0), 500) == pytest.approx(math.log(2), abs=1e-15)
    assert lyapunov_estimate(tent_family(0.3), 2000, z0=0.05) < 0
    lam = lyapunov_estimate(tent_family(0.15), 5000, seed=4)
    assert lam >= math.log(2 - TWO_PI * 0.15)
    tr = sample_uniform(1000, 2)
    assert lyapunov_estimate(tent_family(0.15), 1000, trace=tr) == pytest.approx(
        np.mean(np.log(np.abs(2 - 0.3 * math.pi * np.cos(TWO_PI * tr))))
    )
    with pytest.raises(ValueError):
        lyapunov_estimate(tent_family(0.1), 0)


def test_shadow_check():
    rep = classify(tent_family(0.6))
    orbit = np.array(rep.orbit * 50)
    res = shadow_check(orbit, rep, 0.05)
    assert res.holds and res.sup_dist == 0.0 and res.first_violation_t is None
    shifted = shadow_check(np.roll(orbit, 1), rep, 0.05)
    assert shifted.holds and shifted.sup_dist < 1e-12
    off = shadow_check(wrap(orbit + 0.1), rep, 0.05)
    assert not off.holds and off.first_violation_t == 0
    late = orbit.copy()
    late[:10] = wrap(late[:10] + 0.3)
    assert shadow_check(late, rep, 0.05, t_start=10).holds
    with pytest.raises(ValueError):
        shadow_check(orbit, classify(tent_family(0.1)), 0.05)


def test_shadow_check_uses_mirror_orbit():
    # asymmetric table: hbar(y) = -sin(2 pi y) + 0.2 cos(2 pi y) has a fixed point off 0
    g = make_reduced(2, 0.3, 1.0, fourier_table([(0, -1, -1.0), (0, 1, 0.2)]))
    rep = classify(g)
    assert rep.regime == PERIODIC and rep.period == 1
    p = rep.orbit[0]
    assert shadow_check(np.full(20, wrap(-p)), rep, 1e-12).mirrored
