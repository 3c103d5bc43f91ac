from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hcm.coupling import (
    coupling_eval,
    coupling_from_config,
    constant,
    fourier_table,
    huygens_diffusive,
    shift_diffusive,
    sine_diffusive,
)

TWO_PI = 2 * math.pi
unit = st.floats(0.0, 1.0, exclude_max=True, allow_nan=False)


def test_sine_examples():
    h = sine_diffusive()
    assert coupling_eval(h, 0.3, 0.3) == 0.0
    assert coupling_eval(h, 0.0, 0.25) == pytest.approx(1.0)


def test_huygens_table_matches_closed_form():
    h = huygens_diffusive()
    g = np.arange(100) / 100
    x, y = np.meshgrid(g, g, indexing="ij")
    direct = np.sin(TWO_PI * (y - x)) + np.sin(TWO_PI * y) - np.sin(TWO_PI * x)
    assert np.max(np.abs(h.evaluate_table(x, y) - direct)) < 1e-12
    assert np.max(np.abs(h.evaluate(x, y) - direct)) < 1e-12


def test_presets_are_diffusive():
    for h in (sine_diffusive(), huygens_diffusive(), shift_diffusive([(1, 1.0), (2, -0.3)])):
        assert h.is_diffusive()
    assert not constant(1.0).is_diffusive()


@given(unit, unit, st.lists(st.tuples(st.integers(1, 4), st.floats(-2, 2)), min_size=1, max_size=3))
def test_shift_table_matches_phi(x, y, table):
    h = shift_diffusive(table)
    want = sum(b * math.sin(TWO_PI * k * (y - x)) for k, b in table)
    assert h.evaluate_table(x, y) == pytest.approx(want, abs=1e-12)


@given(unit, unit)
def test_derivatives_by_finite_differences(x, y):
    h = huygens_diffusive()
    e = 1e-6
    assert h.d1(x, y) == pytest.approx((h.evaluate(x + e, y) - h.evaluate(x - e, y)) / (2 * e), abs=1e-6)
    assert h.d2(x, y) == pytest.approx((h.evaluate(x, y + e) - h.evaluate(x, y - e)) / (2 * e), abs=1e-6)


def test_omega_and_dphi0():
    s = np.linspace(0, 1, 17)
    shift = shift_diffusive([(1, 1.0), (3, 0.5)])
    assert shift.dphi0 == pytest.approx(TWO_PI * (1 + 3 * 0.5))
    assert np.allclose(shift.omega(s), shift.dphi0)
    hu = huygens_diffusive()
    assert hu.dphi0 == pytest.approx(TWO_PI)
    assert np.allclose(hu.omega(s), TWO_PI * (1 + np.cos(TWO_PI * s)))
    assert sine_diffusive().dphi0 is None


def test_support_and_config():
    assert sine_diffusive().neighbor_support == [-1]
    assert huygens_diffusive().neighbor_support == [-1, 1]
    assert coupling_from_config("huygens") == huygens_diffusive()
    assert coupling_from_config({"shift": [[1, 1.0]]}) == shift_diffusive([(1, 1.0)])
    assert coupling_from_config({"fourier": [[0, 0, 2.0]]}) == constant(2.0)
    for bad in ("nope", {"shift": [[0, 1.0]]}, {"a": 1, "b": 2}, 3):
        with pytest.raises((ValueError, TypeError)):
            coupling_from_config(bad)
    with pytest.raises(ValueError):
        fourier_table([(0, 0, math.inf)])
