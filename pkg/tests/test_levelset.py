import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ratahlfors.errors import NotGood, OnCurve
from ratahlfors.levelset import (
    component_count_oracle,
    default_window,
    fourier_resample,
    marked_point,
    trace_all,
    trace_boundary,
    winding_number,
    write_curve_csv,
)
from ratahlfors.ratmap import RationalMap, is_n_good, three_pole_example


def test_single_pole_traces_circle():
    R = RationalMap([0.7], [0.3 - 0.2j])
    c = trace_boundary(R, 0, 128)
    assert np.abs(np.abs(c.samples - (0.3 - 0.2j)) - 0.7).max() < 1e-14
    assert abs(c.marked_point - (1.0 - 0.2j)) < 1e-14
    assert winding_number(c.samples, 0.3 - 0.2j) == 1


def test_symmetric_pair_marked_points():
    # 2z/(z^2-4) = 1 has the real roots 1 +- sqrt 5
    R = RationalMap([1, 1], [2, -2])
    c0, c1 = trace_all(R, 256)
    assert abs(c0.marked_point - (1 + np.sqrt(5))) < 1e-13
    assert abs(c1.marked_point - (1 - np.sqrt(5))) < 1e-13
    # R(conj z) = conj R(z), so sample -m is the conjugate of sample m
    s = c0.samples
    assert np.abs(np.roll(s[::-1], 1) - s.conj()).max() < 1e-13


def test_r0_curves_are_level_sets_with_phase():
    R = three_pole_example()
    curves = trace_all(R, 256)
    for c in curves:
        w = R(c.samples)
        assert np.abs(np.abs(w) - 1).max() < 1e-12
        assert np.abs(w - np.exp(1j * c.angles)).max() < 1e-11
        assert abs(R(c.marked_point) - 1) < 1e-12
    W = np.array([[winding_number(c.samples, b) for b in R.poles] for c in curves])
    assert np.array_equal(W, np.eye(3, dtype=int))


def test_trace_requires_good_map():
    with pytest.raises(NotGood):
        trace_all(RationalMap([10, 10], [2, -2]))


def test_resampling_is_spectral():
    t = 2 * np.pi * np.arange(64) / 64
    z = np.exp(1j * t) + 0.2 * np.exp(-3j * t)
    up = fourier_resample(z, 512)
    tt = 2 * np.pi * np.arange(512) / 512
    assert np.abs(up - (np.exp(1j * tt) + 0.2 * np.exp(-3j * tt))).max() < 1e-14
    assert np.abs(fourier_resample(up, 64) - z).max() < 1e-14
    assert np.abs(up[::8] - z).max() < 1e-14


def test_winding_number_square():
    sq = np.array([0, 1, 1 + 1j, 1j])
    assert winding_number(sq, 0.5 + 0.5j) == 1
    assert winding_number(sq[::-1], 0.5 + 0.5j) == -1
    assert winding_number(sq, 3) == 0
    assert np.array_equal(winding_number(sq, np.array([0.5 + 0.5j, 2j])), [1, 0])
    with pytest.raises(OnCurve):
        winding_number(sq, 0.5)


def test_marked_point_refinement():
    R = three_pole_example()
    c = trace_boundary(R, 1)
    assert abs(marked_point(c, R) - c.marked_point) < 1e-14


def test_oracle_counts():
    assert component_count_oracle(three_pole_example()) == 3
    assert component_count_oracle(RationalMap([10, 10], [2, -2])) == 1
    assert component_count_oracle(RationalMap([0.7], [0])) == 1
    with pytest.raises(ValueError):
        component_count_oracle(three_pole_example(), grid_n=100)


def test_window_contains_sublevel_complement():
    R = three_pole_example()
    x0, x1, y0, y1 = default_window(R)
    edge = np.r_[x0 + 1j * np.linspace(y0, y1, 50), x1 + 1j * np.linspace(y0, y1, 50)]
    assert np.all(np.abs(R(edge)) < 1)


def test_curve_csv():
    c = trace_boundary(RationalMap([0.7], [0]), 0, 16)
    buf = io.StringIO()
    write_curve_csv(c, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "theta,re,im" and len(lines) == 17
    assert float(lines[1].split(",")[1]) == c.samples[0].real


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_good_maps_trace_with_identity_winding(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 4))
    b = 3 * (rng.normal(size=n) + 1j * rng.normal(size=n))
    a = rng.uniform(0.05, 0.5, size=n) * np.exp(1j * rng.uniform(0, 2 * np.pi, size=n))
    R = RationalMap(a, b)
    if is_n_good(R, 1e-3).verdict.value != "Good":
        return
    curves = trace_all(R, 128)
    W = np.array([[winding_number(c.samples, p) for p in R.poles] for c in curves])
    assert np.array_equal(W, np.eye(n, dtype=int))
