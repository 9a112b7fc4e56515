import io

import numpy as np
import pytest

from ratahlfors.capacity import ahlfors_problem, solve_ahlfors
from ratahlfors.errors import PathInvalid, PolePlacement
from ratahlfors.families import (
    default_pole_path,
    epsilon_threshold,
    path_report,
    positive_path,
    q_epsilon,
    sample_path,
    write_path_csv,
)
from ratahlfors.levelset import component_count_oracle
from ratahlfors.ratmap import RationalMap, critical_radius, derivative_at_infinity, is_n_good, three_pole_example


def test_q_epsilon_construction():
    R0 = three_pole_example()
    assert abs(R0(3)) < 1
    Q = q_epsilon(R0, [3], 1e-3)
    assert Q.n == 4
    assert abs(derivative_at_infinity(Q) - 1.201) < 1e-15
    z = np.array([0.5 + 2j, -1, 4 - 1j])
    for eps in (1e-6, 1e-5):
        diff = q_epsilon(R0, [3], eps)(z) - R0(z)
        assert np.abs(diff - eps / (z - 3)).max() < 1e-15


def test_q_epsilon_large_is_not_good():
    Q = q_epsilon(three_pole_example(), [3], 10)
    assert is_n_good(Q).verdict.value == "NotGood"
    assert component_count_oracle(Q) < 4


def test_q_epsilon_placement_errors():
    R0 = three_pole_example()
    with pytest.raises(PolePlacement):
        q_epsilon(R0, [0.05], 1e-3)  # inside the curve around 0
    with pytest.raises(PolePlacement):
        q_epsilon(R0, [6], 1e-3)
    with pytest.raises(PolePlacement):
        q_epsilon(R0, [3, 3], 1e-3)
    with pytest.raises(ValueError):
        q_epsilon(R0, [3], 0)


def test_q_epsilon_capacity_gap():
    Q = q_epsilon(three_pole_example(), [3], 1e-5)
    assert is_n_good(Q).good
    sol = solve_ahlfors(ahlfors_problem(Q))
    assert sol.gamma_lower > derivative_at_infinity(Q).real + 3e-4


def test_epsilon_threshold_examples():
    assert epsilon_threshold([0]) == pytest.approx(1e3)
    grid = np.linspace(0.01, 3, 300)
    eps = epsilon_threshold([2, -2], grid)
    assert critical_radius(RationalMap([eps, eps], [2, -2])) <= 0.5
    assert abs(eps - 1) <= grid[1] - grid[0]
    eps10 = epsilon_threshold([20, -20], 10 * grid)
    assert abs(eps10 - 10 * eps) < 1e-9
    with pytest.warns(UserWarning):
        epsilon_threshold([2, -2], [50, 60])


def _endpoints():
    a0 = np.array([0.4, 0.3, 0.5])
    b0 = np.array([0, 1 + 1j, 4])
    b0 = b0 - b0.mean()
    a1 = np.array([0.2, 0.2, 0.6])
    b1 = np.array([-2, 2j, 3 - 1j])
    b1 = b1 - b1.mean()
    return a0, b0, a1, b1


def test_path_endpoints_bit_exact_and_phases():
    a0, b0, a1, b1 = _endpoints()
    P = positive_path(a0, b0, a1, b1)
    s0, s1 = sample_path(P, 0.0), sample_path(P, 1.0)
    assert np.array_equal(s0.residues, a0) and np.array_equal(s0.poles, b0)
    assert np.array_equal(s1.residues, a1) and np.array_equal(s1.poles, b1)
    assert P.mu(0) == 1 and P.nu(1) == 1
    assert abs(np.abs(sample_path(P, 1 / 3).residues).max() - P.eps) < 1e-15
    assert abs(np.abs(sample_path(P, 2 / 3).residues).max() - P.eps) < 1e-15
    mid = sample_path(P, 0.5)
    blend = 0.5 * P.mu(1 / 3) * a0 + 0.5 * P.nu(2 / 3) * a1
    assert np.abs(mid.residues - blend).max() < 1e-15
    assert np.abs(mid.poles - P.q(0.5)).max() < 1e-15


def test_path_sweep_is_good():
    P = positive_path(*_endpoints())
    rows = path_report(P, 201)
    assert all(r["verdict"] == "Good" for r in rows)
    assert min(r["min_residue"] for r in rows) > 0
    assert max(r["pole_sum"] for r in rows) < 1e-12
    buf = io.StringIO()
    write_path_csv(rows, buf)
    assert buf.getvalue().splitlines()[0] == "t,min_residue,critical_radius,verdict"


def test_degenerate_path():
    a0, b0, _, _ = _endpoints()
    P = positive_path(a0, b0, a0, b0, pole_path=np.array([b0, b0]))
    assert all(r["verdict"] == "Good" for r in path_report(P, 31))


def test_path_errors():
    a0, b0, a1, b1 = _endpoints()
    with pytest.raises(PathInvalid):
        positive_path(-a0, b0, a1, b1)
    with pytest.raises(PathInvalid):
        positive_path(a0, b0 + 1, a1, b1)
    with pytest.raises(PathInvalid):
        positive_path(a0, b0, a1, b1, eps=1.0)
    bad = np.array([b0, [0, 0, 0], b1])
    with pytest.raises(PathInvalid):
        positive_path(a0, b0, a1, b1, pole_path=bad)
    with pytest.raises(PathInvalid):
        positive_path(a0, b0, a1, b1, pole_path=np.array([b0, b0]))


def test_default_detour_avoids_collision():
    b0 = np.array([-1, 1])
    b1 = np.array([1, -1])
    path = default_pole_path(b0, b1)
    d = np.abs(path[:, 0] - path[:, 1])
    assert d.min() > 0.1
    assert np.array_equal(path[0], b0) and np.array_equal(path[-1], b1)
