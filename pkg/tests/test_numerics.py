import math

import numpy as np
import pytest

import radialis as rx
from radialis.numerics import (GridSpacing, RadialGrid, Trajectory, count_nodes,
                               count_sign_changes, derivative_at, log_derivative,
                               numerov_propagate)


def test_linear_grid_nodes():
    g = RadialGrid(r_min=1.0, r_max=2.0, n_points=101)
    assert g.nodes[0] == 1.0
    assert g.nodes[-1] == 2.0
    assert g.step == pytest.approx(0.01, abs=1e-15)
    steps = np.diff(g.nodes)
    assert np.allclose(steps, g.step, rtol=1e-12, atol=0.0)


def test_grid_nodes_are_read_only():
    g = RadialGrid(r_min=1.0, r_max=2.0, n_points=32)
    with pytest.raises(ValueError):
        g.nodes[0] = 5.0


def test_logarithmic_grid_is_geometric():
    g = RadialGrid(r_min=0.01, r_max=100.0, n_points=33,
                   spacing=GridSpacing.LOGARITHMIC)
    ratios = g.nodes[1:] / g.nodes[:-1]
    assert np.allclose(ratios, ratios[0], rtol=1e-12, atol=0.0)
    with pytest.raises(rx.ConfigError):
        g.step


def test_grid_validation():
    with pytest.raises(rx.ConfigError):
        RadialGrid(r_min=0.0, r_max=1.0, n_points=32)
    with pytest.raises(rx.ConfigError):
        RadialGrid(r_min=2.0, r_max=1.0, n_points=32)
    with pytest.raises(rx.ConfigError):
        RadialGrid(r_min=1.0, r_max=2.0, n_points=8)
    with pytest.raises(rx.ConfigError):
        RadialGrid(r_min=1.0, r_max=2.0, n_points=32, spacing="linear")


def test_zero_coefficient_propagates_straight_lines():
    g = RadialGrid(r_min=0.5, r_max=1.5, n_points=101)
    t = numerov_propagate(np.zeros(101), g, 0.5, 0.5 + g.step)
    assert np.max(np.abs(t.u - g.nodes)) < 5e-15
    assert t.scale_log2 == 0
    assert not t.overflowed


def test_oscillator_accuracy():
    # u'' = -u from exact seeds: global error stays near 1e-11 at h = 5e-3.
    g = RadialGrid(r_min=0.1, r_max=10.1, n_points=2001)
    t = numerov_propagate(np.full(2001, -1.0), g, math.sin(0.1),
                          math.sin(0.1 + g.step))
    assert np.max(np.abs(t.u - np.sin(g.nodes))) < 5e-11


def test_growing_solution_accuracy():
    g = RadialGrid(r_min=0.1, r_max=10.1, n_points=2001)
    t = numerov_propagate(np.full(2001, 1.0), g, math.sinh(0.1),
                          math.sinh(0.1 + g.step))
    rel = np.max(np.abs(t.u - np.sinh(g.nodes))) / math.sinh(10.1)
    assert rel < 5e-11


def test_fourth_order_convergence():
    errs = []
    for n in (251, 501, 1001):
        g = RadialGrid(r_min=0.1, r_max=10.1, n_points=n)
        t = numerov_propagate(np.full(n, -1.0), g, math.sin(0.1),
                              math.sin(0.1 + g.step))
        errs.append(np.max(np.abs(t.u - np.sin(g.nodes))))
    assert errs[0] / errs[1] > 14.0
    assert errs[1] / errs[2] > 14.0


def test_callable_coefficient_and_inward_direction():
    g = RadialGrid(r_min=0.1, r_max=10.1, n_points=2001)
    h = g.step
    t = numerov_propagate(lambda r: -np.ones_like(r), g,
                          math.sin(10.1), math.sin(10.1 - h),
                          direction="inward")
    assert t.direction == "inward"
    # values are stored in ascending r regardless of propagation direction
    assert np.max(np.abs(t.u - np.sin(g.nodes))) < 5e-11


def test_invalid_direction():
    g = RadialGrid(r_min=0.1, r_max=1.1, n_points=32)
    with pytest.raises(rx.ConfigError):
        numerov_propagate(np.zeros(32), g, 0.0, 0.1, direction="sideways")


def test_nonfinite_coefficient_rejected():
    g = RadialGrid(r_min=0.1, r_max=1.1, n_points=32)
    f = np.zeros(32)
    f[7] = math.nan
    with pytest.raises(rx.NumericalError):
        numerov_propagate(f, g, 0.0, 0.1)


def test_numerov_requires_linear_grid():
    g = RadialGrid(r_min=0.1, r_max=10.0, n_points=32,
                   spacing=GridSpacing.LOGARITHMIC)
    with pytest.raises(rx.ConfigError):
        numerov_propagate(np.zeros(32), g, 0.0, 0.1)


def test_rescaling_keeps_values_finite_and_tracked():
    # u'' = 25 u over 200 length units grows ~ e^1000, far past any double.
    g = RadialGrid(r_min=0.1, r_max=200.1, n_points=8000)
    t = numerov_propagate(np.full(8000, 25.0), g, 0.0,
                          math.sinh(5.0 * g.step) / 5.0)
    assert not t.overflowed
    assert t.failure_index is None
    assert np.all(np.isfinite(t.u))
    assert np.max(np.abs(t.u)) < 1e200
    assert t.scale_log2 >= 600
    # the stored value times 2^scale_log2 recovers sinh(5 (r - r_min)) / 5
    true_log = 5.0 * 200.0 - math.log(10.0)
    got_log = math.log(abs(t.u[-1])) + t.scale_log2 * math.log(2.0)
    assert abs(got_log - true_log) / true_log < 1e-5


def test_derivative_at_matches_cosine():
    g = RadialGrid(r_min=0.1, r_max=10.1, n_points=2001)
    t = numerov_propagate(np.full(2001, -1.0), g, math.sin(0.1),
                          math.sin(0.1 + g.step))
    i = 700
    assert abs(derivative_at(t, i) - math.cos(g.nodes[i])) < 1e-9
    with pytest.raises(rx.ConfigError):
        derivative_at(t, 1)
    with pytest.raises(rx.ConfigError):
        derivative_at(t, 2000)


def test_log_derivative_of_exponential():
    g = RadialGrid(r_min=0.1, r_max=5.1, n_points=2001)
    t = numerov_propagate(np.full(2001, 4.0), g, math.exp(0.2),
                          math.exp(2.0 * (0.1 + g.step)))
    assert log_derivative(t, 2.5) == pytest.approx(2.0, abs=1e-8)


def test_log_derivative_raises_at_a_node():
    g = RadialGrid(r_min=0.1, r_max=1.1, n_points=32)
    u = np.ones(32)
    u[16] = 0.0
    t = Trajectory(grid=g, u=u, direction="outward")
    with pytest.raises(rx.NumericalError, match="node"):
        log_derivative(t, g.nodes[16])


def test_count_sign_changes_literal():
    assert count_sign_changes(np.array([1.0, -2.0, 3.0, 4.0, -1.0])) == 3
    assert count_sign_changes(np.array([1.0, 2.0, 3.0])) == 0
    assert count_sign_changes(np.array([0.0, 0.0])) == 0
    # a sampled zero between sign agreement contributes nothing
    assert count_sign_changes(np.array([1.0, 0.0, 2.0])) == 0
    # and exactly one crossing when the sign flips across it
    assert count_sign_changes(np.array([1.0, 0.0, -2.0])) == 1


def test_count_nodes_on_a_sine():
    span = 3.5 * math.pi
    g = RadialGrid(r_min=0.1, r_max=0.1 + span, n_points=2001)
    t = numerov_propagate(np.full(2001, -1.0), g, math.sin(0.0), math.sin(g.step))
    assert count_nodes(t, 0.1, 0.1 + span) == 3
    assert count_nodes(t, 0.1, 0.1 + 1.5 * math.pi) == 1
    with pytest.raises(rx.ConfigError):
        count_nodes(t, 2.0, 1.0)


def test_propagation_is_linear_in_the_seeds():
    g = RadialGrid(r_min=0.1, r_max=10.1, n_points=501)
    f = -1.0 / g.nodes
    t1 = numerov_propagate(f, g, 1.0, 1.1)
    t2 = numerov_propagate(f, g, 3.0, 3.3)
    assert np.allclose(3.0 * t1.u, t2.u, rtol=1e-12, atol=1e-12)
