import math

import numpy as np
import pytest

import radialis as rx
from radialis.point_source import (DEFAULT_PROBE_RADII, ResidualReport,
                                   audit_eigenstate, audit_samples,
                                   check_compatibility, point_source_strength,
                                   surface_flux)

FOUR_PI = 4.0 * math.pi


def test_default_probe_ladder():
    assert len(DEFAULT_PROBE_RADII) == 13
    assert DEFAULT_PROBE_RADII[0] == 0.1
    assert DEFAULT_PROBE_RADII[-1] == 0.1 * 2.0 ** -12
    ratios = np.diff(np.log2(DEFAULT_PROBE_RADII))
    assert np.allclose(ratios, -1.0, atol=1e-12)


def test_surface_flux_formula():
    assert surface_flux(1.0, 0.0, 0.3) == -FOUR_PI
    assert surface_flux(0.3, 1.0, 0.3) == 0.0
    assert surface_flux(0.0, 2.0, 0.5) == pytest.approx(FOUR_PI, abs=1e-15)


def test_constant_u_carries_full_strength():
    # u(0) = 1 means a hidden source of exactly -4 pi; the flux sequence is
    # constant, so the extrapolation must pass it through unchanged.
    rep = point_source_strength(lambda a: 1.0, lambda a: 0.0)
    assert rep.flux_values == tuple([-FOUR_PI] * 13)
    assert rep.extrapolated_strength == -FOUR_PI
    assert not rep.compatible
    assert not rep.diverged
    assert math.isnan(rep.fit_exponent)


def test_linear_u_is_sourceless():
    rep = point_source_strength(lambda a: a, lambda a: 1.0)
    assert rep.flux_values == tuple([0.0] * 13)
    assert rep.extrapolated_strength == 0.0
    assert rep.compatible
    assert check_compatibility(lambda a: a, lambda a: 1.0)


def test_quadratic_u_converges_with_exponent_two():
    rep = point_source_strength(lambda a: a * a, lambda a: 2.0 * a)
    assert abs(rep.extrapolated_strength) < 1e-12
    assert rep.compatible
    assert rep.fit_exponent == pytest.approx(2.0, abs=1e-6)


def test_fractional_power_u_is_sourceless():
    # u = r^0.75 (a borderline admissible behaviour): flux -pi a^0.75 -> 0.
    rep = point_source_strength(lambda a: a ** 0.75,
                                lambda a: 0.75 * a ** -0.25)
    assert abs(rep.extrapolated_strength) < 1e-10
    assert rep.compatible
    assert rep.fit_exponent == pytest.approx(0.75, abs=1e-6)


def test_offset_plus_power_recovers_offset():
    # u = 0.3 + a^1.5: hidden strength -4 pi * 0.3, approached like a^1.5.
    rep = point_source_strength(lambda a: 0.3 + a ** 1.5,
                                lambda a: 1.5 * a ** 0.5)
    assert rep.extrapolated_strength == pytest.approx(-0.3 * FOUR_PI, abs=1e-9)
    assert not rep.compatible
    assert rep.fit_exponent == pytest.approx(1.5, abs=1e-6)


def test_exponential_u_strength_minus_four_pi():
    rep = point_source_strength(lambda a: math.exp(-a),
                                lambda a: -math.exp(-a))
    assert rep.extrapolated_strength == pytest.approx(-FOUR_PI, abs=1e-7)
    assert not rep.compatible


def test_hydrogen_ground_form_is_clean():
    rep = point_source_strength(lambda a: a * math.exp(-a),
                                lambda a: (1.0 - a) * math.exp(-a))
    assert abs(rep.extrapolated_strength) < 1e-8
    assert rep.compatible


def test_negative_power_diverges():
    # u = r^-0.25 is square integrable yet the flux grows without bound.
    rep = point_source_strength(lambda a: a ** -0.25,
                                lambda a: -0.25 * a ** -1.25)
    assert rep.diverged
    assert rep.extrapolated_strength == -math.inf
    assert not rep.compatible
    assert rep.fit_exponent == pytest.approx(-0.25, abs=1e-6)


def test_probe_radii_validation():
    u, du = (lambda a: a), (lambda a: 1.0)
    with pytest.raises(rx.ConfigError):
        point_source_strength(u, du, radii=(0.1, 0.05))
    with pytest.raises(rx.ConfigError):
        point_source_strength(u, du, radii=(0.1, 0.05, -0.01))
    with pytest.raises(rx.ConfigError):
        point_source_strength(u, du, radii=(0.1, 0.1, 0.05))


def test_nonfinite_probe_value_raises():
    with pytest.raises(rx.NumericalError, match="non-finite"):
        point_source_strength(
            lambda a: math.nan if a == DEFAULT_PROBE_RADII[3] else 1.0,
            lambda a: 0.0)


def test_report_consistency_enforced():
    with pytest.raises(ValueError):
        ResidualReport(radii=(0.1, 0.05, 0.025), flux_values=(0.0, 0.0, 0.0),
                       extrapolated_strength=0.0, compatible=False,
                       tolerance=1e-6, diverged=False, fit_exponent=math.nan)


def test_audit_samples_smooth_polynomial():
    r = np.linspace(1e-6, 1.0, 20001)
    rep = audit_samples(r, r * (1.0 + r))
    assert rep.compatible
    assert abs(rep.extrapolated_strength) < 1e-8


def test_audit_samples_flags_offset_state():
    r = np.linspace(1e-6, 1.0, 20001)
    rep = audit_samples(r, 1.0 + r)
    assert not rep.compatible
    assert rep.extrapolated_strength == pytest.approx(-FOUR_PI, abs=1e-8)


def test_audit_samples_validation():
    with pytest.raises(rx.ConfigError):
        audit_samples(np.linspace(0.1, 1.0, 5), np.zeros(5))
    with pytest.raises(rx.ConfigError):
        audit_samples(np.linspace(0.1, 1.0, 20), np.zeros(21))
    bad = np.linspace(1e-6, 1.0, 20001)
    u = bad.copy()
    u[3] = np.inf
    with pytest.raises(rx.NumericalError):
        audit_samples(bad, u)


def test_audit_samples_rejects_coarse_grid():
    r = np.linspace(0.05, 10.0, 50)
    with pytest.raises(rx.NumericalError, match="too coarse"):
        audit_samples(r, r.copy())
    # explicit probes that the sampling cannot resolve near the origin
    r2 = np.linspace(1e-3, 1.0, 64)
    with pytest.raises(rx.NumericalError, match="too coarse"):
        audit_samples(r2, r2.copy(), probe_radii=(0.08, 0.02, 0.005))


def test_audit_eigenstate_hydrogen(hydrogen_states):
    for state in hydrogen_states:
        rep = audit_eigenstate(state)
        assert rep.compatible
        assert abs(rep.extrapolated_strength) < 1e-7
