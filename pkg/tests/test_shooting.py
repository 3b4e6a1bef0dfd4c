import math

import numpy as np
import pytest
from scipy.integrate import simpson

import radialis as rx
from radialis.shooting import (energy_ratios, mismatch, near_origin_exponent,
                               origin_seed, request_indicial, solve_state)


@pytest.fixture(scope="module")
def grid8k():
    return rx.RadialGrid(r_min=1e-6, r_max=40.0, n_points=8000)


@pytest.fixture(scope="module")
def grid4k():
    return rx.RadialGrid(r_min=1e-6, r_max=40.0, n_points=4000)


def hydrogen_req(grid, **kw):
    base = dict(potential=rx.coulomb(1.0), mass=1.0, l=0, policy=rx.Dirichlet(),
                grid=grid, energy_window=(-0.6, -0.02))
    base.update(kw)
    return rx.SolveRequest(**base)


# ---------------------------------------------------------------------------
# request validation


def test_tolerance_validation():
    with pytest.raises(rx.ConfigError):
        rx.SolveTolerances(energy_rel=0.0)
    with pytest.raises(rx.ConfigError):
        rx.SolveTolerances(max_bisection_iters=4)
    t = rx.SolveTolerances()
    assert t.energy_rel == 1e-10
    assert t.max_bisection_iters == 200


def test_request_validation(grid4k):
    with pytest.raises(rx.ConfigError):
        hydrogen_req(grid4k, mass=0.0)
    with pytest.raises(rx.ConfigError):
        hydrogen_req(grid4k, l=-1)
    with pytest.raises(rx.ConfigError):
        hydrogen_req(grid4k, l=1.0)
    with pytest.raises(rx.ConfigError):
        hydrogen_req(grid4k, energy_window=(-0.02, -0.6))
    # window top must stay below the continuum edge (here 0)
    with pytest.raises(rx.ConfigError, match="continuum edge"):
        hydrogen_req(grid4k, energy_window=(-0.5, 0.5))
    with pytest.raises(rx.ConfigError):
        hydrogen_req(grid4k, cutoff_radius=-0.1)
    with pytest.raises(rx.ConfigError):
        hydrogen_req(grid4k, match_radius=50.0)
    with pytest.raises(rx.ConfigError):
        rx.SolveRequest(potential=rx.power_law(-1.0, -3.0), mass=1.0, l=0,
                        policy=rx.Dirichlet(), grid=grid4k,
                        energy_window=(-1.0, -0.1))


def test_extension_angle_rejected_where_unique(grid4k):
    # l = 1 free origin has a single admissible behaviour: chi has no role.
    with pytest.raises(rx.ConfigError, match="meaningless"):
        hydrogen_req(grid4k, l=1, policy=rx.SAEMixing(chi=0.3, r_s=1.0),
                     energy_window=(-0.2, -0.05))


def test_ambiguous_policies_refuse(grid4k):
    # P = 0.3: both behaviours vanish at the origin and both are square
    # integrable, so neither simple policy can choose between them.
    for policy, name in ((rx.Dirichlet(), "dirichlet"),
                         (rx.SquareIntegrableOnly(), "square_integrable_only")):
        req = rx.SolveRequest(potential=rx.inverse_square(0.08), mass=1.0, l=0,
                              policy=policy, grid=grid4k,
                              energy_window=(-50.0, -1e-3))
        with pytest.raises(rx.ConfigError, match=name):
            solve_state(req, 0)


def test_square_integrable_only_ambiguous_for_s_wave_coulomb(grid4k):
    # exponents 1 and 0: both are square integrable near the origin.
    req = hydrogen_req(grid4k, policy=rx.SquareIntegrableOnly())
    with pytest.raises(rx.ConfigError, match="ambiguous"):
        solve_state(req, 0)


def test_fall_to_center_refusal(grid4k):
    req = rx.SolveRequest(potential=rx.inverse_square(0.5), mass=1.0, l=0,
                          policy=rx.Dirichlet(), grid=grid4k,
                          energy_window=(-400.0, -1e-3))
    with pytest.raises(rx.RegimeRefusal, match="fall to center"):
        solve_state(req, 0)


def test_seeding_requires_resolved_origin():
    grid = rx.RadialGrid(r_min=1e-3, r_max=10.0, n_points=64)
    req = rx.SolveRequest(potential=rx.coulomb_plus_inverse_square(1.0, -0.055),
                          mass=1.0, l=0, policy=rx.Dirichlet(), grid=grid,
                          energy_window=(-0.6, -0.02))
    with pytest.raises(rx.ConfigError, match="too coarse"):
        solve_state(req, 0)


# ---------------------------------------------------------------------------
# seeds and indicial plumbing


def test_origin_seed_is_pure_power(grid8k):
    r0, r1 = grid8k.nodes[:2]
    u0, u1 = origin_seed(hydrogen_req(grid8k))
    assert (u0, u1) == (r0, r1)                     # exponent 1 exactly
    u0, u1 = origin_seed(hydrogen_req(grid8k, l=1, energy_window=(-0.2, -0.05)))
    assert (u0, u1) == (r0 * r0, r1 * r1)           # exponent 2 exactly
    req = rx.SolveRequest(potential=rx.inverse_square(0.08), mass=1.0, l=0,
                          policy=rx.SAEMixing(chi=math.pi / 2, r_s=1.0),
                          grid=grid8k, energy_window=(-50.0, -1e-3))
    u0, u1 = origin_seed(req)                       # pure r^0.2 branch
    assert u0 == pytest.approx(r0 ** 0.2, rel=1e-15)
    assert u1 == pytest.approx(r1 ** 0.2, rel=1e-15)


def test_request_indicial_reports_cutoff_regularization(grid8k):
    req = rx.SolveRequest(potential=rx.inverse_square(0.5), mass=1.0, l=0,
                          policy=rx.Dirichlet(), grid=grid8k,
                          energy_window=(-400.0, -1e-3))
    assert request_indicial(req).regime is rx.Regime.FALL_TO_CENTER
    req_cut = rx.SolveRequest(potential=rx.inverse_square(0.5), mass=1.0, l=0,
                              policy=rx.Dirichlet(), grid=grid8k,
                              energy_window=(-400.0, -1e-3), cutoff_radius=0.05)
    ind = request_indicial(req_cut)
    assert ind.gamma == 0.0
    assert ind.regime is rx.Regime.SQUARE_INTEGRABLE_BOTH


# ---------------------------------------------------------------------------
# the mismatch function


def test_mismatch_increases_through_bound_state(hydrogen_request):
    w_lo = mismatch(hydrogen_request, -0.55)
    w_hi = mismatch(hydrogen_request, -0.45)
    assert w_lo < 0.0 < w_hi
    assert abs(w_lo - -0.267_095_890_109_849) < 1e-9
    assert abs(w_hi - 0.512_026_986_606_493_8) < 1e-9


def test_mismatch_requires_in_window_energy(hydrogen_request):
    with pytest.raises(rx.ConfigError):
        mismatch(hydrogen_request, -0.7)


# ---------------------------------------------------------------------------
# hydrogen spectra


def test_hydrogen_energies(hydrogen_states):
    assert [s.node_count for s in hydrogen_states] == [0, 1, 2]
    e = [s.energy for s in hydrogen_states]
    assert abs(e[0] - -0.499_999_999_984_283_85) < 1e-11
    assert abs(e[1] - -0.125_000_000_001_309_73) < 1e-11
    assert abs(e[2] - -0.055_555_567_694_318_596) < 1e-11
    # against the closed form -1/(2 n^2)
    assert abs(e[0] + 0.5) < 5e-10
    assert abs(e[1] + 0.125) < 5e-10
    assert abs(e[2] + 1.0 / 18.0) < 2e-7


def test_hydrogen_state_metadata(hydrogen_states):
    for s in hydrogen_states:
        assert s.l == 0 and s.mass == 1.0
        assert s.potential_label == "coulomb(Z=1)"
        assert s.seed_exponent == 1.0
        assert abs(s.norm_check - 1.0) < 1e-12
        assert s.u.direction == "merged"
        assert 0.0 < s.energy_resolution < 1e-10
        assert s.grid is s.u.grid
        # normalization is real: recompute the Simpson integral
        assert abs(simpson(s.u.u ** 2, x=s.grid.nodes) - 1.0) < 1e-12


def test_hydrogen_energy_ratios(hydrogen_states):
    r = energy_ratios(hydrogen_states)
    assert abs(r[0] - 0.250_000_000_010_477_56) < 1e-10
    assert abs(r[1] - 0.444_444_541_549_891_94) < 1e-8


def test_hydrogen_near_origin_exponent(hydrogen_states):
    slope = near_origin_exponent(hydrogen_states[0])
    assert abs(slope - 0.992_136_644_117_038_1) < 1e-9
    assert abs(slope - 1.0) < 0.05


def test_mass_scaling(grid8k):
    # doubling the mass doubles every hydrogenic binding energy
    req = hydrogen_req(grid8k, mass=2.0, energy_window=(-1.2, -0.9))
    s = solve_state(req, 0)
    assert abs(s.energy + 1.0) < 2e-9


def test_match_radius_override():
    grid = rx.RadialGrid(r_min=1e-6, r_max=40.0, n_points=20000)
    s = solve_state(hydrogen_req(grid, match_radius=5.0), 0)
    assert abs(s.match_radius - 5.000_250_887_494_375) < 1e-12
    assert abs(s.energy + 0.5) < 1e-9


def test_sae_at_zero_angle_reproduces_dirichlet(grid8k):
    e_dir = solve_state(hydrogen_req(grid8k), 0).energy
    e_sae = solve_state(hydrogen_req(
        grid8k, policy=rx.SAEMixing(chi=0.0, r_s=1.0)), 0).energy
    assert e_sae == e_dir
    assert abs(e_dir - -0.500_000_000_018_044_2) < 1e-11


def test_square_integrable_only_unique_at_l_one():
    grid = rx.RadialGrid(r_min=1e-6, r_max=40.0, n_points=20000)
    req = rx.SolveRequest(potential=rx.coulomb(1.0), mass=1.0, l=1,
                          policy=rx.SquareIntegrableOnly(), grid=grid,
                          energy_window=(-0.3, -0.05))
    s = solve_state(req, 0)
    assert s.seed_exponent == 2.0
    assert abs(s.energy - -0.125_000_000_000_727_58) < 1e-11


# ---------------------------------------------------------------------------
# attractive inverse-square admixtures


def test_inverse_square_admixture_shifts_the_rydberg_series():
    # V = -1/r + 0.055/r^2 has P = 0.6 and E_n = -1/(2 (n + 0.6 + 0.5)^2).
    grid = rx.RadialGrid(r_min=1e-6, r_max=60.0, n_points=30000)
    req = rx.SolveRequest(potential=rx.coulomb_plus_inverse_square(1.0, -0.055),
                          mass=1.0, l=0, policy=rx.Dirichlet(), grid=grid,
                          energy_window=(-0.6, -0.02))
    e = [s.energy for s in rx.spectrum(req, 2)]
    assert abs(e[0] - -0.413_223_140_431_218_7) < 1e-11
    assert abs(e[1] - -0.113_378_684_802_883_06) < 1e-11
    assert abs(e[0] + 1.0 / (2.0 * 1.1 ** 2)) < 1e-9
    assert abs(e[1] + 1.0 / (2.0 * 2.1 ** 2)) < 1e-9


def test_centrifugal_and_inverse_square_are_interchangeable():
    # l = 0 with coefficient -0.055 and l = 1 with 0.945 give the same
    # total 1/r^2 strength, hence the same spectrum.
    grid = rx.RadialGrid(r_min=1e-6, r_max=60.0, n_points=30000)
    mk = lambda l, v0: rx.SolveRequest(
        potential=rx.coulomb_plus_inverse_square(1.0, v0), mass=1.0, l=l,
        policy=rx.Dirichlet(), grid=grid, energy_window=(-0.6, -0.02))
    ea = [s.energy for s in rx.spectrum(mk(0, -0.055), 2)]
    eb = [s.energy for s in rx.spectrum(mk(1, 0.945), 2)]
    assert ea == eb


# ---------------------------------------------------------------------------
# extension-angle states


def test_sae_mixing_binds_a_pure_inverse_square_state():
    grid = rx.RadialGrid(r_min=1e-6, r_max=30.0, n_points=40000)
    req = rx.SolveRequest(potential=rx.inverse_square(0.08), mass=1.0, l=0,
                          policy=rx.SAEMixing(chi=3.0 * math.pi / 4.0, r_s=1.0),
                          grid=grid, energy_window=(-50.0, -1e-3))
    s = solve_state(req, 0)
    assert abs(s.energy - -0.584_503_255_245_505_2) < 1e-10
    assert s.seed_exponent == pytest.approx(0.2, abs=1e-12)
    slope = near_origin_exponent(s)
    assert abs(slope - 0.181_884_972_906_228_46) < 1e-9
    assert abs(slope - 0.2) < 0.05


# ---------------------------------------------------------------------------
# confining and truncated potentials


def test_harmonic_ladder_and_window_exhaustion():
    grid = rx.RadialGrid(r_min=1e-6, r_max=12.0, n_points=6000)
    req = rx.SolveRequest(potential=rx.harmonic(1.0), mass=1.0, l=0,
                          policy=rx.Dirichlet(), grid=grid,
                          energy_window=(0.1, 8.0))
    states = rx.spectrum(req, 5)
    assert len(states) == 4                 # E = 9.5 lies above the window
    e = [s.energy for s in states]
    assert abs(e[0] - 1.499_999_999_968_713) < 1e-11
    assert abs(e[3] - 7.500_000_000_072_760_5) < 1e-11
    for k, ek in enumerate(e):
        assert abs(ek - (2.0 * k + 1.5)) < 1e-9


def test_cutoff_regularizes_fall_to_center():
    grid = rx.RadialGrid(r_min=1e-6, r_max=40.0, n_points=40000)
    req = rx.SolveRequest(potential=rx.inverse_square(0.5), mass=1.0, l=0,
                          policy=rx.Dirichlet(), grid=grid,
                          energy_window=(-400.0, -1e-3), cutoff_radius=0.05)
    states = rx.spectrum(req, 2)
    assert len(states) == 2
    assert abs(states[0].energy - -7.168_724_529_983_539) < 1e-9
    assert abs(states[1].energy - -0.005_078_833_178_065_593) < 1e-12
    assert states[0].potential_label == "inverse_square(v0=0.5)|truncated@0.05"
    assert states[0].seed_exponent == 1.0   # truncated origin is regular


# ---------------------------------------------------------------------------
# failure modes of the search itself


def test_state_not_found_below_window(grid4k):
    req = hydrogen_req(grid4k, energy_window=(-0.03, -0.025))
    with pytest.raises(rx.StateNotFound, match="window bottom already has"):
        solve_state(req, 0)


def test_state_not_found_above_window(grid4k):
    req = hydrogen_req(grid4k, energy_window=(-0.6, -0.55))
    with pytest.raises(rx.StateNotFound, match="appear by the window top"):
        solve_state(req, 0)


def test_exhausted_bisection_budget(grid4k):
    req = hydrogen_req(grid4k,
                       tolerances=rx.SolveTolerances(max_bisection_iters=8))
    with pytest.raises(rx.NumericalError, match="bisection exhausted"):
        solve_state(req, 0)


def test_bad_node_target(grid4k):
    req = hydrogen_req(grid4k)
    with pytest.raises(rx.ConfigError):
        solve_state(req, -1)
    with pytest.raises(rx.ConfigError):
        rx.spectrum(req, 0)
