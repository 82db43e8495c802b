import numpy as np
import pytest

from risisac.channel import RisPhase, cascade
from risisac.config import ScenarioConfig
from risisac.metrics import fim_bracket
from risisac.optimizer import (FEAS_TOL, FIXED_ALPHA, AoSettings,
                               EmptyFeasibleSet, Scheme, _PhaseMargins,
                               _sensing_beam, alpha_grid, build_ris_sdr,
                               is_feasible, least_violation_alpha, rate_margins,
                               run_ao, solve_alpha, solve_phase, solve_receive)
from risisac.scenario import build_scenario


@pytest.fixture(scope="module")
def scen():
    return build_scenario(ScenarioConfig(), seed=0)


@pytest.fixture(scope="module")
def settings():
    return AoSettings()


def _feasible_phase(scen, settings):
    """Phases restored to feasibility for the pure sensing beam."""
    f = _sensing_beam(scen.channels)
    rng = np.random.default_rng(100)
    return solve_phase(0.5, f, scen.channels, scen.budget, settings, rng,
                       mode="restore")


def test_sensing_beam_maximizes_response(scen):
    f = _sensing_beam(scen.channels)
    a = scen.channels.a_ap_s
    assert np.linalg.norm(f) == pytest.approx(1.0)
    assert abs(np.vdot(f, a)) == pytest.approx(np.linalg.norm(a))


def test_rate_margins_shape_and_alpha_one(scen):
    f = _sensing_beam(scen.channels)
    phase = RisPhase.random(32, np.random.default_rng(0))
    m = rate_margins(0.5, f, scen.channels, phase, scen.budget)
    assert m.shape == (4,)
    assert np.all(np.isfinite(m))
    assert np.all(rate_margins(1.0, f, scen.channels, phase, scen.budget) == -np.inf)


def test_alpha_grid_excludes_one(settings):
    grid = alpha_grid(settings)
    assert grid[0] == 0.0
    assert grid.max() < 1.0
    assert len(grid) == 100


def test_solve_alpha_prefers_largest_bracket(scen, settings):
    f = _sensing_beam(scen.channels)
    phase = _feasible_phase(scen, settings)
    alpha = solve_alpha(f, scen.channels, phase, scen.budget, settings)
    assert is_feasible(alpha, f, scen.channels, phase, scen.budget)
    # no feasible grid point has a larger information bracket
    for a in alpha_grid(settings):
        if is_feasible(a, f, scen.channels, phase, scen.budget):
            assert fim_bracket(a, scen.budget) <= fim_bracket(alpha, scen.budget)


def test_solve_alpha_empty_feasible_set(scen, settings):
    f = _sensing_beam(scen.channels)
    phase = RisPhase.random(32, np.random.default_rng(1))  # unaligned: no rates
    with pytest.raises(EmptyFeasibleSet):
        solve_alpha(f, scen.channels, phase, scen.budget, settings)
    fallback = least_violation_alpha(f, scen.channels, phase, scen.budget, settings)
    assert 0.0 <= fallback < 1.0


def test_phase_margins_match_direct_evaluation(scen):
    f = _sensing_beam(scen.channels)
    margins = _PhaseMargins(0.5, f, scen.channels, scen.budget)
    phase = RisPhase.random(32, np.random.default_rng(2))
    u = np.conj(phase.v)
    direct = rate_margins(0.5, f, scen.channels, phase, scen.budget).min()
    assert margins(u) == pytest.approx(direct, rel=1e-9)


def test_lifted_cascade_identity(scen):
    # u^H r_k equals f^H hbar_k for the conjugated phase vector u
    f = _sensing_beam(scen.channels)
    phase = RisPhase.random(32, np.random.default_rng(3))
    u = np.conj(phase.v)
    hf = scen.channels.h_ap_ris @ f
    for h_k in scen.channels.h_ris_k:
        r_k = np.conj(hf) * h_k
        hbar = cascade(h_k, phase, scen.channels.h_ap_ris)
        assert np.vdot(u, r_k) == pytest.approx(np.vdot(f, hbar), rel=1e-10)


def test_build_ris_sdr_modes(scen):
    f = _sensing_beam(scen.channels)
    slack = build_ris_sdr(0.5, f, scen.channels, scen.budget, mode="slack")
    restore = build_ris_sdr(0.5, f, scen.channels, scen.budget, mode="restore")
    assert slack.dim == restore.dim == 64
    assert slack.n_scalars == 4
    assert restore.n_scalars == 1
    assert len(slack.eq) == 32  # one unit-modulus row per element
    with pytest.raises(ValueError):
        build_ris_sdr(0.5, f, scen.channels, scen.budget, mode="bogus")


def test_solve_phase_restores_feasibility(scen, settings):
    f = _sensing_beam(scen.channels)
    rng = np.random.default_rng(4)
    start = RisPhase.random(32, rng)
    alpha = 0.5
    before = rate_margins(alpha, f, scen.channels, start, scen.budget).min()
    phase = solve_phase(alpha, f, scen.channels, scen.budget, settings, rng,
                        mode="restore")
    assert phase is not None
    after = rate_margins(alpha, f, scen.channels, phase, scen.budget).min()
    assert after > before
    assert after >= -FEAS_TOL


def test_solve_receive_preserves_feasibility(scen, settings):
    f0 = _sensing_beam(scen.channels)
    rng = np.random.default_rng(5)
    phase = solve_phase(0.5, f0, scen.channels, scen.budget, settings, rng,
                        mode="restore")
    f = solve_receive(0.5, scen.channels, phase, scen.budget, settings, rng,
                      mode="gain")
    assert f is not None
    assert np.linalg.norm(f) == pytest.approx(1.0)
    assert is_feasible(0.5, f, scen.channels, phase, scen.budget)
    # combining gain not worse than the pure sensing beam
    a = scen.channels.a_ap_s
    assert abs(np.vdot(f, a)) ** 2 >= abs(np.vdot(f0, a)) ** 2 * 0.5


def test_run_ao_proposed_monotone_and_feasible(scen):
    rng = np.random.default_rng(0)
    res = run_ao(scen.channels, scen.budget, Scheme.PROPOSED, rng)
    assert res.feasible
    assert res.trace.converged
    cv = res.trace.crb_values
    for a, b in zip(cv, cv[1:]):
        assert b <= a * (1.0 + 1e-6)
    assert res.rate_s >= scen.budget.rate_s_th * (1.0 - FEAS_TOL)
    assert np.all(res.rates_k >= scen.budget.rate_k_th * (1.0 - FEAS_TOL))


def test_run_ao_fixed_alpha_schemes(scen):
    for scheme, alpha in FIXED_ALPHA.items():
        rng = np.random.default_rng(0)
        res = run_ao(scen.channels, scen.budget, scheme, rng)
        assert res.variables.alpha == alpha
        assert res.scheme is scheme


def test_run_ao_full_so_is_unconstrained_bound(scen):
    rng = np.random.default_rng(0)
    so = run_ao(scen.channels, scen.budget, Scheme.FULL_SO, rng)
    prop = run_ao(scen.channels, scen.budget, Scheme.PROPOSED,
                  np.random.default_rng(0))
    assert so.feasible
    assert so.crb_s2 <= prop.crb_s2 * (1.0 + 1e-9)
    assert so.rate_s == 0.0


def test_run_ao_random_ris_keeps_initial_phase(scen):
    rng = np.random.default_rng(7)
    res = run_ao(scen.channels, scen.budget, Scheme.RANDOM_RIS, rng)
    expected = RisPhase.random(32, np.random.default_rng(7))
    assert np.array_equal(res.variables.phase.v, expected.v)


def test_run_ao_deterministic(scen):
    r1 = run_ao(scen.channels, scen.budget, Scheme.PROPOSED,
                np.random.default_rng(9))
    r2 = run_ao(scen.channels, scen.budget, Scheme.PROPOSED,
                np.random.default_rng(9))
    assert r1.crb_s2 == r2.crb_s2
    assert r1.variables.alpha == r2.variables.alpha
    assert np.array_equal(r1.variables.f, r2.variables.f)
