import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iss_certify import (
    Field, Grid, InitialProfile, PreconditionError, ProblemSpec, ScenarioFamilies,
    ScenarioSuite, Signal, SignalTerm, SolverError, Trajectory, agmon_check, certify, check_compatibility,
    convergence_study, l2_profile, max_estimate_bound, profile_l2, reaction_diffusion_spec, run_scenario_suite, simulate_full,
    simulate_v, simulate_w, sup_norm_signal, transformed_data, verify_iss, verify_max_estimate,
    verify_superposition, verify_w_l2,
)
from iss_certify.transform import MaxEstimateBound, tilde_gains
from iss_certify.verify import draw_scenario, exact_solution, run_trial

from conftest import constant_field, heat_spec, sine_profile

GRID = Grid(101, 1000, 1.0)


def _v(spec, f=Field(), d0=Signal(), d1=Signal(), grid=GRID):
    tspec, params, _ = certify(spec)
    return tspec, params, simulate_v(tspec, params, f, d0, d1, grid)


# -- maximum estimate ----------------------------------------------------------


def test_max_estimate_zero_data():
    tspec, params, v = _v(ProblemSpec(1, 0, 1, 1, 0, 1, 1))
    report = verify_max_estimate(v, max_estimate_bound(tspec, params, 0, 0, 0), 1e-2)
    assert report.passed and report.worst_margin == 0.0


def test_max_estimate_interior_source():
    tspec, params, v = _v(ProblemSpec(1, 0, 2, 1, 0, 1, 0), f=constant_field(1.0))
    bound = max_estimate_bound(tspec, params, 1, 0, 0)
    assert bound.value == 0.5
    report = verify_max_estimate(v, bound, 0.0)
    assert report.passed and report.worst_margin > 0


def test_max_estimate_injected_violation_located():
    tspec, params, v = _v(ProblemSpec(1, 0, 2, 1, 0, 1, 0), f=constant_field(1.0))
    values = v.values.copy()
    values[37, 12] = 1.0
    report = verify_max_estimate(Trajectory(v.grid, values, "v_tilde"), MaxEstimateBound(0.5), 1e-2)
    assert not report.passed
    assert report.worst_margin == pytest.approx(-1.0)
    assert report.worst_location == (v.t[37], v.x[12])


def test_max_estimate_requires_v_tag():
    traj = simulate_full(heat_spec(), Grid(5, 2, 1.0))
    with pytest.raises(PreconditionError):
        verify_max_estimate(traj, MaxEstimateBound(1.0))


# -- L2 estimate of w ----------------------------------------------------------


def test_w_l2_zero():
    spec = ProblemSpec(1, 0, 1, 1, 0, 1, 1)
    tspec, params, v = _v(spec)
    w = simulate_w(tspec, params, spec.h, v, InitialProfile(), GRID)
    tg = tilde_gains(tspec, params, spec.h)
    assert verify_w_l2(w, 0.0, params.lam, tg.as_tuple(), (0, 0, 0)).passed


def test_w_l2_linear_decay():
    spec = ProblemSpec(1, 0.5, 1, 1, 0, 1, 1, phi=sine_profile(2.0))
    tspec, params, v = _v(spec)
    _, _, _, phi_t = transformed_data(spec, tspec)
    w = simulate_w(tspec, params, spec.h, v, phi_t, GRID)
    tg = tilde_gains(tspec, params, spec.h)
    report = verify_w_l2(w, profile_l2(phi_t), params.lam, tg.as_tuple(), (0, 0, 0), 1e-2)
    assert report.passed


def test_w_l2_ginzburg_landau_trial(gl_spec):
    suite = ScenarioSuite(gl_spec, 1, 42, ScenarioFamilies.for_spec(gl_spec))
    (report,) = run_trial(draw_scenario(suite, 0), Grid(201, 4000, 2.0), checks=("w_l2",))
    assert report.name == "w_l2" and report.passed


# -- ISS bound -----------------------------------------------------------------


def test_iss_reaction_diffusion_sine_mode():
    spec = reaction_diffusion_spec(1, 0, 1, 1, phi=sine_profile())
    _, _, gains = certify(spec)
    u = simulate_full(spec, GRID)
    report = verify_iss(u, gains, profile_l2(spec.phi), (0, 0, 0))
    assert report.passed and report.worst_location[0] == 0.0  # bound is tight only at t = 0
    assert report.n_points_checked == GRID.nt + 1
    t, norms = l2_profile(u)
    assert norms[-1] < 0.02 * gains.bound(profile_l2(spec.phi), 0, 0, 0, t[-1])


def test_iss_zero():
    spec = reaction_diffusion_spec(1, 0, 1, 1)
    _, _, gains = certify(spec)
    assert verify_iss(simulate_full(spec, GRID), gains, 0.0, (0, 0, 0)).passed


def test_iss_inflated_rate_fails():
    spec = reaction_diffusion_spec(1, 0, 1, 1, phi=sine_profile())
    _, _, gains = certify(spec)
    report = verify_iss(simulate_full(spec, GRID), dataclasses.replace(gains, lam=1e3), 1 / math.sqrt(2), (0, 0, 0))
    assert not report.passed


# -- superposition -------------------------------------------------------------


def _split_trajectories(spec, grid):
    tspec, params, _ = certify(spec)
    f_t, d0_t, d1_t, phi_t = transformed_data(spec, tspec)
    v = simulate_v(tspec, params, f_t, d0_t, d1_t, grid)
    w = simulate_w(tspec, params, spec.h, v, phi_t, grid)
    return simulate_full(spec, grid), v, w


def test_superposition_zero_exact():
    u, v, w = _split_trajectories(reaction_diffusion_spec(1, 0.5, 1, 1), GRID)
    report = verify_superposition(u, v, w, 1, 0.5)
    assert report.passed and report.worst_margin == 1.0


def test_superposition_sinusoidal_boundary():
    spec = reaction_diffusion_spec(1, 0, 1, 1, d1=Signal((SignalTerm("sinusoid", 1.0, omega=5.0),)))
    u, v, w = _split_trajectories(spec, Grid(201, 4000, 2.0))
    assert verify_superposition(u, v, w, 1, 0).passed


def test_superposition_mismatched_grids():
    spec = reaction_diffusion_spec(1, 0, 1, 1)
    u, v, w = _split_trajectories(spec, GRID)
    other = simulate_full(spec, Grid(51, 1000, 1.0))
    with pytest.raises(PreconditionError):
        verify_superposition(other, v, w, 1, 0)


# -- trace inequality ----------------------------------------------------------


def test_agmon_examples():
    x = np.linspace(0, 1, 201)
    assert agmon_check(x, np.ones_like(x), 0.3)
    assert agmon_check(x, np.sin(np.pi * x), 0.5)
    with pytest.raises(PreconditionError):
        agmon_check(x[:4], x[:4], 0.1)
    with pytest.raises(PreconditionError):
        agmon_check(x, x, 1.5)


@settings(max_examples=100)
@given(
    st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=1, max_size=6),
    st.floats(-3, 3), st.floats(0.1, 4), st.floats(0, 1),
)
def test_agmon_random_trig_polynomials(coeffs, p, length, frac):
    x = np.linspace(p, p + length, 801)
    u = sum(A * np.cos(k * x) + B * np.sin(k * x) for k, (A, B) in enumerate(coeffs))
    assert agmon_check(x, u, p + frac * length)


# -- convergence ---------------------------------------------------------------


def test_heat_convergence_order():
    rows = convergence_study(heat_spec(phi=sine_profile()), [Grid(n, 2000, 0.1) for n in (51, 101, 201)])
    assert [r[2] for r in rows][0] is None
    assert min(r[2] for r in rows[1:]) >= 1.9


def test_single_grid_has_no_orders():
    rows = convergence_study(heat_spec(phi=sine_profile()), [Grid(51, 100, 0.1)])
    assert [r[2] for r in rows[1:]] == []


def test_advection_diffusion_convergence_order():
    a, b = 0.8, 1.2
    phi = sine_profile(weight=b / (2 * a))
    spec = ProblemSpec(a, b, 0.5, 1, 0, 1, 0, phi=phi)
    assert exact_solution(spec) is not None
    rows = convergence_study(spec, [Grid(n, 2000, 0.1) for n in (51, 101, 201)])
    assert min(r[2] for r in rows[1:]) >= 1.9


def test_convergence_without_oracle():
    with pytest.raises(PreconditionError):
        convergence_study(reaction_diffusion_spec(1, 0, 1, 1, phi=sine_profile()), [GRID])


# -- scenario suites -----------------------------------------------------------


def test_empty_suite_is_vacuous(rd_spec):
    report = run_scenario_suite(ScenarioSuite(rd_spec, 0, 1), GRID, workers=0)
    assert report.passed and report.n_points_checked == 0


def test_suite_is_deterministic(gl_spec):
    suite = ScenarioSuite(gl_spec, 3, 7, ScenarioFamilies.for_spec(gl_spec))
    grid = Grid(51, 1000, 1.0)
    first = run_scenario_suite(suite, grid, workers=0).to_dict()
    assert run_scenario_suite(suite, grid, workers=0).to_dict() == first
    assert run_scenario_suite(suite, grid, workers=3).to_dict() == first


def test_suite_reads_thread_env(gl_spec, monkeypatch):
    monkeypatch.setenv("ISS_CERTIFY_THREADS", "two")
    with pytest.raises(PreconditionError):
        run_scenario_suite(ScenarioSuite(gl_spec, 1, 0), GRID)


def test_suite_propagates_solver_fault_with_trial(gl_spec):
    fam = ScenarioFamilies(amplitude=(50.0, 60.0), phi_amplitude=(50.0, 60.0))
    with pytest.raises(SolverError) as info:
        run_scenario_suite(ScenarioSuite(gl_spec, 2, 0, fam), Grid(51, 10, 1.0), workers=0)
    assert "trial 0" in str(info.value) and info.value.kind == "dt_guard"


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 1000), st.sampled_from([(1, 0, 1, 1), (0, 1, 2, 1), (1, 1, 0, 1)]))
def test_drawn_scenarios_are_compatible(seed, trial, bd):
    spec = ProblemSpec(1, 0, 1, *bd)
    drawn = draw_scenario(ScenarioSuite(spec, 1, seed), trial)
    report = check_compatibility(drawn)
    assert all(c.passed for c in report.checks if not c.name.startswith("compatibility_dirichlet"))


def test_draws_depend_only_on_seed_and_trial(rd_spec):
    a = draw_scenario(ScenarioSuite(rd_spec, 5, 3), 4)
    b = draw_scenario(ScenarioSuite(rd_spec, 50, 3), 4)
    assert a == b
    assert draw_scenario(ScenarioSuite(rd_spec, 5, 4), 4) != a


def test_margin_stable_under_refinement(rd_spec):
    spec = draw_scenario(ScenarioSuite(rd_spec, 1, 42), 0)
    coarse = run_trial(spec, Grid(101, 2000, 2.0), checks=("iss",))[0].worst_margin
    fine = run_trial(spec, Grid(201, 4000, 2.0), checks=("iss",))[0].worst_margin
    assert abs(coarse - fine) <= 1e-3


def test_max_estimate_independent_of_horizon():
    spec = reaction_diffusion_spec(1, 0.5, 1, 1)
    tspec, params, _ = certify(spec)
    d = Signal((SignalTerm("constant", 1.5),))
    bounds = [max_estimate_bound(tspec, params, 2.0, sup_norm_signal(d, T), sup_norm_signal(d, T)).value
              for T in (1.0, 2.0)]
    assert bounds[0] == bounds[1]
