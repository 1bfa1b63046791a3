import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iss_certify import (
    InfeasibleError, Nonlinearity, PreconditionError, ProblemSpec, certify, check_split_params,
    choose_split_params, closed_form_gains_ginzburg_landau, closed_form_gains_reaction_diffusion,
    evaluate_iss_bound, max_estimate_bound, reaction_diffusion_spec, tilde_gains, transform_spec,
    validate_structure,
)
from iss_certify.transform import KFunction, ginzburg_landau_conditions, relative_deviation


def test_transform_identity_without_advection():
    t = transform_spec(ProblemSpec(1, 0, 1, 1, 0, 1, 1))
    assert (t.c_tilde, t.alpha0_tilde, t.alpha1_tilde) == (1, 1, 1)
    assert (t.beta0_tilde, t.beta1_tilde) == (0, 1)


def test_transform_hand_values():
    t = transform_spec(ProblemSpec(1, 2, 1, 1, 0, 0, 1))
    assert t.c_tilde == 2.0
    assert t.alpha1_tilde == 1.0


def test_transform_accepts_negative_reaction():
    assert transform_spec(ProblemSpec(1, 2, -0.5, 1, 0, 1, 0)).c_tilde == pytest.approx(0.5)


def test_transform_rejects_nonpositive_c_tilde():
    with pytest.raises(PreconditionError):
        transform_spec(ProblemSpec(1, 0, 0, 1, 0, 1, 0))


def test_split_defaults_reaction_diffusion():
    p = choose_split_params(transform_spec(reaction_diffusion_spec(1, 0, 1, 1)))
    assert (p.k0, p.k1) == (0, 0)
    assert p.eps == 0.25
    assert (p.C0, p.C1) == (0, -1)
    assert p.lam == pytest.approx(0.375, abs=1e-15)


def test_split_ginzburg_landau_no_penalty():
    spec = ProblemSpec(1, 1, 1, 1, 0, 0, 1, Nonlinearity.cubic_quintic(1, 1))
    p = choose_split_params(transform_spec(spec))
    assert p.k1 == 0.0


def test_split_penalty_for_pure_neumann_without_advection():
    spec = ProblemSpec(1, 0, 1, 1, 0, 0, 1, Nonlinearity.cubic_quintic(1, 1))
    tspec = transform_spec(spec)
    p = choose_split_params(tspec)
    assert p.k1 == 1.0
    assert tspec.alpha1_tilde + p.k1 == 1.0
    assert p.k1 * p.eps1 / (2 * tspec.beta1_tilde) == pytest.approx(p.eps / 8)


def test_split_oversized_eps_is_infeasible():
    tspec = transform_spec(reaction_diffusion_spec(1, 0, 1, 1))
    with pytest.raises(InfeasibleError) as info:
        choose_split_params(tspec, {"eps": 2 * tspec.c_tilde})
    assert "decay_base" in info.value.failed


def test_split_rejects_unknown_override():
    with pytest.raises(PreconditionError):
        choose_split_params(transform_spec(reaction_diffusion_spec(1, 0, 1, 1)), {"gamma": 1})


def test_split_records_both_readings_of_gradient_condition():
    spec = ProblemSpec(1, 0, 1, 0, 1, 0, 1)
    p = choose_split_params(transform_spec(spec))
    names = [c[0] for c in p.conditions]
    assert "gradient_boundary0" in names and "gradient_boundary0_literal_C1" in names


def test_split_gradient_bound_touching_a_is_infeasible():
    # alpha~1 = -a so the gradient bound cannot hold strictly with k1 > 0
    spec = ProblemSpec(0.5, 0, 5, 1, 0, -0.5, 1)
    with pytest.raises(InfeasibleError):
        choose_split_params(transform_spec(spec))


boundary = st.tuples(st.floats(0, 3), st.floats(0, 3)).filter(lambda ab: ab[0] + ab[1] > 0.05)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.1, 3), st.floats(-3, 3), st.floats(-1, 5), boundary, boundary)
def test_default_split_feasible_when_structure_holds(a, b, c, bd0, bd1):
    spec = ProblemSpec(a, b, c, bd0[0], bd0[1], bd1[0], bd1[1])
    if not validate_structure(spec).passed:
        return
    tspec = transform_spec(spec)
    g = max(max(0.0, -tspec.alpha_tilde(i) / tspec.beta_tilde(i)) if tspec.beta_tilde(i) > 0 else 0.0 for i in (0, 1))
    if g == a:
        return  # gradient bound can only hold with equality
    p = choose_split_params(tspec)
    assert p.lam > 0
    check_split_params(tspec, p)
    for i in (0, 1):
        if tspec.beta_tilde(i) > 0:
            expect = p.k(i) * p.eps_i(i) / (2 * tspec.beta_tilde(i)) - tspec.alpha_tilde(i) / tspec.beta_tilde(i)
            assert p.C(i) == pytest.approx(expect, rel=1e-12, abs=1e-15)
        else:
            assert p.C(i) == 0.0
            assert p.k(i) == 0.0


# -- gains -------------------------------------------------------------------


def test_reaction_diffusion_gains_identity():
    _, _, gains = certify(reaction_diffusion_spec(1, 0, 1, 1))
    for g in (gains.gamma, gains.gamma0, gains.gamma1):
        assert (g.p, g.q) == (1.0, 0.0)
    assert gains.beta_coeff == 1.0


def test_all_dirichlet_nonlinear_gain_shape():
    spec = ProblemSpec(1, 0, 1, 2.0, 0, 1, 0, Nonlinearity.polynomial_odd([0, 1]))
    tspec, params, _ = certify(spec)
    tg = tilde_gains(tspec, params, spec.h)
    assert tg.gamma0.p == 0.0
    assert tg.gamma0.q == pytest.approx(math.sqrt(1 / (params.lam * params.eps)), rel=1e-14)
    assert tg.gamma0.r == pytest.approx(0.5, rel=1e-14)


@pytest.mark.parametrize(
    "spec",
    [
        ProblemSpec(1, 0.5, 1, 1, 1, 1, 1),
        ProblemSpec(2, -1, 0.3, 0, 1, 1, 0),
        ProblemSpec(1, 0, 1, 1, 0, 1, 0),
    ],
)
def test_linear_gains_have_no_nonlinear_part(spec):
    _, _, gains = certify(spec)
    for g in (gains.gamma, gains.gamma0, gains.gamma1):
        assert g.q == 0.0
        assert g(0.0) == 0.0


def test_gain_functions_are_class_k():
    spec = ProblemSpec(1, 1, 1, 1, 0, 0, 1, Nonlinearity.cubic_quintic(1, 1))
    _, _, gains = certify(spec)
    s = np.logspace(-6, 3, 200)
    for g in (gains.gamma, gains.gamma0, gains.gamma1):
        assert g(0.0) == 0.0
        assert np.all(np.diff(g(s)) > 0)


def test_kfunction_canonical_form():
    h = Nonlinearity.polynomial_odd([0, 1])
    k = KFunction(2.0, 3.0, 0.5, h)
    assert k(2.0) == pytest.approx(4.0 + 3.0 * 1.0)


# -- maximum estimate and bound --------------------------------------------------


def _tspec_for(c_tilde):
    return transform_spec(ProblemSpec(1, 0, c_tilde, 1, 0, 1, 0))


def test_max_estimate_examples():
    t2 = _tspec_for(2.0)
    assert max_estimate_bound(t2, choose_split_params(t2), 1, 0, 0).value == 0.5
    t1 = _tspec_for(1.0)
    p1 = choose_split_params(t1)
    assert max_estimate_bound(t1, p1, 0, 0, 0).value == 0.0
    assert max_estimate_bound(t1, p1, 1, 2, 3).value == 3.0


def test_max_estimate_rejects_vanishing_denominator():
    tspec = transform_spec(ProblemSpec(1, 0, 1, 1, 0, 0, 1))
    with pytest.raises(InfeasibleError):
        choose_split_params(tspec, {"k1": 0.0})
    p = dataclasses.replace(choose_split_params(tspec), k1=0.0)
    with pytest.raises(PreconditionError):
        max_estimate_bound(tspec, p, 0, 0, 1)


def test_iss_bound_examples(rd_spec):
    _, _, gains = certify(rd_spec)
    assert evaluate_iss_bound(gains, 0, 0, 0, 0, 3.0) == 0.0
    assert evaluate_iss_bound(gains, 1 / math.sqrt(2), 0, 0, 0, 1.0) == pytest.approx(math.exp(-0.375) / math.sqrt(2))
    assert evaluate_iss_bound(gains, 0, 1, 1, 1, 7.0) == pytest.approx(3.0)


@settings(max_examples=100)
@given(*(st.floats(0, 10) for _ in range(4)), st.floats(0, 20), st.integers(0, 4), st.floats(0, 5))
def test_iss_bound_monotone(phi, sf, s0, s1, T, which, bump):
    spec = ProblemSpec(1, 1, 1, 1, 0, 0, 1, Nonlinearity.cubic_quintic(1, 1))
    _, _, gains = certify(spec)
    args = [phi, sf, s0, s1, T]
    base = evaluate_iss_bound(gains, *args)
    args[which] += bump
    moved = evaluate_iss_bound(gains, *args)
    if which == 4:
        assert moved <= base
    else:
        assert moved >= base


def test_iss_bound_isolates_each_gain():
    spec = ProblemSpec(1, 1, 1, 1, 0, 0, 1, Nonlinearity.cubic_quintic(1, 1))
    _, _, gains = certify(spec)
    assert evaluate_iss_bound(gains, 0, 0.7, 0, 0, 5.0) == gains.gamma(0.7)


# -- worked examples -------------------------------------------------------------


def test_closed_form_reaction_diffusion_values():
    g = closed_form_gains_reaction_diffusion(1, 0, 1, 1, 0.25)
    assert (g.gamma.p, g.gamma0.p, g.gamma1.p) == (1.0, 1.0, 1.0)
    g = closed_form_gains_reaction_diffusion(1, 2, 1, 2, 0.25)
    assert g.gamma1.p == pytest.approx(math.e / 3)
    for a, c, K1 in [(0.5, 1, 1), (2, 3, 0.2)]:
        assert closed_form_gains_reaction_diffusion(a, 0, c, K1, 0.1).gamma0.p == 1.0


def test_closed_form_reaction_diffusion_preconditions():
    with pytest.raises(PreconditionError):
        closed_form_gains_reaction_diffusion(1, 2, 1, 0.5, 0.1)


@pytest.mark.parametrize("a, b, c, K1", [(1, 0, 1, 1), (0.5, -1, 1, 1.5), (2, 2, 0.5, 1), (1, 1, 1, 3)])
def test_reaction_diffusion_matches_closed_form(a, b, c, K1):
    _, params, gains = certify(reaction_diffusion_spec(a, b, c, K1))
    ref = closed_form_gains_reaction_diffusion(a, b, c, K1, params.eps)
    assert relative_deviation(gains, ref) <= 1e-12


def test_ginzburg_landau_condition_example():
    assert ginzburg_landau_conditions(1, 1, 1) == (True, True)


def test_ginzburg_landau_closed_form_agrees_on_gamma():
    spec = ProblemSpec(1, 1, 1, 1, 0, 0, 1, Nonlinearity.cubic_quintic(1, 1))
    _, params, gains = certify(spec)
    ref = closed_form_gains_ginzburg_landau(1, 1, 1, 1, 1, params)
    assert gains.lam == ref.lam
    for attr in ("p", "q", "r"):
        assert getattr(gains.gamma, attr) == pytest.approx(getattr(ref.gamma, attr), rel=1e-12)


def test_ginzburg_landau_closed_form_without_advection_agrees():
    spec = ProblemSpec(1, 0, 1, 1, 0, 0, 1, Nonlinearity.cubic_quintic(1, 2))
    _, params, gains = certify(spec)
    assert params.k1 > 0
    ref = closed_form_gains_ginzburg_landau(1, 0, 1, 1, 2, params)
    assert relative_deviation(gains, ref) <= 1e-12
