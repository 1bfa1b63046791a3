"""Numerical checks of the certified bounds against simulated trajectories."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import PreconditionError, SolverError
from .model import (
    Field, FieldTerm, InitialProfile, ProblemSpec, ProfileTerm, Signal, SignalTerm, SpaceFactor,
)
from .solver import (
    Grid, SolverOptions, Trajectory, integrate, l2_profile, profile_l2, simulate_full,
    simulate_v, simulate_w, sup_norm_field, sup_norm_signal, transformed_data,
)
from .transform import (
    GainSet, KFunction, MaxEstimateBound, certify, evaluate_iss_bound, max_estimate_bound, tilde_gains,
)

ABS_FLOOR = 1e-12
THREADS_ENV = "ISS_CERTIFY_THREADS"


@dataclass(frozen=True)
class VerificationReport:
    name: str
    passed: bool
    worst_margin: float
    worst_location: tuple
    n_points_checked: int
    tol_rel: float = 0.0
    details: tuple = ()

    def to_dict(self) -> dict:
        loc = [
            None if v is None else int(v) if isinstance(v, (int, np.integer)) else float(v)
            for v in self.worst_location
        ]
        out = {
            "name": self.name,
            "passed": bool(self.passed),
            "worst_margin": float(self.worst_margin),
            "worst_location": loc,
            "n_points_checked": int(self.n_points_checked),
            "tol_rel": float(self.tol_rel),
        }
        if self.details:
            out["details"] = list(self.details)
        return out


def relative_margin(bound, observed):
    """(bound - observed) / bound, with an absolute floor for vanishing bounds."""
    bound = np.asarray(bound, dtype=float)
    return (bound - observed) / np.maximum(bound, ABS_FLOOR)


def _report(name, margins, locations, tol_rel, n_points=None) -> VerificationReport:
    margins = np.asarray(margins, dtype=float)
    if margins.size == 0:
        return VerificationReport(name, True, math.inf, (None, None), 0, tol_rel)
    j = int(np.argmin(margins))
    worst = float(margins[j])
    return VerificationReport(
        name, worst >= -tol_rel, worst, tuple(locations(j)),
        int(margins.size if n_points is None else n_points), tol_rel,
    )


def verify_max_estimate(v_traj: Trajectory, bound: MaxEstimateBound, tol_rel: float = 1e-2) -> VerificationReport:
    """max |v~| over every grid point against the maximum estimate."""
    if v_traj.variable_tag != "v_tilde":
        raise PreconditionError("verify_max_estimate expects a v_tilde trajectory")
    vals = np.abs(v_traj.values)
    margins = relative_margin(bound.value, vals).ravel()
    nx = v_traj.grid.nx
    t, x = v_traj.grid.t, v_traj.grid.x
    return _report("max_estimate", margins, lambda j: (t[j // nx], x[j % nx]), tol_rel)


def verify_w_l2(
    w_traj: Trajectory,
    phi_l2: float,
    lam: float,
    gains_tilde: Sequence[KFunction],
    sups_tilde: Sequence[float],
    tol_rel: float = 1e-2,
) -> VerificationReport:
    """||w~(., t)|| against the Lyapunov bound at every time level.

    ``phi_l2`` is the L2 norm of the transformed initial profile.
    """
    if w_traj.variable_tag != "w_tilde":
        raise PreconditionError("verify_w_l2 expects a w_tilde trajectory")
    t, norms = l2_profile(w_traj)
    g, g0, g1 = gains_tilde
    sf, s0, s1 = sups_tilde
    bound = phi_l2 * np.exp(-lam * t) + g(sf) + g0(s0) + g1(s1)
    margins = relative_margin(bound, norms)
    return _report("w_l2", margins, lambda j: (t[j], None), tol_rel)


def verify_iss(
    u_traj: Trajectory, gains: GainSet, phi_l2: float, sups: Sequence[float], tol_rel: float = 1e-2
) -> VerificationReport:
    """||u(., t)|| against the certified ISS bound at every time level."""
    if u_traj.variable_tag != "u":
        raise PreconditionError("verify_iss expects a u trajectory")
    t, norms = l2_profile(u_traj)
    bound = evaluate_iss_bound(gains, phi_l2, sups[0], sups[1], sups[2], t)
    margins = relative_margin(bound, norms)
    return _report("iss", margins, lambda j: (t[j], None), tol_rel)


def verify_superposition(
    u_traj: Trajectory, v_traj: Trajectory, w_traj: Trajectory, a: float, b: float, tol_abs: Optional[float] = None
) -> VerificationReport:
    """max |u - exp(bx/2a)(v~ + w~)| over the grid against ``tol_abs``."""
    grid = u_traj.grid
    if v_traj.grid != grid or w_traj.grid != grid:
        raise PreconditionError("trajectories live on different grids")
    if tol_abs is None:
        tol_abs = 100.0 * (grid.dx**2 + grid.dt)
    weight = np.exp(b * grid.x / (2.0 * a))
    err = np.abs(u_traj.values - weight[None, :] * (v_traj.values + w_traj.values)).ravel()
    margins = (tol_abs - err) / tol_abs
    nx = grid.nx
    t, x = grid.t, grid.x
    return _report("superposition", margins, lambda j: (t[j // nx], x[j % nx]), 0.0)


def agmon_check(x, values, point: float, slack: float = 1e-8) -> bool:
    """Trace inequality u(c)^2 <= 2/(q-p) ||u||^2 + (q-p) ||u_x||^2 on [p, q]."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(values, dtype=float)
    if x.size < 5:
        raise PreconditionError("need at least 5 nodes")
    p, q = x[0], x[-1]
    if not p <= point <= q:
        raise PreconditionError("point outside the sampled interval")
    h = x[1] - x[0]
    length = q - p
    ux = np.gradient(u, h, edge_order=2)
    lhs = float(np.interp(point, x, u)) ** 2
    rhs = 2.0 / length * integrate(u * u, h) + length * integrate(ux * ux, h)
    return bool(lhs <= rhs + slack)


# ---------------------------------------------------------------------------
# exact-solution oracles and convergence
# ---------------------------------------------------------------------------


def exact_solution(spec: ProblemSpec) -> Optional[Callable]:
    """Closed-form solution for homogeneous Dirichlet data and a sine initial profile.

    Covers phi(x) = exp(b x / 2a) sum_k A_k sin(k pi x) with h = 0, f = 0,
    d0 = d1 = 0 and beta0 = beta1 = 0; returns None otherwise.
    """
    if spec.beta0 != 0 or spec.beta1 != 0:
        return None
    if not (spec.h.is_zero and spec.f.is_zero and spec.d0.is_zero and spec.d1.is_zero):
        return None
    shift = spec.b / (2.0 * spec.a)
    if not math.isclose(spec.phi.weight, shift, rel_tol=0, abs_tol=1e-15):
        return None
    modes = []
    for term in spec.phi.terms:
        if term.kind != "sine_mode":
            if any(term.coeffs):
                return None
            continue
        modes.append((term.A, term.k))
    c_t = spec.c_tilde

    def u(x, t):
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        out = 0.0
        for A, k in modes:
            rate = spec.a * (k * math.pi) ** 2 + c_t
            out = out + A * np.exp(-rate * t) * np.sin(k * math.pi * x)
        return np.exp(shift * x) * out

    return u


def convergence_study(spec: ProblemSpec, grids: Sequence[Grid], opts: SolverOptions = SolverOptions()):
    """Final-time max-norm errors against the exact solution and observed orders.

    Returns ``[(dx, error, order)]`` with ``order`` None for the first grid.
    """
    u_exact = exact_solution(spec)
    if u_exact is None:
        raise PreconditionError("no exact-solution oracle registered for this problem")
    rows = []
    for grid in grids:
        traj = simulate_full(spec, grid, opts)
        err = float(np.max(np.abs(traj.values[-1] - u_exact(grid.x, grid.t_final))))
        order = None
        if rows:
            dx0, e0, _ = rows[-1]
            order = math.log(e0 / err) / math.log(dx0 / grid.dx)
        rows.append((grid.dx, err, order))
    return rows


# ---------------------------------------------------------------------------
# randomized scenario suites
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScenarioFamilies:
    """Sampling ranges for random disturbances and initial profiles.

    Amplitudes are log-uniform. Boundary data start at zero (sine terms and
    ``A (exp(-r t) - 1)`` ramps) and phi is corrected to satisfy the
    homogeneous flux conditions, so every draw is compatible at t = 0.
    """

    amplitude: tuple = (1e-2, 10.0)
    phi_amplitude: tuple = (1e-2, 10.0)
    omega: tuple = (0.5, 10.0)
    rate: tuple = (0.5, 5.0)
    f_terms: int = 2
    d_terms: int = 2
    phi_modes: int = 3
    max_wavenumber: int = 3
    use_f: bool = True
    use_d0: bool = True
    use_d1: bool = True
    use_phi: bool = True

    @classmethod
    def for_spec(cls, spec: ProblemSpec, **changes) -> "ScenarioFamilies":
        """Default ranges, narrowed for nonlinear problems so that the explicit
        nonlinear step bound holds on practical grids."""
        base = cls() if spec.h.is_zero else cls(amplitude=(1e-2, 1.0), phi_amplitude=(1e-2, 1.0))
        return replace(base, **changes)

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


@dataclass(frozen=True)
class ScenarioSuite:
    base_spec: ProblemSpec
    n_trials: int
    seed: int
    families: ScenarioFamilies = field(default_factory=ScenarioFamilies)


def _log_uniform(rng, bounds):
    lo, hi = bounds
    return float(math.exp(rng.uniform(math.log(lo), math.log(hi))))


def _boundary_signal(rng, fam: ScenarioFamilies) -> Signal:
    terms = []
    for _ in range(fam.d_terms):
        A = _log_uniform(rng, fam.amplitude) * rng.choice([-1.0, 1.0])
        if rng.uniform() < 0.7:
            terms.append(SignalTerm("sinusoid", A, omega=float(rng.uniform(*fam.omega))))
        else:
            r = float(rng.uniform(*fam.rate))
            terms += [SignalTerm("decaying_exp", A, rate=r), SignalTerm("constant", -A)]
    return Signal(tuple(terms))


def _source_field(rng, fam: ScenarioFamilies) -> Field:
    terms = []
    for _ in range(fam.f_terms):
        A = _log_uniform(rng, fam.amplitude) * rng.choice([-1.0, 1.0])
        k = int(rng.integers(1, fam.max_wavenumber + 1))
        if rng.uniform() < 0.5:
            time = SignalTerm("sinusoid", A, omega=float(rng.uniform(*fam.omega)), phase=float(rng.uniform(0, 2 * math.pi)))
        else:
            time = SignalTerm("constant", A)
        space = SpaceFactor("sine_mode", k=k) if rng.uniform() < 0.7 else SpaceFactor("polynomial", (1.0, -1.0))
        terms.append(FieldTerm(space, time))
    return Field(tuple(terms))


def _initial_profile(rng, fam: ScenarioFamilies, spec: ProblemSpec) -> InitialProfile:
    terms = []
    slope0 = slope1 = 0.0
    for _ in range(fam.phi_modes):
        A = _log_uniform(rng, fam.phi_amplitude) * rng.choice([-1.0, 1.0])
        k = int(rng.integers(1, fam.max_wavenumber + 1))
        terms.append(ProfileTerm("sine_mode", A=A, k=k))
        slope0 += A * k * math.pi
        slope1 += A * k * math.pi * (-1) ** k
    # sine modes vanish at both ends; cancel the slope on flux sides with
    # x (1 - x)^2 (unit slope at 0) and x^2 (x - 1) (unit slope at 1)
    if spec.beta0 > 0:
        terms.append(ProfileTerm("polynomial", coeffs=(0.0, -slope0, 2 * slope0, -slope0)))
    if spec.beta1 > 0:
        terms.append(ProfileTerm("polynomial", coeffs=(0.0, 0.0, slope1, -slope1)))
    return InitialProfile(tuple(terms))


def draw_scenario(suite: ScenarioSuite, trial: int) -> ProblemSpec:
    """Deterministic scenario for ``(suite.seed, trial)``."""
    rng = np.random.default_rng([suite.seed, trial])
    fam = suite.families
    spec = suite.base_spec
    f = _source_field(rng, fam) if fam.use_f else Field()
    d0 = _boundary_signal(rng, fam) if fam.use_d0 else Signal()
    d1 = _boundary_signal(rng, fam) if fam.use_d1 else Signal()
    phi = _initial_profile(rng, fam, spec) if fam.use_phi else InitialProfile()
    return spec.replace(f=f, d0=d0, d1=d1, phi=phi)


ALL_CHECKS = ("iss", "max_estimate", "w_l2", "superposition")


def run_trial(
    spec: ProblemSpec,
    grid: Grid,
    opts: SolverOptions = SolverOptions(),
    tol_rel: float = 1e-2,
    checks: Sequence[str] = ALL_CHECKS,
    overrides: Optional[dict] = None,
) -> list:
    """Simulate one scenario and run the requested checks on it."""
    unknown = set(checks) - set(ALL_CHECKS)
    if unknown:
        raise PreconditionError(f"unknown checks {sorted(unknown)}")
    tspec, params, gains = certify(spec, overrides)
    T = grid.t_final
    reports = []
    u = None
    if "iss" in checks or "superposition" in checks:
        u = simulate_full(spec, grid, opts)
    if "iss" in checks:
        sups = (sup_norm_field(spec.f, T), sup_norm_signal(spec.d0, T), sup_norm_signal(spec.d1, T))
        reports.append(verify_iss(u, gains, profile_l2(spec.phi), sups, tol_rel))
    split = {"max_estimate", "w_l2", "superposition"} & set(checks)
    if split:
        f_t, d0_t, d1_t, phi_t = transformed_data(spec, tspec)
        sups_t = (sup_norm_field(f_t, T), sup_norm_signal(d0_t, T), sup_norm_signal(d1_t, T))
        v = simulate_v(tspec, params, f_t, d0_t, d1_t, grid, opts)
        if "max_estimate" in checks:
            reports.append(verify_max_estimate(v, max_estimate_bound(tspec, params, *sups_t), tol_rel))
        if {"w_l2", "superposition"} & set(checks):
            w = simulate_w(tspec, params, spec.h, v, phi_t, grid, opts)
            if "w_l2" in checks:
                tg = tilde_gains(tspec, params, spec.h)
                reports.append(verify_w_l2(w, profile_l2(phi_t), params.lam, tg.as_tuple(), sups_t, tol_rel))
            if "superposition" in checks:
                reports.append(verify_superposition(u, v, w, spec.a, spec.b))
    return reports


def _threads_from_env() -> int:
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise PreconditionError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(n, 0)


def run_scenario_suite(
    suite: ScenarioSuite,
    grid: Grid,
    opts: SolverOptions = SolverOptions(),
    tol_rel: float = 1e-2,
    checks: Sequence[str] = ALL_CHECKS,
    workers: Optional[int] = None,
) -> VerificationReport:
    """Run every trial of ``suite`` and reduce to one report.

    ``workers`` of 0 runs sequentially; None reads ISS_CERTIFY_THREADS.
    Trials draw from per-trial random streams, so the result does not depend
    on the number of workers.
    """
    if workers is None:
        workers = _threads_from_env()

    def one(trial):
        spec = draw_scenario(suite, trial)
        try:
            return run_trial(spec, grid, opts, tol_rel, checks)
        except SolverError as exc:
            raise SolverError(exc.kind, f"trial {trial}: {exc}", exc.step) from exc

    trials = range(suite.n_trials)
    if workers > 0 and suite.n_trials > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, trials))
    else:
        results = [one(k) for k in trials]

    details = []
    worst = math.inf
    worst_loc = (None, None, None)
    n_points = 0
    passed = True
    for k, reports in enumerate(results):
        entry = {"trial": k, "passed": all(r.passed for r in reports), "checks": [r.to_dict() for r in reports]}
        details.append(entry)
        for r in reports:
            passed = passed and r.passed
            n_points += r.n_points_checked
            if r.worst_margin < worst:
                worst = r.worst_margin
                worst_loc = (k,) + tuple(r.worst_location)
    if not results:
        worst = 0.0
    return VerificationReport("scenario_suite", passed, worst, worst_loc, n_points, tol_rel, tuple(details))
