"""Exponential transform, splitting constants and gain assembly.

The advection term is removed with ``u = exp(b x / 2a) u~``. The transformed
solution is split into a linear part v~ carrying every disturbance and a
nonlinear part w~ carrying phi. A maximum estimate bounds v~, a Lyapunov
argument bounds w~ in L2, and the two are recombined into class-K gains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InfeasibleError, PreconditionError
from .model import Nonlinearity, ProblemSpec, tilde_alphas


@dataclass(frozen=True)
class TransformedSpec:
    a: float
    b: float
    c_tilde: float
    alpha0_tilde: float
    alpha1_tilde: float
    beta0_tilde: float
    beta1_tilde: float

    def alpha_tilde(self, i: int) -> float:
        return self.alpha0_tilde if i == 0 else self.alpha1_tilde

    def beta_tilde(self, i: int) -> float:
        return self.beta0_tilde if i == 0 else self.beta1_tilde

    @property
    def shift(self) -> float:
        """Exponent rate b / 2a of the transform weight."""
        return self.b / (2.0 * self.a)

    @property
    def weight_bound(self) -> float:
        """exp(|b| / 2a), the sup of both transform weights on [0, 1]."""
        return math.exp(abs(self.b) / (2.0 * self.a))


def transform_spec(spec: ProblemSpec) -> TransformedSpec:
    if spec.a <= 0:
        raise PreconditionError(f"a must be > 0, got {spec.a}")
    c_t = spec.c_tilde
    if c_t <= 0:
        raise PreconditionError(f"b^2/(4a) + c must be > 0, got {c_t}")
    a0, a1 = tilde_alphas(spec)
    return TransformedSpec(spec.a, spec.b, c_t, a0, a1, spec.beta0, spec.beta1)


# ---------------------------------------------------------------------------
# splitting constants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SplitParams:
    k0: float
    k1: float
    eps: float
    eps0: float
    eps1: float
    C0: float
    C1: float
    lambda0: float
    lambda1: float
    lam: float
    conditions: tuple = field(default=(), compare=False)

    def k(self, i: int) -> float:
        return self.k0 if i == 0 else self.k1

    def eps_i(self, i: int) -> float:
        return self.eps0 if i == 0 else self.eps1

    def C(self, i: int) -> float:
        return self.C0 if i == 0 else self.C1

    def to_dict(self) -> dict:
        return {
            "k0": self.k0, "k1": self.k1, "eps": self.eps, "eps0": self.eps0, "eps1": self.eps1,
            "C0": self.C0, "C1": self.C1, "lambda0": self.lambda0, "lambda1": self.lambda1,
            "lambda": self.lam,
        }


OVERRIDE_KEYS = ("k0", "k1", "eps", "eps0", "eps1")


def _needs_penalty(tspec: TransformedSpec, i: int) -> bool:
    return not (tspec.alpha_tilde(i) > 0 or tspec.beta_tilde(i) == 0)


def _boundary_constant(tspec: TransformedSpec, i: int, k: float, eps_i: float) -> float:
    be = tspec.beta_tilde(i)
    if be <= 0:
        return 0.0
    return k * eps_i / (2.0 * be) - tspec.alpha_tilde(i) / be


def split_conditions(tspec: TransformedSpec, k, eps, eps_i, C) -> list:
    """Every inequality the splitting constants must satisfy, as (name, ok, detail).

    The flux-side bound in the alpha~_0 <= 0 branch is reported under both the
    symmetric reading (C~_0 <= a) and the literal one (C~_1 <= a); only the
    symmetric reading is binding.
    """
    c_t, a = tspec.c_tilde, tspec.a
    out = []
    for i in (0, 1):
        al = tspec.alpha_tilde(i)
        out.append((f"k{i}_nonnegative", k[i] >= 0, f"k{i} = {k[i]:g}"))
        if _needs_penalty(tspec, i):
            out.append((f"k{i}_penalty", al + k[i] > 0, f"alpha~{i} + k{i} = {al + k[i]:g} > 0"))
        else:
            out.append((f"k{i}_vanishes", k[i] == 0, f"k{i} = {k[i]:g} must be 0 (alpha~{i} > 0 or beta~{i} = 0)"))
        out.append((f"eps{i}_positive", eps_i[i] > 0, f"eps{i} = {eps_i[i]:g}"))
    out.append(("eps_positive", eps > 0, f"eps = {eps:g}"))
    out.append(("decay_base", c_t / 2 + eps / 2 < c_t, f"c~/2 + eps/2 = {c_t / 2 + eps / 2:g} < c~ = {c_t:g}"))
    for i in (0, 1):
        if tspec.beta_tilde(i) > 0 and tspec.alpha_tilde(i) <= 0:
            lhs = 2 * C[i] + c_t / 2 + eps / 2
            out.append((f"decay_boundary{i}", lhs < c_t, f"2 C{i} + c~/2 + eps/2 = {lhs:g} < c~ = {c_t:g}"))
            out.append((f"gradient_boundary{i}", C[i] <= a, f"C{i} = {C[i]:g} <= a = {a:g}"))
            if i == 0:
                out.append(("gradient_boundary0_literal_C1", True, f"literal reading C1 = {C[1]:g} <= a: {C[1] <= a} (informational)"))
    return out


def choose_split_params(tspec: TransformedSpec, overrides: Optional[dict] = None) -> SplitParams:
    """Default splitting constants, optionally replaced by ``overrides``.

    Defaults normalise alpha~_i + k_i = 1 on penalised sides, spend half of the
    structural margin on eps and pin k_i eps_i / (2 beta~_i) = eps / 8.
    """
    overrides = dict(overrides or {})
    unknown = set(overrides) - set(OVERRIDE_KEYS)
    if unknown:
        raise PreconditionError(f"unknown override keys: {sorted(unknown)}")
    c_t, a = tspec.c_tilde, tspec.a

    k = [0.0, 0.0]
    g = [0.0, 0.0]
    for i in (0, 1):
        al, be = tspec.alpha_tilde(i), tspec.beta_tilde(i)
        if _needs_penalty(tspec, i):
            k[i] = 1.0 - al
        if be > 0:
            g[i] = max(0.0, -al / be)
    eps = 0.5 * (c_t / 2.0 - 2.0 * max(g))
    if "eps" in overrides:
        eps = float(overrides["eps"])
    for i in (0, 1):
        key = f"k{i}"
        if key in overrides:
            k[i] = float(overrides[key])

    eps_i = [1.0, 1.0]
    for i in (0, 1):
        be = tspec.beta_tilde(i)
        if k[i] > 0 and be > 0:
            share = eps / 8.0
            if g[i] + share > a and a > g[i]:
                # keep C~_i strictly inside the gradient bound
                share = 0.5 * (a - g[i])
            eps_i[i] = 2.0 * be * share / k[i]
        key = f"eps{i}"
        if key in overrides:
            eps_i[i] = float(overrides[key])

    C = [_boundary_constant(tspec, i, k[i], eps_i[i]) for i in (0, 1)]
    lam_i = [c_t - (2.0 * C[i] + c_t / 2.0 + eps / 2.0) for i in (0, 1)]
    # a side with alpha~ > 0 contributes no boundary term, so the rate is
    # capped by the bulk value c~/2 - eps/2
    lam = min(lam_i[0], lam_i[1], c_t / 2.0 - eps / 2.0)

    conditions = split_conditions(tspec, k, eps, eps_i, C)
    conditions.append(("lambda_positive", lam > 0, f"lambda = {lam:g} > 0"))
    failed = [name for name, ok, _ in conditions if not ok]
    if failed:
        raise InfeasibleError(f"infeasible splitting constants: {', '.join(failed)}", failed)
    return SplitParams(k[0], k[1], eps, eps_i[0], eps_i[1], C[0], C[1], lam_i[0], lam_i[1], lam, tuple(conditions))


def check_split_params(tspec: TransformedSpec, params: SplitParams) -> None:
    """Raise :class:`InfeasibleError` if ``params`` violates any invariant."""
    k = (params.k0, params.k1)
    eps_i = (params.eps0, params.eps1)
    C = tuple(_boundary_constant(tspec, i, k[i], eps_i[i]) for i in (0, 1))
    conditions = split_conditions(tspec, k, params.eps, eps_i, C)
    conditions.append(("lambda_positive", params.lam > 0, f"lambda = {params.lam:g}"))
    for i in (0, 1):
        ok = math.isclose(C[i], params.C(i), rel_tol=1e-12, abs_tol=1e-15)
        conditions.append((f"C{i}_consistent", ok, f"C{i} = {params.C(i):g}, expected {C[i]:g}"))
    failed = [name for name, ok, _ in conditions if not ok]
    if failed:
        raise InfeasibleError(f"invalid splitting constants: {', '.join(failed)}", failed)


# ---------------------------------------------------------------------------
# gains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KFunction:
    """Class-K function ``s -> p s + q h(r s)``."""

    p: float
    q: float
    r: float
    h: Nonlinearity = field(default_factory=Nonlinearity.zero)

    def __call__(self, s):
        return self.value(s)

    def value(self, s):
        s = np.asarray(s, dtype=float)
        out = self.p * s
        if self.q != 0.0:
            out = out + self.q * np.asarray(self.h.value(self.r * s))
        return float(out) if out.ndim == 0 else out

    def coefficients(self) -> dict:
        return {"p": self.p, "q": self.q, "r": self.r}


@dataclass(frozen=True)
class GainSet:
    beta_coeff: float
    lam: float
    gamma: KFunction
    gamma0: KFunction
    gamma1: KFunction
    h: Nonlinearity = field(default_factory=Nonlinearity.zero)

    def bound(self, phi_l2, s_f, s_0, s_1, T):
        return evaluate_iss_bound(self, phi_l2, s_f, s_0, s_1, T)

    def to_record(self) -> dict:
        """Flat coefficient record used by the CLI."""
        return {
            "beta_coeff": self.beta_coeff,
            "lambda": self.lam,
            "gamma": self.gamma.coefficients(),
            "gamma0": self.gamma0.coefficients(),
            "gamma1": self.gamma1.coefficients(),
            "nonlinearity": self.h.descriptor(),
        }

    def coefficient_vector(self) -> np.ndarray:
        vals = [self.beta_coeff, self.lam]
        for g in (self.gamma, self.gamma0, self.gamma1):
            vals += [g.p, g.q, g.r]
        return np.array(vals)


@dataclass(frozen=True)
class TildeGains:
    """L2 gains of the nonlinear part w~ as functions of transformed sups."""

    lam: float
    gamma: KFunction
    gamma0: KFunction
    gamma1: KFunction

    def as_tuple(self):
        return (self.gamma, self.gamma0, self.gamma1)


def _penalty_sum(tspec: TransformedSpec, params: SplitParams) -> float:
    total = 0.0
    for i in (0, 1):
        be = tspec.beta_tilde(i)
        if be > 0 and params.k(i) > 0:
            total += math.sqrt(params.k(i) / (params.lam * be * params.eps_i(i)))
    return total


def _denominators(tspec: TransformedSpec, params: SplitParams) -> tuple[float, float, float]:
    d0 = tspec.alpha0_tilde + params.k0
    d1 = tspec.alpha1_tilde + params.k1
    if d0 <= 0 or d1 <= 0:
        raise PreconditionError(f"alpha~ + k must be positive, got {d0:g}, {d1:g}")
    return tspec.c_tilde, d0, d1


def tilde_gains(tspec: TransformedSpec, params: SplitParams, h: Nonlinearity) -> TildeGains:
    """Gains bounding ||w~(., T)|| by the sups of f~, d~0, d~1.

    Every boundary case is the two-flux-sides formula with the terms of a
    Dirichlet side (beta~ = 0, hence k = 0) dropped.
    """
    E = tspec.weight_bound
    L = _penalty_sum(tspec, params)
    Q = 0.0 if h.is_zero else math.sqrt(1.0 / (params.lam * params.eps))
    out = []
    for D in _denominators(tspec, params):
        r = 0.0 if h.is_zero else E / D
        out.append(KFunction(L / D, Q * E, r, h))
    return TildeGains(params.lam, *out)


def compute_gain_set(spec: ProblemSpec, tspec: TransformedSpec, params: SplitParams) -> GainSet:
    """ISS gains in the original coordinates.

    With E = exp(|b|/2a) and D the maximum-estimate denominators,

        gamma(s)  = E (E s / c~ + G(s))
        gamma0(s) = E (s / D0 + G0(s))
        gamma1(s) = E (s / D1 + G1(s))

    where G, G0, G1 are :func:`tilde_gains`. One factor E covers both the
    back-transform and the weight on the boundary traces; f keeps the second
    factor E on its linear part.
    """
    check_split_params(tspec, params)
    h = spec.h
    E = tspec.weight_bound
    tg = tilde_gains(tspec, params, h)
    c_t, D0, D1 = _denominators(tspec, params)

    def lift(lin: float, g: KFunction) -> KFunction:
        return KFunction(E * (lin + g.p), E * g.q, g.r, h)

    return GainSet(
        beta_coeff=E,
        lam=params.lam,
        gamma=lift(E / c_t, tg.gamma),
        gamma0=lift(1.0 / D0, tg.gamma0),
        gamma1=lift(1.0 / D1, tg.gamma1),
        h=h,
    )


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MaxEstimateBound:
    value: float


def max_estimate_bound(
    tspec: TransformedSpec, params: SplitParams, sup_f_tilde: float, sup_d0_tilde: float, sup_d1_tilde: float
) -> MaxEstimateBound:
    """T-independent bound on max |v~| over the space-time cylinder."""
    if min(sup_f_tilde, sup_d0_tilde, sup_d1_tilde) < 0:
        raise PreconditionError("sup-norms must be nonnegative")
    c_t, D0, D1 = _denominators(tspec, params)
    return MaxEstimateBound(max(sup_f_tilde / c_t, sup_d0_tilde / D0, sup_d1_tilde / D1))


def evaluate_iss_bound(gains: GainSet, phi_l2, sup_f, sup_d0, sup_d1, T):
    """``beta_coeff ||phi|| exp(-lambda T) + gamma(f) + gamma0(d0) + gamma1(d1)``."""
    T = np.asarray(T, dtype=float)
    out = (
        gains.beta_coeff * phi_l2 * np.exp(-gains.lam * T)
        + gains.gamma(sup_f)
        + gains.gamma0(sup_d0)
        + gains.gamma1(sup_d1)
    )
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# worked examples in closed form
# ---------------------------------------------------------------------------


def reaction_diffusion_spec(a: float, b: float, c: float, K1: float, **data) -> ProblemSpec:
    """Linear reaction-diffusion problem, Dirichlet at 0 and u_x = -K1 u + d1 at 1."""
    return ProblemSpec(a, b, c, 1.0, 0.0, K1, 1.0, Nonlinearity.zero(), **data)


def ginzburg_landau_spec(a: float, b: float, c1: float, c2: float, c3: float, **data) -> ProblemSpec:
    """Real Ginzburg-Landau problem, Dirichlet at 0 and Neumann at 1."""
    return ProblemSpec(a, b, c1, 1.0, 0.0, 0.0, 1.0, Nonlinearity.cubic_quintic(c2, c3), **data)


def closed_form_gains_reaction_diffusion(a: float, b: float, c: float, K1: float, eps: float) -> GainSet:
    if a <= 0:
        raise PreconditionError("a must be > 0")
    shift = b / (2 * a)
    if not K1 > abs(shift):
        raise PreconditionError(f"need K1 > |b|/2a = {abs(shift):g}")
    c_t = b * b / (4 * a) + c
    if c_t <= 0:
        raise PreconditionError("need b^2/4a + c > 0")
    if not eps > 0 or not 2 * (K1 + shift) - eps / 2 > 0:
        raise PreconditionError("need eps > 0 and 2(K1 + b/2a) - eps/2 > 0")
    E = math.exp(abs(b) / (2 * a))
    h = Nonlinearity.zero()
    lam = min(c_t / 2 - eps / 2, c_t / 2 + 2 * (K1 + shift) - eps / 2)
    return GainSet(
        beta_coeff=E,
        lam=lam,
        gamma=KFunction(4 * a * math.exp(abs(b) / a) / (b * b + 4 * a * c), 0.0, 0.0, h),
        gamma0=KFunction(E, 0.0, 0.0, h),
        gamma1=KFunction(2 * a * E / (2 * a * K1 + b), 0.0, 0.0, h),
        h=h,
    )


def ginzburg_landau_conditions(a: float, b: float, c1: float) -> tuple[bool, bool]:
    c_t = b * b / (4 * a) + c1
    return (-2 * b / a < c_t, -b / (2 * a) <= a)


def closed_form_gains_ginzburg_landau(a: float, b: float, c1: float, c2: float, c3: float, params: SplitParams) -> GainSet:
    if a <= 0 or c2 <= 0 or c3 <= 0:
        raise PreconditionError("need a, c2, c3 > 0")
    c_t = b * b / (4 * a) + c1
    if c_t <= 0:
        raise PreconditionError("need b^2/4a + c1 > 0")
    if not all(ginzburg_landau_conditions(a, b, c1)):
        raise PreconditionError("need -2b/a < b^2/4a + c1 and -b/2a <= a")
    k1 = params.k1
    if not k1 + b / (2 * a) > 0:
        raise PreconditionError("need k1 + b/2a > 0")
    h = Nonlinearity.cubic_quintic(c2, c3)
    E = math.exp(abs(b) / (2 * a))
    lam = params.lam
    S = math.sqrt(k1 / (lam * params.eps1))
    Q = math.sqrt(1 / (lam * params.eps))
    inv_c = 4 * a / (b * b + 4 * a * c1)
    D = 2 * a / (b + 2 * a * k1)
    E2 = math.exp(abs(b) / a)
    return GainSet(
        beta_coeff=E,
        lam=lam,
        gamma=KFunction(inv_c * E * (E + S), Q * E2, inv_c * E, h),
        gamma0=KFunction(E * (1 + D * S), Q * E2, D * E, h),
        gamma1=KFunction(E * (D * E + S), Q * E2, E, h),
        h=h,
    )


def relative_deviation(x: GainSet, y: GainSet) -> float:
    """Largest coefficientwise relative difference between two gain sets."""
    u, v = x.coefficient_vector(), y.coefficient_vector()
    scale = np.maximum(np.abs(u), np.abs(v))
    diff = np.abs(u - v)
    rel = np.where(scale > 0, diff / np.where(scale > 0, scale, 1.0), 0.0)
    return float(rel.max())


def certify(spec: ProblemSpec, overrides: Optional[dict] = None):
    """Transform, split and assemble in one call; returns (tspec, params, gains)."""
    tspec = transform_spec(spec)
    params = choose_split_params(tspec, overrides)
    return tspec, params, compute_gain_set(spec, tspec, params)
