"""Problem description and the structural checks that precede a certificate.

The system handled here is

    u_t - a u_xx + b u_x + c u + h(u) = f(x, t)      on (0, 1) x (0, inf)
    alpha0 u(0, t) - beta0 u_x(0, t) = d0(t)
    alpha1 u(1, t) + beta1 u_x(1, t) = d1(t)
    u(x, 0) = phi(x)

Disturbances and the initial profile are finite sums of closed-form terms so
that values, derivatives and sup-norms can be evaluated exactly where needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

# ---------------------------------------------------------------------------
# nonlinearity
# ---------------------------------------------------------------------------

NONLINEARITY_KINDS = ("zero", "polynomial_odd", "cubic_quintic", "custom")


@dataclass(frozen=True)
class Nonlinearity:
    """Scalar nonlinearity h with h(0) = 0.

    Built-in kinds are odd polynomials ``h(s) = sum_i mu_i s**(2i+1)``; the
    ``custom`` kind wraps user callables and is only checked by sampling.
    """

    kind: str = "zero"
    coeffs: tuple = ()
    c2: float = 0.0
    c3: float = 0.0
    _value: Optional[Callable] = field(default=None, compare=False, repr=False)
    _derivative: Optional[Callable] = field(default=None, compare=False, repr=False)
    name: str = ""

    def __post_init__(self):
        if self.kind not in NONLINEARITY_KINDS:
            raise ValueError(f"unknown nonlinearity kind {self.kind!r}")
        if self.kind == "custom" and (self._value is None or self._derivative is None):
            raise ValueError("custom nonlinearity needs value and derivative callables")
        if self.kind == "polynomial_odd":
            object.__setattr__(self, "coeffs", tuple(float(m) for m in self.coeffs))

    @classmethod
    def zero(cls) -> "Nonlinearity":
        return cls("zero")

    @classmethod
    def polynomial_odd(cls, coeffs: Sequence[float]) -> "Nonlinearity":
        return cls("polynomial_odd", coeffs=tuple(coeffs))

    @classmethod
    def cubic_quintic(cls, c2: float, c3: float) -> "Nonlinearity":
        return cls("cubic_quintic", c2=float(c2), c3=float(c3))

    @classmethod
    def custom(cls, value: Callable, derivative: Callable, name: str = "custom") -> "Nonlinearity":
        return cls("custom", _value=value, _derivative=derivative, name=name)

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero" or (
            self.kind == "polynomial_odd" and not any(self.coeffs)
        )

    def odd_coefficients(self) -> np.ndarray:
        """Coefficients mu_i of s**(2i+1); raises for the custom kind."""
        if self.kind == "zero":
            return np.zeros(0)
        if self.kind == "polynomial_odd":
            return np.asarray(self.coeffs, dtype=float)
        if self.kind == "cubic_quintic":
            return np.array([0.0, self.c2, self.c3])
        raise TypeError("custom nonlinearity has no polynomial coefficients")

    def value(self, s):
        if self.kind == "custom":
            return self._value(s)
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        mu = self.odd_coefficients()
        s2 = s * s
        power = s.copy()
        for m in mu:
            out = out + m * power
            power = power * s2
        return out if out.ndim else float(out)

    def derivative(self, s):
        if self.kind == "custom":
            return self._derivative(s)
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        s2 = s * s
        power = np.ones_like(s)
        for i, m in enumerate(self.odd_coefficients()):
            out = out + (2 * i + 1) * m * power
            power = power * s2
        return out if out.ndim else float(out)

    def __call__(self, s):
        return self.value(s)

    def descriptor(self) -> dict:
        if self.kind == "polynomial_odd":
            return {"kind": self.kind, "coeffs": list(self.coeffs)}
        if self.kind == "cubic_quintic":
            return {"kind": self.kind, "c2": self.c2, "c3": self.c3}
        if self.kind == "custom":
            return {"kind": self.kind, "name": self.name}
        return {"kind": "zero"}


# ---------------------------------------------------------------------------
# time signals, fields, initial profiles
# ---------------------------------------------------------------------------

SIGNAL_KINDS = ("constant", "sinusoid", "decaying_exp")


@dataclass(frozen=True)
class SignalTerm:
    """One of ``A``, ``A sin(omega t + phase)`` or ``A exp(-rate t)``."""

    kind: str
    A: float
    omega: float = 0.0
    phase: float = 0.0
    rate: float = 0.0

    def __post_init__(self):
        if self.kind not in SIGNAL_KINDS:
            raise ValueError(f"unknown signal term kind {self.kind!r}")

    def value(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            return np.full_like(t, self.A)
        if self.kind == "sinusoid":
            return self.A * np.sin(self.omega * t + self.phase)
        return self.A * np.exp(-self.rate * t)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            return np.zeros_like(t)
        if self.kind == "sinusoid":
            return self.A * self.omega * np.cos(self.omega * t + self.phase)
        return -self.rate * self.A * np.exp(-self.rate * t)

    def scaled(self, k: float) -> "SignalTerm":
        return SignalTerm(self.kind, self.A * k, self.omega, self.phase, self.rate)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "A": self.A}
        if self.kind == "sinusoid":
            out.update(omega=self.omega, phase=self.phase)
        elif self.kind == "decaying_exp":
            out["rate"] = self.rate
        return out


def _scalar(v):
    return float(v) if np.ndim(v) == 0 else v


@dataclass(frozen=True)
class Signal:
    """Finite sum of :class:`SignalTerm`; the empty sum is the zero signal."""

    terms: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))

    def value(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for term in self.terms:
            out = out + term.value(t)
        return _scalar(out)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for term in self.terms:
            out = out + term.derivative(t)
        return _scalar(out)

    def __call__(self, t):
        return self.value(t)

    def scaled(self, k: float) -> "Signal":
        return Signal(tuple(term.scaled(k) for term in self.terms))

    def max_frequency(self) -> float:
        return max((abs(term.omega) for term in self.terms if term.kind == "sinusoid"), default=0.0)

    def max_rate(self) -> float:
        return max((abs(term.rate) for term in self.terms if term.kind == "decaying_exp"), default=0.0)

    @property
    def is_zero(self) -> bool:
        return all(term.A == 0.0 for term in self.terms)

    def to_dict(self) -> dict:
        return {"terms": [term.to_dict() for term in self.terms]}


@dataclass(frozen=True)
class SpaceFactor:
    """Spatial factor of a separable field term: polynomial or sin(k pi x)."""

    kind: str
    coeffs: tuple = ()
    k: int = 1

    def __post_init__(self):
        if self.kind not in ("polynomial", "sine_mode"):
            raise ValueError(f"unknown space factor kind {self.kind!r}")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    def value(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "sine_mode":
            return np.sin(self.k * math.pi * x)
        return np.polynomial.polynomial.polyval(x, self.coeffs) if self.coeffs else np.zeros_like(x)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "sine_mode":
            return self.k * math.pi * np.cos(self.k * math.pi * x)
        if len(self.coeffs) < 2:
            return np.zeros_like(x)
        return np.polynomial.polynomial.polyval(x, np.polynomial.polynomial.polyder(self.coeffs))

    def to_dict(self) -> dict:
        if self.kind == "sine_mode":
            return {"kind": "sine_mode", "k": self.k}
        return {"kind": "polynomial", "coeffs": list(self.coeffs)}


@dataclass(frozen=True)
class FieldTerm:
    space: SpaceFactor
    time: SignalTerm


@dataclass(frozen=True)
class Field:
    """In-domain disturbance ``exp(weight x) * sum_k X_k(x) T_k(t)``.

    ``weight`` is 0 for user-supplied fields; transformed fields carry the
    exponential factor of the advection-removing change of variables.
    """

    terms: tuple = ()
    weight: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))

    def value(self, x, t):
        x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
        out = np.zeros(x.shape)
        for term in self.terms:
            out = out + term.space.value(x) * term.time.value(t)
        if self.weight:
            out = out * np.exp(self.weight * x)
        return _scalar(out)

    def __call__(self, x, t):
        return self.value(x, t)

    def grid_values(self, x, t) -> np.ndarray:
        """Values on the tensor grid, shape ``(len(t), len(x))``."""
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        out = np.zeros((t.size, x.size))
        for term in self.terms:
            out += np.outer(term.time.value(t), term.space.value(x))
        if self.weight:
            out *= np.exp(self.weight * x)[None, :]
        return out

    def weighted(self, rate: float) -> "Field":
        return Field(self.terms, self.weight + rate)

    def max_frequency(self) -> float:
        return max((abs(t.time.omega) for t in self.terms if t.time.kind == "sinusoid"), default=0.0)

    def max_wavenumber(self) -> int:
        return max((t.space.k for t in self.terms if t.space.kind == "sine_mode"), default=0)

    @property
    def is_zero(self) -> bool:
        return all(term.time.A == 0.0 for term in self.terms)

    def to_dict(self) -> dict:
        return {
            "terms": [{"space": t.space.to_dict(), "time": t.time.to_dict()} for t in self.terms]
        }


@dataclass(frozen=True)
class ProfileTerm:
    """``polynomial(coeffs)`` or ``A sin(k pi x)``."""

    kind: str
    coeffs: tuple = ()
    A: float = 0.0
    k: int = 1

    def __post_init__(self):
        if self.kind not in ("polynomial", "sine_mode"):
            raise ValueError(f"unknown profile term kind {self.kind!r}")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    def value(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "sine_mode":
            return self.A * np.sin(self.k * math.pi * x)
        return np.polynomial.polynomial.polyval(x, self.coeffs) if self.coeffs else np.zeros_like(x)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "sine_mode":
            return self.A * self.k * math.pi * np.cos(self.k * math.pi * x)
        if len(self.coeffs) < 2:
            return np.zeros_like(x)
        return np.polynomial.polynomial.polyval(x, np.polynomial.polynomial.polyder(self.coeffs))

    def to_dict(self) -> dict:
        if self.kind == "sine_mode":
            return {"kind": "sine_mode", "A": self.A, "k": self.k}
        return {"kind": "polynomial", "coeffs": list(self.coeffs)}


@dataclass(frozen=True)
class InitialProfile:
    """Initial value ``exp(weight x) * sum_k P_k(x)``."""

    terms: tuple = ()
    weight: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))

    def value(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for term in self.terms:
            out = out + term.value(x)
        if self.weight:
            out = out * np.exp(self.weight * x)
        return _scalar(out)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        base = np.zeros_like(x)
        dbase = np.zeros_like(x)
        for term in self.terms:
            base = base + term.value(x)
            dbase = dbase + term.derivative(x)
        if self.weight:
            w = np.exp(self.weight * x)
            dbase = w * (dbase + self.weight * base)
        return _scalar(dbase)

    def __call__(self, x):
        return self.value(x)

    def weighted(self, rate: float) -> "InitialProfile":
        return InitialProfile(self.terms, self.weight + rate)

    @property
    def is_zero(self) -> bool:
        return all(
            (t.A == 0.0) if t.kind == "sine_mode" else not any(t.coeffs) for t in self.terms
        )

    def to_dict(self) -> dict:
        return {"terms": [t.to_dict() for t in self.terms]}


# ---------------------------------------------------------------------------
# problem and reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProblemSpec:
    a: float
    b: float
    c: float
    alpha0: float
    beta0: float
    alpha1: float
    beta1: float
    h: Nonlinearity = field(default_factory=Nonlinearity.zero)
    f: Field = field(default_factory=Field)
    d0: Signal = field(default_factory=Signal)
    d1: Signal = field(default_factory=Signal)
    phi: InitialProfile = field(default_factory=InitialProfile)

    def __post_init__(self):
        for name in ("a", "b", "c", "alpha0", "beta0", "alpha1", "beta1"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
            object.__setattr__(self, name, v)

    @property
    def c_tilde(self) -> float:
        return self.b * self.b / (4.0 * self.a) + self.c

    def alpha(self, i: int) -> float:
        return self.alpha0 if i == 0 else self.alpha1

    def beta(self, i: int) -> float:
        return self.beta0 if i == 0 else self.beta1

    def d(self, i: int) -> Signal:
        return self.d0 if i == 0 else self.d1

    def replace(self, **changes) -> "ProblemSpec":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""
    worst_point: Optional[tuple] = None

    def to_dict(self) -> dict:
        out = {"name": self.name, "passed": bool(self.passed), "detail": self.detail}
        if self.worst_point is not None:
            out["worst_point"] = [float(v) for v in self.worst_point]
        return out


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "checks", tuple(self.checks))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def names(self):
        return [c.name for c in self.checks]

    def failed(self):
        return [c for c in self.checks if not c.passed]

    def __add__(self, other: "ValidationReport") -> "ValidationReport":
        return ValidationReport(self.checks + other.checks)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [c.to_dict() for c in self.checks]}


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------

TOL_NONLINEARITY = 1e-12
TOL_COMPAT_DIRICHLET = 1e-8
TOL_COMPAT_ROBIN = 1e-10


def tilde_alphas(spec: ProblemSpec) -> tuple[float, float]:
    """Boundary coefficients after removing the advection term."""
    shift = spec.b / (2.0 * spec.a)
    return spec.alpha0 - shift * spec.beta0, spec.alpha1 + shift * spec.beta1


def validate_structure(spec: ProblemSpec) -> ValidationReport:
    """Coefficient assumptions and the boundary structural conditions."""
    checks = [Check("a_positive", spec.a > 0, f"a = {spec.a:g}")]
    if spec.a <= 0:
        # tilde quantities are undefined without a > 0
        return ValidationReport(checks)
    c_t = spec.c_tilde
    checks.append(Check("c_tilde_positive", c_t > 0, f"b^2/(4a) + c = {c_t:g}"))
    for i in (0, 1):
        al, be = spec.alpha(i), spec.beta(i)
        checks.append(
            Check(f"boundary{i}_nonnegative", al >= 0 and be >= 0, f"alpha{i} = {al:g}, beta{i} = {be:g}")
        )
        checks.append(Check(f"boundary{i}_nondegenerate", al + be > 0, f"alpha{i} + beta{i} = {al + be:g}"))

    for i, al_t in enumerate(tilde_alphas(spec)):
        be = spec.beta(i)
        name = f"structural_boundary{i}"
        if be > 0 and al_t <= 0:
            ratio = al_t / be
            first = -4.0 * ratio < c_t
            second = -ratio <= spec.a
            detail = (
                f"-4*alpha~/beta = {-4 * ratio:g} {'<' if first else '>='} c~ = {c_t:g}; "
                f"-alpha~/beta = {-ratio:g} {'<=' if second else '>'} a = {spec.a:g}"
            )
            checks.append(Check(name, first and second, detail))
        else:
            checks.append(Check(name, True, "not triggered (beta = 0 or alpha~ > 0)"))
    return ValidationReport(checks)


def check_nonlinearity(h: Nonlinearity, c_tilde: float, s_max: float = 10.0, n_samples: int = 2001) -> ValidationReport:
    """Sign conditions on h, analytically where conclusive and by sampling."""
    if s_max <= 0 or n_samples < 3:
        raise ValueError("need s_max > 0 and n_samples >= 3")
    tol = TOL_NONLINEARITY
    checks = []
    h0 = float(h.value(np.array(0.0)))
    checks.append(Check("h_zero_at_origin", h0 == 0.0, f"h(0) = {h0:g}"))

    if h.kind != "custom":
        mu = h.odd_coefficients()
        if np.all(mu >= 0):
            checks.append(
                Check("analytic_coefficients", True, "all odd-power coefficients nonnegative; conditions hold for every s")
            )

    s = np.linspace(-s_max, s_max, n_samples)
    hv = np.asarray(h.value(s), dtype=float)
    habs = np.asarray(h.value(np.abs(s)), dtype=float)
    dh = np.asarray(h.derivative(s), dtype=float)

    def sampled(name, residual, where, text):
        res = np.where(where, residual, np.inf)
        j = int(np.argmin(res))
        ok = bool(res[j] >= -tol)
        checks.append(Check(name, ok, f"{text}; min residual {res[j]:.3e}", (float(s[j]), float(res[j]))))

    sampled("h_abs_plus_h_nonnegative", habs + hv, np.ones_like(s, dtype=bool), "h(|s|) + h(s) >= 0")
    sampled("c_tilde_plus_2dh_nonnegative", c_tilde + 2.0 * dh, s <= 0, "c~ + 2 h'(s) >= 0 for s <= 0")
    sampled("dh_nonnegative_positive_axis", dh, s > 0, "h'(s) >= 0 for s > 0")
    return ValidationReport(checks)


def check_compatibility(spec: ProblemSpec, t_samples: int = 200, t_max: float = 1.0) -> ValidationReport:
    """Corner compatibility between boundary data, the source and phi.

    For a Dirichlet side the boundary datum must solve the boundary ODE
    ``d' + c d + alpha h(d / alpha) = alpha f(i, t)``; for a flux side phi must
    satisfy the homogeneous boundary relation and the datum must vanish at 0.
    """
    if t_samples < 2:
        raise ValueError("t_samples must be >= 2")
    checks = []
    t = np.linspace(0.0, t_max, t_samples + 1)[1:]
    for i in (0, 1):
        al, be = spec.alpha(i), spec.beta(i)
        d = spec.d(i)
        if be == 0:
            if al == 0:
                checks.append(Check(f"compatibility_dirichlet{i}", False, "alpha = beta = 0: boundary is degenerate"))
                continue
            dv = np.asarray(d.value(t))
            res = d.derivative(t) + spec.c * dv + al * np.asarray(spec.h.value(dv / al)) - al * np.asarray(
                spec.f.value(float(i), t)
            )
            j = int(np.argmax(np.abs(res)))
            ok = bool(abs(res[j]) <= TOL_COMPAT_DIRICHLET)
            checks.append(
                Check(
                    f"compatibility_dirichlet{i}",
                    ok,
                    f"max |d' + c d + alpha h(d/alpha) - alpha f| = {abs(res[j]):.3e}",
                    (float(t[j]), float(res[j])),
                )
            )
        else:
            sign = -1.0 if i == 0 else 1.0
            trace = al * spec.phi.value(float(i)) + sign * be * spec.phi.derivative(float(i))
            checks.append(
                Check(
                    f"compatibility_trace{i}",
                    abs(trace) <= TOL_COMPAT_ROBIN,
                    f"alpha phi(i) -/+ beta phi'(i) = {trace:.3e}",
                    (float(i), float(trace)),
                )
            )
            d_at_0 = float(d.value(0.0))
            checks.append(
                Check(
                    f"compatibility_initial_datum{i}",
                    abs(d_at_0) <= TOL_COMPAT_ROBIN,
                    f"d{i}(0) = {d_at_0:.3e}",
                    (0.0, d_at_0),
                )
            )
    return ValidationReport(checks)
