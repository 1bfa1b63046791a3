"""Finite-difference simulation of the full system and its split parts.

Space: uniform nodes, central differences, second-order ghost-node closure of
Robin rows. Time: Crank-Nicolson on the linear operator with the nonlinearity
explicit (Heun average), or implicit Euler; a few implicit Euler start-up
steps damp the Crank-Nicolson response to corner incompatibilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import PreconditionError, SolverError
from .model import Field, InitialProfile, Nonlinearity, ProblemSpec, Signal
from .transform import SplitParams, TransformedSpec

BLOWUP_LIMIT = 1e12


@dataclass(frozen=True)
class Grid:
    nx: int
    nt: int
    t_final: float

    def __post_init__(self):
        if self.nx < 3:
            raise PreconditionError("nx must be >= 3")
        if self.nt < 2:
            raise PreconditionError("nt must be >= 2")
        if not self.t_final > 0:
            raise PreconditionError("t_final must be > 0")

    @property
    def dx(self) -> float:
        return 1.0 / (self.nx - 1)

    @property
    def dt(self) -> float:
        return self.t_final / self.nt

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.nx)

    @property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, self.t_final, self.nt + 1)


@dataclass(frozen=True)
class SolverOptions:
    scheme: str = "imex_cn"
    newton_free: bool = True
    dt_safety: float = 1.0
    startup_steps: int = 2

    def __post_init__(self):
        if self.scheme not in ("imex_cn", "implicit_euler"):
            raise PreconditionError(f"unknown scheme {self.scheme!r}")
        if not 0 < self.dt_safety <= 1:
            raise PreconditionError("dt_safety must lie in (0, 1]")
        if not self.newton_free:
            raise PreconditionError("only explicit treatment of the nonlinearity is implemented")


TAGS = ("u", "u_tilde", "v_tilde", "w_tilde", "v", "w")


@dataclass(frozen=True, eq=False)
class Trajectory:
    grid: Grid
    values: np.ndarray
    variable_tag: str

    def __post_init__(self):
        if self.variable_tag not in TAGS:
            raise ValueError(f"unknown tag {self.variable_tag!r}")
        self.values.setflags(write=False)

    @property
    def x(self):
        return self.grid.x

    @property
    def t(self):
        return self.grid.t


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------


def _operator(nx, a, b, c, alpha0, beta0, alpha1, beta1):
    """Rows of the semi-discrete operator and Robin data multipliers."""
    dx = 1.0 / (nx - 1)
    diff = a / dx**2
    adv = b / (2.0 * dx)
    low = np.full(nx, diff + adv)
    diag = np.full(nx, -2.0 * diff - c)
    up = np.full(nx, diff - adv)
    low[0] = 0.0
    up[-1] = 0.0
    g0 = g1 = 0.0
    if beta0 > 0:
        diag[0] = -2.0 * diff - 2.0 * a * alpha0 / (beta0 * dx) - b * alpha0 / beta0 - c
        up[0] = 2.0 * diff
        g0 = 2.0 * a / (beta0 * dx) + b / beta0
    else:
        diag[0] = up[0] = 0.0
    if beta1 > 0:
        diag[-1] = -2.0 * diff - 2.0 * a * alpha1 / (beta1 * dx) + b * alpha1 / beta1 - c
        low[-1] = 2.0 * diff
        g1 = 2.0 * a / (beta1 * dx) - b / beta1
    else:
        diag[-1] = low[-1] = 0.0
    return low, diag, up, g0, g1


def _boundary_series(alpha, beta, data):
    """Dirichlet node values, or the raw Robin datum."""
    if beta > 0:
        return np.ascontiguousarray(data, dtype=float)
    if alpha <= 0:
        raise PreconditionError("degenerate boundary: alpha = beta = 0")
    return np.ascontiguousarray(data / alpha, dtype=float)


def _run(grid, opts, a, b, c, alphas, betas, data0, data1, F, u0, mu, w_in, w_out, S):
    low, diag, up, g0, g1 = _operator(grid.nx, a, b, c, alphas[0], betas[0], alphas[1], betas[1])
    theta = 0.5 if opts.scheme == "imex_cn" else 1.0
    startup = opts.startup_steps if opts.scheme == "imex_cn" else 0
    has_source = F is not None
    has_shift = S is not None
    values, status, step = _kernels.march(
        low, diag, up,
        betas[0] == 0, betas[1] == 0, g0, g1,
        _boundary_series(alphas[0], betas[0], data0),
        _boundary_series(alphas[1], betas[1], data1),
        np.ascontiguousarray(F) if has_source else np.zeros((1, 1)), has_source,
        np.ascontiguousarray(u0, dtype=float), np.ascontiguousarray(mu, dtype=float),
        np.ascontiguousarray(w_in), np.ascontiguousarray(w_out),
        np.ascontiguousarray(S) if has_shift else np.zeros((1, 1)), has_shift,
        theta, startup, True, grid.dt, abs(c), opts.dt_safety, BLOWUP_LIMIT,
    )
    if status == _kernels.BLOWUP:
        raise SolverError("instability", f"solution exceeded {BLOWUP_LIMIT:g} or became non-finite", step)
    if status == _kernels.SINGULAR:
        raise SolverError("singular_row", "vanishing pivot in the tridiagonal system", step)
    if status == _kernels.DT_GUARD:
        raise SolverError(
            "dt_guard",
            f"dt = {grid.dt:g} exceeds the explicit nonlinear step bound at step {step}; increase nt",
            step,
        )
    return values


def _odd_coeffs(h: Nonlinearity) -> np.ndarray:
    if h.kind == "custom":
        raise PreconditionError("the solver supports the built-in odd-polynomial nonlinearities only")
    return h.odd_coefficients()


def simulate_full(spec: ProblemSpec, grid: Grid, opts: SolverOptions = SolverOptions()) -> Trajectory:
    x, t = grid.x, grid.t
    F = None if spec.f.is_zero else spec.f.grid_values(x, t)
    ones = np.ones(grid.nx)
    values = _run(
        grid, opts, spec.a, spec.b, spec.c,
        (spec.alpha0, spec.alpha1), (spec.beta0, spec.beta1),
        np.asarray(spec.d0.value(t)), np.asarray(spec.d1.value(t)),
        F, spec.phi.value(x), _odd_coeffs(spec.h), ones, ones, None,
    )
    return Trajectory(grid, values, "u")


def transformed_data(spec: ProblemSpec, tspec: TransformedSpec):
    """(f~, d~0, d~1, phi~) of the advection-free system."""
    rate = -tspec.shift
    return (
        spec.f.weighted(rate),
        spec.d0,
        spec.d1.scaled(math.exp(rate)),
        spec.phi.weighted(rate),
    )


def simulate_v(
    tspec: TransformedSpec,
    params: SplitParams,
    f_tilde: Field,
    d0_tilde: Signal,
    d1_tilde: Signal,
    grid: Grid,
    opts: SolverOptions = SolverOptions(),
) -> Trajectory:
    """Linear part: zero initial data, penalised boundary coefficients alpha~ + k."""
    x, t = grid.x, grid.t
    F = None if f_tilde.is_zero else f_tilde.grid_values(x, t)
    ones = np.ones(grid.nx)
    values = _run(
        grid, opts, tspec.a, 0.0, tspec.c_tilde,
        (tspec.alpha0_tilde + params.k0, tspec.alpha1_tilde + params.k1),
        (tspec.beta0_tilde, tspec.beta1_tilde),
        np.asarray(d0_tilde.value(t)), np.asarray(d1_tilde.value(t)),
        F, np.zeros(grid.nx), np.zeros(0), ones, ones, None,
    )
    return Trajectory(grid, values, "v_tilde")


def simulate_w(
    tspec: TransformedSpec,
    params: SplitParams,
    h: Nonlinearity,
    v_traj: Trajectory,
    phi_tilde: InitialProfile,
    grid: Grid,
    opts: SolverOptions = SolverOptions(),
) -> Trajectory:
    """Nonlinear part driven by v~ through h and the penalty boundary terms."""
    if v_traj.grid != grid:
        raise PreconditionError("v trajectory lives on a different grid")
    if v_traj.variable_tag != "v_tilde":
        raise PreconditionError("expected a v_tilde trajectory")
    x = grid.x
    v = v_traj.values
    w_out = np.exp(tspec.shift * x)
    mu = _odd_coeffs(h)
    values = _run(
        grid, opts, tspec.a, 0.0, tspec.c_tilde,
        (tspec.alpha0_tilde, tspec.alpha1_tilde),
        (tspec.beta0_tilde, tspec.beta1_tilde),
        params.k0 * v[:, 0], params.k1 * v[:, -1],
        None, phi_tilde.value(x), mu, 1.0 / w_out, w_out, v if mu.size else None,
    )
    return Trajectory(grid, values, "w_tilde")


_UNTRANSFORMED = {"u_tilde": "u", "v_tilde": "v", "w_tilde": "w"}


def untransform(traj: Trajectory, a: float, b: float) -> Trajectory:
    """Multiply column j by exp(b x_j / 2a)."""
    if traj.variable_tag not in _UNTRANSFORMED:
        raise PreconditionError(f"cannot untransform a {traj.variable_tag!r} trajectory")
    w = np.exp(b * traj.grid.x / (2.0 * a))
    return Trajectory(traj.grid, traj.values * w[None, :], _UNTRANSFORMED[traj.variable_tag])


def transform(traj: Trajectory, a: float, b: float) -> Trajectory:
    """Inverse of :func:`untransform` for ``u`` trajectories."""
    if traj.variable_tag != "u":
        raise PreconditionError("only u trajectories can be transformed")
    w = np.exp(-b * traj.grid.x / (2.0 * a))
    return Trajectory(traj.grid, traj.values * w[None, :], "u_tilde")


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------


def quadrature_weights(n: int, h: float) -> np.ndarray:
    """Composite Simpson weights on n uniform nodes.

    An odd interval count closes with the 3/8 rule on the last three
    intervals, so cubics are integrated exactly for every n >= 4.
    """
    if n < 2:
        raise PreconditionError("need at least two nodes")
    w = np.zeros(n)
    if n == 2:
        w[:] = h / 2
        return w
    if n == 3:
        w[:] = np.array([1.0, 4.0, 1.0]) * h / 3
        return w
    m = n - 1
    simpson_end = m if m % 2 == 0 else m - 3
    if simpson_end > 0:
        w[0:simpson_end + 1:2] += 2.0
        w[1:simpson_end:2] += 4.0
        w[0] -= 1.0
        w[simpson_end] -= 1.0
        w[: simpson_end + 1] *= h / 3
    if simpson_end < m:
        w[simpson_end:] += np.array([1.0, 3.0, 3.0, 1.0]) * 3 * h / 8
    return w


def integrate(values, h: float) -> np.ndarray:
    """Integral over the last axis of uniformly sampled values."""
    values = np.asarray(values, dtype=float)
    return values @ quadrature_weights(values.shape[-1], h)


def l2_norm(values, h: float):
    return np.sqrt(np.maximum(integrate(np.square(values), h), 0.0))


def l2_profile(traj: Trajectory):
    """``(t, ||traj(., t)||_{L2(0,1)})`` for every stored time level."""
    return traj.grid.t, l2_norm(traj.values, traj.grid.dx)


def _refined_peak(y: np.ndarray, j: int) -> float:
    """Peak of the parabola through the three samples around index j."""
    if j == 0 or j == y.size - 1:
        return float(y[j])
    ym, y0, yp = y[j - 1], y[j], y[j + 1]
    denom = ym - 2.0 * y0 + yp
    if denom >= 0:
        return float(y0)
    return float(max(y0, y0 - 0.125 * (yp - ym) ** 2 / denom))


def _samples_needed(t_final: float, omega: float, rate: float, n: int) -> int:
    per_period = 20.0 * t_final * omega / (2.0 * math.pi)
    per_decay = 20.0 * t_final * rate
    return int(max(n, math.ceil(per_period) + 1, math.ceil(per_decay) + 1))


def sup_norm_signal(s: Signal, t_final: float, n: int = 2001) -> float:
    """sup over [0, t_final] of |s| by dense sampling plus a parabolic peak fit."""
    if n < 2:
        raise PreconditionError("n must be >= 2")
    if s.is_zero:
        return 0.0
    m = _samples_needed(t_final, s.max_frequency(), s.max_rate(), n)
    t = np.linspace(0.0, t_final, m)
    y = np.abs(np.asarray(s.value(t)))
    return _refined_peak(y, int(np.argmax(y)))


def sup_norm_field(f: Field, t_final: float, nx: int = 201, nt: int = 2001) -> float:
    """sup over [0, 1] x [0, t_final] of |f|, refined along both axes."""
    if nx < 2 or nt < 2:
        raise PreconditionError("need nx, nt >= 2")
    if f.is_zero:
        return 0.0
    nx = max(nx, 20 * max(f.max_wavenumber(), 1) + 1)
    nt = _samples_needed(t_final, f.max_frequency(), 0.0, nt)
    x = np.linspace(0.0, 1.0, nx)
    t = np.linspace(0.0, t_final, nt)
    vals = np.abs(f.grid_values(x, t))
    i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
    return max(_refined_peak(vals[:, j], i), _refined_peak(vals[i, :], j))


def profile_l2(phi: InitialProfile, n: int = 4001) -> float:
    """||phi||_{L2(0,1)} on a fine auxiliary grid."""
    x = np.linspace(0.0, 1.0, n)
    return float(l2_norm(np.asarray(phi.value(x)), x[1] - x[0]))
