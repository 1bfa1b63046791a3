"""Command-line front end: JSON configs in, JSON reports, CSV trajectories and PNG figures out.

Exit codes: 0 pass, 1 verification failure, 2 usage or config error, 3 solver fault.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from .errors import ConfigError, InfeasibleError, IssCertifyError, PreconditionError, SolverError
from .model import (
    Field, FieldTerm, InitialProfile, Nonlinearity, ProblemSpec, ProfileTerm, Signal, SignalTerm, SpaceFactor,
    check_compatibility, check_nonlinearity, validate_structure,
)
from .solver import (
    Grid, SolverOptions, Trajectory, l2_profile, profile_l2, simulate_full, simulate_v, simulate_w,
    sup_norm_field, sup_norm_signal, transformed_data,
)
from .transform import (
    certify, closed_form_gains_ginzburg_landau, closed_form_gains_reaction_diffusion, evaluate_iss_bound,
    ginzburg_landau_spec, max_estimate_bound, reaction_diffusion_spec, relative_deviation, tilde_gains,
)
from .verify import ALL_CHECKS, ScenarioFamilies, ScenarioSuite, run_scenario_suite

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_SOLVER = 0, 1, 2, 3
CLOSED_FORM_TOL = 1e-12
PRESETS = ("reaction-diffusion", "ginzburg-landau")
PRESET_DEFAULTS = {
    "reaction-diffusion": {"a": 1.0, "b": 0.0, "c": 1.0, "K1": 1.0},
    "ginzburg-landau": {"a": 1.0, "b": 1.0, "c": 1.0, "c2": 1.0, "c3": 1.0},
}
DEFAULT_GRID = {"nx": 201, "nt": 4000, "t_final": 2.0}

# ---------------------------------------------------------------------------
# config schema
# ---------------------------------------------------------------------------

_NUM = {"type": "number"}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


_SIGNAL_TERM = _obj(
    {"kind": {"enum": ["constant", "sinusoid", "decaying_exp"]}, "A": _NUM, "omega": _NUM, "phase": _NUM, "rate": _NUM},
    ["kind", "A"],
)
_SPACE = _obj(
    {"kind": {"enum": ["polynomial", "sine_mode"]}, "coeffs": {"type": "array", "items": _NUM},
     "k": {"type": "integer", "minimum": 1}},
    ["kind"],
)
_PROFILE_TERM = _obj(
    {"kind": {"enum": ["polynomial", "sine_mode"]}, "coeffs": {"type": "array", "items": _NUM}, "A": _NUM,
     "k": {"type": "integer", "minimum": 1}},
    ["kind"],
)
_RANGE = {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 2, "maxItems": 2}

CONFIG_SCHEMA = _obj(
    {
        "preset": _obj(
            {"name": {"enum": list(PRESETS)}, "a": _NUM, "b": _NUM, "c": _NUM, "K1": _NUM, "c2": _NUM, "c3": _NUM},
            ["name"],
        ),
        "coefficients": _obj({"a": _NUM, "b": _NUM, "c": _NUM}, ["a", "b", "c"]),
        "boundary": _obj({"alpha0": _NUM, "beta0": _NUM, "alpha1": _NUM, "beta1": _NUM},
                         ["alpha0", "beta0", "alpha1", "beta1"]),
        "nonlinearity": _obj(
            {"kind": {"enum": ["zero", "polynomial_odd", "cubic_quintic"]},
             "coeffs": {"type": "array", "items": _NUM}, "c2": _NUM, "c3": _NUM},
            ["kind"],
        ),
        "f": _obj({"terms": {"type": "array", "items": _obj({"space": _SPACE, "time": _SIGNAL_TERM}, ["space", "time"])}}),
        "d0": _obj({"terms": {"type": "array", "items": _SIGNAL_TERM}}),
        "d1": _obj({"terms": {"type": "array", "items": _SIGNAL_TERM}}),
        "phi": _obj({"terms": {"type": "array", "items": _PROFILE_TERM}}),
        "overrides": _obj({k: _NUM for k in ("k0", "k1", "eps", "eps0", "eps1")}),
        "grid": _obj({"nx": {"type": "integer"}, "nt": {"type": "integer"}, "t_final": _NUM}),
        "tolerances": _obj({"tol_rel": _NUM}),
        "solver": _obj(
            {"scheme": {"enum": ["imex_cn", "implicit_euler"]}, "dt_safety": _NUM,
             "startup_steps": {"type": "integer", "minimum": 0}}
        ),
        "scenarios": _obj(
            {"amplitude": _RANGE, "phi_amplitude": _RANGE, "omega": _RANGE, "rate": _RANGE,
             **{k: {"type": "integer", "minimum": 0} for k in ("f_terms", "d_terms", "phi_modes")},
             "max_wavenumber": {"type": "integer", "minimum": 1},
             **{k: {"type": "boolean"} for k in ("use_f", "use_d0", "use_d1", "use_phi")}}
        ),
    }
)


@dataclass(frozen=True)
class Config:
    spec: ProblemSpec
    overrides: dict = field(default_factory=dict)
    grid: Grid = field(default_factory=lambda: Grid(**DEFAULT_GRID))
    tol_rel: float = 1e-2
    solver: SolverOptions = field(default_factory=SolverOptions)
    scenarios: dict = field(default_factory=dict)
    preset: Optional[str] = None


def _pointer(path) -> str:
    return "/" + "/".join(str(p) for p in path)


def _signal(doc) -> Signal:
    terms = []
    for t in (doc or {}).get("terms", []):
        terms.append(SignalTerm(t["kind"], t["A"], t.get("omega", 0.0), t.get("phase", 0.0), t.get("rate", 0.0)))
    return Signal(tuple(terms))


def _field(doc) -> Field:
    terms = []
    for t in (doc or {}).get("terms", []):
        s, tm = t["space"], t["time"]
        space = SpaceFactor(s["kind"], tuple(s.get("coeffs", ())), s.get("k", 1))
        time = SignalTerm(tm["kind"], tm["A"], tm.get("omega", 0.0), tm.get("phase", 0.0), tm.get("rate", 0.0))
        terms.append(FieldTerm(space, time))
    return Field(tuple(terms))


def _profile(doc) -> InitialProfile:
    terms = [
        ProfileTerm(t["kind"], tuple(t.get("coeffs", ())), t.get("A", 0.0), t.get("k", 1))
        for t in (doc or {}).get("terms", [])
    ]
    return InitialProfile(tuple(terms))


def _nonlinearity(doc) -> Nonlinearity:
    if not doc or doc["kind"] == "zero":
        return Nonlinearity.zero()
    if doc["kind"] == "polynomial_odd":
        return Nonlinearity.polynomial_odd(doc.get("coeffs", []))
    for key in ("c2", "c3"):
        if key not in doc:
            raise ConfigError(f"nonlinearity.{key} is required for cubic_quintic", f"/nonlinearity/{key}")
    return Nonlinearity.cubic_quintic(doc["c2"], doc["c3"])


def _preset_spec(doc: dict, data: dict) -> ProblemSpec:
    name = doc["name"]
    need = list(PRESET_DEFAULTS[name])
    missing = [k for k in need if k not in doc]
    if missing:
        raise ConfigError(f"preset.{missing[0]} is required for {name}", f"/preset/{missing[0]}")
    extra = [k for k in doc if k not in need and k != "name"]
    if extra:
        raise ConfigError(f"preset.{extra[0]} does not apply to {name}", f"/preset/{extra[0]}")
    if name == "reaction-diffusion":
        return reaction_diffusion_spec(doc["a"], doc["b"], doc["c"], doc["K1"], **data)
    return ginzburg_landau_spec(doc["a"], doc["b"], doc["c"], doc["c2"], doc["c3"], **data)


def parse_config(doc) -> Config:
    """Validate a decoded JSON document and build the :class:`Config`."""
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        err = errors[0]
        loc = _pointer(err.absolute_path)
        raise ConfigError(f"{loc}: {err.message}", loc)

    has_preset = "preset" in doc
    has_explicit = "coefficients" in doc or "boundary" in doc
    if has_preset and (has_explicit or "nonlinearity" in doc):
        raise ConfigError("give either 'preset' or explicit coefficients, not both", "/preset")
    if not has_preset and not ("coefficients" in doc and "boundary" in doc):
        raise ConfigError("config needs 'preset' or both 'coefficients' and 'boundary'", "/")

    coeff_src = doc["preset"] if has_preset else doc["coefficients"]
    where = "preset" if has_preset else "coefficients"
    if "a" in coeff_src and not coeff_src["a"] > 0:
        raise ConfigError(f"{where}.a must be > 0", f"/{where}/a")

    data = dict(f=_field(doc.get("f")), d0=_signal(doc.get("d0")), d1=_signal(doc.get("d1")), phi=_profile(doc.get("phi")))
    if has_preset:
        spec = _preset_spec(doc["preset"], data)
    else:
        co, bd = doc["coefficients"], doc["boundary"]
        spec = ProblemSpec(co["a"], co["b"], co["c"], bd["alpha0"], bd["beta0"], bd["alpha1"], bd["beta1"],
                           _nonlinearity(doc.get("nonlinearity")), **data)

    g = {**DEFAULT_GRID, **doc.get("grid", {})}
    if g["nx"] < 3:
        raise ConfigError("grid.nx must be >= 3", "/grid/nx")
    if g["nt"] < 1:
        raise ConfigError("grid.nt must be >= 1", "/grid/nt")
    if not g["t_final"] > 0:
        raise ConfigError("grid.t_final must be > 0", "/grid/t_final")
    tol_rel = float(doc.get("tolerances", {}).get("tol_rel", 1e-2))
    if not tol_rel >= 0:
        raise ConfigError("tolerances.tol_rel must be >= 0", "/tolerances/tol_rel")
    try:
        solver = SolverOptions(**doc.get("solver", {}))
    except PreconditionError as exc:
        raise ConfigError(f"solver: {exc}", "/solver") from None
    scenarios = {k: tuple(v) if isinstance(v, list) else v for k, v in doc.get("scenarios", {}).items()}
    return Config(
        spec=spec,
        overrides=dict(doc.get("overrides", {})),
        grid=Grid(g["nx"], g["nt"], float(g["t_final"])),
        tol_rel=tol_rel,
        solver=solver,
        scenarios=scenarios,
        preset=doc["preset"]["name"] if has_preset else None,
    )


def load_config(path) -> Config:
    """Read and validate a UTF-8 JSON config file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}", "") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}", "") from None
    return parse_config(doc)


def preset_document(name: str, **params) -> dict:
    """A ready-to-edit config for one of the worked examples."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}", "/preset/name")
    values = dict(PRESET_DEFAULTS[name])
    values.update({k: float(v) for k, v in params.items() if v is not None and k in values})
    phi = {"terms": [{"kind": "sine_mode", "A": 1.0, "k": 1}]}
    if name == "reaction-diffusion":
        d1 = {"terms": [{"kind": "sinusoid", "A": 0.5, "omega": 3.0}]}
        # flux side at 1: cancel the sine slope with x^2 (x - 1)
        phi["terms"].append({"kind": "polynomial", "coeffs": [0.0, 0.0, -math.pi, math.pi]})
    else:
        d1 = {"terms": [{"kind": "sinusoid", "A": 0.2, "omega": 3.0}]}
        phi["terms"][0]["A"] = 0.5
        phi["terms"].append({"kind": "polynomial", "coeffs": [0.0, 0.0, -0.5 * math.pi, 0.5 * math.pi]})
    return {
        "preset": {"name": name, **values},
        "f": {"terms": []},
        "d0": {"terms": []},
        "d1": d1,
        "phi": phi,
        "grid": dict(DEFAULT_GRID),
        "tolerances": {"tol_rel": 1e-2},
    }


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def write_trajectory_csv(traj: Trajectory, path) -> Path:
    """Long-format ``t,x,value`` rows in time-major order, 17 significant digits."""
    path = Path(path)
    nt1, nx = traj.values.shape
    rows = np.column_stack([np.repeat(traj.t, nx), np.tile(traj.x, nt1), traj.values.ravel()])
    try:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            np.savetxt(fh, rows, fmt="%.17g", delimiter=",", header="t,x,value", comments="", newline="\n")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write trajectory: {exc.strerror}", str(path)) from None
    return path


def read_trajectory_csv(path):
    """Inverse of :func:`write_trajectory_csv`: returns ``(t, x, values)``."""
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    t = np.unique(rows[:, 0])
    x = rows[: rows.shape[0] // t.size, 1]
    return t, x, rows[:, 2].reshape(t.size, x.size)


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _emit(doc, out: Optional[str]) -> None:
    text = dumps(doc)
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def _figure_path(out) -> Path:
    return Path(out).with_suffix(".png")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _merge_grid(cfg: Config, args) -> Grid:
    g = cfg.grid
    nx = args.nx if args.nx is not None else g.nx
    nt = args.nt if args.nt is not None else g.nt
    tf = args.t_final if args.t_final is not None else g.t_final
    return Grid(nx, nt, tf)


def _parse_overrides(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"override {item!r} is not key=value", "--override")
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise ConfigError(f"override {key} needs a number, got {value!r}", "--override") from None
    return out


def closed_form_for(spec: ProblemSpec, params):
    """Closed-form gains when ``spec`` has the shape of a worked example, else None."""
    dirichlet0 = spec.alpha0 == 1.0 and spec.beta0 == 0.0
    if dirichlet0 and spec.beta1 == 1.0 and spec.h.is_zero:
        return "reaction-diffusion", closed_form_gains_reaction_diffusion(spec.a, spec.b, spec.c, spec.alpha1, params.eps)
    if dirichlet0 and spec.alpha1 == 0.0 and spec.beta1 == 1.0 and spec.h.kind == "cubic_quintic":
        return "ginzburg-landau", closed_form_gains_ginzburg_landau(spec.a, spec.b, spec.c, spec.h.c2, spec.h.c3, params)
    return None


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    spec = cfg.spec
    report = validate_structure(spec) + check_nonlinearity(spec.h, spec.c_tilde) + check_compatibility(spec)
    _emit(report.to_dict(), args.out)
    return EXIT_PASS if report.passed else EXIT_FAIL


def cmd_gains(args) -> int:
    cfg = load_config(args.config)
    overrides = {**cfg.overrides, **_parse_overrides(args.override)}
    _, params, gains = certify(cfg.spec, overrides)
    record = gains.to_record()
    record["split"] = params.to_dict()
    code = EXIT_PASS
    if args.closed_form:
        found = closed_form_for(cfg.spec, params)
        if found is None:
            raise ConfigError("no closed-form gains for this problem shape", "--closed-form")
        name, ref = found
        dev = relative_deviation(gains, ref)
        ok = dev <= CLOSED_FORM_TOL
        record["closed_form_check"] = {
            "preset": name, "record": ref.to_record(), "max_deviation": dev, "tolerance": CLOSED_FORM_TOL, "passed": ok,
        }
        code = EXIT_PASS if ok else EXIT_FAIL
    _emit(record, args.out)
    return code


def cmd_simulate(args) -> int:
    from .plotting import plot_trajectory

    cfg = load_config(args.config)
    spec = cfg.spec
    grid = _merge_grid(cfg, args)
    opts = cfg.solver
    T = grid.t_final
    bound = None
    if args.subsystem == "full":
        traj = simulate_full(spec, grid, opts)
        try:
            _, _, gains = certify(spec, cfg.overrides)
            sups = (sup_norm_field(spec.f, T), sup_norm_signal(spec.d0, T), sup_norm_signal(spec.d1, T))
            bound = evaluate_iss_bound(gains, profile_l2(spec.phi), *sups, grid.t)
        except (InfeasibleError, PreconditionError):
            # no certificate for this problem; plot the norm alone
            bound = None
    else:
        tspec, params, _ = certify(spec, cfg.overrides)
        f_t, d0_t, d1_t, phi_t = transformed_data(spec, tspec)
        sups_t = (sup_norm_field(f_t, T), sup_norm_signal(d0_t, T), sup_norm_signal(d1_t, T))
        traj = simulate_v(tspec, params, f_t, d0_t, d1_t, grid, opts)
        # on the unit interval the L2 norm is at most the sup norm
        bound = np.full(grid.t.shape, max_estimate_bound(tspec, params, *sups_t).value)
        if args.subsystem == "w":
            traj = simulate_w(tspec, params, spec.h, traj, phi_t, grid, opts)
            g, g0, g1 = tilde_gains(tspec, params, spec.h).as_tuple()
            bound = profile_l2(phi_t) * np.exp(-params.lam * grid.t) + g(sups_t[0]) + g0(sups_t[1]) + g1(sups_t[2])
    csv_path = write_trajectory_csv(traj, args.out)
    summary = {
        "csv": str(csv_path),
        "variable": traj.variable_tag,
        "rows": int(traj.values.size),
        "grid": {"nx": grid.nx, "nt": grid.nt, "t_final": grid.t_final},
        "l2_final": float(l2_profile(traj)[1][-1]),
    }
    if not args.no_figure:
        summary["figure"] = str(plot_trajectory(traj, _figure_path(args.out), bound))
    sys.stdout.write(dumps(summary))
    return EXIT_PASS


def cmd_verify(args) -> int:
    cfg = load_config(args.config)
    grid = _merge_grid(cfg, args)
    tol_rel = args.tol_rel if args.tol_rel is not None else cfg.tol_rel
    checks = tuple(c.strip() for c in args.checks.split(",")) if args.checks else ALL_CHECKS
    bad = [c for c in checks if c not in ALL_CHECKS]
    if bad:
        raise ConfigError(f"unknown check {bad[0]!r}; choose from {', '.join(ALL_CHECKS)}", "--checks")
    families = ScenarioFamilies.for_spec(cfg.spec, **cfg.scenarios)
    suite = ScenarioSuite(cfg.spec, args.trials, args.seed, families)
    report = run_scenario_suite(suite, grid, cfg.solver, tol_rel, checks)
    doc = {
        "suite": {
            "seed": args.seed,
            "n_trials": args.trials,
            "checks": list(checks),
            "grid": {"nx": grid.nx, "nt": grid.nt, "t_final": grid.t_final},
            "families": families.to_dict(),
        },
        "report": report.to_dict(),
    }
    _emit(doc, args.out)
    if args.out and not args.no_figure:
        from .plotting import plot_suite

        plot_suite(report, _figure_path(args.out))
    return EXIT_PASS if report.passed else EXIT_FAIL


def cmd_preset(args) -> int:
    doc = preset_document(args.name, a=args.a, b=args.b, c=args.c, K1=args.K1, c2=args.c2, c3=args.c3)
    parse_config(doc)
    _emit(doc, args.out)
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iss-certify", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="structural, nonlinearity and compatibility checks")
    p.add_argument("config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("gains", help="decay rate and gain coefficients")
    p.add_argument("config")
    p.add_argument("--override", nargs="*", metavar="KEY=VALUE", help="k0, k1, eps, eps0 or eps1")
    p.add_argument("--closed-form", action="store_true", help="compare with the worked-example formulas")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gains)

    def grid_args(p):
        p.add_argument("--nx", type=int)
        p.add_argument("--nt", type=int)
        p.add_argument("--t-final", type=float)
        p.add_argument("--no-figure", action="store_true", help="skip the PNG written next to --out")

    p = sub.add_parser("simulate", help="write a long-format trajectory CSV")
    p.add_argument("config")
    grid_args(p)
    p.add_argument("--out", required=True)
    p.add_argument("--subsystem", choices=("full", "v", "w"), default="full")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="randomized scenario suite against the certified bounds")
    p.add_argument("config")
    grid_args(p)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--tol-rel", type=float)
    p.add_argument("--checks", help=f"comma list from {','.join(ALL_CHECKS)}")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("preset", help="print a config for a worked example")
    p.add_argument("name", choices=PRESETS)
    for flag in ("a", "b", "c", "K1", "c2", "c3"):
        p.add_argument(f"--{flag}", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_preset)
    return parser


def _fail(code: int, error_type: str, message: str, **extra) -> int:
    sys.stderr.write(dumps({"error": {"type": error_type, "message": message, **extra}}))
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "trials", 0) < 0:
        return _fail(EXIT_USAGE, "usage", "--trials must be >= 0")
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail(EXIT_USAGE, "config", str(exc), location=exc.location)
    except InfeasibleError as exc:
        return _fail(EXIT_USAGE, "infeasible", str(exc), failed=list(exc.failed))
    except SolverError as exc:
        return _fail(EXIT_SOLVER, "solver", str(exc), kind=exc.kind, step=None if exc.step is None else int(exc.step))
    except (PreconditionError, IssCertifyError) as exc:
        return _fail(EXIT_USAGE, "precondition", str(exc))
    except OSError as exc:
        return _fail(EXIT_USAGE, "io", str(exc), path=exc.filename)


if __name__ == "__main__":
    sys.exit(main())
