"""Command-line driver: configuration, verification runs, report files.

Each subcommand executes one verification or synthesis workflow, writes an
RFC-4180 CSV (with the fully resolved configuration embedded as a comment
header, so artifacts are self-describing) plus a JSON summary with verdicts,
and prints a human-readable pass/fail line per verdict.

Exit status: 0 all verdicts pass, 2 at least one verdict failed,
1 usage or configuration error (the message names the offending key).
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from .coefficients import CoefficientModel, check_hypotheses
from .control import estimate_observability, synthesize_null_control
from .grid import Field, SpaceTimeGrid, assemble_operator, dirichlet_eigenmodes
from .inequalities import (HardyWeight, caccioppoli_check, carleman_identity_check,
                           carleman_scan, default_s_values, hp_verify,
                           manufactured_adjoint_pair)
from .solvers import ControlConfig, PotentialModel, solve_adjoint
from .weights import WeightParams

__all__ = ["main", "DEFAULT_CONFIG", "PRESETS"]


DEFAULT_CONFIG = {
    "coefficient": {
        "kind": "power_law",      # "power_law" | "constant"
        "alpha": 0.5,
        "x0": 0.3,
        "theta": None,            # defaults to alpha
        "constant_value": 1.0,
    },
    "grid": {"N": 200, "M": 400, "T": 1.0},
    "weight": {"c1": 1.0, "c2": None, "c2_margin": 0.05},
    "potential": {"kind": "zero", "value": 0.0},
    "control": {"omega_lo": 0.2, "omega_hi": 0.5, "epsilon": 1e-8},
    "hp": {"q": 1.5, "weight": "pure_power", "battery_size": 20,
           "N": 1000, "stability_tol": 0.05},
    "identity": {"s_values": [1.0, 10.0], "residual_tol": 5e-2,
                 "refine_factor_min": 3.0},
    "scan": {"T": 2.0, "n_s": 10, "s_start": 1.0, "s_ratio": 1.5,
             "window_tol": 0.05, "stability_tol": 0.25},
    "caccioppoli": {"T": 2.0, "omega_prime_lo": 0.35, "omega_prime_hi": 0.45,
                    "s_values": [1.0, 2.0, 4.0], "stability_tol": 0.2},
    "observability": {"T": 0.5, "n_modes": 10, "n_random": 10, "n_power": 20,
                      "stability_tol": 0.25},
    "null_control": {"T": 0.5, "u0": "parabola", "tol": 1e-2, "max_iters": 500},
    "run": {"seed": 0, "out_dir": "reports", "format": "csv"},
}

PRESETS = {
    f"alpha{a}-x{x}": {"coefficient": {"alpha": a, "x0": x}}
    for a in (0.5, 1.0, 1.5) for x in (0.3, 0.5)
}

SUBCOMMANDS = ("check-coeff", "hp", "carleman-identity", "carleman-scan",
               "caccioppoli", "observability", "null-control", "all")


class ConfigError(Exception):
    """Configuration problem; the message names the offending key."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


# ---------------------------------------------------------------------------
# configuration handling
# ---------------------------------------------------------------------------

def _merge_section(base: dict, update: dict, prefix: str):
    for key, value in update.items():
        dotted = f"{prefix}{key}"
        if key not in base:
            raise ConfigError(dotted, "unknown configuration key")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(dotted, f"expected a section, got {value!r}")
            _merge_section(base[key], value, dotted + ".")
        else:
            base[key] = value


def _parse_override(text: str):
    if "=" not in text:
        raise ConfigError(text, "override must have the form key=value")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def _set_dotted(config: dict, key: str, value):
    parts = key.split(".")
    node = config
    for i, part in enumerate(parts[:-1]):
        if part not in node or not isinstance(node[part], dict):
            raise ConfigError(key, "unknown configuration key")
        node = node[part]
    leaf = parts[-1]
    if leaf not in node:
        raise ConfigError(key, "unknown configuration key")
    if isinstance(node[leaf], dict):
        raise ConfigError(key, "cannot assign a scalar to a section")
    node[leaf] = value


def _require_number(config: dict, key: str, lo=None, hi=None,
                    strict_lo=False, strict_hi=False):
    node = config
    for part in key.split("."):
        node = node[part]
    if node is None or isinstance(node, (str, bool, dict, list)):
        raise ConfigError(key, f"a number is required, got {node!r}")
    v = float(node)
    if lo is not None and (v <= lo if strict_lo else v < lo):
        raise ConfigError(key, f"value {v} below the admissible range")
    if hi is not None and (v >= hi if strict_hi else v > hi):
        raise ConfigError(key, f"value {v} above the admissible range")
    return v


def resolve_config(args) -> dict:
    config = copy.deepcopy(DEFAULT_CONFIG)
    if args.preset is not None:
        _merge_section(config, PRESETS[args.preset], "")
    if args.config is not None:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError("--config", f"cannot read {args.config}: {exc}")
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("--config", f"invalid JSON in {args.config}: {exc}")
        if not isinstance(data, dict):
            raise ConfigError("--config", "top level must be an object")
        _merge_section(config, data, "")
    for item in args.set or []:
        key, value = _parse_override(item)
        _set_dotted(config, key, value)
    if args.out is not None:
        config["run"]["out_dir"] = args.out
    if args.seed is not None:
        config["run"]["seed"] = int(args.seed)
    validate_config(config)
    return config


def validate_config(config: dict):
    kind = config["coefficient"]["kind"]
    if kind not in ("power_law", "constant"):
        raise ConfigError("coefficient.kind", f"unsupported kind {kind!r}")
    _require_number(config, "coefficient.x0", lo=0.0, hi=1.0,
                    strict_lo=True, strict_hi=True)
    if kind == "power_law":
        _require_number(config, "coefficient.alpha", lo=0.0, hi=2.0,
                        strict_lo=True, strict_hi=True)
    else:
        _require_number(config, "coefficient.constant_value", lo=0.0, strict_lo=True)
    for key in ("grid.N", "grid.M"):
        if _require_number(config, key, lo=2) != int(_require_number(config, key)):
            raise ConfigError(key, "an integer is required")
    _require_number(config, "grid.T", lo=0.0, strict_lo=True)
    _require_number(config, "hp.q", lo=1.0, hi=2.0, strict_lo=True, strict_hi=True)
    lo = _require_number(config, "control.omega_lo", lo=0.0, hi=1.0)
    hi = _require_number(config, "control.omega_hi", lo=0.0, hi=1.0)
    if not lo < hi:
        raise ConfigError("control.omega_hi", f"omega=({lo}, {hi}) is empty")
    _require_number(config, "control.epsilon", lo=0.0)
    if config["run"]["format"] not in ("csv", "json"):
        raise ConfigError("run.format", f"unsupported format {config['run']['format']!r}")


# ---------------------------------------------------------------------------
# object construction from config
# ---------------------------------------------------------------------------

def build_model(config: dict) -> CoefficientModel:
    c = config["coefficient"]
    try:
        if c["kind"] == "constant":
            return CoefficientModel.constant(c["constant_value"], c["x0"])
        return CoefficientModel.power_law(c["alpha"], c["x0"], theta=c["theta"])
    except ValueError as exc:
        raise ConfigError("coefficient", str(exc))


def build_grid(config: dict, N=None, M=None, T=None) -> SpaceTimeGrid:
    g = config["grid"]
    return SpaceTimeGrid.create(int(N if N is not None else g["N"]),
                                int(M if M is not None else g["M"]),
                                float(T if T is not None else g["T"]),
                                config["coefficient"]["x0"])


def build_potential(config: dict) -> PotentialModel:
    p = config["potential"]
    if p["kind"] == "zero":
        return PotentialModel.zero()
    if p["kind"] == "constant":
        return PotentialModel.constant(p["value"])
    raise ConfigError("potential.kind", f"unsupported kind {p['kind']!r}")


def build_control(config: dict) -> ControlConfig:
    c = config["control"]
    try:
        return ControlConfig(c["omega_lo"], c["omega_hi"], epsilon=c["epsilon"])
    except ValueError as exc:
        raise ConfigError("control", str(exc))


def build_weight_params(config: dict, model, T: float, s: float) -> WeightParams:
    w = config["weight"]
    try:
        return WeightParams.for_model(model, T=T, s=s, c1=w["c1"], c2=w["c2"],
                                      c2_margin=w["c2_margin"])
    except ValueError as exc:
        raise ConfigError("weight.c2", str(exc))


# ---------------------------------------------------------------------------
# report emission
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _config_header(config: dict) -> str:
    # out_dir is where the artifact already lives; embedding it would make
    # otherwise-identical runs produce different bytes
    stripped = copy.deepcopy(config)
    stripped["run"].pop("out_dir", None)
    return "# config " + json.dumps(stripped, sort_keys=True) + "\n"


def write_csv(path: Path, header: list, rows: list, config: dict):
    buf = io.StringIO()
    buf.write(_config_header(config))
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    path.write_text(buf.getvalue())


def verdict(name: str, ok: bool, value, threshold) -> dict:
    return {"name": name, "pass": bool(ok),
            "value": None if value is None else float(value),
            "threshold": None if threshold is None else float(threshold)}


# ---------------------------------------------------------------------------
# subcommand implementations; each returns verdicts plus csv rows
# ---------------------------------------------------------------------------

def run_check_coeff(config: dict, out_dir: Path) -> list:
    model = build_model(config)
    grid = build_grid(config, M=1)
    report = check_hypotheses(model, grid)
    verdicts = [
        verdict("hypothesis_slack", report.slack_ok, report.slack_max, report.slack_tol),
        verdict("gamma_monotone", report.gamma_monotone_ok, None, None),
        verdict("theta_monotone", report.theta_monotone_ok, None, None),
        verdict("degenerate_at_x0", report.degenerate_at_x0, None, None),
    ]
    x = grid.x
    off = ~np.isclose(x, model.x0, rtol=0.0, atol=1e-14)
    a = model.eval_a(x)
    xap = model.eval_xa_prime(x)
    rows = []
    for i in range(x.size):
        slack = xap[i] / a[i] - model.K if off[i] and a[i] > 0.0 else 0.0
        rows.append([x[i], a[i], xap[i], slack])
    write_csv(out_dir / "check_coeff.csv", ["x", "a", "xa_prime", "slack"], rows, config)
    return verdicts


def run_hp(config: dict, out_dir: Path) -> list:
    c = config["hp"]
    x0 = config["coefficient"]["x0"]
    if c["weight"] == "pure_power":
        weight = HardyWeight.pure_power(c["q"], x0)
    elif c["weight"] == "coefficient":
        weight = HardyWeight.from_coefficient(build_model(config))
    else:
        raise ConfigError("hp.weight", f"unsupported weight {c['weight']!r}")
    seed = int(config["run"]["seed"])
    N = int(c["N"])
    coarse = hp_verify(weight, SpaceTimeGrid.create(N, 1, 1.0, x0),
                       battery_size=int(c["battery_size"]), seed=seed)
    fine = hp_verify(weight, SpaceTimeGrid.create(2 * N, 1, 1.0, x0),
                     battery_size=int(c["battery_size"]), seed=seed)
    change = abs(fine.rayleigh_estimate - coarse.rayleigh_estimate) / coarse.rayleigh_estimate
    verdicts = [
        verdict("rayleigh_below_bound",
                coarse.rayleigh_estimate <= coarse.paper_bound * 1.05,
                coarse.rayleigh_estimate, coarse.paper_bound * 1.05),
        verdict("battery_below_rayleigh",
                coarse.battery_max_ratio <= coarse.rayleigh_estimate * 1.02,
                coarse.battery_max_ratio, coarse.rayleigh_estimate * 1.02),
        verdict("rayleigh_stable", change < c["stability_tol"], change, c["stability_tol"]),
    ]
    rows = [[coarse.grid_N, "paper_bound", coarse.paper_bound]]
    for rep in (coarse, fine):
        rows.append([rep.grid_N, "rayleigh", rep.rayleigh_estimate])
        for k, ratio in enumerate(rep.battery_ratios):
            rows.append([rep.grid_N, f"battery_{k}", ratio])
    write_csv(out_dir / "hp.csv", ["N", "sample", "ratio"], rows, config)
    return verdicts


def _identity_profile(T: float, x0: float):
    return lambda t, x: (t * (T - t)) ** 5 * (x - x0) ** 2 * x * (1.0 - x)


def run_carleman_identity(config: dict, out_dir: Path) -> list:
    model = build_model(config)
    c = config["identity"]
    T = config["grid"]["T"]
    verdicts = []
    rows = []
    for s in c["s_values"]:
        residuals = []
        for level in (1, 2):
            grid = build_grid(config, N=config["grid"]["N"] * level,
                              M=config["grid"]["M"] * level)
            params = build_weight_params(config, model, T, s)
            w = Field.from_function(grid, _identity_profile(T, model.x0))
            rep = carleman_identity_check(model, params, grid, w)
            residuals.append(rep.residual)
            rows.append([s, rep.grid_N, rep.grid_M, rep.lhs, rep.rhs, rep.residual])
        factor = residuals[0] / residuals[1] if residuals[1] > 0.0 else np.inf
        verdicts.append(verdict(f"identity_residual_s{s:g}",
                                residuals[1] < c["residual_tol"],
                                residuals[1], c["residual_tol"]))
        verdicts.append(verdict(f"identity_refinement_s{s:g}",
                                factor >= c["refine_factor_min"],
                                factor, c["refine_factor_min"]))
    write_csv(out_dir / "carleman_identity.csv",
              ["s", "N", "M", "lhs", "rhs", "residual"], rows, config)
    return verdicts


def _scan_profile(T: float, x0: float):
    return lambda t, x: t * (T - t) * (x - x0) ** 2 * x * (1.0 - x)


def run_carleman_scan(config: dict, out_dir: Path) -> list:
    model = build_model(config)
    potential = build_potential(config)
    c = config["scan"]
    T = c["T"]
    s_values = default_s_values(int(c["n_s"]), c["s_start"], c["s_ratio"])
    reports = []
    rows = []
    for level in (1, 2):
        grid = build_grid(config, N=config["grid"]["N"] * level,
                          M=config["grid"]["M"] * level, T=T)
        params = build_weight_params(config, model, T, s_values[0])
        v, h = manufactured_adjoint_pair(model, potential, grid,
                                         _scan_profile(T, model.x0))
        rep = carleman_scan(model, params, potential, grid, v, h,
                            s_values=s_values, window_tol=c["window_tol"])
        reports.append(rep)
        for k in range(s_values.size):
            rows.append([rep.grid_N, rep.s_values[k], rep.lhs[k], rep.rhs_source[k],
                         rep.rhs_boundary[k], rep.ratios[k]])
    coarse, fine = reports
    change = (abs(fine.fitted_C - coarse.fitted_C) / coarse.fitted_C
              if np.isfinite(coarse.fitted_C) and coarse.fitted_C > 0.0 else np.inf)
    tail = coarse.ratios[coarse.s_values >= coarse.s0_observed]
    nonincreasing = bool(np.all(tail[1:] <= tail[:-1] * (1.0 + c["window_tol"])))
    verdicts = [
        verdict("scan_ratios_finite", bool(np.all(np.isfinite(coarse.ratios))),
                float(np.max(coarse.ratios)), None),
        verdict("scan_rhs_positive", not coarse.nonpositive_rhs, None, None),
        verdict("scan_tail_nonincreasing", nonincreasing, coarse.s0_observed, None),
        verdict("scan_fitted_C_stable", change < c["stability_tol"],
                change, c["stability_tol"]),
    ]
    write_csv(out_dir / "carleman_scan.csv",
              ["N", "s", "lhs", "rhs_source", "rhs_boundary", "ratio"], rows, config)
    return verdicts


def run_caccioppoli(config: dict, out_dir: Path) -> list:
    model = build_model(config)
    potential = build_potential(config)
    c = config["caccioppoli"]
    T = c["T"]
    omega_p = (c["omega_prime_lo"], c["omega_prime_hi"])
    omega = (config["control"]["omega_lo"], config["control"]["omega_hi"])
    ratios = {}
    rows = []
    for level in (1, 2):
        grid = build_grid(config, N=config["grid"]["N"] * level,
                          M=config["grid"]["M"] * level, T=T)
        op = assemble_operator(model, grid)
        _, modes = dirichlet_eigenmodes(op, 1)
        v = solve_adjoint(model, potential, grid, modes[0])
        for s in c["s_values"]:
            params = build_weight_params(config, model, T, s)
            try:
                rep = caccioppoli_check(model, params, grid, v, omega_p, omega)
            except ValueError as exc:
                raise ConfigError("caccioppoli.omega_prime_lo", str(exc))
            ratios.setdefault(s, []).append(rep.ratio)
            rows.append([rep.grid_N, s, rep.local_gradient_integral,
                         rep.outer_solution_integral, rep.ratio])
    verdicts = []
    for s, (r1, r2) in ratios.items():
        finite = np.isfinite(r1) and np.isfinite(r2)
        scale = max(abs(r1), abs(r2), 1e-300)
        change = abs(r2 - r1) / scale
        verdicts.append(verdict(f"caccioppoli_stable_s{s:g}",
                                finite and change < c["stability_tol"],
                                change, c["stability_tol"]))
    write_csv(out_dir / "caccioppoli.csv",
              ["N", "s", "local_gradient", "outer_solution", "ratio"], rows, config)
    return verdicts


def run_observability(config: dict, out_dir: Path) -> list:
    model = build_model(config)
    potential = build_potential(config)
    control = build_control(config)
    c = config["observability"]
    try:
        control.require_x0_inside(model.x0)
    except ValueError as exc:
        raise ConfigError("control.omega_lo", str(exc))
    seed = int(config["run"]["seed"])
    reports = []
    rows = []
    for level in (1, 2):
        grid = build_grid(config, N=config["grid"]["N"] * level,
                          M=config["grid"]["M"] * level, T=c["T"])
        rep = estimate_observability(model, potential, grid, control,
                                     n_modes=int(c["n_modes"]),
                                     n_random=int(c["n_random"]),
                                     n_power=int(c["n_power"]), seed=seed)
        reports.append(rep)
        for desc, ratio in rep.samples:
            rows.append([rep.grid_N, desc, ratio])
    coarse, fine = reports
    change = (abs(fine.C_T_estimate - coarse.C_T_estimate) / coarse.C_T_estimate
              if coarse.C_T_estimate > 0.0 else np.inf)
    verdicts = [
        verdict("observability_finite_positive",
                np.isfinite(coarse.C_T_estimate) and coarse.C_T_estimate > 0.0,
                coarse.C_T_estimate, None),
        verdict("observability_stable", change < c["stability_tol"],
                change, c["stability_tol"]),
        verdict("no_backward_uniqueness_violation",
                not (coarse.violation or fine.violation), None, None),
    ]
    write_csv(out_dir / "observability.csv", ["N", "sample", "ratio"], rows, config)
    return verdicts


def run_null_control(config: dict, out_dir: Path) -> list:
    model = build_model(config)
    potential = build_potential(config)
    control = build_control(config)
    c = config["null_control"]
    grid = build_grid(config, T=c["T"])
    if c["u0"] == "parabola":
        u0 = grid.x * (1.0 - grid.x)
    elif c["u0"] == "sine":
        u0 = np.sin(np.pi * grid.x)
    else:
        raise ConfigError("null_control.u0", f"unsupported profile {c['u0']!r}")
    try:
        sol = synthesize_null_control(model, potential, grid, control, u0,
                                      tol=c["tol"], max_iters=int(c["max_iters"]))
    except ValueError as exc:
        raise ConfigError("control.omega_lo", str(exc))
    ratio = sol.terminal_norm / sol.initial_norm
    J_decreasing = bool(np.all(np.diff(sol.J_history) < 0.0)) if sol.J_history.size > 1 else True
    chi = control.indicator(grid)
    outside = float(np.max(np.abs(sol.h.values[:, chi == 0.0]))) if np.any(chi == 0.0) else 0.0
    verdicts = [
        verdict("terminal_norm_small", sol.converged and ratio <= c["tol"],
                ratio, c["tol"]),
        verdict("cost_functional_decreasing", J_decreasing, None, None),
        verdict("control_supported_in_omega", outside == 0.0, outside, 0.0),
    ]
    rows = [[k, sol.residual_history[k], sol.J_history[k]]
            for k in range(sol.residual_history.size)]
    write_csv(out_dir / "null_control.csv",
              ["iteration", "terminal_norm", "cost_functional"], rows, config)
    if config["run"]["format"] == "json":
        (out_dir / "null_control_field.json").write_text(
            json.dumps(sol.h.values.tolist()))
    else:
        (out_dir / "null_control_field.csv").write_text(
            _config_header(config) + sol.h.to_csv())
    return verdicts


TASKS = {
    "check-coeff": run_check_coeff,
    "hp": run_hp,
    "carleman-identity": run_carleman_identity,
    "carleman-scan": run_carleman_scan,
    "caccioppoli": run_caccioppoli,
    "observability": run_observability,
    "null-control": run_null_control,
}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="degenpde",
        description="Verification and control synthesis for parabolic equations "
                    "with an interior degeneracy.")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", help="JSON configuration file")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a configuration value (repeatable, dotted keys)")
    parser.add_argument("--out", help="output directory for reports")
    parser.add_argument("--seed", type=int, help="random seed override")
    parser.add_argument("--preset", choices=sorted(PRESETS),
                        help="named (alpha, x0) coefficient preset")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses exit status 2 for usage errors; here 2 means a
        # verdict failed, so usage problems are remapped to 1
        return 0 if exc.code == 0 else 1
    try:
        config = resolve_config(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    out_dir = Path(config["run"]["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    names = list(TASKS) if args.subcommand == "all" else [args.subcommand]

    all_verdicts = []
    timing = {}
    try:
        for name in names:
            t0 = time.perf_counter()
            all_verdicts.extend(TASKS[name](config, out_dir))
            timing[name] = time.perf_counter() - t0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    summary = {"config": config, "verdicts": all_verdicts, "timing": timing}
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))

    for v in all_verdicts:
        status = "PASS" if v["pass"] else "FAIL"
        detail = ""
        if v["value"] is not None:
            detail = f"  value={v['value']:.6g}"
            if v["threshold"] is not None:
                detail += f"  threshold={v['threshold']:.6g}"
        print(f"[{status}] {v['name']}{detail}")
    failed = [v for v in all_verdicts if not v["pass"]]
    print(f"{len(all_verdicts) - len(failed)}/{len(all_verdicts)} verdicts passed")
    return 2 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
