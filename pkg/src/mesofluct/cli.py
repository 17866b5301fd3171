"""Command line front end: ``mesofluct evolve | sweep | verify``.

Settings come from three layers with precedence command line > config file
(flat ``key = value`` lines, ``#`` comments) > built-in defaults. Exit codes
are 0 on success, 1 when ``verify`` finds a failing check, 2 for invalid
configuration and 3 when a numerical contract is broken.
"""

import argparse
import json
import math
import sys
import time

import numpy as np

from . import __version__
from . import dynamics, entanglement, models, thermal, verify
from .exceptions import (
    BracketError,
    ConfigError,
    InputError,
    NumericContractError,
    ParameterError,
    PipelineDefectError,
)

SCHEMA = "mesofluct v1"

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

DEFAULTS = {
    "model": 1,
    "delta": 1.0,
    "gamma": 0.5,
    "j0": 1.0,
    "xi": 0.0,
    "temp": 0.1,
    "beta": None,
    "eta": 1.0,
    "r1": 1.0,
    "r3": 1.0,
    "r": 1.0,
    "variant": None,
    "tmax": None,
    "points": 201,
    "method": "auto",
    "out": None,
    "format": "csv",
    "seed": 0,
    "oracle": False,
    "fast": False,
    "r_range": None,
    "temp_range": None,
    "gamma_range": None,
    "xi_range": None,
    "tc_out": None,
    "workers": None,
}

_FLOAT_KEYS = {"delta", "gamma", "j0", "xi", "temp", "beta", "eta", "r1", "r3", "r", "tmax"}
_INT_KEYS = {"model", "points", "seed", "workers"}
_BOOL_KEYS = {"oracle", "fast"}
_CHOICES = {
    "model": (1, 2),
    "method": ("auto", "numeric", "closed_form"),
    "format": ("csv", "json"),
    "variant": ("symmetric", "one-mode", "custom"),
}


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


def _coerce(key, value):
    """Convert a raw string (or already typed value) for ``key``."""
    if value is None:
        return None
    try:
        if key in _FLOAT_KEYS:
            out = float(value)
            if math.isnan(out):
                raise ValueError("NaN")
        elif key in _INT_KEYS:
            out = int(value)
        elif key in _BOOL_KEYS:
            if isinstance(value, bool):
                out = value
            elif str(value).strip().lower() in ("1", "true", "yes", "on"):
                out = True
            elif str(value).strip().lower() in ("0", "false", "no", "off"):
                out = False
            else:
                raise ValueError(f"not a boolean: {value!r}")
        else:
            out = str(value).strip()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid value {value!r} ({exc})", key) from exc
    if key in _CHOICES and out not in _CHOICES[key]:
        raise ConfigError(f"must be one of {list(_CHOICES[key])}, got {out!r}", key)
    return out


def read_config_file(path):
    """Parse a flat ``key = value`` file into a dict of typed values.

    Keys may use dashes or underscores. Unknown keys and repeated keys are
    rejected so that typos do not silently fall back to defaults.
    """
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}", "config") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value", "config")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_").lower()
        if key not in DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown key", key)
        if key in values:
            raise ConfigError(f"line {lineno}: repeated key", key)
        values[key] = _coerce(key, value)
    if values.get("temp") is not None and values.get("beta") is not None:
        raise ConfigError("give either temp or beta, not both", "temp")
    return values


def merge_config(cli_values, file_values=None):
    """Combine the three layers; temperature and beta act as one setting."""
    merged = dict(DEFAULTS)
    for layer in (file_values or {}, cli_values):
        layer = {k: v for k, v in layer.items() if v is not None}
        if "temp" in layer and "beta" in layer:
            raise ConfigError("give either temp or beta, not both", "temp")
        if "temp" in layer or "beta" in layer:
            merged["temp"] = merged["beta"] = None
        merged.update(layer)
    return merged


def parse_range(text, field):
    """Parse ``lo:hi:n`` (inclusive linear grid) or a comma-separated list."""
    if text is None:
        return None
    text = str(text).strip()
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError("expected lo:hi:n")
            lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
            if n < 1:
                raise ValueError("n must be >= 1")
            values = np.linspace(lo, hi, n)
        else:
            values = np.array([float(p) for p in text.split(",") if p.strip()])
    except ValueError as exc:
        raise ConfigError(f"invalid range {text!r} ({exc})", field) from exc
    if values.size == 0:
        raise ConfigError("empty range", field)
    if not np.all(np.isfinite(values)):
        raise ConfigError("range values must be finite", field)
    return values


def model_spec(cfg, gamma=None, xi=None):
    """Build a :class:`ModelSpec` from a merged configuration."""
    try:
        if cfg["model"] == 1:
            g = cfg["gamma"] if gamma is None else gamma
            return models.ModelSpec.model1(cfg["delta"], g, cfg["j0"], cfg["eta"])
        x = cfg["xi"] if xi is None else xi
        return models.ModelSpec.model2(x, cfg["eta"])
    except ParameterError as exc:
        raise ConfigError(str(exc), "gamma" if cfg["model"] == 1 else "xi") from exc


def thermal_from_config(cfg, eta=None):
    """Thermal parameters from whichever of temp/beta is set."""
    eta = cfg["eta"] if eta is None else eta
    try:
        if cfg["beta"] is not None:
            return thermal.thermal_params(cfg["beta"], eta)
        return thermal.thermal_params_from_temperature(cfg["temp"], eta)
    except ParameterError as exc:
        raise ConfigError(str(exc), "beta" if cfg["beta"] is not None else "temp") from exc


def squeezes(cfg):
    """``(r1, r3, variant)`` for ``evolve``; ``variant`` is None for custom."""
    variant = cfg["variant"] or "custom"
    if variant == "custom":
        r1, r3 = cfg["r1"], cfg["r3"]
        if r1 < 0 or r3 < 0:
            raise ConfigError("squeeze parameters must be non-negative", "r1" if r1 < 0 else "r3")
        return r1, r3, None
    if cfg["r"] < 0:
        raise ConfigError("squeeze parameter must be non-negative", "r")
    r1, r3 = entanglement.SqueezeVariant(variant).squeezes(cfg["r"])
    return r1, r3, entanglement.SqueezeVariant(variant)


def default_tmax(cfg):
    if cfg["tmax"] is not None:
        if not cfg["tmax"] > 0:
            raise ConfigError("must be positive", "tmax")
        return cfg["tmax"]
    return 20.0 if cfg["model"] == 1 else 50.0


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def format_value(v):
    """Shortest round-trip text for floats, empty string for missing values."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _json_value(v):
    if v is None:
        return None
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    v = float(v)
    return v if math.isfinite(v) else repr(v)


def render_table(columns, rows, fmt, config=None):
    """Render rows as the versioned CSV or JSON document."""
    if fmt == "json":
        doc = {
            "schema": SCHEMA,
            "columns": list(columns),
            "rows": [[_json_value(v) for v in row] for row in rows],
            "config": {k: _json_value(v) if not isinstance(v, str) else v
                       for k, v in sorted((config or {}).items())},
        }
        return json.dumps(doc, indent=1) + "\n"
    lines = [f"# {SCHEMA}", ",".join(columns)]
    lines += [",".join(format_value(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def write_output(text, path):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise ConfigError(f"cannot write output: {exc}", "out") from exc


def _public_config(cfg):
    return {k: v for k, v in cfg.items() if v is not None and k not in ("out", "tc_out")}


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

EVOLVE_COLUMNS = ("t", "E", "S", "I1", "I2", "I3", "I4", "lambda_min", "f_deficit")


def cmd_evolve(cfg):
    """Trajectory of the separability data of modes 1 and 3."""
    spec = model_spec(cfg)
    tp = thermal_from_config(cfg, spec.eta)
    r1, r3, variant = squeezes(cfg)
    t_max = default_tmax(cfg)
    if cfg["points"] < 2:
        raise ConfigError("need at least 2 time points", "points")
    times = np.linspace(0.0, t_max, cfg["points"])

    traj = entanglement.entanglement_trajectory(spec, tp, r1, r3, times, method=cfg["method"])
    L = dynamics.generator_matrix(spec, tp)
    f_deficit = dynamics.max_weyl_damping(L, thermal.covariance_matrix(tp.epsilon), times)

    columns = list(EVOLVE_COLUMNS)
    data = [times, traj.E, traj.S, traj.I1, traj.I2, traj.I3, traj.I4, traj.lambda_min, f_deficit]
    if cfg["oracle"]:
        if spec.variant != 1:
            raise ConfigError("the closed-form oracle exists only for Model 1", "oracle")
        if variant is None:
            if r1 == r3:
                variant = entanglement.SqueezeVariant.SYMMETRIC
            elif r3 == 0:
                variant = entanglement.SqueezeVariant.ONE_MODE
            else:
                raise ConfigError("the oracle needs r1 == r3 or r3 == 0", "oracle")
        ctx = entanglement.ClosedFormContext.from_spec(spec, tp, r1, variant)
        S_closed = entanglement.closed_form_S(ctx, times)
        diff = float(np.max(np.abs(traj.S - S_closed)))
        print(f"max|S - S_closed| = {diff:.3e}", file=sys.stderr)
        if diff > entanglement.PIPELINE_DEFECT_TOL:
            raise PipelineDefectError(
                f"numeric and closed-form indicators differ by {diff:.3e}"
            )
        columns.append("S_closed")
        data.append(S_closed)

    rows = list(zip(*[np.asarray(col, dtype=float).tolist() for col in data]))
    write_output(render_table(columns, rows, cfg["format"], _public_config(cfg)), cfg["out"])
    return EXIT_OK


def cmd_sweep(cfg):
    """Peak entanglement and birth/death times on an ``r x T`` grid."""
    variant = cfg["variant"] or "symmetric"
    if variant == "custom":
        raise ConfigError("sweeps need variant symmetric or one-mode", "variant")
    variant = entanglement.SqueezeVariant(variant)
    r_values = parse_range(cfg["r_range"], "r_range")
    T_values = parse_range(cfg["temp_range"], "temp_range")
    if r_values is None:
        raise ConfigError("required for sweep", "r_range")
    if T_values is None:
        raise ConfigError("required for sweep", "temp_range")
    if np.any(r_values < 0):
        raise ConfigError("squeeze values must be non-negative", "r_range")
    if np.any(T_values <= 0):
        raise ConfigError("temperatures must be positive", "temp_range")
    if cfg["model"] == 1:
        extra_name, extra_values = "gamma", parse_range(cfg["gamma_range"], "gamma_range")
    else:
        extra_name, extra_values = "xi", parse_range(cfg["xi_range"], "xi_range")
    swept_extra = extra_values is not None
    if not swept_extra:
        extra_values = [None]
    t_max = default_tmax(cfg)
    n_grid = max(int(cfg["points"]), 64)

    tasks, labels = [], []
    for x in extra_values:
        kwargs = {extra_name: x} if x is not None else {}
        spec = model_spec(cfg, **kwargs)
        for r in r_values:
            for T in T_values:
                tasks.append(entanglement.SweepTask(spec, float(r), float(T), variant, t_max, n_grid))
                labels.append(x)
    try:
        results = entanglement.run_sweep(tasks, cfg["workers"])
    except ParameterError as exc:
        raise ConfigError(str(exc), "temp_range") from exc

    columns = ([extra_name] if swept_extra else []) + [
        "r", "T", "max_E", "t_birth", "t_death", "entangled"]
    rows = []
    for x, res in zip(labels, results):
        row = [res.task.r, res.task.T, res.max_E, res.t_birth, res.t_death, res.entangled]
        rows.append(([x] if swept_extra else []) + row)
    write_output(render_table(columns, rows, cfg["format"], _public_config(cfg)), cfg["out"])

    if cfg["tc_out"]:
        tc_rows = []
        bracket = (float(np.min(T_values)), float(np.max(T_values)))
        for x in extra_values:
            kwargs = {extra_name: x} if x is not None else {}
            spec = model_spec(cfg, **kwargs)
            for r in r_values:
                T_c = _critical_T(spec, r, variant, bracket, t_max, n_grid)
                tc_rows.append(([x] if swept_extra else []) + [float(r), T_c])
        tc_columns = ([extra_name] if swept_extra else []) + ["r", "T_C"]
        write_output(render_table(tc_columns, tc_rows, cfg["format"], _public_config(cfg)),
                     cfg["tc_out"])
    return EXIT_OK


def _critical_T(spec, r, variant, bracket, t_max, n_grid):
    """Critical temperature, or None when the sweep bracket does not contain it.

    Model 1 uses the closed-form indicator, which stays accurate at large
    squeezing; Model 2 uses the numeric pipeline.
    """
    try:
        if spec.variant == 1:
            return entanglement.closed_form_critical_temperature(
                spec, r, variant, bracket, t_max=t_max, n_grid=n_grid)
        return entanglement.critical_temperature(spec, r, variant, bracket, t_max=t_max,
                                                 n_grid=n_grid)
    except BracketError as exc:
        print(f"r={r!r}: no critical temperature in sweep range ({exc})", file=sys.stderr)
        return None


def cmd_verify(cfg):
    """Run the self-verification suite and print one line per check."""
    start = time.perf_counter()
    results = verify.run_checks(fast=cfg["fast"], seed=cfg["seed"])
    for res in results:
        print(res.line())
    failed = [res for res in results if not res.passed]
    elapsed = time.perf_counter() - start
    print(f"{len(results) - len(failed)}/{len(results)} checks passed in {elapsed:.2f} s")
    for res in failed:
        print(f"failed: {res.name} residual={res.residual:.3e}", file=sys.stderr)
    return EXIT_VERIFY_FAILED if failed else EXIT_OK


COMMANDS = {"evolve": cmd_evolve, "sweep": cmd_sweep, "verify": cmd_verify}


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """Argument parser that raises instead of exiting, so main() owns exit codes."""

    def error(self, message):
        raise ConfigError(message)


def _add_common(p):
    p.add_argument("--config", help="flat key = value configuration file")
    p.add_argument("--model", help="1 (local dissipation) or 2 (collective dissipation)")
    p.add_argument("--delta", help="Model 1 rate delta")
    p.add_argument("--gamma", help="Model 1 cross-chain coupling gamma, |gamma| <= delta/2")
    p.add_argument("--j0", help="Model 1 overall rate J0")
    p.add_argument("--xi", help="Model 2 parameter xi >= 0")
    temp = p.add_mutually_exclusive_group()
    temp.add_argument("--temp", help="temperature T (units of eta)")
    temp.add_argument("--beta", help="inverse temperature; 'inf' for T = 0")
    p.add_argument("--eta", help="site energy scale eta")
    p.add_argument("--variant", help="symmetric, one-mode or custom")
    p.add_argument("--tmax", help="time horizon (default 20 for Model 1, 50 for Model 2)")
    p.add_argument("--points", help="number of time points")
    p.add_argument("--method", help="propagator route: auto, numeric or closed_form")
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", help="csv or json")
    p.add_argument("--seed", help="seed for randomized checks")


def build_parser():
    parser = _Parser(prog="mesofluct", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    ev = sub.add_parser("evolve", help="time series of the entanglement between chains")
    _add_common(ev)
    ev.add_argument("--r1", help="squeeze on mode 1 (custom variant)")
    ev.add_argument("--r3", help="squeeze on mode 3 (custom variant)")
    ev.add_argument("--r", help="squeeze magnitude for the symmetric/one-mode variants")
    ev.add_argument("--oracle", action="store_const", const=True,
                    help="add the Model 1 closed-form indicator column")

    sw = sub.add_parser("sweep", help="peak entanglement over an r x T grid")
    _add_common(sw)
    sw.add_argument("--r-range", dest="r_range", help="lo:hi:n or comma list")
    sw.add_argument("--temp-range", dest="temp_range", help="lo:hi:n or comma list")
    sw.add_argument("--gamma-range", dest="gamma_range", help="lo:hi:n or comma list (Model 1)")
    sw.add_argument("--xi-range", dest="xi_range", help="lo:hi:n or comma list (Model 2)")
    sw.add_argument("--tc-out", dest="tc_out", help="also write T_C(r) to this path")
    sw.add_argument("--workers", help="worker processes (default from MESOFLUCT_THREADS)")

    ve = sub.add_parser("verify", help="run the self-verification suite")
    ve.add_argument("--fast", action="store_const", const=True, help="quick subset")
    ve.add_argument("--seed", help="seed for randomized checks")
    ve.add_argument("--config", help="flat key = value configuration file")
    return parser


def resolve_config(argv):
    """Parse ``argv`` and return ``(command, merged_config)``."""
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    config_path = args.pop("config", None)
    cli_values = {k: _coerce(k, v) for k, v in args.items() if v is not None}
    file_values = read_config_file(config_path) if config_path else {}
    return command, merge_config(cli_values, file_values)


def main(argv=None):
    """Entry point; returns the process exit code."""
    try:
        command, cfg = resolve_config(sys.argv[1:] if argv is None else argv)
        return COMMANDS[command](cfg)
    except (ParameterError, InputError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericContractError as exc:
        print(f"numeric contract breached: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
