"""Command-line front end.

Every subcommand resolves its parameters (defaults, then flags, then the
``--config`` key-value file), runs, writes CSV outputs and a JSON manifest
holding the resolved parameters.  ``hexkpp replay MANIFEST`` re-runs a
manifest and reproduces byte-identical CSV files.

Exit codes: 0 success, 1 usage error, 2 solver failure, 3 partial results.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import __version__
from . import dispersion as disp
from . import hexsim, wave
from ._kernels import BACKEND
from .growth import logistic
from .io import read_keyvalue, write_csv, write_json

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_PARTIAL = 0, 1, 2, 3

PHI_DEFAULT_N = (1, 2, 4, 20, 50, 100)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# parameter handling
# ---------------------------------------------------------------------------

def _float_list(text) -> List[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    parts = str(text).replace("{", " ").replace("}", " ").replace(",", " ").split()
    return [float(p) for p in parts]


def _int_list(text) -> List[int]:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [int(round(v)) for v in _float_list(text)]


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


def _optional_float(text):
    if text is None or str(text).strip().lower() in ("", "auto", "none"):
        return None
    return float(text)


# name -> (default, converter, is_angle)
Schema = Dict[str, tuple]

SPEED_CURVE: Schema = {
    "fprime0": (10.0, float, False),
    "alpha_start": (0.0, float, True),
    "alpha_end": (disp.TWO_PI, float, True),
    "alpha_step": (math.pi / 180.0, float, True),
}
PHI: Schema = {
    "n_max": (100, int, False),
    "extra_n": ([], _int_list, False),
    "alpha_step": (math.pi / 180.0, float, True),
}
WAVE: Schema = {
    "c_factor": (1.1, float, False),
    "alpha": (0.0, float, True),
    "a": (1.0, float, False),
    "L": (60.0, float, False),
    "h": (0.02, float, False),
    "tol": (1e-8, float, False),
    "max_iters": (5000, int, False),
    "safety": (0.5, float, False),
    "M": (None, _optional_float, False),
}
SPREAD: Schema = {
    "a": (200.0, float, False),
    "R": (120, int, False),
    "dt": (None, _optional_float, False),
    "t_max": (5.0, float, False),
    "boundary": ("dirichlet", str, False),
    "rings": ([5, 10, 20, 60], _int_list, False),
    "snapshot_every": (0, int, False),
    "initial": ("delta", str, False),
}
SQUARE: Schema = {
    "fprime0": (10.0, float, False),
    "beta_start": (0.0, float, True),
    "beta_end": (disp.TWO_PI, float, True),
    "beta_step": (math.pi / 180.0, float, True),
}


def resolve(schema: Schema, flags: Dict[str, object], config: Dict[str, str],
            degrees: bool) -> Dict[str, object]:
    """Defaults, overridden by flags, overridden by config entries; angles to radians."""
    out = {k: v[0] for k, v in schema.items()}
    given = {}
    for k, v in flags.items():
        if k in schema and v is not None:
            given[k] = v
    for raw, v in config.items():
        k = raw.replace("-", "_")
        if k not in schema:
            raise UsageError(f"unknown config key {raw!r}; expected one of {sorted(schema)}")
        given[k] = v
    for k, v in given.items():
        default, conv, is_angle = schema[k]
        try:
            val = conv(v)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad value for {k}: {v!r} ({exc})") from None
        if is_angle and degrees:
            val = math.radians(val)
        out[k] = val
    return out


def angle_grid(start: float, end: float, step: float) -> np.ndarray:
    """``start + k*step`` for ``k < ceil((end-start)/step)``; one point if start == end."""
    if not step > 0:
        raise UsageError("angle step must be positive")
    if end < start:
        raise UsageError("angle range end must not precede its start")
    if end == start:
        return np.array([start])
    count = int(math.ceil((end - start) / step - 1e-9))
    return start + step * np.arange(max(count, 1))


# ---------------------------------------------------------------------------
# subcommands: each takes resolved params and an output path, returns
# (exit code, output files, extra manifest fields)
# ---------------------------------------------------------------------------

def _sibling(out: Path, suffix: str) -> Path:
    return out.with_name(out.stem + suffix)


def _extrema_summary(angles, values, fails):
    maxima, minima = disp.curve_extrema(angles, values)
    return {
        "maxima": [{"angle": float(angles[i]), "value": float(values[i])} for i in maxima],
        "minima": [{"angle": float(angles[i]), "value": float(values[i])} for i in minima],
        "min_value": float(np.nanmin(values)) if len(values) else None,
        "max_value": float(np.nanmax(values)) if len(values) else None,
        "failed_rows": fails,
    }


def _curve(p, out: Path, start_key, end_key, step_key, solve, header):
    angles = angle_grid(p[start_key], p[end_key], p[step_key])
    if not p["fprime0"] > 0:
        raise UsageError("fprime0 must be positive")
    rows, values, fails = [], [], []
    for k, a in enumerate(angles):
        try:
            c, lam = solve(float(a))
        except (disp.BracketError, ArithmeticError, ValueError) as exc:
            c, lam = float("nan"), float("nan")
            fails.append({"row": k, "angle": float(a), "error": str(exc)})
        rows.append((float(a), c, lam))
        values.append(c)
    write_csv(out, header, rows)
    summary = _sibling(out, ".summary.json")
    write_json(summary, _extrema_summary(angles, np.array(values), fails))
    code = EXIT_SOLVER if fails else EXIT_OK
    return code, [str(out), str(summary)], {"rows": len(rows), "failed_rows": len(fails)}


def cmd_speed_curve(p, out: Path):
    def solve(a):
        r = disp.minimal_speed(disp.Direction.from_angle(a), p["fprime0"])
        return r.c_star, r.lambda_star
    return _curve(p, out, "alpha_start", "alpha_end", "alpha_step", solve,
                  ("alpha", "c_star", "lambda_star"))


def cmd_square(p, out: Path):
    def solve(b):
        return disp.square_minimal_speed(b, p["fprime0"])
    return _curve(p, out, "beta_start", "beta_end", "beta_step", solve,
                  ("beta", "c_s_star", "nu_star"))


def cmd_phi(p, out: Path):
    if p["n_max"] < 0:
        raise UsageError("n_max must be >= 0")
    if any(n < 0 for n in p["extra_n"]):
        raise UsageError("extra n values must be >= 0")
    ns = sorted({n for n in PHI_DEFAULT_N if n <= p["n_max"]} | set(p["extra_n"]))
    alphas = angle_grid(0.0, disp.TWO_PI, p["alpha_step"])
    rows = []
    for n in ns:
        vals = disp.phi(n, alphas)
        rows.extend((float(a), n, float(v)) for a, v in zip(alphas, vals))
    write_csv(out, ("alpha", "n", "phi_n"), rows)
    return EXIT_OK, [str(out)], {"n_values": ns, "rows": len(rows)}


def cmd_wave(p, out: Path):
    if not p["a"] > 0:
        raise UsageError("logistic rate a must be positive")
    f = logistic(p["a"])
    direction = disp.Direction.from_angle(p["alpha"])
    c_star = disp.minimal_speed(direction, f.fprime0).c_star
    c = p["c_factor"] * c_star
    extra = {"c_star": c_star, "c": c}
    try:
        prof = wave.iterate_profile(c, direction, f, L=p["L"], h=p["h"], tol=p["tol"],
                                    max_iters=p["max_iters"], safety=p["safety"], M=p["M"])
    except (wave.SubcriticalSpeedError, wave.ConvergenceError,
            wave.SandwichViolation) as exc:
        print(f"hexkpp wave: {exc}", file=sys.stderr)
        extra["error"] = str(exc)
        return EXIT_SOLVER, [], extra
    prof = wave.normalize_profile(prof)
    side = _sibling(out, ".json")
    prof.write(out)
    payload = prof.sidecar()
    payload.update(c_star=c_star, c_factor=p["c_factor"], a=p["a"], tol=p["tol"])
    write_json(side, payload)
    extra.update(residual_max=prof.residual_max, iterations=prof.iterations)
    return EXIT_OK, [str(out), str(side)], extra


def cmd_spread(p, out: Path):
    cfg = hexsim.SimConfig(a=p["a"], R=p["R"], dt=p["dt"], t_max=p["t_max"],
                           boundary=p["boundary"].lower(), rings=tuple(p["rings"]),
                           snapshot_every=p["snapshot_every"], initial=p["initial"].lower())
    out.mkdir(parents=True, exist_ok=True)
    try:
        res = hexsim.run(cfg)
    except hexsim.StabilityError as exc:
        print(f"hexkpp spread: {exc}", file=sys.stderr)
        return EXIT_SOLVER, [], {"error": str(exc)}
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    files = []
    crossings = out / "crossings.csv"
    write_csv(crossings, ("ray_alpha", "ring_n", "i", "j", "x", "y", "t_cross"),
              res.crossing_rows())
    files.append(str(crossings))
    extra = {"partial": res.partial, "t_final": res.t_final, "steps": res.steps,
             "half_extents": list(res.extents), "backend": BACKEND}
    try:
        speeds = hexsim.estimate_speeds(res.records, allow_partial=True)
    except hexsim.DataQualityError as exc:
        print(f"hexkpp spread: {exc}", file=sys.stderr)
        extra["error"] = str(exc)
        return EXIT_SOLVER, files, extra
    cache: Dict[float, float] = {}
    rows = []
    for s in speeds:
        if s.alpha not in cache:
            cache[s.alpha] = disp.minimal_speed(disp.Direction.from_angle(s.alpha), cfg.a).c_star
        rows.append((s.alpha, s.n, s.cbar, cache[s.alpha]))
    speeds_csv = out / "speeds.csv"
    write_csv(speeds_csv, ("alpha", "n", "cbar", "c_star"), rows)
    files.append(str(speeds_csv))
    if res.snapshots:
        snap_dir = out / "snapshots"
        snap_dir.mkdir(exist_ok=True)
        for k, (t, v) in enumerate(res.snapshots):
            path = snap_dir / f"snapshot_{k:05d}.csv"
            hexsim.write_snapshot(path, t, cfg.R, v)
            files.append(str(path))
    if res.partial:
        missing = sum(1 for r in res.records if math.isnan(r.t_cross))
        print(f"hexkpp spread: t_max={cfg.t_max} reached with {missing} monitored nodes "
              "below 1/2; results are partial", file=sys.stderr)
        extra["uncrossed"] = missing
        return EXIT_PARTIAL, files, extra
    return EXIT_OK, files, extra


COMMANDS: Dict[str, tuple] = {
    "speed-curve": (SPEED_CURVE, cmd_speed_curve, "speed_curve.csv",
                    "minimal wave speed c*(alpha) over a range of angles"),
    "phi": (PHI, cmd_phi, "phi.csv", "angular functions Phi_n(alpha)"),
    "wave": (WAVE, cmd_wave, "wave.csv", "travelling-wave profile by monotone iteration"),
    "spread": (SPREAD, cmd_spread, "spread", "lattice spreading simulation and front speeds"),
    "square": (SQUARE, cmd_square, "square.csv", "square-lattice minimal speed c_s*(beta)"),
}


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------

def manifest_path(command: str, out: Path) -> Path:
    if command == "spread":
        return out / "manifest.json"
    return _sibling(out, ".manifest.json")


def execute(command: str, params: Dict[str, object], out: Path,
            seed: Optional[int] = None) -> int:
    """Run a subcommand on resolved parameters and write its manifest."""
    schema, fn, _, _ = COMMANDS[command]
    if command != "spread" and out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    code, files, extra = fn(params, out)
    manifest = {
        "subcommand": command,
        "params": params,
        "version": __version__,
        "seed": seed,
        "outputs": files,
        "exit_code": code,
        "duration_s": time.perf_counter() - t0,
        "details": extra,
    }
    write_json(manifest_path(command, out), manifest)
    return code


def _add_common(sp: argparse.ArgumentParser, default_out: str) -> None:
    sp.add_argument("--out", default=default_out,
                    help=f"output path (default: {default_out})")
    sp.add_argument("--config", help="key = value file; entries override flags")
    sp.add_argument("--seed", type=int, default=None,
                    help="recorded in the manifest only; runs are deterministic")
    sp.add_argument("--degrees", action="store_true",
                    help="angles on input are in degrees")


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hexkpp", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"hexkpp {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name, (schema, _, default_out, helptext) in COMMANDS.items():
        sp = sub.add_parser(name, help=helptext, description=helptext)
        _add_common(sp, default_out)
        for key, (default, conv, is_angle) in schema.items():
            kind = conv if conv in (int, float) else str
            unit = " (radians unless --degrees)" if is_angle else ""
            sp.add_argument(_flag(key), dest=key, type=kind, default=None,
                            help=f"default {default!r}{unit}")
    rp = sub.add_parser("replay", help="re-run a manifest's resolved parameters")
    rp.add_argument("manifest")
    rp.add_argument("--out", default=None, help="write outputs here instead")
    return parser


def _replay(args) -> int:
    with open(args.manifest) as fh:
        m = json.load(fh)
    command = m.get("subcommand")
    if command not in COMMANDS:
        raise UsageError(f"manifest names unknown subcommand {command!r}")
    schema = COMMANDS[command][0]
    unknown = set(m["params"]) - set(schema)
    if unknown:
        raise UsageError(f"manifest has unknown parameters {sorted(unknown)}")
    params = {k: m["params"].get(k, schema[k][0]) for k in schema}
    if args.out is not None:
        out = Path(args.out)
    elif command == "spread":
        out = Path(args.manifest).parent
    else:
        out = Path(m["outputs"][0]) if m.get("outputs") else Path(COMMANDS[command][2])
    return execute(command, params, out, m.get("seed"))


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        if args.command == "replay":
            return _replay(args)
        schema = COMMANDS[args.command][0]
        config = read_keyvalue(args.config) if args.config else {}
        degrees = args.degrees or _bool(config.pop("degrees", False))
        params = resolve(schema, vars(args), config, degrees)
        return execute(args.command, params, Path(args.out), args.seed)
    except UsageError as exc:
        print(f"hexkpp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"hexkpp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
