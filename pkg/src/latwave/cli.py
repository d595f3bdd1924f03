"""``latwave`` command line.

Subcommands: dispersion, sandwich, solve, simulate, certify, sweep.

Settings come from flags, then a ``--config`` file of ``key=value`` lines
(keys are the long flag names without dashes), then built-in defaults.
A JSON record goes to stdout, a short human summary to stderr, and files
to ``--out``.

Exit codes: 0 success, 1 invalid input or usage, 2 numerical failure,
3 I/O error.
"""

from __future__ import annotations

import csv
import itertools
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import _io
from .exceptions import (
    BadGrid,
    LatwaveError,
    MaxIterExceeded,
    MonotonicityBroken,
    NumericalFailure,
    SandwichViolation,
    SelectionFailed,
    SequenceNotCauchy,
    TruncationTooSmall,
    ValidationError,
)
from .lds import SimConfig, init_state, integrate, track_front, wave_shape_check, write_trajectory_csv
from .model import ModelParams, certify_nonexistence, dispersion, lambda_roots, minimal_speed
from .profile_solver import DEFAULT_DELTAS, Profile, solve_minimal_wave, solve_wave
from .sandwich import GridSpec, select_parameters, verify_inequalities

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3

DEFAULTS = {
    "mu": 0.5,
    "beta": 3.0,
    "gamma": 0.5,
    "d": 1.0,
    "speed": None,
    "minimal": False,
    "l": 40.0,
    "m": 20,
    "tol": 1e-6,
    "margin": 1.01,
    "N": 1500,
    "dt": 0.01,
    "T": 300.0,
    "level": None,
    "from_profile": None,
    "check_shape": False,
    "out": "out",
    "format": "both",
    "delta_sequence": DEFAULT_DELTAS,
    "simulate": False,
}
FORMATS = ("json", "csv", "both")
_FLOATS = {"mu", "beta", "gamma", "d", "speed", "l", "tol", "margin", "dt", "T", "level"}
_INTS = {"m", "N"}
_BOOLS = {"minimal", "check_shape", "simulate"}
_LISTS = {"delta_sequence"}
_STAGES = {
    SelectionFailed: "select_parameters",
    TruncationTooSmall: "build_problem",
    BadGrid: "build_problem",
    MaxIterExceeded: "monotone_iterate",
    MonotonicityBroken: "monotone_iterate",
    SandwichViolation: "monotone_iterate",
    SequenceNotCauchy: "minimal_sequence",
}


class StageError(LatwaveError):
    """Wraps a pipeline failure with the name of the stage that raised it."""

    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"[{stage}] {exc}")
        self.stage = stage
        self.exc = exc


def _parse_bool(key, raw):
    v = str(raw).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"{key}: not a boolean: {raw!r}")


def parse_list(raw, cast=float) -> list:
    """Comma-separated values; an empty string is the empty list."""
    if isinstance(raw, (list, tuple)):
        return [cast(x) for x in raw]
    text = str(raw).strip()
    if not text:
        return []
    try:
        return [cast(x) for x in text.split(",")]
    except ValueError as exc:
        raise ValidationError(f"bad list {raw!r}: {exc}") from None


def _coerce(key: str, raw):
    if raw is None:
        return None
    try:
        if key in _FLOATS:
            return float(raw)
        if key in _INTS:
            value = float(raw)
            if value != int(value):
                raise ValueError("not an integer")
            return int(value)
    except ValueError:
        raise ValidationError(f"{key}: cannot parse {raw!r}") from None
    if key in _BOOLS:
        return _parse_bool(key, raw)
    if key in _LISTS:
        return tuple(parse_list(raw))
    if key == "format" and raw not in FORMATS:
        raise ValidationError(f"format must be one of {FORMATS}, got {raw!r}")
    return raw


def read_config(path) -> dict:
    """Strict ``key=value`` reader: unknown keys and malformed lines are errors."""
    out = {}
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{lineno}: expected key=value")
        key, value = (x.strip() for x in line.split("=", 1))
        name = key.replace("-", "_")
        if name not in DEFAULTS or name in ("config",):
            raise ValidationError(f"{path}:{lineno}: unknown key {key!r}")
        out[name] = value
    return out


def resolve_settings(ctx: click.Context, given: dict, raw_keys=()) -> dict:
    """Merge flags over the config file over defaults.

    Keys listed in ``raw_keys`` are kept as strings (sweep lists).
    """
    settings = dict(DEFAULTS)
    config_path = given.get("config")
    if config_path:
        for key, value in read_config(config_path).items():
            settings[key] = value if key in raw_keys else _coerce(key, value)
    for key, value in given.items():
        if key == "config":
            continue
        source = ctx.get_parameter_source(key)
        if source is not None and source.name == "COMMANDLINE":
            settings[key] = value if key in raw_keys else _coerce(key, value)
    return settings


def _params(s) -> ModelParams:
    return ModelParams(s["mu"], s["beta"], s["gamma"], s["d"])


def _outdir(s) -> Path:
    out = Path(s["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _wants(s, kind: str) -> bool:
    return s["format"] in (kind, "both")


def _emit(record) -> None:
    click.echo(_io.dumps(record))


def _say(msg: str) -> None:
    click.echo(msg, err=True)


def _write_rows(path: Path, header, rows) -> Path:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(x) for x in row])
    return path


def _cell(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return "%.17g" % x
    return x


# shared options ------------------------------------------------------------

def _model_opts(f, numeric=True):
    kind = float if numeric else str
    for name in ("d", "gamma", "beta", "mu"):
        f = click.option(f"--{name}", name, type=kind, default=DEFAULTS[name],
                         show_default=True)(f)
    return f


def _io_opts(f):
    f = click.option("--format", "format", type=click.Choice(FORMATS), default="both",
                     show_default=True, help="Which file formats to write.")(f)
    f = click.option("--out", "out", type=click.Path(), default="out",
                     show_default=True, help="Output directory.")(f)
    f = click.option("--config", "config", type=click.Path(dir_okay=False), default=None,
                     help="key=value settings file.")(f)
    return f


def model_options(f):
    return _io_opts(_model_opts(f))


def sweep_options(f):
    return _io_opts(_model_opts(f, numeric=False))


@click.group()
def cli():
    """Traveling waves of a lattice SIR model with demography."""


# dispersion ---------------------------------------------------------------

@cli.command("dispersion")
@click.option("--speed", "speed", type=float, default=None, help="Speed for lambda1/lambda2.")
@model_options
@click.pass_context
def cmd_dispersion(ctx, **given):
    """sigma, endemic state, minimal speed and characteristic roots."""
    s = resolve_settings(ctx, given)
    p = _params(s)
    rep = dispersion(p, s["speed"])
    record = {"command": "dispersion", "params": p.as_dict(), **rep.as_dict()}
    out = _outdir(s)
    if _wants(s, "json"):
        _io.write_json(record, out / "dispersion.json")
    if _wants(s, "csv"):
        d = rep.as_dict()
        _write_rows(out / "dispersion.csv", list(p.as_dict()) + list(d),
                    [list(p.as_dict().values()) + list(d.values())])
    _emit(record)
    _say(f"sigma={rep.sigma:.6g}  (s*, e*)=({rep.s_star:.6g}, {rep.e_star:.6g})  "
         f"c*={rep.c_star:.10g}  lambda*={rep.lambda_star:.10g}")
    if rep.lambda1 is not None:
        _say(f"c={rep.c:.6g}: lambda1={rep.lambda1:.10g}  lambda2={rep.lambda2:.10g}")
    return EXIT_OK


# sandwich -----------------------------------------------------------------

@cli.command("sandwich")
@click.option("--speed", "speed", type=float, default=None)
@click.option("--margin", "margin", type=float, default=DEFAULTS["margin"], show_default=True)
@model_options
@click.pass_context
def cmd_sandwich(ctx, **given):
    """Select upper/lower solutions at a speed and verify the four inequalities."""
    s = resolve_settings(ctx, given)
    if s["speed"] is None:
        raise click.UsageError("--speed is required")
    p = _params(s)
    sp = select_parameters(p, s["speed"], s["margin"])
    rep = verify_inequalities(p, s["speed"], sp, GridSpec())
    record = {"command": "sandwich", "params": p.as_dict(), "sandwich": sp.as_dict(),
              **rep.as_dict()}
    out = _outdir(s)
    if _wants(s, "json"):
        _io.write_json(record, out / "sandwich.json")
    if _wants(s, "csv"):
        rows = [[ch.name, ch.sense, ch.worst, ch.where, ch.checked, ch.passed]
                for ch in rep.checks.values()]
        _write_rows(out / "sandwich.csv", ["inequality", "sense", "worst", "where",
                                           "checked", "passed"], rows)
    _emit(record)
    _say(f"xi1={sp.xi1:.6g} xi2={sp.xi2:.6g}  inequalities "
         + ", ".join(f"{k}:{'ok' if v.passed else 'FAIL'}" for k, v in rep.checks.items()))
    return EXIT_OK if rep.passed else EXIT_NUMERIC


# solve --------------------------------------------------------------------

def _stage_run(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except NumericalFailure as exc:
        stage = next((v for k, v in _STAGES.items() if isinstance(exc, k)), fn.__name__)
        raise StageError(stage, exc) from exc
    except ValidationError as exc:
        stage = next((v for k, v in _STAGES.items() if isinstance(exc, k)), fn.__name__)
        raise StageError(stage, exc) from exc


@cli.command("solve")
@click.option("--speed", "speed", type=float, default=None)
@click.option("--minimal", "minimal", is_flag=True, default=False,
              help="Approach c* through a decreasing-speed sequence.")
@click.option("--l", "l", type=float, default=DEFAULTS["l"], show_default=True)
@click.option("--m", "m", type=int, default=DEFAULTS["m"], show_default=True)
@click.option("--tol", "tol", type=float, default=DEFAULTS["tol"], show_default=True)
@click.option("--margin", "margin", type=float, default=DEFAULTS["margin"], show_default=True)
@model_options
@click.pass_context
def cmd_solve(ctx, **given):
    """Solve for a wave profile (or the minimal-speed wave with --minimal)."""
    s = resolve_settings(ctx, given)
    if s["speed"] is None and not s["minimal"]:
        raise click.UsageError("give --speed or --minimal")
    if s["speed"] is not None and s["minimal"]:
        raise click.UsageError("--speed and --minimal are mutually exclusive")
    p = _params(s)
    t0 = time.perf_counter()
    if s["minimal"]:
        wp = _stage_run(solve_minimal_wave, p, s["l"], s["m"], s["tol"],
                        s["delta_sequence"], margin=s["margin"])
    else:
        wp = _stage_run(solve_wave, p, s["speed"], s["l"], s["m"], s["tol"],
                        margin=s["margin"])
    elapsed = time.perf_counter() - t0
    out = _outdir(s)
    wp.profile.to_csv(out / "profile.csv")
    record = {"command": "solve", "minimal": bool(s["minimal"])}
    record.update(wp.as_dict(timing=False))
    diagnostics = record.pop("diagnostics")
    sequence = record.pop("sequence", None)
    solve_record = dict(record)
    if _wants(s, "json"):
        _io.write_json(solve_record, out / "solve.json")
        _io.write_json(diagnostics, out / "diagnostics.json")
        if sequence is not None:
            _io.write_json(sequence, out / "sequence.json")
    if _wants(s, "csv"):
        rep = wp.report.as_dict(timing=False)
        _write_rows(out / "report.csv", ["key", "value"],
                    [["c", wp.c]] + [[k, v] for k, v in rep.items()])
        if sequence is not None:
            seq = wp.sequence
            dist = [None] + list(seq.distances)
            _write_rows(out / "sequence.csv", ["k", "delta", "c", "shift", "distance_to_prev"],
                        [[k, a, b, c, e] for k, (a, b, c, e)
                         in enumerate(zip(seq.deltas, seq.speeds, seq.shifts, dist))])
    # solve.json is always written so that --from-profile can find the speed
    if not _wants(s, "json"):
        _io.write_json(solve_record, out / "solve.json")
    record["diagnostics"] = diagnostics
    if sequence is not None:
        record["sequence"] = sequence
    _emit(record)
    rep = wp.report
    _say(f"c={wp.c:.10g}: {rep.iterations} iterations, gap={rep.final_gap:.3g}, "
         f"ode_residual={rep.ode_residual:.3g}, {elapsed:.2f}s -> {out / 'profile.csv'}")
    if sequence is not None:
        _say("shifted distances: " + ", ".join(f"{x:.4g}" for x in wp.sequence.distances))
    return EXIT_OK


# simulate -----------------------------------------------------------------

def _load_profile(path, s, p):
    """Profile CSV plus the speed and lambda1 from a neighbouring solve.json if present."""
    path = Path(path)
    meta_path = path.with_name("solve.json")
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    c = s["speed"] if s["speed"] is not None else meta.get("c")
    if c is None:
        raise click.UsageError("--from-profile needs --speed (no solve.json next to the profile)")
    lam1 = meta.get("lambda1")
    if lam1 is None or s["speed"] is not None:
        lam1, _ = lambda_roots(p, c)
    return Profile.from_csv(path, lam1), float(c)


@cli.command("simulate")
@click.option("--N", "N", type=int, default=DEFAULTS["N"], show_default=True,
              help="Lattice half-width.")
@click.option("--dt", "dt", type=float, default=DEFAULTS["dt"], show_default=True)
@click.option("--T", "T", type=float, default=DEFAULTS["T"], show_default=True)
@click.option("--level", "level", type=float, default=None, help="Front level (default e*/2).")
@click.option("--from-profile", "from_profile", type=click.Path(dir_okay=False), default=None)
@click.option("--check-shape", "check_shape", is_flag=True, default=False)
@click.option("--speed", "speed", type=float, default=None,
              help="Profile speed for --from-profile.")
@model_options
@click.pass_context
def cmd_simulate(ctx, **given):
    """Integrate the lattice system and measure the front speed."""
    s = resolve_settings(ctx, given)
    if s["check_shape"] and not s["from_profile"]:
        raise click.UsageError("--check-shape needs --from-profile")
    p = _params(s)
    cfg = SimConfig(s["dt"], s["T"], level=s["level"], params=p)
    c_star, _ = minimal_speed(p)
    out = _outdir(s)
    record = {"command": "simulate", "params": p.as_dict(), "N": s["N"], "dt": s["dt"],
              "T": s["T"], "c_star": c_star}
    if s["from_profile"]:
        prof, c = _load_profile(s["from_profile"], s, p)
        if s["check_shape"]:
            chk = wave_shape_check(p, prof, c, cfg, N=s["N"], c_star=c_star)
            record["shape"] = chk.as_dict()
            if _wants(s, "json"):
                _io.write_json(record, out / "shape.json")
            if _wants(s, "csv"):
                _write_rows(out / "shape.csv", ["t", "shift", "distance"],
                            zip(chk.times, chk.shifts, chk.distances))
            _emit(record)
            _say(f"drift {chk.drift_rate:.6g} vs c={c:.6g} "
                 f"(rel. error {chk.relative_drift_error:.2e}); "
                 f"max shape distance {chk.max_distance:.3g}")
            return EXIT_OK
        recs = integrate(p, init_state(s["N"], "from_profile", profile=prof), cfg)
        if _wants(s, "csv"):
            write_trajectory_csv(recs, out / "trajectory.csv")
        record["profile_speed"] = c
        if _wants(s, "json"):
            _io.write_json(record, out / "simulate.json")
        _emit(record)
        return EXIT_OK

    recs = integrate(p, init_state(s["N"], "left_block"), cfg)
    level = cfg.front_level(p)
    trace = track_front(recs, level, cfg.fit_window_fraction)
    rel = abs(trace.fitted_speed - c_star) / c_star
    record.update({"fitted_speed": trace.fitted_speed, "fit_stderr": trace.fit_stderr,
                   "relative_error": rel, "level": level,
                   "monotone_after_transient": trace.monotone_after_transient})
    if _wants(s, "csv"):
        write_trajectory_csv(recs, out / "trajectory.csv")
        trace.to_csv(out / "front.csv")
    if _wants(s, "json"):
        _io.write_json(record, out / "simulate.json")
    _emit(record)
    _say(f"front speed {trace.fitted_speed:.6g} +- {trace.fit_stderr:.2g}, "
         f"c*={c_star:.6g}, relative error {rel:.2%}")
    return EXIT_OK


# certify ------------------------------------------------------------------

@cli.command("certify")
@click.option("--speed", "speed", type=str, default=None,
              help="One speed or a comma-separated list (default: 0.5c*..1.5c*, step 0.01c*).")
@model_options
@click.pass_context
def cmd_certify(ctx, **given):
    """Certify that no wave exists at the given speed(s)."""
    s = resolve_settings(ctx, given, raw_keys=("speed",))
    p = _params(s)
    c_star, _ = minimal_speed(p)
    if s["speed"] is None:
        speeds = list(c_star * (0.5 + 0.01 * np.arange(101)))
        single = False
    else:
        speeds = parse_list(s["speed"])
        single = len(speeds) == 1
    certs = [certify_nonexistence(p, c, c_star) for c in speeds]
    flips = [k for k in range(1, len(certs)) if certs[k].certified != certs[k - 1].certified]
    if single:
        record = {"command": "certify", "params": p.as_dict(), **certs[0].as_dict()}
    else:
        record = {"command": "certify", "params": p.as_dict(), "c_star": c_star,
                  "certificates": [c.as_dict() for c in certs], "flips": len(flips),
                  "flip_between": [[speeds[k - 1], speeds[k]] for k in flips]}
    out = _outdir(s)
    if _wants(s, "json"):
        _io.write_json(record, out / "certify.json")
    if _wants(s, "csv"):
        _write_rows(out / "certify.csv", ["c", "min_char_value", "argmin_lambda", "c_star",
                                          "certified"],
                    [[c.c, c.min_char_value, c.argmin_lambda, c.c_star, c.certified]
                     for c in certs])
    _emit(record)
    n_cert = sum(c.certified for c in certs)
    _say(f"c*={c_star:.10g}: {n_cert}/{len(certs)} speeds certified wave-free")
    return EXIT_OK


# sweep --------------------------------------------------------------------

SWEEP_COLUMNS = ["mu", "beta", "gamma", "d", "sigma", "s_star", "e_star", "c_star",
                 "lambda_star", "error"]
SIM_COLUMNS = ["measured_speed", "relative_error"]


def sweep_point(point, simulate=False, sim=None) -> dict:
    """Dispersion (and optionally a simulated front speed) at one grid point."""
    mu, beta, gamma, d = point
    row = {"mu": mu, "beta": beta, "gamma": gamma, "d": d}
    try:
        p = ModelParams(mu, beta, gamma, d)
        rep = dispersion(p)
        row.update(sigma=rep.sigma, s_star=rep.s_star, e_star=rep.e_star,
                   c_star=rep.c_star, lambda_star=rep.lambda_star)
        if simulate:
            cfg = SimConfig(sim["dt"], sim["T"], level=sim["level"], params=p)
            recs = integrate(p, init_state(sim["N"], "left_block"), cfg)
            trace = track_front(recs, cfg.front_level(p), cfg.fit_window_fraction)
            row["measured_speed"] = trace.fitted_speed
            row["relative_error"] = abs(trace.fitted_speed - rep.c_star) / rep.c_star
    except LatwaveError as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


@cli.command("sweep")
@click.option("--simulate", "simulate", is_flag=True, default=False,
              help="Also measure the front speed by simulation at each point.")
@click.option("--N", "N", type=int, default=DEFAULTS["N"], show_default=True)
@click.option("--dt", "dt", type=float, default=DEFAULTS["dt"], show_default=True)
@click.option("--T", "T", type=float, default=DEFAULTS["T"], show_default=True)
@click.option("--level", "level", type=float, default=None)
@sweep_options
@click.pass_context
def cmd_sweep(ctx, **given):
    """Dispersion over a cartesian grid; model flags take comma-separated lists."""
    s = resolve_settings(ctx, given, raw_keys=("mu", "beta", "gamma", "d"))
    axes = [parse_list(s[k]) for k in ("mu", "beta", "gamma", "d")]
    points = list(itertools.product(*axes))
    sim = {"N": s["N"], "dt": s["dt"], "T": s["T"], "level": s["level"]}
    columns = SWEEP_COLUMNS + (SIM_COLUMNS if s["simulate"] else [])
    if len(points) > 1:
        with ProcessPoolExecutor() as pool:
            rows = list(pool.map(sweep_point, points, [s["simulate"]] * len(points),
                                 [sim] * len(points)))
    else:
        rows = [sweep_point(pt, s["simulate"], sim) for pt in points]
    out = _outdir(s)
    _write_rows(out / "sweep.csv", columns, [[r.get(c) for c in columns] for r in rows])
    record = {"command": "sweep", "points": len(rows), "columns": columns,
              "rows": [{c: r.get(c) for c in columns} for r in rows]}
    if _wants(s, "json"):
        _io.write_json(record, out / "sweep.json")
    _emit(record)
    failed = sum(1 for r in rows if r.get("error"))
    _say(f"{len(rows)} points, {failed} failed -> {out / 'sweep.csv'}")
    return EXIT_OK


def _fail(code: int, msg: str) -> int:
    click.echo(f"latwave: error: {msg}", err=True)
    return code


def run(argv=None) -> int:
    """Run the CLI and return the exit code instead of exiting."""
    try:
        rv = cli.main(args=argv, prog_name="latwave", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code or 0)
    except click.exceptions.Abort:
        return _fail(EXIT_INVALID, "aborted")
    except click.UsageError as exc:
        return _fail(EXIT_INVALID, exc.format_message())
    except click.ClickException as exc:
        return _fail(EXIT_INVALID, exc.format_message())
    except StageError as exc:
        code = EXIT_INVALID if isinstance(exc.exc, ValidationError) else EXIT_NUMERIC
        return _fail(code, str(exc))
    except ValidationError as exc:
        return _fail(EXIT_INVALID, str(exc))
    except NumericalFailure as exc:
        return _fail(EXIT_NUMERIC, f"{type(exc).__name__}: {exc}")
    except OSError as exc:
        return _fail(EXIT_IO, str(exc))
    return int(rv or 0)


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
