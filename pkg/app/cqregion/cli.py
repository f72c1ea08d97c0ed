"""
Command-line surface for cqregion.

Subcommands:
  curve       optimized trade-off envelope as CSV
  compare     envelope vs the time-sharing segment as CSV
  capacities  C1, Q1, degradability residual and the entanglement-assisted point
  check       property suites
  replay      re-run a command from the manifest embedded in an output file

Exit codes: 0 success, 1 failed check, 2 unreadable or invalid channel config,
3 invalid flag or unknown suite.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from app.cqregion import __version__, load_runtime
from app.cqregion.config import ConfigError, Settings
from app.cqregion.constants import (
    COMPARE_GRID_POINTS,
    COMPARE_HEADER,
    CURVE_HEADER,
    DEFAULT_FD_STEP,
    DEFAULT_MAX_ITERS,
    DEFAULT_REFINE_ROUNDS,
    DEFAULT_RESTARTS,
    DEFAULT_SEED,
    DEFAULT_TOL,
    REPORT_SCHEMA,
    TAG_LAMBDA,
    TAG_Q1,
)
from app.cqregion.modules.channel.models import ChannelError, KrausChannel, ResourceGuardError
from app.cqregion.modules.channel.parsers import channel_from_config, load_channel_config
from app.cqregion.modules.channel.service import degradability_residual, validate
from app.cqregion.modules.infoquant.models import Ensemble
from app.cqregion.modules.region.models import OptimizerConfig, RatePoint, RegionError, TradeoffCurve
from app.cqregion.modules.region.service import (
    bounds,
    holevo_capacity,
    interpolate_envelope,
    negative_R_map,
    probe_flat_region,
    q1_capacity,
    sweep_curve,
    upper_envelope,
)
from app.cqregion.modules.region.suites import SUITES, run_suite
from app.cqregion.storage import StorageError, storage_for_output
from app.cqregion.utils import complex_to_pairs, format_number, json_dumps_sorted, parse_lambda_grid

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_USAGE = 3

# Options that determine a run's output; echoed in the manifest and restored by replay.
RUN_OPTIONS = ("lambda_grid", "restarts", "seed", "tol", "max_iters", "cardinality", "tensor_power", "threads", "refine_rounds", "probe_flat_region")


class UsageError(Exception):
    pass


class CliArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_optimizer_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda-grid", dest="lambda_grid", default="default", help='"default", a comma list, or start:stop:count')
    p.add_argument("--restarts", type=int, default=DEFAULT_RESTARTS)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--max-iters", dest="max_iters", type=int, default=DEFAULT_MAX_ITERS)
    p.add_argument("--cardinality", type=int, default=None, help="ensemble size (default dim_in^2 + 2)")
    p.add_argument("--tensor-power", dest="tensor_power", type=int, default=1)
    p.add_argument("--refine-rounds", dest="refine_rounds", type=int, default=DEFAULT_REFINE_ROUNDS, help="chord-slope passes after the grid (0 = grid only)")
    p.add_argument("--threads", type=int, default=None, help="worker threads (overrides CQREGION_THREADS; 0 = auto)")
    p.add_argument("--log-level", dest="log_level", default=None)


def build_parser() -> CliArgumentParser:
    parser = CliArgumentParser(prog="cqregion", description="Simultaneous classical/quantum capacity region of a quantum channel.")
    parser.add_argument("--version", action="version", version=f"cqregion {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("curve", "optimized trade-off envelope (CSV)"),
        ("compare", "envelope minus time-sharing (CSV)"),
        ("capacities", "C1, Q1, degradability and EA point"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--channel", required=True, help="channel config JSON file")
        p.add_argument("--out", default=None, help="output file (CSV, or JSON report for capacities)")
        _add_optimizer_flags(p)
        if name == "capacities":
            p.add_argument("--probe-flat-region", dest="probe_flat_region", action="store_true")

    p = sub.add_parser("check", help="run a property suite")
    p.add_argument("--suite", required=True, choices=sorted(SUITES))
    _add_optimizer_flags(p)

    p = sub.add_parser("replay", help="re-run a command from an output file's manifest")
    p.add_argument("source", help="CSV or JSON file written by cqregion")
    p.add_argument("--out", required=True)
    p.add_argument("--log-level", dest="log_level", default=None)
    return parser


def _optimizer_config(args: argparse.Namespace, settings: Settings) -> OptimizerConfig:
    try:
        grid = parse_lambda_grid(args.lambda_grid)
    except ValueError as e:
        raise UsageError(f"--lambda-grid: {e}") from e
    if args.tensor_power > settings.max_tensor_power:
        raise UsageError(f"--tensor-power {args.tensor_power} exceeds CQREGION_MAX_TENSOR_POWER={settings.max_tensor_power}.")
    if args.threads is not None and args.threads < 0:
        raise UsageError("--threads must be >= 0.")
    kwargs: dict[str, Any] = dict(
        restarts=args.restarts,
        seed=args.seed,
        tol=args.tol,
        max_iters=args.max_iters,
        cardinality=args.cardinality,
        fd_step=DEFAULT_FD_STEP,
        tensor_power=args.tensor_power,
        refine_rounds=getattr(args, "refine_rounds", DEFAULT_REFINE_ROUNDS),
        threads=settings.threads if args.threads is None else args.threads,
    )
    if grid is not None:
        kwargs["lambda_grid"] = grid
    try:
        return OptimizerConfig(**kwargs)
    except RegionError as e:
        raise UsageError(str(e)) from e


def _manifest(command: str, ch: KrausChannel | None, config: OptimizerConfig, args: argparse.Namespace, duration: float) -> dict[str, Any]:
    return {
        "command": command,
        "channel": dict(ch.descriptor) if ch is not None else None,
        "config": config.echo(),
        "args": {k: getattr(args, k) for k in RUN_OPTIONS if hasattr(args, k)},
        "version": __version__,
        "seed": config.seed,
        "duration_s": round(duration, 3),
    }


def _manifest_header(manifest: dict[str, Any]) -> str:
    lines = [f"# cqregion {manifest['command']}"]
    for key in ("command", "channel", "config", "args", "version", "seed", "duration_s"):
        value = manifest[key]
        lines.append(f"# {key}={value if isinstance(value, (str, int, float)) else json_dumps_sorted(value)}")
    return "\n".join(lines) + "\n"


def _csv_text(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _write(out: str | None, text: str) -> None:
    if not out:
        sys.stdout.write(text)
        return
    storage, key = storage_for_output(out)
    path = storage.put_bytes(key, text.encode("utf-8"))
    logger.info("wrote %s", path)


def _num(x: float) -> float:
    return float(format_number(x))


def _ensemble_json(ensemble: Ensemble | None) -> list[dict[str, Any]] | None:
    if ensemble is None:
        return None
    return [{"p": _num(p), "rho": [[[_num(v) for v in z] for z in row] for row in complex_to_pairs(s.matrix)]} for p, s in ensemble.entries]


def curve_rows(curve: TradeoffCurve) -> list[list[str]]:
    rows = []
    for p in curve.points:
        lam = format_number(p.lam) if p.lam is not None and p.tag == TAG_LAMBDA else p.lambda_label
        obj = "" if p.objective is None else format_number(p.objective)
        rows.append([lam, format_number(p.r), format_number(p.R), obj, str(p.cardinality_used)])
    return rows


def compare_rows(envelope: Sequence[RatePoint], q1: float) -> list[list[str]]:
    C = max(p.r for p in envelope)
    Q = max(q1, 0.0)
    tb = bounds(max(C, 0.0), Q)
    r_grid = np.linspace(0.0, tb.C, COMPARE_GRID_POINTS) if tb.C > 0 else np.zeros(1)
    r_opt = interpolate_envelope(envelope, r_grid)
    rows = []
    for r, R in zip(r_grid, r_opt):
        ts = tb.time_sharing(float(r))
        rows.append([format_number(r), format_number(R), format_number(ts), format_number(R - ts)])
    return rows


def run_curve(ch: KrausChannel, config: OptimizerConfig, args: argparse.Namespace) -> int:
    t0 = time.monotonic()
    curve = sweep_curve(ch, None, config)
    body = _csv_text(CURVE_HEADER, curve_rows(curve))
    _write(args.out, _manifest_header(_manifest("curve", ch, config, args, time.monotonic() - t0)) + body)
    return EXIT_OK


def run_compare(ch: KrausChannel, config: OptimizerConfig, args: argparse.Namespace) -> int:
    t0 = time.monotonic()
    curve = sweep_curve(ch, None, config)
    # Q endpoint: single-letter Q1, or the sweep's best R when that is higher (tensor powers)
    q = max(q1_capacity(ch, config).R, max(p.R for p in curve.points), 0.0)
    envelope = upper_envelope([*curve.points, RatePoint(lam=None, r=0.0, R=q, objective=None, tag=TAG_Q1)])
    body = _csv_text(COMPARE_HEADER, compare_rows(envelope, q))
    _write(args.out, _manifest_header(_manifest("compare", ch, config, args, time.monotonic() - t0)) + body)
    return EXIT_OK


def run_capacities(ch: KrausChannel, config: OptimizerConfig, args: argparse.Namespace) -> int:
    t0 = time.monotonic()
    c1 = holevo_capacity(ch, config)
    q1 = q1_capacity(ch, config)
    ea = negative_R_map(q1, ch)
    deg = degradability_residual(ch, config)

    values: dict[str, Any] = {
        "C1": c1.r,
        "Q1": q1.R,
        "degradability_residual": deg.residual,
        "degradable": deg.certified,
        "ea_r": ea.r,
        "ea_R": ea.R,
    }
    flat = None
    if getattr(args, "probe_flat_region", False):
        flat = probe_flat_region(ch, config, q1=q1.R)
        values.update(flat_region_found=flat.found, flat_region_r=flat.best_r, flat_region_R=flat.best_R)

    for k, v in values.items():
        sys.stdout.write(f"{k}={str(v).lower() if isinstance(v, bool) else format_number(v)}\n")

    if args.out:
        report: dict[str, Any] = {
            "schema": REPORT_SCHEMA,
            "manifest": _manifest("capacities", ch, config, args, time.monotonic() - t0),
            "C1": _num(c1.r),
            "Q1": _num(q1.R),
            "degradability": {
                "residual": _num(deg.residual),
                "certified": deg.certified,
                "method": deg.method,
                "restarts": deg.restarts,
            },
            "ea_point": [_num(ea.r), _num(ea.R)],
            "ensembles": {"holevo": _ensemble_json(c1.ensemble), "q1": _ensemble_json(q1.ensemble)},
        }
        if flat is not None:
            report["flat_region"] = {
                "q1": _num(flat.q1),
                "target_R": _num(flat.target_R),
                "best_r": _num(flat.best_r),
                "best_R": _num(flat.best_R),
                "found": flat.found,
            }
        _write(args.out, json.dumps(report, sort_keys=True, indent=2) + "\n")
    return EXIT_OK


def run_check(config: OptimizerConfig, args: argparse.Namespace) -> int:
    try:
        results = run_suite(args.suite, config)
    except RegionError as e:
        raise UsageError(str(e)) from e
    for res in results:
        sys.stdout.write(res.line() + "\n")
    failed = [r for r in results if not r.passed]
    sys.stdout.write(f"suite={args.suite} passed={len(results) - len(failed)} failed={len(failed)}\n")
    return EXIT_CHECK_FAILED if failed else EXIT_OK


_RUNNERS = {"curve": run_curve, "compare": run_compare, "capacities": run_capacities}


def read_manifest(path: str | Path) -> dict[str, Any]:
    """Manifest from a CSV header ('# key=value' lines) or a JSON report's "manifest"."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {p}: {e}") from e
    if text.lstrip().startswith("{"):
        try:
            manifest = json.loads(text).get("manifest")
        except (json.JSONDecodeError, AttributeError) as e:
            raise UsageError(f"{p} is not a cqregion report: {e}") from e
        if not isinstance(manifest, dict):
            raise UsageError(f"{p} has no manifest.")
        return manifest

    manifest: dict[str, Any] = {}
    for line in text.splitlines():
        if not line.startswith("#"):
            break
        key, sep, value = line[1:].strip().partition("=")
        if not sep:
            continue
        if key in ("channel", "config", "args"):
            manifest[key] = json.loads(value)
        else:
            manifest[key] = value
    if "command" not in manifest or "args" not in manifest:
        raise UsageError(f"{p} has no cqregion manifest header.")
    return manifest


def _replay(args: argparse.Namespace, settings: Settings) -> int:
    manifest = read_manifest(args.source)
    command = manifest["command"]
    if command not in _RUNNERS:
        raise UsageError(f"cannot replay command {command!r}.")
    ns = argparse.Namespace(**manifest["args"])
    ns.out = args.out
    ch = channel_from_config(manifest["channel"])
    validate(ch)
    logger.info("replaying %s from %s", command, args.source)
    return _RUNNERS[command](ch, _optimizer_config(ns, settings), ns)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        settings = load_runtime()
    except ConfigError as e:
        sys.stderr.write(f"cqregion: configuration error: {e}\n")
        return EXIT_CONFIG
    if args.log_level:
        level = getattr(logging, str(args.log_level).upper(), None)
        if not isinstance(level, int):
            sys.stderr.write(f"cqregion: error: unknown log level {args.log_level!r}\n")
            return EXIT_USAGE
        logging.getLogger().setLevel(level)

    try:
        if args.command == "replay":
            return _replay(args, settings)
        config = _optimizer_config(args, settings)
        if args.command == "check":
            return run_check(config, args)
        ch = load_channel_config(args.channel)
        validate(ch)
        return _RUNNERS[args.command](ch, config, args)
    except (UsageError, ResourceGuardError, RegionError) as e:
        sys.stderr.write(f"cqregion: error: {e}\n")
        return EXIT_USAGE
    except ChannelError as e:
        sys.stderr.write(f"cqregion: channel config error: {e}\n")
        return EXIT_CONFIG
    except StorageError as e:
        sys.stderr.write(f"cqregion: output error: {e}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
