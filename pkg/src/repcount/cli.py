"""
Command-line front end.

    repcount count --exercise squat --trace set.jsonl --out set.log
    repcount eval  --manifest manifest.tsv --results results.tsv
    repcount synth --exercise pullup --reps 8 --seed 3 --out data/
    repcount flow  --frames frames/ --out flow.log

Exit status: 0 success, 1 unreadable or malformed input, 2 bad configuration.
"""
from __future__ import annotations

import argparse
import math
import sys
import time
from collections import defaultdict
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import config as cfgmod
from . import metrics, synth
from .engine import RepSession, count_reps, write_debug_log
from .flow import FlowTracker
from .frames import FrameFormatError, load_frames, write_pgm_dir
from .pose import ExerciseKind, TraceError, load_trace, save_trace

EXIT_OK, EXIT_INPUT, EXIT_CONFIG = 0, 1, 2


class InputError(Exception):
    pass


class UsageError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--exercise", type=ExerciseKind.parse, help="squat, pushup or pullup")
    common.add_argument("--config", type=Path, help="engine config file (key = value lines)")
    common.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
        help="override one config key; repeatable",
    )
    common.add_argument("--dump-config", action="store_true", help="print the resolved config and exit")

    parser = argparse.ArgumentParser(prog="repcount", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", parents=[common], help="count reps in a pose trace and/or frame sequence")
    p.add_argument("--trace", type=Path, help="pose trace (JSON lines)")
    p.add_argument("--frames", type=Path, help="PGM directory or raw frame stream")
    p.add_argument("--fps", type=float, default=30.0, help="timestamps for PGM files without a t= comment")
    p.add_argument("--out", type=Path, help="write the per-step debug log here")
    p.add_argument("--target-reps", type=int, help="report the step at which this count is reached")
    p.add_argument("--results", type=Path, help="append 'label<TAB>count' to this file")
    p.add_argument("--label", help="label for --results (default: input file stem)")

    p = sub.add_parser("eval", parents=[common], help="aggregate accuracy metrics")
    p.add_argument("--manifest", type=Path, help="ground-truth manifest (label, reps columns)")
    p.add_argument("--results", type=Path, help="predictions, 'label<TAB>predicted' per line")
    p.add_argument("--trials", type=Path, help="trial file, 'label<TAB>actual<TAB>predicted' per line")
    p.add_argument("--out", type=Path, help="also write the report here")

    p = sub.add_parser("synth", parents=[common], help="generate synthetic traces with known counts")
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--period", type=float, default=2.0, help="seconds per rep")
    p.add_argument("--hold", type=float, default=0.2, help="hold fraction at each extreme")
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--noise", type=float, default=0.0, help="keypoint noise sigma, pixels")
    p.add_argument("--dropout", type=float, default=0.0, help="per-frame sub-gate landmark rate")
    p.add_argument("--angle-min", type=float)
    p.add_argument("--angle-max", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--batch", type=int, help="generate this many profiles with reps 1-25, period 1-4 s")
    p.add_argument("--frames", action="store_true", help="also render PGM frame sequences")
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("flow", parents=[common], help="flow-only diagnostics on a frame sequence")
    p.add_argument("--frames", type=Path, required=True)
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--out", type=Path, help="write per-pair diagnostics here")
    return parser


def _resolve_config(args) -> tuple[ExerciseKind, "cfgmod.EngineConfig"]:
    values = {}
    if args.config is not None:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            raise cfgmod.ConfigError(f"cannot read config: {exc}") from None
        values = cfgmod.parse_config(text)
    for item in args.overrides:
        key, value = cfgmod.parse_override(item)
        values[key] = value
    return cfgmod.build(values, args.exercise)


def _emit(text: str, path: Optional[Path]) -> None:
    sys.stdout.write(text)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")


def cmd_count(args, exercise, engine) -> int:
    if args.trace is None and args.frames is None:
        raise UsageError("count needs --trace and/or --frames")
    if args.target_reps is not None and args.target_reps < 1:
        raise UsageError("--target-reps must be >= 1")
    try:
        trace = load_trace(args.trace) if args.trace is not None else []
        frames = list(load_frames(args.frames, args.fps)) if args.frames is not None else []
    except (OSError, TraceError, FrameFormatError, ValueError) as exc:
        raise InputError(str(exc)) from None

    started = time.perf_counter()
    outputs = count_reps(exercise, trace, frames, engine)
    elapsed = time.perf_counter() - started

    if args.out is not None:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            write_debug_log(outputs, fh)

    final = outputs[-1].count if outputs else 0
    lines = [f"count={final}", f"steps={len(outputs)}"]
    if args.target_reps is not None:
        hit = next((i for i, o in enumerate(outputs) if o.count >= args.target_reps), None)
        if hit is None:
            lines.append("target_reached_step=none")
        else:
            lines.append(f"target_reached_step={hit}")
            lines.append(f"target_reached_t={outputs[hit].timestamp:.6f}")
    paused = sum(o.paused for o in outputs)
    lines.append(f"paused_steps={paused}")
    fps = len(outputs) / elapsed if elapsed > 0 and outputs else math.inf
    lines.append(f"throughput_fps={fps:.1f}")
    sys.stdout.write("\n".join(lines) + "\n")

    if args.results is not None:
        source = args.trace if args.trace is not None else args.frames
        label = args.label or source.stem
        with open(args.results, "a", encoding="utf-8") as fh:
            fh.write(f"{label}\t{final}\n")
    return EXIT_OK


def _read_results(path: Path) -> dict[str, int]:
    out = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        parts = text.split("\t")
        if len(parts) != 2:
            raise InputError(f"{path}: line {lineno}: expected 'label<TAB>predicted'")
        try:
            out[parts[0]] = int(parts[1])
        except ValueError:
            raise InputError(f"{path}: line {lineno}: predicted count is not an integer") from None
    return out


def cmd_eval(args, exercise, engine) -> int:
    groups: dict[str, list[metrics.TrialRecord]] = defaultdict(list)
    try:
        if args.trials is not None:
            with open(args.trials, encoding="utf-8") as fh:
                groups["all"] = metrics.read_trials(fh)
        elif args.manifest is not None and args.results is not None:
            with open(args.manifest, encoding="utf-8") as fh:
                rows = synth.read_manifest(fh)
            predicted = _read_results(args.results)
            truth = {row["label"]: row for row in rows}
            orphans = sorted(set(truth) ^ set(predicted))
            if orphans:
                raise InputError("unmatched labels: " + ", ".join(orphans))
            for label, row in truth.items():
                group = row.get("exercise") or "all"
                groups[group].append(metrics.TrialRecord(int(row["reps"]), predicted[label], label))
        else:
            raise UsageError("eval needs --trials, or --manifest with --results")
    except OSError as exc:
        raise InputError(str(exc)) from None
    except (ValueError, KeyError) as exc:
        raise InputError(f"malformed input: {exc}") from None

    try:
        reports = [(name, metrics.aggregate(trials)) for name, trials in sorted(groups.items())]
        everything = [t for trials in groups.values() for t in trials]
        overall = metrics.aggregate(everything)
    except metrics.UndefinedMetricError as exc:
        raise InputError(str(exc)) from None
    table_rows = reports + ([("TOTAL", overall)] if len(reports) > 1 else [])
    text = metrics.render_table(table_rows) + "\n" + metrics.render_kv(overall)
    _emit(text, args.out)
    return EXIT_OK


def _profiles(args, exercise) -> list[tuple[str, synth.MotionProfile, int]]:
    shared = dict(
        exercise=exercise,
        hold_fraction=args.hold,
        fps=args.fps,
        noise_sigma=args.noise,
        dropout_rate=args.dropout,
        angle_min=args.angle_min,
        angle_max=args.angle_max,
    )
    if args.batch is None:
        profile = synth.MotionProfile(reps=args.reps, period=args.period, **shared)
        return [(f"{exercise.value}-seed{args.seed}", profile, args.seed)]
    if args.batch < 1:
        raise ValueError("--batch must be >= 1")
    rng = np.random.default_rng(args.seed)
    out = []
    for i in range(args.batch):
        reps = int(rng.integers(1, 26))
        period = round(float(rng.uniform(1.0, 4.0)), 3)
        seed = int(rng.integers(0, 2**31 - 1))
        out.append((f"{exercise.value}-{i:03d}", synth.MotionProfile(reps=reps, period=period, **shared), seed))
    return out


def cmd_synth(args, exercise, engine) -> int:
    try:
        profiles = _profiles(args, exercise)
        for _, profile, _ in profiles:
            profile.validate(engine.threshold_band)
    except ValueError as exc:
        raise cfgmod.ConfigError(str(exc)) from None
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        rows = []
        for label, profile, seed in profiles:
            frames, _ = synth.gen_pose_trace(profile, seed)
            save_trace(frames, args.out / f"{label}.jsonl")
            if args.frames:
                rendered, _ = synth.gen_frame_sequence(profile, seed)
                write_pgm_dir(rendered, args.out / label)
            rows.append(synth.manifest_row(label, profile, seed))
        with open(args.out / "manifest.tsv", "w", encoding="utf-8", newline="") as fh:
            synth.write_manifest(rows, fh)
    except OSError as exc:
        raise InputError(f"cannot write output: {exc}") from None
    sys.stdout.write(f"wrote {len(rows)} item(s) to {args.out}\n")
    return EXIT_OK


FLOW_HEADER = "# t\tpoints\tvalid\tmoving\tmean_axis_disp\traw\tsmoothed\tphase"


def cmd_flow(args, exercise, engine) -> int:
    try:
        frames = list(load_frames(args.frames, args.fps))
    except (OSError, FrameFormatError, ValueError) as exc:
        raise InputError(str(exc)) from None
    session = RepSession(exercise, engine)
    tracker = FlowTracker(engine.flow)
    vertical = engine.flow.axis == "vertical"
    lines = [FLOW_HEADER]
    phase = session.phase
    started = time.perf_counter()
    for prev, cur in zip(frames, frames[1:]):
        phase = tracker.update(prev, cur, phase)
        pts = tracker.last_points
        valid = [p for p in pts if p.valid]
        disp = [p.dy if vertical else p.dx for p in valid]
        moving = [d for d in disp if abs(d) >= engine.flow.movement_threshold]
        mean = f"{sum(moving) / len(moving):.3f}" if moving else "-"
        lines.append(
            f"{cur.timestamp:.6f}\t{len(pts)}\t{len(valid)}\t{len(moving)}\t{mean}\t"
            f"{tracker.last_raw.value}\t{tracker.previous_direction.value}\t{phase.value}"
        )
    elapsed = time.perf_counter() - started
    pairs = max(len(frames) - 1, 0)
    if args.out is not None:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    else:
        sys.stdout.write("\n".join(lines) + "\n")
    fps = pairs / elapsed if pairs and elapsed > 0 else math.inf
    sys.stdout.write(f"pairs={pairs}\nthroughput_fps={fps:.1f}\n")
    return EXIT_OK


COMMANDS = {"count": cmd_count, "eval": cmd_eval, "synth": cmd_synth, "flow": cmd_flow}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        exercise, engine = _resolve_config(args)
    except cfgmod.ConfigError as exc:
        print(f"repcount: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.dump_config:
        sys.stdout.write(cfgmod.dump_config(exercise, engine))
        return EXIT_OK
    try:
        return COMMANDS[args.command](args, exercise, engine)
    except (cfgmod.ConfigError, UsageError) as exc:
        print(f"repcount: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InputError as exc:
        print(f"repcount: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
