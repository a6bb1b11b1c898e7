"""
Engine configuration file.

A flat text file of ``key = value`` lines. ``#`` starts a comment, blank lines
are ignored, keys are case-sensitive and may appear at most once. Booleans
are ``true``/``false``. Any key left out keeps its default; the threshold
band defaults depend on ``exercise``. ``dump_config`` writes every key in
the order of ``KEYS`` and its output parses back to the same configuration.
"""
from __future__ import annotations

from dataclasses import fields
from typing import Any, Callable, Optional

from .engine import EngineConfig
from .flow import FlowConfig
from .phases import DEFAULT_BANDS, ThresholdBand
from .pose import ExerciseKind


class ConfigError(ValueError):
    pass


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError(f"expected true or false, got {text!r}")


# key -> (parser, comment)
KEYS: dict[str, tuple[Callable[[str], Any], str]] = {
    "exercise": (ExerciseKind.parse, "squat | pushup | pullup"),
    "confidence_threshold": (float, "pose landmarks below this probability reject the frame"),
    "pause_timeout": (float, "seconds of rejected poses before transitions pause"),
    "lower_threshold": (float, "degrees"),
    "upper_threshold": (float, "degrees"),
    "inverted": (_bool, "true swaps Top and Bottom (pull-ups)"),
    "phase_window": (int, "sliding window size for thresholded phases, frames"),
    "side": (str, "mean | left | right"),
    "flow_window": (int, "sliding window size for flow directions, frames"),
    "flow_movement_threshold": (float, "pixels/frame"),
    "flow_reseed_interval": (int, "frames between feature re-selection"),
    "flow_lk_window": (int, "odd patch size, pixels"),
    "flow_lk_iterations": (int, ""),
    "flow_min_eigen": (float, "corner score floor"),
    "flow_lk_min_eigen": (float, "singular-patch floor"),
    "flow_max_points": (int, ""),
    "flow_min_distance": (int, "pixels between seeded features"),
    "flow_axis": (str, "vertical | horizontal"),
}

_FLOW_FIELDS = {
    "flow_window": "smoothing_capacity",
    "flow_movement_threshold": "movement_threshold",
    "flow_reseed_interval": "reseed_interval",
    "flow_lk_window": "lk_window",
    "flow_lk_iterations": "lk_iterations",
    "flow_min_eigen": "min_eigen",
    "flow_lk_min_eigen": "lk_min_eigen",
    "flow_max_points": "max_points",
    "flow_min_distance": "min_distance",
    "flow_axis": "axis",
}
assert set(_FLOW_FIELDS.values()) == {f.name for f in fields(FlowConfig)}


def parse_config(text: str) -> dict[str, Any]:
    """Parse config text into typed values keyed as in ``KEYS``."""
    values: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = KEYS[key][0](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {key}: {exc}") from None
    return values


def parse_override(item: str) -> tuple[str, Any]:
    """Parse one ``key=value`` command-line override."""
    values = parse_config(item)
    if len(values) != 1:
        raise ConfigError(f"expected a single key=value, got {item!r}")
    return next(iter(values.items()))


def build(values: dict[str, Any], exercise: Optional[ExerciseKind] = None) -> tuple[ExerciseKind, EngineConfig]:
    """Resolve parsed values into an exercise and a validated engine config.

    ``exercise`` (e.g. from a command-line flag) wins over the file's key.
    """
    exercise = exercise or values.get("exercise") or ExerciseKind.SQUAT
    band = DEFAULT_BANDS[exercise]
    try:
        band = ThresholdBand(
            values.get("lower_threshold", band.lower),
            values.get("upper_threshold", band.upper),
            values.get("inverted", band.inverted),
        )
        flow = FlowConfig(**{_FLOW_FIELDS[k]: v for k, v in values.items() if k in _FLOW_FIELDS})
        engine = EngineConfig(
            threshold_band=band,
            confidence_threshold=values.get("confidence_threshold", 0.75),
            pause_timeout=values.get("pause_timeout", 1.5),
            phase_window_capacity=values.get("phase_window", 1),
            flow=flow,
            side=values.get("side", "mean"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return exercise, engine


def _fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, ExerciseKind):
        return value.value
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(exercise: ExerciseKind, engine: EngineConfig) -> str:
    flow = engine.flow
    values = {
        "exercise": exercise,
        "confidence_threshold": engine.confidence_threshold,
        "pause_timeout": engine.pause_timeout,
        "lower_threshold": engine.threshold_band.lower,
        "upper_threshold": engine.threshold_band.upper,
        "inverted": engine.threshold_band.inverted,
        "phase_window": engine.phase_window_capacity,
        "side": engine.side,
    }
    for key, name in _FLOW_FIELDS.items():
        values[key] = getattr(flow, name)
    lines = []
    for key, (_, comment) in KEYS.items():
        line = f"{key} = {_fmt(values[key])}"
        lines.append(f"{line:<36}# {comment}" if comment else line)
    return "\n".join(lines) + "\n"

