"""
Rep-count evaluation: per-trial accuracy and off-by-one, and their aggregates.

Trial files are tab-separated ``label  actual  predicted`` lines; blank lines
and lines starting with ``#`` are skipped.

``render_kv`` emits one ``key=value`` per line in this fixed order::

    trials, total_actual, total_predicted, mean_accuracy, mean_obo,
    absolute_accuracy, mae

counts as integers, ratios with six decimals.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence


class UndefinedMetricError(ValueError):
    """Raised when a ratio metric has no defined value (zero actual reps, no trials)."""


@dataclass(frozen=True)
class TrialRecord:
    actual: int
    predicted: int
    label: str = ""

    def __post_init__(self) -> None:
        for name in ("actual", "predicted"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {value!r}")

    @property
    def diff(self) -> int:
        return abs(self.actual - self.predicted)


@dataclass(frozen=True)
class MetricsReport:
    trials: int
    mean_accuracy: float
    mean_obo: float
    absolute_accuracy: float
    mae: float
    total_actual: int
    total_predicted: int


def trial_accuracy(trial: TrialRecord) -> float:
    """1 - |actual - predicted| / actual; negative when the error exceeds the count."""
    if trial.actual == 0:
        raise UndefinedMetricError(f"accuracy undefined for trial {trial.label!r} with zero actual reps")
    return 1.0 - trial.diff / trial.actual


def trial_obo(trial: TrialRecord) -> int:
    return 1 if trial.diff <= 1 else 0


def aggregate(trials: Sequence[TrialRecord]) -> MetricsReport:
    if not trials:
        raise UndefinedMetricError("no trials to aggregate")
    n = len(trials)
    accuracies = [trial_accuracy(t) for t in trials]
    total_actual = sum(t.actual for t in trials)
    total_predicted = sum(t.predicted for t in trials)
    return MetricsReport(
        trials=n,
        mean_accuracy=sum(accuracies) / n,
        mean_obo=sum(trial_obo(t) for t in trials) / n,
        absolute_accuracy=1.0 - abs(total_actual - total_predicted) / total_actual,
        mae=sum(t.diff / t.actual for t in trials) / n,
        total_actual=total_actual,
        total_predicted=total_predicted,
    )


def read_trials(lines: Iterable[str]) -> list[TrialRecord]:
    trials = []
    for lineno, line in enumerate(lines, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        parts = text.split("\t")
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 'label<TAB>actual<TAB>predicted'")
        try:
            trials.append(TrialRecord(int(parts[1]), int(parts[2]), parts[0]))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return trials


def write_trials(trials: Iterable[TrialRecord]) -> str:
    return "".join(f"{t.label}\t{t.actual}\t{t.predicted}\n" for t in trials)


def render_kv(report: MetricsReport) -> str:
    rows = [
        ("trials", str(report.trials)),
        ("total_actual", str(report.total_actual)),
        ("total_predicted", str(report.total_predicted)),
        ("mean_accuracy", f"{report.mean_accuracy:.6f}"),
        ("mean_obo", f"{report.mean_obo:.6f}"),
        ("absolute_accuracy", f"{report.absolute_accuracy:.6f}"),
        ("mae", f"{report.mae:.6f}"),
    ]
    return "".join(f"{k}={v}\n" for k, v in rows)


def parse_kv(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        if "=" in line:
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


TABLE_COLUMNS = ("Exercise", "Trials", "# Actual Reps", "# Predicted Reps", "Mean Accuracy", "Mean OBO Accuracy", "Absolute Accuracy")


def render_table(rows: Sequence[tuple[str, MetricsReport]]) -> str:
    """Aligned text table, one row per named report; percentages with two decimals.

    Columns are separated by two spaces; the first column is left-aligned and
    the rest right-aligned to the widest cell, with a dashed rule under the header.
    """
    body = [
        (
            name,
            str(r.trials),
            str(r.total_actual),
            str(r.total_predicted),
            f"{100 * r.mean_accuracy:.2f}%",
            f"{100 * r.mean_obo:.2f}%",
            f"{100 * r.absolute_accuracy:.2f}%",
        )
        for name, r in rows
    ]
    widths = [max(len(row[i]) for row in [TABLE_COLUMNS, *body]) for i in range(len(TABLE_COLUMNS))]

    def fmt(cells) -> str:
        first = cells[0].ljust(widths[0])
        rest = [c.rjust(w) for c, w in zip(cells[1:], widths[1:])]
        return "  ".join([first, *rest]).rstrip()

    lines = [fmt(TABLE_COLUMNS), "  ".join("-" * w for w in widths)]
    lines += [fmt(row) for row in body]
    return "\n".join(lines) + "\n"
