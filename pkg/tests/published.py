"""Published real-life trial counts, as (app count, reps completed) per row."""
from repcount.metrics import TrialRecord


def _trials(rows, prefix):
    return [TrialRecord(actual=done, predicted=counted, label=f"{prefix}-{i:02d}") for i, (counted, done) in enumerate(rows)]


SQUAT_ROWS = [(10, 11), (10, 10), (10, 10), (10, 10), (10, 10), (15, 15), (10, 10), (10, 10),
              (10, 10), (9, 9), (10, 10), (8, 8), (8, 8), (10, 10), (9, 9)]
PUSHUP_ROWS = [(10, 11)] + [(10, 10)] * 10 + [(15, 15), (15, 15), (10, 10), (9, 9)]
PULLUP_ROWS = [(10, 10)] * 12 + [(10, 7), (10, 10), (20, 20), (3, 3)]

SQUAT_TRIALS = _trials(SQUAT_ROWS, "squat")
PUSHUP_TRIALS = _trials(PUSHUP_ROWS, "pushup")
PULLUP_TRIALS = _trials(PULLUP_ROWS, "pullup")

# The summary table's push-up and pull-up totals (150/149, 150/153) correspond
# to these tables with one exact 10-rep trial fewer.
PUSHUP_SUMMARY_TRIALS = PUSHUP_TRIALS[:1] + PUSHUP_TRIALS[2:]
PULLUP_SUMMARY_TRIALS = PULLUP_TRIALS[:11] + PULLUP_TRIALS[12:]
