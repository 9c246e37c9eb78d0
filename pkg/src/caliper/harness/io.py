"""File formats: stream CSVs, per-run step/timing CSVs and summary JSON.

All CSVs are comma-separated with a mandatory header row, UTF-8, '.' decimal
and LF line endings. Floats are written with repr so parsing them back is
bit-exact; steps.csv is therefore byte-identical across runs of the same
config and seed. Wall-clock values live in a separate timing.csv because
they are the one per-step record that legitimately differs between runs.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..core import Sample
from ..errors import IngestError
from ..learners import SHADOW_STEPS, EpisodeReport, RetrainEvent, compute_summary

STEPS_FILE = "steps.csv"
TIMING_FILE = "timing.csv"
SUMMARY_FILE = "summary.json"


def _fmt(v: float) -> str:
    return repr(float(v))


def write_stream_csv(path, samples: list[Sample]) -> None:
    """Feature-only CSV; the time index is the row order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    d = samples[0].dim
    lines = [",".join(f"x{j}" for j in range(d))]
    for s in samples:
        lines.append(",".join(_fmt(v) for v in s.x))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def ingest_csv(path) -> list[Sample]:
    """Parse a numeric CSV into samples, naming row and column on failure."""
    path = Path(path)
    if not path.exists():
        raise IngestError(f"file not found: {path}")
    text = path.read_text(encoding="utf-8")
    lines = [ln for ln in text.split("\n") if ln.strip() != ""]
    if not lines:
        raise IngestError(f"{path}: empty file")
    header = lines[0].split(",")
    d = len(header)
    if d < 1 or any(h.strip() == "" for h in header):
        raise IngestError(f"{path}: malformed header row")
    samples = []
    for row_no, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != d:
            raise IngestError(f"{path}: row {row_no} has {len(cells)} cells, expected {d}")
        values = np.empty(d)
        for col, cell in enumerate(cells):
            try:
                values[col] = float(cell)
            except ValueError:
                raise IngestError(
                    f"{path}: row {row_no}, column {header[col]!r}: non-numeric cell {cell!r}"
                ) from None
        samples.append(Sample(t=row_no - 2, x=values))
    if not samples:
        raise IngestError(f"{path}: no data rows")
    return samples


def steps_header(d: int, horizons) -> list[str]:
    cols = ["t", "alarm", "decision", "model_version", "retrain", "window_len"]
    cols += [f"truth_{j}" for j in range(d)]
    for h in horizons:
        cols += [f"pred_h{h}_{j}" for j in range(d)]
        cols += [f"err_sq_h{h}", f"err_abs_h{h}"]
    return cols


def write_report(run_dir, report: EpisodeReport) -> None:
    """Write steps.csv, timing.csv and summary.json for one run."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    d = report.d
    horizons = report.horizons
    err_sq = {h: report.err_sq(h) for h in horizons}
    err_abs = {h: report.err_abs(h) for h in horizons}
    window_len = report.window_len

    lines = [",".join(steps_header(d, horizons))]
    for i in range(len(report.t)):
        row = [
            str(int(report.t[i])),
            str(int(report.alarms[i])),
            report.decisions[i],
            str(int(report.model_version[i])),
            str(int(report.retrain_flags[i])),
            "" if window_len[i] < 0 else str(int(window_len[i])),
        ]
        row += [_fmt(v) for v in report.truth[i]]
        for h in horizons:
            pred = report.preds[h][i]
            if np.all(np.isfinite(pred)):
                row += [_fmt(v) for v in pred]
                row += [_fmt(err_sq[h][i]), _fmt(err_abs[h][i])]
            else:
                row += [""] * (d + 2)
        lines.append(",".join(row))
    (run_dir / STEPS_FILE).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")

    tlines = ["t,step_time_ns,retrain"]
    for i in range(len(report.t)):
        tlines.append(f"{int(report.t[i])},{int(report.step_time_ns[i])},{int(report.retrain_flags[i])}")
    (run_dir / TIMING_FILE).write_text("\n".join(tlines) + "\n", encoding="utf-8", newline="\n")

    payload = {
        "strategy": report.strategy,
        "learner_family": report.learner_family,
        "d": d,
        "warmup_len": report.warmup_len,
        **report.summary,
    }
    (run_dir / SUMMARY_FILE).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n"
    )


def read_columns(path) -> dict:
    """Parse a CSV back into string-keyed columns of python lists."""
    path = Path(path)
    lines = [ln for ln in path.read_text(encoding="utf-8").split("\n") if ln != ""]
    header = lines[0].split(",")
    cols = {h: [] for h in header}
    for line in lines[1:]:
        for h, cell in zip(header, line.split(",")):
            cols[h].append(cell)
    return cols


def recompute_summary(run_dir) -> dict:
    """Rebuild every summary statistic from the per-step CSVs."""
    run_dir = Path(run_dir)
    steps = read_columns(run_dir / STEPS_FILE)
    timing = read_columns(run_dir / TIMING_FILE)
    with open(run_dir / SUMMARY_FILE, encoding="utf-8") as fh:
        stored = json.load(fh)
    horizons = [int(h) for h in stored["horizons"]]

    def col_float(name):
        return np.array([float(c) if c != "" else np.nan for c in steps[name]])

    t = np.array([int(c) for c in steps["t"]])
    alarms = np.array([c == "1" for c in steps["alarm"]])
    retrain_flags = np.array([c == "1" for c in steps["retrain"]])
    err_sq = {h: col_float(f"err_sq_h{h}") for h in horizons}
    err_abs = {h: col_float(f"err_abs_h{h}") for h in horizons}
    step_time_ns = np.array([int(c) for c in timing["step_time_ns"]])

    versions = [int(c) for c in steps["model_version"]]
    retrains = []
    open_alarm = None
    for i in range(len(t)):
        if open_alarm is None and alarms[i] and not _in_shadow(retrains, int(t[i])):
            open_alarm = int(t[i])
        if i > 0 and versions[i] > versions[i - 1]:
            for ev in reversed(retrains):
                if not ev.deployed:
                    ev.deployed = True
                    ev.deploy_t = int(t[i])
                    break
        if retrain_flags[i]:
            wl = steps["window_len"][i]
            retrains.append(
                RetrainEvent(
                    alarm_t=open_alarm if open_alarm is not None else -1,
                    trigger_t=int(t[i]),
                    window_size=int(wl) if wl != "" else -1,
                )
            )
            open_alarm = None

    return compute_summary(horizons, err_sq, err_abs, alarms, retrain_flags, step_time_ns, retrains, t)


def _in_shadow(retrains, t: int) -> bool:
    """Alarms inside a candidate's fixed-length shadow trial are ignored."""
    if not retrains:
        return False
    last = retrains[-1]
    return last.trigger_t < t <= last.trigger_t + SHADOW_STEPS


def verify_run(run_dir) -> list[str]:
    """Compare stored summary.json against recomputation; returns mismatches."""
    run_dir = Path(run_dir)
    with open(run_dir / SUMMARY_FILE, encoding="utf-8") as fh:
        stored = json.load(fh)
    fresh = recompute_summary(run_dir)
    problems = []
    for key, value in fresh.items():
        if stored.get(key) != value:
            problems.append(f"{run_dir}: summary field {key!r} mismatch")
    return problems
