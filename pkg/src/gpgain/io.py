"""CSV/JSON persistence for traces and experiment metadata.

Floats are written with shortest round-trip formatting, so re-parsing a
file reproduces the in-memory values exactly and identical runs produce
byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .bandit import RegretSummary, RegretTrace
from .infogain import InfoGainTrace


def _fmt(x: float) -> str:
    return repr(float(x))


def _join_point(p: np.ndarray) -> str:
    return ";".join(_fmt(c) for c in np.atleast_1d(p))


def _split_point(s: str) -> np.ndarray:
    return np.array([float(c) for c in s.split(";")])


def write_infogain_csv(trace: InfoGainTrace, path) -> None:
    steps = trace.step_gains
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "chosen_point", "step_gain", "cumulative_gain"])
        for t in range(trace.horizon):
            w.writerow([
                t + 1,
                _join_point(trace.chosen_points[t]),
                _fmt(steps[t]),
                _fmt(trace.cumulative_gain[t]),
            ])


def read_infogain_csv(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {
        "t": np.array([int(r["t"]) for r in rows]),
        "chosen_point": np.array([_split_point(r["chosen_point"]) for r in rows]),
        "step_gain": np.array([float(r["step_gain"]) for r in rows]),
        "cumulative_gain": np.array([float(r["cumulative_gain"]) for r in rows]),
    }


def write_regret_csv(trace: RegretTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["seed", "t", "x", "f_x", "inst_regret", "cum_regret", "beta_t"])
        for t in range(trace.horizon):
            w.writerow([
                trace.seed,
                t + 1,
                _join_point(trace.points[t]),
                _fmt(trace.objective_values[t]),
                _fmt(trace.instant_regret[t]),
                _fmt(trace.cumulative_regret[t]),
                _fmt(trace.widths[t]),
            ])


def read_regret_csv(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {
        "seed": np.array([int(r["seed"]) for r in rows]),
        "t": np.array([int(r["t"]) for r in rows]),
        "x": np.array([_split_point(r["x"]) for r in rows]),
        "f_x": np.array([float(r["f_x"]) for r in rows]),
        "inst_regret": np.array([float(r["inst_regret"]) for r in rows]),
        "cum_regret": np.array([float(r["cum_regret"]) for r in rows]),
        "beta_t": np.array([float(r["beta_t"]) for r in rows]),
    }


def write_summary_csv(summary: RegretSummary, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "median", "mean", "q25", "q75"])
        for t in range(summary.horizon):
            w.writerow([
                t + 1,
                _fmt(summary.median[t]),
                _fmt(summary.mean[t]),
                _fmt(summary.q25[t]),
                _fmt(summary.q75[t]),
            ])


def read_summary_csv(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {
        "t": np.array([int(r["t"]) for r in rows]),
        "median": np.array([float(r["median"]) for r in rows]),
        "mean": np.array([float(r["mean"]) for r in rows]),
        "q25": np.array([float(r["q25"]) for r in rows]),
        "q75": np.array([float(r["q75"]) for r in rows]),
    }


def write_gamma_sweep_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["T", "empirical_gamma", "D_star", "projection_bound", "decay_bound"])
        for r in rows:
            w.writerow([
                r["T"],
                _fmt(r["empirical_gamma"]),
                r["D_star"],
                _fmt(r["projection_bound"]),
                "" if r["decay_bound"] is None else _fmt(r["decay_bound"]),
            ])


def read_gamma_sweep_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        {
            "T": int(r["T"]),
            "empirical_gamma": float(r["empirical_gamma"]),
            "D_star": int(r["D_star"]),
            "projection_bound": float(r["projection_bound"]),
            "decay_bound": None if r["decay_bound"] == "" else float(r["decay_bound"]),
        }
        for r in rows
    ]


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON-serializable: {type(obj)}")


def write_json(payload: dict, path) -> None:
    Path(path).write_text(
        json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n"
    )


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())
