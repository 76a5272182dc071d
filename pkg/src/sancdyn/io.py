"""Plot-ready CSV and canonical JSON output.

Numbers are written with Python's shortest round-trip ``repr`` so every
value re-parses to the identical float. JSON reports are canonical: sorted
keys, no whitespace, no NaN/Infinity.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import IO

import numpy as np

from sancdyn.analysis import Comparison, GrowthEstimate, StabilityGrid
from sancdyn.dynamics import LanchesterTrajectory, StabilityVerdict, Trajectory
from sancdyn.errors import ParameterError
from sancdyn.stochastic import MonteCarloReport

SCHEMA = "sancdyn-report-v1"
TRAJECTORY_HEADER = "n,x,y,v,w"
LANCHESTER_HEADER = "n,r,g"
GRID_HEADER = "alpha,beta,gain,verdict"


def fmt(value) -> str:
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    value = float(value)
    if not math.isfinite(value):
        raise ParameterError(f"refusing to serialize non-finite value {value!r}")
    return repr(value)


def _truncation_line(stage) -> str:
    return f"# truncated: overflow at n={stage}\n"


def write_trajectory_csv(trajectory: Trajectory | LanchesterTrajectory, sink: IO[str]) -> None:
    if isinstance(trajectory, LanchesterTrajectory):
        sink.write(LANCHESTER_HEADER + "\n")
        for n, r, g in trajectory.records():
            sink.write(f"{n},{fmt(r)},{fmt(g)}\n")
    else:
        sink.write(TRAJECTORY_HEADER + "\n")
        for row in trajectory.records():
            sink.write(",".join(fmt(c) for c in row) + "\n")
    if trajectory.overflow_stage is not None:
        sink.write(_truncation_line(trajectory.overflow_stage))


def read_trajectory_csv(source: IO[str]) -> dict:
    """Columns of a trajectory CSV as arrays, plus ``overflow_stage``."""
    lines = source.read().split("\n")
    header = lines[0].split(",")
    rows = []
    overflow = None
    for line in lines[1:]:
        if not line:
            continue
        if line.startswith("# truncated: overflow at n="):
            overflow = int(line.rsplit("=", 1)[1])
            continue
        rows.append(line.split(","))
    cols = {name: np.array([float(r[k]) for r in rows]) for k, name in enumerate(header)}
    cols["n"] = cols["n"].astype(np.int64)
    cols["overflow_stage"] = overflow
    return cols


def write_grid_csv(grid: StabilityGrid, sink: IO[str]) -> None:
    sink.write(GRID_HEADER + "\n")
    for a, b, gain, label in grid.cells():
        sink.write(f"{fmt(a)},{fmt(b)},{fmt(gain)},{label}\n")


def write_mean_squares_csv(report: MonteCarloReport, sink: IO[str]) -> None:
    sink.write("n,mean_square_v\n")
    for n, m in enumerate(report.stage_mean_squares, start=1):
        sink.write(f"{n},{fmt(m)}\n")


# -- reports ------------------------------------------------------------------

def verdict_dict(verdict: StabilityVerdict) -> dict:
    return {"verdict": verdict.stability.value, "gain": verdict.gain, "tolerance": verdict.tolerance}


def montecarlo_dict(report: MonteCarloReport) -> dict:
    if not report.ci_low <= report.ci_high:
        raise ParameterError("confidence interval bounds are inverted")
    return {
        "n_trajectories": report.n_trajectories,
        "horizon": report.horizon,
        "empirical_ms_ratio": report.empirical_ms_ratio,
        "ci_low": report.ci_low,
        "ci_high": report.ci_high,
        "ci_method": report.ci_method,
        "confidence": 0.99,
        "analytic_qbar": report.analytic_qbar,
        "contains_analytic": report.contains_analytic,
        "verdict": report.verdict.stability.value,
        "master_seed": report.master_seed,
        "stage_mean_squares": list(report.stage_mean_squares),
    }


def growth_dict(estimate: GrowthEstimate) -> dict:
    return {"lyapunov": estimate.lyapunov, "analytic": estimate.analytic,
            "residual": estimate.residual, "stages_used": estimate.stages_used}


def comparison_dict(comparison: Comparison) -> dict:
    return {"analytic_qbar": comparison.analytic_qbar, "empirical_ratio": comparison.empirical_ratio,
            "ci_low": comparison.ci_low, "ci_high": comparison.ci_high,
            "agreement": comparison.agreement}


def trajectory_summary(trajectory) -> dict:
    summary = {"stages": len(trajectory), "first_stage": int(trajectory.n[0]),
               "last_stage": int(trajectory.n[-1]), "overflow_stage": trajectory.overflow_stage}
    if isinstance(trajectory, LanchesterTrajectory):
        summary["final"] = {"r": float(trajectory.r[-1]), "g": float(trajectory.g[-1])}
    else:
        _, x, y, v, w = trajectory.at(int(trajectory.n[-1]))
        summary["final"] = {"x": x, "y": y, "v": v, "w": w}
    return summary


@dataclass
class RunReport:
    """Everything a CLI run derived, ready for canonical serialization."""

    command: str
    scenario: dict | None = None
    gains: dict = field(default_factory=dict)
    verdict: str | None = None
    verdicts: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    sections: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        doc = {"schema": SCHEMA, "command": self.command, "gains": self.gains,
               "verdicts": self.verdicts, "outputs": self.outputs}
        if self.scenario is not None:
            doc["scenario"] = self.scenario
        if self.verdict is not None:
            doc["verdict"] = self.verdict
        doc.update(self.sections)
        return doc


def canonical_json(doc: dict) -> str:
    try:
        return json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)
    except ValueError as exc:
        raise ParameterError(f"report contains a non-finite number: {exc}") from None


def write_report_json(report: RunReport | dict, sink: IO[str]) -> None:
    doc = report.to_dict() if isinstance(report, RunReport) else report
    mc = doc.get("montecarlo")
    if mc is not None and not mc["ci_low"] <= mc["ci_high"]:
        raise ParameterError("confidence interval bounds are inverted")
    sink.write(canonical_json(doc))


def atomic_write(path: str, write) -> None:
    """Write through ``write(sink)`` into a temp file, then move it into place."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".sancdyn-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as sink:
            write(sink)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
