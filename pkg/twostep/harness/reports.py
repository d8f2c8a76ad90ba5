import io
import json
from typing import List, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, field_validator

from ..integrator import Trajectory

# 17 significant digits make every double round-trip through text
FLOAT_FORMAT = "%.17g"


class ConvergenceRow(BaseModel):
    h: float
    n_steps: int
    final_error: Optional[float] = None
    order_estimate: Optional[float] = None
    max_energy_error: Optional[float] = None
    final_residual: Optional[float] = None
    residual_order: Optional[float] = None
    fp_iterations: Optional[int] = None
    failure: Optional[str] = None


class ConvergenceReport(BaseModel):
    problem: str
    method: str
    t_end: float
    error_metric: str
    reference: str
    rows: List[ConvergenceRow]

    def to_frame(self) -> pd.DataFrame:
        columns = list(ConvergenceRow.model_fields)
        return pd.DataFrame([row.model_dump() for row in self.rows], columns=columns)

    @property
    def orders(self) -> List[Optional[float]]:
        return [row.order_estimate for row in self.rows]


class DriftSeries(BaseModel):
    label: str
    times: List[float]
    errors: List[float]

    @field_validator("times")
    @classmethod
    def _increasing(cls, times: List[float]) -> List[float]:
        if np.any(np.diff(times) <= 0):
            raise ValueError("drift times must be strictly increasing")
        return times

    @property
    def max_error(self) -> float:
        return float(np.max(self.errors)) if self.errors else 0.0


class DriftReport(BaseModel):
    problem: str
    h: float
    t_end: float
    series: List[DriftSeries]

    def to_frame(self) -> pd.DataFrame:
        """Long format: one row per (config, t)."""
        frames = [pd.DataFrame({"config": s.label, "t": s.times, "abs_h_error": s.errors}) for s in self.series]
        if not frames:
            return pd.DataFrame(columns=["config", "t", "abs_h_error"])
        return pd.concat(frames, ignore_index=True)

    def by_label(self, label: str) -> DriftSeries:
        for series in self.series:
            if series.label == label:
                return series
        raise KeyError(label)


def trajectory_frame(trajectory: Trajectory) -> pd.DataFrame:
    """Per-step table: t, q_i, p_i, energy_error, residual, fp_iterations, correction_norm, line_integral, warning."""
    states = trajectory.states
    m = states.shape[1] // 2
    frame = pd.DataFrame({"t": trajectory.times})
    for i in range(m):
        frame[f"q{i + 1}"] = states[:, i]
    for i in range(m):
        frame[f"p{i + 1}"] = states[:, m + i]
    records = trajectory.records
    frame["energy_error"] = [r.energy_error for r in records]
    frame["residual"] = [r.residual for r in records]
    frame["fp_iterations"] = [r.fp_iterations for r in records]
    frame["correction_norm"] = [r.correction_norm for r in records]
    frame["line_integral"] = [r.line_integral for r in records]
    frame["warning"] = [r.warning or "" for r in records]
    return frame


def frame_to_csv(frame: pd.DataFrame) -> str:
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return buffer.getvalue()


def _plain(value):
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


def frame_to_json(frame: pd.DataFrame) -> str:
    records = [{key: _plain(value) for key, value in row.items()} for row in frame.to_dict(orient="records")]
    return json.dumps(records, indent=1)


def render(frame: pd.DataFrame, fmt: str = "csv") -> str:
    if fmt == "csv":
        return frame_to_csv(frame)
    if fmt == "json":
        return frame_to_json(frame)
    raise ValueError(f"unknown output format {fmt!r}; use csv or json")


def read_csv(source) -> pd.DataFrame:
    """Parse a CSV written by frame_to_csv without losing bits."""
    if isinstance(source, str) and "\n" in source:
        source = io.StringIO(source)
    return pd.read_csv(source, float_precision="round_trip", keep_default_na=True)
