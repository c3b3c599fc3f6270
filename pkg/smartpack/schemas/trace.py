"""Simulation trace, event log and comparison report models."""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

import pandas as pd
from pydantic import BaseModel, Field

TRACE_COLUMNS = [
    "t_s",
    "tvbn_mg100g",
    "nh3_ppm",
    "r_sensor_ohm",
    "f_res_mhz",
    "gain_db",
    "v_harvest_v",
    "temp_mat_c",
    "gate_open",
    "ca_released_frac",
    "eg_released_frac",
    "ca_headspace_ppm",
    "eg_headspace_ppm",
    "butanone_ppm",
    "methylbutanol_ppm",
]

OBSERVABLE_COLUMNS = TRACE_COLUMNS[1:]


class EventKind(str, Enum):
    NH3_CROSSED_THRESHOLD = "NH3_CROSSED_THRESHOLD"
    GATE_OPENED = "GATE_OPENED"
    GATE_CLOSED = "GATE_CLOSED"
    TVBN_LIMIT_EXCEEDED = "TVBN_LIMIT_EXCEEDED"
    EXTRAPOLATION_WARNING = "EXTRAPOLATION_WARNING"


class Event(BaseModel):
    model_config = {"frozen": True}

    kind: EventKind
    t_h: float
    step: int = Field(ge=0, description="first sample at or after the event")
    detail: str = ""


@dataclass
class SimulationTrace:
    """Uniform-grid record of every observable plus the ordered event log."""

    scenario: str
    config_digest: str
    frame: pd.DataFrame
    events: List[Event] = field(default_factory=list)

    @property
    def t_h(self) -> pd.Series:
        return self.frame["t_s"] / 3600.0

    @property
    def duration_h(self) -> float:
        return float(self.frame["t_s"].iloc[-1]) / 3600.0

    def first_event(self, kind: EventKind) -> Optional[Event]:
        return next((e for e in self.events if e.kind == kind), None)


class TraceSummary(BaseModel):
    scenario: str
    duration_h: float
    time_to_limit_h: Optional[float] = None
    limit_reached: bool = False
    gate_opened_h: Optional[float] = None
    final_tvbn: float
    final_ca_released: float
    final_eg_released: float


class ObservableDelta(BaseModel):
    scenario: str
    reference: str
    column: str
    final_delta: float
    max_abs_delta: float


class ShelfLifeExtension(BaseModel):
    scenario: str
    reference: str
    extension_h: Optional[float] = None
    lower_bound: bool = Field(default=False, description="scenario never reached the limit within its duration")


class ComparisonReport(BaseModel):
    reference: str
    summaries: List[TraceSummary] = Field(default_factory=list)
    deltas: List[ObservableDelta] = Field(default_factory=list)
    shelf_life: List[ShelfLifeExtension] = Field(default_factory=list)

    def delta(self, scenario: str, column: str) -> ObservableDelta:
        return next(d for d in self.deltas if d.scenario == scenario and d.column == column)

    def summary(self, scenario: str) -> TraceSummary:
        return next(s for s in self.summaries if s.scenario == scenario)
