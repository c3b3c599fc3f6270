"""Parameter blocks for every physical model.

Defaults are the calibrated values shipped in calibration/params.json, so a bare
``ModelParams()`` already describes the characterised device and salmon batch.
"""

import math
from typing import List, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator

Knots = List[Tuple[float, float]]

_FROZEN = {"extra": "forbid", "frozen": True}


def _check_knots(knots: Knots) -> Knots:
    if len(knots) < 2:
        raise ValueError("a table needs at least two knots")
    xs = [k[0] for k in knots]
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise ValueError("table knots must be strictly increasing in x")
    return knots


# ── Spoilage ─────────────────────────────────────────────────────────────────

class SpoilageParams(BaseModel):
    """Logistic TVB-N growth with Q10 temperature scaling and inhibitor divisor."""

    model_config = _FROZEN

    tvbn_initial: float = Field(default=1.3, ge=0, description="mg per 100 g")
    growth_rate_rt: float = Field(default=0.4812879858, ge=0, description="per hour at 20 C")
    q10: float = Field(default=4.128509624, ge=1)
    tvbn_cap: float = Field(default=25.20807012, gt=0, description="logistic ceiling, mg per 100 g")
    nh3_per_tvbn: float = Field(default=2.531645570, ge=0, description="ppm per mg/100 g")
    inhibition_halfdose: float = Field(default=1.404458819e-3, gt=0, description="ppm of CA + EG")
    marker_yield_butanone: float = Field(default=226.8508, ge=0)
    marker_yield_methylbutanol: float = Field(default=15.46710, ge=0)
    marker_decay: float = Field(default=0.5, ge=0, description="per hour")

    @model_validator(mode="after")
    def _cap_above_initial(self) -> "SpoilageParams":
        if self.tvbn_cap <= self.tvbn_initial:
            raise ValueError("tvbn_cap must exceed tvbn_initial")
        return self


# ── Sensor ───────────────────────────────────────────────────────────────────

class SensorModel(BaseModel):
    """SWCNT chemiresistor on PDMS."""

    model_config = _FROZEN

    r_baseline: float = Field(default=900.0, gt=0, description="Ohm")
    r_saturated: float = Field(default=1800.0, gt=0, description="Ohm at nh3_linear_max")
    nh3_linear_max: float = Field(default=90.0, gt=0, description="ppm")
    transient_nh3: float = Field(default=1.444444444e-3, ge=0, description="transient response per ppm NH3")
    sens_ch4: float = Field(default=1.0e-4, ge=0, description="fractional response per ppm")
    sens_co2: float = Field(default=4.666666667e-6, ge=0, description="fractional response per ppm")
    passivation_factor: float = Field(default=1.0, gt=0, le=1)
    bend_cycles: float = Field(default=0.0, ge=0)
    bend_loss_at_5000: float = Field(default=0.05, ge=0, lt=1)

    @model_validator(mode="after")
    def _saturated_above_baseline(self) -> "SensorModel":
        if self.r_saturated <= self.r_baseline:
            raise ValueError("r_saturated must exceed r_baseline")
        return self

    @property
    def nh3_slope(self) -> float:
        """Cumulative fractional resistance change per ppm NH3 before scaling."""
        return (self.r_saturated / self.r_baseline - 1.0) / self.nh3_linear_max


# ── RF link ──────────────────────────────────────────────────────────────────

class CouplingEntry(BaseModel):
    model_config = _FROZEN

    name: str = Field(min_length=1)
    distance_cm: float = Field(ge=0)
    coupling: float = Field(ge=0, le=1)


def _default_coupling() -> List[CouplingEntry]:
    return [
        CouplingEntry(name="helmholtz_inner_edge_5cm", distance_cm=5.0, coupling=1.0),
        CouplingEntry(name="package_lid", distance_cm=6.0, coupling=0.77),
        CouplingEntry(name="helmholtz_center", distance_cm=7.5, coupling=0.62),
        CouplingEntry(name="helmholtz_outer_10cm", distance_cm=10.0, coupling=0.35),
        CouplingEntry(name="out_of_field", distance_cm=30.0, coupling=0.0),
    ]


class EnvShiftTables(BaseModel):
    """Piecewise-linear environmental perturbations of the bare antenna."""

    model_config = _FROZEN

    strain_freq: Knots = Field(default=[(0.0, 0.0), (40.0, -2.0)], description="strain % -> delta MHz")
    strain_trace_resistance: Knots = Field(default=[(0.0, 0.0), (40.0, 1.9)], description="strain % -> delta Ohm")
    bend_freq: Knots = Field(default=[(0.0, 0.0), (5000.0, 1.5)], description="cycles -> delta MHz")
    temp_freq: Knots = Field(default=[(5.0, 0.0), (25.0, 0.9)], description="C -> delta MHz")
    humidity_freq: Knots = Field(default=[(20.0, 0.0), (80.0, 1.5)], description="%RH -> delta MHz")

    @field_validator("*")
    @classmethod
    def _knots(cls, value: Knots) -> Knots:
        return _check_knots(value)


class RfLinkModel(BaseModel):
    """NFC antenna as a resonant tank loaded by the sensor."""

    model_config = _FROZEN

    inductance: float = Field(default=1.5e-6, gt=0, description="H (assumed; reporting only)")
    capacitance: float = Field(default=8.615746908e-11, gt=0, description="F, back-solved from f_res_nominal")
    trace_resistance: float = Field(default=0.3, gt=0, description="Ohm, unstrained")
    carrier_freq: float = Field(default=13.56, gt=0, description="MHz")
    f_res_nominal: float = Field(default=14.0, gt=0, description="MHz")
    bandwidth: float = Field(default=3.0, gt=0, description="MHz")
    match_freq: float = Field(default=13.6, gt=0, description="MHz where harvesting peaks")
    pull_mhz: float = Field(default=0.4, ge=0, description="load-pulling shift from r_load_ref to 2*r_load_ref")
    r_load_ref: float = Field(default=900.0, gt=0, description="Ohm")
    gain_unloaded: float = Field(default=0.4, description="dB")
    gain_fullscale: float = Field(default=-5.654302222, description="dB at perfect match")
    v_peak: float = Field(default=5.927297668, ge=0, description="V")
    harvest_enable_v: float = Field(default=5.8, ge=0, description="V; harvester output to the heater is off below")
    encapsulated: bool = Field(default=True, description="PDMS-sealed device ignores temperature/humidity drift")
    coupling_table: List[CouplingEntry] = Field(default_factory=_default_coupling, min_length=1)
    env_shift_tables: EnvShiftTables = Field(default_factory=EnvShiftTables)

    @model_validator(mode="after")
    def _tank_consistent(self) -> "RfLinkModel":
        f_lc = 1.0 / (2.0 * math.pi * math.sqrt(self.inductance * self.capacitance)) / 1e6
        if abs(f_lc - self.f_res_nominal) > 0.01 * self.f_res_nominal:
            raise ValueError(f"1/(2*pi*sqrt(LC)) = {f_lc:.4f} MHz is not within 1% of f_res_nominal")
        names = [e.name for e in self.coupling_table]
        if len(set(names)) != len(names):
            raise ValueError("coupling_table names must be unique")
        return self

    @property
    def lc_resonance_mhz(self) -> float:
        return 1.0 / (2.0 * math.pi * math.sqrt(self.inductance * self.capacitance)) / 1e6


# ── Thermal ──────────────────────────────────────────────────────────────────

class ThermalParams(BaseModel):
    """PEDOT:PSS Joule heater under the release mat."""

    model_config = _FROZEN

    heater_resistance: float = Field(default=100.0, gt=0, description="Ohm")
    series_electrode_resistance: float = Field(default=3.0, ge=0, description="Ohm, replaced from strain in runs")
    reference_electrode_resistance: float = Field(default=3.0, ge=0, description="Ohm during characterisation")
    power_exponent: float = Field(default=1.345937168, gt=0)
    power_coefficient: float = Field(default=1.595595524, gt=0, description="C per V^exponent")
    time_constant: float = Field(default=60.0, gt=0, description="seconds")
    ambient_c: float = Field(default=20.0, description="mat reference temperature, C")
    mat_area_cm2: float = Field(default=4.0, gt=0)
    reference_area_cm2: float = Field(default=4.0, gt=0)


# ── Release ──────────────────────────────────────────────────────────────────

class CompoundParams(BaseModel):
    model_config = _FROZEN

    total_load: float = Field(default=1.0, gt=0, description="normalised mass")
    rate_constant: float = Field(gt=0, description="per hour while the gate is open")
    headspace_yield: float = Field(ge=0, description="ppm per released fraction")
    headspace_loss: float = Field(gt=0, description="per hour")


class ReleaseParams(BaseModel):
    """LCST-gated release of cinnamaldehyde (ca) and eugenol (eg)."""

    model_config = _FROZEN

    lcst_c: float = Field(default=32.0)
    ca: CompoundParams = Field(
        default_factory=lambda: CompoundParams(
            rate_constant=0.04619427602, headspace_yield=2905.067419, headspace_loss=0.3226126673
        )
    )
    eg: CompoundParams = Field(
        default_factory=lambda: CompoundParams(
            rate_constant=0.25, headspace_yield=130.5707746, headspace_loss=0.07220325353
        )
    )


COMPOUNDS = ("ca", "eg")


class ModelParams(BaseModel):
    """Every calibrated block; the content of calibration/params.json."""

    model_config = _FROZEN

    spoilage: SpoilageParams = Field(default_factory=SpoilageParams)
    sensor: SensorModel = Field(default_factory=SensorModel)
    rf: RfLinkModel = Field(default_factory=RfLinkModel)
    thermal: ThermalParams = Field(default_factory=ThermalParams)
    release: ReleaseParams = Field(default_factory=ReleaseParams)
