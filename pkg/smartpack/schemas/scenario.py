"""Scenario configuration: one simulated run."""

from typing import Literal, Optional, Union

from pydantic import BaseModel, Field

from smartpack.core.utils import config_digest
from smartpack.schemas.params import ReleaseParams, RfLinkModel, SensorModel, SpoilageParams, ThermalParams

_FROZEN = {"extra": "forbid", "frozen": True}

# Position is a coupling-table name or a distance from the coil in cm
Position = Union[str, float]


class EnvCondition(BaseModel):
    """Conditions the antenna sees. Out-of-range values are flagged, not rejected."""

    model_config = _FROZEN

    strain: float = Field(default=0.0, ge=0, description="percent")
    bend_cycles: float = Field(default=0.0, ge=0)
    temp_c: float = Field(default=20.0)
    humidity_rh: float = Field(default=50.0, ge=0, le=100)
    position: Position = "helmholtz_inner_edge_5cm"


class EnvironmentConfig(BaseModel):
    model_config = _FROZEN

    ambient_c: float = Field(default=20.0, ge=-5, le=40, description="storage temperature")
    humidity_rh: float = Field(default=50.0, ge=0, le=100)
    position: Position = "helmholtz_inner_edge_5cm"
    strain: float = Field(default=0.0, ge=0)
    bend_cycles: float = Field(default=0.0, ge=0)
    ch4_ppm: float = Field(default=0.0, ge=0, description="background headspace methane")
    co2_ppm: float = Field(default=0.0, ge=0, description="background headspace CO2")

    def to_env_condition(self) -> EnvCondition:
        return EnvCondition(
            strain=self.strain,
            bend_cycles=self.bend_cycles,
            temp_c=self.ambient_c,
            humidity_rh=self.humidity_rh,
            position=self.position,
        )


class DeviceConfig(BaseModel):
    model_config = _FROZEN

    sensor: SensorModel = Field(default_factory=SensorModel)
    rf: RfLinkModel = Field(default_factory=RfLinkModel)
    thermal: ThermalParams = Field(default_factory=ThermalParams)
    release: ReleaseParams = Field(default_factory=ReleaseParams)


class ScenarioConfig(BaseModel):
    """Full description of one run. ``food = None`` means an empty box."""

    model_config = _FROZEN

    name: str = Field(min_length=1)
    duration_h: float = Field(gt=0)
    dt_s: float = Field(default=10.0, gt=0)
    environment: EnvironmentConfig = Field(default_factory=EnvironmentConfig)
    food: Optional[SpoilageParams] = Field(default_factory=SpoilageParams)
    device: DeviceConfig = Field(default_factory=DeviceConfig)
    trigger_threshold_ppm: float = Field(default=40.0, gt=0)
    trigger_mode: Literal["physical", "comparator"] = "physical"
    smart_packaging_enabled: bool = True
    tvbn_limit: float = Field(default=25.0, gt=0, description="mg per 100 g")

    @property
    def dt_h(self) -> float:
        return self.dt_s / 3600.0

    @property
    def n_steps(self) -> int:
        return int(round(self.duration_h * 3600.0 / self.dt_s))

    def digest(self) -> str:
        return config_digest(self.model_dump(mode="json"))
