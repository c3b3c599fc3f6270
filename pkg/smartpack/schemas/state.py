"""Hot-loop state records. Frozen so a step can never mutate its input."""

from dataclasses import dataclass

from smartpack.schemas.params import ReleaseParams, SpoilageParams


@dataclass(frozen=True, slots=True)
class SpoilageState:
    tvbn: float
    nh3: float = 0.0
    butanone: float = 0.0
    methylbutanol: float = 0.0
    cumulative_inhibitor_dose: float = 0.0

    @classmethod
    def initial(cls, params: SpoilageParams) -> "SpoilageState":
        return cls(tvbn=params.tvbn_initial)


@dataclass(frozen=True, slots=True)
class ThermalState:
    mat_temp_c: float


@dataclass(frozen=True, slots=True)
class CompoundState:
    released_fraction: float = 0.0
    headspace_ppm: float = 0.0
    total_load: float = 1.0

    @property
    def released_mass(self) -> float:
        return self.total_load * self.released_fraction

    @property
    def remaining_mass(self) -> float:
        return self.total_load - self.released_mass


@dataclass(frozen=True, slots=True)
class ReleaseState:
    ca: CompoundState
    eg: CompoundState
    gate_open: bool = False

    @classmethod
    def initial(cls, params: ReleaseParams) -> "ReleaseState":
        return cls(
            ca=CompoundState(total_load=params.ca.total_load),
            eg=CompoundState(total_load=params.eg.total_load),
        )

    @property
    def released_mass(self) -> float:
        return self.ca.released_mass + self.eg.released_mass
