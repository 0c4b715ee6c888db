"""
Run configuration, loaded from a JSON file and validated with pydantic.

Every field has a default, so an empty JSON object (or no file at all) is a valid configuration.
"""

import hashlib
import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import pydantic

from gait_muscle_lib.constants import DEFAULT_CYCLE_MS, DEFAULT_GRID, MUSCLE_NAMES, MuscleName
from gait_muscle_lib.errors import ConfigError, InputFileError, UnknownProfile
from gait_muscle_lib.forward_sim import SimulationSettings
from gait_muscle_lib.kinematics import GRF_PROFILES, BodyParams, GaitPhaseParams
from gait_muscle_lib.muscle_model import (
    LengthForceCurve,
    MotorUnitClass,
    MotorUnitGroup,
    MuscleAgent,
    default_motor_unit_classes,
)
from gait_muscle_lib.recruitment import RecruitConfig

DEFAULT_NEWTON_SCALES: Dict[MuscleName, float] = {
    "triceps_surae": 1500.0,
    "dorsiflexor": 600.0,
    "quadriceps": 1000.0,
    "hamstring": 300.0,
    "gluteus_maximus": 2000.0,
    "iliopsoas": 2000.0,
}


def _default_unit_counts() -> Dict[str, int]:
    return {"D": 10, "C": 10, "B": 10, "A": 20}


class MuscleSettings(pydantic.BaseModel):
    newton_scale: float = pydantic.Field(gt=0)
    """
    Newtons per relative force unit
    """
    unit_counts: Dict[str, int] = pydantic.Field(default_factory=_default_unit_counts)
    """
    Number of motor units per class label
    """
    f_p0: float = pydantic.Field(default=0.0, ge=0)
    length_ratio: float = pydantic.Field(default=1.0, gt=0)
    length_force_knots: Optional[List[Tuple[float, float]]] = None

    @pydantic.field_validator("unit_counts")
    @classmethod
    def _non_negative_counts(cls, counts: Dict[str, int]) -> Dict[str, int]:
        if any(count < 0 for count in counts.values()):
            raise ValueError("Motor unit counts must be non-negative")
        return counts


def _default_muscles() -> Dict[MuscleName, MuscleSettings]:
    return {muscle: MuscleSettings(newton_scale=scale) for muscle, scale in DEFAULT_NEWTON_SCALES.items()}


class RunConfig(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(extra="forbid")

    grid: int = pydantic.Field(default=DEFAULT_GRID, ge=3)
    """
    Samples per gait cycle that every trace is resampled to
    """
    cycle_ms: float = pydantic.Field(default=DEFAULT_CYCLE_MS, gt=0)
    grf_profile: str = "double-hump"
    body: BodyParams = BodyParams()
    gait: GaitPhaseParams = GaitPhaseParams()
    motor_unit_classes: Dict[str, MotorUnitClass] = pydantic.Field(default_factory=default_motor_unit_classes)
    muscles: Dict[MuscleName, MuscleSettings] = pydantic.Field(default_factory=_default_muscles)
    recruitment: RecruitConfig = RecruitConfig()
    simulation: SimulationSettings = SimulationSettings()
    workers: int = pydantic.Field(default=1, ge=1)
    """
    Muscles processed concurrently by the recruit and analyze commands
    """

    @pydantic.field_validator("grf_profile")
    @classmethod
    def _known_profile(cls, profile: str) -> str:
        if profile not in GRF_PROFILES:
            raise ValueError(f"Unknown ground reaction profile {profile!r}; expected one of {list(GRF_PROFILES)}")
        return profile

    @pydantic.field_validator("muscles", mode="before")
    @classmethod
    def _fill_muscles(cls, muscles: Any) -> Any:
        # A partial `muscles` section only overrides the muscles it names
        if not isinstance(muscles, dict):
            return muscles
        merged: Dict[str, Any] = {name: {"newton_scale": scale} for name, scale in DEFAULT_NEWTON_SCALES.items()}
        for name, settings in muscles.items():
            if isinstance(settings, dict):
                merged[name] = {**merged.get(name, {}), **settings}
            else:
                merged[name] = settings
        return merged

    @pydantic.model_validator(mode="after")
    def _consistent_classes(self):
        for label, unit_class in self.motor_unit_classes.items():
            if unit_class.label != label:
                raise ValueError(f"Motor unit class keyed {label!r} is labelled {unit_class.label!r}")
        for muscle, settings in self.muscles.items():
            unknown = sorted(set(settings.unit_counts) - set(self.motor_unit_classes))
            if unknown:
                raise ValueError(f"{muscle} references undefined motor unit classes {unknown}")
            if sorted(self.recruitment.order) != sorted(settings.unit_counts):
                raise ValueError(
                    f"Recruitment order {self.recruitment.order} must list exactly the classes of {muscle}: "
                    f"{sorted(settings.unit_counts)}"
                )
        return self

    @property
    def simulation_duration_ms(self) -> float:
        return self.simulation.duration_ms or self.cycle_ms


def parse_config(raw: Dict[str, Any]) -> RunConfig:
    try:
        return RunConfig.model_validate(raw)
    except pydantic.ValidationError as err:
        raise ConfigError(f"Invalid configuration:\n{err}") from err


def load_config(path: Optional[Path] = None) -> RunConfig:
    if path is None:
        return RunConfig()
    if not path.is_file():
        raise InputFileError(f"Config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise ConfigError(f"Config file {path} is not valid JSON: {err}") from err
    if not isinstance(raw, dict):
        raise ConfigError(f"Config file {path} must contain a JSON object")
    return parse_config(raw)


def with_overrides(
    config: RunConfig,
    grid: Optional[int] = None,
    cycle_ms: Optional[float] = None,
    profile: Optional[str] = None,
    order: Optional[List[str]] = None,
    dt_ms: Optional[float] = None,
) -> RunConfig:
    """
    Applies command-line overrides and re-validates the result
    """
    raw = config.model_dump()
    if grid is not None:
        raw["grid"] = grid
    if cycle_ms is not None:
        raw["cycle_ms"] = cycle_ms
    if profile is not None:
        if profile not in GRF_PROFILES:
            raise UnknownProfile(profile, list(GRF_PROFILES))
        raw["grf_profile"] = profile
    if order:
        raw["recruitment"]["order"] = [label for entry in order for label in entry.split(",") if label]
    if dt_ms is not None:
        raw["simulation"]["dt_ms"] = dt_ms
    return parse_config(raw)


def config_hash(config: RunConfig) -> str:
    """
    SHA-256 of the canonical JSON form of the configuration
    """
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def build_muscle_agent(config: RunConfig, muscle: MuscleName) -> MuscleAgent:
    settings = config.muscles[muscle]
    curve = (
        LengthForceCurve(knots=tuple(tuple(knot) for knot in settings.length_force_knots))  # type: ignore[arg-type]
        if settings.length_force_knots
        else LengthForceCurve()
    )
    return MuscleAgent(
        name=muscle,
        f_p0=settings.f_p0,
        curve=curve,
        units=[
            MotorUnitGroup(unit_class=config.motor_unit_classes[label], count=count)
            for label, count in settings.unit_counts.items()
        ],
        length_ratio=settings.length_ratio,
        newton_scale=settings.newton_scale,
    )


def build_muscle_agents(config: RunConfig) -> Dict[MuscleName, MuscleAgent]:
    return {muscle: build_muscle_agent(config, muscle) for muscle in MUSCLE_NAMES}
