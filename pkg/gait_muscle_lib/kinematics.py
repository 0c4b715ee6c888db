"""
Joint angle traces, their derivatives, body segment parameters and the ground reaction model.

Angles are stored in radians. Joint angles follow the clinical gait convention: hip flexion,
knee flexion and ankle dorsiflexion are positive.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Final, Literal, Optional, Tuple

import numpy as np
import numpy.typing as npt
import pydantic
from scipy.interpolate import PchipInterpolator

from gait_muscle_lib.constants import DEFAULT_CYCLE_MS, GRAVITY, JointName, MuscleName
from gait_muscle_lib.errors import GridMismatch, UnknownProfile

FloatArray = npt.NDArray[np.float64]
BoolArray = npt.NDArray[np.bool_]

ScalarUnit = Literal["rad", "rad/s", "rad/s^2", "N", "N*m"]

GrfProfile = Literal["static", "double-hump"]
GRF_PROFILES: Final[Tuple[GrfProfile, ...]] = ("static", "double-hump")

DOUBLE_HUMP_KNOTS: Final = ((0.0, 0.0), (0.1, 1.1), (0.3, 0.8), (0.5, 1.1), (0.6, 0.0))
"""
`(cycle_fraction, body_weight_multiple)` knots of the walking ground reaction, for a stance fraction of 0.6
"""


def _frozen_array(values: npt.ArrayLike, dtype=np.float64) -> np.ndarray:
    array = np.array(values, dtype=dtype)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class JointAngleTrace:
    """
    One joint's angle (radians) sampled uniformly over one periodic gait cycle
    """

    joint: JointName
    samples: FloatArray
    cycle_duration: float = DEFAULT_CYCLE_MS
    """
    Duration of one gait cycle, in ms
    """

    def __post_init__(self):
        samples = _frozen_array(self.samples)
        if samples.ndim != 1 or samples.size < 3:
            raise ValueError(f"A {self.joint} trace needs at least 3 samples, got shape {samples.shape}")
        if self.cycle_duration <= 0:
            raise ValueError("Cycle duration must be positive")
        object.__setattr__(self, "samples", samples)

    @classmethod
    def from_degrees(cls, joint: JointName, degrees: npt.ArrayLike, cycle_duration: float = DEFAULT_CYCLE_MS):
        return cls(joint, np.deg2rad(np.asarray(degrees, dtype=np.float64)), cycle_duration)

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def sample_interval_s(self) -> float:
        return self.cycle_duration / 1000.0 / len(self)

    @property
    def cycle_pct(self) -> FloatArray:
        return np.arange(len(self)) * 100.0 / len(self)

    def degrees(self) -> FloatArray:
        return np.rad2deg(self.samples)


@dataclass(frozen=True)
class ScalarTrace:
    values: FloatArray
    unit: ScalarUnit
    cycle_duration: float = DEFAULT_CYCLE_MS

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values))

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def sample_interval_s(self) -> float:
        return self.cycle_duration / 1000.0 / len(self)


def _periodic_central_difference(values: FloatArray, dt_s: float) -> FloatArray:
    return (np.roll(values, -1) - np.roll(values, 1)) / (2.0 * dt_s)


def angular_velocity(trace: JointAngleTrace) -> ScalarTrace:
    """
    Periodic central difference: omega[i] = (theta[i+1] - theta[i-1]) / (2 dt), indices wrapping around the cycle
    """
    return ScalarTrace(
        _periodic_central_difference(trace.samples, trace.sample_interval_s), "rad/s", trace.cycle_duration
    )


def angular_acceleration(omega: ScalarTrace) -> ScalarTrace:
    if omega.unit != "rad/s":
        raise ValueError(f"Expected an angular velocity trace, got unit {omega.unit}")
    return ScalarTrace(
        _periodic_central_difference(omega.values, omega.sample_interval_s), "rad/s^2", omega.cycle_duration
    )


def joint_acceleration(trace: JointAngleTrace) -> FloatArray:
    return angular_acceleration(angular_velocity(trace)).values


def torque_from_force(f: npt.ArrayLike, d: float):
    if d < 0:
        raise ValueError(f"Lever arm must be non-negative, got {d}")
    return np.asarray(f, dtype=np.float64) * d


def torque_from_inertia(i: float, alpha: npt.ArrayLike):
    # i == 0 is allowed so that a massless body yields zero torque
    if i < 0:
        raise ValueError(f"Moment of inertia must be non-negative, got {i}")
    return i * np.asarray(alpha, dtype=np.float64)


class LeverArms(pydantic.BaseModel):
    """
    Muscle moment arms about the joint they cross, in meters
    """

    triceps_surae: float = pydantic.Field(default=0.05, gt=0)
    dorsiflexor: float = pydantic.Field(default=0.04, gt=0)
    quadriceps: float = pydantic.Field(default=0.045, gt=0)
    hamstring: float = pydantic.Field(default=0.04, gt=0)
    gluteus_maximus: float = pydantic.Field(default=0.07, gt=0)
    iliopsoas: float = pydantic.Field(default=0.05, gt=0)

    def __getitem__(self, muscle: MuscleName) -> float:
        return getattr(self, muscle)


class BodyParams(pydantic.BaseModel):
    """
    Anthropometry of the modeled subject. Masses scale with `total_mass`; lengths do not.
    """

    total_mass: float = pydantic.Field(default=70.0, ge=0)
    """
    Whole body mass, in kg. Zero is allowed and produces an all-zero force output.
    """
    foot_mass_ratio: float = pydantic.Field(default=0.0145, gt=0)
    shank_mass_ratio: float = pydantic.Field(default=0.0465, gt=0)
    thigh_mass_ratio: float = pydantic.Field(default=0.100, gt=0)
    shank_length: float = pydantic.Field(default=0.43, gt=0)
    thigh_length: float = pydantic.Field(default=0.43, gt=0)
    toe_offset: float = pydantic.Field(default=0.15, gt=0)
    """
    Horizontal distance from the ankle to the point where the ground reaction acts under the toes, in m
    """
    heel_offset: float = pydantic.Field(default=0.05, gt=0)
    """
    Horizontal distance from the ankle back to the heel contact point, in m
    """
    foot_com_offset: float = pydantic.Field(default=0.06, gt=0)
    """
    Horizontal distance from the ankle to the foot center of mass, in m
    """
    shank_com_ratio: float = pydantic.Field(default=0.433, gt=0, lt=1)
    """
    Shank center of mass position from the knee, as a fraction of shank length
    """
    thigh_com_ratio: float = pydantic.Field(default=0.433, gt=0, lt=1)
    """
    Thigh center of mass position from the hip, as a fraction of thigh length
    """
    foot_gyration_ratio: float = pydantic.Field(default=0.690, gt=0)
    shank_gyration_ratio: float = pydantic.Field(default=0.528, gt=0)
    thigh_gyration_ratio: float = pydantic.Field(default=0.540, gt=0)
    trunk_com_offset: float = pydantic.Field(default=0.03, ge=0)
    """
    Horizontal distance of the upper body center of mass behind the hip when upright, in m
    """
    trunk_com_height: float = pydantic.Field(default=0.30, ge=0)
    """
    Height of the upper body center of mass above the hip, in m
    """
    trunk_lean: float = 0.0
    """
    Forward trunk lean, in rad
    """
    lever_arms: LeverArms = LeverArms()
    ankle_inertia_override: Optional[float] = pydantic.Field(default=None, gt=0)
    knee_inertia_override: Optional[float] = pydantic.Field(default=None, gt=0)
    hip_inertia_override: Optional[float] = pydantic.Field(default=None, gt=0)

    @pydantic.model_validator(mode="after")
    def _segments_lighter_than_body(self):
        if 2 * (self.foot_mass_ratio + self.shank_mass_ratio + self.thigh_mass_ratio) >= 1:
            raise ValueError("Both legs together must weigh less than the whole body")
        return self

    @property
    def foot_mass(self) -> float:
        return self.total_mass * self.foot_mass_ratio

    @property
    def shank_mass(self) -> float:
        return self.total_mass * self.shank_mass_ratio

    @property
    def thigh_mass(self) -> float:
        return self.total_mass * self.thigh_mass_ratio

    @property
    def leg_mass(self) -> float:
        return self.foot_mass + self.shank_mass + self.thigh_mass

    @property
    def upper_body_mass(self) -> float:
        return self.total_mass - 2 * self.leg_mass

    @property
    def body_weight(self) -> float:
        return self.total_mass * GRAVITY

    @property
    def foot_length(self) -> float:
        return self.toe_offset + self.heel_offset

    @property
    def ankle_inertia(self) -> float:
        """
        Foot about the ankle
        """
        if self.ankle_inertia_override is not None:
            return self.ankle_inertia_override
        return self.foot_mass * (self.foot_gyration_ratio * self.foot_length) ** 2

    @property
    def knee_inertia(self) -> float:
        """
        Shank plus the foot, treated as a point mass at the ankle, about the knee
        """
        if self.knee_inertia_override is not None:
            return self.knee_inertia_override
        return self.shank_mass * (self.shank_gyration_ratio * self.shank_length) ** 2 + (
            self.foot_mass * self.shank_length**2
        )

    @property
    def hip_inertia(self) -> float:
        """
        Whole leg about the hip
        """
        if self.hip_inertia_override is not None:
            return self.hip_inertia_override
        return (
            self.thigh_mass * (self.thigh_gyration_ratio * self.thigh_length) ** 2
            + self.shank_mass * (self.thigh_length + self.shank_com_ratio * self.shank_length) ** 2
            + self.foot_mass * (self.thigh_length + self.shank_length) ** 2
        )

    def joint_inertia(self, joint: JointName) -> float:
        return {"hip": self.hip_inertia, "knee": self.knee_inertia, "ankle": self.ankle_inertia}[joint]

    def with_mass_scale(self, factor: float) -> "BodyParams":
        return self.model_copy(update={"total_mass": self.total_mass * factor})


class GaitPhaseParams(pydantic.BaseModel):
    stance_fraction: float = pydantic.Field(default=0.60, gt=0, lt=1)
    heel_off_fraction: float = pydantic.Field(default=0.45, gt=0, lt=1)
    """
    Cycle fraction at which the heel leaves the ground
    """
    toe_contact_fraction: float = pydantic.Field(default=0.05, ge=0, lt=1)
    """
    Cycle fraction at which the toes land, used when no joint angles are available
    """
    toe_contact_pitch: float = 0.05
    """
    Foot pitch (rad, toes up positive) at or below which the toes are considered on the ground
    """

    @pydantic.model_validator(mode="after")
    def _ordered_events(self):
        if not self.toe_contact_fraction < self.heel_off_fraction < self.stance_fraction:
            raise ValueError("Expected toe contact < heel off < toe off within the gait cycle")
        return self


class GaitPhase(str, Enum):
    STANCE = "stance"
    SWING = "swing"


def gait_phase(k: int, n: int, stance_fraction: float = 0.60) -> GaitPhase:
    if not 0 <= k < n:
        raise ValueError(f"Sample index {k} is outside a cycle of {n} samples")
    return GaitPhase.STANCE if k / n < stance_fraction else GaitPhase.SWING


def foot_pitch(hip: JointAngleTrace, knee: JointAngleTrace, ankle: JointAngleTrace) -> FloatArray:
    """
    Sagittal angle of the foot relative to the floor, toes up positive, for a vertical-ish shank
    """
    return hip.samples - knee.samples + ankle.samples


@dataclass(frozen=True)
class GrfTrace:
    """
    Vertical ground reaction force on one foot, with contact flags, sampled over the gait cycle
    """

    force: FloatArray
    heel_on_ground: BoolArray
    toes_on_ground: BoolArray
    profile: GrfProfile = "double-hump"

    def __post_init__(self):
        force = _frozen_array(self.force)
        heel = _frozen_array(self.heel_on_ground, dtype=np.bool_)
        toes = _frozen_array(self.toes_on_ground, dtype=np.bool_)
        if not force.shape == heel.shape == toes.shape:
            raise GridMismatch("Ground reaction force and contact flags must share one grid")
        if np.any(force < 0):
            raise ValueError("Ground reaction force must be non-negative")
        if np.any(force[~heel & ~toes] != 0):
            raise ValueError("Ground reaction force must be zero whenever the foot is off the ground")
        object.__setattr__(self, "force", force)
        object.__setattr__(self, "heel_on_ground", heel)
        object.__setattr__(self, "toes_on_ground", toes)

    def __len__(self) -> int:
        return int(self.force.size)

    @property
    def in_contact(self) -> BoolArray:
        return self.heel_on_ground | self.toes_on_ground


def _double_hump(fractions: FloatArray, stance_fraction: float) -> FloatArray:
    knot_x = np.array([x for x, _ in DOUBLE_HUMP_KNOTS]) * (stance_fraction / DOUBLE_HUMP_KNOTS[-1][0])
    knot_y = np.array([y for _, y in DOUBLE_HUMP_KNOTS])
    curve = PchipInterpolator(knot_x, knot_y, extrapolate=False)
    values = np.nan_to_num(curve(fractions), nan=0.0)
    return np.clip(values, 0.0, None)


def ground_reaction(
    body: BodyParams,
    stance_profile: str = "double-hump",
    n: int = 20,
    phases: Optional[GaitPhaseParams] = None,
    pitch: Optional[npt.ArrayLike] = None,
) -> GrfTrace:
    """
    Builds the ground reaction trace for one foot over `n` samples of the cycle.

    With `pitch` (see `foot_pitch`), the toes land on the first stance sample where the foot is flat enough,
    and stay down until toe off. Without it, they land at a fixed cycle fraction.
    """
    if stance_profile not in GRF_PROFILES:
        raise UnknownProfile(stance_profile, list(GRF_PROFILES))
    if n < 3:
        raise ValueError("A gait cycle needs at least 3 samples")
    phases = phases or GaitPhaseParams()

    fractions = np.arange(n) / n
    stance = fractions < phases.stance_fraction
    if stance_profile == "static":
        multiple = np.where(stance, 1.0, 0.0)
    else:
        multiple = np.where(stance, _double_hump(fractions, phases.stance_fraction), 0.0)

    heel = stance & (fractions < phases.heel_off_fraction)
    if pitch is None:
        toes = stance & (fractions >= phases.toe_contact_fraction)
    else:
        pitch_arr = np.asarray(pitch, dtype=np.float64)
        if pitch_arr.shape != (n,):
            raise GridMismatch(f"Foot pitch has shape {pitch_arr.shape}, expected ({n},)")
        landed = np.logical_or.accumulate(stance & (pitch_arr <= phases.toe_contact_pitch))
        toes = stance & (landed | (fractions >= phases.heel_off_fraction))

    return GrfTrace(body.body_weight * multiple, heel, toes, profile=stance_profile)  # type: ignore[arg-type]


def contralateral_index(k: int, n: int) -> int:
    return (k + n // 2) % n


def segment_positions(body: BodyParams, hip_angle: npt.ArrayLike, knee_angle: npt.ArrayLike) -> Dict[str, FloatArray]:
    """
    Horizontal positions (m, anterior positive) relative to the hip of the leg's segment centers of mass and ankle
    """
    hip_arr = np.asarray(hip_angle, dtype=np.float64)
    thigh_x = body.thigh_length * np.sin(hip_arr)
    shank_direction = np.sin(hip_arr - np.asarray(knee_angle, dtype=np.float64))
    return {
        "thigh_com": body.thigh_com_ratio * thigh_x,
        "shank_com": thigh_x + body.shank_com_ratio * body.shank_length * shank_direction,
        "ankle": thigh_x + body.shank_length * shank_direction,
    }


def leg_com_position(body: BodyParams, hip_angle: npt.ArrayLike, knee_angle: npt.ArrayLike) -> FloatArray:
    if body.leg_mass == 0:
        return np.zeros(np.shape(hip_angle))
    positions = segment_positions(body, hip_angle, knee_angle)
    return (
        body.thigh_mass * positions["thigh_com"]
        + body.shank_mass * positions["shank_com"]
        + body.foot_mass * positions["ankle"]
    ) / body.leg_mass
