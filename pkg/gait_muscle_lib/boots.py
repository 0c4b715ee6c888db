"""
Inverse-dynamics force estimation for six leg muscles from one gait cycle of joint angles.

Each algorithm balances the joint torque implied by the measured motion against the external
moments (ground reaction, segment weights, the other muscles) and reads the remaining moment as
muscle force through a fixed lever arm. Sign conventions, per joint:

- ankle: plantarflexion positive
- knee: extension positive
- hip: extension positive

Joint angle inputs keep the clinical convention of `kinematics` (flexion and dorsiflexion positive),
so accelerations are negated where the conventions differ.
"""

from dataclasses import dataclass, field
from typing import Dict, Final, Optional, Tuple

import numpy as np
import numpy.typing as npt

from gait_muscle_lib.constants import DEFAULT_CYCLE_MS, GRAVITY, MUSCLE_NAMES, MuscleName
from gait_muscle_lib.errors import GridMismatch
from gait_muscle_lib.kinematics import (
    BodyParams,
    GaitPhaseParams,
    GrfTrace,
    JointAngleTrace,
    foot_pitch,
    ground_reaction,
    joint_acceleration,
    leg_com_position,
    segment_positions,
    torque_from_inertia,
)
from gait_muscle_lib.logger import pkg_logger

FloatArray = npt.NDArray[np.float64]

SIGN_CONVENTION: Final = {
    "ankle": "plantarflexion positive",
    "knee": "extension positive",
    "hip": "extension positive",
    "angles_in": "hip flexion, knee flexion and ankle dorsiflexion positive",
}


@dataclass(frozen=True)
class MuscleForceTrace:
    """
    Non-negative muscle force (N) over the gait cycle. `residual` holds the clamped demand of the
    wrong sign, as force at this muscle's lever arm. Where an antagonist comes from the same torque
    balance, residual times lever arm equals the antagonist's force times its lever arm.
    """

    muscle: MuscleName
    values: FloatArray
    residual: FloatArray = field(default_factory=lambda: np.empty(0))
    cycle_duration: float = DEFAULT_CYCLE_MS

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        residual = np.array(self.residual, dtype=np.float64) if np.size(self.residual) else np.zeros_like(values)
        if values.shape != residual.shape:
            raise GridMismatch(f"{self.muscle} force and residual have different lengths")
        if np.any(values < 0) or np.any(residual < 0):
            raise ValueError(f"{self.muscle} force and residual must be non-negative")
        values.setflags(write=False)
        residual.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "residual", residual)

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def peak(self) -> float:
        return float(np.max(self.values)) if self.values.size else 0.0

    @property
    def cycle_pct(self) -> FloatArray:
        return np.arange(len(self)) * 100.0 / len(self)

    def scaled(self, factor: float) -> "MuscleForceTrace":
        return MuscleForceTrace(self.muscle, self.values * factor, self.residual * factor, self.cycle_duration)


def _positive(values: FloatArray) -> FloatArray:
    return np.clip(values, 0.0, None)


def _check_traces(*traces: JointAngleTrace):
    lengths = {len(trace) for trace in traces}
    durations = {trace.cycle_duration for trace in traces}
    if len(lengths) > 1 or len(durations) > 1:
        raise GridMismatch(f"Joint angle traces do not share one grid: lengths {lengths}, durations {durations}")


def _check_grid(grf: GrfTrace, *traces: JointAngleTrace):
    _check_traces(*traces)
    lengths = {len(trace) for trace in traces}
    if len(grf) not in lengths:
        raise GridMismatch(f"Ground reaction has {len(grf)} samples but the angle traces have {lengths.pop()}")


def ankle_terms(ankle: JointAngleTrace, body: BodyParams, grf: GrfTrace) -> Dict[str, FloatArray]:
    """
    Plantarflexion-positive moment balance about the ankle, with the ground reaction acting under the toes
    """
    _check_grid(grf, ankle)
    total_torque = torque_from_inertia(body.ankle_inertia, -joint_acceleration(ankle))
    moment_ground = -grf.force * body.toe_offset
    moment_foot = body.foot_mass * GRAVITY * body.foot_com_offset * np.cos(ankle.samples)
    return {
        "total_torque": total_torque,
        "moment_ground": moment_ground,
        "moment_foot": moment_foot,
        "demand": total_torque - (moment_foot + moment_ground),
    }


def boots_a(ankle: JointAngleTrace, body: BodyParams, grf: GrfTrace) -> MuscleForceTrace:
    """
    Triceps surae
    """
    demand = ankle_terms(ankle, body, grf)["demand"]
    lever = body.lever_arms.triceps_surae
    return MuscleForceTrace(
        "triceps_surae", _positive(demand) / lever, _positive(-demand) / lever, ankle.cycle_duration
    )


def dorsiflexor_terms(ankle: JointAngleTrace, body: BodyParams, grf: GrfTrace) -> Dict[str, FloatArray]:
    """
    Dorsiflexion-positive demands of the two dorsiflexor phases.

    Phase 1 covers samples where the ground carries less than the foot's weight: the muscle holds the
    foot up. Phase 2 covers samples with the toes off the ground: the heel reaction and the foot's
    weight balance the muscle. An airborne foot falls in both, and phase 2 then reduces to the
    foot-weight term alone.
    """
    _check_grid(grf, ankle)
    total_torque = torque_from_inertia(body.ankle_inertia, joint_acceleration(ankle))
    foot_weight_moment = body.foot_mass * GRAVITY * body.foot_com_offset * np.cos(ankle.samples)
    phase_1 = grf.force < body.foot_mass * GRAVITY
    phase_2 = ~grf.toes_on_ground
    return {
        "total_torque": total_torque,
        "phase_1_mask": phase_1.astype(np.float64),
        "phase_2_mask": phase_2.astype(np.float64),
        "phase_1_demand": np.where(phase_1, total_torque + foot_weight_moment, 0.0),
        "phase_2_demand": np.where(phase_2, total_torque + grf.force * body.heel_offset - foot_weight_moment, 0.0),
    }


def _dorsiflexor_phase(ankle: JointAngleTrace, body: BodyParams, grf: GrfTrace, key: str) -> MuscleForceTrace:
    demand = dorsiflexor_terms(ankle, body, grf)[key]
    lever = body.lever_arms.dorsiflexor
    return MuscleForceTrace("dorsiflexor", _positive(demand) / lever, _positive(-demand) / lever, ankle.cycle_duration)


def boots_b_phase1(ankle: JointAngleTrace, body: BodyParams, grf: GrfTrace) -> MuscleForceTrace:
    """
    Dorsiflexor force while the ground carries less than the foot's weight
    """
    return _dorsiflexor_phase(ankle, body, grf, "phase_1_demand")


def boots_b_phase2(ankle: JointAngleTrace, body: BodyParams, grf: GrfTrace) -> MuscleForceTrace:
    """
    Dorsiflexor force while the toes are off the ground
    """
    return _dorsiflexor_phase(ankle, body, grf, "phase_2_demand")


def boots_b(ankle: JointAngleTrace, body: BodyParams, grf: GrfTrace) -> MuscleForceTrace:
    """
    Dorsiflexor: sum of the two phase forces
    """
    phase_1, phase_2 = boots_b_phase1(ankle, body, grf), boots_b_phase2(ankle, body, grf)
    return MuscleForceTrace(
        "dorsiflexor",
        phase_1.values + phase_2.values,
        phase_1.residual + phase_2.residual,
        ankle.cycle_duration,
    )


def knee_terms(
    knee: JointAngleTrace, body: BodyParams, grf: GrfTrace, hip: Optional[JointAngleTrace] = None
) -> Dict[str, FloatArray]:
    """
    Extension-positive knee demands.

    Part 1 balances the knee's own motion against the ground reaction, which acts along the
    hip-to-ankle line, and the shank's weight. Part 2 is the support of the body above the knee:
    the upper body, plus the other leg while it swings, loaded in proportion to this foot's share of
    body weight. Without a hip trace the swing leg is taken as hanging straight down from the hip.
    """
    if hip is None:
        hip = JointAngleTrace("hip", np.zeros(len(knee)), knee.cycle_duration)
    _check_grid(grf, knee, hip)
    n = len(knee)
    thigh, shank = body.thigh_length, body.shank_length
    theta = knee.samples

    hip_ankle_distance = np.sqrt(thigh**2 + shank**2 + 2 * thigh * shank * np.cos(theta))
    ground_arm = thigh * shank * np.sin(theta) / hip_ankle_distance
    sin_phi = thigh * np.sin(theta) / hip_ankle_distance
    total_torque = torque_from_inertia(body.knee_inertia, -joint_acceleration(knee))
    moment_ground = -grf.force * ground_arm
    moment_shank = -body.shank_mass * GRAVITY * body.shank_com_ratio * shank * sin_phi
    part_1 = total_torque - (moment_ground + moment_shank)

    other = (np.arange(n) + n // 2) % n
    other_swinging = ~grf.in_contact[other]
    trunk_x = -body.trunk_com_offset * np.cos(body.trunk_lean) + body.trunk_com_height * np.sin(body.trunk_lean)
    swing_leg_x = leg_com_position(body, hip.samples[other], knee.samples[other])
    loaded_mass = body.upper_body_mass + np.where(other_swinging, body.leg_mass, 0.0)
    weighted_x = body.upper_body_mass * trunk_x + np.where(other_swinging, body.leg_mass * swing_leg_x, 0.0)
    loaded_x = np.divide(weighted_x, loaded_mass, out=np.zeros(n), where=loaded_mass > 0)
    share = grf.force / body.body_weight if body.body_weight > 0 else np.zeros(n)
    part_2 = -(loaded_mass * GRAVITY * share * loaded_x)

    return {
        "total_torque": total_torque,
        "moment_ground": moment_ground,
        "moment_shank": moment_shank,
        "part_1_demand": part_1,
        "part_2_demand": part_2,
    }


def _knee_pair(
    knee: JointAngleTrace, body: BodyParams, grf: GrfTrace, hip: Optional[JointAngleTrace]
) -> Tuple[MuscleForceTrace, MuscleForceTrace]:
    terms = knee_terms(knee, body, grf, hip)
    quad_lever, ham_lever = body.lever_arms.quadriceps, body.lever_arms.hamstring
    extending = _positive(terms["part_1_demand"]) + _positive(terms["part_2_demand"])
    flexing = _positive(-terms["part_1_demand"]) + _positive(-terms["part_2_demand"])
    # Each side keeps the moment it could not take as its residual
    return (
        MuscleForceTrace("quadriceps", extending / quad_lever, flexing / quad_lever, knee.cycle_duration),
        MuscleForceTrace("hamstring", flexing / ham_lever, extending / ham_lever, knee.cycle_duration),
    )


def boots_c(
    knee: JointAngleTrace, body: BodyParams, grf: GrfTrace, hip: Optional[JointAngleTrace] = None
) -> MuscleForceTrace:
    """
    Quadriceps: the positive part of each knee demand
    """
    return _knee_pair(knee, body, grf, hip)[0]


def boots_d(
    knee: JointAngleTrace, body: BodyParams, grf: GrfTrace, hip: Optional[JointAngleTrace] = None
) -> MuscleForceTrace:
    """
    Hamstring: the negative part of each knee demand
    """
    return _knee_pair(knee, body, grf, hip)[1]


def hip_terms(hip: JointAngleTrace, knee: JointAngleTrace, body: BodyParams, grf: GrfTrace) -> Dict[str, FloatArray]:
    """
    Extension-positive hip demand. The ground reaction acts at the ankle, the leg's weight at its
    center of mass, and the biarticular knee muscles contribute their hip moment (hamstring extends,
    quadriceps flexes).
    """
    _check_grid(grf, hip, knee)
    quadriceps, hamstring = _knee_pair(knee, body, grf, hip)
    ankle_x = segment_positions(body, hip.samples, knee.samples)["ankle"]
    leg_x = leg_com_position(body, hip.samples, knee.samples)

    total_torque = torque_from_inertia(body.hip_inertia, -joint_acceleration(hip))
    moment_ground = -grf.force * ankle_x
    moment_leg = body.leg_mass * GRAVITY * leg_x
    moment_knee_muscles = (
        hamstring.values * body.lever_arms.hamstring - quadriceps.values * body.lever_arms.quadriceps
    )
    return {
        "total_torque": total_torque,
        "moment_ground": moment_ground,
        "moment_leg": moment_leg,
        "moment_knee_muscles": moment_knee_muscles,
        "demand": total_torque - (moment_ground + moment_leg + moment_knee_muscles),
    }


def boots_e(hip: JointAngleTrace, knee: JointAngleTrace, body: BodyParams, grf: GrfTrace) -> MuscleForceTrace:
    """
    Gluteus maximus
    """
    demand = hip_terms(hip, knee, body, grf)["demand"]
    lever = body.lever_arms.gluteus_maximus
    return MuscleForceTrace(
        "gluteus_maximus", _positive(demand) / lever, _positive(-demand) / lever, hip.cycle_duration
    )


def boots_f(hip: JointAngleTrace, knee: JointAngleTrace, body: BodyParams, grf: GrfTrace) -> MuscleForceTrace:
    """
    Iliopsoas
    """
    demand = hip_terms(hip, knee, body, grf)["demand"]
    lever = body.lever_arms.iliopsoas
    return MuscleForceTrace("iliopsoas", _positive(-demand) / lever, _positive(demand) / lever, hip.cycle_duration)


@dataclass(frozen=True)
class BootsReport:
    forces: Dict[MuscleName, MuscleForceTrace]
    grf: GrfTrace
    terms: Dict[str, Dict[str, FloatArray]]
    """
    Intermediate torques per joint balance, keyed `ankle`, `dorsiflexor`, `knee` and `hip`
    """
    sign_convention: Dict[str, str] = field(default_factory=lambda: dict(SIGN_CONVENTION))

    def __getitem__(self, muscle: MuscleName) -> MuscleForceTrace:
        return self.forces[muscle]

    def summary(self) -> Dict:
        return {
            "sign_convention": self.sign_convention,
            "grf_profile": self.grf.profile,
            "samples": len(self.grf),
            "peaks_n": {muscle: trace.peak for muscle, trace in self.forces.items()},
            "peak_cycle_pct": {
                muscle: float(trace.cycle_pct[int(np.argmax(trace.values))]) for muscle, trace in self.forces.items()
            },
            "grf_n": self.grf.force.tolist(),
            "heel_on_ground": self.grf.heel_on_ground.tolist(),
            "toes_on_ground": self.grf.toes_on_ground.tolist(),
            "terms": {
                joint: {name: values.tolist() for name, values in joint_terms.items()}
                for joint, joint_terms in self.terms.items()
            },
        }


def boots_all(
    hip: JointAngleTrace,
    knee: JointAngleTrace,
    ankle: JointAngleTrace,
    body: BodyParams,
    profile: str = "double-hump",
    phases: Optional[GaitPhaseParams] = None,
) -> BootsReport:
    """
    Runs all six algorithms on one gait cycle. Toe contact is detected from the foot pitch.
    """
    _check_traces(hip, knee, ankle)
    n = len(ankle)
    grf = ground_reaction(body, profile, n, phases, pitch=foot_pitch(hip, knee, ankle))
    _check_grid(grf, hip, knee, ankle)

    quadriceps, hamstring = _knee_pair(knee, body, grf, hip)
    forces: Dict[MuscleName, MuscleForceTrace] = {
        "triceps_surae": boots_a(ankle, body, grf),
        "dorsiflexor": boots_b(ankle, body, grf),
        "quadriceps": quadriceps,
        "hamstring": hamstring,
        "gluteus_maximus": boots_e(hip, knee, body, grf),
        "iliopsoas": boots_f(hip, knee, body, grf),
    }
    pkg_logger.debug(
        "Estimated muscle forces: "
        + ", ".join(f"{muscle}={forces[muscle].peak:.6g} N peak" for muscle in MUSCLE_NAMES)
    )
    return BootsReport(
        forces=forces,
        grf=grf,
        terms={
            "ankle": ankle_terms(ankle, body, grf),
            "dorsiflexor": dorsiflexor_terms(ankle, body, grf),
            "knee": knee_terms(knee, body, grf, hip),
            "hip": hip_terms(hip, knee, body, grf),
        },
    )
