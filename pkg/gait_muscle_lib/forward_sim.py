"""
Forward simulation of three single-degree-of-freedom joints, each driven by an antagonist muscle pair.

Inside the simulator every joint angle is positive in the direction its extensor moves it (hip
extension, knee extension, ankle plantarflexion). Traces handed back to callers are converted to
the clinical convention used everywhere else (flexion and dorsiflexion positive). Gravity is not
modeled.
"""

import math
from dataclasses import dataclass
from typing import Dict, Final, Mapping, Optional, Tuple

import numpy as np
import numpy.typing as npt
import pydantic

from gait_muscle_lib.constants import DEFAULT_CYCLE_MS, DEFAULT_GRID, JOINT_NAMES, JointName, MuscleName
from gait_muscle_lib.kinematics import BodyParams, JointAngleTrace
from gait_muscle_lib.logger import pkg_logger
from gait_muscle_lib.muscle_model import DEFAULT_PRUNE_EPSILON, MuscleAgent, PrunedEvaluation, total_force
from gait_muscle_lib.recruitment import StimulationPlan, plan_to_agent

FloatArray = npt.NDArray[np.float64]

JOINT_MUSCLES: Final[Dict[JointName, Tuple[MuscleName, MuscleName]]] = {
    "hip": ("iliopsoas", "gluteus_maximus"),
    "knee": ("hamstring", "quadriceps"),
    "ankle": ("dorsiflexor", "triceps_surae"),
}
"""
`(flexor, extensor)` per joint
"""

MIN_LENGTH_RATIO: Final = 1e-6


class SimulationSettings(pydantic.BaseModel):
    dt_ms: float = pydantic.Field(default=1.0, gt=0)
    joint_range: float = pydantic.Field(default=0.05, gt=0)
    """
    Half-width (rad) of the allowed range around the neutral angle. The narrow default holds the
    joints close to isometric so that muscle lengths stay near rest length.
    """
    length_coupling: float = pydantic.Field(default=0.3, ge=0)
    """
    Change in muscle length ratio per radian of joint rotation
    """
    damping: float = pydantic.Field(default=1.0, ge=0)
    """
    Viscous joint damping, in N*m*s/rad
    """
    prune_epsilon: float = pydantic.Field(default=DEFAULT_PRUNE_EPSILON, ge=0)
    duration_ms: Optional[float] = pydantic.Field(default=None, gt=0)
    """
    Simulated time; defaults to one gait cycle
    """


class JointModel(pydantic.BaseModel):
    joint: JointName
    flexor: MuscleAgent
    extensor: MuscleAgent
    flexor_lever: float = pydantic.Field(gt=0)
    extensor_lever: float = pydantic.Field(gt=0)
    inertia: float = pydantic.Field(gt=0)
    neutral: float = 0.0
    lower_limit: float
    upper_limit: float
    damping: float = pydantic.Field(default=0.0, ge=0)
    length_coupling: float = pydantic.Field(default=0.3, ge=0)

    @pydantic.model_validator(mode="after")
    def _ordered_limits(self):
        if not self.lower_limit <= self.neutral <= self.upper_limit or self.lower_limit == self.upper_limit:
            raise ValueError(f"{self.joint}: expected lower limit <= neutral <= upper limit, with a non-empty range")
        return self

    def length_ratios(self, theta: float) -> Tuple[float, float]:
        """
        `(flexor, extensor)` length ratios; extending the joint shortens the extensor
        """
        stretch = self.length_coupling * (theta - self.neutral)
        return max(1.0 + stretch, MIN_LENGTH_RATIO), max(1.0 - stretch, MIN_LENGTH_RATIO)


class LegModel(pydantic.BaseModel):
    joints: Dict[JointName, JointModel]


@dataclass(frozen=True)
class SimState:
    t: float
    """
    Simulated time, in ms
    """
    theta: Mapping[JointName, float]
    omega: Mapping[JointName, float]
    """
    Angular velocity, in rad/s
    """

    @classmethod
    def at_rest(cls, model: LegModel) -> "SimState":
        return cls(
            t=0.0,
            theta={joint: joint_model.neutral for joint, joint_model in model.joints.items()},
            omega={joint: 0.0 for joint in model.joints},
        )


def build_leg_model(
    body: BodyParams, agents: Mapping[MuscleName, MuscleAgent], settings: SimulationSettings
) -> LegModel:
    joints: Dict[JointName, JointModel] = {}
    for joint in JOINT_NAMES:
        flexor, extensor = JOINT_MUSCLES[joint]
        inertia = body.joint_inertia(joint)
        if inertia <= 0:
            raise ValueError(f"The {joint} needs a positive moment of inertia to be simulated")
        joints[joint] = JointModel(
            joint=joint,
            flexor=agents[flexor],
            extensor=agents[extensor],
            flexor_lever=body.lever_arms[flexor],
            extensor_lever=body.lever_arms[extensor],
            inertia=inertia,
            lower_limit=-settings.joint_range,
            upper_limit=settings.joint_range,
            damping=settings.damping,
            length_coupling=settings.length_coupling,
        )
    return LegModel(joints=joints)


def _driven_agent(agent: MuscleAgent, plans: Mapping[str, StimulationPlan]) -> MuscleAgent:
    plan = plans.get(agent.name)
    if plan is None:
        return agent.model_copy(update={"units": []}, deep=True)
    return plan_to_agent(plan, agent)


def _muscle_force(agent: MuscleAgent, t: float, length_ratio: float, evaluator: Optional[PrunedEvaluation]) -> float:
    if evaluator is not None:
        return evaluator.advance(t, length_ratio) * agent.newton_scale
    return float(total_force(agent.model_copy(update={"length_ratio": length_ratio}), t)) * agent.newton_scale


def net_torques(
    model: LegModel,
    state: SimState,
    plans: Mapping[str, StimulationPlan],
    evaluators: Optional[Mapping[str, PrunedEvaluation]] = None,
    forces_out: Optional[Dict[str, float]] = None,
) -> Dict[JointName, float]:
    """
    (extensor force * lever - flexor force * lever) - damping * omega, per joint, in N*m
    """
    torques: Dict[JointName, float] = {}
    for joint, joint_model in model.joints.items():
        flexor_length, extensor_length = joint_model.length_ratios(state.theta[joint])
        side_forces = []
        for agent, length_ratio in ((joint_model.flexor, flexor_length), (joint_model.extensor, extensor_length)):
            evaluator = evaluators.get(agent.name) if evaluators is not None else None
            driven = agent if evaluator is not None else _driven_agent(agent, plans)
            force = _muscle_force(driven, state.t, length_ratio, evaluator)
            side_forces.append(force)
            if forces_out is not None:
                forces_out[agent.name] = force
        flexor_force, extensor_force = side_forces
        torques[joint] = (
            extensor_force * joint_model.extensor_lever
            - flexor_force * joint_model.flexor_lever
            - joint_model.damping * state.omega[joint]
        )
    return torques


def step(
    model: LegModel,
    state: SimState,
    plans: Mapping[str, StimulationPlan],
    dt: float,
    evaluators: Optional[Mapping[str, PrunedEvaluation]] = None,
    forces_out: Optional[Dict[str, float]] = None,
) -> SimState:
    """
    One semi-implicit Euler step of `dt` ms: velocity first, then angle from the new velocity.
    A joint that reaches a limit stops there with zero velocity.
    """
    if dt <= 0:
        raise ValueError("Time step must be positive")
    dt_s = dt / 1000.0
    torques = net_torques(model, state, plans, evaluators, forces_out)
    theta: Dict[JointName, float] = {}
    omega: Dict[JointName, float] = {}
    for joint, joint_model in model.joints.items():
        new_omega = state.omega[joint] + torques[joint] / joint_model.inertia * dt_s
        new_theta = state.theta[joint] + new_omega * dt_s
        if new_theta <= joint_model.lower_limit or new_theta >= joint_model.upper_limit:
            new_theta = min(max(new_theta, joint_model.lower_limit), joint_model.upper_limit)
            new_omega = 0.0
        theta[joint] = new_theta
        omega[joint] = new_omega
    return SimState(t=state.t + dt, theta=theta, omega=omega)


@dataclass(frozen=True)
class SimulationResult:
    angles: Dict[JointName, JointAngleTrace]
    """
    Joint angles resampled to the output grid, clinical convention (flexion and dorsiflexion positive)
    """
    forces: Dict[str, FloatArray]
    """
    Muscle forces (N) resampled to the output grid
    """
    final_state: SimState
    terms_evaluated: int
    """
    Twitch evaluations performed across all muscles, for cost accounting
    """
    steps: int


def simulate(
    model: LegModel,
    plans: Mapping[str, StimulationPlan],
    duration: float = DEFAULT_CYCLE_MS,
    dt: float = 1.0,
    grid: int = DEFAULT_GRID,
    epsilon: float = DEFAULT_PRUNE_EPSILON,
    initial: Optional[SimState] = None,
) -> SimulationResult:
    if dt <= 0 or duration <= 0:
        raise ValueError("Duration and time step must be positive")
    if grid < 3:
        raise ValueError("Output grid needs at least 3 samples")
    state = initial or SimState.at_rest(model)
    evaluators: Dict[str, PrunedEvaluation] = {}
    for joint_model in model.joints.values():
        for agent in (joint_model.flexor, joint_model.extensor):
            evaluators[agent.name] = PrunedEvaluation(_driven_agent(agent, plans), epsilon)

    step_count = int(math.ceil(duration / dt - 1e-9))
    times = np.empty(step_count + 1)
    thetas = {joint: np.empty(step_count + 1) for joint in model.joints}
    forces = {name: np.empty(step_count) for name in evaluators}
    times[0] = state.t
    for joint in model.joints:
        thetas[joint][0] = state.theta[joint]

    for index in range(step_count):
        step_forces: Dict[str, float] = {}
        state = step(model, state, plans, dt, evaluators, step_forces)
        times[index + 1] = state.t
        for joint in model.joints:
            thetas[joint][index + 1] = state.theta[joint]
        for name, force in step_forces.items():
            forces[name][index] = force

    start = times[0]
    sample_times = start + np.arange(grid) * duration / grid
    angles = {
        joint: JointAngleTrace(joint, -np.interp(sample_times, times, history), duration)
        for joint, history in thetas.items()
    }
    resampled_forces = {name: np.interp(sample_times, times[:-1], history) for name, history in forces.items()}
    terms = sum(evaluator.terms_evaluated for evaluator in evaluators.values())
    pkg_logger.info(f"Simulated {duration:.6g} ms in {step_count} steps ({terms} twitch evaluations)")
    return SimulationResult(
        angles=angles, forces=resampled_forces, final_state=state, terms_evaluated=terms, steps=step_count
    )
