"""
Greedy search for motor unit stimulus trains that reproduce a target muscle force trace.

The search walks a decision clock at `resolution_ms`. At each tick, motor units are visited in
recruitment order (slow classes first by default) and a unit is stimulated when the force it would
add at its twitch peak is needed there, it is past its minimum inter-stimulus interval, it is below
its tetanic ceiling, and the added twitch would not push the summed force more than a bounded
allowance above the target. Stimuli may fall before t=0; the search starts with a warm-up pre-roll
over the periodic target so the cycle begins in steady state.
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Literal, Optional, Tuple, TypedDict

import numpy as np
import numpy.typing as npt
import pydantic

from gait_muscle_lib.boots import MuscleForceTrace
from gait_muscle_lib.errors import ConfigError, Infeasible
from gait_muscle_lib.logger import pkg_logger
from gait_muscle_lib.muscle_model import (
    MotorUnitClass,
    MotorUnitGroup,
    MuscleAgent,
    StimulusTrain,
    length_force_factor,
    passive_force,
    total_force,
    twitch_decay_time,
    twitch_force,
)

FloatArray = npt.NDArray[np.float64]

KERNEL_FLOOR = 1e-9
"""
Twitch values below this (after the peak) are dropped from the search's force bookkeeping
"""


class RecruitConfig(pydantic.BaseModel):
    tolerance: float = pydantic.Field(default=0.02, gt=0, lt=1)
    """
    Acceptable force deficit, as a fraction of the target's peak
    """
    max_iterations: int = pydantic.Field(default=10_000, gt=0)
    """
    Most stimuli that may be placed on a single decision tick
    """
    order: List[str] = pydantic.Field(default_factory=lambda: ["D", "C", "B", "A"])
    """
    Recruitment order of motor unit class labels, first recruited first
    """
    overshoot_policy: Literal["bounded", "none"] = "bounded"
    """
    `bounded` lets the summed force exceed the target by up to `overshoot_allowance`; `none` forbids any overshoot
    """
    overshoot_allowance: float = pydantic.Field(default=0.5, ge=0, le=1)
    """
    Allowed overshoot, as a fraction of the largest single-twitch peak among the muscle's classes
    """
    settle_fraction: float = pydantic.Field(default=0.01, gt=0, lt=1)
    """
    Past its peak, a twitch below this fraction of its peak no longer counts toward the overshoot check
    """
    resolution_ms: float = pydantic.Field(default=1.0, gt=0)
    warmup_ms: float = pydantic.Field(default=100.0, ge=0)

    @pydantic.field_validator("order")
    @classmethod
    def _unique_labels(cls, order: List[str]) -> List[str]:
        if len(set(order)) != len(order):
            raise ValueError(f"Recruitment order has repeated labels: {order}")
        return order

    @property
    def allowance_fraction(self) -> float:
        return self.overshoot_allowance if self.overshoot_policy == "bounded" else 0.0


class UnitTrain(pydantic.BaseModel):
    unit_class: str
    index: int = pydantic.Field(ge=0)
    train: StimulusTrain = StimulusTrain()


DeferralReason = Literal["isi", "cap", "overshoot", "satisfied", "horizon"]
"""
Why a unit did not fire on a decision tick: inside its minimum inter-stimulus interval, at its
tetanic ceiling, its twitch would overshoot the allowance, no deficit at its own twitch peak, or its
peak falls outside the searched span
"""


class OrderDeferral(pydantic.BaseModel):
    """
    A unit that fired for the first time ahead of units earlier in recruitment order, with the
    reason each of those was passed over on that tick
    """

    unit: str
    time_ms: float
    deferred: Dict[str, DeferralReason]


class StimulationPlan(pydantic.BaseModel):
    """
    Stimulus train for every individual motor unit of one muscle
    """

    muscle: str
    cycle_duration: float = pydantic.Field(gt=0)
    grid_samples: int = pydantic.Field(ge=3)
    newton_scale: float = pydantic.Field(gt=0)
    units: List[UnitTrain] = pydantic.Field(default_factory=list)
    deferrals: List[OrderDeferral] = pydantic.Field(default_factory=list)

    @property
    def total_stimuli(self) -> int:
        return sum(len(unit.train) for unit in self.units)

    def stimuli_by_class(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for unit in self.units:
            counts[unit.unit_class] = counts.get(unit.unit_class, 0) + len(unit.train)
        return counts

    def stimulus_count(self, start_pct: float, end_pct: float, unit_class: Optional[str] = None) -> int:
        """
        Number of stimuli whose cycle position (time modulo cycle) falls in `[start_pct, end_pct)`
        """
        count = 0
        for unit in self.units:
            if unit_class is not None and unit.unit_class != unit_class:
                continue
            positions = np.mod(unit.train.as_array(), self.cycle_duration) * 100.0 / self.cycle_duration
            count += int(np.count_nonzero((positions >= start_pct) & (positions < end_pct)))
        return count

    def scaled_down(self, keep_every: int) -> "StimulationPlan":
        """
        Keeps every `keep_every`-th unit's train and silences the rest
        """
        return self.model_copy(
            update={
                "units": [
                    unit if position % keep_every == 0 else unit.model_copy(update={"train": StimulusTrain()})
                    for position, unit in enumerate(self.units)
                ]
            }
        )


def expand_units(muscle: MuscleAgent, order: List[str]) -> List[Tuple[MotorUnitClass, int]]:
    """
    One entry per individual motor unit, in recruitment order
    """
    counts: Dict[str, int] = {}
    classes: Dict[str, MotorUnitClass] = {}
    for group in muscle.units:
        label = group.unit_class.label
        counts[label] = counts.get(label, 0) + group.count
        classes[label] = group.unit_class
    if sorted(order) != sorted(classes):
        raise ConfigError(
            f"Recruitment order {order} must be a permutation of the classes of {muscle.name}: {sorted(classes)}"
        )
    return [(classes[label], index) for label in order for index in range(counts[label])]


def plan_to_agent(plan: StimulationPlan, muscle: MuscleAgent) -> MuscleAgent:
    """
    A copy of `muscle` whose motor units are the plan's individual units and trains
    """
    classes = {group.unit_class.label: group.unit_class for group in muscle.units}
    units = [MotorUnitGroup(unit_class=classes[unit.unit_class], count=1, train=unit.train) for unit in plan.units]
    return muscle.model_copy(update={"units": units}, deep=True)


def _periodic_resample(values: FloatArray, cycle_duration: float, times_ms: FloatArray) -> FloatArray:
    n = values.size
    sample_times = np.arange(n) * cycle_duration / n
    return np.interp(times_ms, sample_times, values, period=cycle_duration)


@dataclass
class _UnitSearchState:
    unit_class: MotorUnitClass
    index: int
    lead: int
    kernel: FloatArray
    checked: npt.NDArray[np.bool_]
    pre_cap: FloatArray
    times: List[float]

    @property
    def name(self) -> str:
        return f"{self.unit_class.label}{self.index}"

    def free_at(self, tau: float, tick: int) -> bool:
        if self.pre_cap[tick] >= self.unit_class.max_force:
            return False
        return all(abs(tau - existing) >= self.unit_class.min_isi for existing in self.times)


def _build_unit_state(unit_class: MotorUnitClass, index: int, resolution_ms: float, ticks: int, settle: float):
    peak_time, peak_force = unit_class.peak_time, unit_class.peak_force
    horizon = twitch_decay_time(unit_class.twitch, KERNEL_FLOOR)
    ages = np.arange(1, int(math.ceil(horizon / resolution_ms)) + 1) * resolution_ms
    kernel = np.asarray(twitch_force(unit_class.twitch, ages))
    checked = (ages <= peak_time) | (kernel >= settle * peak_force)
    return _UnitSearchState(
        unit_class=unit_class,
        index=index,
        lead=int(round(peak_time / resolution_ms)),
        kernel=kernel,
        checked=checked,
        pre_cap=np.zeros(ticks),
        times=[],
    )


def recruit(target: MuscleForceTrace, muscle: MuscleAgent, cfg: Optional[RecruitConfig] = None) -> StimulationPlan:
    cfg = cfg or RecruitConfig()
    units = expand_units(muscle, cfg.order)
    cycle = target.cycle_duration
    plan = StimulationPlan(
        muscle=muscle.name, cycle_duration=cycle, grid_samples=len(target), newton_scale=muscle.newton_scale
    )
    if target.peak == 0:
        plan.units = [UnitTrain(unit_class=c.label, index=index) for c, index in units]
        return plan
    if not units:
        raise Infeasible(muscle.name, 0.0, target.peak)

    res = cfg.resolution_ms
    warmup_ticks = int(round(cfg.warmup_ms / res))
    cycle_ticks = int(round(cycle / res))
    ticks = warmup_ticks + cycle_ticks
    tick_times = (np.arange(ticks) - warmup_ticks) * res

    # Convert the target into the summed capped motor unit force the search has to produce
    relative = _periodic_resample(target.values, cycle, tick_times) / muscle.newton_scale
    length_factor = float(length_force_factor(muscle.curve, muscle.length_ratio))
    active = np.clip(relative - passive_force(muscle), 0.0, None)
    if length_factor == 0:
        if np.any(active > 0):
            first = int(np.argmax(active > 0))
            raise Infeasible(muscle.name, float(tick_times[first]), float(active[first] * muscle.newton_scale))
        needed = np.zeros(ticks)
    else:
        needed = active / length_factor

    tolerance = cfg.tolerance * float(np.max(needed))
    allowance = cfg.allowance_fraction * max(c.peak_force for c, _ in units)
    ceiling = needed + allowance
    states = [_build_unit_state(c, index, res, ticks, cfg.settle_fraction) for c, index in units]
    summed = np.zeros(ticks)
    max_lead = max(state.lead for state in states)

    for decision in range(-max_lead, ticks):
        tau = (decision - warmup_ticks) * res
        placed = 0
        passed_over: Dict[int, DeferralReason] = {}
        for position, state in enumerate(states):
            evaluation = decision + state.lead
            if evaluation < 0 or evaluation >= ticks:
                passed_over[position] = "horizon"
                continue
            if needed[evaluation] - summed[evaluation] <= tolerance:
                passed_over[position] = "satisfied"
                continue
            if placed >= cfg.max_iterations:
                raise Infeasible(
                    muscle.name,
                    float(tick_times[evaluation]),
                    float((needed[evaluation] - summed[evaluation]) * length_factor * muscle.newton_scale),
                )
            if state.times and tau - state.times[-1] < state.unit_class.min_isi - 1e-9:
                passed_over[position] = "isi"
                continue
            cap = state.unit_class.max_force
            if state.pre_cap[evaluation] >= cap:
                passed_over[position] = "cap"
                continue
            start = max(decision + 1, 0)
            stop = min(decision + 1 + state.kernel.size, ticks)
            if stop <= start:
                passed_over[position] = "horizon"
                continue
            kernel = state.kernel[start - decision - 1 : stop - decision - 1]
            checked = state.checked[start - decision - 1 : stop - decision - 1]
            before = np.minimum(state.pre_cap[start:stop], cap)
            after = np.minimum(state.pre_cap[start:stop] + kernel, cap)
            if np.any(checked & (summed[start:stop] + after - before > ceiling[start:stop])):
                passed_over[position] = "overshoot"
                continue
            if not state.times:
                deferred = {
                    states[earlier].name: passed_over[earlier]
                    for earlier in range(position)
                    if not states[earlier].times and states[earlier].unit_class.label != state.unit_class.label
                }
                if deferred:
                    plan.deferrals.append(OrderDeferral(unit=state.name, time_ms=tau, deferred=deferred))
            state.pre_cap[start:stop] += kernel
            summed[start:stop] += after - before
            state.times.append(tau)
            placed += 1

    # A deficit left at a trace sample is only acceptable if some unit could still have covered it
    for k in range(len(target)):
        tick = warmup_ticks + int(round(k * cycle / len(target) / res))
        if tick >= ticks:
            continue
        deficit = needed[tick] - summed[tick]
        if deficit <= tolerance:
            continue
        evaluation_time = float(tick_times[tick])
        if not any(state.free_at(evaluation_time - state.lead * res, tick) for state in states):
            raise Infeasible(muscle.name, evaluation_time, float(deficit * length_factor * muscle.newton_scale))
        pkg_logger.warning(
            f"{muscle.name}: deficit of {deficit * length_factor * muscle.newton_scale:.6g} N left at "
            f"t={evaluation_time:.6g} ms"
        )

    plan.units = [
        UnitTrain(unit_class=state.unit_class.label, index=state.index, train=StimulusTrain(times=tuple(state.times)))
        for state in states
    ]
    pkg_logger.info(f"{muscle.name}: {plan.total_stimuli} stimuli across {len(states)} motor units")
    return plan


def forward_forces(plan: StimulationPlan, muscle: MuscleAgent, times_ms: npt.ArrayLike) -> FloatArray:
    """
    Muscle force in newtons produced by the plan at the given times
    """
    agent = plan_to_agent(plan, muscle)
    return np.asarray(total_force(agent, np.asarray(times_ms, dtype=np.float64)), dtype=np.float64) * agent.newton_scale


def reproduction_error(plan: StimulationPlan, target: MuscleForceTrace, muscle: MuscleAgent) -> float:
    """
    RMS difference between the plan's forward force and the target at the target's samples,
    normalized by the target's peak
    """
    sample_times = np.arange(len(target)) * target.cycle_duration / len(target)
    produced = forward_forces(plan, muscle, sample_times)
    rms = float(np.sqrt(np.mean((produced - target.values) ** 2)))
    if target.peak == 0:
        return 0.0 if rms == 0 else math.inf
    return rms / target.peak


def stimulation_histogram(plan: StimulationPlan, bins: int) -> Dict[str, npt.NDArray[np.int64]]:
    """
    Stimulus counts per motor unit class, binned by position within the cycle (time modulo cycle)
    """
    if bins <= 0:
        raise ValueError("Histogram needs at least one bin")
    histogram: Dict[str, npt.NDArray[np.int64]] = {}
    for unit in plan.units:
        counts = histogram.setdefault(unit.unit_class, np.zeros(bins, dtype=np.int64))
        fractions = np.mod(unit.train.as_array(), plan.cycle_duration) / plan.cycle_duration
        indices = np.minimum(np.floor(fractions * bins).astype(np.int64), bins - 1)
        np.add.at(counts, indices, 1)
    return histogram


class PlanCheckResults(TypedDict):
    valid: bool
    errors: List[str]


def check_plan(plan: StimulationPlan, muscle: MuscleAgent, cfg: Optional[RecruitConfig] = None) -> PlanCheckResults:
    """
    Verifies the structural guarantees of a plan: every train respects its class's minimum
    inter-stimulus interval, units of one class are first recruited in index order, and a unit that
    first fires ahead of a unit of another class earlier in recruitment order (the order of
    `plan.units`) has a recorded reason for passing that unit over
    """
    cfg = cfg or RecruitConfig()
    classes = {group.unit_class.label: group.unit_class for group in muscle.units}
    errors: List[str] = []
    first_times: Dict[str, List[Tuple[int, float]]] = {}

    for unit in plan.units:
        if unit.unit_class not in classes:
            errors.append(f"{plan.muscle} has no motor unit class {unit.unit_class}")
            continue
        interval = unit.train.min_interval()
        min_isi = classes[unit.unit_class].min_isi
        if interval is not None and interval < min_isi - 1e-9:
            errors.append(f"{unit.unit_class}{unit.index}: interval {interval:.6g} ms below {min_isi:.6g} ms")
        first = unit.train.times[0] if unit.train.times else math.inf
        first_times.setdefault(unit.unit_class, []).append((unit.index, first))

    for label, entries in first_times.items():
        ordered = [first for _, first in sorted(entries)]
        if any(later < earlier for earlier, later in zip(ordered, ordered[1:])):
            errors.append(f"Class {label} units were not first recruited in index order")

    errors.extend(_order_violations(plan))

    unknown_order = [label for label in cfg.order if label not in classes]
    if unknown_order:
        errors.append(f"Recruitment order names unknown classes {unknown_order}")

    return {"valid": not errors, "errors": errors}


def _order_violations(plan: StimulationPlan) -> List[str]:
    explained = {(deferral.unit, name) for deferral in plan.deferrals for name in deferral.deferred}
    firsts = [
        (f"{unit.unit_class}{unit.index}", unit.unit_class, unit.train.times[0] if unit.train.times else None)
        for unit in plan.units
    ]
    violations = []
    for position, (name, label, first) in enumerate(firsts):
        if first is None:
            continue
        for earlier_name, earlier_label, earlier_first in firsts[:position]:
            if earlier_label == label or (earlier_first is not None and earlier_first <= first):
                continue
            if (name, earlier_name) not in explained:
                violations.append(
                    f"{name} first fired at {first:.6g} ms ahead of earlier-order {earlier_name} for no recorded reason"
                )
    return violations


def compare_plans(baseline: StimulationPlan, other: StimulationPlan, windows: Dict[str, Tuple[float, float]]):
    """
    Per-window stimulus counts of two plans of the same muscle, e.g. a healthy and a pathological gait
    """
    comparison = {}
    for window_name, (start_pct, end_pct) in windows.items():
        before = baseline.stimulus_count(start_pct, end_pct)
        after = other.stimulus_count(start_pct, end_pct)
        comparison[window_name] = {
            "window_pct": [start_pct, end_pct],
            "baseline": before,
            "other": after,
            "change": after - before,
        }
    return comparison
