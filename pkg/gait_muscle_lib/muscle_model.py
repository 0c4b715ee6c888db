"""
Hill-style muscle agents built from discrete motor units.

A motor unit's force is a sum of twitches, one per stimulus, capped at the tetanic ceiling of its
class. A muscle scales the summed motor unit force by its length-force factor and adds a passive
elastic term. All times are in milliseconds and all forces are in relative units unless a
`newton_scale` is applied.
"""

import math
from functools import lru_cache
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import numpy.typing as npt
import pydantic
from pydantic import ConfigDict
from scipy.optimize import brentq

from gait_muscle_lib.errors import IsiViolation, NonMonotonicTime

FloatArray = npt.NDArray[np.float64]

DEFAULT_TETANIC_MULTIPLE = 5.0
"""
Tetanic ceiling of a motor unit class, as a multiple of its single-twitch peak
"""
DEFAULT_MIN_ISI_MS = 5.0
DEFAULT_PRUNE_EPSILON = 1e-9


class TwitchParams(pydantic.BaseModel):
    model_config = ConfigDict(frozen=True)

    f0: float = pydantic.Field(gt=0)
    """
    Twitch gain (relative force units)
    """
    t_peak: float = pydantic.Field(gt=0)
    """
    Time-to-peak parameter T, in ms. Larger values give slower, longer twitches.
    """


def twitch_force(p: TwitchParams, t: npt.ArrayLike) -> Union[float, FloatArray]:
    """
    f(t) = F0 * (t/T) * exp(-(t/T) * ln t) for t > 0, and 0 otherwise.

    Accepts a scalar or an array of times (ms since the stimulus).
    """
    t_arr = np.asarray(t, dtype=np.float64)
    positive = t_arr > 0
    safe_t = np.where(positive, t_arr, 1.0)
    ratio = safe_t / p.t_peak
    values = np.where(positive, p.f0 * ratio * np.exp(-ratio * np.log(safe_t)), 0.0)
    return float(values) if values.ndim == 0 else values


def twitch_force_winter(p: TwitchParams, t: npt.ArrayLike) -> Union[float, FloatArray]:
    """
    Classic twitch f(t) = F0 * (t/T) * exp(-t/T), kept as a baseline for comparison.
    It peaks at t = T with value F0/e.
    """
    t_arr = np.asarray(t, dtype=np.float64)
    ratio = np.clip(t_arr, 0.0, None) / p.t_peak
    values = np.where(t_arr > 0, p.f0 * ratio * np.exp(-ratio), 0.0)
    return float(values) if values.ndim == 0 else values


@lru_cache(maxsize=256)
def _twitch_peak(f0: float, t_peak: float) -> Tuple[float, float]:
    # d/dt ln f = 1/t - (ln t + 1)/T vanishes where T/t - ln t - 1 = 0, which is strictly decreasing
    upper = max(t_peak, math.e)
    peak_time = brentq(lambda t: t_peak / t - math.log(t) - 1.0, 1e-12, upper, xtol=1e-12)
    ratio = peak_time / t_peak
    return peak_time, f0 * ratio * math.exp(-ratio * math.log(peak_time))


def twitch_peak(p: TwitchParams) -> Tuple[float, float]:
    """
    Returns `(time_of_peak_ms, peak_value)` of the single twitch
    """
    return _twitch_peak(p.f0, p.t_peak)


def twitch_decay_time(p: TwitchParams, level: float) -> float:
    """
    Time since the stimulus (ms), past the peak, at which the twitch falls to `level` (absolute
    force units). The twitch stays below `level` for every later time.
    """
    peak_time, peak_value = twitch_peak(p)
    if level >= peak_value:
        return peak_time
    log_level = math.log(level)

    def log_excess(t: float) -> float:
        return math.log(p.f0) + math.log(t) - math.log(p.t_peak) - (t / p.t_peak) * math.log(t) - log_level

    upper = 2.0 * peak_time
    while log_excess(upper) > 0:
        upper *= 2.0
    return brentq(log_excess, peak_time, upper, xtol=1e-9)


class MotorUnitClass(pydantic.BaseModel):
    model_config = ConfigDict(frozen=True)

    label: str = pydantic.Field(min_length=1)
    twitch: TwitchParams
    max_force: float = pydantic.Field(gt=0)
    """
    Tetanic ceiling of a single unit. Defaults to five times the single-twitch peak.
    """
    min_isi: float = pydantic.Field(default=DEFAULT_MIN_ISI_MS, gt=0)
    """
    Minimum interval between two stimuli of one unit, in ms
    """

    @pydantic.model_validator(mode="before")
    @classmethod
    def _default_max_force(cls, data):
        if isinstance(data, dict) and data.get("max_force") is None and "twitch" in data:
            twitch = data["twitch"]
            params = twitch if isinstance(twitch, TwitchParams) else TwitchParams.model_validate(twitch)
            data = {**data, "max_force": DEFAULT_TETANIC_MULTIPLE * twitch_peak(params)[1]}
        return data

    @property
    def peak_time(self) -> float:
        return twitch_peak(self.twitch)[0]

    @property
    def peak_force(self) -> float:
        return twitch_peak(self.twitch)[1]


def default_motor_unit_classes() -> Dict[str, MotorUnitClass]:
    """
    Classes A (fastest) through D (slowest), sharing one twitch gain
    """
    time_to_peak = {"A": 20.0, "B": 50.0, "C": 70.0, "D": 100.0}
    return {
        label: MotorUnitClass.model_validate({"label": label, "twitch": {"f0": 0.1, "t_peak": t_peak}})
        for label, t_peak in time_to_peak.items()
    }


class StimulusTrain(pydantic.BaseModel):
    model_config = ConfigDict(frozen=True)

    times: Tuple[float, ...] = ()
    """
    Stimulus times in ms, strictly increasing. Times before zero are allowed.
    """

    @pydantic.field_validator("times")
    @classmethod
    def _strictly_increasing(cls, times: Tuple[float, ...]) -> Tuple[float, ...]:
        if any(later <= earlier for earlier, later in zip(times, times[1:])):
            raise ValueError("Stimulus times must be strictly increasing")
        return times

    def __len__(self) -> int:
        return len(self.times)

    def as_array(self) -> FloatArray:
        return np.asarray(self.times, dtype=np.float64)

    def appended(self, t: float) -> "StimulusTrain":
        return StimulusTrain(times=(*self.times, t))

    def min_interval(self) -> Optional[float]:
        if len(self.times) < 2:
            return None
        return float(np.min(np.diff(self.as_array())))

    def check_isi(self, min_isi: float):
        interval = self.min_interval()
        # Small slack so grid-aligned trains at exactly min_isi pass
        if interval is not None and interval < min_isi - 1e-9:
            raise IsiViolation(interval, min_isi)


def mu_force_pre_cap(train: StimulusTrain, p: TwitchParams, t: npt.ArrayLike) -> Union[float, FloatArray]:
    """
    Sum of twitches of every stimulus at or before `t`. Later stimuli contribute zero.
    """
    times = train.as_array()
    t_arr = np.asarray(t, dtype=np.float64)
    if times.size == 0:
        return 0.0 if t_arr.ndim == 0 else np.zeros_like(t_arr)
    elapsed = t_arr[..., np.newaxis] - times
    total = np.sum(twitch_force(p, elapsed), axis=-1)
    return float(total) if t_arr.ndim == 0 else total


def mu_force(train: StimulusTrain, c: MotorUnitClass, t: npt.ArrayLike) -> Union[float, FloatArray]:
    """
    Capped motor unit force. Raises `IsiViolation` if the train is denser than the class allows.
    """
    train.check_isi(c.min_isi)
    pre_cap = mu_force_pre_cap(train, c.twitch, t)
    capped = np.minimum(pre_cap, c.max_force)
    return float(capped) if np.ndim(capped) == 0 else capped


class LengthForceCurve(pydantic.BaseModel):
    """
    Piecewise-linear length-force relation, normalized so that its maximum is 1
    """

    model_config = ConfigDict(frozen=True)

    knots: Tuple[Tuple[float, float], ...] = ((0.5, 0.0), (1.0, 1.0), (1.5, 0.0))
    """
    `(length_ratio, factor)` pairs, strictly increasing in length ratio
    """

    @pydantic.field_validator("knots")
    @classmethod
    def _valid_knots(cls, knots: Tuple[Tuple[float, float], ...]) -> Tuple[Tuple[float, float], ...]:
        if len(knots) < 2:
            raise ValueError("A length-force curve needs at least two knots")
        lengths = [length for length, _ in knots]
        factors = [factor for _, factor in knots]
        if any(later <= earlier for earlier, later in zip(lengths, lengths[1:])):
            raise ValueError("Length-force knots must be strictly increasing in length ratio")
        if any(factor < 0 or factor > 1 for factor in factors):
            raise ValueError("Length-force factors must lie in [0, 1]")
        if sum(1 for factor in factors if factor == 1.0) != 1:
            raise ValueError("Exactly one length-force knot must have factor 1")
        return knots


def length_force_factor(curve: LengthForceCurve, length_ratio: npt.ArrayLike) -> Union[float, FloatArray]:
    lengths = np.array([length for length, _ in curve.knots])
    factors = np.array([factor for _, factor in curve.knots])
    values = np.interp(np.asarray(length_ratio, dtype=np.float64), lengths, factors, left=0.0, right=0.0)
    return float(values) if np.ndim(values) == 0 else values


class MotorUnitGroup(pydantic.BaseModel):
    """
    `count` identical motor units of one class, all driven by the same stimulus train
    """

    unit_class: MotorUnitClass
    count: int = pydantic.Field(default=1, ge=0)
    train: StimulusTrain = StimulusTrain()


class MuscleAgent(pydantic.BaseModel):
    name: str
    f_p0: float = pydantic.Field(default=0.0, ge=0)
    """
    Passive force gain; passive force is `f_p0 * exp(l - 1)`
    """
    curve: LengthForceCurve = LengthForceCurve()
    units: List[MotorUnitGroup] = pydantic.Field(default_factory=list)
    length_ratio: float = pydantic.Field(default=1.0, gt=0)
    """
    Current length relative to rest length
    """
    newton_scale: float = pydantic.Field(default=1.0, gt=0)
    """
    Newtons per relative force unit
    """

    def set_length(self, length_ratio: float):
        if length_ratio <= 0:
            raise ValueError(f"Length ratio must be positive, got {length_ratio}")
        self.length_ratio = length_ratio

    def add_stimulus(self, group_index: int, t: float):
        group = self.units[group_index]
        updated = group.train.appended(t)
        updated.check_isi(group.unit_class.min_isi)
        self.units[group_index] = group.model_copy(update={"train": updated})

    @property
    def unit_count(self) -> int:
        return sum(group.count for group in self.units)


def active_force(m: MuscleAgent, t: npt.ArrayLike) -> Union[float, FloatArray]:
    summed: Union[float, FloatArray] = 0.0
    for group in m.units:
        if group.count == 0 or len(group.train) == 0:
            continue
        summed = summed + group.count * mu_force(group.train, group.unit_class, t)
    scaled = length_force_factor(m.curve, m.length_ratio) * np.asarray(summed, dtype=np.float64)
    if np.ndim(t) > 0:
        return np.broadcast_to(scaled, np.shape(t)).astype(np.float64)
    return float(scaled)


def passive_force(m: MuscleAgent) -> float:
    return max(m.f_p0 * math.exp(m.length_ratio - 1.0), 0.0)


def total_force(m: MuscleAgent, t: npt.ArrayLike) -> Union[float, FloatArray]:
    return active_force(m, t) + passive_force(m)


class PrunedEvaluation:
    """
    Incremental force evaluator for a muscle whose query times never decrease.

    Each stimulus becomes live once its time is reached and is dropped for good once it is past
    its twitch peak and contributes less than `epsilon`. The cost of one evaluation is bounded
    by the number of live stimuli, which `terms_evaluated` accumulates.
    """

    def __init__(self, m: MuscleAgent, epsilon: float = DEFAULT_PRUNE_EPSILON):
        if epsilon < 0:
            raise ValueError("Pruning epsilon must be non-negative")
        self.muscle = m
        self.epsilon = epsilon
        self.current_time = -math.inf
        self.terms_evaluated = 0
        self.force = 0.0
        self._pending = [group.train.as_array() for group in m.units]
        self._next_index = [0 for _ in m.units]
        self._live: List[FloatArray] = [np.empty(0) for _ in m.units]
        self._peak_times = [group.unit_class.peak_time for group in m.units]

    @property
    def live_stimuli(self) -> int:
        return sum(live.size for live in self._live)

    def advance(self, t: float, length_ratio: Optional[float] = None) -> float:
        if t < self.current_time:
            raise NonMonotonicTime(t, self.current_time)
        self.current_time = t
        if length_ratio is not None:
            self.muscle.set_length(length_ratio)

        summed = 0.0
        for index, group in enumerate(self.muscle.units):
            pending = self._pending[index]
            start = self._next_index[index]
            stop = int(np.searchsorted(pending, t, side="right"))
            if stop > start:
                self._live[index] = np.concatenate([self._live[index], pending[start:stop]])
                self._next_index[index] = stop
            live = self._live[index]
            if live.size == 0 or group.count == 0:
                continue
            elapsed = t - live
            contributions = twitch_force(group.unit_class.twitch, elapsed)
            self.terms_evaluated += live.size
            summed += group.count * min(float(np.sum(contributions)), group.unit_class.max_force)
            decayed = (elapsed > self._peak_times[index]) & (contributions < self.epsilon)
            if decayed.any():
                self._live[index] = live[~decayed]

        self.force = float(length_force_factor(self.muscle.curve, self.muscle.length_ratio)) * summed + passive_force(
            self.muscle
        )
        return self.force


def advance_and_prune(
    m: MuscleAgent, t: float, epsilon: float = DEFAULT_PRUNE_EPSILON, handle: Optional[PrunedEvaluation] = None
) -> PrunedEvaluation:
    """
    Advances (or creates) an incremental evaluation handle to time `t`; read the result from `handle.force`
    """
    handle = handle or PrunedEvaluation(m, epsilon)
    handle.advance(t)
    return handle


def train_response(
    c: MotorUnitClass, frequency_hz: float, duration_ms: float, resolution_ms: float = 0.1
) -> Tuple[FloatArray, FloatArray]:
    """
    Force of one motor unit driven at a constant rate, showing wave summation up to the tetanic ceiling.
    Returns `(times_ms, capped_force)`.
    """
    if frequency_hz <= 0:
        raise ValueError("Stimulation frequency must be positive")
    period_ms = 1000.0 / frequency_hz
    if period_ms < c.min_isi:
        raise IsiViolation(period_ms, c.min_isi)
    train = StimulusTrain(times=tuple(np.arange(0.0, duration_ms, period_ms).tolist()))
    times = np.arange(0.0, duration_ms + resolution_ms / 2, resolution_ms)
    return times, np.asarray(mu_force(train, c, times), dtype=np.float64)
