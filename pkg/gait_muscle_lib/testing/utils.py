from __future__ import annotations

import re
from typing import Dict, List, Optional, Sequence, Tuple, TypedDict, Union, cast

import numpy as np
import numpy.typing as npt
import pytest
from scipy.signal import find_peaks
from xdist import is_xdist_worker

from gait_muscle_lib.constants import MuscleName

PytestNodeID = str
"""
`path/to/test_file.py::test_name`, plus `[param-id]` for parametrized tests
"""

ACCEPTANCE_PATTERN = re.compile(r"AC-\d{2}")
NOT_APPLICABLE = "NA"


def is_main_pytest_runner(pytest_obj: Union[pytest.Config, pytest.Session]) -> bool:
    """
    False only inside an xdist worker
    """
    if isinstance(pytest_obj, pytest.Session):
        return not is_xdist_worker(pytest_obj)
    # xdist hands every worker config a `workerinput` dict
    return not hasattr(pytest_obj, "workerinput")


class AcceptanceValidationResults(TypedDict):
    valid: bool
    errors: List[str]
    validated_criteria: List[str]


def validate_acceptance_tagging(item: pytest.Item) -> AcceptanceValidationResults:
    """
    Check the `acceptance` marker of a collected test: sorted `AC-##` ids, or `NA` for tests that
    back no criterion
    """
    marker = item.get_closest_marker("acceptance")
    criteria: Tuple[object, ...] = marker.args if marker else ()
    if not criteria:
        problems = [f"{item.nodeid} missing `acceptance` marker (or args)"]
        return {"valid": False, "errors": problems, "validated_criteria": []}
    if any(not isinstance(criterion, str) for criterion in criteria):
        problems = [f"{item.nodeid} acceptance criteria must all be strings"]
        return {"valid": False, "errors": problems, "validated_criteria": []}

    names = cast(Tuple[str, ...], criteria)
    problems = []
    if list(names) != sorted(names):
        problems.append(f"{item.nodeid} acceptance criteria are not sorted correctly")
    accepted = [name for name in names if name == NOT_APPLICABLE or ACCEPTANCE_PATTERN.fullmatch(name)]
    problems.extend(
        f"{item.nodeid} acceptance criterion {name} does not match pattern AC-##"
        for name in names
        if name not in accepted
    )
    if not accepted:
        problems.append(f"{item.nodeid} has no valid acceptance criteria")
    return {"valid": not problems, "errors": problems, "validated_criteria": accepted}


# == Gait activity windows ==

CyclicWindow = Tuple[float, float]
"""
(start_pct, end_pct) of the gait cycle, inclusive. A start past the end wraps through 100%.
"""

ACTIVE_FRACTION = 0.01
DOMINANT_PEAK_FRACTION = 0.5
DEFAULT_SHIFT_PCT = 10.0


def cycle_percentages(samples: int) -> npt.NDArray[np.float64]:
    return np.arange(samples) * 100.0 / samples


def in_cyclic_window(pct: npt.ArrayLike, window: CyclicWindow) -> npt.NDArray[np.bool_]:
    start, end = window
    pct = np.asarray(pct, dtype=float) % 100.0
    if start <= end:
        return (pct >= start) & (pct <= end)
    return (pct >= start) | (pct <= end)


def widen(window: CyclicWindow, shift_pct: float) -> CyclicWindow:
    """
    Widens a window on both sides, wrapping through the cycle boundary
    """
    start, end = window
    if (end - start) % 100.0 + 2 * shift_pct >= 100.0:
        return (0.0, 100.0)
    return ((start - shift_pct) % 100.0, (end + shift_pct) % 100.0)


def active_samples(values: npt.ArrayLike, fraction: float = ACTIVE_FRACTION) -> npt.NDArray[np.bool_]:
    values = np.asarray(values, dtype=float)
    peak = values.max(initial=0.0)
    return values > fraction * peak if peak > 0 else np.zeros(values.shape, dtype=bool)


def dominant_peaks(values: npt.ArrayLike, fraction: float = DOMINANT_PEAK_FRACTION) -> npt.NDArray[np.int64]:
    """
    Indices of cyclic local maxima at least `fraction` of the global maximum tall
    """
    values = np.asarray(values, dtype=float)
    n = values.size
    peak = values.max(initial=0.0)
    if peak <= 0:
        return np.array([], dtype=np.int64)
    # Three copies, so maxima at the cycle boundary are found in the middle one
    indices, _ = find_peaks(np.concatenate([values, values, values]), height=fraction * peak)
    middle = indices[(indices >= n) & (indices < 2 * n)] - n
    if middle.size == 0 and np.allclose(values, peak):
        return np.array([0], dtype=np.int64)
    return middle.astype(np.int64)


class WindowCheckResults(TypedDict):
    valid: bool
    errors: List[str]


class ActivityExpectation(TypedDict, total=False):
    active_within: CyclicWindow
    """
    Every active sample falls in this window
    """
    peak_within: CyclicWindow
    """
    The global maximum falls in this window
    """
    dominant_peaks_within: List[CyclicWindow]
    """
    One dominant peak per window, and no other dominant peaks
    """
    trough: Tuple[CyclicWindow, CyclicWindow]
    """
    (trough window, reference window): the minimum over the first is under half the maximum over the second
    """
    weak_sustained: CyclicWindow
    """
    At least two consecutive active samples in this window, all under half the global maximum
    """


GAIT_ACTIVITY_EXPECTATIONS: Dict[MuscleName, ActivityExpectation] = {
    "triceps_surae": {"active_within": (0.0, 55.0), "peak_within": (45.0, 45.0)},
    "dorsiflexor": {
        "active_within": (55.0, 25.0),
        "peak_within": (0.0, 20.0),
        "trough": ((60.0, 95.0), (55.0, 99.0)),
    },
    "quadriceps": {"dominant_peaks_within": [(90.0, 25.0), (40.0, 60.0)]},
    "hamstring": {"peak_within": (0.0, 0.0), "weak_sustained": (20.0, 60.0)},
    "gluteus_maximus": {"dominant_peaks_within": [(90.0, 20.0)]},
    "iliopsoas": {"dominant_peaks_within": [(50.0, 70.0)]},
}
"""
Where each muscle is expected to work over a healthy gait cycle. Window edges are widened by the
allowed cycle shift before checking; troughs and sustained-activity windows are used as given.
"""


def check_activity_windows(
    values: npt.ArrayLike,
    expectation: ActivityExpectation,
    shift_pct: float = DEFAULT_SHIFT_PCT,
    label: Optional[str] = None,
) -> WindowCheckResults:
    """
    Shape assertions on one cyclic force trace (window occupancy and peak location, never magnitudes)
    """
    values = np.asarray(values, dtype=float)
    pct = cycle_percentages(values.size)
    name = label or "trace"
    errors: List[str] = []

    if values.max(initial=0.0) <= 0:
        return {"valid": False, "errors": [f"{name} is never active"]}

    active = active_samples(values)
    if "active_within" in expectation:
        window = widen(expectation["active_within"], shift_pct)
        outside = pct[active & ~in_cyclic_window(pct, window)]
        if outside.size:
            errors.append(f"{name} active outside {window}: {outside.tolist()}")

    if "peak_within" in expectation:
        window = widen(expectation["peak_within"], shift_pct)
        peak_pct = pct[int(np.argmax(values))]
        if not in_cyclic_window(peak_pct, window):
            errors.append(f"{name} peaks at {peak_pct}%, outside {window}")

    if "dominant_peaks_within" in expectation:
        errors.extend(_check_dominant_peaks(name, values, pct, expectation["dominant_peaks_within"], shift_pct))

    if "trough" in expectation:
        trough_window, reference_window = expectation["trough"]
        trough = values[in_cyclic_window(pct, trough_window)].min(initial=np.inf)
        reference = values[in_cyclic_window(pct, reference_window)].max(initial=0.0)
        if not trough < 0.5 * reference:
            errors.append(f"{name} has no trough in {trough_window}")

    if "weak_sustained" in expectation:
        mask = in_cyclic_window(pct, expectation["weak_sustained"])
        run = _longest_run(active & mask)
        if run < 2 or values[mask].max(initial=0.0) >= 0.5 * values.max():
            errors.append(f"{name} lacks weak sustained activity in {expectation['weak_sustained']}")

    return {"valid": not errors, "errors": errors}


def _check_dominant_peaks(
    name: str,
    values: npt.NDArray[np.float64],
    pct: npt.NDArray[np.float64],
    windows: Sequence[CyclicWindow],
    shift_pct: float,
) -> List[str]:
    peaks_pct = pct[dominant_peaks(values)]
    errors: List[str] = []
    if peaks_pct.size != len(windows):
        errors.append(f"{name} has {peaks_pct.size} dominant peaks at {peaks_pct.tolist()}, expected {len(windows)}")
    for window in windows:
        widened = widen(window, shift_pct)
        if not np.any(in_cyclic_window(peaks_pct, widened)):
            errors.append(f"{name} has no dominant peak in {widened}")
    return errors


def _longest_run(mask: npt.NDArray[np.bool_]) -> int:
    longest = current = 0
    for flag in mask:
        current = current + 1 if flag else 0
        longest = max(longest, current)
    return longest
