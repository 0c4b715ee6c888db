"""
Readers and writers for the CSV and JSON files exchanged by the command-line tools.

All numbers are written with six significant digits, and every file is written atomically
(to a temporary file in the destination directory, then moved into place).
"""

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Final, List, NamedTuple, Optional, Sequence

import numpy as np
import numpy.typing as npt

from gait_muscle_lib.boots import MuscleForceTrace
from gait_muscle_lib.constants import DEFAULT_CYCLE_MS, MUSCLE_NAMES, SIGNIFICANT_DIGITS, MuscleName
from gait_muscle_lib.errors import GridError, GridMismatch, InputFileError, ParseError, RangeError
from gait_muscle_lib.kinematics import JointAngleTrace
from gait_muscle_lib.recruitment import StimulationPlan

ANGLES_HEADER: Final = ("cycle_pct", "hip_deg", "knee_deg", "ankle_deg")
FORCE_HEADER: Final = ("cycle_pct", "force_n", "residual_n")
SIM_FORCE_HEADER: Final = ("cycle_pct", "force_n")


def format_number(value: float) -> str:
    text = f"{value:.{SIGNIFICANT_DIGITS}g}"
    # Avoid writing negative zero
    return "0" if text in ("-0", "0") else text


def atomic_write_text(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with tempfile.NamedTemporaryFile("w", dir=path.parent, prefix=f".{path.name}.", delete=False) as temp_file:
        temp_file.write(text)
        temp_path = temp_file.name
    try:
        os.replace(temp_path, path)
    except OSError:
        os.unlink(temp_path)
        raise


def _csv_text(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_number(cell) if isinstance(cell, (float, np.floating)) else cell for cell in row])
    return buffer.getvalue()


def write_json(path: Path, payload: Any):
    """
    Deterministic JSON: sorted keys, two-space indent, floats at six significant digits
    """
    atomic_write_text(path, json.dumps(_round_floats(payload), indent=2, sort_keys=True) + "\n")


def _round_floats(payload: Any) -> Any:
    if isinstance(payload, (float, np.floating)):
        return float(format_number(float(payload)))
    if isinstance(payload, dict):
        return {key: _round_floats(value) for key, value in payload.items()}
    if isinstance(payload, (list, tuple)):
        return [_round_floats(value) for value in payload]
    if isinstance(payload, np.ndarray):
        return _round_floats(payload.tolist())
    if isinstance(payload, np.integer):
        return int(payload)
    if isinstance(payload, np.bool_):
        return bool(payload)
    return payload


def _read_rows(path: Path) -> List[List[str]]:
    if not path.is_file():
        raise InputFileError(f"File not found: {path}")
    try:
        with open(path, "r", newline="") as file:
            return [row for row in csv.reader(file) if row and any(cell.strip() for cell in row)]
    except (OSError, UnicodeDecodeError) as err:
        raise InputFileError(f"Could not read {path}: {err}") from err
    except csv.Error as err:
        raise ParseError(f"{path} is not a valid CSV file: {err}") from err


def _numeric_table(path: Path, rows: List[List[str]], header: Sequence[str]) -> npt.NDArray[np.float64]:
    if not rows or tuple(cell.strip() for cell in rows[0]) != tuple(header):
        raise ParseError(f"{path}: expected header {','.join(header)}")
    body = rows[1:]
    values = np.empty((len(body), len(header)))
    for line_number, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise ParseError(f"{path}:{line_number}: expected {len(header)} columns, got {len(row)}")
        try:
            values[line_number - 2] = [float(cell) for cell in row]
        except ValueError as err:
            raise ParseError(f"{path}:{line_number}: non-numeric value ({err})") from err
    if not np.all(np.isfinite(values)):
        raise ParseError(f"{path}: values must be finite")
    return values


class AngleTraces(NamedTuple):
    hip: JointAngleTrace
    knee: JointAngleTrace
    ankle: JointAngleTrace


def _resample_periodic(cycle_pct: npt.NDArray[np.float64], values: npt.NDArray[np.float64], grid: int):
    targets = np.arange(grid) * 100.0 / grid
    return np.interp(targets, cycle_pct, values, period=100.0)


def parse_angles(path: Path, grid: Optional[int] = None, cycle_ms: float = DEFAULT_CYCLE_MS) -> AngleTraces:
    """
    Reads a `cycle_pct,hip_deg,knee_deg,ankle_deg` table. Rows may come in any order. The table is
    resampled (periodic linear interpolation) when a `grid` different from its own is requested, or
    when its rows are not already uniformly spaced from 0%.
    """
    table = _numeric_table(path, _read_rows(path), ANGLES_HEADER)
    if table.shape[0] < 3:
        raise GridError(f"{path}: at least 3 samples are required, got {table.shape[0]}")
    cycle_pct = table[:, 0]
    if np.any(cycle_pct < 0) or np.any(cycle_pct >= 100):
        raise RangeError(f"{path}: cycle_pct values must lie in [0, 100)")
    if np.unique(cycle_pct).size != cycle_pct.size:
        raise ParseError(f"{path}: duplicate cycle_pct rows")
    table = table[np.argsort(cycle_pct)]
    cycle_pct = table[:, 0]

    rows = table.shape[0]
    uniform = np.allclose(cycle_pct, np.arange(rows) * 100.0 / rows, rtol=0, atol=1e-6)
    target_grid = grid or rows
    degrees = table[:, 1:]
    if not uniform or target_grid != rows:
        degrees = np.column_stack(
            [_resample_periodic(cycle_pct, degrees[:, column], target_grid) for column in range(3)]
        )
    return AngleTraces(
        hip=JointAngleTrace.from_degrees("hip", degrees[:, 0], cycle_ms),
        knee=JointAngleTrace.from_degrees("knee", degrees[:, 1], cycle_ms),
        ankle=JointAngleTrace.from_degrees("ankle", degrees[:, 2], cycle_ms),
    )


def write_angles(path: Path, hip: JointAngleTrace, knee: JointAngleTrace, ankle: JointAngleTrace):
    if not len(hip) == len(knee) == len(ankle):
        raise GridMismatch("Joint angle traces must share one grid to be written together")
    rows = zip(hip.cycle_pct.tolist(), hip.degrees().tolist(), knee.degrees().tolist(), ankle.degrees().tolist())
    atomic_write_text(path, _csv_text(ANGLES_HEADER, list(rows)))


def force_file_name(muscle: str) -> str:
    return f"force_{muscle}.csv"


def write_force_trace(path: Path, trace: MuscleForceTrace):
    rows = zip(trace.cycle_pct.tolist(), trace.values.tolist(), trace.residual.tolist())
    atomic_write_text(path, _csv_text(FORCE_HEADER, list(rows)))


def read_force_trace(path: Path, muscle: MuscleName, cycle_ms: float = DEFAULT_CYCLE_MS) -> MuscleForceTrace:
    table = _numeric_table(path, _read_rows(path), FORCE_HEADER)
    if table.shape[0] < 3:
        raise GridError(f"{path}: at least 3 samples are required, got {table.shape[0]}")
    table = table[np.argsort(table[:, 0])]
    if np.any(table[:, 1:] < 0):
        raise ParseError(f"{path}: forces must be non-negative")
    return MuscleForceTrace(muscle, table[:, 1], table[:, 2], cycle_ms)


def read_force_dir(directory: Path, cycle_ms: float = DEFAULT_CYCLE_MS) -> Dict[MuscleName, MuscleForceTrace]:
    """
    Reads every `force_<muscle>.csv` present in `directory`
    """
    if not directory.is_dir():
        raise InputFileError(f"Directory not found: {directory}")
    traces = {
        muscle: read_force_trace(directory / force_file_name(muscle), muscle, cycle_ms)
        for muscle in MUSCLE_NAMES
        if (directory / force_file_name(muscle)).is_file()
    }
    if not traces:
        raise InputFileError(f"No force_<muscle>.csv files found in {directory}")
    return traces


def write_sim_force(path: Path, cycle_pct: npt.NDArray[np.float64], force: npt.NDArray[np.float64]):
    atomic_write_text(path, _csv_text(SIM_FORCE_HEADER, list(zip(cycle_pct.tolist(), force.tolist()))))


def plan_file_name(muscle: str) -> str:
    return f"plan_{muscle}.json"


def write_plan(path: Path, plan: StimulationPlan):
    write_json(path, plan.model_dump(mode="json"))


def read_plan(path: Path) -> StimulationPlan:
    if not path.is_file():
        raise InputFileError(f"File not found: {path}")
    try:
        return StimulationPlan.model_validate_json(path.read_text())
    except ValueError as err:
        raise ParseError(f"{path} is not a valid stimulation plan: {err}") from err


def read_plan_dir(directory: Path) -> Dict[MuscleName, StimulationPlan]:
    if not directory.is_dir():
        raise InputFileError(f"Directory not found: {directory}")
    plans = {
        muscle: read_plan(directory / plan_file_name(muscle))
        for muscle in MUSCLE_NAMES
        if (directory / plan_file_name(muscle)).is_file()
    }
    if not plans:
        raise InputFileError(f"No plan_<muscle>.json files found in {directory}")
    return plans


def write_histogram(path: Path, histogram: Dict[str, npt.NDArray[np.int64]], bins: int):
    labels = sorted(histogram)
    rows = [
        [format_number(index * 100.0 / bins), format_number((index + 1) * 100.0 / bins)]
        + [int(histogram[label][index]) for label in labels]
        for index in range(bins)
    ]
    atomic_write_text(path, _csv_text(["bin_start_pct", "bin_end_pct", *labels], rows))


def write_columns(path: Path, header: Sequence[str], columns: Sequence[npt.NDArray[np.float64]]):
    """
    Writes equally long numeric columns side by side
    """
    atomic_write_text(path, _csv_text(header, np.column_stack(columns).tolist()))
