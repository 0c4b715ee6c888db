"""
Bundled sagittal-plane gait cycles.

`healthy_gait` is a smoothed adult walking pattern at 5% resolution. `toe_slap_gait` is the same
cycle with the ankle plantarflexing rapidly right after heel strike, so that the forefoot slaps down
at 5% of the cycle instead of being lowered gradually. The CSV files under `data/` are generated
from the keyframes below; see docs/datasets.md.
"""

from importlib import resources
from pathlib import Path
from typing import Dict, Final, List, Literal, Tuple

from gait_muscle_lib.constants import DEFAULT_CYCLE_MS
from gait_muscle_lib.formats import ANGLES_HEADER, AngleTraces, atomic_write_text, format_number, parse_angles

DatasetName = Literal["healthy_gait", "toe_slap_gait"]
DATASET_NAMES: Final[Tuple[DatasetName, ...]] = ("healthy_gait", "toe_slap_gait")

_HEALTHY_HIP: Final = (22, 22, 21, 20, 18, 12, 8, 4, 0, -4, -8, -10, -7, 0, 9, 16, 21, 24, 24, 23)
_HEALTHY_KNEE: Final = (3, 8, 12, 14, 13, 11, 8, 5, 4, 5, 9, 20, 36, 52, 60, 58, 47, 30, 13, 4)
_HEALTHY_ANKLE: Final = (0, -4, -5, -1, 0, 1, 3, 4, 6, 9, 7, -4, -15, -12, -5, -1, 0, 1, 1, 0)
# Loading response replaced by an uncontrolled plantarflexion
_TOE_SLAP_ANKLE: Final = (0, -12, -8, -3) + _HEALTHY_ANKLE[4:]

KEYFRAMES_DEG: Final[Dict[DatasetName, Tuple[Tuple[int, ...], Tuple[int, ...], Tuple[int, ...]]]] = {
    "healthy_gait": (_HEALTHY_HIP, _HEALTHY_KNEE, _HEALTHY_ANKLE),
    "toe_slap_gait": (_HEALTHY_HIP, _HEALTHY_KNEE, _TOE_SLAP_ANKLE),
}


def dataset_path(name: DatasetName) -> Path:
    if name not in DATASET_NAMES:
        raise ValueError(f"Unknown dataset {name!r}; expected one of {list(DATASET_NAMES)}")
    return Path(str(resources.files("gait_muscle_lib") / "data" / f"{name}.csv"))


def load_dataset(name: DatasetName, cycle_ms: float = DEFAULT_CYCLE_MS) -> AngleTraces:
    return parse_angles(dataset_path(name), cycle_ms=cycle_ms)


def dataset_csv_text(name: DatasetName) -> str:
    hip, knee, ankle = KEYFRAMES_DEG[name]
    samples = len(hip)
    lines: List[str] = [",".join(ANGLES_HEADER)]
    for index in range(samples):
        cycle_pct = format_number(index * 100.0 / samples)
        lines.append(f"{cycle_pct},{hip[index]},{knee[index]},{ankle[index]}")
    return "\n".join(lines) + "\n"


def export_dataset(name: DatasetName, destination: Path) -> Path:
    """
    Writes the dataset's CSV to `destination` (a file path, or a directory to write `<name>.csv` into)
    """
    path = destination / f"{name}.csv" if destination.is_dir() else destination
    atomic_write_text(path, dataset_csv_text(name))
    return path
