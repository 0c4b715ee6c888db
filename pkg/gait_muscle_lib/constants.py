from typing import Final, Literal, Tuple

PACKAGE_NAME = "gait-muscle-lib"
PACKAGE_NAME_SNAKE_CASE = PACKAGE_NAME.replace("-", "_")

GRAVITY: Final = 9.81
"""
Gravitational acceleration, in m/s^2
"""

MuscleName = Literal[
    "triceps_surae",
    "dorsiflexor",
    "quadriceps",
    "hamstring",
    "gluteus_maximus",
    "iliopsoas",
]
MUSCLE_NAMES: Final[Tuple[MuscleName, ...]] = (
    "triceps_surae",
    "dorsiflexor",
    "quadriceps",
    "hamstring",
    "gluteus_maximus",
    "iliopsoas",
)

JointName = Literal["hip", "knee", "ankle"]
JOINT_NAMES: Final[Tuple[JointName, ...]] = ("hip", "knee", "ankle")

DEFAULT_GRID: Final = 20
"""
Number of samples per gait cycle (every 5% of the cycle)
"""
DEFAULT_CYCLE_MS: Final = 1000.0

SIGNIFICANT_DIGITS: Final = 6
"""
Numeric precision used for every number written to disk
"""
