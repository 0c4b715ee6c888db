from typing import Dict

import pytest

from gait_muscle_lib.boots import BootsReport, boots_all
from gait_muscle_lib.config import RunConfig, build_muscle_agent
from gait_muscle_lib.constants import MUSCLE_NAMES, MuscleName
from gait_muscle_lib.datasets import load_dataset
from gait_muscle_lib.formats import AngleTraces
from gait_muscle_lib.recruitment import StimulationPlan, recruit

pytest_plugins = ["pytester", "gait_muscle_lib.testing.pytest_plugin"]


@pytest.fixture(scope="session")
def default_config() -> RunConfig:
    return RunConfig()


@pytest.fixture(scope="session")
def healthy_angles() -> AngleTraces:
    return load_dataset("healthy_gait")


@pytest.fixture(scope="session")
def toe_slap_angles() -> AngleTraces:
    return load_dataset("toe_slap_gait")


def _boots(angles: AngleTraces, config: RunConfig) -> BootsReport:
    return boots_all(angles.hip, angles.knee, angles.ankle, config.body, config.grf_profile, config.gait)


@pytest.fixture(scope="session")
def healthy_boots(healthy_angles: AngleTraces, default_config: RunConfig) -> BootsReport:
    return _boots(healthy_angles, default_config)


@pytest.fixture(scope="session")
def toe_slap_boots(toe_slap_angles: AngleTraces, default_config: RunConfig) -> BootsReport:
    return _boots(toe_slap_angles, default_config)


def _plans(report: BootsReport, config: RunConfig) -> Dict[MuscleName, StimulationPlan]:
    return {
        muscle: recruit(report[muscle], build_muscle_agent(config, muscle), config.recruitment)
        for muscle in MUSCLE_NAMES
    }


@pytest.fixture(scope="session")
def healthy_plans(healthy_boots: BootsReport, default_config: RunConfig) -> Dict[MuscleName, StimulationPlan]:
    """
    Recruitment results on the healthy cycle; slow to build, so shared by the whole session
    """
    return _plans(healthy_boots, default_config)


@pytest.fixture(scope="session")
def toe_slap_plans(toe_slap_boots: BootsReport, default_config: RunConfig) -> Dict[MuscleName, StimulationPlan]:
    return _plans(toe_slap_boots, default_config)
