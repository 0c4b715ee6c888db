import platform
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Callable, Dict, Final, List, Optional, Tuple

import numpy as np
import scipy

from gait_muscle_lib.boots import BootsReport, MuscleForceTrace, boots_all
from gait_muscle_lib.config import RunConfig, build_muscle_agent, build_muscle_agents, config_hash
from gait_muscle_lib.constants import MUSCLE_NAMES, PACKAGE_NAME, MuscleName
from gait_muscle_lib.datasets import DATASET_NAMES, export_dataset
from gait_muscle_lib.errors import EXIT_OK, EXIT_UNEXPECTED, GaitMuscleLibError, InputFileError
from gait_muscle_lib.formats import (
    force_file_name,
    parse_angles,
    plan_file_name,
    read_force_dir,
    read_plan_dir,
    write_angles,
    write_columns,
    write_force_trace,
    write_histogram,
    write_json,
    write_plan,
    write_sim_force,
)
from gait_muscle_lib.forward_sim import SimulationResult, build_leg_model, simulate
from gait_muscle_lib.logger import pkg_logger
from gait_muscle_lib.muscle_model import train_response, twitch_force, twitch_force_winter
from gait_muscle_lib.recruitment import (
    StimulationPlan,
    compare_plans,
    recruit,
    reproduction_error,
    stimulation_histogram,
)

COMPARISON_WINDOWS_PCT: Final[Dict[str, Tuple[float, float]]] = {
    "early_stance": (0.0, 25.0),
    "loading_response": (15.0, 25.0),
    "late_stance": (25.0, 60.0),
    "swing": (60.0, 100.0),
}
"""
Windows of the gait cycle used when comparing two sets of stimulation plans
"""


def provenance(config: RunConfig) -> Dict:
    """
    Versions and config hash recorded with every report. `generated_at` is the only
    non-deterministic field.
    """
    try:
        package_version = metadata.version(PACKAGE_NAME)
    except metadata.PackageNotFoundError:
        package_version = "unknown"
    return {
        "config_hash": config_hash(config),
        "versions": {
            PACKAGE_NAME: package_version,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "generated_at": datetime.now(timezone.utc).isoformat(),
    }


def run_boots(angles_path: Path, config: RunConfig, out_dir: Path) -> BootsReport:
    """
    Estimate the six muscle forces from a joint angle table, writing `force_<muscle>.csv` and `report.json`
    """
    angles = parse_angles(angles_path, grid=config.grid, cycle_ms=config.cycle_ms)
    report = boots_all(angles.hip, angles.knee, angles.ankle, config.body, config.grf_profile, config.gait)
    for muscle in MUSCLE_NAMES:
        write_force_trace(out_dir / force_file_name(muscle), report[muscle])
    write_json(
        out_dir / "report.json",
        {"input": str(angles_path), "boots": report.summary(), "provenance": provenance(config)},
    )
    pkg_logger.info(f"Wrote muscle force estimates for {len(MUSCLE_NAMES)} muscles to {out_dir}")
    return report


def _recruit_one(config: RunConfig, muscle: MuscleName, target: MuscleForceTrace) -> Tuple[StimulationPlan, Dict]:
    agent = build_muscle_agent(config, muscle)
    plan = recruit(target, agent, config.recruitment)
    error = reproduction_error(plan, target, agent)
    summary = {
        "stimuli": plan.total_stimuli,
        "stimuli_by_class": plan.stimuli_by_class(),
        "reproduction_error": error,
        "stimuli_by_window": {
            name: plan.stimulus_count(start, end) for name, (start, end) in COMPARISON_WINDOWS_PCT.items()
        },
    }
    pkg_logger.info(f"{muscle}: normalized RMS reproduction error {error:.6g}")
    return plan, summary


def recruit_targets(
    targets: Dict[MuscleName, MuscleForceTrace], config: RunConfig, out_dir: Path
) -> Tuple[Dict[MuscleName, StimulationPlan], Dict]:
    muscles = [muscle for muscle in MUSCLE_NAMES if muscle in targets]
    with ThreadPoolExecutor(max_workers=config.workers) as executor:
        results = list(executor.map(lambda muscle: _recruit_one(config, muscle, targets[muscle]), muscles))

    plans: Dict[MuscleName, StimulationPlan] = {}
    summaries: Dict[str, Dict] = {}
    for muscle, (plan, summary) in zip(muscles, results):
        write_plan(out_dir / plan_file_name(muscle), plan)
        write_histogram(out_dir / f"stim_hist_{muscle}.csv", stimulation_histogram(plan, config.grid), config.grid)
        plans[muscle] = plan
        summaries[muscle] = summary
    return plans, summaries


def run_recruit(forces_dir: Path, config: RunConfig, out_dir: Path) -> Dict[MuscleName, StimulationPlan]:
    """
    Find stimulation plans for every `force_<muscle>.csv` in `forces_dir`
    """
    targets = read_force_dir(forces_dir, cycle_ms=config.cycle_ms)
    plans, summaries = recruit_targets(targets, config, out_dir)
    write_json(out_dir / "recruit_report.json", {"muscles": summaries, "provenance": provenance(config)})
    return plans


def _round_trip_errors(result: SimulationResult, targets: Dict[MuscleName, MuscleForceTrace]) -> Dict[str, float]:
    errors: Dict[str, float] = {}
    for muscle, target in targets.items():
        produced = result.forces.get(muscle)
        if produced is None or produced.shape != target.values.shape or target.peak == 0:
            continue
        errors[muscle] = float(np.sqrt(np.mean((produced - target.values) ** 2)) / target.peak)
    return errors


def simulate_plans(
    plans: Dict[MuscleName, StimulationPlan],
    config: RunConfig,
    out_dir: Path,
    targets: Optional[Dict[MuscleName, MuscleForceTrace]] = None,
) -> Tuple[SimulationResult, Dict[str, float]]:
    model = build_leg_model(config.body, build_muscle_agents(config), config.simulation)
    result = simulate(
        model,
        plans,
        duration=config.simulation_duration_ms,
        dt=config.simulation.dt_ms,
        grid=config.grid,
        epsilon=config.simulation.prune_epsilon,
    )
    write_angles(out_dir / "angles_sim.csv", result.angles["hip"], result.angles["knee"], result.angles["ankle"])
    cycle_pct = result.angles["hip"].cycle_pct
    for muscle, force in result.forces.items():
        write_sim_force(out_dir / f"sim_force_{muscle}.csv", cycle_pct, force)
    return result, _round_trip_errors(result, targets or {})


def run_simulate(plans_dir: Path, config: RunConfig, out_dir: Path) -> SimulationResult:
    """
    Drive the joint model with every `plan_<muscle>.json` in `plans_dir`. Force targets found
    alongside the plans are used to report round-trip errors.
    """
    plans = read_plan_dir(plans_dir)
    try:
        targets: Dict[MuscleName, MuscleForceTrace] = read_force_dir(plans_dir, cycle_ms=config.cycle_ms)
    except InputFileError:
        targets = {}
    result, errors = simulate_plans(plans, config, out_dir, targets)
    write_json(
        out_dir / "simulate_report.json",
        {
            "steps": result.steps,
            "terms_evaluated": result.terms_evaluated,
            "round_trip_error": errors,
            "provenance": provenance(config),
        },
    )
    return result


def run_analyze(angles_path: Path, config: RunConfig, out_dir: Path) -> Dict:
    """
    Full pipeline: force estimation, recruitment, then forward simulation of the plans
    """
    boots_report = run_boots(angles_path, config, out_dir)
    plans, recruit_summaries = recruit_targets(boots_report.forces, config, out_dir)
    result, round_trip = simulate_plans(plans, config, out_dir, boots_report.forces)
    analysis = {
        "input": str(angles_path),
        "peaks_n": {muscle: trace.peak for muscle, trace in boots_report.forces.items()},
        "recruitment": recruit_summaries,
        "simulation": {"steps": result.steps, "terms_evaluated": result.terms_evaluated},
        "round_trip_error": round_trip,
        "provenance": provenance(config),
    }
    write_json(out_dir / "analysis_report.json", analysis)
    return analysis


def run_compare(baseline_dir: Path, other_dir: Path, out_dir: Path, config: RunConfig) -> Dict:
    """
    Compare the stimulation plans of two analyses (e.g. healthy and pathological gait) window by window
    """
    baseline_plans = read_plan_dir(baseline_dir)
    other_plans = read_plan_dir(other_dir)
    comparison = {
        muscle: compare_plans(baseline_plans[muscle], other_plans[muscle], COMPARISON_WINDOWS_PCT)
        for muscle in MUSCLE_NAMES
        if muscle in baseline_plans and muscle in other_plans
    }
    if not comparison:
        raise InputFileError(f"No muscle has a plan in both {baseline_dir} and {other_dir}")
    write_json(
        out_dir / "comparison.json",
        {
            "baseline": str(baseline_dir),
            "other": str(other_dir),
            "muscles": comparison,
            "provenance": provenance(config),
        },
    )
    return comparison


def run_twitch(config: RunConfig, out_dir: Path, frequencies_hz: List[float], duration_ms: float = 300.0):
    """
    Write single-twitch curves (both twitch shapes) and constant-rate train responses for every motor unit class
    """
    labels = sorted(config.motor_unit_classes)
    times = np.arange(0.0, duration_ms + 0.05, 0.1)
    header = ["t_ms"] + [f"{label}_{shape}" for label in labels for shape in ("twitch", "classic")]
    columns = [times]
    for label in labels:
        twitch = config.motor_unit_classes[label].twitch
        columns.append(np.asarray(twitch_force(twitch, times)))
        columns.append(np.asarray(twitch_force_winter(twitch, times)))
    write_columns(out_dir / "twitch_curves.csv", header, columns)

    train_header = ["t_ms"] + [f"{label}_{frequency:g}hz" for label in labels for frequency in frequencies_hz]
    train_columns: List[np.ndarray] = []
    for label in labels:
        for frequency in frequencies_hz:
            train_times, force = train_response(config.motor_unit_classes[label], frequency, duration_ms)
            if not train_columns:
                train_columns.append(train_times)
            train_columns.append(force)
    write_columns(out_dir / "train_response.csv", train_header, train_columns)


def run_export_datasets(out_dir: Path) -> List[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    return [export_dataset(name, out_dir) for name in DATASET_NAMES]


def as_exit_code(action: Callable[[], object]) -> int:
    """
    Runs `action`, mapping package errors to their exit codes and logging them instead of raising
    """
    try:
        action()
    except GaitMuscleLibError as err:
        pkg_logger.error(str(err))
        return err.exit_code
    except Exception:
        pkg_logger.exception("Unexpected error")
        return EXIT_UNEXPECTED
    return EXIT_OK
