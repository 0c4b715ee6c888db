from pathlib import Path
from typing import List, Optional

import typer

from gait_muscle_lib import commands
from gait_muscle_lib.cli_utils import AlwaysEscapeMarkupConsole, ExpandedListOptionsArgv
from gait_muscle_lib.config import RunConfig, load_config, with_overrides
from gait_muscle_lib.errors import EXIT_OK
from gait_muscle_lib.logging_utils import LOG_LEVEL_ENV_VAR, configure_logging

app = typer.Typer(
    no_args_is_help=True,
    help=f"Muscle force estimation, motor unit recruitment and forward simulation for gait. "
    f"Set {LOG_LEVEL_ENV_VAR} to change the log level.",
)
console = AlwaysEscapeMarkupConsole(stderr=True)

LIST_OPTIONS = ["--order", "--frequency"]

ConfigOption = typer.Option(None, "--config", help="JSON run configuration; defaults apply to anything it omits")
OutOption = typer.Option(Path("out"), "--out", help="Output directory")
GridOption = typer.Option(None, "--grid", help="Samples per gait cycle")
CycleOption = typer.Option(None, "--cycle-ms", help="Gait cycle duration, in ms")
ProfileOption = typer.Option(None, "--profile", help="Ground reaction profile: static or double-hump")
OrderOption = typer.Option(None, "--order", help="Recruitment order of motor unit classes, e.g. D C B A")


def _run(action, out: Path):
    exit_code = commands.as_exit_code(action)
    if exit_code == EXIT_OK:
        console.print(f"Results written to {out}")
    raise typer.Exit(code=exit_code)


def _config(
    config_path: Optional[Path],
    grid: Optional[int] = None,
    cycle_ms: Optional[float] = None,
    profile: Optional[str] = None,
    order: Optional[List[str]] = None,
    dt_ms: Optional[float] = None,
) -> RunConfig:
    return with_overrides(load_config(config_path), grid, cycle_ms, profile, order, dt_ms)


@app.callback()
def main_callback(
    log_file: Optional[Path] = typer.Option(None, "--log-file", help="Also write a detailed log of this run here"),
):
    configure_logging(log_file=log_file)


@app.command()
def boots(
    angles: Path,
    config: Optional[Path] = ConfigOption,
    out: Path = OutOption,
    grid: Optional[int] = GridOption,
    cycle_ms: Optional[float] = CycleOption,
    profile: Optional[str] = ProfileOption,
):
    """
    Estimate six muscle force traces from a joint angle table
    """
    _run(lambda: commands.run_boots(angles, _config(config, grid, cycle_ms, profile), out), out)


@app.command()
def recruit(
    forces_dir: Path,
    config: Optional[Path] = ConfigOption,
    out: Path = OutOption,
    grid: Optional[int] = GridOption,
    cycle_ms: Optional[float] = CycleOption,
    order: Optional[List[str]] = OrderOption,
):
    """
    Find motor unit stimulation plans that reproduce each force_<muscle>.csv
    """
    _run(lambda: commands.run_recruit(forces_dir, _config(config, grid, cycle_ms, order=order), out), out)


@app.command()
def simulate(
    plans_dir: Path,
    config: Optional[Path] = ConfigOption,
    out: Path = OutOption,
    grid: Optional[int] = GridOption,
    cycle_ms: Optional[float] = CycleOption,
    dt_ms: Optional[float] = typer.Option(None, "--dt-ms", help="Integration time step, in ms"),
):
    """
    Drive the joint model with each plan_<muscle>.json and write the resulting joint angles
    """
    _run(lambda: commands.run_simulate(plans_dir, _config(config, grid, cycle_ms, dt_ms=dt_ms), out), out)


@app.command()
def analyze(
    angles: Path,
    config: Optional[Path] = ConfigOption,
    out: Path = OutOption,
    grid: Optional[int] = GridOption,
    cycle_ms: Optional[float] = CycleOption,
    profile: Optional[str] = ProfileOption,
    order: Optional[List[str]] = OrderOption,
):
    """
    Run force estimation, recruitment and forward simulation in one go
    """
    _run(lambda: commands.run_analyze(angles, _config(config, grid, cycle_ms, profile, order), out), out)


@app.command()
def compare(
    baseline_dir: Path,
    other_dir: Path,
    config: Optional[Path] = ConfigOption,
    out: Path = OutOption,
):
    """
    Compare the stimulation plans of two analyses across windows of the gait cycle
    """
    _run(lambda: commands.run_compare(baseline_dir, other_dir, out, _config(config)), out)


@app.command()
def twitch(
    config: Optional[Path] = ConfigOption,
    out: Path = OutOption,
    frequency: List[float] = typer.Option([10.0, 50.0, 100.0], "--frequency", help="Stimulation rates, in Hz"),
    duration_ms: float = typer.Option(300.0, "--duration-ms"),
):
    """
    Write twitch and stimulation train response curves for every motor unit class
    """
    _run(lambda: commands.run_twitch(_config(config), out, frequency, duration_ms), out)


@app.command()
def datasets(out: Path = OutOption):
    """
    Export the bundled gait cycles as CSV files
    """
    _run(lambda: commands.run_export_datasets(out), out)


def main():
    with ExpandedListOptionsArgv(LIST_OPTIONS):
        app()


if __name__ == "__main__":
    main()
