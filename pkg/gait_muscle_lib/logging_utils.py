import logging
import logging.config
import os
from pathlib import Path
from shutil import get_terminal_size
from typing import Any, Dict, List, Literal, Optional, TypedDict, Union

from gait_muscle_lib.constants import PACKAGE_NAME, PACKAGE_NAME_SNAKE_CASE

LOG_LEVEL_ENV_VAR = f"{PACKAGE_NAME_SNAKE_CASE.upper()}_LOG_LEVEL"
"""
Environment variable that overrides the package log level. It has no effect on numeric output.
"""

MAX_BANNER_WIDTH = 100


def build_banner(lines: Union[str, List[str]], width: Optional[int] = None) -> str:
    """
    Frame `lines` for the log, like:
    ```
    ==============================
    ==   AC-01: 2/2 passing     ==
    ==============================
    ```
    """
    width = width or min(get_terminal_size(fallback=(80, 24)).columns, MAX_BANNER_WIDTH)
    rule = "=" * width
    body = [f"== {line.center(width - 6)} ==" for line in (lines if isinstance(lines, list) else lines.splitlines())]
    return "\n".join([rule, *body, rule])


LoggingFormatterConfig = TypedDict(
    "LoggingFormatterConfig",
    {"class": str, "format": str, "datefmt": str, "style": Literal["%", "{", "$"]},
    total=False,
)

LoggingFormatterPreset = Literal["detailed", "compact"]
LoggingHandlerPreset = Literal["console", "console_detailed"]


class LoggingPresets:
    """
    Presets in the shape `logging.config.dictConfig` expects. The console handlers write to
    stderr, so result files and anything piped from stdout stay clean.

    See [Python Docs - logging.config](https://docs.python.org/3/library/logging.config.html)
    """

    formatters: Dict[LoggingFormatterPreset, LoggingFormatterConfig] = {
        "detailed": {
            "format": "[%(name)s] [%(asctime)s] %(levelname)s - [%(module)s:%(lineno)s] %(message)s",
            "datefmt": "%Y-%m-%dT%H:%M:%S",
        },
        "compact": {
            "format": "%(levelname)s %(message)s",
        },
    }
    handlers: Dict[LoggingHandlerPreset, Dict[str, Any]] = {
        "console": {"class": "logging.StreamHandler", "formatter": "compact"},
        "console_detailed": {"class": "logging.StreamHandler", "formatter": "detailed"},
    }

    @staticmethod
    def run_log_handler(path: Path) -> Dict[str, Any]:
        """
        File handler that keeps a detailed record of one CLI run next to its results
        """
        return {"class": "logging.FileHandler", "formatter": "detailed", "filename": str(path), "mode": "w"}


def resolve_log_level(default: str = "INFO") -> str:
    """
    Reads the log level from the environment, falling back to `default` for unset or unknown values
    """
    requested = os.getenv(LOG_LEVEL_ENV_VAR, "").strip().upper()
    if requested and isinstance(logging.getLevelName(requested), int):
        return requested
    return default


def configure_logging(
    level: Optional[str] = None,
    handler: LoggingHandlerPreset = "console",
    log_file: Optional[Path] = None,
):
    """
    Bind the package logger (and only it) to a console handler preset, plus a run log file if given
    """
    handlers: Dict[str, Dict[str, Any]] = {handler: LoggingPresets.handlers[handler]}
    if log_file is not None:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        handlers["run_log"] = LoggingPresets.run_log_handler(log_file)
    logging.config.dictConfig(
        {
            "version": 1,
            "disable_existing_loggers": False,
            "formatters": LoggingPresets.formatters,
            "handlers": handlers,
            "loggers": {
                PACKAGE_NAME: {
                    "handlers": list(handlers),
                    "level": level or resolve_log_level(),
                    "propagate": False,
                }
            },
        }
    )
