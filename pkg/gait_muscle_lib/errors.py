from typing import Final, Optional

EXIT_OK: Final = 0
EXIT_UNEXPECTED: Final = 1
EXIT_IO: Final = 2
EXIT_CONFIG: Final = 3
EXIT_INFEASIBLE: Final = 4


class GaitMuscleLibError(Exception):
    """
    Base class for every error raised on purpose by this package. `exit_code` is what the CLI returns.
    """

    exit_code: int = EXIT_UNEXPECTED


class InputFileError(GaitMuscleLibError):
    """
    An input file or directory is missing or unreadable
    """

    exit_code = EXIT_IO


class ParseError(InputFileError):
    """
    An input file exists but is malformed (bad header, non-numeric cell, duplicate row)
    """


class GridError(InputFileError):
    """
    An angle table has fewer than three samples
    """


class RangeError(InputFileError):
    """
    A cycle percentage falls outside [0, 100)
    """


class ConfigError(GaitMuscleLibError):
    exit_code = EXIT_CONFIG


class UnknownProfile(ConfigError):
    def __init__(self, profile: str, known: Optional[list] = None):
        self.profile = profile
        known_text = f" (expected one of {', '.join(known)})" if known else ""
        super().__init__(f"Unknown ground reaction profile {profile!r}{known_text}")


class Infeasible(GaitMuscleLibError):
    """
    Every motor unit that could cover a force deficit is saturated or ISI-limited
    """

    exit_code = EXIT_INFEASIBLE

    def __init__(self, muscle: str, time_ms: float, deficit: float):
        self.muscle = muscle
        self.time_ms = time_ms
        self.deficit = deficit
        super().__init__(
            f"Cannot reproduce target force for {muscle}: deficit of {deficit:.6g} N at t={time_ms:.6g} ms "
            "with every motor unit saturated or refractory"
        )


class IsiViolation(GaitMuscleLibError):
    def __init__(self, interval: float, min_isi: float):
        self.interval = interval
        self.min_isi = min_isi
        super().__init__(f"Inter-stimulus interval of {interval:.6g} ms is below the minimum of {min_isi:.6g} ms")


class NonMonotonicTime(GaitMuscleLibError):
    def __init__(self, requested: float, current: float):
        self.requested = requested
        self.current = current
        super().__init__(f"Cannot evaluate at t={requested:.6g} ms; evaluation already advanced to {current:.6g} ms")


class GridMismatch(GaitMuscleLibError):
    """
    Traces that must share a sampling grid do not
    """
