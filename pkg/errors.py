"""
Exception hierarchy for the odd-waves toolkit.
The CLI maps these to process exit codes; library code only raises.
"""

from typing import Any, Optional


class OddWavesError(Exception):
    """Base class for every error raised by the toolkit"""

    exit_code = 1


class ConfigError(OddWavesError):
    """Invalid grid, parameters or run configuration"""

    exit_code = 2

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        self.field = field
        self.line = line
        where = []
        if field:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class DomainError(OddWavesError, ValueError):
    """A mathematical precondition does not hold"""


class UsageError(OddWavesError, ValueError):
    """An operation was called with incompatible arguments"""


class IntegrationFailure(OddWavesError):
    """Time integration stopped before reaching the final time"""

    exit_code = 3
    reason = "step-limit"

    def __init__(self, message: str, time: float, state: Any = None):
        self.time = time
        self.state = state
        super().__init__(f"{message} at t={time:.6g}")


class BlowUpError(IntegrationFailure):
    """The state became non-finite or exceeded the sup-norm ceiling"""

    reason = "blow-up"


class RunIOError(OddWavesError):
    """Missing or unreadable run artifacts"""

    exit_code = 4
