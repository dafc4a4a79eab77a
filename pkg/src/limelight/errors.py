"""Exception hierarchy shared across the toolkit.

Each CLI-facing error class carries the process exit code the command
line maps it to (0 success, 1 usage, 2 data, 3 black-box protocol).
"""


class LimelightError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 2


class UsageError(LimelightError):
    """Bad invocation: unknown flag, missing argument, invalid value."""

    exit_code = 1


class DataError(LimelightError):
    """Problem with input data: missing file, malformed row, bad label."""

    exit_code = 2


class ProtocolError(LimelightError):
    """External black-box classifier violated the wire protocol."""

    exit_code = 3
