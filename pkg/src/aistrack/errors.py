"""Exception types raised across the package.

``InputError`` subclasses map to CLI exit code 2, ``ConfigError`` subclasses
to exit code 3.
"""
from __future__ import annotations


class InputError(Exception):
    pass


class ConfigError(Exception):
    pass


class MalformedRow(InputError):
    def __init__(self, line_no: int, reason: str) -> None:
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class OutOfRange(MalformedRow):
    pass


class EmptyDataset(InputError):
    pass


class MissingAssignment(InputError):
    def __init__(self, index: int) -> None:
        super().__init__(f"node {index} has no track assignment")
        self.index = index


class PartitionMismatch(InputError):
    pass


class NoOpenTracks(RuntimeError):
    pass


class InvalidConfig(ConfigError):
    pass


class InvalidRegionConfig(ConfigError):
    pass


class GapSwallowsTrack(ConfigError):
    def __init__(self, vessel: str) -> None:
        super().__init__(f"gap window removes every report of vessel {vessel}")
        self.vessel = vessel
