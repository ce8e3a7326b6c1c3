"""Shared exception types."""


class InputFileError(ValueError):
    """Malformed input file or CLI input (exit code 2)."""


class GraphCycleError(InputFileError):
    """The task graph contains a dependency cycle."""

    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("dependency cycle: " + " -> ".join(self.cycle))


class InfeasibleModuleError(Exception):
    """A module's resource demand cannot be met by any on-chip rectangle."""
