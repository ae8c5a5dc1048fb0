"""Error taxonomy, mapped to CLI exit codes in cli.py."""


class ConfigError(ValueError):
    """A configuration field is missing, malformed, or inconsistent."""


class TraceFormatError(ValueError):
    """A trace file or workload spec string could not be parsed."""


class SimulationIntegrityError(RuntimeError):
    """An internal invariant broke: time travel, unroutable path,
    unregistered event target.  Always a bug, never a workload property."""


class SimOutOfMemoryError(RuntimeError):
    """The simulated physical memory has no free frame left."""
