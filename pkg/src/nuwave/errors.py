"""Shared exception types."""

from __future__ import annotations


class ConfigurationError(ValueError):
    """A parameter or config file is invalid.

    Carries the full list of violations so callers can report every
    problem at once instead of failing on the first one.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class GridMismatchError(ValueError):
    """Two objects were combined that live on different grids or bases."""


class BlowUpError(RuntimeError):
    """A trajectory left the trusted numerical range.

    Raised when any modal coefficient exceeds 1e8 in magnitude or stops
    being finite. Attributes identify the offending run.
    """

    def __init__(self, message, *, step=None, time=None, nu=None, seed=None):
        super().__init__(message)
        self.step = step
        self.time = time
        self.nu = nu
        self.seed = seed
