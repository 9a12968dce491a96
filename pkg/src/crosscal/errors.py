"""Exception taxonomy shared across the package.

Input problems (malformed files, unknown names, bad shapes) raise plain
ValueError subclasses; statistical degeneracies (singular covariances,
constant regressors) raise :class:`DegeneracyError` so batch front ends can
distinguish "fix your file" from "this test cannot run on these numbers".
"""

from __future__ import annotations

__all__ = ["CrosscalError", "InputDataError", "DegeneracyError"]


class CrosscalError(ValueError):
    """Base class for errors raised by this package."""


class InputDataError(CrosscalError):
    """The supplied file or configuration is malformed."""


class DegeneracyError(CrosscalError):
    """The data is statistically degenerate for the requested procedure."""
