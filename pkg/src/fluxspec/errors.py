"""Exception types raised by fluxspec.

Invalid input is reported with ``ValueError`` throughout the package; the
classes here cover numerical failures so the CLI can map them to exit code 3.
"""

from __future__ import annotations


class NumericalError(RuntimeError):
    """Base class for failures of a numerical procedure on valid input."""


class BracketError(NumericalError):
    """No sign change was found while bracketing a root."""


class NearEigenvalueError(NumericalError):
    """The requested ``c`` lies inside the guard band around an eigenvalue."""

    def __init__(self, c: float, eigenvalue: float) -> None:
        super().__init__(
            f"c={c!r} is within the guard band of eigenvalue {eigenvalue!r}; "
            "extrapolate instead of solving"
        )
        self.c = c
        self.eigenvalue = eigenvalue


class SingularFactorizationError(NumericalError):
    """The shifted operator could not be factorized."""


class ConvergenceError(NumericalError):
    """An eigensolver returned pairs whose residuals exceed the tolerance."""

    def __init__(self, message: str, residuals: tuple[float, ...] = ()) -> None:
        super().__init__(message)
        self.residuals = residuals


class InconclusiveError(NumericalError):
    """Neither outcome of a numerical decision could be established."""


class DegenerateMeshError(ValueError):
    """A triangle with (near) zero area was found during assembly."""

    def __init__(self, index: int, area: float) -> None:
        super().__init__(f"Triangle {index} is degenerate (area={area:.3e})")
        self.index = index
        self.area = area
