"""Exception types shared across the package.

Two families matter to callers: configuration problems (ParameterError and
subclasses) and numerical failures (NumericalError and subclasses).  The
command line maps the former to exit code 2 and the latter to exit code 3.
"""


class LtdError(Exception):
    """Base class for every error this package raises on purpose."""


class ParameterError(LtdError):
    """A caller-supplied value is outside the supported regime."""


class DimensionError(ParameterError):
    """Operands disagree about Hilbert-space dimensions."""


class SizeError(ParameterError):
    """A dense operator would exceed the entry cap."""


class ModelError(ParameterError):
    """A scenario was handed an inconsistent physical configuration."""


class DegenerateClockError(ParameterError):
    """The state populates a single level, so no internal time scale exists."""


class UndefinedClockError(ParameterError):
    """A clock readout requires a nonzero mean velocity."""


class NumericalError(LtdError):
    """A computation left its validated regime."""


class ShapeError(NumericalError):
    """An operator is not square, not finite, or not Hermitian enough."""


class NormalizationError(NumericalError):
    """A trace or norm is too far from one to repair."""


class PositivityError(NumericalError):
    """An eigenvalue is negative beyond the roundoff floor."""


class ResolutionError(NumericalError):
    """A grid or node budget cannot resolve the fastest phase present."""


class CutoffError(NumericalError):
    """A truncated expansion keeps too little of its weight."""
