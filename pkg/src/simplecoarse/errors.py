"""Exception hierarchy shared by all modules."""


class CoarseError(Exception):
    """Base class for every error raised by simplecoarse."""


class InputError(CoarseError, ValueError):
    """An argument violates a documented precondition."""


class GraphStructureError(CoarseError):
    """A neighbor oracle produced an inconsistent graph (e.g. asymmetric adjacency)."""


class UndefinedProductError(CoarseError, ValueError):
    """A Gromov product needs a distance that is infinite."""


class ExtensionError(CoarseError):
    """A ray generator is undefined at a requested index."""


class NotASimpleEndError(CoarseError):
    """A ray prefix fails its escape certificate.

    ``radius`` is the closed ball the prefix is trapped in.
    """

    def __init__(self, message: str, radius: float):
        super().__init__(message)
        self.radius = radius


class FieldRangeError(InputError):
    """A scalar field produced a value outside [0, 1]."""


class ResolutionError(CoarseError):
    """No net is fine enough for the requested boundary distance."""

    def __init__(self, message: str, needed_m: int):
        super().__init__(message)
        self.needed_m = needed_m


class CoverageError(CoarseError):
    """An interior sampler failed to produce a point near the boundary."""


class DimensionWitnessError(CoarseError):
    """A cover has a point lying in too many elements."""

    def __init__(self, message: str, point, multiplicity: int):
        super().__init__(message)
        self.point = point
        self.multiplicity = multiplicity


class DepthError(CoarseError):
    """The collar discretization is too shallow for a construction step."""

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


class PreconditionError(CoarseError):
    """A structural precondition fails; ``witness`` shows where."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class SizingError(InputError):
    """A finite grid is too small to host every required combination."""
