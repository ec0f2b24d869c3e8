"""Exception hierarchy.

Every error raised by the library derives from :class:`StrongAlgebraError`.
The CLI maps the three families onto exit codes: precondition failures (2),
numerical failures (3) and schema / I/O problems (4).
"""


class StrongAlgebraError(Exception):
    exit_code = 1


class PreconditionError(StrongAlgebraError, ValueError):
    """A sufficient condition required by an operation does not hold."""

    exit_code = 2


class GradeError(PreconditionError):
    """Grade not valid for the instance."""


class LadderError(PreconditionError):
    """The pair of grades is not admissible (beta < h(alpha))."""


class InstanceMismatchError(PreconditionError):
    """Operands belong to different algebra instances."""


class DivergenceError(PreconditionError):
    """A constant or series is infinite for the requested parameters."""


class ContractionError(PreconditionError):
    """A Neumann-type contraction condition fails.

    ``value`` carries the offending product (e.g. ``A * ||a||``).
    """

    def __init__(self, message, value):
        super().__init__(f"{message} (contraction value {value:.6g} >= 1)")
        self.value = float(value)


class NotInvertibleError(PreconditionError):
    """An element that should have a (left) inverse does not."""


class CoverError(PreconditionError):
    """Arcs do not cover the circle; ``gaps`` lists the uncovered arcs."""

    def __init__(self, gaps):
        gaps = [(float(a), float(b)) for a, b in gaps]
        super().__init__(f"uncovered arcs: {gaps}")
        self.gaps = gaps


class WindingError(PreconditionError):
    """Scalar symbol has nonzero winding number."""

    def __init__(self, winding):
        super().__init__(f"winding number {winding} != 0")
        self.winding = int(winding)


class NumericalFailure(StrongAlgebraError):
    """Budget exhausted or a residual check failed."""

    exit_code = 3


class NoCertificateError(NumericalFailure):
    """Search budget exhausted without a certificate.

    This says nothing about invertibility.
    """


class SchemaError(StrongAlgebraError):
    exit_code = 4
