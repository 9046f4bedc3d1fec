"""Exception types shared across the package."""


class LkError(Exception):
    """Base class for all errors raised by lkvol."""


class ParseError(LkError):
    """Malformed expression source; carries the byte offset of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class DomainError(LkError):
    """Evaluation left the domain of an elementary function (log, sqrt, ...)."""


class ChartError(LkError):
    """Inconsistent chart data (dimensions, domains, variable indices)."""


class SingularMatrixError(LkError):
    """Matrix inversion refused: singular or condition estimate above 1e12."""


class PositivityError(LkError):
    """Metric failed to be positive definite where it was required."""


class ConvergenceError(LkError):
    """Grid doubling hit the node cap before reaching the tolerance."""


class SubmersionInvalidError(LkError):
    """Projection is not a Riemannian submersion onto the declared base."""


class InputError(LkError):
    """Bad user input: unknown name, malformed file, out-of-range parameter."""
