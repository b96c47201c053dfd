"""Exception hierarchy shared across the package."""
from __future__ import annotations


class DmiError(Exception):
    """Base class for all library errors."""


# --- linear algebra ---------------------------------------------------------

class NonSquareError(DmiError):
    """A square matrix was required."""


class SingularMatrixError(DmiError):
    """Matrix is singular (or numerically indistinguishable from singular)."""


class RankMismatchError(DmiError):
    """The requested number of independent columns does not exist."""


class ShapeMismatchError(DmiError):
    """Operand shapes are incompatible."""


# --- clustering solvers -----------------------------------------------------

class DegenerateInputError(DmiError):
    """Input matrix carries no usable structure (rank 0)."""


class AllEqualError(DmiError):
    """All values are identical; no two-cluster split exists."""


class DegenerateRankError(DmiError):
    """Points are collinear after centering and fallback was forbidden."""


class SingularIterationError(DmiError):
    """An update step hit a singular cluster-aggregate matrix.

    Callers may restart from a perturbed or fresh initialization.
    """


class TooLargeError(DmiError):
    """Exhaustive enumeration would exceed the configured budget."""


# --- multi-task mechanisms --------------------------------------------------

class UnansweredTaskError(DmiError):
    """Some task received no answers at all."""

    def __init__(self, task: int):
        self.task = task
        super().__init__(f"task {task} has no answers")


class InsufficientTasksError(DmiError):
    """An agent performed fewer tasks than the payment floor requires."""

    def __init__(self, agent: int, performed: int, required: int):
        self.agent = agent
        super().__init__(
            f"agent {agent} performed {performed} tasks, needs >= {required}"
        )


class LeaveOneOutUnansweredError(DmiError):
    """A task an agent performed has no remaining answers once she is removed."""

    def __init__(self, task: int, agent: int):
        self.task = task
        self.agent = agent
        super().__init__(
            f"task {task} has no answers besides agent {agent}'s"
        )


class DeadOptionError(DmiError):
    """An option was never chosen, so its prior share is zero."""

    def __init__(self, option: int):
        self.option = option
        super().__init__(f"option {option} has zero aggregate share")


class RankDeficientError(DmiError):
    """The column-normalized answer matrix does not have full column rank."""


class EmptyGoldError(DmiError):
    """Label alignment needs at least one gold-labeled task."""


# --- single-task aggregation ------------------------------------------------

class MissingOptionError(DmiError):
    """No respondent reported this signal; moments cannot be estimated."""

    def __init__(self, option: int):
        self.option = option
        super().__init__(f"no respondent reported signal {option}")


class ZeroConditionalError(DmiError):
    """Prior reconstruction divides by a zero conditional probability."""

    def __init__(self, given: int, other: int):
        self.given = given
        self.other = other
        super().__init__(
            f"Pr[{given}|{other}] is zero; prior reconstruction undefined "
            "(consider additive smoothing)"
        )


class DegenerateSpectrumError(DmiError):
    """Covariance has no dominant direction; a spectral label would be noise."""


class NonConvergenceError(DmiError):
    """Power iteration failed to reach the residual tolerance within the cap."""


# --- simulation -------------------------------------------------------------

class InfeasibleAssignmentError(DmiError):
    """The task-assignment model cannot satisfy its constraints."""


# --- CLI --------------------------------------------------------------------

class UnknownFixtureError(DmiError):
    """Requested fixture name is not registered."""


class CsvParseError(DmiError):
    """CSV input failed to parse; carries 1-based row/column position."""

    def __init__(self, row: int, col: int, message: str):
        self.row = row
        self.col = col
        super().__init__(f"row {row}, column {col}: {message}")


class SchemaError(DmiError):
    """Structured input violates its schema; carries a JSON-pointer path."""

    def __init__(self, pointer: str, message: str):
        self.pointer = pointer
        super().__init__(f"{pointer}: {message}")
