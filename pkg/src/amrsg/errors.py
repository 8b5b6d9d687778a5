"""Exception hierarchy.

Input errors map to CLI exit code 1, invariant violations to exit code 2.
"""


class AmrSgError(Exception):
    pass


class InputError(AmrSgError, ValueError):
    pass


class InvariantViolation(AmrSgError, RuntimeError):
    pass


class MalformedPenman(InputError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None,
                 block: int | None = None):
        self.reason = message
        self.line = line
        self.column = column
        self.block = block
        where = []
        if block is not None:
            where.append(f"block {block}")
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class UnreachableVariable(InputError):
    pass


class DuplicateFactId(InputError):
    pass


class MissingIdLine(InputError):
    pass


class EmptyInput(InputError):
    pass


class EmptyText(InputError):
    pass


class EmptyHypothesis(InputError):
    pass


class AsymmetricInput(InputError):
    pass


class ShapeMismatch(InputError):
    pass


class MissingAmr(InputError):
    pass


class MissingLabel(InputError):
    pass


class EmptyDataset(InputError):
    pass


class UnknownQuestion(InputError):
    pass


class ChoiceOutOfRange(InputError):
    pass


class ZeroDegree(InvariantViolation):
    pass


class NonFiniteLoss(InvariantViolation):
    pass


class DivergedLoss(InvariantViolation):
    pass


class KinkTooClose(InvariantViolation):
    """A ReLU pre-activation sits too close to zero for a finite-difference check."""
