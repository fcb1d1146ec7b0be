"""Exception hierarchy shared by every module."""

from __future__ import annotations


class RVZError(Exception):
    """Base class for all library errors."""


class ReduciblePermutationError(RVZError, ValueError):
    def __init__(self, msg: str = "reducible permutation") -> None:
        super().__init__(msg)


class DimensionError(RVZError, ValueError):
    pass


class NotPrimitiveError(RVZError, ValueError):
    def __init__(self, msg: str = "matrix not primitive") -> None:
        super().__init__(msg)


class ConvergenceError(RVZError, RuntimeError):
    pass


class InvalidWordError(RVZError, ValueError):
    pass


class ActionUndefinedError(RVZError, ValueError):
    def __init__(self, msg: str = "action undefined") -> None:
        super().__init__(msg)


class IncompatibleError(RVZError, ValueError):
    pass


class DegenerateError(RVZError, ArithmeticError):
    def __init__(self, msg: str = "degenerate (measure-zero) input") -> None:
        super().__init__(msg)


class StallError(RVZError, RuntimeError):
    def __init__(self, msg: str = "non-generic stall") -> None:
        super().__init__(msg)


class ConstraintError(RVZError, ValueError):
    pass


class BoundTooLargeError(RVZError, RuntimeError):
    """Enumeration stopped at the node budget; ``partial`` holds what finished."""

    def __init__(self, msg: str = "bound too large", partial=None) -> None:
        super().__init__(msg)
        self.partial = partial
