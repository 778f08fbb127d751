"""
Exception hierarchy shared by the models, simulations and the CLI
"""

from typing import Optional


class ErgoLabError(Exception):
    """Base class for every error raised by ErgoLab"""


class PreconditionError(ErgoLabError, ValueError):
    """An operation was called outside its documented domain"""


class WideIntOverflowError(ErgoLabError, ArithmeticError):
    """A value left the signed 128-bit range"""

    def __init__(self, value: int, context: str = ""):
        self.value = value
        self.context = context
        where = f" in {context}" if context else ""
        super().__init__(f"value {value} exceeds signed 128-bit range{where}")


class NonPositiveGapError(ErgoLabError):
    """h(n+k) - h(n) <= 0 where a positive gap was required"""

    def __init__(self, n: int, k: int, value: int):
        self.n = n
        self.k = k
        self.value = value
        super().__init__(f"non-positive gap h({n}+{k}) - h({n}) = {value}")


class PolynomialParseError(ErgoLabError, ValueError):
    pass


class GrowthFunctionParseError(ErgoLabError, ValueError):
    pass


class FlipSetParseError(ErgoLabError, ValueError):
    pass


class BudgetExceededError(ErgoLabError):
    """A Birkhoff time (or DP size) beyond the configured budget was requested"""

    def __init__(self, requested: int, budget: int, label: str = "time"):
        self.requested = requested
        self.budget = budget
        self.label = label
        super().__init__(f"{label} {requested} exceeds budget {budget}")


class DPFeasibilityError(BudgetExceededError):
    pass


class TableConstructionError(ErgoLabError):
    """A forward table could not be built: the point fails the B-certificate"""


class ZeroValueError(TableConstructionError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"forward value v_{index} is zero")


class CollisionError(TableConstructionError):
    def __init__(self, first: int, second: int, value: int):
        self.first = first
        self.second = second
        self.value = value
        super().__init__(f"forward values v_{first} and v_{second} coincide ({value})")


class ConfigurationError(ErgoLabError):
    """Invalid configuration; carries the source position when read from a file"""

    def __init__(self, message: str, source: Optional[str] = None,
                 line: Optional[int] = None, column: Optional[int] = None):
        self.message = message
        self.source = source
        self.line = line
        self.column = column
        super().__init__(self.diagnostic())

    def diagnostic(self) -> str:
        if self.source is None or self.line is None:
            return self.message
        return f"{self.source}:{self.line}:{self.column or 1}: {self.message}"
