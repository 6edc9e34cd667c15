from typing import List, Union, Any, Sequence


class InversionError(Exception):
    """
    Base constrained_inversion exception
    """


class WrongUsageError(InversionError):
    pass


class UnknownPreset(WrongUsageError):
    def __init__(self, name: str, allowed: Sequence[str] = ()):
        self.name = name
        self.allowed = tuple(allowed)

    def __str__(self) -> str:
        return f'unknown preset "{self.name}", allowed: ' + '|'.join(self.allowed)


class UnknownModel(UnknownPreset):
    def __str__(self) -> str:
        return f'unknown model "{self.name}", allowed: ' + '|'.join(self.allowed)


class UnknownConstraint(UnknownPreset):
    def __str__(self) -> str:
        return f'unknown constraint "{self.name}", allowed: ' + '|'.join(self.allowed)


class NumericalError(InversionError):
    pass


class NotPositiveDefinite(NumericalError):
    def __init__(self, pivot: float, threshold: float):
        self.pivot = pivot
        self.threshold = threshold

    def __str__(self) -> str:
        return f'matrix is not positive definite: pivot {self.pivot!r} <= {self.threshold!r}'


class DimensionMismatch(NumericalError):
    def __init__(self, what: str, expected: Any, got: Any):
        self.what = what
        self.expected = expected
        self.got = got

    def __str__(self) -> str:
        return f'dimension mismatch for {self.what}: expected {self.expected}, got {self.got}'


class WeightsNotNormalized(NumericalError):
    def __init__(self, total: float):
        self.total = total

    def __str__(self) -> str:
        return f'weights must be nonnegative and sum to 1, sum = {self.total!r}'


class EvaluationError(NumericalError):
    def __init__(self, reason: str):
        self.reason = reason

    def __str__(self) -> str:
        return f'constraint undefined: {self.reason}'


class AllWeightsZero(NumericalError):
    def __init__(self, max_log_weight: float):
        self.max_log_weight = max_log_weight

    def __str__(self) -> str:
        return f'all weights are zero, max log weight = {self.max_log_weight!r}'


class SingularInnovation(NumericalError):
    def __init__(self, reason: str):
        self.reason = reason

    def __str__(self) -> str:
        return f'innovation matrix is not invertible: {self.reason}'


class NonPositiveDisjunction(InversionError):
    """
    Diagnostic, collected instead of raised: the inclusion-exclusion value of a
    disjunctive constraint was <= 0 and has been floored.
    """
    def __init__(self, term_name: str, value: float):
        self.term_name = term_name
        self.value = value

    def __str__(self) -> str:
        return f'disjunction "{self.term_name}" combined density {self.value!r} <= 0, floored'


class ConfigError(InversionError):
    pass


class ConfigSyntaxError(ConfigError):
    def __init__(self, line: int, column: int, message: str):
        self.line = line
        self.column = column
        self.message = message

    def __str__(self) -> str:
        return f'invalid json at line {self.line}, column {self.column}: {self.message}'


class RequiredValueError(ConfigError):
    def __str__(self) -> str:
        return 'value is required'


class UnknownKeyError(ConfigError):
    def __str__(self) -> str:
        return 'unknown field'


class DictExpectedError(ConfigError):
    def __str__(self) -> str:
        return 'object expected'


class ListExpectedError(ConfigError):
    def __str__(self) -> str:
        return 'list expected'


class RuleError(ConfigError):
    pass


class ValueEnumError(RuleError):
    def __init__(self, allowed: Any):
        self.allowed = allowed

    def __str__(self) -> str:
        return 'not allowed, allowed values: ' + '|'.join(str(a) for a in self.allowed)


class ValueMinError(RuleError):
    def __init__(self, value: Union[int, float], include_boundary: bool):
        self.value = value
        self.include_boundary = include_boundary

    def __str__(self) -> str:
        if self.include_boundary:
            return f'smaller then allowed: value is not >= {self.value}'
        return f'smaller then allowed: value is not > {self.value}'


class NumberError(RuleError):
    def __str__(self) -> str:
        return 'expected number'


class IntegerError(RuleError):
    def __str__(self) -> str:
        return 'expected integer'


class BooleanError(RuleError):
    def __str__(self) -> str:
        return 'expected boolean'


class StringError(RuleError):
    def __str__(self) -> str:
        return 'expected string'


class VectorError(RuleError):
    def __init__(self, length: int = None):
        self.length = length

    def __str__(self) -> str:
        if self.length is None:
            return 'expected a list of finite numbers'
        return f'expected a list of {self.length} finite numbers'


class MatrixError(RuleError):
    def __str__(self) -> str:
        return 'expected a rectangular list of lists of finite numbers'


class SquareMatrixError(RuleError):
    def __str__(self) -> str:
        return 'expected a square matrix'


class SymmetricMatrixError(RuleError):
    def __init__(self, tol: float):
        self.tol = tol

    def __str__(self) -> str:
        return f'expected a symmetric matrix (relative tolerance {self.tol})'


class DimensionRuleError(RuleError):
    def __init__(self, what: str, expected: Any, got: Any):
        self.what = what
        self.expected = expected
        self.got = got

    def __str__(self) -> str:
        return f'{self.what} must have dimension {self.expected}, got {self.got}'


class CovarianceError(RuleError):
    def __init__(self, definite: bool = True):
        self.definite = definite

    def __str__(self) -> str:
        if self.definite:
            return 'covariance must be positive definite'
        return 'covariance must be positive semi-definite'


class RulesError(ConfigError):
    def __init__(self, *args: ConfigError):
        self.errors = args

    def __str__(self) -> str:
        return '. '.join([str(e) for e in self.errors])


class FieldError(ConfigError):
    def __init__(self, path: List[str], errors: Union[RulesError, ConfigError]):
        self.path = path
        self.errors = errors

    @property
    def dotted(self) -> str:
        return '.'.join(str(p) for p in self.path)

    def __str__(self) -> str:
        return f'{self.dotted}: {self.errors}'


class InvalidConfigError(ConfigError):
    def __init__(self, errors: List[FieldError]):
        self.errors = errors

    def __str__(self) -> str:
        return '; '.join(str(e) for e in self.errors)
