import math
import numbers
from abc import ABC, abstractmethod
from typing import List

from .exceptions import *


class AbstractRule(ABC):
    @abstractmethod
    def validate(self, value: Any) -> Any:
        """
            The returned value does not have to match the input value.
            Feel free to implement conversion logic.

            :param Any value:
            :raises RuleError:
        """
        pass


class CompositeRule(AbstractRule):
    """
    Rules are applied in order, each one receiving the output of the previous
    rule, so a converting rule (Vector, Matrix) should come first.
    Validation stops at the first violation.
    """
    def __init__(self, *rules: AbstractRule) -> None:
        self._rules = rules

    def __iter__(self):
        for rule in self._rules:
            yield rule

    def validate(self, value: Any) -> Any:
        """
        :raises RulesError:
        """
        errors = []
        new_value = value
        for rule in self._rules:
            try:
                new_value = rule.validate(new_value)
            except RuleError as e:
                errors.append(e)
                break

        if errors:
            raise RulesError(*errors)
        return new_value


def _is_number(value: Any) -> bool:
    return isinstance(value, numbers.Real) and not isinstance(value, bool)


class Number(AbstractRule):
    def validate(self, value: Any) -> Any:
        if not _is_number(value) or not math.isfinite(value):
            raise NumberError()
        return float(value)


class Integer(AbstractRule):
    def validate(self, value: Any) -> int:
        if isinstance(value, bool) or not isinstance(value, numbers.Integral):
            raise IntegerError()
        return int(value)


class Boolean(AbstractRule):
    def validate(self, value: Any) -> bool:
        if not isinstance(value, bool):
            raise BooleanError()
        return value


class String(AbstractRule):
    def validate(self, value: Any) -> str:
        if not isinstance(value, str):
            raise StringError()
        return value


class Enum(AbstractRule):
    def __init__(self, *allowed_values: Any) -> None:
        self._allowed_values = allowed_values

    def validate(self, value: Any) -> Any:
        if value not in self._allowed_values:
            raise ValueEnumError(self._allowed_values)
        return value


class Min(AbstractRule):
    def __init__(self, value: Union[int, float], include_boundary: bool = True) -> None:
        """
            >>> Min(7, True).validate(7)
            7
            >>> Min(0, False).validate(0.001)
            0.001
        """
        self._value = value
        self._include_boundary = include_boundary

    def validate(self, value: Union[int, float]) -> Union[int, float]:
        if value < self._value and self._include_boundary:
            raise ValueMinError(self._value, self._include_boundary)
        elif value <= self._value and not self._include_boundary:
            raise ValueMinError(self._value, self._include_boundary)
        return value


class Vector(AbstractRule):
    """
    A list of finite numbers, converted to a list of floats.
    """
    def __init__(self, length: int = None) -> None:
        self._length = length

    def validate(self, value: Any) -> List[float]:
        if not isinstance(value, list) or not all(_is_number(v) and math.isfinite(v) for v in value):
            raise VectorError(self._length)
        if self._length is not None and len(value) != self._length:
            raise VectorError(self._length)
        return [float(v) for v in value]


class Matrix(AbstractRule):
    """
    A non-empty rectangular list of lists of finite numbers.
    """
    def validate(self, value: Any) -> List[List[float]]:
        if not isinstance(value, list) or not value:
            raise MatrixError()
        rows = []
        for row in value:
            if not isinstance(row, list) or not row:
                raise MatrixError()
            if not all(_is_number(v) and math.isfinite(v) for v in row):
                raise MatrixError()
            rows.append([float(v) for v in row])
        if len({len(r) for r in rows}) != 1:
            raise MatrixError()
        return rows


class Square(AbstractRule):
    def validate(self, value: List[List[float]]) -> List[List[float]]:
        if any(len(row) != len(value) for row in value):
            raise SquareMatrixError()
        return value


class Symmetric(AbstractRule):
    def __init__(self, tol: float = 1e-12) -> None:
        self._tol = tol

    def validate(self, value: List[List[float]]) -> List[List[float]]:
        n = len(value)
        scale = max([abs(v) for row in value for v in row] + [1.0])
        for i in range(n):
            for j in range(i + 1, n):
                if abs(value[i][j] - value[j][i]) > self._tol * scale:
                    raise SymmetricMatrixError(self._tol)
        return value
