import copy
from typing import Union, Dict, List, Tuple, Any

from .exceptions import (
    FieldError,
    RequiredValueError,
    UnknownKeyError,
    DictExpectedError,
    ListExpectedError,
    RulesError,
)
from .rules import CompositeRule, AbstractRule

_MISSING = object()


class ConfigParam:
    """
    Nested config validation. Unknown keys are errors.

        ConfigParam({
            'seed': [Integer(), Min(0)],
            'prior': ConfigParam({'mean': [Vector()], 'cov': [Matrix(), Square()]}),
            'label': ConfigParam([String()], required=False, default=''),
        })
    """
    def __init__(
        self,
        rules_map: Union[
            Dict[str, Union[List[AbstractRule], CompositeRule, 'ConfigParam']],
            Union[CompositeRule, List[AbstractRule]],
        ],
        required: bool = True,
        as_list: bool = False,
        default: Any = _MISSING,
    ) -> None:
        if isinstance(rules_map, list):
            self.rules_map = CompositeRule(*rules_map)
        elif isinstance(rules_map, dict):
            self.rules_map = {
                k: CompositeRule(*rules) if isinstance(rules, list) else rules
                for k, rules in rules_map.items()
            }
        else:
            self.rules_map = rules_map

        self.required = required
        self.as_list = as_list  # list of items or a single node
        self.default = default

    @property
    def is_leaf(self) -> bool:
        return isinstance(self.rules_map, CompositeRule) and not self.as_list

    @property
    def has_default(self) -> bool:
        return self.default is not _MISSING

    def _validate_leaf(self, value: Any, depth: list, errors: List[FieldError]) -> Any:
        try:
            return self.rules_map.validate(value)
        except RulesError as e:
            errors.append(FieldError(depth, e))
            return value

    def _validate_list(self, value: Any, depth: list, errors: List[FieldError]) -> Any:
        if not isinstance(value, list):
            errors.append(FieldError(depth, ListExpectedError()))
            return value

        item = ConfigParam(self.rules_map)
        return [item.validate(node, depth + [ix], errors)[0] for ix, node in enumerate(value)]

    def _validate_dict(self, value: Any, depth: list, errors: List[FieldError]) -> Any:
        if not isinstance(value, dict):
            errors.append(FieldError(depth, DictExpectedError()))
            return value

        result = dict()
        for key in value:
            if key not in self.rules_map:
                errors.append(FieldError(depth + [key], UnknownKeyError()))

        for key, rules in self.rules_map.items():
            if key not in value:
                self._fill_missing(key, rules, result, depth, errors)
                continue
            if isinstance(rules, ConfigParam):
                result[key], errors = rules.validate(value[key], depth + [key], errors)
                continue
            try:
                result[key] = rules.validate(value[key])
            except RulesError as e:
                errors.append(FieldError(depth + [key], e))
        return result

    def _fill_missing(self, key: str, rules: Any, result: dict, depth: list, errors: List[FieldError]):
        if isinstance(rules, ConfigParam) and not rules.required:
            if rules.has_default:
                result[key] = copy.deepcopy(rules.default)
            return
        errors.append(FieldError(depth + [key], RequiredValueError()))

    def validate(
        self,
        value: Any,
        depth: list = None,
        errors: List[FieldError] = None,
    ) -> Tuple[Any, List[FieldError]]:
        """
        :returns: converted value and every error found, each with its depth path
        """
        depth = depth or ['root']
        errors = errors if errors is not None else []

        if self.as_list:
            return self._validate_list(value, depth, errors), errors
        if self.is_leaf:
            return self._validate_leaf(value, depth, errors), errors
        return self._validate_dict(value, depth, errors), errors
