from abc import ABC, abstractmethod
from typing import Any, Dict, List

import numpy as np

from .constraints import CONSTRAINTS
from .exceptions import (
    CovarianceError,
    DimensionMismatch,
    DimensionRuleError,
    FieldError,
    NotPositiveDefinite,
    RulesError,
    ValueEnumError,
    ValueMinError,
)
from .model import get_model
from .stats import GaussianSpec, cholesky


class AbstractAfterCheck(ABC):
    """
    Cross-field checks, run only when every field passed its own rules.
    """
    @abstractmethod
    def validate(self, values: Dict[str, Any]) -> List[FieldError]:
        """
        :param values: the converted config, as produced by the schema
        """
        pass


def _field_error(path: List[Any], error) -> FieldError:
    return FieldError(['root'] + path, RulesError(error))


class ModelDimensions(AbstractAfterCheck):
    """
    Prior, data and initial guesses agree with the selected model and operator.
    """
    def validate(self, values: Dict[str, Any]) -> List[FieldError]:
        model, h = get_model(values['model'])
        errors = []
        expected = [
            (['prior', 'mean'], len(values['prior']['mean']), model.param_dim),
            (['prior', 'cov'], len(values['prior']['cov']), model.param_dim),
            (['data', 'mean'], len(values['data']['mean']), h.output_dim),
            (['data', 'cov'], len(values['data']['cov']), h.output_dim),
        ]
        expected += [
            (['initial_guesses', ix], len(guess), model.param_dim)
            for ix, guess in enumerate(values['initial_guesses'])
        ]
        if values['contour'] is not None:
            expected.append((['contour'], model.param_dim, 2))

        for path, got, dim in expected:
            if got != dim:
                errors.append(_field_error(path, DimensionRuleError(path[-1], dim, got)))
        return errors


class Covariances(AbstractAfterCheck):
    """
    The data covariance must be positive definite, the prior one PSD.
    """
    def validate(self, values: Dict[str, Any]) -> List[FieldError]:
        errors = []
        try:
            cholesky(np.asarray(values['data']['cov']))
        except NotPositiveDefinite:
            errors.append(_field_error(['data', 'cov'], CovarianceError()))
        try:
            GaussianSpec(values['prior']['mean'], values['prior']['cov'])
        except (NotPositiveDefinite, DimensionMismatch, ValueError):
            errors.append(_field_error(['prior', 'cov'], CovarianceError(definite=False)))
        return errors


class MethodRequirements(AbstractAfterCheck):
    def validate(self, values: Dict[str, Any]) -> List[FieldError]:
        errors = []
        if values['method'] == 'enkf' and values['ensemble_size'] < 2:
            errors.append(_field_error(['ensemble_size'], ValueMinError(2, True)))
        for ix, item in enumerate(values['constraints']):
            if item['name'] not in CONSTRAINTS:
                errors.append(_field_error(['constraints', ix, 'name'], ValueEnumError(sorted(CONSTRAINTS))))
        return errors


DEFAULT_CHECKS = (ModelDimensions(), Covariances(), MethodRequirements())
