from typing import List, Union

from .exceptions import ConfigError, ConfigSyntaxError, InvalidConfigError, RulesError


def format_config_error(error: Union[ConfigSyntaxError, InvalidConfigError, ConfigError]) -> List[str]:
    """
    One diagnostic line per problem: ``line L, column C: message`` for
    malformed JSON, ``root.path.to.field: message`` for schema violations.
    """
    if isinstance(error, ConfigSyntaxError):
        return [f'line {error.line}, column {error.column}: {error.message}']
    if not isinstance(error, InvalidConfigError):
        return [str(error)]

    result = []
    for field_error in error.errors:
        errors = field_error.errors
        if isinstance(errors, RulesError):
            result.extend(f'{field_error.dotted}: {rule_error}' for rule_error in errors.errors)
        else:
            result.append(f'{field_error.dotted}: {errors}')
    return result
