# SPDX-License-Identifier: MIT
#
"""Allows to easily access the lab's config and to coerce flat key-value settings into typed config objects"""
import configparser
import dataclasses
import json
import os
import typing

CONFIG_PATH = os.path.join(os.path.dirname(__file__), '..', 'config.cfg')
_BOOLEAN_STATES = configparser.ConfigParser.BOOLEAN_STATES


class ConfigError(Exception):
    """Raised for unknown keys, malformed overrides and values that cannot be coerced"""


def read_config(path=CONFIG_PATH):
    config = configparser.ConfigParser()
    config.read(path, encoding='utf-8')
    return config


def _coerce_scalar(value, target):
    if target is bool:
        if isinstance(value, bool):
            return value
        if str(value).strip().lower() not in _BOOLEAN_STATES:
            raise ConfigError(f'Not a boolean: {value!r}')
        return _BOOLEAN_STATES[str(value).strip().lower()]
    if target in (int, float):
        if isinstance(value, bool):
            raise ConfigError(f'Expected a number, got a boolean: {value!r}')
        try:
            return target(value) if not isinstance(value, str) else target(json.loads(value))
        except (TypeError, ValueError) as e:
            raise ConfigError(f'Cannot read {value!r} as {target.__name__}') from e
    return str(value)


def coerce_value(value, field_type):
    """Coerce a raw value (string from a cfg file or override, or a JSON value) to the declared field type"""
    if typing.get_origin(field_type) is tuple:
        element_type = typing.get_args(field_type)[0]
        if isinstance(value, str):
            stripped = value.strip().strip('[]()')
            value = [item for item in stripped.split(',') if item.strip()]
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f'Expected a sequence, got {value!r}')
        return tuple(_coerce_scalar(item.strip() if isinstance(item, str) else item, element_type) for item in value)
    return _coerce_scalar(value, field_type)


def field_names(config_type) -> set:
    return {f.name for f in dataclasses.fields(config_type)}


def build_config(config_type, values: dict):
    """Instantiate a config dataclass from raw values; only keys that are fields of config_type are used"""
    hints = typing.get_type_hints(config_type)
    kwargs = {key: coerce_value(value, hints[key]) for key, value in values.items() if key in hints}
    return config_type(**kwargs)


def parse_overrides(overrides) -> dict:
    """Parse `key=value` strings as given on the command line"""
    result = {}
    for override in overrides or []:
        if '=' not in override:
            raise ConfigError(f'Override must have the form key=value: {override!r}')
        key, value = override.split('=', 1)
        result[key.strip()] = value.strip()
    return result
