"""Configuration files and overrides.

Configuration files are JSON or YAML mappings whose keys mirror the attributes of `SessionConfig` and of its nested
dataclasses. Time-like fields (names ending in ``_ns``) accept integer nanoseconds or quantity strings such as
``"30 ms"``; rate fields (``_hz``) accept ``"6 kHz"``.

Errors carry context: syntax errors report ``file:line:column``, field errors report the dotted path of the field.

Examples:
    >>> cfg = apply_overrides(SessionConfig(), {'beacon.t2_ns': '60 ms', 'noise': 'high'})
    >>> cfg.beacon.t2_ns, cfg.noise.sigma_db
    (60000000, 6.0)
"""
from __future__ import annotations
from typing import Any, Dict, Mapping, Optional
from dataclasses import fields, is_dataclass, replace
import copy
import logging
import os
import yaml
from ..units import _ns, _ms, _hz, UnitsException
from ..clocks import ClockParams, JitterModel, ClockException
from ..channel import NoiseModel, InterferenceModel, DetectorParams, ChannelException
from ..beacon import BeaconSpec, BeaconException
from ..codec import TemporalParams, EnergyParams, CodecException
from ..sync import SessionConfig, SessionConfigException, CalibrationException

__all__ = [
    'HarnessException',
    'ConfigException',
    'NESTED_TYPES',
    'PRESETS_PATH',
    'load_presets',
    'read_config_file',
    'merge',
    'build',
    'session_config',
    'apply_overrides',
]

_logger = logging.getLogger(__name__)

PRESETS_PATH: str = os.path.join(os.path.dirname(os.path.dirname(__file__)), 'presets.yaml')
"""Presets shipped with the package."""

NESTED_TYPES: Dict[str, type] = {
    'beacon': BeaconSpec,
    'temporal': TemporalParams,
    'energy': EnergyParams,
    'noise': NoiseModel,
    'interference': InterferenceModel,
    'detector': DetectorParams,
    'emission_jitter': JitterModel,
    'stamp_jitter_sender': JitterModel,
    'stamp_jitter_receiver': JitterModel,
    'clock_sender': ClockParams,
    'clock_receiver': ClockParams,
}
"""Dataclass of each nested configuration object, by field name."""

_VALIDATION_ERRORS = (ClockException, ChannelException, BeaconException, CodecException, SessionConfigException,
                      CalibrationException, UnitsException)


class HarnessException(Exception):
    """Exception raised for errors in the harness."""

    def __init__(self, m):
        self.message = m

    def __str__(self):
        return self.message


class ConfigException(HarnessException):
    """Exception raised for invalid configuration files, fields or values."""
    pass


def read_config_file(path: str) -> Dict[str, Any]:
    """Read a JSON or YAML mapping.

    Raises:
        ConfigException with ``file:line:column`` context on syntax errors.
    """
    try:
        with open(path) as f:
            data = yaml.safe_load(f)
    except OSError as e:
        raise ConfigException(f"{path}: cannot read configuration ({e.strerror}).")
    except yaml.YAMLError as e:
        mark = getattr(e, 'problem_mark', None)
        where = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark is not None else path
        raise ConfigException(f"{where}: {getattr(e, 'problem', None) or e}")
    if data is None:
        return {}
    if not isinstance(data, Mapping):
        raise ConfigException(f"{path}: the configuration must be a mapping (got {type(data).__name__}).")
    _logger.info(f"Read configuration from {path}.")
    return dict(data)


def load_presets(path: Optional[str] = None) -> Dict[str, Any]:
    """The shipped presets (noise levels and per-command defaults)."""
    return read_config_file(path or PRESETS_PATH)


def merge(base: Mapping[str, Any], update: Mapping[str, Any]) -> Dict[str, Any]:
    """Recursive merge: mappings are merged key by key, any other value of ``update`` replaces the base one.

    >>> merge({'a': {'b': 1, 'c': 2}, 'd': [1]}, {'a': {'c': 3}, 'd': [2]})
    {'a': {'b': 1, 'c': 3}, 'd': [2]}
    """
    result = copy.deepcopy(dict(base))
    for k, v in update.items():
        if isinstance(v, Mapping) and isinstance(result.get(k), Mapping):
            result[k] = merge(result[k], v)
        else:
            result[k] = copy.deepcopy(v)
    return result


def _convert(path: str, name: str, value: Any) -> Any:
    """Convert a raw configuration value according to the field name."""
    try:
        if isinstance(value, (list, tuple)):
            return tuple(_convert(path, name, v) for v in value)
        if name.endswith('_ns') or name == 'anchor':
            return None if value is None else _ns(value)
        if name.endswith('_hz'):
            return _hz(value)
        if name.endswith('_ms') and isinstance(value, str):
            ms = _ms(value)
            return int(ms) if ms == int(ms) else ms
    except UnitsException as e:
        raise ConfigException(f"{path}: {e.message}")
    return value


def build(cls: type, data: Mapping[str, Any], path: str = '') -> Any:
    """Instantiate a configuration dataclass from a mapping, recursively.

    Raises:
        ConfigException naming the dotted path of unknown fields or invalid values.
    """
    if not isinstance(data, Mapping):
        raise ConfigException(f"{path or cls.__name__}: expected a mapping (got {data!r}).")
    known = {f.name for f in fields(cls) if f.init}
    kwargs = {}
    for k, v in data.items():
        dotted = f"{path}.{k}" if path else str(k)
        if k not in known:
            raise ConfigException(f"{dotted}: unknown field of {cls.__name__}.")
        if k in NESTED_TYPES and isinstance(v, Mapping) and cls is SessionConfig:
            kwargs[k] = build(NESTED_TYPES[k], v, dotted)
        elif k == 'power_dbm' and isinstance(v, Mapping):
            kwargs[k] = {int(level): float(p) for level, p in v.items()}
        else:
            kwargs[k] = _convert(dotted, k, v)
    try:
        return cls(**kwargs)
    except _VALIDATION_ERRORS as e:
        raise ConfigException(f"{path or cls.__name__}: {e.message}")
    except TypeError as e:
        raise ConfigException(f"{path or cls.__name__}: {e}")


def session_config(data: Mapping[str, Any]) -> SessionConfig:
    """A `SessionConfig` from a (possibly partial) mapping."""
    return build(SessionConfig, data)


def _noise_sigma(value: Any, noise_levels: Mapping[str, float], path: str) -> float:
    if isinstance(value, str):
        if value not in noise_levels:
            raise ConfigException(f"{path}: unknown noise level '{value}' (expected one of {sorted(noise_levels)}).")
        return float(noise_levels[value])
    return float(value)


def _replace_path(obj: Any, keys, value: Any, path: str) -> Any:
    name = keys[0]
    if not is_dataclass(obj) or name not in {f.name for f in fields(obj) if f.init}:
        raise ConfigException(f"{path}: unknown field.")
    if len(keys) > 1:
        new = _replace_path(getattr(obj, name), keys[1:], value, path)
    elif name in NESTED_TYPES and isinstance(value, Mapping):
        new = build(NESTED_TYPES[name], value, path)
    elif name == 'power_dbm' and isinstance(value, Mapping):
        new = {int(level): float(p) for level, p in value.items()}
    else:
        new = _convert(path, name, value)
    try:
        return replace(obj, **{name: new})
    except _VALIDATION_ERRORS as e:
        raise ConfigException(f"{path}: {e.message}")


def apply_overrides(cfg: SessionConfig,
                    overrides: Mapping[str, Any],
                    noise_levels: Optional[Mapping[str, float]] = None) -> SessionConfig:
    """Apply dotted-path overrides to a configuration.

    The special key ``noise`` (or ``noise_level``) takes a level name from ``noise_levels`` (or a sigma in dB) and sets
    the noise standard deviation.

    Args:
        cfg: the configuration to start from
        overrides: mapping of dotted field paths (``beacon.length``) to raw values
        noise_levels: noise presets, by name (defaults to the shipped presets)

    Returns:
        a new configuration.
    """
    for key, value in overrides.items():
        if key in ('noise', 'noise_level') and not isinstance(value, Mapping):
            levels = noise_levels if noise_levels is not None else load_presets().get('noise_levels', {})
            try:
                cfg = replace(cfg, noise=replace(cfg.noise, sigma_db=_noise_sigma(value, levels, key)))
            except _VALIDATION_ERRORS as e:
                raise ConfigException(f"{key}: {e.message}")
        else:
            cfg = _replace_path(cfg, key.split('.'), value, key)
    return cfg
