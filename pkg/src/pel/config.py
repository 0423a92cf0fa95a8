"""Flat ``key = value`` config files (``#`` starts a comment).

Every field of ``TrainConfig`` and ``SyntheticSpec`` is a valid key. ``seed``
sets both the training and the data seed; ``data_seed`` sets only the latter.
"""

import dataclasses
from pathlib import Path

from .synth_data import SyntheticSpec
from .trainer import TrainConfig


class ConfigError(ValueError):
    pass


def _field_types():
    types = {}
    for cls, target in ((TrainConfig, "train"), (SyntheticSpec, "data")):
        for f in dataclasses.fields(cls):
            types.setdefault(f.name, []).append((target, type(f.default)))
    types["data_seed"] = [("data", int)]
    return types


FIELD_TYPES = _field_types()


def _convert(raw, kind, elem):
    if kind is bool:
        low = raw.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if kind is tuple:
        parts = [p.strip() for p in raw.split(",") if p.strip()]
        return tuple(elem(p) for p in parts)
    if kind is int:
        return int(raw)
    if kind is float:
        return float(raw)
    return raw


_TUPLE_ELEMS = {"hidden_dims": int, "betas": float, "noise_rates": float}


def _apply(train, data, key, raw, where):
    if key not in FIELD_TYPES:
        raise ConfigError(f"{where}: unknown key {key!r}")
    for target, kind in FIELD_TYPES[key]:
        try:
            value = _convert(raw, kind, _TUPLE_ELEMS.get(key, float))
        except ValueError as exc:
            raise ConfigError(f"{where}: bad value for {key!r}: {exc}") from None
        name = "seed" if key == "data_seed" else key
        (train if target == "train" else data)[name] = value


def _split(line, where):
    if "=" not in line:
        raise ConfigError(f"{where}: expected 'key = value', got {line!r}")
    key, value = line.split("=", 1)
    return key.strip(), value.strip()


def parse_config(path=None, overrides=()):
    """Read a config file, apply ``key=value`` overrides, and build both configs.

    Args:
        path: config file, or ``None`` for all defaults.
        overrides: iterable of ``"key=value"`` strings applied after the file.

    Returns:
        ``(TrainConfig, SyntheticSpec)``.

    Raises:
        ConfigError: missing file, unknown key, malformed line or value; the
            message names the key and the line (or override position).
    """
    train, data = {}, {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        for lineno, line in enumerate(path.read_text().splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            where = f"{path}:{lineno}"
            _apply(train, data, *_split(line, where), where)
    for i, item in enumerate(overrides, start=1):
        where = f"override #{i}"
        _apply(train, data, *_split(item, where), where)
    try:
        config = TrainConfig(**train)
        spec = SyntheticSpec(**data)
        config.validate()
        spec.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return config, spec
