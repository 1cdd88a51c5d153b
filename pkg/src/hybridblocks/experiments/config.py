"""Flat ``key = value`` config files with '#' comments.

Field names, types, and defaults come from the experiment config dataclass;
unknown or duplicate keys are rejected with their line number. Arrays are
comma-separated. ``parse_config(write_config(cfg)) == cfg`` holds exactly
(floats are written with 17 significant digits).
"""

from dataclasses import fields
from pathlib import Path

from ..errors import ConfigError


def _convert(raw: str, example, key: str, lineno: int):
    try:
        if isinstance(example, bool):
            return raw.strip().lower() in ("1", "true", "yes")
        if isinstance(example, int):
            return int(raw.strip())
        if isinstance(example, float):
            return float(raw.strip())
        if isinstance(example, tuple):
            return tuple(float(p.strip()) for p in raw.split(","))
        return raw.strip()
    except ValueError:
        raise ConfigError(f"line {lineno}: cannot parse value for key '{key}': {raw.strip()!r}") from None


def parse_config_text(text: str, cls):
    """Build a config dataclass from file text; see module docstring."""
    defaults = {f.name: f.default for f in fields(cls)}
    kwargs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in defaults:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")
        if key in kwargs:
            raise ConfigError(f"line {lineno}: duplicate key '{key}'")
        kwargs[key] = _convert(value, defaults[key], key, lineno)
    return cls(**kwargs)


def parse_config(path, cls):
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(path.read_text(), cls)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, tuple):
        return ", ".join(format(v, ".17g") for v in value)
    return str(value)


def write_config(cfg) -> str:
    """Render a config dataclass back to the flat text format."""
    return "".join(f"{f.name} = {_fmt(getattr(cfg, f.name))}\n" for f in fields(cfg))


def config_dict(cfg) -> dict:
    """JSON-friendly echo of a config (tuples become lists)."""
    out = {}
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        out[f.name] = list(v) if isinstance(v, tuple) else v
    return out
