"""Experiment configuration: YAML files layered over the shipped defaults.

A user file only needs the keys it changes; every key must exist in the
default configuration (``data/default.yaml``) and carry a compatible type.
``birth`` and ``competition`` blocks name a parametric family and are
replaced wholesale.  Errors carry ``file:line:column`` positions.
"""
import copy
from dataclasses import dataclass
from importlib import resources
from typing import Dict, List, Optional, Tuple

import numpy as np
import yaml

from .population import (AffineBirth, ConstantCompetition, GaussianCompetition,
                         LinearCompetition, LogisticModel, MutationKernel)

__all__ = [
    "SCHEMA_VERSION",
    "ConfigError",
    "Config",
    "load_default",
    "load_config",
    "apply_override",
    "build_model",
]

SCHEMA_VERSION = 1
FAMILY_KEYS = ("birth", "competition")
Position = Tuple[str, int, int]


class ConfigError(ValueError):
    """Malformed configuration; ``str`` includes the source position when known."""

    def __init__(self, message: str, position: Optional[Position] = None):
        self.message = message
        self.position = position
        if position is not None:
            message = f"{position[0]}:{position[1]}:{position[2]}: {message}"
        super().__init__(message)


def _marks(node, source, path=(), out=None):
    """Map key paths to (source, line, column) using the YAML node tree."""
    out = {} if out is None else out
    out[path] = (source, node.start_mark.line + 1, node.start_mark.column + 1)
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            p = path + (k.value,)
            _marks(v, source, p, out)
            out[p] = (source, k.start_mark.line + 1, k.start_mark.column + 1)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _marks(v, source, path + (i,), out)
    return out


def _parse(text: str, source: str):
    try:
        data = yaml.safe_load(text)
        node = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        pos = (source, mark.line + 1, mark.column + 1) if mark else None
        raise ConfigError(f"YAML syntax error: {getattr(exc, 'problem', exc)}", pos) from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", (source, 1, 1))
    return data, (_marks(node, source) if node is not None else {})


@dataclass
class Config:
    """Merged configuration plus source positions of user-supplied keys."""
    data: Dict
    marks: Dict
    source: str

    def get(self, dotted: str):
        cur = self.data
        for part in dotted.split("."):
            cur = cur[part]
        return cur

    def position(self, path) -> Optional[Position]:
        return self.marks.get(tuple(path))

    def section(self, dotted: str) -> "Config":
        """Sub-configuration with positions re-rooted."""
        prefix = tuple(dotted.split("."))
        marks = {k[len(prefix):]: v for k, v in self.marks.items() if k[:len(prefix)] == prefix}
        return Config(self.get(dotted), marks, self.source)

    def dump(self) -> str:
        return yaml.safe_dump(self.data, sort_keys=False)


def _kind(v):
    if isinstance(v, bool):
        return "bool"
    if isinstance(v, (int, float)):
        return "number"
    if isinstance(v, str):
        return "string"
    if isinstance(v, list):
        return "list"
    if isinstance(v, dict):
        return "mapping"
    if v is None:
        return "null"
    return type(v).__name__


def _merge(base, user, marks, path=()):
    for k, v in user.items():
        p = path + (k,)
        if k not in base:
            raise ConfigError(f"unknown key {'.'.join(map(str, p))!r}", marks.get(p))
        ref = base[k]
        if k in FAMILY_KEYS:
            if not isinstance(v, dict):
                raise ConfigError(f"{k!r} must be a mapping", marks.get(p))
            base[k] = copy.deepcopy(v)
        elif isinstance(ref, dict):
            if not isinstance(v, dict):
                raise ConfigError(f"{'.'.join(p)!r} must be a mapping", marks.get(p))
            _merge(ref, v, marks, p)
        else:
            # null defaults accept numbers (meaning "automatic" when null)
            if ref is not None and v is not None and _kind(ref) != _kind(v):
                raise ConfigError(f"{'.'.join(p)!r} expects {_kind(ref)}, got {_kind(v)}",
                                  marks.get(p))
            base[k] = copy.deepcopy(v)


def load_default() -> Config:
    text = resources.files("adaptdiff").joinpath("data/default.yaml").read_text("utf-8")
    data, marks = _parse(text, "default.yaml")
    return Config(data, marks, "default.yaml")


def load_config(path: Optional[str] = None, overrides: List[str] = ()) -> Config:
    """Load ``path`` (or only the defaults) and apply ``key=value`` overrides.

    Raises
    ------
    FileNotFoundError
        If ``path`` does not exist.
    ConfigError
        On syntax, unknown keys, type mismatches or schema version mismatch.
    """
    cfg = load_default()
    if path is not None:
        with open(path, encoding="utf-8") as f:
            text = f.read()
        user, marks = _parse(text, str(path))
        version = user.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {version!r} "
                              f"(expected {SCHEMA_VERSION})", marks.get(("schema_version",)))
        _merge(cfg.data, user, marks)
        cfg = Config(cfg.data, marks, str(path))
    for ov in overrides:
        apply_override(cfg, ov)
    if cfg.data.get("run", {}).get("seed") is None:
        raise ConfigError("run.seed is mandatory", cfg.position(("run", "seed")))
    return cfg


def apply_override(cfg: Config, text: str) -> None:
    """Apply ``dotted.key=value``; the value is parsed as YAML."""
    key, sep, raw = text.partition("=")
    pos = ("--override", 1, 1)
    if not sep or not key:
        raise ConfigError(f"override {text!r} is not key=value", pos)
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError:
        raise ConfigError(f"override value {raw!r} is not valid YAML", pos) from None
    parts = key.split(".")
    cur = cfg.data
    for part in parts[:-1]:
        if not isinstance(cur, dict) or part not in cur:
            raise ConfigError(f"unknown key {key!r}", pos)
        cur = cur[part]
    last = parts[-1]
    in_family = len(parts) >= 2 and parts[-2] in FAMILY_KEYS
    if not isinstance(cur, dict) or (last not in cur and not in_family):
        raise ConfigError(f"unknown key {key!r}", pos)
    ref = cur.get(last)
    if ref is not None and value is not None and not isinstance(ref, dict) \
            and _kind(ref) != _kind(value):
        raise ConfigError(f"{key!r} expects {_kind(ref)}, got {_kind(value)}", pos)
    cur[last] = value
    cfg.marks[tuple(parts)] = pos


def _family(cfg: Config, name: str, builders: Dict):
    block = cfg.data[name]
    pos = cfg.position((name,))
    fam = block.get("family") if isinstance(block, dict) else None
    if fam not in builders:
        raise ConfigError(f"{name}.family must be one of {sorted(builders)}, got {fam!r}", pos)
    fields, build = builders[fam]
    extra = set(block) - set(fields) - {"family"}
    if extra:
        key = sorted(extra)[0]
        raise ConfigError(f"unknown key {name}.{key} for family {fam!r}",
                          cfg.position((name, key)) or pos)
    missing = [f for f in fields if f not in block]
    if missing:
        raise ConfigError(f"{name} family {fam!r} needs {missing}", pos)
    try:
        return build(**{f: block[f] for f in fields})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}", pos) from None


def _vec(v, dim):
    a = np.atleast_1d(np.asarray(v, dtype=float))
    if a.size == 1 and dim > 1:
        a = np.full(dim, float(a[0]))
    if a.shape != (dim,):
        raise ValueError(f"expected {dim} components")
    return a


def build_model(cfg: Config) -> LogisticModel:
    """Build a :class:`LogisticModel` from a ``model`` section."""
    dim = int(cfg.data.get("dim", 1))
    births = {"affine": (("base", "gradient"),
                         lambda base, gradient: AffineBirth(float(base), _vec(gradient, dim)))}
    comps = {
        "constant": (("value",), lambda value: ConstantCompetition(float(value))),
        "gaussian": (("scale", "width"),
                     lambda scale, width: GaussianCompetition(float(scale), float(width))),
        "linear": (("base", "g1", "g2"),
                   lambda base, g1, g2: LinearCompetition(float(base), _vec(g1, dim),
                                                          _vec(g2, dim))),
    }
    birth = _family(cfg, "birth", births)
    comp = _family(cfg, "competition", comps)
    mut = cfg.data["mutation"]
    try:
        kernel = MutationKernel.isotropic(float(mut["mu"]), float(mut["sd"]), dim)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"mutation: {exc}", cfg.position(("mutation",))) from None
    return LogisticModel(birth, comp, kernel)
