"""INI model configuration: builtin references and DSL-defined metrics.

Example::

    [manifold]
    type = dsl
    name = poincare-disk-ish
    dim = 2
    signature = +,+
    g_1_1 = 1 / (x2^2)
    g_2_2 = 1 / (x2^2)
    lower = -inf, 1e-8
    upper = inf, inf
"""
from __future__ import annotations

import configparser
import io
from typing import Optional

import numpy as np

from . import dsl
from .errors import ConfigError
from .manifold import ChartDomain, ManifoldModel
from .models import model_registry

__all__ = ["load_model_config", "model_from_config_text"]

_KNOWN_KEYS = {"type", "name", "dim", "signature", "lower", "upper"}


def _parse_signature(text: str, dim: int) -> tuple[int, ...]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if len(parts) != dim:
        raise ConfigError(f"signature has {len(parts)} entries, expected {dim}")
    sig = []
    for p in parts:
        if p in ("+", "+1", "1"):
            sig.append(1)
        elif p in ("-", "-1"):
            sig.append(-1)
        else:
            raise ConfigError(f"bad signature entry {p!r} (use + or -)")
    return tuple(sig)


def _parse_bounds(text: Optional[str], dim: int, default: float) -> np.ndarray:
    if text is None:
        return np.full(dim, default)
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != dim:
        raise ConfigError(f"bounds need {dim} entries, got {len(parts)}")
    try:
        return np.array([float(p) for p in parts])
    except ValueError as err:
        raise ConfigError(f"bad bound value: {err}") from None


def model_from_config_text(text: str) -> ManifoldModel:
    cp = configparser.ConfigParser()
    cp.optionxform = str  # g_1_2 etc. are case/underscore sensitive
    try:
        cp.read_string(text)
    except configparser.Error as err:
        raise ConfigError(f"malformed config: {err}") from None
    if "manifold" not in cp:
        raise ConfigError("missing [manifold] section")
    sec = cp["manifold"]
    kind = sec.get("type", "builtin").strip()

    if kind == "builtin":
        name = sec.get("name")
        if name is None:
            raise ConfigError("builtin model needs a name")
        extra = set(sec) - {"type", "name", "dim"}
        if extra:
            raise ConfigError(f"unknown keys for builtin model: {sorted(extra)}")
        kwargs = {}
        if "dim" in sec:
            kwargs["dim"] = int(sec["dim"])
        return model_registry(name.strip(), **kwargs)

    if kind != "dsl":
        raise ConfigError(f"unknown model type {kind!r} (builtin or dsl)")

    try:
        dim = int(sec.get("dim", ""))
    except ValueError:
        raise ConfigError("dsl model needs an integer dim") from None
    if dim < 1:
        raise ConfigError("dim must be positive")
    name = sec.get("name", "dsl-model").strip()
    signature = _parse_signature(sec.get("signature", ",".join("+" * dim)), dim)

    entries: dict[tuple[int, int], dsl.Expr] = {}
    for key in sec:
        if key in _KNOWN_KEYS:
            continue
        parts = key.split("_")
        if len(parts) != 3 or parts[0] != "g":
            raise ConfigError(f"unknown key {key!r} in [manifold]")
        try:
            i, j = int(parts[1]), int(parts[2])
        except ValueError:
            raise ConfigError(f"bad metric component key {key!r}") from None
        if not (1 <= i <= j <= dim):
            raise ConfigError(
                f"metric key {key!r} out of range (upper triangle, 1..{dim})"
            )
        try:
            entries[(i, j)] = dsl.parse(sec[key], dim)
        except dsl.ParseError as err:
            raise ConfigError(f"in {key}: {err}") from None

    lower = _parse_bounds(sec.get("lower"), dim, -np.inf)
    upper = _parse_bounds(sec.get("upper"), dim, np.inf)
    domain = ChartDomain(lower, upper)

    def metric(x: np.ndarray) -> np.ndarray:
        g = np.zeros((dim, dim))
        for (i, j), expr in entries.items():
            val = dsl.evaluate(expr, x)
            g[i - 1, j - 1] = val
            g[j - 1, i - 1] = val
        return g

    return ManifoldModel(
        name=name,
        dim=dim,
        signature=signature,
        domain=domain,
        metric=metric,
        metadata={"source": "config"},
    )


def load_model_config(path: str) -> ManifoldModel:
    with io.open(path, "r", encoding="utf-8") as fh:
        return model_from_config_text(fh.read())
