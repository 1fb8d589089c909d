"""Economy configuration files (YAML, or JSON as a subset of it)."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .economy import CES, CobbDouglas, Economy, LinearAggregate, SeparableIsoelastic
from .errors import ConstructionError

NORMALIZATIONS = ("sum_to_one", "numeraire")

# family tag -> (class, parameter keys in constructor order)
FAMILIES = {
    "cobb_douglas": (CobbDouglas, ("coeffs",)),
    "ces": (CES, ("rho", "weights")),
    "linear_aggregate": (LinearAggregate, ("coeffs",)),
    "separable_isoelastic": (SeparableIsoelastic, ("theta", "gamma")),
}


class ConfigError(ValueError):
    """A config document failed to parse or validate.

    The message starts with the offending field path, e.g.
    ``consumers[1].utility.rho``.
    """

    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where


@dataclass(frozen=True)
class EconomyConfig:
    economy: Economy
    normalization: str = "sum_to_one"


def _numbers(value, where, length=None):
    if not isinstance(value, list) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        raise ConfigError(where, "expected a list of numbers")
    if length is not None and len(value) != length:
        raise ConfigError(where, f"expected {length} entries, got {len(value)}")
    return [float(v) for v in value]


def parse_config(doc) -> EconomyConfig:
    """Validate a loaded config mapping and build the economy."""
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "expected a mapping")
    goods = doc.get("goods")
    if not isinstance(goods, int) or isinstance(goods, bool) or goods < 1:
        raise ConfigError("goods", "expected a positive integer")
    consumers = doc.get("consumers")
    if not isinstance(consumers, list) or not consumers:
        raise ConfigError("consumers", "expected a non-empty list")
    norm = doc.get("normalization", "sum_to_one")
    if norm not in NORMALIZATIONS:
        raise ConfigError("normalization", f"expected one of {', '.join(NORMALIZATIONS)}")
    unknown = set(doc) - {"goods", "consumers", "normalization"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown field")

    utilities, endowments = [], []
    for i, c in enumerate(consumers):
        here = f"consumers[{i}]"
        if not isinstance(c, dict):
            raise ConfigError(here, "expected a mapping with 'utility' and 'endowment'")
        util = c.get("utility")
        if not isinstance(util, dict):
            raise ConfigError(f"{here}.utility", "expected a mapping")
        family = util.get("family")
        if family not in FAMILIES:
            raise ConfigError(f"{here}.utility.family", f"expected one of {', '.join(FAMILIES)}")
        cls, keys = FAMILIES[family]
        args = []
        for key in keys:
            where = f"{here}.utility.{key}"
            if key not in util:
                raise ConfigError(where, "missing")
            if key == "rho":
                v = util[key]
                if not isinstance(v, (int, float)) or isinstance(v, bool):
                    raise ConfigError(where, "expected a number")
                if not (v < 1 and v != 0):
                    raise ConfigError(where, "rho must satisfy rho < 1 and rho != 0")
                args.append(float(v))
            else:
                args.append(_numbers(util[key], where, goods))
        extra = set(util) - {"family", *keys}
        if extra:
            raise ConfigError(f"{here}.utility.{sorted(extra)[0]}", "unknown field")
        try:
            utilities.append(cls(*args))
        except ConstructionError as exc:
            raise ConfigError(f"{here}.utility", str(exc)) from None
        endowments.append(_numbers(c.get("endowment"), f"{here}.endowment", goods))
        if any(v < 0 for v in endowments[-1]):
            raise ConfigError(f"{here}.endowment", "entries must be nonnegative")
    try:
        economy = Economy(utilities, endowments)
    except ConstructionError as exc:
        raise ConfigError("consumers", str(exc)) from None
    return EconomyConfig(economy, norm)


def load_config(path) -> EconomyConfig:
    """Read and validate a config file; syntax errors report the line."""
    text = Path(path).read_text()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}" if mark is not None else str(path)
        raise ConfigError(where, f"malformed document ({getattr(exc, 'problem', exc)})") from None
    return parse_config(doc)


def dump_config(economy: Economy, normalization: str = "sum_to_one") -> dict:
    """Inverse of :func:`parse_config`."""
    return {
        "goods": economy.n_goods,
        "consumers": [
            {"utility": {"family": u.family, **u.params()}, "endowment": np.asarray(om).tolist()}
            for u, om in zip(economy.utilities, economy.endowments)
        ],
        "normalization": normalization,
    }
