"""reading sets, shapes and windows out of configuration tables"""
from __future__ import annotations

from typing import Any

import numpy as np

from ._errors import ConfigError
from ._errors import DomainError
from ._errors import UsageError
from .density import PeriodicSet
from .density import Window
from .groups import ball
from .groups import box
from .groups import FiniteSubset
from .groups import GroupSpec
from .utils import as_fraction

SET_KINDS = ("elements", "box", "ball", "periodic", "random")


def _int_list(path: str, value: Any, length: int | None = None) -> list[int]:
    if not isinstance(value, list) or not all(
        isinstance(v, int) and not isinstance(v, bool) for v in value
    ):
        raise ConfigError(path, f"expected a list of integers, got {value!r}")
    if length is not None and len(value) != length:
        raise ConfigError(path, f"expected {length} integers, got {len(value)}")
    return value


def _zd_dim(path: str, spec: GroupSpec) -> int:
    if spec.family.name != "zd":
        raise ConfigError(path, f"only available for zd groups, not {spec.descriptor}")
    return spec.family.dim  # type: ignore[attr-defined,no-any-return]


def _fraction(path: str, value: Any, lo: int = 0, hi: int = 1) -> Any:
    try:
        result = as_fraction(value)
    except (TypeError, ValueError, ZeroDivisionError) as e:
        raise ConfigError(path, f"expected a rational, got {value!r}") from e
    if not lo <= result <= hi:
        raise ConfigError(path, f"must lie in [{lo}, {hi}], got {value!r}")
    return result


def read_epsilon(path: str, value: Any) -> Any:
    eps = _fraction(path, value)
    if eps in (0, 1):
        raise ConfigError(path, "must lie strictly between 0 and 1")
    return eps


def read_set(
    path: str,
    value: Any,
    spec: GroupSpec,
    *,
    region: FiniteSubset | None = None,
    seed: int = 0,
) -> FiniteSubset:
    """one of the ``SET_KINDS`` tables; periodic and random sets need a region"""
    if isinstance(value, list):
        value = {"elements": value}
    if not isinstance(value, dict):
        raise ConfigError(path, f"expected a set table, got {value!r}")
    kinds = [k for k in SET_KINDS if k in value]
    if len(kinds) != 1:
        raise ConfigError(path, f"expected exactly one of {', '.join(SET_KINDS)}")
    kind = kinds[0]
    where = f"{path}.{kind}"
    body = value[kind]
    try:
        if kind == "elements":
            if not isinstance(body, list) or not all(isinstance(e, str) for e in body):
                raise ConfigError(where, "expected a list of normal-form strings")
            return FiniteSubset.of(spec, [spec.parse_element(e) for e in body])
        if kind == "ball":
            if isinstance(body, dict):
                body = body.get("radius")
            radius = _int_list(where, [body])[0]
            if radius < 0:
                raise ConfigError(where, "radius must be nonnegative")
            return ball(spec, radius)
        dim = _zd_dim(where, spec)
        if kind == "box":
            if not isinstance(body, dict):
                raise ConfigError(where, "expected a table with lo and hi")
            lo = _int_list(f"{where}.lo", body.get("lo"), dim)
            hi = _int_list(f"{where}.hi", body.get("hi"), dim)
            return box(spec, lo, hi)
        if region is None:
            raise ConfigError(where, "needs a window to restrict to")
        if not isinstance(body, dict):
            raise ConfigError(where, "expected a table")
        if kind == "periodic":
            period = _int_list(f"{where}.period", body.get("period"), dim)
            residues = body.get("residues")
            if not isinstance(residues, list):
                raise ConfigError(f"{where}.residues", "expected a list of points")
            points = [
                tuple(_int_list(f"{where}.residues[{i}]", r, dim))
                for i, r in enumerate(residues)
            ]
            return PeriodicSet(spec, tuple(period), frozenset(points)).restrict(region)
        density = float(_fraction(f"{where}.density", body.get("density")))
        rng = np.random.default_rng(body.get("seed", seed))
        cells = region.elements
        picks = rng.random(len(cells)) < density
        return region.derive(g for g, keep in zip(cells, picks) if keep)
    except ConfigError:
        raise
    except (UsageError, DomainError) as e:
        raise ConfigError(where, str(e)) from e


def read_shape(path: str, value: Any, spec: GroupSpec) -> FiniteSubset:
    shape = read_set(path, value, spec)
    if not shape:
        raise ConfigError(path, "a shape must be nonempty")
    return shape


def read_window(
    value: dict[str, Any], spec: GroupSpec, margin: FiniteSubset | None = None
) -> Window:
    """a validated ``window`` table, optionally with an explicit margin shape"""
    try:
        if "margin" in value:
            margin = read_shape("window.margin", value["margin"], spec)
        if "radius" in value:
            return Window.ball(spec, value["radius"], margin)
        return Window.box(spec, value["lo"], value["hi"], margin)
    except ConfigError:
        raise
    except (UsageError, DomainError) as e:
        raise ConfigError("window", str(e)) from e
