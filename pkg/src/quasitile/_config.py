""" configuration """
from __future__ import annotations

import dataclasses
import os
import warnings
from functools import cached_property
from typing import Any
from typing import Callable

from packaging.specifiers import SpecifierSet

from . import _types as _t
from ._errors import ConfigError
from ._errors import QuasitileError
from ._integration.config_reading import (
    get_args_for_document as _get_args_for_document,
)
from ._integration.config_reading import read_config_document as _read_document
from ._overrides import merge_overrides
from ._overrides import read_toml_overrides
from ._version_cls import package_version
from ._version_cls import parse_requirement
from ._version_cls import satisfies
from .groups import DEFAULT_BALL_CAP
from .groups import GroupSpec
from .utils import trace

SECTIONS = ("density", "tile", "compare", "encode", "entropy", "render")
DEFAULT_WINDOW: dict[str, Any] = {"radius": 10}


def _check_int(path: str, value: Any, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(path, f"must be at least {minimum}, got {value}")
    return value


def _check_group(value: Any, generators: Any) -> GroupSpec:
    if not isinstance(value, str):
        raise ConfigError("group", f"expected a descriptor string, got {value!r}")
    if not isinstance(generators, (list, tuple)) or not all(
        isinstance(g, str) for g in generators
    ):
        raise ConfigError("generators", "expected a list of normal-form strings")
    try:
        return GroupSpec.parse(value, list(generators))
    except QuasitileError as e:
        raise ConfigError("group", str(e)) from e


def _check_window(value: Any, spec: GroupSpec) -> dict[str, Any]:
    if not isinstance(value, dict):
        raise ConfigError("window", f"expected a table, got {value!r}")
    if "radius" in value:
        _check_int("window.radius", value["radius"], 0)
        extra = set(value) - {"radius", "margin"}
    elif "lo" in value or "hi" in value:
        if spec.family.name != "zd":
            raise ConfigError(
                "window", f"box windows need a zd group, not {spec.descriptor}"
            )
        dim = spec.family.dim  # type: ignore[attr-defined]
        for corner in ("lo", "hi"):
            coords = value.get(corner)
            if not isinstance(coords, list) or len(coords) != dim:
                raise ConfigError(f"window.{corner}", f"expected {dim} integers")
            for i, c in enumerate(coords):
                _check_int(f"window.{corner}[{i}]", c, -(2**62))
        if any(a > b for a, b in zip(value["lo"], value["hi"])):
            raise ConfigError("window", "lo exceeds hi")
        extra = set(value) - {"lo", "hi", "margin"}
    else:
        raise ConfigError("window", "expected either radius or lo/hi corners")
    if extra:
        raise ConfigError(f"window.{sorted(extra)[0]}", "unknown window key")
    return value


def _check_requires(value: Any) -> SpecifierSet | None:
    if value is None:
        return None
    if not isinstance(value, str):
        raise ConfigError("requires", f"expected a version specifier, got {value!r}")
    try:
        requirement = parse_requirement(value)
    except ValueError as e:
        raise ConfigError("requires", str(e)) from e
    if not satisfies(requirement):
        raise ConfigError(
            "requires", f"quasitile {package_version()} does not satisfy {value}"
        )
    return requirement


def _check_sections(data: dict[str, Any]) -> dict[str, dict[str, Any]]:
    sections = {}
    for name in SECTIONS:
        if name in data:
            block = data.pop(name)
            if not isinstance(block, dict):
                raise ConfigError(name, "expected a table")
            sections[name] = block
    return sections


@dataclasses.dataclass
class Configuration:
    """run configuration model"""

    relative_to: _t.PathT | None = None
    name: str | None = None
    group: str = "zd:1"
    generators: tuple[str, ...] = ()
    window: dict[str, Any] = dataclasses.field(
        default_factory=lambda: dict(DEFAULT_WINDOW)
    )
    folner: str = "boxes"
    seed: int = 0
    threads: int = 1
    ball_cap: int = DEFAULT_BALL_CAP
    requires: SpecifierSet | None = None
    sections: dict[str, dict[str, Any]] = dataclasses.field(default_factory=dict)
    source_text: str = ""

    @cached_property
    def group_spec(self) -> GroupSpec:
        return _check_group(self.group, self.generators)

    def section(self, name: str) -> dict[str, Any]:
        if name not in self.sections:
            raise ConfigError(name, "missing table for this subcommand")
        return self.sections[name]

    @property
    def base_dir(self) -> str:
        if self.relative_to is None:
            return os.getcwd()
        return os.path.dirname(os.path.abspath(self.relative_to))

    @classmethod
    def from_file(
        cls,
        name: str | os.PathLike[str],
        run_name: str | None = None,
        _load_toml: Callable[[str], dict[str, Any]] | None = None,
        **kwargs: Any,
    ) -> Configuration:
        """
        Read a run Configuration from a TOML document.
        Raises exceptions when the file is not found, is not valid TOML,
        or fails validation.
        """

        document = _read_document(name, _load_toml=_load_toml)
        args = _get_args_for_document(document, run_name, kwargs)

        args = merge_overrides(args, read_toml_overrides(args["name"]))
        args["source_text"] = document.text
        return cls.from_data(relative_to=name, data=args)

    @classmethod
    def from_data(
        cls, relative_to: _t.PathT | None, data: dict[str, Any]
    ) -> Configuration:
        data = dict(data)
        trace("config data", data)
        sections = _check_sections(data)
        generators = tuple(data.pop("generators", ()))
        group = data.pop("group", "zd:1")
        spec = _check_group(group, generators)
        window = _check_window(data.pop("window", dict(DEFAULT_WINDOW)), spec)
        folner = data.pop("folner", "boxes")
        if folner != "boxes":
            raise ConfigError("folner", f"unknown Følner family {folner!r}")
        seed = _check_int("seed", data.pop("seed", 0), 0)
        threads = _check_int("threads", data.pop("threads", 1), 1)
        ball_cap = _check_int("ball_cap", data.pop("ball_cap", DEFAULT_BALL_CAP), 1)
        requires = _check_requires(data.pop("requires", None))
        name = data.pop("name", None)
        source_text = data.pop("source_text", "")
        for key in sorted(data):
            warnings.warn(f"unknown configuration key {key!r} ignored")
        config = cls(
            relative_to,
            name=name,
            group=group,
            generators=generators,
            window=window,
            folner=folner,
            seed=seed,
            threads=threads,
            ball_cap=ball_cap,
            requires=requires,
            sections=sections,
            source_text=source_text,
        )
        config.__dict__["group_spec"] = spec
        return config
