from __future__ import annotations

import os
import sys
import warnings
from typing import Any
from typing import Callable
from typing import Dict
from typing import NamedTuple

from typing_extensions import TypeAlias

TOML_RESULT: TypeAlias = Dict[str, Any]
TOML_LOADER: TypeAlias = Callable[[str], TOML_RESULT]

_NAME = "name"


class ConfigDocument(NamedTuple):
    name: str | os.PathLike[str]
    tool_name: str | None
    section: TOML_RESULT
    text: str

    @property
    def run_name(self) -> str | None:
        return self.section.get(_NAME)


def lazy_toml_load(data: str) -> TOML_RESULT:
    if sys.version_info >= (3, 11):
        from tomllib import loads
    else:
        from tomli import loads

    return loads(data)


def read_config_document(
    name: str | os.PathLike[str],
    tool_name: str = "quasitile",
    _load_toml: TOML_LOADER | None = None,
) -> ConfigDocument:
    """read a run document

    a ``pyproject.toml`` style file keeps the run under ``[tool.<tool_name>]``,
    any other document is the run itself
    """
    if _load_toml is None:
        _load_toml = lazy_toml_load
    with open(name, encoding="UTF-8") as strm:
        data = strm.read()
    defn = _load_toml(data)
    if "tool" in defn or "project" in defn:
        try:
            section = defn.get("tool", {})[tool_name]
        except LookupError as e:
            raise LookupError(
                f"{name} does not contain a tool.{tool_name} section"
            ) from e
        return ConfigDocument(name, tool_name, section, data)
    return ConfigDocument(name, None, defn, data)


def get_args_for_document(
    document: ConfigDocument,
    run_name: str | None,
    kwargs: TOML_RESULT,
) -> TOML_RESULT:
    """drops problematic details and figures the run name"""
    section = dict(document.section)
    kwargs = dict(kwargs)
    if "relative_to" in section:
        relative = section.pop("relative_to")
        where = f"[tool.{document.tool_name}]" if document.tool_name else "top level"
        warnings.warn(
            f"{document.name}: at {where}\n"
            f"ignoring value relative_to={relative!r}"
            " as its always relative to the config file"
        )
    if _NAME in section:
        if run_name is None:
            run_name = section.pop(_NAME)
        else:
            section.pop(_NAME)
    for key, value in list(kwargs.items()):
        if value is None:
            kwargs.pop(key)
        elif key in section and section[key] != value:
            warnings.warn(
                f"{key} {section[key]!r} is overridden by the cli arg {value!r}"
            )
    return {_NAME: run_name, **section, **kwargs}
