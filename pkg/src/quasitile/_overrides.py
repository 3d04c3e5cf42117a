from __future__ import annotations

import os
from typing import Any

from ._integration.config_reading import lazy_toml_load
from .utils import trace

OVERRIDES_KEY = "QUASITILE_OVERRIDES"
OVERRIDES_KEY_NAMED = OVERRIDES_KEY + "_FOR_{name}"


def read_named_env(
    *, tool: str = "QUASITILE", name: str, run_name: str | None
) -> str | None:
    if run_name is not None:
        val = os.environ.get(f"{tool}_{name}_FOR_{run_name.upper()}")
        if val is not None:
            return val
    return os.environ.get(f"{tool}_{name}")


def read_toml_overrides(run_name: str | None) -> dict[str, Any]:
    """read configuration overrides from the environment

    tries ``QUASITILE_OVERRIDES_FOR_$UPPERCASE_RUN_NAME``
    and ``QUASITILE_OVERRIDES``
    """
    data = read_named_env(name="OVERRIDES", run_name=run_name)
    trace("overrides for", run_name, data)
    if data:
        if data[0] == "{":
            data = "cheat=" + data
            loaded = lazy_toml_load(data)
            return loaded["cheat"]  # type: ignore[no-any-return]
        return lazy_toml_load(data)
    else:
        return {}


def merge_overrides(base: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    """merge nested tables, override values win"""
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_overrides(merged[key], value)
        else:
            merged[key] = value
    return merged
