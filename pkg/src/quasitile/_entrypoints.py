from __future__ import annotations

from importlib.metadata import entry_points
from typing import Any
from typing import Callable
from typing import Iterator
from typing import TYPE_CHECKING

from .utils import trace

if TYPE_CHECKING:
    from . import _types as _t

GROUP_FAMILY_GROUP = "quasitile.group_family"


def iter_entry_points(
    group: str, name: str | None = None
) -> Iterator[_t.EntrypointProtocol]:
    all_eps = entry_points()
    if hasattr(all_eps, "select"):
        eps = all_eps.select(group=group)
    else:
        eps = all_eps.get(group, [])
    if name is None:
        return iter(eps)
    return (ep for ep in eps if ep.name == name)


def _get_ep(group: str, name: str) -> Any | None:
    for ep in iter_entry_points(group, name):
        trace("ep found:", ep.name)
        return ep.load()
    else:
        return None


def _builtin_families() -> dict[str, Callable[..., _t.GroupFamily]]:
    from . import groups

    return {
        "zd": groups.FreeAbelian,
        "heis3": groups.Heisenberg3,
        "lamplighter": groups.Lamplighter,
    }


def family_factory(name: str) -> Callable[..., _t.GroupFamily] | None:
    """resolve a group family by name, installed plugins first"""
    factory = _get_ep(GROUP_FAMILY_GROUP, name)
    if factory is None:
        trace("family from builtin table:", name)
        factory = _builtin_families().get(name)
    return factory  # type: ignore[no-any-return]


def known_families() -> list[str]:
    names = set(_builtin_families())
    names.update(ep.name for ep in iter_entry_points(GROUP_FAMILY_GROUP))
    return sorted(names)
