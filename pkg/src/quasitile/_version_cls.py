from __future__ import annotations

import logging
import platform

from packaging.specifiers import InvalidSpecifier
from packaging.specifiers import SpecifierSet
from packaging.version import InvalidVersion
from packaging.version import Version

log = logging.getLogger("quasitile")

FALLBACK_VERSION = "0.1.0"


def package_version() -> str:
    from importlib.metadata import PackageNotFoundError
    from importlib.metadata import version

    try:
        return version("quasitile")
    except PackageNotFoundError:
        return FALLBACK_VERSION


def _version_of(dist: str) -> str | None:
    from importlib.metadata import PackageNotFoundError
    from importlib.metadata import version

    try:
        return version(dist)
    except PackageNotFoundError:
        return None


def parse_requirement(value: str) -> SpecifierSet:
    """raises ``ValueError`` for malformed specifiers"""
    try:
        return SpecifierSet(value)
    except InvalidSpecifier as e:
        raise ValueError(f"invalid version specifier {value!r}") from e


def satisfies(requirement: SpecifierSet, current: str | None = None) -> bool:
    current = current or package_version()
    try:
        parsed = Version(current)
    except InvalidVersion:
        log.exception("unparsable package version %r", current)
        return False
    return requirement.contains(parsed, prereleases=True)


def version_record() -> dict[str, str]:
    """versions recorded in run manifests"""
    record = {
        "quasitile": package_version(),
        "python": platform.python_version(),
    }
    for dist in ("numpy", "networkx", "packaging"):
        found = _version_of(dist)
        if found is not None:
            record[dist] = str(Version(found))
    return record
