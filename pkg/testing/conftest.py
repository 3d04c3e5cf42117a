from __future__ import annotations

import os
from pathlib import Path

import pytest
from hypothesis import HealthCheck
from hypothesis import settings

import quasitile.utils
from .wd_wrapper import RunDir
from quasitile.groups import GroupSpec


def pytest_configure() -> None:
    os.environ["QUASITILE_DEBUG"] = "1"
    os.environ.pop("QUASITILE_OVERRIDES", None)


settings.register_profile(
    "default",
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")

VERSION_PKGS = ["quasitile", "numpy", "networkx", "packaging", "hypothesis"]


def pytest_report_header() -> list[str]:
    from importlib.metadata import PackageNotFoundError
    from importlib.metadata import version

    res = []
    for pkg in VERSION_PKGS:
        try:
            pkg_version = version(pkg)
        except PackageNotFoundError:
            pkg_version = "(not installed)"
        path = __import__(pkg).__file__
        res.append(f"{pkg} version {pkg_version} from {path!r}")
    return res


class DebugMode:
    def __init__(self, monkeypatch: pytest.MonkeyPatch):
        self.__monkeypatch = monkeypatch
        self.__module = quasitile.utils

    __monkeypatch: pytest.MonkeyPatch

    def enable(self) -> None:
        self.__monkeypatch.setattr(self.__module, "DEBUG", True)

    def disable(self) -> None:
        self.__monkeypatch.setattr(self.__module, "DEBUG", False)


@pytest.fixture(autouse=True)
def debug_mode(monkeypatch: pytest.MonkeyPatch) -> DebugMode:
    debug_mode = DebugMode(monkeypatch)
    debug_mode.enable()
    return debug_mode


@pytest.fixture
def rd(tmp_path: Path) -> RunDir:
    target = tmp_path.resolve() / "rd"
    target.mkdir()
    return RunDir(target)


@pytest.fixture(scope="session")
def Z() -> GroupSpec:
    return GroupSpec.parse("zd:1")


@pytest.fixture(scope="session")
def Z2() -> GroupSpec:
    return GroupSpec.parse("zd:2")


@pytest.fixture(scope="session")
def H() -> GroupSpec:
    return GroupSpec.parse("heis3")


@pytest.fixture(scope="session")
def L() -> GroupSpec:
    return GroupSpec.parse("lamplighter")
