"""
quasitiles, comparison and tiled entropy on finite windows of amenable groups
"""
from __future__ import annotations

from ._config import Configuration
from ._errors import ConfigError
from ._errors import DomainError
from ._errors import HypothesisFailure
from ._errors import IntegrityError
from ._errors import InvariantViolation
from ._errors import MarginError
from ._errors import QuasitileError
from ._errors import ResourceError
from ._errors import UnsupportedError
from ._errors import UsageError
from ._version_cls import package_version
from .density import FolnerSequence
from .density import Window
from .groups import FiniteSubset
from .groups import GroupElement
from .groups import GroupSpec
from .quasitiling import Quasitiling
from .quasitiling import TilingSystemWindow
from .symbolic import SymbolicArray

__version__ = package_version()

__all__ = [
    "Configuration",
    "ConfigError",
    "DomainError",
    "FiniteSubset",
    "FolnerSequence",
    "GroupElement",
    "GroupSpec",
    "HypothesisFailure",
    "IntegrityError",
    "InvariantViolation",
    "MarginError",
    "QuasitileError",
    "Quasitiling",
    "ResourceError",
    "SymbolicArray",
    "TilingSystemWindow",
    "UnsupportedError",
    "UsageError",
    "Window",
    "__version__",
]
