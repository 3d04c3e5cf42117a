from __future__ import annotations

import os
from typing import Any
from typing import Hashable
from typing import List
from typing import Tuple
from typing import Union

from typing_extensions import Protocol
from typing_extensions import TypeAlias

PathT: TypeAlias = Union["os.PathLike[str]", str]

#: normal form payload of a group element
Form: TypeAlias = Tuple[Any, ...]
Symbol: TypeAlias = Hashable
Pattern: TypeAlias = Tuple[Hashable, ...]
ChainName: TypeAlias = Tuple[int, ...]
Vector: TypeAlias = List[int]


class EntrypointProtocol(Protocol):
    name: str

    def load(self) -> Any:
        pass


class GroupFamily(Protocol):
    """arithmetic on normal forms for one family of groups"""

    name: str

    def describe(self) -> str:
        ...

    def identity(self) -> Form:
        ...

    def mul(self, a: Form, b: Form) -> Form:
        ...

    def inv(self, a: Form) -> Form:
        ...

    def standard_generators(self) -> list[Form]:
        ...

    def validate(self, form: Form) -> Form:
        ...

    def parse_form(self, text: str) -> Form:
        ...

    def format_form(self, form: Form) -> str:
        ...

    def zigzag(self, form: Form) -> tuple[int, ...]:
        ...

    def standard_word_length(self, form: Form) -> int | None:
        ...
