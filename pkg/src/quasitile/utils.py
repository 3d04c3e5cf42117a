"""
utils
"""
from __future__ import annotations

import hashlib
import os
import sys
import textwrap
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Callable
from typing import Iterable
from typing import TypeVar

DEBUG = bool(os.environ.get("QUASITILE_DEBUG"))

T = TypeVar("T")
R = TypeVar("R")


def trace(*k: object, indent: bool = False) -> None:
    if DEBUG:
        if indent and len(k) > 1:
            k = (k[0],) + tuple(textwrap.indent(str(s), "    ") for s in k[1:])
        print(*k, file=sys.stderr, flush=True)


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """map preserving input order; ``threads`` never changes the result"""
    if threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def as_fraction(value: object) -> Fraction:
    """exact conversion of ints, fraction strings and decimal literals"""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, (int, str)):
        return Fraction(value)
    if isinstance(value, float):
        # decimal literal semantics: 0.2 means 1/5
        return Fraction(repr(value))
    raise TypeError(f"cannot read {value!r} as a rational")


def format_fraction(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def content_hash(text: str | bytes) -> str:
    if isinstance(text, str):
        text = text.encode("utf-8")
    return hashlib.sha256(text).hexdigest()
