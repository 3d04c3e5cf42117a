"""
finite symbolic configurations and block codes

A :class:`SymbolicArray` is a configuration restricted to a window carrier.
Patterns are read over a shape ``F`` at ``g`` as the symbols of the cells
``Fg`` in the canonical order of ``F``.
"""
from __future__ import annotations

import dataclasses
import itertools
from typing import Any
from typing import Callable
from typing import Hashable
from typing import Iterable
from typing import Mapping
from typing import NamedTuple
from typing import Sequence

import numpy as np

from . import _types as _t
from ._errors import IntegrityError
from ._errors import MarginError
from ._errors import UsageError
from .density import Window
from .groups import FiniteSubset
from .groups import GroupElement
from .groups import GroupSpec

_CHARS = {-1: "-", 0: "0", 1: "1", 2: "2", 3: "3", 4: "4", 5: "5"}
_SYMBOLS = {v: k for k, v in _CHARS.items()}
_OUTSIDE = "."


@dataclasses.dataclass(frozen=True, eq=False)
class SymbolicArray:
    window: Window
    alphabet: tuple[_t.Symbol, ...]
    cells: Mapping[GroupElement, _t.Symbol]

    def __post_init__(self) -> None:
        if len(set(self.alphabet)) < 2:
            raise UsageError("an alphabet needs at least two symbols")
        known = set(self.alphabet)
        carrier = self.window.carrier.members
        if len(self.cells) != len(carrier) or not carrier.issuperset(self.cells):
            gaps = carrier.symmetric_difference(self.cells)
            missing = min(gaps, key=self.spec.order_key, default=None)
            raise UsageError(f"cells do not match the carrier (first at {missing})")
        for g, symbol in self.cells.items():
            if symbol not in known:
                raise UsageError(f"symbol {symbol!r} at {g} is not in the alphabet")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SymbolicArray):
            return NotImplemented
        return self.alphabet == other.alphabet and dict(self.cells) == dict(other.cells)

    __hash__ = None  # type: ignore[assignment]

    @property
    def spec(self) -> GroupSpec:
        return self.window.spec

    @classmethod
    def constant(
        cls, window: Window, alphabet: Sequence[_t.Symbol], symbol: _t.Symbol
    ) -> SymbolicArray:
        return cls(window, tuple(alphabet), {g: symbol for g in window.carrier.members})

    @classmethod
    def from_function(
        cls,
        window: Window,
        alphabet: Sequence[_t.Symbol],
        fn: Callable[[GroupElement], _t.Symbol],
    ) -> SymbolicArray:
        return cls(window, tuple(alphabet), {g: fn(g) for g in window.carrier.members})

    @classmethod
    def from_sets(cls, A: FiniteSubset, B: FiniteSubset, W: Window) -> SymbolicArray:
        """the {0, 1, 2} array marking A with 1 and B with 2"""
        if not A.isdisjoint(B):
            raise UsageError("A and B overlap")

        def mark(g: GroupElement) -> int:
            return 1 if g in A.members else 2 if g in B.members else 0

        return cls.from_function(W, (0, 1, 2), mark)

    @classmethod
    def random(
        cls,
        window: Window,
        alphabet: Sequence[_t.Symbol],
        seed: int,
        weights: Sequence[float] | None = None,
    ) -> SymbolicArray:
        """i.i.d. symbols drawn in canonical cell order"""
        rng = np.random.default_rng(seed)
        cells = window.carrier.elements
        picks = rng.choice(len(alphabet), size=len(cells), p=weights)
        return cls(
            window,
            tuple(alphabet),
            {g: alphabet[int(i)] for g, i in zip(cells, picks)},
        )

    def __getitem__(self, g: GroupElement) -> _t.Symbol:
        try:
            return self.cells[g]
        except KeyError:
            raise MarginError(f"cell {g} lies outside the window carrier") from None

    def pattern(self, F: FiniteSubset, g: GroupElement) -> _t.Pattern:
        """symbols on Fg, listed in the canonical order of F"""
        mul = self.spec.family.mul
        cells = self.cells
        try:
            return tuple(
                cells[GroupElement(g.group, mul(f.form, g.form))] for f in F.elements
            )
        except KeyError:
            raise MarginError(
                f"the {len(F)}-element horizon at {g} leaves the window"
            ) from None

    def with_cells(self, updates: Mapping[GroupElement, _t.Symbol]) -> SymbolicArray:
        cells = dict(self.cells)
        for g, symbol in updates.items():
            if g not in cells:
                raise MarginError(f"cell {g} lies outside the window carrier")
            cells[g] = symbol
        return SymbolicArray(self.window, self.alphabet, cells)

    def restrict(self, carrier: FiniteSubset) -> SymbolicArray:
        window = Window(carrier, carrier.derive([self.spec.identity]))
        return SymbolicArray(
            window, self.alphabet, {g: self[g] for g in carrier.members}
        )

    def support(self, symbol: _t.Symbol) -> FiniteSubset:
        return self.window.carrier.derive(
            g for g, s in self.cells.items() if s == symbol
        )

    def _dense(self) -> bool:
        spec = self.spec
        return (
            spec.family.name == "zd"
            and spec.family.dim <= 2  # type: ignore[attr-defined]
            and all(s in _CHARS for s in self.alphabet)
        )

    def to_text(self) -> str:
        """dense grid for ℤ and ℤ², one ``element<TAB>symbol`` line otherwise"""
        header = "# alphabet: " + " ".join(str(s) for s in self.alphabet) + "\n"
        if not self._dense():
            fmt = self.spec.format_element
            return header + "".join(
                f"{fmt(g)}\t{self.cells[g]}\n" for g in self.window.carrier.elements
            )
        forms = [g.form for g in self.cells]
        dim = len(forms[0])
        lo = [min(f[i] for f in forms) for i in range(dim)]
        hi = [max(f[i] for f in forms) for i in range(dim)]
        header += "# origin: " + " ".join(str(v) for v in lo) + "\n"
        desc = self.spec.descriptor
        rows = []
        ys = range(lo[1], hi[1] + 1) if dim == 2 else [None]
        for y in ys:
            row = []
            for x in range(lo[0], hi[0] + 1):
                key = GroupElement(desc, (x,) if y is None else (x, y))
                symbol = self.cells.get(key)
                row.append(_OUTSIDE if symbol is None else _CHARS[symbol])
            rows.append("".join(row))
        return header + "".join(f"{row}\n" for row in rows)

    @classmethod
    def from_text(cls, window: Window, text: str) -> SymbolicArray:
        lines = text.splitlines()
        alphabet: tuple[Any, ...] = ()
        origin = None
        body = []
        for line in lines:
            if line.startswith("# alphabet:"):
                alphabet = tuple(int(v) for v in line.split(":", 1)[1].split())
            elif line.startswith("# origin:"):
                origin = [int(v) for v in line.split(":", 1)[1].split()]
            elif line:
                body.append(line)
        spec = window.spec
        cells: dict[GroupElement, _t.Symbol] = {}
        if origin is None:
            for line in body:
                elem, _, symbol = line.partition("\t")
                cells[spec.parse_element(elem)] = int(symbol)
        else:
            for dy, row in enumerate(body):
                for dx, char in enumerate(row):
                    if char == _OUTSIDE:
                        continue
                    if char not in _SYMBOLS:
                        raise IntegrityError(
                            f"unknown symbol {char!r} in row {dy}", position=(dx, dy)
                        )
                    form = (origin[0] + dx,) if len(origin) == 1 else (
                        origin[0] + dx,
                        origin[1] + dy,
                    )
                    cells[spec.wrap(form)] = _SYMBOLS[char]
        return cls(window, alphabet, cells)


@dataclasses.dataclass(frozen=True)
class BlockCode:
    """a local rule: the output at g depends on the pattern over horizon·g"""

    horizon: FiniteSubset
    rule: Mapping[_t.Pattern, _t.Symbol] | Callable[[_t.Pattern], _t.Symbol]

    def __post_init__(self) -> None:
        if self.horizon.spec.identity not in self.horizon:
            raise UsageError("a block code horizon must contain the identity")

    def output(self, x: SymbolicArray, g: GroupElement) -> _t.Symbol:
        pattern = x.pattern(self.horizon, g)
        if callable(self.rule):
            return self.rule(pattern)
        try:
            return self.rule[pattern]
        except KeyError:
            raise IntegrityError(
                f"pattern {pattern} at {g} is outside the code domain", position=g
            ) from None

    def apply(
        self, x: SymbolicArray, alphabet: Sequence[_t.Symbol] | None = None
    ) -> SymbolicArray:
        """image of x on the cells whose horizon fits the carrier"""
        region = x.window.core_for(self.horizon)
        if not region:
            raise MarginError("the block code horizon does not fit the window")
        cells = {g: self.output(x, g) for g in region}
        if alphabet is None:
            outputs = list(dict.fromkeys(cells.values()))
            alphabet = outputs if len(outputs) > 1 else [*outputs, _fresh(outputs)]
        window = Window(region, region.derive([x.spec.identity]))
        return SymbolicArray(window, tuple(alphabet), cells)


def _fresh(symbols: Sequence[Hashable]) -> Hashable:
    return next(i for i in itertools.count() if i not in symbols)


class Observation(NamedTuple):
    """an array, a position in it and the output assigned there"""

    array: SymbolicArray
    position: GroupElement
    output: Hashable


class RuleConflict(NamedTuple):
    pattern: _t.Pattern
    first: Observation
    second: Observation


def check_local_rule(
    observations: Iterable[Observation], F: FiniteSubset
) -> RuleConflict | None:
    """first pair of equal F-patterns with different outputs, if any"""
    seen: dict[_t.Pattern, Observation] = {}
    for obs in observations:
        pattern = obs.array.pattern(F, obs.position)
        earlier = seen.setdefault(pattern, obs)
        if earlier.output != obs.output:
            return RuleConflict(pattern, earlier, obs)
    return None
