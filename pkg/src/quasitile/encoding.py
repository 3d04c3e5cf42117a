"""
marker encodings of multi-level tilings

The lowest encoded level (level 2; level 1 only carries the free indices)
writes one code block around every center.  Each higher level hides its
centers in the indices of the level below: next to a higher center ``c₀``
the first lower center ``c₁ = u c₀`` gets index 0 and the following lower
centers, scanned in a fixed order, spell a word naming ``u``, the shape, its
primariness and the index of ``c₀`` itself.  All other lower centers carry
the background index 1.
"""
from __future__ import annotations

import dataclasses
import itertools
from fractions import Fraction
from functools import cached_property
from typing import Iterator
from typing import Mapping
from typing import NamedTuple
from typing import Sequence
from typing import Tuple
from typing import Union

from ._errors import IntegrityError
from ._errors import MarginError
from ._errors import UsageError
from .density import density_window
from .density import is_separated
from .density import Window
from .groups import ball
from .groups import FiniteSubset
from .groups import GroupElement
from .groups import GroupSpec
from .groups import product_set
from .quasitiling import Quasitiling
from .quasitiling import TileKey
from .recognizable import canonical_elements
from .recognizable import check_fully_recognizable
from .recognizable import find_placements
from .recognizable import make_recognizable_family
from .recognizable import RecognizableFamily
from .symbolic import check_local_rule
from .symbolic import Observation
from .symbolic import RuleConflict
from .symbolic import SymbolicArray
from .utils import content_hash
from .utils import trace

INDICES = (-1, 0, 1)
BACKGROUND_INDEX = 1
THREE_SYMBOLS = (-1, 0, 1)
TWO_SYMBOLS = (0, 1)
MAX_RADIUS = 256

#: (shape index, primary, index)
BlockKey = Tuple[int, bool, int]
#: (locator element, shape index, primary, index)
WordKey = Tuple[GroupElement, int, bool, int]


def _ceil_log2(x: int) -> int:
    return (x - 1).bit_length()


def _keys(r: int) -> list[BlockKey]:
    return [(S, s, i) for S in range(r) for s in (True, False) for i in INDICES]


def _tails(length: int) -> Iterator[tuple[int, ...]]:
    """{-1, 1} words in lexicographic order"""
    return itertools.product((-1, 1), repeat=length)


def _inner(region: frozenset[GroupElement], L: FiniteSubset) -> frozenset[GroupElement]:
    """{g in region : L g ⊆ region}, L holding the identity"""
    mul = L.spec.family.mul
    forms = [x.form for x in L.members]
    return frozenset(
        g
        for g in region
        if all(GroupElement(g.group, mul(f, g.form)) in region for f in forms)
    )


def _separation(
    centers: FiniteSubset, horizon: FiniteSubset
) -> tuple[FiniteSubset, bool]:
    """horizon plus the largest ball keeping the centers separated"""
    spec = centers.spec
    if not is_separated(centers, horizon):
        return horizon, False
    best = horizon
    for n in range(MAX_RADIUS):
        candidate = horizon | ball(spec, n)
        if not is_separated(centers, candidate):
            break
        best = candidate
    return best, True


@dataclasses.dataclass(frozen=True)
class BlockLevel:
    """code blocks written around the level-2 centers"""

    shapes: tuple[FiniteSubset, ...]
    horizon: FiniteSubset
    blocks: Mapping[BlockKey, tuple[int, ...]]
    separation: FiniteSubset
    family: RecognizableFamily | None = None
    level: int = 2

    @cached_property
    def lookup(self) -> dict[tuple[int, ...], BlockKey]:
        return {block: key for key, block in self.blocks.items()}


@dataclasses.dataclass(frozen=True)
class WordLevel:
    """index words spelled by the centers of the level below"""

    level: int
    shapes: tuple[FiniteSubset, ...]
    locator: FiniteSubset
    scan: tuple[GroupElement, ...]
    m: int
    words: Mapping[WordKey, tuple[int, ...]]
    horizon: FiniteSubset
    separation: FiniteSubset

    @cached_property
    def lookup(self) -> dict[tuple[int, ...], WordKey]:
        return {word: key for key, word in self.words.items()}

    @cached_property
    def scan_set(self) -> FiniteSubset:
        return self.locator.derive(self.scan)


LevelCode = Union[BlockLevel, WordLevel]


@dataclasses.dataclass(frozen=True)
class ShapeCodebook:
    mode: int
    levels: tuple[LevelCode, ...]

    @property
    def alphabet(self) -> tuple[int, ...]:
        return THREE_SYMBOLS if self.mode == 3 else TWO_SYMBOLS

    @property
    def background(self) -> int:
        return 1 if self.mode == 3 else 0

    def level(self, k: int) -> LevelCode:
        if not 2 <= k < len(self.levels) + 2:
            raise UsageError(f"the codebook holds levels 2..{len(self.levels) + 1}")
        return self.levels[k - 2]

    def to_text(self) -> str:
        lines = [f"mode {self.mode}"]
        for code in self.levels:
            spec = code.horizon.spec
            fmt = spec.format_element
            lines.append(f"level {code.level}")
            for index, S in enumerate(code.shapes):
                lines.append(f"shape {index}: " + " ; ".join(fmt(s) for s in S))
            lines.append("horizon: " + " ; ".join(fmt(u) for u in code.horizon))
            lines.append(f"separation: {len(code.separation)}")
            if isinstance(code, BlockLevel):
                for (S, s, i), block in code.blocks.items():
                    flag = "p" if s else "n"
                    symbols = " ".join(str(v) for v in block)
                    lines.append(f"block {S} {flag} {i}: {symbols}")
            else:
                lines.append("locator: " + " ; ".join(fmt(u) for u in code.locator))
                lines.append("scan: " + " ; ".join(fmt(u) for u in code.scan))
                lines.append(f"m: {code.m}")
                for (u, S, s, i), word in code.words.items():
                    flag = "p" if s else "n"
                    symbols = " ".join(str(v) for v in word)
                    lines.append(f"word {fmt(u)} | {S} {flag} {i}: {symbols}")
        return "".join(f"{line}\n" for line in lines)

    @cached_property
    def content_hash(self) -> str:
        return content_hash(self.to_text())


def _three_symbol_level(shapes: tuple[FiniteSubset, ...], spec: GroupSpec) -> tuple:
    keys = _keys(len(shapes))
    m = _ceil_log2(len(keys)) + 1
    horizon = FiniteSubset(
        spec, frozenset(itertools.islice(canonical_elements(spec), m))
    )
    blocks = {key: (0,) + tail for key, tail in zip(keys, _tails(m - 1))}
    return horizon, blocks, None


def _two_symbol_level(shapes: tuple[FiniteSubset, ...], spec: GroupSpec) -> tuple:
    keys = _keys(len(shapes))
    e = spec.identity
    others = (g for g in canonical_elements(spec) if g != e)
    bases = [
        FiniteSubset(spec, frozenset([e, h]))
        for h in itertools.islice(others, len(keys))
    ]
    family = make_recognizable_family(bases)
    horizon = family.margin
    blocks = {
        key: tuple(1 if u in A.members else 0 for u in horizon.elements)
        for key, A in zip(keys, family.sets)
    }
    return horizon, blocks, family


def _locator(lower: Quasitiling, upper: Quasitiling) -> FiniteSubset:
    spec = lower.spec
    centers = lower.all_centers.members
    for radius in range(MAX_RADIUS):
        U = ball(spec, radius)
        if all(
            not centers.isdisjoint(U.right_translate(c).members)
            for c in upper.all_centers
        ):
            return U
    raise MarginError("higher centers lie too far from every lower center")


def _first_lower(
    c0: GroupElement, locator: FiniteSubset, centers: frozenset[GroupElement]
) -> tuple[GroupElement, GroupElement] | None:
    for u in locator:
        c1 = u * c0
        if c1 in centers:
            return u, c1
    return None


def _scan(
    lower: Quasitiling,
    upper: Quasitiling,
    locator: FiniteSubset,
    m: int,
    W: Window,
) -> tuple[GroupElement, ...]:
    spec = lower.spec
    centers = lower.all_centers.members
    carrier = W.carrier.members
    firsts = [
        found[1]
        for c0 in upper.all_centers
        if (found := _first_lower(c0, locator, centers)) is not None
    ]
    radius = max((spec.word_length(u) for u in locator), default=0)
    for n in range(radius, MAX_RADIUS):
        hat = ball(spec, n)
        fitting = [c for c in firsts if hat.right_translate(c).members <= carrier]
        if not fitting:
            break
        if all(len(hat.right_translate(c).members & centers) >= m for c in fitting):
            rest = [g for g in hat if g not in locator.members]
            return tuple(locator.elements) + tuple(rest)
    raise MarginError(f"no scan ball inside the window reaches {m} lower centers")


def build_codebook(
    levels: Sequence[Quasitiling], W: Window, mode: int = 3
) -> ShapeCodebook:
    """code blocks for the first level and index words for the higher ones"""
    if mode not in (2, 3):
        raise UsageError(f"mode must be 2 or 3 symbols, got {mode}")
    if not levels:
        raise UsageError("nothing to encode")
    spec = W.spec
    first = levels[0]
    build = _three_symbol_level if mode == 3 else _two_symbol_level
    horizon, blocks, family = build(first.shapes, spec)
    separation, _ = _separation(first.all_centers, horizon)
    codes: list[LevelCode] = [
        BlockLevel(first.shapes, horizon, blocks, separation, family)
    ]
    trace("level 2 horizon", len(horizon), "blocks", len(blocks))
    for k, (lower, upper) in enumerate(zip(levels, levels[1:]), 3):
        locator = _locator(lower, upper)
        keys = [
            (u, *key) for u in locator.elements for key in _keys(len(upper.shapes))
        ]
        m = _ceil_log2(len(keys)) + 1
        words = {key: (0,) + tail for key, tail in zip(keys, _tails(m - 1))}
        scan = _scan(lower, upper, locator, m, W)
        horizon = product_set(
            product_set(codes[-1].horizon, locator.derive(scan)), locator
        )
        separation, _ = _separation(upper.all_centers, horizon)
        codes.append(
            WordLevel(k, upper.shapes, locator, scan, m, words, horizon, separation)
        )
        trace("level", k, "m", m, "scan", len(scan), "horizon", len(horizon))
    return ShapeCodebook(mode, tuple(codes))


def _primary(T: Quasitiling, key: TileKey) -> bool:
    return True if T.primary is None else T.primary[key]


def _level_indices(
    levels: Sequence[Quasitiling],
    book: ShapeCodebook,
    choices: Mapping[GroupElement, int],
) -> list[dict[GroupElement, int]]:
    top = levels[-1]
    for c, i in choices.items():
        if i not in INDICES:
            raise UsageError(f"index {i} at {c} is not one of {INDICES}")
    indices = [dict.fromkeys(T.all_centers.members, BACKGROUND_INDEX) for T in levels]
    indices[-1].update({c: i for c, i in choices.items() if c in top.all_centers})
    for p in range(len(levels) - 1, 0, -1):
        upper, lower = levels[p], levels[p - 1]
        code = book.levels[p]
        assert isinstance(code, WordLevel)
        centers = lower.all_centers.members
        claimed: dict[GroupElement, GroupElement] = {}
        for key in sorted(upper.keys(), key=lambda k: upper.spec.order_key(k.center)):
            c0 = key.center
            found = _first_lower(c0, code.locator, centers)
            if found is None:
                raise UsageError(f"no lower center near {c0}")
            u, c1 = found
            word = code.words[(u, key.shape, _primary(upper, key), indices[p][c0])]
            chain = [c1]
            for v in code.scan:
                if len(chain) == code.m:
                    break
                c = v * c1
                if c in centers and c != c1:
                    chain.append(c)
            for c, symbol in zip(chain, word):
                other = claimed.setdefault(c, c0)
                if other != c0:
                    raise UsageError(
                        f"level {code.level - 1} center {c} is claimed"
                        f" by the chains of {other} and {c0}"
                    )
                indices[p - 1][c] = symbol
    return indices


def encode_level(
    levels: Sequence[Quasitiling],
    book: ShapeCodebook,
    W: Window,
    choices: Mapping[GroupElement, int] | None = None,
) -> SymbolicArray:
    """the array carrying every level of the tiling"""
    if len(levels) != len(book.levels):
        raise UsageError(
            f"{len(levels)} levels given for a {len(book.levels)} level codebook"
        )
    for k, T in enumerate(levels, 2):
        if not T.is_disjoint():
            raise UsageError(f"level {k} is not disjoint")
    indices = _level_indices(levels, book, choices or {})
    first = levels[0]
    code = book.levels[0]
    carrier = W.carrier.members
    cells = dict.fromkeys(carrier, book.background)
    written: dict[GroupElement, GroupElement] = {}
    for key in first.keys():
        c = key.center
        block = code.blocks[(key.shape, _primary(first, key), indices[0][c])]
        for u, symbol in zip(code.horizon.elements, block):
            cell = u * c
            other = written.setdefault(cell, c)
            if other != c:
                raise UsageError(f"marker blocks of {other} and {c} overlap at {cell}")
            if cell in carrier:
                cells[cell] = symbol
    return SymbolicArray(W, book.alphabet, cells)


class DecodedLevel(NamedTuple):
    level: int
    tiling: Quasitiling
    indices: dict[GroupElement, int]
    known: frozenset[GroupElement]


def _assemble(
    spec: GroupSpec,
    shapes: tuple[FiniteSubset, ...],
    found: Mapping[GroupElement, tuple[int, bool, int]],
) -> tuple[Quasitiling, dict[GroupElement, int]]:
    centers: list[list[GroupElement]] = [[] for _ in shapes]
    primary = {}
    indices = {}
    for c, (S, s, i) in found.items():
        centers[S].append(c)
        primary[TileKey(S, c)] = s
        indices[c] = i
    tiling = Quasitiling(
        spec,
        shapes,
        tuple(FiniteSubset.of(spec, cs) for cs in centers),
        primary=primary,
    )
    return tiling, indices


def _decode_blocks(z: SymbolicArray, book: ShapeCodebook) -> DecodedLevel:
    code = book.levels[0]
    assert isinstance(code, BlockLevel)
    spec = z.spec
    known = z.window.core_for(code.horizon).members
    found: dict[GroupElement, tuple[int, bool, int]] = {}
    if book.mode == 3:
        for c in spec.sorted(known):
            if z[c] != 0:
                continue
            block = z.pattern(code.horizon, c)
            key = code.lookup.get(block)
            if key is None:
                raise IntegrityError(f"unknown marker block at {c}", position=c)
            found[c] = key
    else:
        assert code.family is not None
        ones = z.support(1).members
        placements = [
            (j, x) for j, x in find_placements(code.family, ones, spec) if x in known
        ]
        covered: dict[GroupElement, GroupElement] = {}
        for j, x in placements:
            if x in found:
                raise IntegrityError(f"two markers are anchored at {x}", position=x)
            for cell in code.family.sets[j].right_translate(x).members:
                other = covered.setdefault(cell, x)
                if other != x:
                    raise IntegrityError(
                        f"markers at {other} and {x} overlap", position=cell
                    )
            block = z.pattern(code.horizon, x)
            key = code.lookup.get(block)
            if key is None:
                raise IntegrityError(f"ambiguous marker at {x}", position=x)
            found[x] = key
    tiling, indices = _assemble(spec, code.shapes, found)
    return DecodedLevel(2, tiling, indices, known)


def _decode_words(
    below: DecodedLevel, code: WordLevel, spec: GroupSpec
) -> DecodedLevel:
    centers = below.indices
    readable = _inner(below.known, code.scan_set)
    found: dict[GroupElement, tuple[int, bool, int]] = {}
    for c1 in spec.sorted(c for c, i in centers.items() if i == 0 and c in readable):
        word = [0]
        for v in code.scan:
            if len(word) == code.m:
                break
            c = v * c1
            if c != c1 and c in centers:
                word.append(centers[c])
        key = code.lookup.get(tuple(word))
        if key is None:
            raise IntegrityError(f"unknown index word at {c1}", position=c1)
        u, S, s, i = key
        c0 = u.inverse() * c1
        if c0 in found:
            raise IntegrityError(f"two words name the center {c0}", position=c1)
        found[c0] = (S, s, i)
    known = _inner(readable, code.locator)
    found = {c: v for c, v in found.items() if c in known}
    tiling, indices = _assemble(spec, code.shapes, found)
    return DecodedLevel(code.level, tiling, indices, known)


def decode_level(
    z: SymbolicArray, book: ShapeCodebook, k: int | None = None
) -> list[DecodedLevel]:
    """decoded levels 2..k, each restricted to the cells it fully determines"""
    top = len(book.levels) + 1 if k is None else k
    book.level(top)
    if z.alphabet != book.alphabet:
        raise UsageError(f"array alphabet {z.alphabet} does not fit the codebook")
    decoded = [_decode_blocks(z, book)]
    for code in book.levels[1 : top - 1]:
        assert isinstance(code, WordLevel)
        decoded.append(_decode_words(decoded[-1], code, z.spec))
    return decoded


def round_trip_failures(
    levels: Sequence[Quasitiling],
    book: ShapeCodebook,
    z: SymbolicArray,
    choices: Mapping[GroupElement, int] | None = None,
) -> list[str]:
    """differences between the decoded levels and the encoded ones"""
    failures = []
    choices = choices or {}
    for T, got in zip(levels, decode_level(z, book)):
        want = {
            key.center: (key.shape, _primary(T, key))
            for key in T.keys()
            if key.center in got.known
        }
        have = {
            key.center: (key.shape, _primary(got.tiling, key))
            for key in got.tiling.keys()
        }
        if want != have:
            diff = set(want.items()) ^ set(have.items())
            first = min(diff, key=lambda item: z.spec.order_key(item[0]))
            failures.append(f"level {got.level} differs at {first[0]}")
        if T is levels[-1]:
            for c, i in got.indices.items():
                if choices.get(c, BACKGROUND_INDEX) != i:
                    failures.append(f"free index at {c} decodes to {i}")
    return failures


def check_decode_locality(
    z: SymbolicArray, book: ShapeCodebook, k: int
) -> RuleConflict | None:
    """decoding level k reads nothing beyond the level-k horizon"""
    decoded = decode_level(z, book, k)[-1]
    horizon = book.level(k).horizon
    positions = z.window.core_for(horizon)
    info = {
        key.center: (key.shape, _primary(decoded.tiling, key))
        for key in decoded.tiling.keys()
    }
    return check_local_rule(
        (Observation(z, g, info.get(g)) for g in positions), horizon
    )


def check_marker_recognizability(T: Quasitiling, book: ShapeCodebook) -> bool:
    """the two-symbol markers of the first level form a fully recognizable family"""
    code = book.levels[0]
    if not isinstance(code, BlockLevel) or code.family is None:
        raise UsageError("marker recognizability concerns the two-symbol mode")
    keys = _keys(len(code.shapes))
    placements = []
    for key in T.keys():
        j = keys.index((key.shape, _primary(T, key), BACKGROUND_INDEX))
        placements.append((j, key.center))
    return check_fully_recognizable(code.family, placements)


class MarkerDensity(NamedTuple):
    level: int
    bound: Fraction
    measured: Fraction
    separated: bool

    @property
    def holds(self) -> bool:
        return self.separated and self.measured <= self.bound


def marker_density_bound(
    levels: Sequence[Quasitiling], book: ShapeCodebook, W: Window
) -> list[MarkerDensity]:
    """upper density of the marker cells against |U_k| / |V_k| per level"""
    report = []
    for T, code in zip(levels, book.levels):
        U, V = code.horizon, code.separation
        centers = T.all_centers
        separated = is_separated(centers, V)
        markers = (
            product_set(U, centers) & W.carrier if centers else W.carrier.derive(())
        )
        window = W.with_margin(V)
        measured = density_window(markers, V, window).upper
        report.append(
            MarkerDensity(code.level, Fraction(len(U), len(V)), measured, separated)
        )
    return report
