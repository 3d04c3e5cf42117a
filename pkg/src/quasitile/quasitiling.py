"""
static quasitilings on windows

A quasitiling places finitely many shapes at disjoint center sets; the tile
of shape ``S`` at center ``c`` is the right translate ``Sc``.  Construction
follows a greedy double sweep: shapes from the largest down, candidate
centers in canonical order split into passes by a fixed schedule.
"""
from __future__ import annotations

import dataclasses
import itertools
import logging
import warnings
from fractions import Fraction
from functools import cached_property
from typing import Iterable
from typing import Iterator
from typing import Mapping
from typing import NamedTuple
from typing import Sequence

from ._errors import HypothesisFailure
from ._errors import InvariantViolation
from ._errors import UsageError
from .density import is_separated
from .density import is_syndetic
from .density import Window
from .groups import FiniteSubset
from .groups import GroupElement
from .groups import GroupSpec
from .groups import invariance_ratio
from .groups import product_set
from .utils import as_fraction
from .utils import format_fraction
from .utils import trace

log = logging.getLogger("quasitile")


class TileKey(NamedTuple):
    shape: int
    center: GroupElement


@dataclasses.dataclass(frozen=True, eq=False)
class Quasitiling:
    """shapes, per-shape centers and optional order information

    ``tags`` maps a tile to its (j, i) double index, ``primary`` to its
    primariness flag and ``sources`` to the tile it was cut from.
    """

    spec: GroupSpec
    shapes: tuple[FiniteSubset, ...]
    centers: tuple[FiniteSubset, ...]
    tags: Mapping[TileKey, tuple[int, int]] | None = None
    primary: Mapping[TileKey, bool] | None = None
    sources: Mapping[TileKey, TileKey] = dataclasses.field(default_factory=dict)
    diagnostic: str = ""

    def __post_init__(self) -> None:
        if len(self.shapes) != len(self.centers):
            raise UsageError("every shape needs exactly one center set")
        seen: set[GroupElement] = set()
        for index, C in enumerate(self.centers):
            if not seen.isdisjoint(C.members):
                clash = min(seen & C.members, key=self.spec.order_key)
                raise UsageError(f"center {clash} is shared by shape {index}")
            seen |= C.members

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Quasitiling):
            return NotImplemented
        return self.tile_map == other.tile_map

    __hash__ = None  # type: ignore[assignment]

    @classmethod
    def empty(cls, spec: GroupSpec) -> Quasitiling:
        return cls(spec, (), ())

    @classmethod
    def from_tiles(
        cls, spec: GroupSpec, tiles: Iterable[tuple[FiniteSubset, GroupElement]]
    ) -> Quasitiling:
        """build from (tile set, center) pairs, shapes deduplicated in order"""
        shapes: list[FiniteSubset] = []
        centers: list[list[GroupElement]] = []
        for tile, c in tiles:
            shape = tile.right_translate(c.inverse())
            try:
                index = shapes.index(shape)
            except ValueError:
                index = len(shapes)
                shapes.append(shape)
                centers.append([])
            centers[index].append(c)
        return cls(
            spec,
            tuple(shapes),
            tuple(FiniteSubset.of(spec, cs) for cs in centers),
        )

    def keys(self) -> Iterator[TileKey]:
        for index, C in enumerate(self.centers):
            for c in C:
                yield TileKey(index, c)

    @cached_property
    def tile_map(self) -> dict[TileKey, FiniteSubset]:
        return {
            key: self.shapes[key.shape].right_translate(key.center)
            for key in self.keys()
        }

    def tile(self, key: TileKey) -> FiniteSubset:
        return self.tile_map[key]

    def __len__(self) -> int:
        return sum(len(C) for C in self.centers)

    @cached_property
    def all_centers(self) -> FiniteSubset:
        return FiniteSubset(
            self.spec, frozenset(itertools.chain.from_iterable(
                C.members for C in self.centers
            ))
        )

    @cached_property
    def union(self) -> FiniteSubset:
        return FiniteSubset(
            self.spec,
            frozenset(itertools.chain.from_iterable(
                t.members for t in self.tile_map.values()
            )),
        )

    @cached_property
    def shape_union(self) -> FiniteSubset:
        members: set[GroupElement] = {self.spec.identity}
        for S in self.shapes:
            members |= S.members
        return FiniteSubset(self.spec, frozenset(members))

    def center_index(self) -> dict[GroupElement, int]:
        return {key.center: key.shape for key in self.keys()}

    def ordered_keys(self) -> list[TileKey]:
        """tiles by (j descending, i ascending, canonical center)"""
        if self.tags is None:
            raise UsageError("this quasitiling carries no order tags")
        tags = self.tags
        order = self.spec.order_key
        return sorted(
            self.keys(),
            key=lambda k: (-tags[k][0], tags[k][1], order(k.center), k.shape),
        )

    def shift(self, g: GroupElement) -> Quasitiling:
        """every tile Sc moved to Scg"""

        def moved(key: TileKey) -> TileKey:
            return TileKey(key.shape, key.center * g)

        return Quasitiling(
            self.spec,
            self.shapes,
            tuple(C.right_translate(g) for C in self.centers),
            tags=None if self.tags is None else {
                moved(k): v for k, v in self.tags.items()
            },
            primary=None if self.primary is None else {
                moved(k): v for k, v in self.primary.items()
            },
        )

    def is_disjoint(self) -> bool:
        seen: set[GroupElement] = set()
        for tile in self.tile_map.values():
            if not seen.isdisjoint(tile.members):
                return False
            seen |= tile.members
        return True

    def to_text(self) -> str:
        fmt = self.spec.format_element
        lines = []
        for index, S in enumerate(self.shapes):
            lines.append(f"shape {index}: " + " ; ".join(fmt(s) for s in S))
        for key in self.keys():
            line = f"center {key.shape}: {fmt(key.center)}"
            if self.tags is not None:
                j, i = self.tags[key]
                line += f" tag {j} {i}"
            if self.primary is not None:
                line += " primary" if self.primary[key] else " secondary"
            lines.append(line)
        return "".join(f"{line}\n" for line in lines)


@dataclasses.dataclass(frozen=True)
class PropertyRecord:
    invariant: bool
    eps_disjoint: bool
    disjoint: bool
    alpha: Fraction
    covering: bool
    tiling: bool
    core_defect: Fraction
    witness: Mapping[TileKey, FiniteSubset] | None = None

    def to_record(self) -> str:
        return (
            f"invariant: {self.invariant}\n"
            f"eps_disjoint: {self.eps_disjoint}\n"
            f"disjoint: {self.disjoint}\n"
            f"alpha: {format_fraction(self.alpha)}\n"
            f"covering: {self.covering}\n"
            f"tiling: {self.tiling}\n"
            f"core_defect: {format_fraction(self.core_defect)}\n"
        )


def _sweep_order(T: Quasitiling) -> list[TileKey]:
    if T.tags is not None:
        return T.ordered_keys()
    order = T.spec.order_key
    return sorted(T.keys(), key=lambda k: (k.shape, order(k.center)))


def eps_disjoint_witness(
    T: Quasitiling, eps: object
) -> dict[TileKey, FiniteSubset] | None:
    """greedy disjoint (1 - eps)-subsets, or None when the greedy cut fails"""
    bound = 1 - as_fraction(eps)
    covered: set[GroupElement] = set()
    witness = {}
    for key in _sweep_order(T):
        tile = T.tile(key)
        kept = tile.derive(tile.members - covered)
        if len(kept) < bound * len(tile):
            trace("eps-disjointness fails at", key, len(kept), "of", len(tile))
            return None
        witness[key] = kept
        covered |= tile.members
    return witness


def measured_region(T: Quasitiling, W: Window) -> FiniteSubset:
    """points whose every possible covering tile is visible in the window"""
    K = T.shape_union | W.margin_shape
    return W.core_for(product_set(K, K.inverse()))


def covering_ratio(T: Quasitiling, W: Window) -> tuple[Fraction, FiniteSubset]:
    region = measured_region(T, W)
    if not region:
        return Fraction(0), region
    return Fraction(len(region & T.union), len(region)), region


def check_properties(
    T: Quasitiling, K: FiniteSubset, eps: object, W: Window
) -> PropertyRecord:
    bound = as_fraction(eps)
    invariant = all(invariance_ratio(S, K) < bound for S in T.shapes)
    witness = eps_disjoint_witness(T, bound)
    disjoint = T.is_disjoint()
    alpha, region = covering_ratio(T, W)
    core_defect = Fraction(len(W.carrier) - len(region), len(W.carrier))
    tiling = disjoint and bool(region) and alpha == 1
    record = PropertyRecord(
        invariant=invariant,
        eps_disjoint=witness is not None,
        disjoint=disjoint,
        alpha=alpha,
        covering=alpha >= 1 - bound,
        tiling=tiling,
        core_defect=core_defect,
        witness=witness,
    )
    trace("properties", record.to_record(), indent=True)
    return record


def _check_pool(pool: Sequence[FiniteSubset], spec: GroupSpec) -> None:
    if not pool:
        raise UsageError("the shape pool is empty")
    for S in pool:
        if spec.identity not in S:
            raise UsageError("every pool shape must contain the identity")
    for big, small in zip(pool, pool[1:]):
        if len(big) < len(small):
            raise UsageError("the shape pool must be ordered largest-first")
        if not small <= big:
            warnings.warn(
                "shape pool is not nested, the covering guarantee does not apply"
            )


def schedule_pass(position: int, passes: int, offset: int = 0) -> int:
    """pass index 1..passes of the candidate at ``position``"""
    return (position + offset) % passes + 1


def _candidates(S: FiniteSubset, W: Window) -> tuple[GroupElement, ...]:
    return (W.core & W.core_for(S)).elements


def construct_epsilon_quasitiling(
    pool: Sequence[FiniteSubset],
    eps: object,
    W: Window,
    *,
    passes: int = 1,
    schedule_offset: int = 0,
) -> Quasitiling:
    """greedy eps-quasitiling of the window core

    ``schedule_offset`` plays the part of the configuration dependent seed:
    it rotates the pass schedule of every shape.
    """
    bound = as_fraction(eps)
    if not 0 < bound < 1:
        raise UsageError(f"epsilon must lie in (0, 1), got {bound}")
    if passes < 1:
        raise UsageError(f"passes must be positive, got {passes}")
    spec = W.spec
    _check_pool(pool, spec)
    r = len(pool)
    occupied: set[GroupElement] = set()
    taken: set[GroupElement] = set()
    centers: list[list[GroupElement]] = [[] for _ in pool]
    tags: dict[TileKey, tuple[int, int]] = {}
    primary: dict[TileKey, bool] = {}
    for index, S in enumerate(pool):
        j = r - index
        candidates = _candidates(S, W)
        limit = bound * len(S)
        for i in range(1, passes + 1):
            for position, c in enumerate(candidates):
                if c in taken or schedule_pass(position, passes, schedule_offset) != i:
                    continue
                tile = S.right_translate(c).members
                if len(occupied & tile) < limit:
                    occupied |= tile
                    taken.add(c)
                    centers[index].append(c)
                    key = TileKey(index, c)
                    tags[key] = (j, i)
                    primary[key] = i == 1
        trace("accepted", len(centers[index]), "tiles of shape", index, "j =", j)
    T = Quasitiling(
        spec,
        tuple(pool),
        tuple(FiniteSubset.of(spec, cs) for cs in centers),
        tags=tags,
        primary=primary,
    )
    alpha, _ = covering_ratio(T, W)
    if alpha < 1 - bound:
        diagnostic = (
            f"pool reaches covering {format_fraction(alpha)},"
            f" below the target {format_fraction(1 - bound)}"
        )
        log.warning(diagnostic)
        T = dataclasses.replace(T, diagnostic=diagnostic)
    return T


def recover_order_tags(
    T: Quasitiling, W: Window, *, passes: int = 1, schedule_offset: int = 0
) -> Quasitiling:
    """rebuild (j, i) tags from primariness flags and the pass schedule"""
    if T.primary is None:
        raise UsageError("order recovery needs primariness flags")
    r = len(T.shapes)
    tags = {}
    for index, S in enumerate(T.shapes):
        position = {c: p for p, c in enumerate(_candidates(S, W))}
        for c in T.centers[index]:
            key = TileKey(index, c)
            if c not in position:
                raise UsageError(f"center {c} is not a candidate of shape {index}")
            i = schedule_pass(position[c], passes, schedule_offset)
            if T.primary[key] != (i == 1):
                raise UsageError(f"primariness of {key} contradicts the schedule")
            tags[key] = (r - index, i)
    return dataclasses.replace(T, tags=tags)


def disjointify(T: Quasitiling) -> Quasitiling:
    """cut every tile by the union of all strictly earlier tiles"""
    if T.tags is None:
        raise UsageError("disjointify needs order tags, recover them first")
    spec = T.spec
    covered: set[GroupElement] = set()
    shapes = list(T.shapes)
    centers: list[list[GroupElement]] = [[] for _ in shapes]
    tags: dict[TileKey, tuple[int, int]] = {}
    primary: dict[TileKey, bool] = {}
    sources: dict[TileKey, TileKey] = {}
    for key in T.ordered_keys():
        tile = T.tile(key)
        remnant = tile.members - covered
        covered |= tile.members
        if not remnant:
            continue
        if len(remnant) == len(tile):
            index = key.shape
        else:
            shape = tile.derive(remnant).right_translate(key.center.inverse())
            try:
                index = shapes.index(shape, len(T.shapes))
            except ValueError:
                index = len(shapes)
                shapes.append(shape)
                centers.append([])
        centers[index].append(key.center)
        new_key = TileKey(index, key.center)
        tags[new_key] = T.tags[key]
        if T.primary is not None:
            primary[new_key] = T.primary[key]
        sources[new_key] = key
    return Quasitiling(
        spec,
        tuple(shapes),
        tuple(FiniteSubset.of(spec, cs) for cs in centers),
        tags=tags,
        primary=primary if T.primary is not None else None,
        sources=sources,
    )


def adjust_centers(T: Quasitiling) -> Quasitiling:
    """move every center into its tile: shape Ŝa⁻¹ at center ac"""
    if not T.is_disjoint():
        raise UsageError("adjust_centers needs a disjoint quasitiling")
    spec = T.spec
    anchors = []
    for index, S in enumerate(T.shapes):
        if not S:
            raise InvariantViolation(f"shape {index} is empty")
        anchors.append(S.first())
    shapes = tuple(S.right_translate(a.inverse()) for S, a in zip(T.shapes, anchors))

    def moved(key: TileKey) -> TileKey:
        return TileKey(key.shape, anchors[key.shape] * key.center)

    centers = tuple(
        FiniteSubset.of(spec, (a * c for c in C)) for a, C in zip(anchors, T.centers)
    )
    return Quasitiling(
        spec,
        shapes,
        centers,
        tags=None if T.tags is None else {moved(k): v for k, v in T.tags.items()},
        primary=None
        if T.primary is None
        else {moved(k): v for k, v in T.primary.items()},
        sources={moved(k): v for k, v in T.sources.items()},
    )


def centers_separated(T: Quasitiling, K: FiniteSubset) -> bool:
    """whether the translates Kc over all centers are pairwise disjoint"""
    return is_separated(T.all_centers, K)


def check_center_syndetic(T: Quasitiling, F: FiniteSubset, W: Window) -> bool:
    """centers are (V⁻¹F)-syndetic where every F-translate meets the union

    V is the union of the shapes; checked on the translates that fit inside
    the carrier
    """
    U = product_set(T.shape_union.inverse(), F)
    region = W.core_for(U)
    union = T.union.members
    covered = [g for g in region if not union.isdisjoint(F.right_translate(g).members)]
    return is_syndetic(T.all_centers, U, region.derive(covered))


def lattice_tiling(
    spec: GroupSpec,
    sides: Sequence[int],
    W: Window,
    offset: Sequence[int] | None = None,
) -> Quasitiling:
    """boxes [0, side) placed on the lattice ∏ side·ℤ + offset inside the core"""
    if spec.family.name != "zd":
        raise UsageError(f"lattice tilings need a zd group, not {spec.descriptor}")
    offset = offset or [0] * len(sides)
    shape = FiniteSubset.from_forms(
        spec, itertools.product(*(range(side) for side in sides))
    )
    fits = W.core_for(shape)
    chosen = [
        c
        for c in W.core
        if c in fits
        and all((v - o) % side == 0 for v, o, side in zip(c.form, offset, sides))
    ]
    return Quasitiling(spec, (shape,), (FiniteSubset.of(spec, chosen),))


@dataclasses.dataclass(frozen=True, eq=False)
class TilingSystemWindow:
    """congruent levels; ``decompositions[k][s]`` lists (sub shape, relative center)"""

    levels: tuple[Quasitiling, ...]
    congruence_maps: tuple[Mapping[TileKey, tuple[TileKey, ...]], ...]
    decompositions: tuple[Mapping[int, tuple[tuple[int, GroupElement], ...]], ...]

    @property
    def depth(self) -> int:
        return len(self.levels)


def _regroup(
    lower: Quasitiling, upper: Quasitiling, W: Window
) -> tuple[Quasitiling, dict[TileKey, tuple[TileKey, ...]], dict[int, tuple]]:
    spec = lower.spec
    owner: dict[GroupElement, TileKey] = {}
    for key, tile in upper.tile_map.items():
        for g in tile.members:
            owner[g] = key
    region = measured_region(upper, W).members if upper.shapes else frozenset()
    members: dict[TileKey, list[TileKey]] = {}
    for key in lower.keys():
        top = owner.get(key.center)
        if top is None:
            if key.center in region:
                raise HypothesisFailure(
                    f"center {key.center} is covered by no tile of the next level",
                    diagnostic=key.center,
                )
            continue
        members.setdefault(top, []).append(key)
    shape_index: dict[tuple, int] = {}
    shapes: list[FiniteSubset] = []
    decomposition: dict[int, tuple[tuple[int, GroupElement], ...]] = {}
    centers: list[list[GroupElement]] = []
    parts: dict[TileKey, tuple[TileKey, ...]] = {}
    order = spec.order_key
    for top in sorted(members, key=lambda k: (order(k.center), k.shape)):
        subs = members[top]
        tile = FiniteSubset(
            spec,
            frozenset().union(*(lower.tile(k).members for k in subs)),
        )
        # anchored like adjust_centers, relative to the upper center
        anchor = tile.right_translate(top.center.inverse()).first()
        center = anchor * top.center
        inverse = center.inverse()
        shape = tile.right_translate(inverse)
        relative = tuple(
            sorted(
                ((k.shape, k.center * inverse) for k in subs),
                key=lambda p: (order(p[1]), p[0]),
            )
        )
        signature = (shape.members, relative)
        if signature not in shape_index:
            shape_index[signature] = len(shapes)
            shapes.append(shape)
            centers.append([])
            decomposition[shape_index[signature]] = relative
        index = shape_index[signature]
        centers[index].append(center)
        parts[TileKey(index, center)] = tuple(subs)
    regrouped = Quasitiling(
        spec, tuple(shapes), tuple(FiniteSubset.of(spec, cs) for cs in centers)
    )
    return regrouped, parts, decomposition


def build_congruent_system(
    levels: Sequence[Quasitiling], W: Window
) -> TilingSystemWindow:
    """regroup every level into unions of the level below it

    shapes are duplicated per decomposition, so each shape index fixes how
    its tiles split into tiles of the previous level
    """
    if not levels:
        raise UsageError("a tiling system needs at least one level")
    for k, level in enumerate(levels, 1):
        if not level.is_disjoint():
            raise UsageError(f"level {k} is not a tiling (tiles overlap)")
    result = [levels[0]]
    maps = []
    decompositions = []
    for upper in levels[1:]:
        regrouped, parts, decomposition = _regroup(result[-1], upper, W)
        result.append(regrouped)
        maps.append(parts)
        decompositions.append(decomposition)
        trace("regrouped level", len(result), "shapes", len(regrouped.shapes))
    return TilingSystemWindow(tuple(result), tuple(maps), tuple(decompositions))


def check_congruent_system(system: TilingSystemWindow) -> list[str]:
    """congruency and determinism failures, empty when the system is sound"""
    failures = []
    for k, (lower, upper) in enumerate(zip(system.levels, system.levels[1:]), 1):
        parts = system.congruence_maps[k - 1]
        decomposition = system.decompositions[k - 1]
        for key, tile in upper.tile_map.items():
            subs = parts.get(key, ())
            covered: set[GroupElement] = set()
            for sub in subs:
                piece = lower.tile(sub).members
                if not covered.isdisjoint(piece):
                    failures.append(f"level {k + 1} tile {key} has overlapping parts")
                covered |= piece
            if covered != tile.members:
                failures.append(f"level {k + 1} tile {key} differs from its parts")
            inverse = key.center.inverse()
            relative = {(sub.shape, sub.center * inverse) for sub in subs}
            if relative != set(decomposition.get(key.shape, ())):
                failures.append(f"shape {key.shape} of level {k + 1} decomposes twice")
            inside = {c for c in lower.all_centers if c in tile}
            if inside != {sub.center for sub in subs}:
                failures.append(f"level {k + 1} tile {key} misses centers inside it")
    return failures
