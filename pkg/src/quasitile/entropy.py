"""
empirical entropy on windows

Measures are pattern frequencies read off a finite array.  Tiled entropy
weights the entropy of the patterns over each shape by the frequency of that
shape's centers; rectangles are tiles together with their contents, and the
oracle assigns every rectangle an integer pattern budget.
"""
from __future__ import annotations

import dataclasses
import itertools
import logging
import math
from collections import Counter
from fractions import Fraction
from functools import cached_property
from typing import Any
from typing import Hashable
from typing import Iterable
from typing import Mapping
from typing import NamedTuple
from typing import Sequence

from . import _types as _t
from ._errors import DomainError
from ._errors import MarginError
from ._errors import UsageError
from .groups import FiniteSubset
from .groups import GroupElement
from .groups import GroupSpec
from .groups import product_set
from .quasitiling import Quasitiling
from .quasitiling import TilingSystemWindow
from .symbolic import SymbolicArray
from .utils import as_fraction
from .utils import content_hash
from .utils import format_fraction
from .utils import parallel_map
from .utils import trace

log = logging.getLogger("quasitile")

MASS_TOLERANCE = 1e-12
#: g-values are snapped to this denominator before exponentiation
G_DENOMINATOR = 10**6
NO_CENTER = -1


def shannon_entropy(dist: Mapping[Any, Any] | Sequence[Any]) -> float:
    """-Σ p log₂ p in bits, with 0 log 0 = 0"""
    masses = list(dist.values()) if isinstance(dist, Mapping) else list(dist)
    for p in masses:
        if p < 0:
            raise DomainError(f"negative probability mass {p}")
    if abs(float(sum(masses)) - 1) > MASS_TOLERANCE:
        raise DomainError(f"probabilities sum to {float(sum(masses))}, not 1")
    return -math.fsum(float(p) * math.log2(p) for p in masses if p > 0)


def _counts_entropy(counts: Iterable[int]) -> float:
    values = [c for c in counts if c]
    total = sum(values)
    if not total:
        return 0.0
    return math.log2(total) - math.fsum(c * math.log2(c) for c in values) / total


@dataclasses.dataclass(frozen=True)
class EmpiricalMeasure:
    """pattern counts; probabilities are the counts over their total"""

    counts: Mapping[Hashable, int]

    def __post_init__(self) -> None:
        for label, count in self.counts.items():
            if count < 0:
                raise DomainError(f"negative count {count} for {label!r}")

    @classmethod
    def of(cls, labels: Iterable[Hashable]) -> EmpiricalMeasure:
        return cls(dict(Counter(labels)))

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def probability(self, label: Hashable) -> Fraction:
        if not self.total:
            raise DomainError("an empty measure has no probabilities")
        return Fraction(self.counts.get(label, 0), self.total)

    def probabilities(self) -> dict[Hashable, Fraction]:
        return {label: self.probability(label) for label in self.counts}

    def entropy(self) -> float:
        return _counts_entropy(self.counts.values())

    def __add__(self, other: EmpiricalMeasure) -> EmpiricalMeasure:
        """the mixture weighted by the two totals"""
        merged = Counter(self.counts)
        merged.update(other.counts)
        return EmpiricalMeasure(dict(merged))

    def total_variation(self, other: EmpiricalMeasure) -> Fraction:
        labels = set(self.counts) | set(other.counts)
        return sum(
            (abs(self.probability(x) - other.probability(x)) for x in labels),
            Fraction(0),
        ) / 2


def _project(symbol: Any, layers: tuple[int, ...] | None) -> Any:
    if layers is None:
        return symbol
    return tuple(symbol[layer] for layer in layers)


@dataclasses.dataclass(frozen=True)
class Partition:
    """cells labelled by the symbols they see on a horizon

    ``factors`` pairs each horizon with the layers it reads (``None`` reads
    the whole symbol); several factors make a join.
    """

    factors: tuple[tuple[FiniteSubset, tuple[int, ...] | None], ...]

    @classmethod
    def of(
        cls, horizon: FiniteSubset, layers: Sequence[int] | None = None
    ) -> Partition:
        if not horizon:
            raise UsageError("a partition needs a nonempty horizon")
        return cls(((horizon, None if layers is None else tuple(layers)),))

    @classmethod
    def at_identity(
        cls, spec: GroupSpec, layers: Sequence[int] | None = None
    ) -> Partition:
        return cls.of(FiniteSubset.of(spec, [spec.identity]), layers)

    def join(self, other: Partition) -> Partition:
        return Partition(self.factors + other.factors)

    @cached_property
    def horizon(self) -> FiniteSubset:
        result = self.factors[0][0]
        for H, _ in self.factors[1:]:
            result = result | H
        return result

    def label(self, z: SymbolicArray, g: GroupElement) -> tuple[Any, ...]:
        return tuple(
            tuple(_project(s, layers) for s in z.pattern(H, g))
            for H, layers in self.factors
        )

    def refined_label(
        self, z: SymbolicArray, F: FiniteSubset, g: GroupElement
    ) -> tuple[Any, ...]:
        """the label of P^F at g"""
        return tuple(self.label(z, f * g) for f in F.elements)

    def positions(self, z: SymbolicArray, F: FiniteSubset) -> FiniteSubset:
        """translates g at which the P^F label is visible"""
        return z.window.core_for(product_set(self.horizon, F))

    def atoms(self, z: SymbolicArray) -> int:
        """number of distinct labels seen in the window"""
        cells = z.window.core_for(self.horizon)
        return len({self.label(z, g) for g in cells})


def block_entropy(
    z: SymbolicArray,
    P: Partition,
    F: FiniteSubset,
    positions: Iterable[GroupElement] | None = None,
    threads: int = 1,
) -> float:
    """H(μ, P^F) for the empirical measure of the translates"""
    where = list(P.positions(z, F) if positions is None else positions)
    if not where:
        raise MarginError(f"no translate of the {len(F)}-element shape is visible")
    labels = parallel_map(lambda g: P.refined_label(z, F, g), where, threads)
    return EmpiricalMeasure.of(labels).entropy()


class EntropyEstimate(NamedTuple):
    sizes: list[int]
    values: list[float]
    running_min: list[float]

    @property
    def estimate(self) -> float:
        return self.running_min[-1]

    def to_record(self) -> str:
        return "".join(
            f"term={i} size={n} value={v:.12f} min={m:.12f}\n"
            for i, (n, v, m) in enumerate(
                zip(self.sizes, self.values, self.running_min), 1
            )
        )


def dynamical_entropy_estimate(
    z: SymbolicArray,
    P: Partition,
    terms: Sequence[FiniteSubset],
    threads: int = 1,
) -> EntropyEstimate:
    """(1/|F|) H(μ, P^F) along the terms with its running minimum"""
    if not terms:
        raise UsageError("the estimate needs at least one Følner term")
    values = []
    running = []
    for F in terms:
        value = block_entropy(z, P, F, threads=threads) / len(F)
        values.append(value)
        running.append(min(value, running[-1]) if running else value)
        trace("entropy term", len(F), value)
    return EntropyEstimate([len(F) for F in terms], values, running)


def _usable_keys(
    z: SymbolicArray, T: Quasitiling, horizon: FiniteSubset
) -> dict[int, list[GroupElement]]:
    """per shape, the centers whose tile is fully readable"""
    visible = z.window.core_for(horizon).members
    usable: dict[int, list[GroupElement]] = {i: [] for i in range(len(T.shapes))}
    for key, tile in T.tile_map.items():
        if tile.members <= visible:
            usable[key.shape].append(key.center)
    return usable


def _tile_mass(T: Quasitiling, usable: Mapping[int, list[GroupElement]]) -> int:
    """cells covered by the usable tiles"""
    cells: set[GroupElement] = set()
    for index, centers in usable.items():
        S = T.shapes[index]
        for c in centers:
            cells |= S.right_translate(c).members
    return len(cells)


def tiled_entropy(
    z: SymbolicArray,
    T: Quasitiling,
    P: Partition,
    given: Partition | None = None,
    threads: int = 1,
) -> float:
    """Σ_S μ([S]) H(μ_[S], P^S), conditioned on ``given`` through the join"""
    if given is not None:
        joint = P.join(given)
        return tiled_entropy(z, T, joint, threads=threads) - tiled_entropy(
            z, T, given, threads=threads
        )
    horizon = P.horizon
    usable = _usable_keys(z, T, horizon)
    mass = _tile_mass(T, usable)
    if not mass:
        raise MarginError("no tile of the level is readable inside the window")
    total = 0.0
    for index, centers in usable.items():
        S = T.shapes[index]
        if not centers:
            log.warning("shape %d has no readable centers and contributes 0", index)
            continue
        labels = parallel_map(lambda c: P.refined_label(z, S, c), centers, threads)
        total += len(centers) / mass * EmpiricalMeasure.of(labels).entropy()
    return total


def _readable_fraction(
    z: SymbolicArray, T: Quasitiling, horizon: FiniteSubset
) -> Fraction:
    visible = z.window.core_for(horizon)
    if not visible:
        return Fraction(0)
    usable = _usable_keys(z, T, horizon)
    return Fraction(_tile_mass(T, usable), len(visible))


@dataclasses.dataclass(frozen=True)
class MonotonicityReport:
    values: tuple[float, ...]
    covered: tuple[Fraction, ...]
    tolerances: tuple[float, ...]
    estimate: float | None
    log_atoms: float = 0.0

    @property
    def monotone(self) -> bool:
        return all(
            later <= earlier + tol
            for earlier, later, tol in zip(
                self.values, self.values[1:], self.tolerances
            )
        )

    @property
    def above_estimate(self) -> tuple[bool, ...]:
        if self.estimate is None:
            return ()
        slack = [(1 - a) for a in self.covered]
        return tuple(
            v >= self.estimate - float(s) * self.log_atoms
            for v, s in zip(self.values, slack)
        )

    def to_record(self) -> str:
        lines = [
            f"level={k} value={v:.12f} covered={format_fraction(a)}"
            for k, (v, a) in enumerate(zip(self.values, self.covered), 1)
        ]
        lines += [
            f"tolerance {k}->{k + 1}={t:.12f}"
            for k, t in enumerate(self.tolerances, 1)
        ]
        if self.estimate is not None:
            lines.append(f"estimate={self.estimate:.12f}")
        lines.append(f"monotone={self.monotone}")
        return "".join(f"{line}\n" for line in lines)


def check_tiled_monotonicity(
    z: SymbolicArray,
    system: TilingSystemWindow,
    P: Partition,
    terms: Sequence[FiniteSubset] = (),
    threads: int = 1,
) -> MonotonicityReport:
    """tiled entropies level by level with the boundary tolerance of each step

    a step from level k to k + 1 may rise by at most the uncovered share of
    both levels times log₂ of the number of partition atoms
    """
    values = tuple(tiled_entropy(z, T, P, threads=threads) for T in system.levels)
    covered = tuple(_readable_fraction(z, T, P.horizon) for T in system.levels)
    log_atoms = math.log2(max(P.atoms(z), 1))
    tolerances = tuple(
        float((1 - a) + (1 - b)) * log_atoms for a, b in zip(covered, covered[1:])
    )
    estimate = (
        dynamical_entropy_estimate(z, P, terms, threads).estimate if terms else None
    )
    report = MonotonicityReport(values, covered, tolerances, estimate, log_atoms)
    trace("tiled entropies", report.to_record(), indent=True)
    return report


def layered_array(x: SymbolicArray, levels: Sequence[Quasitiling]) -> SymbolicArray:
    """cells (x, s₁, …, s_k), s_j the shape of the level-j tile centered there

    cells that are no level-j center carry -1 in layer j
    """
    marks = [T.center_index() for T in levels]
    layer_alphabets = [
        [NO_CENTER, *range(len(T.shapes))] for T in levels
    ]
    alphabet = tuple(itertools.product(x.alphabet, *layer_alphabets))
    cells = {
        g: (s, *(m.get(g, NO_CENTER) for m in marks)) for g, s in x.cells.items()
    }
    return SymbolicArray(x.window, alphabet, cells)


@dataclasses.dataclass(frozen=True)
class Rectangle:
    """a level-k tile shape with its contents on layers 0..k (or 0..k+1)"""

    level: int
    shape: int
    size: int
    contents: tuple[Any, ...]

    def to_text(self) -> str:
        cells = " ".join(",".join(str(v) for v in cell) for cell in self.contents)
        return f"level {self.level} shape {self.shape} size {self.size}: {cells}"

    @cached_property
    def digest(self) -> str:
        return content_hash(self.to_text())


def _layers(k: int, extended: bool) -> tuple[int, ...]:
    return tuple(range(k + 2 if extended else k + 1))


def rectangle_at(
    z: SymbolicArray,
    system: TilingSystemWindow,
    k: int,
    c: GroupElement,
    extended: bool = False,
) -> Rectangle:
    T = system.levels[k - 1]
    index = T.center_index().get(c)
    if index is None:
        raise UsageError(f"{c} is no level-{k} center")
    S = T.shapes[index]
    layers = _layers(k, extended)
    contents = tuple(_project(s, layers) for s in z.pattern(S, c))
    return Rectangle(k, index, len(S), contents)


def extract_rectangles(
    z: SymbolicArray, system: TilingSystemWindow, k: int, extended: bool = False
) -> dict[Rectangle, list[GroupElement]]:
    """every readable level-k rectangle with its centers in canonical order"""
    if not 1 <= k <= system.depth:
        raise UsageError(f"level {k} is outside 1..{system.depth}")
    if extended and k == system.depth:
        raise UsageError("the top level has no layer above it")
    T = system.levels[k - 1]
    carrier = z.window.carrier.members
    found: dict[Rectangle, list[GroupElement]] = {}
    for key in sorted(T.keys(), key=lambda key: T.spec.order_key(key.center)):
        if not T.tile(key).members <= carrier:
            continue
        R = rectangle_at(z, system, k, key.center, extended)
        found.setdefault(R, []).append(key.center)
    return found


def rectangle_measure(
    R: Rectangle,
    z: SymbolicArray,
    system: TilingSystemWindow,
    c: GroupElement,
    P: Partition,
) -> EmpiricalMeasure:
    """(1/|R|) Σ_{s ∈ S} δ at the shifted occurrence, read through P"""
    T = system.levels[R.level - 1]
    S = T.shapes[R.shape]
    extended = len(R.contents[0]) == R.level + 2
    if rectangle_at(z, system, R.level, c, extended) != R:
        raise UsageError(f"the rectangle does not occur at {c}")
    cells = S.right_translate(c)
    if not product_set(P.horizon, cells) <= z.window.carrier:
        raise MarginError(f"the partition horizon leaves the window near {c}")
    return EmpiricalMeasure.of(P.label(z, g) for g in cells.elements)


def center_frequency_identity(
    z: SymbolicArray, system: TilingSystemWindow, k: int, threads: int = 1
) -> tuple[float, float]:
    """both sides of the layer-(k+1) information identity

    left: tiled entropy of layer k+1 given layers 0..k over the level-k
    tiles; right: center frequency times the conditional entropy of extended
    rectangles given rectangles
    """
    spec = z.spec
    upper = Partition.at_identity(spec, [k + 1])
    lower = Partition.at_identity(spec, list(range(k + 1)))
    T = system.levels[k - 1]
    left = tiled_entropy(z, T, upper, given=lower, threads=threads)

    plain = extract_rectangles(z, system, k)
    extended = extract_rectangles(z, system, k, extended=True)
    mass = _tile_mass(T, _usable_keys(z, T, upper.horizon))
    centers = sum(len(cs) for cs in plain.values())
    if not mass or not centers:
        raise MarginError("no level tile is readable inside the window")
    h_ext = _counts_entropy(len(cs) for cs in extended.values())
    h_plain = _counts_entropy(len(cs) for cs in plain.values())
    right = centers / mass * (h_ext - h_plain)
    return left, right


@dataclasses.dataclass(frozen=True)
class Oracle:
    values: Mapping[Rectangle, int]

    def __getitem__(self, R: Rectangle) -> int:
        try:
            return self.values[R]
        except KeyError:
            raise UsageError(f"the oracle has no value for {R.to_text()}") from None

    def to_text(self) -> str:
        rows = sorted((R.digest, v) for R, v in self.values.items())
        return "".join(f"{digest} {value}\n" for digest, value in rows)


def _floor_root(value: int, q: int) -> int:
    """largest n with n**q <= value"""
    if value < 2:
        return value
    n = 1 << -(-value.bit_length() // q)
    while True:
        m = ((q - 1) * n + value // n ** (q - 1)) // q
        if m >= n:
            return n
        n = m


def ceil_power_of_two(exponent: Fraction) -> int:
    """⌈2^exponent⌉ for a nonnegative rational exponent, exactly"""
    if exponent < 0:
        raise DomainError(f"negative exponent {exponent}")
    p, q = exponent.numerator, exponent.denominator
    power = 1 << p
    root = _floor_root(power, q)
    return root if root**q == power else root + 1


def snap(value: object) -> Fraction:
    g = as_fraction(value)
    return g if g.denominator <= G_DENOMINATOR else g.limit_denominator(G_DENOMINATOR)


def build_oracle(
    rects: Iterable[Rectangle], g_values: Mapping[Rectangle, object]
) -> Oracle:
    """O(R) = ⌈2^{|R| g(R)}⌉"""
    values = {}
    for R in rects:
        if R not in g_values:
            raise UsageError(f"no g-value for {R.to_text()}")
        g = snap(g_values[R])
        if g < 0:
            raise DomainError(f"negative g-value {g}")
        values[R] = ceil_power_of_two(R.size * g)
    trace("oracle values", sorted(values.values()))
    return Oracle(values)


class Concatenation(NamedTuple):
    """a level-(k+1) shape and the level-k rectangles it splits into"""

    shape: int
    parts: tuple[Rectangle, ...]


def concatenations(
    z: SymbolicArray, system: TilingSystemWindow, k: int
) -> dict[Concatenation, set[Rectangle]]:
    """observed level-(k+1) rectangles grouped by the concatenation below them"""
    if not 1 <= k < system.depth:
        raise UsageError(f"concatenations need levels {k} and {k + 1}")
    upper = system.levels[k]
    parts_map = system.congruence_maps[k - 1]
    carrier = z.window.carrier.members
    found: dict[Concatenation, set[Rectangle]] = {}
    for key in upper.keys():
        if not upper.tile(key).members <= carrier:
            continue
        subs = sorted(parts_map[key], key=lambda s: z.spec.order_key(s.center))
        D = Concatenation(
            key.shape,
            tuple(rectangle_at(z, system, k, s.center) for s in subs),
        )
        found.setdefault(D, set()).add(rectangle_at(z, system, k + 1, key.center))
    return found


class OracleCheck(NamedTuple):
    holds: bool
    worst: Fraction
    witness: Concatenation | None


def check_oracle_condition(
    O: Oracle,
    inventory: Mapping[Concatenation, Iterable[Rectangle]],
) -> OracleCheck:
    """Σ O(R′) ≤ Π O(R⁽ⁱ⁾) for every concatenation, in integers"""
    worst = Fraction(0)
    witness = None
    for D in sorted(inventory, key=lambda d: [r.digest for r in d.parts]):
        total = sum(O[R] for R in inventory[D])
        product = math.prod(O[R] for R in D.parts)
        ratio = Fraction(total, product)
        if witness is None or ratio > worst:
            worst, witness = ratio, D
    holds = worst <= 1
    trace("oracle condition", holds, "worst ratio", worst)
    return OracleCheck(holds, worst, None if holds else witness)


def check_slack_condition(
    O: Oracle, g_values: Mapping[Rectangle, object], delta: object
) -> list[Rectangle]:
    """rectangles with ⌈2^{|R|g}⌉ > 2^{|R|(g + δ)}, compared exactly"""
    slack = as_fraction(delta)
    failing = []
    for R, value in O.values.items():
        exponent = R.size * (snap(g_values[R]) + slack)
        p, q = exponent.numerator, exponent.denominator
        if value**q > 1 << p:
            failing.append(R)
    return failing


def check_word_count_condition(
    inventory: Mapping[Concatenation, Iterable[Rectangle]],
    h_values: Mapping[Rectangle, object],
    sizes: Mapping[int, int],
    delta: object,
) -> dict[int, bool]:
    """per upper shape: Σ 2^{-|R′| h(R′)} < 2^{|S′| δ} over its rectangles"""
    slack = float(as_fraction(delta))
    per_shape: dict[int, set[Rectangle]] = {}
    for D, rects in inventory.items():
        per_shape.setdefault(D.shape, set()).update(rects)
    return {
        shape: math.fsum(
            2.0 ** (-R.size * float(as_fraction(h_values[R]))) for R in rects
        )
        < 2.0 ** (sizes[shape] * slack)
        for shape, rects in sorted(per_shape.items())
    }


@dataclasses.dataclass(frozen=True)
class AlphabetAssignment:
    size: int
    families: Mapping[Rectangle, tuple[_t.Pattern, ...]]


def _least_base(size: int, total: int) -> int:
    """least l ≥ 1 with l**size ≥ total"""
    base = max(_floor_root(total, size), 1)
    while base**size < total:
        base += 1
    return base


def min_alphabet(shapes: Sequence[FiniteSubset], O: Oracle) -> AlphabetAssignment:
    """least l with l^|S| ≥ Σ_{R over S} O(R), and disjoint pattern families"""
    by_shape: dict[int, list[Rectangle]] = {}
    for R in O.values:
        by_shape.setdefault(R.shape, []).append(R)
    size = 1
    for index, rects in by_shape.items():
        if index >= len(shapes):
            raise UsageError(f"rectangle shape {index} is not among the shapes")
        total = sum(O[R] for R in rects)
        size = max(size, _least_base(len(shapes[index]), total))
    families: dict[Rectangle, tuple[_t.Pattern, ...]] = {}
    for index, rects in sorted(by_shape.items()):
        words = itertools.product(range(size), repeat=len(shapes[index]))
        for R in sorted(rects, key=lambda r: r.digest):
            families[R] = tuple(itertools.islice(words, O[R]))
    trace("alphabet size", size)
    return AlphabetAssignment(size, families)
