"""
comparison of sets with a density advantage

Points of ``A`` are injected into ``B`` by left multiplication with elements
of a finite multiplier set ``E``.  A greedy first pass is improved by
correction chains (augmenting paths whose steps are multipliers from ``E``)
until every point of ``A`` inside the window core is matched.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from fractions import Fraction
from functools import cached_property
from typing import Iterator
from typing import Mapping
from typing import NamedTuple
from typing import Sequence

import networkx as nx
import numpy as np

from . import _types as _t
from ._errors import HypothesisFailure
from ._errors import InvariantViolation
from ._errors import ResourceError
from ._errors import UsageError
from .density import Window
from .groups import DEFAULT_BALL_CAP
from .groups import FiniteSubset
from .groups import GroupElement
from .groups import GroupSpec
from .groups import product_set
from .quasitiling import Quasitiling
from .quasitiling import TileKey
from .symbolic import check_local_rule
from .symbolic import Observation
from .symbolic import RuleConflict
from .symbolic import SymbolicArray
from .utils import as_fraction
from .utils import format_fraction
from .utils import parallel_map
from .utils import trace

log = logging.getLogger("quasitile")

DEFAULT_CHAIN_CAP = 32
DEFAULT_CHAIN_LIMIT = 4096
DEFAULT_MAX_PATHS = 200_000


def default_multipliers(tiling: Quasitiling) -> FiniteSubset:
    """⋃ S S⁻¹ over the shapes, always holding the identity"""
    E = tiling.shape_union.derive([tiling.spec.identity])
    for S in tiling.shapes:
        E = E | product_set(S, S.inverse())
    return E


@dataclasses.dataclass(frozen=True)
class ComparisonInstance:
    A: FiniteSubset
    B: FiniteSubset
    tiling: Quasitiling | None
    eps: Fraction
    W: Window

    def __post_init__(self) -> None:
        if not self.A.isdisjoint(self.B):
            raise UsageError("A and B must be disjoint")
        object.__setattr__(self, "eps", as_fraction(self.eps))
        carrier = self.W.carrier
        if not (self.A <= carrier and self.B <= carrier):
            raise UsageError("A and B must lie inside the window carrier")

    @property
    def spec(self) -> GroupSpec:
        return self.W.spec

    @cached_property
    def A_core(self) -> FiniteSubset:
        """the points that have to be matched"""
        return self.A & self.W.core

    def advantage_violations(self) -> list[TileKey]:
        """tiles inside the core where B does not beat A by eps of the tile"""
        if self.tiling is None:
            return []
        core = self.W.core.members
        A, B = self.A.members, self.B.members
        bad = []
        for key, tile in self.tiling.tile_map.items():
            if not tile.members <= core:
                continue
            gain = len(tile.members & B) - len(tile.members & A)
            if gain <= self.eps * len(tile):
                bad.append(key)
        return bad


@dataclasses.dataclass
class PartialBijection:
    """an injection a ↦ g a with every multiplier g taken from ``E``"""

    E: tuple[GroupElement, ...]
    forward: dict[GroupElement, GroupElement] = dataclasses.field(default_factory=dict)
    reverse: dict[GroupElement, GroupElement] = dataclasses.field(default_factory=dict)

    @cached_property
    def index(self) -> dict[GroupElement, int]:
        return {g: i for i, g in enumerate(self.E)}

    def copy(self) -> PartialBijection:
        return PartialBijection(self.E, dict(self.forward), dict(self.reverse))

    def __len__(self) -> int:
        return len(self.forward)

    def multiplier(self, a: GroupElement) -> GroupElement:
        return self.forward[a] * a.inverse()

    def multiplier_index(self, a: GroupElement) -> int:
        return self.index[self.multiplier(a)]

    def assign(self, a: GroupElement, b: GroupElement) -> None:
        self.forward[a] = b
        self.reverse[b] = a

    def check(self, B: FiniteSubset) -> list[str]:
        """injectivity, multipliers in E and range inside B"""
        problems = []
        if len(self.reverse) != len(self.forward):
            problems.append("forward and reverse maps differ in size")
        for a, b in self.forward.items():
            if self.reverse.get(b) != a:
                problems.append(f"{b} is hit twice or the reverse index is stale")
            if b * a.inverse() not in self.index:
                problems.append(f"multiplier of {a} is outside E")
            if b not in B.members:
                problems.append(f"{a} is sent to {b} outside B")
        return problems


def name_key(name: _t.ChainName) -> tuple[int, _t.ChainName]:
    """names compare by length first, then lexicographically"""
    return (len(name), name)


@dataclasses.dataclass(frozen=True)
class CorrectionChain:
    """alternating points a₁ b₁ … aₙ bₙ and their name over E-indices"""

    points: tuple[GroupElement, ...]
    name: _t.ChainName

    def __len__(self) -> int:
        return len(self.points)

    @property
    def pairs(self) -> list[tuple[GroupElement, GroupElement]]:
        return list(zip(self.points[::2], self.points[1::2]))

    @property
    def start(self) -> GroupElement:
        return self.points[0]

    @property
    def end(self) -> GroupElement:
        return self.points[-1]

    def collides(self, other: CorrectionChain) -> bool:
        return not set(self.points).isdisjoint(other.points)

    @classmethod
    def through(
        cls, phi: PartialBijection, points: Sequence[GroupElement]
    ) -> CorrectionChain:
        """the chain on ``points`` with its name computed from phi"""
        if len(points) < 2 or len(points) % 2:
            raise UsageError("a correction chain has an even positive length")
        name: list[int] = []
        for i, (a, b) in enumerate(zip(points[::2], points[1::2])):
            p = b * a.inverse()
            if p not in phi.index:
                raise UsageError(f"step {a} -> {b} uses a multiplier outside E")
            name.append(phi.index[p])
            if 2 * i + 2 < len(points):
                nxt = points[2 * i + 2]
                if phi.forward.get(nxt) != b:
                    raise UsageError(f"{b} is not the image of {nxt}")
                name.append(phi.multiplier_index(nxt))
        return cls(tuple(points), tuple(name))

    def validate(self, phi: PartialBijection, B: FiniteSubset) -> None:
        if len(set(self.points)) != len(self.points):
            raise UsageError("the points of a correction chain must be distinct")
        if self.start in phi.forward:
            raise UsageError(f"chain start {self.start} is already matched")
        if self.end in phi.reverse:
            raise UsageError(f"chain end {self.end} is already hit")
        if not all(b in B.members for b in self.points[1::2]):
            raise UsageError("a chain visits a point outside B")
        if CorrectionChain.through(phi, self.points).name != self.name:
            raise UsageError("the chain name does not match its points")


class ExhaustionReport(NamedTuple):
    """the reachable part of the chain graph closed without a free point"""

    start: GroupElement
    reached: int
    depth: int
    closed: bool


def greedy_initial(
    inst: ComparisonInstance, E: Sequence[GroupElement]
) -> PartialBijection:
    """for each multiplier g in order, send every free a with g a free in B"""
    phi = PartialBijection(tuple(E))
    B = inst.B.members
    free_a = list(inst.A_core)
    for g in E:
        remaining = []
        for a in free_a:
            b = g * a
            if b in B and b not in phi.reverse:
                phi.assign(a, b)
            else:
                remaining.append(a)
        free_a = remaining
        trace("greedy step", g, "matched", len(phi))
    return phi


def _dashed(
    phi: PartialBijection, a: GroupElement, B: frozenset[GroupElement]
) -> Iterator[tuple[int, GroupElement]]:
    for idx, g in enumerate(phi.E):
        b = g * a
        if b in B:
            yield idx, b


def find_chain(
    phi: PartialBijection,
    a1: GroupElement,
    inst: ComparisonInstance,
    N: int,
) -> CorrectionChain | ExhaustionReport:
    """name-minimal chain among the shortest ones from a1, at most N steps"""
    if a1 in phi.forward:
        raise UsageError(f"{a1} is already matched")
    B = inst.B.members
    visited = {a1}
    layer: list[tuple[_t.ChainName, tuple[GroupElement, ...]]] = [((), (a1,))]
    for depth in range(1, N + 1):
        found: list[tuple[_t.ChainName, tuple[GroupElement, ...]]] = []
        nxt = []
        for name, points in sorted(layer):
            for idx, b in _dashed(phi, points[-1], B):
                if b in visited:
                    continue
                visited.add(b)
                owner = phi.reverse.get(b)
                if owner is None:
                    found.append((name + (idx,), points + (b,)))
                elif owner not in visited:
                    visited.add(owner)
                    q = phi.multiplier_index(owner)
                    nxt.append((name + (idx, q), points + (b, owner)))
        if found:
            name, points = min(found)
            return CorrectionChain(points, name)
        if not nxt:
            return ExhaustionReport(a1, len(visited), depth, closed=True)
        layer = nxt
    return ExhaustionReport(a1, len(visited), N, closed=False)


class GrowthCertificate(NamedTuple):
    """|(E²)ⁿ| ≤ constant·n^degree verified for n ≤ radius"""

    degree: int
    constant: Fraction
    radius: int
    extrapolates_from: int
    valid: bool


class ChainBound(NamedTuple):
    N: int
    radius: int
    sizes: tuple[int, ...]
    certificate: GrowthCertificate | None


def _power_sizes(E2: FiniteSubset, count: int, size_cap: int) -> list[int]:
    """|(E²)ⁿ| for n = 1..count, grown one frontier layer at a time

    stops early once the power outgrows ``size_cap``
    """
    spec = E2.spec
    mul = spec.family.mul
    steps = [g.form for g in E2.members]
    current = {g.form for g in E2.members}
    frontier = set(current)
    sizes = [len(current)]
    for n in range(2, count + 1):
        fresh = {mul(f, s) for f in frontier for s in steps} - current
        current |= fresh
        frontier = fresh
        if len(current) > size_cap:
            trace("(E²)^n outgrows the size cap at n =", n)
            break
        sizes.append(len(current))
    return sizes


def _certificate(
    sizes: Sequence[int], N: int, rate: Fraction
) -> GrowthCertificate | None:
    radius = len(sizes)
    if radius < 4:
        return None
    ns = np.arange(radius // 2, radius + 1, dtype=float)
    logs = np.log(np.array(sizes[radius // 2 - 1:], dtype=float))
    slope = float(np.polyfit(np.log(ns), logs, 1)[0])
    degree = max(0, math.ceil(slope - 0.05))
    constant = max(Fraction(s, n**degree) for n, s in enumerate(sizes, 1))
    log_rate = math.log(float(rate))
    start = max(N, math.ceil(degree / log_rate) if degree else N)
    valid = (
        math.log(float(constant)) + degree * math.log(start) < start * log_rate
    )
    return GrowthCertificate(degree, constant, radius, start, valid)


def _growth_rate(sizes: Sequence[int]) -> float:
    """log-growth per step over the second half of the explored powers"""
    reached = len(sizes)
    half = max(1, reached // 2)
    steps = max(1, reached - half)
    return (math.log(sizes[-1]) - math.log(sizes[half - 1])) / steps


def chain_bound_N(
    E: FiniteSubset,
    eps: object,
    spec: GroupSpec,
    cap: int = DEFAULT_CHAIN_CAP,
    size_cap: int = DEFAULT_BALL_CAP,
    limit: int = DEFAULT_CHAIN_LIMIT,
) -> ChainBound:
    """least N with |(E²)ⁿ| < (1 + eps)ⁿ for every n in [N, radius]

    the radius starts at ``cap`` and doubles, up to ``limit``, while the
    condition fails at the radius and the growth stays subexponential
    """
    bound = as_fraction(eps)
    if bound <= 0:
        raise UsageError(f"epsilon must be positive, got {bound}")
    if cap < 1:
        raise UsageError(f"cap must be positive, got {cap}")
    spec.check(E.first())
    E2 = product_set(E, E)
    num, den = bound.numerator, bound.denominator
    limit = max(limit, cap)
    radius = cap
    while True:
        sizes = _power_sizes(E2, radius, size_cap)
        holds = [s * den**n < (den + num) ** n for n, s in enumerate(sizes, 1)]
        reached = len(sizes)
        if reached == radius and holds[-1]:
            break
        rate = _growth_rate(sizes)
        exponential = rate >= math.log1p(float(bound))
        if reached == radius and not exponential and radius < limit:
            radius = min(2 * radius, limit)
            trace("chain bound unsettled, radius raised to", radius)
            continue
        message = (
            f"|(E²)ⁿ| < (1 + {format_fraction(bound)})ⁿ does not hold"
            f" up to n = {radius} (checked to {reached});"
            f" measured growth rate {rate:.4f} per step"
        )
        if exponential:
            raise HypothesisFailure(message + ", the growth is exponential", rate)
        hint = "raise ball_cap" if reached < radius else "raise the limit"
        raise ResourceError(f"{message}, {hint}", achieved=reached)
    N = radius
    while N > 1 and holds[N - 2]:
        N -= 1
    certificate = None
    if spec.family.name in ("zd", "heis3"):
        certificate = _certificate(sizes, N, 1 + bound)
    trace("chain bound", N, "radius", radius, "sizes", sizes[: N + 1], certificate)
    return ChainBound(N, radius, tuple(sizes), certificate)


def _enumerate_chains(
    phi: PartialBijection,
    starts: Sequence[GroupElement],
    B: frozenset[GroupElement],
    depth: int,
    max_paths: int,
) -> list[CorrectionChain]:
    chains: list[CorrectionChain] = []

    def extend(
        points: tuple[GroupElement, ...],
        name: _t.ChainName,
        visited: frozenset[GroupElement],
    ) -> None:
        steps = (len(points) + 1) // 2
        for idx, b in _dashed(phi, points[-1], B):
            if b in visited:
                continue
            owner = phi.reverse.get(b)
            if owner is None:
                chains.append(CorrectionChain(points + (b,), name + (idx,)))
                if len(chains) > max_paths:
                    raise ResourceError(
                        f"more than {max_paths} correction chains", achieved=len(chains)
                    )
            elif steps < depth and owner not in visited:
                q = phi.multiplier_index(owner)
                extend(points + (b, owner), name + (idx, q), visited | {b, owner})

    for a in starts:
        extend((a,), (), frozenset([a]))
    return chains


def minimal_chains(
    phi: PartialBijection,
    inst: ComparisonInstance,
    N: int,
    *,
    max_paths: int = DEFAULT_MAX_PATHS,
    threads: int = 1,
) -> list[CorrectionChain]:
    """chains colliding with no chain of strictly smaller name"""
    starts = [a for a in inst.A_core if a not in phi.forward]
    shortest = parallel_map(lambda a: find_chain(phi, a, inst, N), starts, threads)
    lengths = [len(c) // 2 for c in shortest if isinstance(c, CorrectionChain)]
    if not lengths:
        return []
    depth = max(lengths)
    live = [a for a, c in zip(starts, shortest) if isinstance(c, CorrectionChain)]
    chains = _enumerate_chains(phi, live, inst.B.members, depth, max_paths)
    chains.sort(key=lambda c: (name_key(c.name), inst.spec.order_key(c.start)))
    blocked: set[GroupElement] = set()
    chosen = []
    i = 0
    while i < len(chains):
        j = i
        key = name_key(chains[i].name)
        while j < len(chains) and name_key(chains[j].name) == key:
            j += 1
        group = chains[i:j]
        chosen.extend(c for c in group if blocked.isdisjoint(c.points))
        for c in group:
            blocked.update(c.points)
        i = j
    taken: set[GroupElement] = set()
    for c in chosen:
        if not taken.isdisjoint(c.points):
            raise InvariantViolation(f"minimal chains from {c.start} collide")
        taken.update(c.points)
    trace("minimal chains", len(chosen), "of", len(chains), "depth", depth)
    return chosen


def _shortcut(walk: Sequence[GroupElement]) -> tuple[GroupElement, ...]:
    """drop the loops of a walk, keeping its endpoints"""
    out: list[GroupElement] = []
    position: dict[GroupElement, int] = {}
    for x in walk:
        if x in position:
            cut = position[x]
            for y in out[cut + 1:]:
                del position[y]
            del out[cut + 1:]
        else:
            position[x] = len(out)
            out.append(x)
    return tuple(out)


def splice_chains(
    phi: PartialBijection, C: CorrectionChain, D: CorrectionChain
) -> CorrectionChain:
    """a strictly shorter chain colliding with C, from two equal-named chains"""
    if C.points == D.points or C.name != D.name or not C.collides(D):
        raise UsageError("splicing needs two distinct colliding chains of one name")
    where_d = {x: j for j, x in enumerate(D.points)}
    for i, x in enumerate(C.points):
        j = where_d.get(x)
        if j is None or i == j:
            continue
        if i < j:
            walk = C.points[: i + 1] + D.points[j + 1:]
        else:
            walk = D.points[: j + 1] + C.points[i + 1:]
        points = _shortcut(walk)
        if len(points) < len(C) and len(points) % 2 == 0:
            return CorrectionChain.through(phi, points)
    raise InvariantViolation("equal-named colliding chains share no shifted point")


def correct_along(
    phi: PartialBijection, C: CorrectionChain, B: FiniteSubset | None = None
) -> PartialBijection:
    """rewire phi so that aᵢ ↦ bᵢ along the chain"""
    if B is not None:
        C.validate(phi, B)
    elif C.start in phi.forward or C.end in phi.reverse:
        raise UsageError("the chain does not start free or end free")
    corrected = phi.copy()
    for a, b in C.pairs:
        if b * a.inverse() not in phi.index:
            raise UsageError(f"step {a} -> {b} uses a multiplier outside E")
        old = corrected.forward.get(a)
        if old is not None and corrected.reverse.get(old) == a:
            del corrected.reverse[old]
        corrected.assign(a, b)
    return corrected


class RoundRecord(NamedTuple):
    round: int
    domain: int
    chains: int
    max_len: int

    def to_line(self) -> str:
        return (
            f"round={self.round} domain={self.domain}"
            f" chains={self.chains} max_len={self.max_len}"
        )


@dataclasses.dataclass(frozen=True)
class SolveResult:
    phi: PartialBijection
    rounds: tuple[RoundRecord, ...]
    N: int
    E: FiniteSubset
    horizon: int
    margin_indeterminate: FiniteSubset
    log10_round_cap: float

    def trace_text(self) -> str:
        return "".join(f"{r.to_line()}\n" for r in self.rounds)

    def map_text(self) -> str:
        spec = self.E.spec
        fmt = spec.format_element
        lines = []
        for a in spec.sorted(self.phi.forward):
            lines.append(f"{fmt(a)} -> {fmt(self.phi.forward[a])}")
        return "".join(f"{line}\n" for line in lines)


def _log10_round_cap(size_E: int, N: int) -> float:
    """log10 of the round cap |E|^s + 1 with s = 2N·N·|E|^{2N}"""
    if size_E <= 1:
        return math.log10(2)
    log10_s = math.log10(2 * N * N) + 2 * N * math.log10(size_E)
    try:
        return 10.0**log10_s * math.log10(size_E)
    except OverflowError:
        return math.inf


def horizon_core(E: FiniteSubset, power: int, W: Window) -> FiniteSubset:
    """{g : (E ∪ {e})^power g ⊆ carrier}, shrinking the carrier step by step"""
    spec = W.spec
    mul = spec.family.mul
    steps = [g.form for g in (E | E.derive([spec.identity])).members]
    current = {g.form for g in W.carrier.members}
    for _ in range(power):
        kept = {f for f in current if all(mul(s, f) in current for s in steps)}
        if kept == current or not kept:
            current = kept
            break
        current = kept
    return W.carrier.derive(spec.wrap(f) for f in current)


def comparison_solve(
    inst: ComparisonInstance,
    E: FiniteSubset | None = None,
    *,
    N: int | None = None,
    chain_cap: int = DEFAULT_CHAIN_CAP,
    chain_limit: int = DEFAULT_CHAIN_LIMIT,
    max_paths: int = DEFAULT_MAX_PATHS,
    threads: int = 1,
) -> SolveResult:
    """greedy pass, then rounds of simultaneous minimal corrections"""
    if E is None:
        if inst.tiling is None:
            raise UsageError("no multiplier set given and no tiling to derive one")
        E = default_multipliers(inst.tiling)
    if N is None:
        N = chain_bound_N(E, inst.eps, inst.spec, chain_cap, limit=chain_limit).N
    violations = inst.advantage_violations()
    if violations:
        log.warning(
            "%d tiles lack the %s density advantage", len(violations),
            format_fraction(inst.eps),
        )
    order = E.elements
    phi = greedy_initial(inst, order)
    target = inst.A_core.members
    rounds = [RoundRecord(1, len(phi), 0, 0)]
    cap_log = _log10_round_cap(len(E), N)
    _check_round(phi, inst, set())
    while not target <= phi.forward.keys():
        chains = minimal_chains(phi, inst, N, max_paths=max_paths, threads=threads)
        if not chains:
            missing = min(target - phi.forward.keys(), key=inst.spec.order_key)
            report = find_chain(phi, missing, inst, N)
            raise HypothesisFailure(
                f"no correction chain of at most {2 * N} points reaches a free point"
                f" of B; {len(target - phi.forward.keys())} points stay unmatched",
                diagnostic=report,
            )
        before = set(phi.forward)
        for chain in chains:
            phi = correct_along(phi, chain)
        _check_round(phi, inst, before)
        record = RoundRecord(
            len(rounds) + 1, len(phi), len(chains), max(len(c) for c in chains)
        )
        rounds.append(record)
        trace(record.to_line())
        if len(rounds) > len(target) + 1 or math.log10(len(rounds)) > cap_log:
            raise HypothesisFailure(f"round cap reached after {len(rounds)} rounds")
    horizon = len(E) + 4 * N * len(rounds)
    safe = horizon_core(E, horizon, inst.W)
    indeterminate = inst.A_core - safe
    if indeterminate:
        log.info(
            "%d matched points lie within the E^%d horizon of the boundary",
            len(indeterminate), horizon,
        )
    return SolveResult(
        phi, tuple(rounds), N, E, horizon, indeterminate, cap_log
    )


def _check_round(
    phi: PartialBijection, inst: ComparisonInstance, before: set[GroupElement]
) -> None:
    problems = phi.check(inst.B)
    if not before <= phi.forward.keys():
        problems.append("the domain shrank")
    if before and len(phi.forward) <= len(before):
        problems.append("a round made no progress")
    if problems:
        raise InvariantViolation("; ".join(problems))


class OracleReport(NamedTuple):
    saturated: bool
    matched: int
    required: int


def matching_oracle(inst: ComparisonInstance, E: FiniteSubset) -> OracleReport:
    """maximum bipartite matching between A ∩ core and B along E-edges"""
    graph = nx.Graph()
    left = [("a", a) for a in inst.A_core]
    graph.add_nodes_from(left, bipartite=0)
    graph.add_nodes_from((("b", b) for b in inst.B), bipartite=1)
    B = inst.B.members
    for a in inst.A_core:
        for g in E:
            b = g * a
            if b in B:
                graph.add_edge(("a", a), ("b", b))
    matching = nx.bipartite.hopcroft_karp_matching(graph, top_nodes=left)
    matched = sum(1 for node in left if node in matching)
    return OracleReport(matched == len(left), matched, len(left))


def verify_block_code(
    solutions: Sequence[tuple[SymbolicArray, Mapping[GroupElement, GroupElement]]],
    F: FiniteSubset,
) -> RuleConflict | None:
    """None when equal F-patterns at matched points give equal multipliers"""

    def observations() -> Iterator[Observation]:
        for array, mapping in solutions:
            fits = array.window.core_for(F).members
            for a in array.spec.sorted(mapping):
                if a in fits:
                    yield Observation(array, a, mapping[a] * a.inverse())

    observed = list(observations())
    if not observed and any(mapping for _, mapping in solutions):
        raise UsageError("the horizon does not fit around any matched point")
    return check_local_rule(observed, F)
