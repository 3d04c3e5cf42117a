"""
Følner sequences and Banach densities on finite windows

Every "inf over g ∈ G" becomes a minimum over the translates ``Fg`` that
fit inside the window carrier.  Densities are exact fractions.
"""
from __future__ import annotations

import dataclasses
from fractions import Fraction
from functools import cached_property
from typing import Callable
from typing import Iterable
from typing import Sequence

from ._errors import DomainError
from ._errors import InvariantViolation
from ._errors import MarginError
from ._errors import UnsupportedError
from ._errors import UsageError
from .groups import ball
from .groups import box
from .groups import FiniteSubset
from .groups import GroupElement
from .groups import GroupSpec
from .groups import is_invariant
from .groups import product_set
from .utils import as_fraction
from .utils import format_fraction
from .utils import parallel_map
from .utils import trace

#: Shulman constant every Følner sequence reaches along a subsequence
TEMPERED_CONSTANT = Fraction(2)


@dataclasses.dataclass
class FolnerSequence:
    spec: GroupSpec
    term: Callable[[int], FiniteSubset]
    centered: bool = False
    nested: bool = False
    symmetric: bool = False
    _terms: dict[int, FiniteSubset] = dataclasses.field(
        default_factory=dict, repr=False, compare=False
    )

    def __getitem__(self, n: int) -> FiniteSubset:
        if n < 1:
            raise UsageError(f"Følner terms are indexed from 1, got {n}")
        if n not in self._terms:
            self._terms[n] = self.term(n)
        return self._terms[n]

    def terms(self, up_to: int) -> list[FiniteSubset]:
        return [self[n] for n in range(1, up_to + 1)]

    def verify_flags(self, up_to: int) -> list[str]:
        """declared flags that fail on the first ``up_to`` terms"""
        failures = []
        e = self.spec.identity
        for n in range(1, up_to + 1):
            F = self[n]
            if self.centered and e not in F:
                failures.append(f"F_{n} misses the identity")
            if self.symmetric and F.inverse() != F:
                failures.append(f"F_{n} is not symmetric")
            if self.nested and not F <= self[n + 1]:
                failures.append(f"F_{n} is not inside F_{n + 1}")
        return failures

    def first_invariant_index(
        self, K: FiniteSubset, eps: object, limit: int
    ) -> int | None:
        for n in range(1, limit + 1):
            if is_invariant(self[n], K, eps):
                return n
        return None


def folner_boxes(spec: GroupSpec) -> FolnerSequence:
    family = spec.family.name
    if family == "zd":
        dim: int = spec.family.dim  # type: ignore[attr-defined]

        def term(n: int) -> FiniteSubset:
            return box(spec, [-n] * dim, [n] * dim)

    elif family == "heis3":

        def term(n: int) -> FiniteSubset:
            return ball(spec, n)

    else:
        raise UnsupportedError(f"no symmetric Følner boxes ship for {spec.descriptor}")
    return FolnerSequence(spec, term, centered=True, nested=True, symmetric=True)


def _union_inverse_products(
    heads: Iterable[FiniteSubset], target: FiniteSubset
) -> FiniteSubset:
    union = target.derive(())
    for F in heads:
        union = union | product_set(F.inverse(), target)
    return union


def check_tempered(seq: FolnerSequence, up_to: int) -> tuple[bool, Fraction]:
    """the least C with |⋃_{i≤n} F_i⁻¹F_{n+1}| ≤ C|F_{n+1}| for n < up_to"""
    if up_to < 2:
        raise UsageError(f"check_tempered needs up_to >= 2, got {up_to}")
    worst = Fraction(0)
    for n in range(1, up_to):
        target = seq[n + 1]
        union = _union_inverse_products(seq.terms(n), target)
        worst = max(worst, Fraction(len(union), len(target)))
    trace("tempered constant", format_fraction(worst), "up to", up_to)
    return worst <= TEMPERED_CONSTANT, worst


def tempered_subsequence(seq: FolnerSequence, count: int, limit: int) -> list[int]:
    """indices of a subsequence meeting the Shulman condition with C = 2"""
    chosen = [1]
    m = 1
    while len(chosen) < count:
        m += 1
        if m > limit:
            raise DomainError(
                f"no tempered continuation after index {chosen[-1]} below {limit}"
            )
        target = seq[m]
        union = _union_inverse_products((seq[i] for i in chosen), target)
        if len(union) <= TEMPERED_CONSTANT * len(target):
            chosen.append(m)
    return chosen


@dataclasses.dataclass(frozen=True)
class Window:
    """a finite carrier plus the shape whose translates must fit inside it"""

    carrier: FiniteSubset
    margin_shape: FiniteSubset

    def __post_init__(self) -> None:
        self.carrier._same(self.margin_shape)
        if not self.margin_shape:
            raise UsageError("the margin shape of a window must be nonempty")
        if not self.core:
            raise MarginError(
                f"no translate of the {len(self.margin_shape)}-element margin shape"
                f" fits inside the {len(self.carrier)}-element carrier"
            )

    @property
    def spec(self) -> GroupSpec:
        return self.carrier.spec

    @classmethod
    def box(
        cls,
        spec: GroupSpec,
        lo: Sequence[int],
        hi: Sequence[int],
        margin: FiniteSubset | None = None,
    ) -> Window:
        carrier = box(spec, lo, hi)
        if margin is None:
            margin = carrier.derive([spec.identity])
        return cls(carrier, margin)

    @classmethod
    def ball(
        cls, spec: GroupSpec, radius: int, margin: FiniteSubset | None = None
    ) -> Window:
        carrier = ball(spec, radius)
        if margin is None:
            margin = carrier.derive([spec.identity])
        return cls(carrier, margin)

    def with_margin(self, margin: FiniteSubset) -> Window:
        return Window(self.carrier, margin)

    @cached_property
    def core(self) -> FiniteSubset:
        """{g : margin_shape·g ⊆ carrier}"""
        return self.core_for(self.margin_shape)

    def core_for(self, L: FiniteSubset) -> FiniteSubset:
        """{g : L g ⊆ carrier}"""
        if not L:
            raise UsageError("core of an empty shape is the whole group")
        spec = self.spec
        mul = spec.family.mul
        inv = spec.family.inv
        desc = spec.descriptor
        anchor = L.first().form
        anchor_inv = inv(anchor)
        # far elements first: most candidates fail on them
        checks = sorted(
            (s.form for s in L.members),
            key=lambda f: -spec.word_length(GroupElement(desc, f)),
        )
        carrier = {g.form for g in self.carrier.members}
        found = []
        for c in carrier:
            g = mul(anchor_inv, c)
            if all(mul(s, g) in carrier for s in checks):
                found.append(GroupElement(desc, g))
        return self.carrier.derive(found)

    def admissible(self, F: FiniteSubset) -> tuple[GroupElement, ...]:
        """translates g with Fg inside the carrier, in canonical order"""
        return self.core_for(F).elements


@dataclasses.dataclass(frozen=True)
class DensityReport:
    lower: Fraction
    upper: Fraction
    advantage: Fraction | None = None
    witness: tuple[GroupElement, ...] = ()

    def __post_init__(self) -> None:
        if not 0 <= self.lower <= self.upper <= 1:
            raise DomainError(f"inconsistent densities {self.lower}, {self.upper}")

    def to_record(self) -> str:
        advantage = "-" if self.advantage is None else format_fraction(self.advantage)
        witness = " ; ".join(str(g) for g in self.witness)
        return (
            f"lower: {format_fraction(self.lower)}\n"
            f"upper: {format_fraction(self.upper)}\n"
            f"advantage: {advantage}\n"
            f"witness: {witness}\n"
        )


def _require_margin(F: FiniteSubset, W: Window) -> None:
    if not F <= W.margin_shape:
        raise UsageError("the averaging shape must lie inside the window margin shape")


def _counts(
    B: FiniteSubset, F: FiniteSubset, translates: Sequence[GroupElement], threads: int
) -> list[int]:
    members = B.members

    def count(g: GroupElement) -> int:
        return sum(1 for x in F.right_translate(g).members if x in members)

    return parallel_map(count, translates, threads)


def _translates(F: FiniteSubset, W: Window) -> tuple[GroupElement, ...]:
    translates = W.admissible(F)
    if not translates:
        raise DomainError("no translate of the shape fits inside the window carrier")
    return translates


def density_window(
    B: FiniteSubset, F: FiniteSubset, W: Window, threads: int = 1
) -> DensityReport:
    """lower and upper Banach density of B with respect to F on the window"""
    _require_margin(F, W)
    translates = _translates(F, W)
    counts = _counts(B, F, translates, threads)
    low = min(range(len(counts)), key=counts.__getitem__)
    high = max(range(len(counts)), key=lambda i: (counts[i], -i))
    size = len(F)
    trace("density over", len(translates), "translates", counts[low], counts[high])
    return DensityReport(
        Fraction(counts[low], size),
        Fraction(counts[high], size),
        witness=(translates[low], translates[high]),
    )


def advantage_window(
    B: FiniteSubset, A: FiniteSubset, F: FiniteSubset, W: Window, threads: int = 1
) -> Fraction:
    """min over admissible g of (|B ∩ Fg| - |A ∩ Fg|) / |F|"""
    if not A.isdisjoint(B):
        raise UsageError("A and B overlap, split them before comparing densities")
    _require_margin(F, W)
    return _advantage(B, A, F, _translates(F, W), threads)


def _advantage(
    B: FiniteSubset,
    A: FiniteSubset,
    F: FiniteSubset,
    translates: Sequence[GroupElement],
    threads: int = 1,
) -> Fraction:
    gains = _counts(B, F, translates, threads)
    losses = _counts(A, F, translates, threads)
    return Fraction(min(b - a for b, a in zip(gains, losses)), len(F))


def uniform_density(
    configurations: Sequence[FiniteSubset], F: FiniteSubset, W: Window
) -> DensityReport:
    """inf of lower and sup of upper densities over a configuration family"""
    if not configurations:
        raise DomainError("empty configuration family")
    reports = [density_window(B, F, W) for B in configurations]
    low = min(reports, key=lambda r: r.lower)
    high = max(reports, key=lambda r: r.upper)
    witness = (low.witness[0], high.witness[1])
    return DensityReport(low.lower, high.upper, witness=witness)


def is_separated(C: FiniteSubset, F: FiniteSubset) -> bool:
    """whether the translates Fc, c in C, are pairwise disjoint"""
    seen: set[GroupElement] = set()
    for c in C:
        tile = F.right_translate(c).members
        if not seen.isdisjoint(tile):
            return False
        seen.update(tile)
    return True


def is_syndetic(A: FiniteSubset, U: FiniteSubset, region: FiniteSubset) -> bool:
    """whether Ug meets A for every g in the region"""
    members = A.members
    return all(
        not members.isdisjoint(U.right_translate(g).members) for g in region
    )


def maximal_separated(F: FiniteSubset, W: Window) -> FiniteSubset:
    """greedy maximal F-separated subset of the window core

    the result is checked to be F⁻¹F-syndetic in the core
    """
    if W.spec.identity not in F:
        raise UsageError("maximal_separated needs a shape containing the identity")
    occupied: set[GroupElement] = set()
    chosen = []
    for c in W.core:
        tile = F.right_translate(c).members
        if occupied.isdisjoint(tile):
            chosen.append(c)
            occupied.update(tile)
    C = W.core.derive(chosen)
    if not is_syndetic(C, product_set(F.inverse(), F), W.core):
        raise InvariantViolation("a maximal F-separated set is not F⁻¹F-syndetic")
    return C


def check_bdc(
    B: FiniteSubset,
    A: FiniteSubset,
    F: FiniteSubset,
    F1: FiniteSubset,
    eps: object,
    W: Window,
) -> bool:
    """advantage over F1 is at least the advantage over F minus 4 eps

    the F1 statistic ranges over the translates g whose whole F F1 g
    neighbourhood fits the carrier, so every F-translate it averages over
    is admissible
    """
    bound = as_fraction(eps)
    if not is_invariant(F1, F, bound):
        raise UsageError("F1 is not (F, eps)-invariant")
    if not A.isdisjoint(B):
        raise UsageError("A and B overlap, split them before comparing densities")
    FF1 = product_set(F, F1)
    _require_margin(FF1, W)
    coarse = _advantage(B, A, F, _translates(F, W))
    inner = W.core_for(FF1).elements
    fine = _advantage(B, A, F1, inner)
    trace("bdc", format_fraction(fine), ">=", format_fraction(coarse), "-4*", bound)
    return fine >= coarse - 4 * bound


@dataclasses.dataclass(frozen=True)
class PeriodicSet:
    """points of ℤᵈ whose residue modulo ``period`` is listed"""

    spec: GroupSpec
    period: tuple[int, ...]
    residues: frozenset[tuple[int, ...]]

    def __post_init__(self) -> None:
        if self.spec.family.name != "zd":
            raise UsageError(f"periodic sets need zd, not {self.spec.descriptor}")
        dim: int = self.spec.family.dim  # type: ignore[attr-defined]
        if len(self.period) != dim or any(p < 1 for p in self.period):
            raise UsageError(f"bad period {self.period} for {self.spec.descriptor}")
        reduced = frozenset(
            tuple(v % p for v, p in zip(r, self.period)) for r in self.residues
        )
        if any(len(r) != dim for r in self.residues):
            raise UsageError(f"residues do not match the period {self.period}")
        object.__setattr__(self, "residues", reduced)

    @property
    def density(self) -> Fraction:
        cells = 1
        for p in self.period:
            cells *= p
        return Fraction(len(self.residues), cells)

    def __contains__(self, g: object) -> bool:
        if not isinstance(g, GroupElement):
            return False
        return tuple(v % p for v, p in zip(g.form, self.period)) in self.residues

    def restrict(self, region: FiniteSubset) -> FiniteSubset:
        return region.derive(g for g in region.members if g in self)
