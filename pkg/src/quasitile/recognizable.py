"""
recognizable sets and families

A family A₁..A_k is recognizable when ``A_i g = A_j`` forces ``i = j`` and
``g = e``.  Placed translates of such a family can be read back from their
union as long as the placements keep clear of the family margin.
"""
from __future__ import annotations

import dataclasses
import itertools
from functools import cached_property
from typing import Iterator
from typing import Sequence

from ._errors import InvariantViolation
from ._errors import UsageError
from .groups import ball
from .groups import FiniteSubset
from .groups import GroupElement
from .groups import GroupSpec
from .groups import product_set
from .utils import trace


def canonical_elements(spec: GroupSpec) -> Iterator[GroupElement]:
    """all group elements in canonical order, sphere by sphere"""
    seen: frozenset[GroupElement] = frozenset()
    for radius in itertools.count():
        current = ball(spec, radius).members
        yield from spec.sorted(current - seen)
        seen = current


def _triple(A: FiniteSubset, B: FiniteSubset, C: FiniteSubset) -> FiniteSubset:
    return product_set(product_set(A, B.inverse()), C)


def make_recognizable_origin(A: FiniteSubset) -> FiniteSubset:
    """A plus the first element outside A A⁻¹ A"""
    if len(A) < 2:
        return A
    blocked = _triple(A, A, A).members
    g = next(g for g in canonical_elements(A.spec) if g not in blocked)
    trace("recognizable origin", g)
    return A | A.derive([g])


@dataclasses.dataclass(frozen=True)
class RecognizableFamily:
    sets: tuple[FiniteSubset, ...]
    added: tuple[GroupElement, ...]

    @cached_property
    def margin(self) -> FiniteSubset:
        """⋃ A′⁻¹ A A⁻¹ A″ over the members"""
        union = self.sets[0].derive(())
        for A in self.sets:
            inner = product_set(A, A.inverse())
            for left, right in itertools.product(self.sets, repeat=2):
                union = union | product_set(product_set(left.inverse(), inner), right)
        return union

    def __len__(self) -> int:
        return len(self.sets)


def make_recognizable_family(As: Sequence[FiniteSubset]) -> RecognizableFamily:
    """add to each set an element that keeps every translate distinguishable"""
    if not As:
        raise UsageError("an empty family cannot be made recognizable")
    sizes = {len(A) for A in As}
    if len(sizes) != 1:
        raise UsageError(f"family members need equal sizes, got {sorted(sizes)}")
    if sizes == {1}:
        raise UsageError("family members need at least two elements")
    spec = As[0].spec
    added: list[GroupElement] = []
    for i, A in enumerate(As):
        blocked = set(_triple(A, A, A).members)
        for Aj, gj in zip(As[:i], added):
            single = Aj.derive([gj])
            blocked |= product_set(product_set(single, Aj.inverse()), A).members
            blocked |= product_set(product_set(Aj, single.inverse()), A).members
        added.append(next(g for g in canonical_elements(spec) if g not in blocked))
    sets = tuple(A | A.derive([g]) for A, g in zip(As, added))
    trace("recognizable family", [str(g) for g in added])
    return RecognizableFamily(sets, tuple(added))


def translations_between(A: FiniteSubset, B: FiniteSubset) -> list[GroupElement]:
    """every g with A g = B"""
    if len(A) != len(B) or not A:
        return []
    a0 = A.first()
    candidates = B.left_translate(a0.inverse())
    return [g for g in candidates if A.right_translate(g) == B]


def is_recognizable(sets: Sequence[FiniteSubset]) -> bool:
    """exact check through the finitely many candidate translations"""
    e = sets[0].spec.identity
    for (i, A), (j, B) in itertools.product(enumerate(sets), repeat=2):
        for g in translations_between(A, B):
            if i != j or g != e:
                return False
    return True


def brute_force_recognizable(sets: Sequence[FiniteSubset], radius: int) -> bool:
    """the defining property checked over every h of the ball"""
    spec = sets[0].spec
    e = spec.identity
    for h in ball(spec, radius):
        for (i, A), (j, B) in itertools.product(enumerate(sets), repeat=2):
            if (i, h) != (j, e) and A.right_translate(h) == B:
                return False
    return True


def _placed_union(
    fam: RecognizableFamily, placements: Sequence[tuple[int, GroupElement]]
) -> frozenset[GroupElement]:
    return frozenset().union(
        *(fam.sets[i].right_translate(g).members for i, g in placements)
    )


def find_placements(
    fam: RecognizableFamily, ones: frozenset[GroupElement], spec: GroupSpec
) -> list[tuple[int, GroupElement]]:
    """every (i, x) with A_i x inside ``ones``"""
    found = []
    for i, A in enumerate(fam.sets):
        a0 = A.first()
        candidates = {a0.inverse() * y for y in ones}
        for x in spec.sorted(candidates):
            if A.right_translate(x).members <= ones:
                found.append((i, x))
    return found


def check_fully_recognizable(
    fam: RecognizableFamily, placements: Sequence[tuple[int, GroupElement]]
) -> bool:
    """placement quotients avoid the margin, then confirmed on the union"""
    margin = fam.margin.members
    for (_, g), (_, h) in itertools.combinations(placements, 2):
        if g * h.inverse() in margin or h * g.inverse() in margin:
            return False
    if not placements:
        return True
    spec = fam.sets[0].spec
    union = _placed_union(fam, placements)
    found = find_placements(fam, union, spec)
    if set(found) != {(i, g) for i, g in placements}:
        raise InvariantViolation(
            "placements clear of the margin still admit a foreign copy"
        )
    return True
