"""
group families, finite subsets and the (K, eps)-invariance calculus

Elements are normal forms tagged with their family descriptor.  Every
enumeration in the package goes through :meth:`GroupSpec.order_key`, the
length-lexicographic canonical order: word length in the symmetric generator
set first, then a zigzag key of the normal form (0, 1, -1, 2, -2, ...).
"""
from __future__ import annotations

import dataclasses
import itertools
import threading
from fractions import Fraction
from functools import cached_property
from typing import Any
from typing import Iterable
from typing import Iterator
from typing import NamedTuple
from typing import Sequence

from . import _types as _t
from ._entrypoints import family_factory
from ._entrypoints import known_families
from ._errors import DomainError
from ._errors import ResourceError
from ._errors import UsageError
from .utils import as_fraction
from .utils import trace

DEFAULT_BALL_CAP = 2_000_000

_FAMILIES: dict[str, _t.GroupFamily] = {}


def _register(family: _t.GroupFamily) -> None:
    _FAMILIES.setdefault(family.describe(), family)


def _family(descriptor: str) -> _t.GroupFamily:
    try:
        return _FAMILIES[descriptor]
    except KeyError:
        return GroupSpec.parse(descriptor).family


def _zigzag(v: int) -> int:
    return 2 * v - 1 if v > 0 else -2 * v


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split())
    except ValueError as e:
        raise UsageError(f"malformed normal form {text!r}") from e


class GroupElement(NamedTuple):
    group: str
    form: _t.Form

    def __mul__(self, other: GroupElement) -> GroupElement:  # type: ignore[override]
        return multiply(self, other)

    def inverse(self) -> GroupElement:
        return GroupElement(self.group, _family(self.group).inv(self.form))

    def __str__(self) -> str:
        return _family(self.group).format_form(self.form)


@dataclasses.dataclass(frozen=True)
class FreeAbelian:
    """ℤᵈ with componentwise addition"""

    dim: int
    name = "zd"

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise UsageError(f"zd needs a positive dimension, got {self.dim}")
        _register(self)

    def describe(self) -> str:
        return f"zd:{self.dim}"

    def identity(self) -> _t.Form:
        return (0,) * self.dim

    def mul(self, a: _t.Form, b: _t.Form) -> _t.Form:
        return tuple(x + y for x, y in zip(a, b))

    def inv(self, a: _t.Form) -> _t.Form:
        return tuple(-x for x in a)

    def standard_generators(self) -> list[_t.Form]:
        return [
            tuple(1 if i == j else 0 for j in range(self.dim)) for i in range(self.dim)
        ]

    def validate(self, form: _t.Form) -> _t.Form:
        if len(form) != self.dim or not all(isinstance(v, int) for v in form):
            raise UsageError(f"{form!r} is not an element of {self.describe()}")
        return tuple(int(v) for v in form)

    def parse_form(self, text: str) -> _t.Form:
        return self.validate(_ints(text))

    def format_form(self, form: _t.Form) -> str:
        return " ".join(str(v) for v in form)

    def zigzag(self, form: _t.Form) -> tuple[int, ...]:
        return tuple(_zigzag(v) for v in form)

    def standard_word_length(self, form: _t.Form) -> int | None:
        return sum(abs(v) for v in form)


@dataclasses.dataclass(frozen=True)
class Heisenberg3:
    """integer upper unitriangular 3x3 matrices as (x, y, z) triples

    (x, y, z)(x', y', z') = (x + x', y + y', z + z' + x y')
    """

    name = "heis3"

    def __post_init__(self) -> None:
        _register(self)

    def describe(self) -> str:
        return "heis3"

    def identity(self) -> _t.Form:
        return (0, 0, 0)

    def mul(self, a: _t.Form, b: _t.Form) -> _t.Form:
        return (a[0] + b[0], a[1] + b[1], a[2] + b[2] + a[0] * b[1])

    def inv(self, a: _t.Form) -> _t.Form:
        return (-a[0], -a[1], -a[2] + a[0] * a[1])

    def standard_generators(self) -> list[_t.Form]:
        return [(1, 0, 0), (0, 1, 0)]

    def validate(self, form: _t.Form) -> _t.Form:
        if len(form) != 3 or not all(isinstance(v, int) for v in form):
            raise UsageError(f"{form!r} is not an element of heis3")
        return tuple(int(v) for v in form)

    def parse_form(self, text: str) -> _t.Form:
        return self.validate(_ints(text))

    def format_form(self, form: _t.Form) -> str:
        return " ".join(str(v) for v in form)

    def zigzag(self, form: _t.Form) -> tuple[int, ...]:
        return tuple(_zigzag(v) for v in form)

    def standard_word_length(self, form: _t.Form) -> int | None:
        return None


@dataclasses.dataclass(frozen=True)
class Lamplighter:
    """ℤ₂ ≀ ℤ as (cursor, sorted lit lamps)

    (c, S)(c', S') = (c + c', S △ (S' + c)); generators move ``t = (1, {})``
    and toggle ``a = (0, {0})``.
    """

    name = "lamplighter"

    def __post_init__(self) -> None:
        _register(self)

    def describe(self) -> str:
        return "lamplighter"

    def identity(self) -> _t.Form:
        return (0, ())

    def mul(self, a: _t.Form, b: _t.Form) -> _t.Form:
        shift = a[0]
        lamps = set(a[1]).symmetric_difference(s + shift for s in b[1])
        return (a[0] + b[0], tuple(sorted(lamps)))

    def inv(self, a: _t.Form) -> _t.Form:
        return (-a[0], tuple(sorted(s - a[0] for s in a[1])))

    def standard_generators(self) -> list[_t.Form]:
        return [(1, ()), (0, (0,))]

    def validate(self, form: _t.Form) -> _t.Form:
        if len(form) != 2 or not isinstance(form[0], int):
            raise UsageError(f"{form!r} is not an element of lamplighter")
        lamps = tuple(form[1])
        if not all(isinstance(s, int) for s in lamps):
            raise UsageError(f"{form!r} is not an element of lamplighter")
        if len(set(lamps)) != len(lamps):
            raise UsageError(f"lamp positions repeat in {form!r}")
        return (int(form[0]), tuple(sorted(lamps)))

    def parse_form(self, text: str) -> _t.Form:
        cursor, _, lamps = text.partition("|")
        parsed = _ints(cursor)
        if len(parsed) != 1:
            raise UsageError(f"malformed lamplighter element {text!r}")
        return self.validate((parsed[0], _ints(lamps)))

    def format_form(self, form: _t.Form) -> str:
        lamps = " ".join(str(s) for s in form[1])
        return f"{form[0]} | {lamps}" if lamps else f"{form[0]} |"

    def zigzag(self, form: _t.Form) -> tuple[int, ...]:
        return (_zigzag(form[0]), len(form[1])) + tuple(_zigzag(s) for s in form[1])

    def standard_word_length(self, form: _t.Form) -> int | None:
        cursor, lamps = form
        positions = [0, cursor, *lamps]
        lo, hi = min(positions), max(positions)
        return len(lamps) + 2 * (hi - lo) - abs(cursor)


class _SphereCache:
    """breadth-first spheres of the Cayley graph, grown on demand"""

    def __init__(self, identity: _t.Form) -> None:
        self.lengths: dict[_t.Form, int] = {identity: 0}
        self.frontier: list[_t.Form] = [identity]
        self.radius = 0
        self.lock = threading.Lock()


@dataclasses.dataclass(frozen=True)
class GroupSpec:
    family: _t.GroupFamily
    generators: tuple[_t.Form, ...] = ()
    symmetric_generators: tuple[_t.Form, ...] = dataclasses.field(
        init=False, compare=False, repr=False
    )
    _spheres: _SphereCache = dataclasses.field(
        init=False, compare=False, repr=False, hash=False
    )

    def __post_init__(self) -> None:
        family = self.family
        gens = tuple(family.validate(tuple(g)) for g in self.generators)
        if not gens:
            gens = tuple(family.standard_generators())
        closure: list[_t.Form] = []
        for g in itertools.chain(gens, (family.inv(g) for g in gens)):
            if g != family.identity() and g not in closure:
                closure.append(g)
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "symmetric_generators", tuple(closure))
        object.__setattr__(self, "_spheres", _SphereCache(family.identity()))

    @classmethod
    def parse(
        cls, descriptor: str, generators: Sequence[str] | None = None
    ) -> GroupSpec:
        name, _, arg = descriptor.strip().partition(":")
        factory = family_factory(name)
        if factory is None:
            raise UsageError(
                f"unknown group family {name!r}, known: {', '.join(known_families())}"
            )
        try:
            family = factory(int(arg)) if arg else factory()
        except (TypeError, ValueError) as e:
            raise UsageError(f"bad group descriptor {descriptor!r}: {e}") from e
        gens = tuple(family.parse_form(g) for g in generators or ())
        return cls(family, gens)

    @property
    def descriptor(self) -> str:
        return self.family.describe()

    @cached_property
    def uses_standard_generators(self) -> bool:
        return set(self.generators) == set(self.family.standard_generators())

    @property
    def identity(self) -> GroupElement:
        return GroupElement(self.descriptor, self.family.identity())

    def element(self, *parts: Any) -> GroupElement:
        return GroupElement(self.descriptor, self.family.validate(tuple(parts)))

    def wrap(self, form: _t.Form) -> GroupElement:
        return GroupElement(self.descriptor, form)

    def parse_element(self, text: str) -> GroupElement:
        return GroupElement(self.descriptor, self.family.parse_form(text))

    def format_element(self, g: GroupElement) -> str:
        return self.family.format_form(g.form)

    def check(self, g: GroupElement) -> GroupElement:
        if g.group != self.descriptor:
            raise UsageError(f"{g} belongs to {g.group}, not {self.descriptor}")
        return g

    def generator_elements(self) -> list[GroupElement]:
        return [self.wrap(g) for g in self.symmetric_generators]

    def _grow(self, radius: int, cap: int) -> None:
        cache = self._spheres
        with cache.lock:
            mul = self.family.mul
            while cache.radius < radius and cache.frontier:
                nxt: list[_t.Form] = []
                seen = cache.lengths
                fresh: dict[_t.Form, int] = {}
                for f in cache.frontier:
                    for s in self.symmetric_generators:
                        h = mul(f, s)
                        if h not in seen and h not in fresh:
                            fresh[h] = cache.radius + 1
                            nxt.append(h)
                if len(seen) + len(fresh) > cap:
                    raise ResourceError(
                        f"ball of {self.descriptor} exceeds {cap} elements"
                        f" beyond radius {cache.radius}",
                        achieved=cache.radius,
                    )
                seen.update(fresh)
                cache.frontier = nxt
                cache.radius += 1
            trace("ball grown", self.descriptor, cache.radius, len(cache.lengths))

    def word_length(self, g: GroupElement, cap: int = DEFAULT_BALL_CAP) -> int:
        if self.uses_standard_generators:
            closed = self.family.standard_word_length(g.form)
            if closed is not None:
                return closed
        cache = self._spheres
        while g.form not in cache.lengths:
            if not cache.frontier:
                raise UsageError(f"{g} is not generated by {self.generators}")
            self._grow(cache.radius + 1, cap)
        return cache.lengths[g.form]

    def order_key(self, g: GroupElement) -> tuple[int, tuple[int, ...]]:
        return (self.word_length(g), self.family.zigzag(g.form))

    def sorted(self, elements: Iterable[GroupElement]) -> list[GroupElement]:
        return sorted(elements, key=self.order_key)

    def ball_forms(self, n: int, cap: int = DEFAULT_BALL_CAP) -> list[_t.Form]:
        self._grow(n, cap)
        cache = self._spheres
        with cache.lock:
            lengths = list(cache.lengths.items())
        return [f for f, length in lengths if length <= n]


@dataclasses.dataclass(frozen=True)
class FiniteSubset:
    """a finite set of elements, iterated in canonical order"""

    spec: GroupSpec
    members: frozenset[GroupElement]

    @classmethod
    def of(cls, spec: GroupSpec, elements: Iterable[GroupElement]) -> FiniteSubset:
        members = frozenset(elements)
        for g in members:
            spec.check(g)
        return cls(spec, members)

    @classmethod
    def from_forms(cls, spec: GroupSpec, forms: Iterable[Any]) -> FiniteSubset:
        family = spec.family
        desc = spec.descriptor
        return cls(
            spec,
            frozenset(GroupElement(desc, family.validate(tuple(f))) for f in forms),
        )

    @classmethod
    def from_text(cls, spec: GroupSpec, text: str) -> FiniteSubset:
        lines = (line.strip() for line in text.splitlines())
        return cls(
            spec,
            frozenset(
                spec.parse_element(line)
                for line in lines
                if line and not line.startswith("#")
            ),
        )

    def to_text(self) -> str:
        return "".join(f"{self.spec.format_element(g)}\n" for g in self.elements)

    @cached_property
    def elements(self) -> tuple[GroupElement, ...]:
        return tuple(self.spec.sorted(self.members))

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[GroupElement]:
        return iter(self.elements)

    def __contains__(self, g: object) -> bool:
        return g in self.members

    def __bool__(self) -> bool:
        return bool(self.members)

    def _same(self, other: FiniteSubset) -> frozenset[GroupElement]:
        if other.spec.descriptor != self.spec.descriptor:
            raise UsageError(
                f"mixing subsets of {self.spec.descriptor} and {other.spec.descriptor}"
            )
        return other.members

    def derive(self, members: Iterable[GroupElement]) -> FiniteSubset:
        return FiniteSubset(self.spec, frozenset(members))

    def __or__(self, other: FiniteSubset) -> FiniteSubset:
        return self.derive(self.members | self._same(other))

    def __and__(self, other: FiniteSubset) -> FiniteSubset:
        return self.derive(self.members & self._same(other))

    def __sub__(self, other: FiniteSubset) -> FiniteSubset:
        return self.derive(self.members - self._same(other))

    def __xor__(self, other: FiniteSubset) -> FiniteSubset:
        return self.derive(self.members ^ self._same(other))

    def __le__(self, other: FiniteSubset) -> bool:
        return self.members <= self._same(other)

    def isdisjoint(self, other: FiniteSubset) -> bool:
        return self.members.isdisjoint(self._same(other))

    def inverse(self) -> FiniteSubset:
        inv = self.spec.family.inv
        return self.derive(GroupElement(g.group, inv(g.form)) for g in self.members)

    def right_translate(self, g: GroupElement) -> FiniteSubset:
        """the set F g"""
        self.spec.check(g)
        mul = self.spec.family.mul
        return self.derive(
            GroupElement(g.group, mul(f.form, g.form)) for f in self.members
        )

    def left_translate(self, g: GroupElement) -> FiniteSubset:
        """the set g F"""
        self.spec.check(g)
        mul = self.spec.family.mul
        return self.derive(
            GroupElement(g.group, mul(g.form, f.form)) for f in self.members
        )

    def first(self) -> GroupElement:
        if not self.members:
            raise DomainError("empty set has no canonical minimum")
        return min(self.members, key=self.spec.order_key)


def multiply(g: GroupElement, h: GroupElement) -> GroupElement:
    if g.group != h.group:
        raise UsageError(f"cannot multiply {g.group} by {h.group} elements")
    return GroupElement(g.group, _family(g.group).mul(g.form, h.form))


def product_set(K: FiniteSubset, F: FiniteSubset) -> FiniteSubset:
    """the set KF"""
    if not K or not F:
        raise UsageError("product_set needs nonempty factors")
    F._same(K)
    mul = K.spec.family.mul
    desc = K.spec.descriptor
    return K.derive(
        GroupElement(desc, mul(k.form, f.form)) for k in K.members for f in F.members
    )


def k_core(F: FiniteSubset, K: FiniteSubset) -> FiniteSubset:
    """{f in F : Kf ⊆ F}"""
    F._same(K)
    mul = F.spec.family.mul
    desc = F.spec.descriptor
    members = F.members
    return F.derive(
        f
        for f in members
        if all(GroupElement(desc, mul(k.form, f.form)) in members for k in K.members)
    )


def invariance_ratio(F: FiniteSubset, K: FiniteSubset) -> Fraction:
    """|KF △ F| / |F|"""
    if not F:
        raise DomainError("invariance of the empty set is undefined")
    return Fraction(len(product_set(K, F) ^ F), len(F))


def _check_epsilon(eps: object, name: str = "epsilon") -> Fraction:
    value = as_fraction(eps)
    if not 0 < value < 1:
        raise UsageError(f"{name} must lie in (0, 1), got {value}")
    return value


def is_invariant(F: FiniteSubset, K: FiniteSubset, eps: object) -> bool:
    bound = _check_epsilon(eps)
    return invariance_ratio(F, K) < bound


def ball(spec: GroupSpec, n: int, cap: int = DEFAULT_BALL_CAP) -> FiniteSubset:
    """(R ∪ R⁻¹ ∪ {e})ⁿ"""
    if n < 0:
        raise UsageError(f"ball radius must be nonnegative, got {n}")
    return FiniteSubset(spec, frozenset(spec.wrap(f) for f in spec.ball_forms(n, cap)))


def box(spec: GroupSpec, lo: Sequence[int], hi: Sequence[int]) -> FiniteSubset:
    """the inclusive integer box [lo, hi] of ℤᵈ"""
    if spec.family.name != "zd":
        raise UsageError(f"boxes exist only in zd groups, not {spec.descriptor}")
    if len(lo) != len(hi) or len(lo) != spec.family.dim:  # type: ignore[attr-defined]
        raise UsageError(f"box corners {lo}, {hi} do not match {spec.descriptor}")
    ranges = [range(a, b + 1) for a, b in zip(lo, hi)]
    desc = spec.descriptor
    return FiniteSubset(
        spec, frozenset(GroupElement(desc, p) for p in itertools.product(*ranges))
    )


def modification_ratio(F: FiniteSubset, F_prime: FiniteSubset) -> Fraction:
    if not F:
        raise DomainError("modification of the empty set is undefined")
    return Fraction(len(F ^ F_prime), len(F))


def is_modification(F: FiniteSubset, F_prime: FiniteSubset, eps: object) -> bool:
    """whether F' is an eps-modification of F"""
    return modification_ratio(F, F_prime) < as_fraction(eps)


def is_fraction_subset(F_prime: FiniteSubset, F: FiniteSubset, delta: object) -> bool:
    """F' ⊆ F holding at least a delta share of F"""
    return F_prime <= F and len(F_prime) >= as_fraction(delta) * len(F)


def core_defect_holds(F: FiniteSubset, K: FiniteSubset, eps: object) -> bool:
    """a (K, eps)-invariant set loses at most |K| eps |F| points to its K-core"""
    bound = as_fraction(eps)
    return len(F - k_core(F, K)) <= len(K) * bound * len(F)


def sandwich_bound_holds(
    F: FiniteSubset, F_prime: FiniteSubset, K: FiniteSubset, eps: object
) -> bool:
    """F_K ⊆ F' ⊆ KF puts F' within (|K| + 1) eps of F"""
    if not (k_core(F, K) <= F_prime <= product_set(K, F)):
        raise UsageError("F' is not sandwiched between the K-core and KF")
    return modification_ratio(F, F_prime) <= (len(K) + 1) * as_fraction(eps)


def single_translate_bound_holds(F: FiniteSubset, K: FiniteSubset, eps: object) -> bool:
    """(K, eps)-invariance gives |gF △ F| < 2 eps |F| for every g in K"""
    bound = 2 * as_fraction(eps)
    return all(
        Fraction(len(F.left_translate(g) ^ F), len(F)) < bound for g in K.members
    )


def modified_invariance_bound(K: FiniteSubset, eps: object, delta: object) -> Fraction:
    """invariance constant of a delta-modification of a (K, eps)-invariant set"""
    e = as_fraction(eps)
    d = as_fraction(delta)
    if not 0 <= d < 1:
        raise UsageError(f"delta must lie in [0, 1), got {d}")
    return (len(K) * d + d + e) / (1 - d)
