from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from quasitile._errors import DomainError
from quasitile._errors import UsageError
from quasitile.density import Window
from quasitile.entropy import block_entropy
from quasitile.entropy import build_oracle
from quasitile.entropy import ceil_power_of_two
from quasitile.entropy import center_frequency_identity
from quasitile.entropy import check_oracle_condition
from quasitile.entropy import check_slack_condition
from quasitile.entropy import check_tiled_monotonicity
from quasitile.entropy import check_word_count_condition
from quasitile.entropy import Concatenation
from quasitile.entropy import concatenations
from quasitile.entropy import dynamical_entropy_estimate
from quasitile.entropy import EmpiricalMeasure
from quasitile.entropy import extract_rectangles
from quasitile.entropy import layered_array
from quasitile.entropy import min_alphabet
from quasitile.entropy import Oracle
from quasitile.entropy import Partition
from quasitile.entropy import Rectangle
from quasitile.entropy import rectangle_measure
from quasitile.entropy import shannon_entropy
from quasitile.entropy import snap
from quasitile.entropy import tiled_entropy
from quasitile.groups import box
from quasitile.groups import FiniteSubset
from quasitile.groups import GroupSpec
from quasitile.quasitiling import adjust_centers
from quasitile.quasitiling import build_congruent_system
from quasitile.quasitiling import lattice_tiling
from quasitile.quasitiling import TilingSystemWindow
from quasitile.symbolic import SymbolicArray


def interval(spec: GroupSpec, lo: int, hi: int) -> FiniteSubset:
    return box(spec, [lo], [hi])


def alternating(Z: GroupSpec, hi: int = 99) -> SymbolicArray:
    W = Window.box(Z, [0], [hi])
    return SymbolicArray.from_function(W, (0, 1), lambda g: g.form[0] % 2)


def lattice_system(W: Window, *sides: int) -> TilingSystemWindow:
    levels = [lattice_tiling(W.spec, [side], W) for side in sides]
    levels[0] = adjust_centers(levels[0])
    return build_congruent_system(levels, W)


def rect(size: int, tag: int = 0, shape: int = 0, level: int = 1) -> Rectangle:
    return Rectangle(level, shape, size, tuple((tag,) for _ in range(size)))


@pytest.mark.parametrize(
    "dist, expected",
    [
        pytest.param([Fraction(1, 4)] * 4, 2.0, id="uniform"),
        pytest.param([Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)], 1.5, id="skew"),
        pytest.param({"a": 1, "b": 0}, 0.0, id="point"),
    ],
)
def test_shannon_entropy(dist: object, expected: float) -> None:
    assert shannon_entropy(dist) == expected


def test_shannon_entropy_rejects_non_distributions() -> None:
    with pytest.raises(DomainError, match="sum"):
        shannon_entropy([0.5, 0.4])
    with pytest.raises(DomainError, match="negative"):
        shannon_entropy([1.5, -0.5])


def test_empirical_measure() -> None:
    mu = EmpiricalMeasure.of("aabc")
    assert mu.total == 4
    assert mu.probability("a") == Fraction(1, 2)
    assert mu.probability("z") == 0
    assert mu.entropy() == pytest.approx(1.5)
    nu = EmpiricalMeasure.of("abcc")
    assert mu.total_variation(nu) == Fraction(1, 4)
    assert (mu + nu).counts == {"a": 3, "b": 2, "c": 3}
    with pytest.raises(DomainError):
        EmpiricalMeasure({}).probability("a")
    with pytest.raises(DomainError):
        EmpiricalMeasure({"a": -1})


def test_block_entropy_of_periodic_words(Z: GroupSpec) -> None:
    z = alternating(Z)
    P = Partition.at_identity(Z)
    for n in (1, 4, 9):
        H = block_entropy(z, P, interval(Z, 0, n - 1))
        assert H == pytest.approx(1.0, abs=1e-3)
    constant = SymbolicArray.constant(z.window, (0, 1), 0)
    assert block_entropy(constant, P, interval(Z, 0, 5)) == 0.0


def test_dynamical_estimate_decreases(Z: GroupSpec) -> None:
    z = alternating(Z)
    P = Partition.at_identity(Z)
    terms = [interval(Z, 0, n - 1) for n in (1, 2, 4, 8)]
    estimate = dynamical_entropy_estimate(z, P, terms)
    assert estimate.values == pytest.approx([1.0, 0.5, 0.25, 0.125], abs=1e-3)
    assert estimate.estimate == pytest.approx(0.125, abs=1e-3)
    assert estimate.to_record().splitlines()[0].startswith("term=1 size=1 ")
    with pytest.raises(UsageError):
        dynamical_entropy_estimate(z, P, [])


def test_fair_coin_has_one_bit(Z: GroupSpec) -> None:
    W = Window.box(Z, [0], [9_999])
    z = SymbolicArray.random(W, (0, 1), seed=2)
    P = Partition.at_identity(Z)
    assert block_entropy(z, P, interval(Z, 0, 0)) == pytest.approx(1.0, abs=1e-3)
    assert block_entropy(z, P, interval(Z, 0, 2)) / 3 == pytest.approx(1.0, abs=1e-2)


def test_partition_join_and_atoms(Z: GroupSpec) -> None:
    z = alternating(Z, 19)
    P = Partition.at_identity(Z)
    Q = Partition.of(interval(Z, 0, 1))
    assert P.atoms(z) == 2
    assert Q.atoms(z) == 2
    assert P.join(Q).horizon == interval(Z, 0, 1)
    with pytest.raises(UsageError):
        Partition.of(interval(Z, 0, 1) - interval(Z, 0, 1))


def test_tiled_entropy_of_alternating_word(Z: GroupSpec) -> None:
    z = alternating(Z)
    P = Partition.at_identity(Z)
    W = z.window
    # tiles of even length all start on an even cell
    assert tiled_entropy(z, lattice_tiling(Z, [4], W), P) == 0.0
    assert tiled_entropy(z, lattice_tiling(Z, [5], W), P) == pytest.approx(0.2)
    assert tiled_entropy(z, lattice_tiling(Z, [5], W), P, given=P) == pytest.approx(
        0.0
    )


@given(st.integers(0, 10_000))
def test_tiled_entropy_decreases_along_the_system(seed: int) -> None:
    Z = GroupSpec.parse("zd:1")
    W = Window.box(Z, [0], [199])
    system = lattice_system(W, 5, 25)
    x = SymbolicArray.random(W, (0, 1), seed)
    report = check_tiled_monotonicity(x, system, Partition.at_identity(Z))
    assert report.monotone
    assert report.covered == (1, 1)
    assert report.tolerances == (0.0,)
    assert report.above_estimate == ()


def test_monotonicity_record(Z: GroupSpec) -> None:
    W = Window.box(Z, [0], [199])
    system = lattice_system(W, 5, 25)
    x = SymbolicArray.random(W, (0, 1), 4)
    P = Partition.at_identity(Z)
    terms = [interval(Z, 0, n - 1) for n in (1, 2, 4)]
    report = check_tiled_monotonicity(x, system, P, terms)
    assert report.estimate is not None
    assert len(report.above_estimate) == 2
    record = report.to_record()
    assert record.startswith("level=1 value=")
    assert "tolerance 1->2=0.000000000000\n" in record
    assert record.endswith("monotone=True\n")


def test_layered_array(Z: GroupSpec) -> None:
    W = Window.box(Z, [0], [49])
    system = lattice_system(W, 5, 25)
    z = layered_array(alternating(Z, 49), system.levels)
    assert z[Z.element(25)] == (1, 0, 0)
    assert z[Z.element(5)] == (1, 0, -1)
    assert z[Z.element(6)] == (0, -1, -1)


def test_rectangles(Z: GroupSpec) -> None:
    W = Window.box(Z, [0], [99])
    system = lattice_system(W, 5, 25)
    z = layered_array(alternating(Z), system.levels)
    plain = extract_rectangles(z, system, 1)
    assert len(plain) == 2
    assert sum(len(cs) for cs in plain.values()) == 20
    extended = extract_rectangles(z, system, 1, extended=True)
    assert len(extended) == 4
    R = next(iter(plain))
    assert R.size == 5
    assert len(R.contents[0]) == 2
    c = plain[R][0]
    mu = rectangle_measure(R, z, system, c, Partition.at_identity(Z, [0]))
    assert mu.total == 5
    with pytest.raises(UsageError):
        extract_rectangles(z, system, 2, extended=True)
    with pytest.raises(UsageError):
        extract_rectangles(z, system, 3)


@given(st.integers(0, 10_000))
def test_center_frequency_identity(seed: int) -> None:
    Z = GroupSpec.parse("zd:1")
    W = Window.box(Z, [0], [199])
    system = lattice_system(W, 5, 25)
    x = SymbolicArray.random(W, (0, 1, 2), seed)
    z = layered_array(x, system.levels)
    left, right = center_frequency_identity(z, system, 1)
    assert abs(left - right) < 1e-9


@pytest.mark.parametrize(
    "exponent, expected",
    [
        pytest.param(Fraction(0), 1, id="zero"),
        pytest.param(Fraction(2), 4, id="integer"),
        pytest.param(Fraction(1, 2), 2, id="root"),
        pytest.param(Fraction(10, 3), 11, id="cube-root"),
        pytest.param(Fraction(3, 1), 8, id="exact"),
    ],
)
def test_ceil_power_of_two(exponent: Fraction, expected: int) -> None:
    assert ceil_power_of_two(exponent) == expected


@given(st.fractions(min_value=0, max_value=40, max_denominator=50))
def test_ceil_power_of_two_brackets(exponent: Fraction) -> None:
    value = ceil_power_of_two(exponent)
    p, q = exponent.numerator, exponent.denominator
    assert value**q >= 2**p
    assert (value - 1) ** q < 2**p


def test_snap() -> None:
    assert snap(0.1) == Fraction(1, 10)
    assert snap(Fraction(1, 3)) == Fraction(1, 3)
    assert snap(Fraction(1, 10**7 + 1)).denominator <= 10**6


def test_oracle_values() -> None:
    R, S, T = rect(10), rect(2), rect(7)
    O = build_oracle([R, S, T], {R: Fraction(3, 10), S: 1, T: 0})
    assert (O[R], O[S], O[T]) == (8, 4, 1)
    with pytest.raises(UsageError, match="no g-value"):
        build_oracle([R], {})
    with pytest.raises(DomainError):
        build_oracle([R], {R: -1})
    with pytest.raises(UsageError, match="no value"):
        O[rect(3)]
    assert len(O.to_text().splitlines()) == 3


def test_oracle_condition() -> None:
    R1, R2 = rect(2, 0), rect(3, 1)
    upper = rect(5, 0, level=2)
    D = Concatenation(0, (R1, R2))
    ok = Oracle({R1: 2, R2: 3, upper: 5})
    check = check_oracle_condition(ok, {D: {upper}})
    assert check.holds
    assert check.worst == Fraction(5, 6)
    assert check.witness is None
    bad = Oracle({R1: 2, R2: 3, upper: 7})
    check = check_oracle_condition(bad, {D: {upper}})
    assert not check.holds
    assert check.worst == Fraction(7, 6)
    assert check.witness == D


def test_slack_and_word_count() -> None:
    R, S = rect(10), rect(3)
    g = {R: Fraction(3, 10), S: Fraction(1, 2)}
    O = build_oracle([R, S], g)
    assert check_slack_condition(O, g, 0) == [S]
    assert check_slack_condition(O, g, 1) == []
    upper = rect(4, level=2)
    inventory = {Concatenation(0, (rect(2), rect(2, 1))): {upper}}
    assert check_word_count_condition(inventory, {upper: 1}, {0: 4}, 0.1) == {0: True}
    assert check_word_count_condition(inventory, {upper: 0}, {0: 4}, 0) == {0: False}


@pytest.mark.parametrize(
    "shape_size, budgets, expected",
    [
        pytest.param(3, [20], 3, id="cube"),
        pytest.param(2, [12, 13], 5, id="square"),
        pytest.param(4, [1], 1, id="single"),
    ],
)
def test_min_alphabet(shape_size: int, budgets: list, expected: int) -> None:
    Z = GroupSpec.parse("zd:1")
    rects = [rect(shape_size, tag) for tag in range(len(budgets))]
    O = Oracle(dict(zip(rects, budgets)))
    assignment = min_alphabet([interval(Z, 0, shape_size - 1)], O)
    assert assignment.size == expected
    seen = set()
    for R, family in assignment.families.items():
        assert len(family) == O[R]
        assert seen.isdisjoint(family)
        seen.update(family)


def test_deterministic_concatenations(Z: GroupSpec) -> None:
    W = Window.box(Z, [0], [199])
    system = lattice_system(W, 5, 25)
    z = layered_array(SymbolicArray.random(W, (0, 1), 6), system.levels)
    inventory = concatenations(z, system, 1)
    assert inventory
    assert all(len(rects) == 1 for rects in inventory.values())

    level1 = list(extract_rectangles(z, system, 1))
    level2 = list(extract_rectangles(z, system, 2))
    full = build_oracle(level1 + level2, {R: 1 for R in level1 + level2})
    check = check_oracle_condition(full, inventory)
    assert check.holds
    assert check.worst == 1

    skewed = {R: Fraction(1, 2) for R in level1}
    skewed.update({R: 1 for R in level2})
    check = check_oracle_condition(build_oracle(level1 + level2, skewed), inventory)
    assert not check.holds
    assert check.witness is not None
    assert check.worst > 1
    with pytest.raises(UsageError):
        concatenations(z, system, 2)


@given(
    seed=st.integers(0, 2**16),
    first=st.integers(1, 4),
    shift=st.integers(0, 6),
    second=st.integers(1, 4),
)
def test_block_entropy_is_subadditive(
    seed: int, first: int, shift: int, second: int
) -> None:
    Z = GroupSpec.parse("zd:1")
    W = Window.box(Z, [0], [199])
    z = SymbolicArray.random(W, (0, 1), seed=seed, weights=[0.7, 0.3])
    P = Partition.at_identity(Z)
    F1 = interval(Z, 0, first - 1)
    F2 = interval(Z, shift, shift + second - 1)
    where = list(P.positions(z, F1 | F2))
    joint = block_entropy(z, P, F1 | F2, positions=where)
    parts = block_entropy(z, P, F1, positions=where) + block_entropy(
        z, P, F2, positions=where
    )
    assert joint <= parts + 1e-9
