from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import assume
from hypothesis import given
from hypothesis import strategies as st

from quasitile._errors import UsageError
from quasitile.groups import ball
from quasitile.groups import box
from quasitile.groups import core_defect_holds
from quasitile.groups import FiniteSubset
from quasitile.groups import GroupSpec
from quasitile.groups import invariance_ratio
from quasitile.groups import is_fraction_subset
from quasitile.groups import is_invariant
from quasitile.groups import is_modification
from quasitile.groups import k_core
from quasitile.groups import modification_ratio
from quasitile.groups import modified_invariance_bound
from quasitile.groups import product_set
from quasitile.groups import sandwich_bound_holds
from quasitile.groups import single_translate_bound_holds
from quasitile.utils import parallel_map


def ints(spec: GroupSpec, *values: int) -> FiniteSubset:
    return FiniteSubset.from_forms(spec, [(v,) for v in values])


def interval(spec: GroupSpec, lo: int, hi: int) -> FiniteSubset:
    return box(spec, [lo], [hi])


heis_forms = st.tuples(
    st.integers(-5, 5), st.integers(-5, 5), st.integers(-20, 20)
)
lamp_forms = st.tuples(
    st.integers(-4, 4),
    st.sets(st.integers(-4, 4), max_size=4).map(lambda s: tuple(sorted(s))),
)


def test_zd_multiplication(Z2: GroupSpec) -> None:
    assert Z2.element(1, 2) * Z2.element(3, -1) == Z2.element(4, 1)


def test_heisenberg_matches_matrices(H: GroupSpec) -> None:
    assert H.element(1, 0, 0) * H.element(0, 1, 0) == H.element(1, 1, 1)
    assert H.element(0, 1, 0) * H.element(1, 0, 0) == H.element(1, 1, 0)


@given(heis_forms, heis_forms)
def test_heisenberg_product_is_matrix_product(a: tuple, b: tuple) -> None:
    H = GroupSpec.parse("heis3")

    def matrix(f: tuple) -> list[list[int]]:
        x, y, z = f
        return [[1, x, z], [0, 1, y], [0, 0, 1]]

    def matmul(p: list[list[int]], q: list[list[int]]) -> list[list[int]]:
        return [
            [sum(p[i][k] * q[k][j] for k in range(3)) for j in range(3)]
            for i in range(3)
        ]

    product = H.wrap(a) * H.wrap(b)
    assert matrix(product.form) == matmul(matrix(a), matrix(b))


@pytest.mark.parametrize(
    "descriptor, strategy",
    [
        pytest.param("heis3", heis_forms, id="heis3"),
        pytest.param("lamplighter", lamp_forms, id="lamplighter"),
    ],
)
@given(data=st.data())
def test_group_laws(
    descriptor: str, strategy: st.SearchStrategy, data: st.DataObject
) -> None:
    spec = GroupSpec.parse(descriptor)
    a, b, c = (spec.wrap(data.draw(strategy)) for _ in range(3))
    e = spec.identity
    assert (a * b) * c == a * (b * c)
    assert a * a.inverse() == e == a.inverse() * a
    assert a * e == a == e * a


def test_identity_law(Z: GroupSpec, H: GroupSpec, L: GroupSpec) -> None:
    for spec, parts in [(Z, (7,)), (H, (2, -1, 4)), (L, (3, (0, 2)))]:
        g = spec.element(*parts)
        assert g * spec.identity == g


def test_mixing_groups_is_refused(Z: GroupSpec, Z2: GroupSpec) -> None:
    with pytest.raises(UsageError, match="cannot multiply"):
        Z.element(1) * Z2.element(1, 1)
    with pytest.raises(UsageError, match="mixing subsets"):
        ints(Z, 0) | box(Z2, [0, 0], [1, 1])


@pytest.mark.parametrize(
    "descriptor, text, form",
    [
        pytest.param("zd:2", "3 -4", (3, -4), id="zd"),
        pytest.param("heis3", "1 2 -3", (1, 2, -3), id="heis3"),
        pytest.param("lamplighter", "2 | 3 -1", (2, (-1, 3)), id="lamps"),
        pytest.param("lamplighter", "-1 |", (-1, ()), id="dark"),
    ],
)
def test_parse_and_format_elements(descriptor: str, text: str, form: tuple) -> None:
    spec = GroupSpec.parse(descriptor)
    g = spec.parse_element(text)
    assert g.form == form
    assert spec.parse_element(spec.format_element(g)) == g
    assert spec.descriptor == descriptor


@pytest.mark.parametrize("descriptor", ["zd:0", "zd:x", "free:2", "heis3:2"])
def test_bad_descriptors(descriptor: str) -> None:
    with pytest.raises(UsageError):
        GroupSpec.parse(descriptor)


def test_canonical_order_zigzags(Z: GroupSpec) -> None:
    assert [g.form[0] for g in ball(Z, 2)] == [0, 1, -1, 2, -2]


def test_word_length_closed_forms(Z2: GroupSpec) -> None:
    assert Z2.word_length(Z2.element(3, -4)) == 7


def test_lamplighter_word_length_matches_search(L: GroupSpec) -> None:
    # ball() always grows breadth first, word_length uses the closed form
    previous = ball(L, 0)
    for n in range(1, 6):
        current = ball(L, n)
        for g in current - previous:
            assert L.word_length(g) == n
        previous = current


def test_lamplighter_ball_growth(L: GroupSpec) -> None:
    sizes = [len(ball(L, n)) for n in range(5)]
    assert sizes[:3] == [1, 4, 10]
    assert all(b > a for a, b in zip(sizes, sizes[1:]))


def test_non_standard_generators_use_search() -> None:
    spec = GroupSpec.parse("zd:1", ["2", "3"])
    assert not spec.uses_standard_generators
    assert spec.word_length(spec.element(1)) == 2
    assert spec.word_length(spec.element(5)) == 2


@pytest.mark.parametrize(
    "K, F, expected",
    [
        pytest.param((0,), (3, 4, 9), (3, 4, 9), id="identity"),
        pytest.param((0, 1), (0, 1, 2), (0, 1, 2, 3), id="interval"),
    ],
)
def test_product_set_integers(
    Z: GroupSpec, K: tuple, F: tuple, expected: tuple
) -> None:
    assert product_set(ints(Z, *K), ints(Z, *F)) == ints(Z, *expected)


def test_product_set_heisenberg_balls(H: GroupSpec) -> None:
    B1 = ball(H, 1)
    pairs = {a * b for a in B1 for b in B1}
    assert product_set(B1, B1).members == pairs
    assert product_set(B1, B1) == ball(H, 2)


def test_product_set_order_matters(H: GroupSpec) -> None:
    K = FiniteSubset.of(H, [H.element(1, 0, 0)])
    F = FiniteSubset.of(H, [H.element(0, 1, 0)])
    assert product_set(K, F) != product_set(F, K)


def test_k_core(Z: GroupSpec, Z2: GroupSpec) -> None:
    assert k_core(interval(Z, 0, 9), ints(Z, 0, 1)) == interval(Z, 0, 8)
    F = interval(Z, 4, 11)
    assert k_core(F, ints(Z, 0)) == F
    K2 = FiniteSubset.from_forms(Z2, [(0, 0), (1, 0), (0, 1)])
    assert k_core(box(Z2, [0, 0], [4, 4]), K2) == box(Z2, [0, 0], [3, 3])


def test_invariance(Z: GroupSpec) -> None:
    assert invariance_ratio(interval(Z, 0, 99), ints(Z, 0, 1)) == Fraction(1, 100)
    assert is_invariant(interval(Z, 0, 99), ints(Z, 0, 1), 0.02)
    assert invariance_ratio(interval(Z, 0, 9), ints(Z, 0, 5)) == Fraction(1, 2)
    assert not is_invariant(interval(Z, 0, 9), ints(Z, 0, 5), 0.3)
    assert is_invariant(ints(Z, 3, 17), ints(Z, 0), Fraction(1, 10**9))


def test_invariance_needs_epsilon_in_range(Z: GroupSpec) -> None:
    with pytest.raises(UsageError):
        is_invariant(interval(Z, 0, 9), ints(Z, 0, 1), 0)


def test_modifications(Z: GroupSpec) -> None:
    F = interval(Z, 0, 9)
    F_prime = interval(Z, 1, 10)
    assert modification_ratio(F, F_prime) == Fraction(1, 5)
    assert is_modification(F, F_prime, Fraction(1, 4))
    assert not is_modification(F, F_prime, Fraction(1, 5))
    assert is_fraction_subset(interval(Z, 0, 4), F, Fraction(1, 2))
    assert not is_fraction_subset(interval(Z, 0, 3), F, Fraction(1, 2))
    assert not is_fraction_subset(F_prime, F, Fraction(1, 10))


shape_and_shift = st.tuples(
    st.integers(5, 40),
    st.sets(st.integers(-3, 3), min_size=1, max_size=4),
)


@given(shape_and_shift, st.sets(st.integers(-10, 50), max_size=6))
def test_invariance_facts(params: tuple, flips: set) -> None:
    Z = GroupSpec.parse("zd:1")
    length, offsets = params
    F = interval(Z, 0, length - 1)
    K = ints(Z, *offsets)
    eps = invariance_ratio(F, K)
    assert core_defect_holds(F, K, eps)
    assert single_translate_bound_holds(F, K, eps + Fraction(1, 1000))

    F_prime = F ^ ints(Z, *flips) if flips else F
    assume(F_prime)
    delta = modification_ratio(F, F_prime)
    assume(delta < 1)
    assert invariance_ratio(F_prime, K) <= modified_invariance_bound(K, eps, delta)


@given(shape_and_shift, st.sets(st.integers(-5, 50), max_size=8))
def test_sandwich_bound(params: tuple, extra: set) -> None:
    Z = GroupSpec.parse("zd:1")
    length, offsets = params
    F = interval(Z, 0, length - 1)
    K = ints(Z, 0, *offsets)
    KF = product_set(K, F)
    F_prime = k_core(F, K) | (ints(Z, *extra) & KF) if extra else k_core(F, K)
    assert sandwich_bound_holds(F, F_prime, K, invariance_ratio(F, K))


def test_sandwich_needs_the_sandwich(Z: GroupSpec) -> None:
    with pytest.raises(UsageError, match="sandwiched"):
        sandwich_bound_holds(interval(Z, 0, 9), ints(Z, 100), ints(Z, 0, 1), 0.1)


def test_text_round_trip(L: GroupSpec) -> None:
    S = ball(L, 2)
    assert FiniteSubset.from_text(L, S.to_text()) == S
    assert S.to_text().splitlines()[0] == "0 |"


def test_translations(H: GroupSpec) -> None:
    F = ball(H, 1)
    g = H.element(2, 3, 1)
    assert F.right_translate(g).members == {f * g for f in F}
    assert F.left_translate(g).members == {g * f for f in F}
    assert F.inverse() == F


def test_balls_grow_safely_across_threads() -> None:
    shared = GroupSpec.parse("heis3")
    radii = [1, 2, 3, 4, 5, 6] * 4
    sizes = parallel_map(lambda n: len(shared.ball_forms(n)), radii, 8)
    fresh = GroupSpec.parse("heis3")
    assert sizes == [len(fresh.ball_forms(n)) for n in radii]
