from __future__ import annotations

import dataclasses
import logging
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from quasitile._errors import HypothesisFailure
from quasitile._errors import UsageError
from quasitile.density import Window
from quasitile.groups import ball
from quasitile.groups import box
from quasitile.groups import FiniteSubset
from quasitile.groups import GroupSpec
from quasitile.quasitiling import adjust_centers
from quasitile.quasitiling import build_congruent_system
from quasitile.quasitiling import centers_separated
from quasitile.quasitiling import check_center_syndetic
from quasitile.quasitiling import check_congruent_system
from quasitile.quasitiling import check_properties
from quasitile.quasitiling import construct_epsilon_quasitiling
from quasitile.quasitiling import disjointify
from quasitile.quasitiling import eps_disjoint_witness
from quasitile.quasitiling import lattice_tiling
from quasitile.quasitiling import Quasitiling
from quasitile.quasitiling import recover_order_tags
from quasitile.quasitiling import schedule_pass
from quasitile.quasitiling import TileKey


def interval(spec: GroupSpec, lo: int, hi: int) -> FiniteSubset:
    return box(spec, [lo], [hi])


def overlapping_pair(Z: GroupSpec) -> Quasitiling:
    e0, e5 = Z.element(0), Z.element(5)
    return Quasitiling(
        Z,
        (interval(Z, 0, 9),),
        (FiniteSubset.of(Z, [e0, e5]),),
        tags={TileKey(0, e0): (1, 1), TileKey(0, e5): (1, 1)},
        primary={TileKey(0, e0): True, TileKey(0, e5): True},
    )


def test_lattice_tiling_is_a_tiling(Z: GroupSpec) -> None:
    W = Window.box(Z, [0], [99])
    T = lattice_tiling(Z, [5], W)
    assert [c.form[0] for c in T.centers[0]] == list(range(0, 100, 5))
    record = check_properties(T, interval(Z, 0, 1), Fraction(1, 4), W)
    assert record.invariant
    assert record.disjoint and record.eps_disjoint
    assert record.alpha == 1
    assert record.tiling
    assert record.core_defect == Fraction(8, 100)
    assert "alpha: 1\n" in record.to_record()
    assert centers_separated(T, interval(Z, 0, 4))
    assert not centers_separated(T, interval(Z, 0, 5))


def test_lattice_needs_zd(H: GroupSpec) -> None:
    W = Window.ball(H, 1)
    with pytest.raises(UsageError, match="zd"):
        lattice_tiling(H, [2, 2, 2], W)


def test_to_text(Z: GroupSpec) -> None:
    T = lattice_tiling(Z, [5], Window.box(Z, [0], [9]))
    assert T.to_text() == "shape 0: 0 ; 1 ; 2 ; 3 ; 4\ncenter 0: 0\ncenter 0: 5\n"
    assert overlapping_pair(Z).to_text().splitlines()[1:] == [
        "center 0: 0 tag 1 1 primary",
        "center 0: 5 tag 1 1 primary",
    ]


def test_from_tiles_matches_lattice(Z: GroupSpec) -> None:
    T = Quasitiling.from_tiles(
        Z,
        [(interval(Z, 0, 4), Z.element(0)), (interval(Z, 5, 9), Z.element(5))],
    )
    assert len(T.shapes) == 1
    assert T == lattice_tiling(Z, [5], Window.box(Z, [0], [9]))


def test_shared_centers_are_refused(Z: GroupSpec) -> None:
    C = FiniteSubset.of(Z, [Z.element(0)])
    with pytest.raises(UsageError, match="shared"):
        Quasitiling(Z, (interval(Z, 0, 1), interval(Z, 0, 2)), (C, C))


def test_shift_moves_every_tile(Z: GroupSpec) -> None:
    T = overlapping_pair(Z)
    g = Z.element(3)
    moved = T.shift(g)
    assert moved.union == T.union.right_translate(g)
    assert moved.tags is not None
    assert set(moved.tags) == {TileKey(0, Z.element(3)), TileKey(0, Z.element(8))}


@pytest.mark.parametrize(
    "eps, expected",
    [
        pytest.param(Fraction(1, 2), True, id="half"),
        pytest.param(Fraction(1, 4), False, id="quarter"),
    ],
)
def test_overlap_and_eps_disjointness(
    Z: GroupSpec, eps: Fraction, expected: bool
) -> None:
    T = overlapping_pair(Z)
    assert not T.is_disjoint()
    assert (eps_disjoint_witness(T, eps) is not None) is expected


def test_construction_reaches_the_covering_target(Z: GroupSpec) -> None:
    W = Window.box(Z, [0], [499])
    pool = [interval(Z, 0, 24), interval(Z, 0, 4)]
    eps = Fraction(1, 5)
    T = construct_epsilon_quasitiling(pool, eps, W)
    record = check_properties(T, interval(Z, 0, 1), eps, W)
    assert record.eps_disjoint
    assert record.covering
    assert not T.diagnostic
    assert check_center_syndetic(T, W.margin_shape, W)


def test_construction_reports_a_missed_target(
    Z: GroupSpec, caplog: pytest.LogCaptureFixture
) -> None:
    W = Window.box(Z, [0], [39])
    pool = [FiniteSubset.from_forms(Z, [(0,), (1,), (3,)])]
    with caplog.at_level(logging.WARNING, logger="quasitile"):
        T = construct_epsilon_quasitiling(pool, Fraction(1, 10), W)
    assert "below the target 9/10" in T.diagnostic
    assert "below the target" in caplog.text
    record = check_properties(T, interval(Z, 0, 1), Fraction(1, 10), W)
    assert not record.covering
    assert record.eps_disjoint


def test_construction_rejects_bad_input(Z: GroupSpec) -> None:
    W = Window.box(Z, [0], [49])
    with pytest.raises(UsageError, match="epsilon"):
        construct_epsilon_quasitiling([interval(Z, 0, 4)], 1, W)
    with pytest.raises(UsageError, match="identity"):
        construct_epsilon_quasitiling([interval(Z, 1, 4)], 0.5, W)
    with pytest.raises(UsageError, match="largest-first"):
        construct_epsilon_quasitiling([interval(Z, 0, 1), interval(Z, 0, 4)], 0.5, W)
    with pytest.raises(UsageError):
        construct_epsilon_quasitiling([], 0.5, W)


def test_non_nested_pool_warns(Z: GroupSpec) -> None:
    W = Window.box(Z, [0], [49])
    pool = [interval(Z, 0, 9), interval(Z, -1, 0)]
    with pytest.warns(UserWarning, match="not nested"):
        construct_epsilon_quasitiling(pool, 0.5, W)


def test_heisenberg_construction(H: GroupSpec) -> None:
    W = Window.ball(H, 3)
    T = construct_epsilon_quasitiling([ball(H, 1)], Fraction(1, 2), W)
    assert len(T) > 0
    assert check_properties(T, ball(H, 1), Fraction(1, 2), W).eps_disjoint


def test_schedule_pass() -> None:
    assert [schedule_pass(p, 3) for p in range(6)] == [1, 2, 3, 1, 2, 3]
    assert [schedule_pass(p, 3, 1) for p in range(3)] == [2, 3, 1]
    assert schedule_pass(7, 1, 5) == 1


@given(
    st.integers(2, 5),
    st.integers(2, 4),
    st.integers(1, 3),
    st.integers(0, 5),
    st.sampled_from([Fraction(1, 10), Fraction(1, 5), Fraction(1, 3)]),
)
def test_constructions_are_eps_disjoint(
    small: int, factor: int, passes: int, offset: int, eps: Fraction
) -> None:
    Z = GroupSpec.parse("zd:1")
    W = Window.box(Z, [0], [4 * small * factor + 17])
    pool = [interval(Z, 0, small * factor - 1), interval(Z, 0, small - 1)]
    T = construct_epsilon_quasitiling(
        pool, eps, W, passes=passes, schedule_offset=offset
    )
    assert eps_disjoint_witness(T, eps) is not None
    assert T.tags is not None and T.primary is not None
    stripped = dataclasses.replace(T, tags=None)
    recovered = recover_order_tags(
        stripped, W, passes=passes, schedule_offset=offset
    )
    assert recovered.tags == T.tags


def test_recover_order_tags_needs_primariness(Z: GroupSpec) -> None:
    W = Window.box(Z, [0], [9])
    with pytest.raises(UsageError, match="primariness"):
        recover_order_tags(lattice_tiling(Z, [5], W), W)


def test_disjointify_and_adjust(Z: GroupSpec) -> None:
    T = overlapping_pair(Z)
    D = disjointify(T)
    assert D.is_disjoint()
    assert D.union == T.union
    assert D.tile(TileKey(0, Z.element(0))) == interval(Z, 0, 9)
    assert D.tile(TileKey(1, Z.element(5))) == interval(Z, 10, 14)
    assert D.sources[TileKey(1, Z.element(5))] == TileKey(0, Z.element(5))

    A = adjust_centers(D)
    assert A.shapes[1] == interval(Z, 0, 4)
    assert A.tile(TileKey(1, Z.element(10))) == interval(Z, 10, 14)
    assert A.union == T.union
    assert all(key.center in tile for key, tile in A.tile_map.items())
    assert A.sources[TileKey(1, Z.element(10))] == TileKey(0, Z.element(5))


def test_disjointify_needs_tags(Z: GroupSpec) -> None:
    T = dataclasses.replace(overlapping_pair(Z), tags=None)
    with pytest.raises(UsageError, match="order tags"):
        disjointify(T)
    with pytest.raises(UsageError, match="disjoint"):
        adjust_centers(T)


def test_constructed_tiling_disjointified(Z: GroupSpec) -> None:
    W = Window.box(Z, [0], [199])
    pool = [interval(Z, 0, 14), interval(Z, 0, 2)]
    T = construct_epsilon_quasitiling(pool, Fraction(1, 4), W, passes=2)
    D = adjust_centers(disjointify(T))
    assert D.is_disjoint()
    assert D.union == T.union
    assert len(D) == len(T)


def test_congruent_lattice_system(Z: GroupSpec) -> None:
    W = Window.box(Z, [0], [99])
    levels = [
        adjust_centers(lattice_tiling(Z, [5], W)),
        lattice_tiling(Z, [25], W),
    ]
    system = build_congruent_system(levels, W)
    assert system.depth == 2
    top = system.levels[1]
    assert top.shapes == (interval(Z, 0, 24),)
    assert [c.form[0] for c in top.centers[0]] == [0, 25, 50, 75]
    relative = [(s, g.form[0]) for s, g in system.decompositions[0][0]]
    assert relative == [(0, 0), (0, 5), (0, 10), (0, 15), (0, 20)]
    parts = system.congruence_maps[0][TileKey(0, Z.element(25))]
    assert {k.center.form[0] for k in parts} == {25, 30, 35, 40, 45}
    assert check_congruent_system(system) == []


def test_regrouped_translates_share_a_shape(Z: GroupSpec, Z2: GroupSpec) -> None:
    W = Window.box(Z, [-100], [99])
    levels = [
        adjust_centers(lattice_tiling(Z, [5], W)),
        lattice_tiling(Z, [25], W),
    ]
    system = build_congruent_system(levels, W)
    top = system.levels[1]
    assert top.shapes == (interval(Z, 0, 24),)
    assert sorted(c.form[0] for c in top.centers[0]) == list(range(-100, 100, 25))
    assert check_congruent_system(system) == []

    W2 = Window.box(Z2, [-6, -6], [5, 5])
    plane = [
        adjust_centers(lattice_tiling(Z2, [2, 2], W2)),
        lattice_tiling(Z2, [6, 6], W2),
    ]
    upper = build_congruent_system(plane, W2).levels[1]
    assert len(upper.shapes) == 1
    assert {c.form for c in upper.centers[0]} == {(-6, -6), (-6, 0), (0, -6), (0, 0)}


def test_uncovered_center_breaks_the_system(Z: GroupSpec) -> None:
    W = Window.box(Z, [0], [99])
    lower = lattice_tiling(Z, [5], W)
    upper = Quasitiling(
        Z,
        (interval(Z, 0, 24),),
        (FiniteSubset.from_forms(Z, [(0,), (50,)]),),
    )
    with pytest.raises(HypothesisFailure, match="covered by no tile"):
        build_congruent_system([lower, upper], W)


def test_overlapping_levels_are_refused(Z: GroupSpec) -> None:
    W = Window.box(Z, [0], [99])
    with pytest.raises(UsageError, match="overlap"):
        build_congruent_system([overlapping_pair(Z)], W)
    with pytest.raises(UsageError):
        build_congruent_system([], W)
