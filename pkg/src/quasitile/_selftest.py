"""built-in fixtures with known answers, one per module"""
from __future__ import annotations

import sys
from fractions import Fraction
from typing import Callable
from typing import TextIO

from ._errors import HypothesisFailure
from .comparison import chain_bound_N
from .comparison import comparison_solve
from .comparison import ComparisonInstance
from .comparison import matching_oracle
from .density import advantage_window
from .density import density_window
from .density import PeriodicSet
from .density import Window
from .encoding import build_codebook
from .encoding import encode_level
from .encoding import round_trip_failures
from .entropy import build_oracle
from .entropy import min_alphabet
from .entropy import Oracle
from .entropy import Rectangle
from .entropy import shannon_entropy
from .groups import box
from .groups import FiniteSubset
from .groups import GroupSpec
from .quasitiling import adjust_centers
from .quasitiling import build_congruent_system
from .quasitiling import check_properties
from .quasitiling import construct_epsilon_quasitiling
from .quasitiling import lattice_tiling
from .recognizable import make_recognizable_origin

Fixture = Callable[[int], bool]

Z = "zd:1"


def _z() -> GroupSpec:
    return GroupSpec.parse(Z)


def _interval(spec: GroupSpec, lo: int, hi: int) -> FiniteSubset:
    return box(spec, [lo], [hi])


def density_evens(threads: int) -> bool:
    spec = _z()
    W = Window.box(spec, [0], [99], _interval(spec, 0, 9))
    evens = PeriodicSet(spec, (2,), frozenset({(0,)})).restrict(W.carrier)
    report = density_window(evens, _interval(spec, 0, 9), W, threads)
    return report.lower == report.upper == Fraction(1, 2)


def density_advantage(threads: int) -> bool:
    spec = _z()
    F = _interval(spec, 0, 7)
    W = Window.box(spec, [0], [99], F)
    A = PeriodicSet(spec, (4,), frozenset({(0,)})).restrict(W.carrier)
    B = PeriodicSet(spec, (4,), frozenset({(1,), (2,)})).restrict(W.carrier)
    return advantage_window(B, A, F, W, threads) == Fraction(2, 8)


def tiling_covering(threads: int) -> bool:
    spec = _z()
    W = Window.box(spec, [0], [499])
    pool = [_interval(spec, 0, 24), _interval(spec, 0, 4)]
    T = construct_epsilon_quasitiling(pool, Fraction(1, 5), W)
    record = check_properties(T, _interval(spec, 0, 1), Fraction(1, 5), W)
    return record.eps_disjoint and record.covering


def chain_bound_integers(threads: int) -> bool:
    spec = _z()
    E = _interval(spec, -1, 1)
    return chain_bound_N(E, 1, spec).N == 5


def chain_bound_lamplighter(threads: int) -> bool:
    spec = GroupSpec.parse("lamplighter")
    E = FiniteSubset.of(spec, [spec.identity, *spec.generator_elements()])
    try:
        chain_bound_N(E, Fraction(1, 10), spec, size_cap=200_000)
    except HypothesisFailure:
        return True
    return False


def comparison_periodic(threads: int) -> bool:
    spec = _z()
    W = Window.box(spec, [0], [199])
    A = PeriodicSet(spec, (4,), frozenset({(0,)})).restrict(W.carrier)
    B = PeriodicSet(spec, (4,), frozenset({(1,), (2,)})).restrict(W.carrier)
    E = _interval(spec, -1, 1)
    inst = ComparisonInstance(A, B, None, Fraction(1, 5), W)
    result = comparison_solve(inst, E, threads=threads)
    oracle = matching_oracle(inst, E)
    return (
        not result.phi.check(B)
        and inst.A_core.members <= result.phi.forward.keys()
        and oracle.saturated
    )


def recognizable_pair(threads: int) -> bool:
    spec = _z()
    found = make_recognizable_origin(_interval(spec, 0, 1))
    return found == FiniteSubset.from_forms(spec, [(-2,), (0,), (1,)])


def encoding_round_trip(threads: int) -> bool:
    spec = _z()
    W = Window.box(spec, [0], [999])
    levels = [lattice_tiling(spec, [5], W), lattice_tiling(spec, [125], W)]
    levels[0] = adjust_centers(levels[0])
    system = build_congruent_system(levels, W)
    book = build_codebook(system.levels, W)
    z = encode_level(system.levels, book, W)
    return not round_trip_failures(system.levels, book, z)


def entropy_values(threads: int) -> bool:
    spec = _z()
    R = Rectangle(1, 0, 10, tuple((0,) for _ in range(10)))
    S = Rectangle(1, 0, 3, ((0,), (0,), (0,)))
    return (
        shannon_entropy([Fraction(1, 4)] * 4) == 2.0
        and shannon_entropy([Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)]) == 1.5
        and build_oracle([R], {R: Fraction(3, 10)})[R] == 8
        and min_alphabet([_interval(spec, 0, 2)], Oracle({S: 20})).size == 3
    )


FIXTURES: dict[str, Fixture] = {
    "density: evens": density_evens,
    "density: advantage": density_advantage,
    "tiling: covering": tiling_covering,
    "comparison: chain bound": chain_bound_integers,
    "comparison: lamplighter growth": chain_bound_lamplighter,
    "comparison: periodic instance": comparison_periodic,
    "encoding: recognizable origin": recognizable_pair,
    "encoding: round trip": encoding_round_trip,
    "entropy: values": entropy_values,
}


def run_selftest(threads: int = 1, stream: TextIO | None = None) -> list[str]:
    """print one PASS/FAIL line per fixture and return the failed names"""
    stream = stream or sys.stdout
    failed = []
    for name, fixture in FIXTURES.items():
        try:
            ok = fixture(threads)
            detail = ""
        except Exception as e:
            ok = False
            detail = f" ({type(e).__name__}: {e})"
        print(f"{'PASS' if ok else 'FAIL'} {name}{detail}", file=stream)
        if not ok:
            failed.append(name)
    return failed
