"""subcommand bodies: configuration in, artifact files out"""
from __future__ import annotations

import dataclasses
import json
import logging
import math
import os
import time
from pathlib import Path
from typing import Any
from typing import Callable

import numpy as np

from ._config import Configuration
from ._errors import ConfigError
from ._errors import InvariantViolation
from ._errors import UsageError
from ._inputs import read_epsilon
from ._inputs import read_set
from ._inputs import read_shape
from ._inputs import read_window
from ._version_cls import version_record
from .comparison import chain_bound_N
from .comparison import comparison_solve
from .comparison import ComparisonInstance
from .comparison import DEFAULT_CHAIN_CAP
from .comparison import DEFAULT_CHAIN_LIMIT
from .comparison import default_multipliers
from .comparison import horizon_core
from .comparison import matching_oracle
from .comparison import verify_block_code
from .density import advantage_window
from .density import density_window
from .density import folner_boxes
from .density import Window
from .encoding import build_codebook
from .encoding import check_decode_locality
from .encoding import check_marker_recognizability
from .encoding import decode_level
from .encoding import encode_level
from .encoding import INDICES
from .encoding import marker_density_bound
from .encoding import round_trip_failures
from .entropy import build_oracle
from .entropy import center_frequency_identity
from .entropy import check_oracle_condition
from .entropy import check_tiled_monotonicity
from .entropy import concatenations
from .entropy import extract_rectangles
from .entropy import layered_array
from .entropy import min_alphabet
from .entropy import Oracle
from .entropy import Partition
from .groups import FiniteSubset
from .groups import GroupSpec
from .groups import product_set
from .quasitiling import adjust_centers
from .quasitiling import build_congruent_system
from .quasitiling import check_center_syndetic
from .quasitiling import check_congruent_system
from .quasitiling import check_properties
from .quasitiling import construct_epsilon_quasitiling
from .quasitiling import disjointify
from .quasitiling import lattice_tiling
from .quasitiling import Quasitiling
from .quasitiling import TilingSystemWindow
from .render import render_pgm
from .render import render_svg
from .symbolic import SymbolicArray
from .utils import content_hash
from .utils import format_fraction
from .utils import trace

log = logging.getLogger("quasitile")

MANIFEST = "manifest.json"
IDENTITY_TOLERANCE = 1e-9


@dataclasses.dataclass
class Options:
    """command line settings layered over the configuration"""

    out: Path
    check: bool = False
    threads: int | None = None
    seed: int | None = None


@dataclasses.dataclass
class Run:
    config: Configuration
    options: Options
    command: str
    started: float = dataclasses.field(default_factory=time.perf_counter)
    artifacts: dict[str, str] = dataclasses.field(default_factory=dict)
    checks: list[str] = dataclasses.field(default_factory=list)

    @property
    def spec(self) -> GroupSpec:
        return self.config.group_spec

    @property
    def seed(self) -> int:
        return self.config.seed if self.options.seed is None else self.options.seed

    @property
    def threads(self) -> int:
        if self.options.threads is None:
            return self.config.threads
        return self.options.threads

    @property
    def section(self) -> dict[str, Any]:
        return self.config.section(self.command)

    def path(self, key: str) -> str:
        return f"{self.command}.{key}"

    def write(self, name: str, data: str | bytes) -> None:
        raw = data.encode("utf-8") if isinstance(data, str) else data
        os.makedirs(self.options.out, exist_ok=True)
        (self.options.out / name).write_bytes(raw)
        self.artifacts[name] = content_hash(raw)
        trace("wrote", name, len(raw), "bytes")

    def passed(self, name: str, ok: bool, detail: str = "") -> None:
        self.checks.append(f"{name}: {'PASS' if ok else 'FAIL'} {detail}".rstrip())
        if not ok and self.options.check:
            raise InvariantViolation(f"{self.command} check {name} failed {detail}")

    def finish(self) -> None:
        if self.checks:
            self.write("checks.txt", "".join(f"{line}\n" for line in self.checks))
        manifest = {
            "command": self.command,
            "config_hash": content_hash(self.config.source_text),
            "seed": self.seed,
            "artifacts": dict(sorted(self.artifacts.items())),
            "versions": version_record(),
            "seconds": round(time.perf_counter() - self.started, 3),
        }
        self.write(MANIFEST, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _window(run: Run, margin: FiniteSubset | None = None) -> Window:
    return read_window(run.config.window, run.spec, margin)


def _int(run: Run, key: str, default: int, minimum: int = 0) -> int:
    value = run.section.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(run.path(key), f"expected an integer >= {minimum}")
    return value


def _folner_term(run: Run, key: str, n: Any) -> FiniteSubset:
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ConfigError(run.path(key), f"expected a positive term index, got {n!r}")
    return folner_boxes(run.spec)[n]


def _shapes(run: Run, key: str) -> list[FiniteSubset]:
    """a list of shape tables or of Følner term indices"""
    value = run.section.get(key)
    if not isinstance(value, list) or not value:
        raise ConfigError(run.path(key), "expected a nonempty list")
    return [
        _folner_term(run, f"{key}[{i}]", item)
        if isinstance(item, int)
        else read_shape(run.path(f"{key}[{i}]"), item, run.spec)
        for i, item in enumerate(value)
    ]


def _lattice_levels(run: Run, W: Window) -> list[Quasitiling]:
    """``lattice`` lists box sides per level, finest first"""
    value = run.section.get("lattice", [])
    if not isinstance(value, list):
        raise ConfigError(run.path("lattice"), "expected a list of side lists")
    dim = getattr(run.spec.family, "dim", None)
    if value and dim is None:
        raise ConfigError(run.path("lattice"), "lattice levels need a zd group")
    levels = []
    for i, sides in enumerate(value):
        where = run.path(f"lattice[{i}]")
        if (
            not isinstance(sides, list)
            or len(sides) != dim
            or not all(isinstance(s, int) and s > 0 for s in sides)
        ):
            raise ConfigError(where, f"expected {dim} positive box sides")
        if levels and any(s % t for s, t in zip(sides, prev)):
            raise ConfigError(where, "sides must be multiples of the level below")
        prev = sides
        try:
            levels.append(lattice_tiling(run.spec, sides, W))
        except UsageError as e:
            raise ConfigError(where, str(e)) from e
    return levels


def _system(run: Run, W: Window) -> TilingSystemWindow:
    levels = _lattice_levels(run, W)
    if not levels:
        raise ConfigError(run.path("lattice"), "at least one level is required")
    levels[0] = adjust_centers(levels[0])
    return build_congruent_system(levels, W)


def _array(run: Run, W: Window) -> SymbolicArray:
    """``array``: random symbols or a periodic word along the first axis"""
    value = run.section.get("array", {"random": {"alphabet": [0, 1]}})
    where = run.path("array")
    if not isinstance(value, dict):
        raise ConfigError(where, "expected a table")
    if "random" in value:
        body = value["random"]
        alphabet = body.get("alphabet", [0, 1])
        weights = body.get("weights")
        if not isinstance(alphabet, list) or len(set(alphabet)) < 2:
            raise ConfigError(f"{where}.random.alphabet", "needs two or more symbols")
        if weights is not None and (
            len(weights) != len(alphabet) or not math.isclose(sum(weights), 1)
        ):
            raise ConfigError(f"{where}.random.weights", "must match and sum to 1")
        return SymbolicArray.random(W, alphabet, run.seed, weights)
    if "periodic_word" in value:
        word = value["periodic_word"]
        if not isinstance(word, list) or not word:
            raise ConfigError(f"{where}.periodic_word", "expected a nonempty list")
        alphabet = sorted(set(word))
        return SymbolicArray.from_function(
            W, alphabet, lambda g: word[g.form[0] % len(word)]
        )
    raise ConfigError(where, "expected random or periodic_word")


def cmd_density(run: Run) -> None:
    section = run.section
    if "shapes" in section:
        shapes = _shapes(run, "shapes")
    else:
        shapes = [_folner_term(run, "terms", n) for n in section.get("terms", [1])]
    W = _window(run)
    B = read_set(run.path("B"), section.get("B"), run.spec, region=W.carrier,
                 seed=run.seed)
    A = None
    if "A" in section:
        A = read_set(run.path("A"), section["A"], run.spec, region=W.carrier,
                     seed=run.seed + 1)
    records = []
    complement = W.carrier - B
    for i, F in enumerate(shapes):
        window = W.with_margin(F)
        report = density_window(B, F, window, threads=run.threads)
        if A is not None:
            advantage = advantage_window(B, A, F, window, threads=run.threads)
            report = dataclasses.replace(report, advantage=advantage)
        records.append(f"# shape {i} ({len(F)} elements)\n{report.to_record()}")
        other = density_window(complement, F, window, threads=run.threads)
        run.passed(
            f"complement shape {i}",
            report.upper + other.lower == 1 and report.lower + other.upper == 1,
        )
    run.write("density.txt", "".join(records))


def cmd_tile(run: Run) -> None:
    section = run.section
    pool = _shapes(run, "pool")
    eps = read_epsilon(run.path("eps"), section.get("eps"))
    K = read_shape(run.path("K"), section["K"], run.spec) if "K" in section else (
        FiniteSubset.of(run.spec, [run.spec.identity, *run.spec.generator_elements()])
    )
    W = _window(run)
    T = construct_epsilon_quasitiling(
        pool,
        eps,
        W,
        passes=_int(run, "passes", 1, 1),
        schedule_offset=_int(run, "schedule_offset", 0),
    )
    record = check_properties(T, K, eps, W)
    run.write("tiling.txt", T.to_text())
    run.write("properties.txt", record.to_record() + f"diagnostic: {T.diagnostic}\n")
    run.passed("eps-disjoint", record.eps_disjoint)
    if not record.covering:
        log.warning(
            "covering ratio %s misses the 1 - %s target",
            format_fraction(record.alpha), format_fraction(eps),
        )
    run.passed("centers syndetic", check_center_syndetic(T, W.margin_shape, W))
    if section.get("disjointify", True):
        D = disjointify(T)
        run.write("disjoint.txt", D.to_text())
        run.passed("union preserved", D.union == T.union)
        run.passed("disjoint", D.is_disjoint())


def _compare_tiling(run: Run, W: Window) -> Quasitiling | None:
    levels = _lattice_levels(run, W)
    if len(levels) > 1:
        raise ConfigError(run.path("lattice"), "comparison uses a single level")
    return levels[0] if levels else None


def cmd_compare(run: Run) -> None:
    section = run.section
    spec = run.spec
    W = _window(run)
    A = read_set(run.path("A"), section.get("A"), spec, region=W.carrier,
                 seed=run.seed)
    B = read_set(run.path("B"), section.get("B"), spec, region=W.carrier,
                 seed=run.seed + 1)
    if not A.isdisjoint(B):
        log.warning("%d points lie in both A and B, dropped from B", len(A & B))
        B = B - A
    eps = read_epsilon(run.path("eps"), section.get("eps"))
    tiling = _compare_tiling(run, W)
    if "E" in section:
        E = read_shape(run.path("E"), section["E"], spec)
    elif tiling is not None:
        E = default_multipliers(tiling)
    else:
        E = FiniteSubset.of(spec, [spec.identity, *spec.generator_elements()])
    bound = chain_bound_N(
        E,
        eps,
        spec,
        cap=_int(run, "chain_cap", DEFAULT_CHAIN_CAP, 1),
        limit=_int(run, "chain_limit", DEFAULT_CHAIN_LIMIT, 1),
        size_cap=run.config.ball_cap,
    )
    run.write(
        "bound.txt",
        f"N: {bound.N}\nsizes: {' '.join(map(str, bound.sizes))}\n"
        f"certificate: {bound.certificate}\n",
    )
    inst = ComparisonInstance(A, B, tiling, eps, W)
    result = comparison_solve(
        inst,
        E,
        N=bound.N,
        max_paths=_int(run, "max_paths", 200_000, 1),
        threads=run.threads,
    )
    run.write("map.txt", result.map_text())
    run.write(
        "trace.txt",
        result.trace_text()
        + f"horizon: {result.horizon}\n"
        + f"margin_indeterminate: {len(result.margin_indeterminate)}\n",
    )
    problems = result.phi.check(B)
    run.passed("injective into B", not problems, "; ".join(problems))
    if len(A | B) <= _int(run, "oracle_cap", 5000, 0):
        oracle = matching_oracle(inst, E)
        run.write(
            "oracle.txt",
            f"saturated: {oracle.saturated}\nmatched: {oracle.matched}\n"
            f"required: {oracle.required}\n",
        )
        run.passed("matching oracle agrees", oracle.saturated)
    power = _int(run, "block_code_power", result.horizon, 1)
    if power < result.horizon:
        log.warning(
            "block code checked at E^%d, below the E^%d decision horizon",
            power, result.horizon,
        )
    if not horizon_core(E, power, W):
        run.write(
            "block_code.txt",
            f"horizon: {power}\nskipped: the E^{power} horizon leaves the window"
            " around every point\n",
        )
        return
    step = E | E.derive([spec.identity])
    F = step
    for _ in range(power - 1):
        F = product_set(F, step)
    y = SymbolicArray.from_sets(A, B, W)
    try:
        conflict = verify_block_code([(y, result.phi.forward)], F)
    except UsageError as e:
        run.write("block_code.txt", f"horizon: {power}\nskipped: {e}\n")
        return
    run.write("block_code.txt", f"horizon: {power}\nconflict: {conflict}\n")
    run.passed("block code", conflict is None)


def _choices(run: Run, system: TilingSystemWindow) -> dict[Any, int]:
    if not run.section.get("random_choices", False):
        return {}
    rng = np.random.default_rng(run.seed)
    top = system.levels[-1].all_centers.elements
    picks = rng.integers(0, len(INDICES), size=len(top))
    return {c: INDICES[int(i)] for c, i in zip(top, picks)}


def cmd_encode(run: Run) -> None:
    W = _window(run)
    system = _system(run, W)
    mode = _int(run, "mode", 3, 2)
    if mode not in (2, 3):
        raise ConfigError(run.path("mode"), "must be 2 or 3")
    levels = system.levels
    book = build_codebook(levels, W, mode)
    choices = _choices(run, system)
    z = encode_level(levels, book, W, choices)
    run.write("codebook.txt", book.to_text())
    run.write("array.txt", z.to_text())
    decoded = decode_level(z, book)
    run.write(
        "decoded.txt",
        "".join(f"# level {d.level}\n{d.tiling.to_text()}" for d in decoded),
    )
    failures = round_trip_failures(levels, book, z, choices)
    run.passed("round trip", not failures, "; ".join(failures[:3]))
    densities = marker_density_bound(levels, book, W)
    run.write(
        "markers.txt",
        "".join(
            f"level={d.level} bound={format_fraction(d.bound)}"
            f" measured={format_fraction(d.measured)} holds={d.holds}\n"
            for d in densities
        ),
    )
    run.passed("marker density", all(d.holds for d in densities))
    top = len(levels) + 1
    run.passed("decode is local", check_decode_locality(z, book, top) is None)
    if mode == 2:
        recognizable = check_marker_recognizability(levels[0], book)
        run.passed("markers recognizable", recognizable)


def _oracle_report(run: Run, z: SymbolicArray, system: TilingSystemWindow) -> None:
    section = run.section
    g = read_epsilon(run.path("g"), section["g"])
    k = _int(run, "oracle_level", 1, 1)
    low = extract_rectangles(z, system, k)
    high = extract_rectangles(z, system, k + 1)
    rects = [*low, *high]
    oracle = build_oracle(rects, dict.fromkeys(rects, g))
    inventory = concatenations(z, system, k)
    verdict = check_oracle_condition(oracle, inventory)
    level_k = {R: v for R, v in oracle.values.items() if R.level == k}
    alphabet = min_alphabet(system.levels[k - 1].shapes, Oracle(level_k))
    run.write("oracle.txt", oracle.to_text())
    run.write(
        "oracle_condition.txt",
        f"holds: {verdict.holds}\nworst: {format_fraction(verdict.worst)}\n"
        f"alphabet: {alphabet.size}\n",
    )
    run.passed("oracle condition", verdict.holds)


def cmd_entropy(run: Run) -> None:
    section = run.section
    W = _window(run)
    system = _system(run, W)
    x = _array(run, W)
    horizon = (
        read_shape(run.path("horizon"), section["horizon"], run.spec)
        if "horizon" in section
        else FiniteSubset.of(run.spec, [run.spec.identity])
    )
    P = Partition.of(horizon)
    terms = [_folner_term(run, "terms", n) for n in section.get("terms", [])]
    report = check_tiled_monotonicity(x, system, P, terms, threads=run.threads)
    lines = [report.to_record()]
    run.passed("tiled entropy monotone", report.monotone)
    z = layered_array(x, system.levels)
    for k in range(1, system.depth):
        left, right = center_frequency_identity(z, system, k, threads=run.threads)
        lines.append(f"identity level={k} left={left:.12f} right={right:.12f}\n")
        run.passed(f"identity level {k}", abs(left - right) <= IDENTITY_TOLERANCE)
    run.write("entropy.txt", "".join(lines))
    if "g" in section and system.depth > 1:
        _oracle_report(run, z, system)
    run.passed("congruent system", not check_congruent_system(system))


def cmd_render(run: Run) -> None:
    W = _window(run)
    levels = _lattice_levels(run, W)
    if levels:
        levels = list(build_congruent_system(levels, W).levels)
    run.write("tiling.svg", render_svg(levels, W, seed=run.seed))
    if "array" in run.section:
        run.write("array.pgm", render_pgm(_array(run, W)))


COMMANDS: dict[str, Callable[[Run], None]] = {
    "density": cmd_density,
    "tile": cmd_tile,
    "compare": cmd_compare,
    "encode": cmd_encode,
    "entropy": cmd_entropy,
    "render": cmd_render,
}


def run_command(command: str, config: Configuration, options: Options) -> Run:
    run = Run(config, options, command)
    COMMANDS[command](run)
    run.finish()
    return run

