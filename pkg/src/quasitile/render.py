"""
pictures of tilings and arrays over ℤ and ℤ²

Level-1 tiles are filled with a color per shape, every higher level adds its
tile boundaries with a heavier stroke, and centers are drawn as dots.
"""
from __future__ import annotations

import xml.etree.ElementTree as ET
from typing import Sequence

import numpy as np

from ._errors import UnsupportedError
from .density import Window
from .groups import GroupElement
from .groups import GroupSpec
from .quasitiling import Quasitiling
from .symbolic import SymbolicArray

SVG_NS = "http://www.w3.org/2000/svg"
BACKGROUND = "#ffffff"
CENTER_COLOR = "#000000"


def _planar(spec: GroupSpec) -> int:
    family = spec.family
    if family.name != "zd" or family.dim > 2:  # type: ignore[attr-defined]
        raise UnsupportedError(f"rendering needs ℤ or ℤ², not {spec.descriptor}")
    return family.dim  # type: ignore[attr-defined,no-any-return]


def _xy(g: GroupElement) -> tuple[int, int]:
    return (g.form[0], 0) if len(g.form) == 1 else (g.form[0], g.form[1])


def palette(n: int, seed: int = 0) -> list[str]:
    """n light colors drawn from a seeded generator"""
    rng = np.random.default_rng(seed)
    rgb = rng.integers(96, 240, size=(n, 3))
    return [f"#{r:02x}{g:02x}{b:02x}" for r, g, b in rgb.tolist()]


def _bounds(W: Window) -> tuple[int, int, int, int]:
    points = [_xy(g) for g in W.carrier]
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    return min(xs), min(ys), max(xs), max(ys)


def _edges(cells: frozenset[tuple[int, int]]) -> list[tuple[int, int, int, int]]:
    """unit segments on the boundary of a cell set"""
    edges = []
    for x, y in sorted(cells):
        if (x, y - 1) not in cells:
            edges.append((x, y, x + 1, y))
        if (x, y + 1) not in cells:
            edges.append((x, y + 1, x + 1, y + 1))
        if (x - 1, y) not in cells:
            edges.append((x, y, x, y + 1))
        if (x + 1, y) not in cells:
            edges.append((x + 1, y, x + 1, y + 1))
    return edges


def render_svg(
    levels: Sequence[Quasitiling],
    W: Window,
    *,
    seed: int = 0,
    cell: int = 12,
) -> bytes:
    """deterministic SVG bytes for the levels, finest first"""
    _planar(W.spec)
    x0, y0, x1, y1 = _bounds(W)
    width, height = (x1 - x0 + 1) * cell, (y1 - y0 + 1) * cell
    root = ET.Element(
        "svg",
        {
            "xmlns": SVG_NS,
            "width": str(width),
            "height": str(height),
            "viewBox": f"0 0 {width} {height}",
        },
    )
    ET.SubElement(
        root,
        "rect",
        {
            "x": "0",
            "y": "0",
            "width": str(width),
            "height": str(height),
            "fill": BACKGROUND,
        },
    )

    def at(x: int, y: int) -> tuple[int, int]:
        # rows grow downwards
        return (x - x0) * cell, (y1 - y) * cell

    if levels:
        first = levels[0]
        colors = palette(len(first.shapes), seed)
        fills = ET.SubElement(root, "g", {"stroke": "none"})
        order = first.spec.order_key
        for key in sorted(first.keys(), key=lambda k: order(k.center)):
            for g in first.tile(key).elements:
                x, y = at(*_xy(g))
                ET.SubElement(
                    fills,
                    "rect",
                    {
                        "x": str(x),
                        "y": str(y),
                        "width": str(cell),
                        "height": str(cell),
                        "fill": colors[key.shape],
                    },
                )
    for k, T in enumerate(levels, 1):
        group = ET.SubElement(
            root,
            "g",
            {
                "stroke": "#000000",
                "stroke-width": str(k),
                "fill": "none",
                "class": f"level-{k}",
            },
        )
        for key in sorted(T.keys(), key=lambda key: T.spec.order_key(key.center)):
            cells = frozenset(_xy(g) for g in T.tile(key))
            for ax, ay, bx, by in _edges(cells):
                # cell (x, y) spans [x, x+1] × [y, y+1] with y pointing up
                px, py = (ax - x0) * cell, (y1 + 1 - ay) * cell
                qx, qy = (bx - x0) * cell, (y1 + 1 - by) * cell
                ET.SubElement(
                    group,
                    "line",
                    {"x1": str(px), "y1": str(py), "x2": str(qx), "y2": str(qy)},
                )
    if levels:
        dots = ET.SubElement(root, "g", {"fill": CENTER_COLOR})
        radius = max(cell // 5, 1)
        for k, T in enumerate(levels, 1):
            for c in T.all_centers.elements:
                x, y = at(*_xy(c))
                ET.SubElement(
                    dots,
                    "circle",
                    {
                        "cx": str(x + cell // 2),
                        "cy": str(y + cell // 2),
                        "r": str(radius * k),
                    },
                )
    svg: bytes = ET.tostring(root, encoding="utf-8", xml_declaration=True)
    return svg


def render_pgm(z: SymbolicArray) -> bytes:
    """plain graymap with one gray level per symbol, outside cells white"""
    dim = _planar(z.spec)
    x0, y0, x1, y1 = _bounds(z.window)
    symbols = list(z.alphabet)
    top = max(len(symbols) - 1, 1)
    shade = {s: round(200 * i / top) for i, s in enumerate(symbols)}
    rows = []
    for y in range(y1, y0 - 1, -1):
        row = []
        for x in range(x0, x1 + 1):
            form = (x,) if dim == 1 else (x, y)
            symbol = z.cells.get(GroupElement(z.spec.descriptor, form))
            row.append(255 if symbol is None else shade[symbol])
        rows.append(" ".join(str(v) for v in row))
    header = f"P2\n{x1 - x0 + 1} {y1 - y0 + 1}\n255\n"
    return (header + "".join(f"{row}\n" for row in rows)).encode("ascii")
