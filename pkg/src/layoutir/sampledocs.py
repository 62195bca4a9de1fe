"""Deterministic generator of plausible layout documents.

Used for demos, benchmarks, and self-tests that need a corpus with realistic
structure: aligned flow content, occasional full-bleed backgrounds, repeated
item groups, and edge-hugging chrome. Documents are seeded per index through
`random.Random(str)` (which hashes the string with SHA-512), so doc i from
seed s is the same on every platform and in any generation order.

Geometry is intentionally tidy: elements share margins and never overlap
(background images aside), giving near-zero alignment and overlap scores
that degrade under any coordinate shuffling.
"""

from __future__ import annotations

import random
from typing import Iterator

from .corpus import Box, ElementTreeNode, LayoutDoc

_CANVAS_HEIGHTS = (1600, 1800, 2000, 2200, 2400)


def _el(etype: str, l: float, t: float, w: float, h: float) -> ElementTreeNode:
    return ElementTreeNode("el", Box(l, t, w, h), etype=etype)


def _webui_doc(doc_id: str, rng: random.Random) -> LayoutDoc:
    W = 1280.0
    H = float(rng.choice(_CANVAS_HEIGHTS))
    margin, col = 64.0, 1152.0
    children: list[ElementTreeNode] = []
    if rng.random() < 0.6:
        children.append(_el("background image", 0, 0, W, H))
    title_w = 760.0 if rng.random() < 0.4 else col
    children.append(_el("title", margin, 32, title_w, 64))
    if title_w < col:
        children.append(_el("logo", W - margin - 104, 24, 104, 80))
    y = 128.0
    if rng.random() < 0.7:
        children.append(_el("description", margin, y, col, 40))
        y += 72
    floor_y = H - 240.0
    if rng.random() < 0.35:
        hero_h = round(0.45 * H)
        children.append(_el("image", margin, y, col, hero_h))
        y += hero_h + 48
    for _ in range(rng.randint(2, 5)):
        if y + 56 > floor_y:
            break
        children.append(_el("text", margin, y, col, 56))
        y += 96
    if rng.random() < 0.6 and y + 210 <= floor_y:
        m = rng.randint(2, 4)
        iw = (col - (m - 1) * 24) / m
        items = []
        for k in range(m):
            x = margin + k * (iw + 24)
            items.append(
                ElementTreeNode(
                    "item",
                    Box(x, y, iw, 210),
                    children=[
                        _el("image", x + 6, y + 6, iw - 12, 140),
                        _el("link", x + 6, y + 158, iw - 12, 36),
                    ],
                )
            )
        children.append(ElementTreeNode("ul", Box(margin, y, col, 210), children=items))
        y += 258
    if rng.random() < 0.3 and y + 48 <= H - 232:
        children.append(_el("input", margin, H - 200, 560, 48))
    if rng.random() < 0.7:
        kind = "submit" if rng.random() < 0.4 else "button"
        children.append(_el(kind, margin, H - 112, 240, 56))
    root = ElementTreeNode("canvas", Box(0, 0, W, H), children=children)
    return LayoutDoc(doc_id, "webui", W, H, root)


def _rico_doc(doc_id: str, rng: random.Random) -> LayoutDoc:
    W, H = 1440.0, 2560.0
    children: list[ElementTreeNode] = []
    if rng.random() < 0.4:
        children.append(_el("background image", 0, 0, W, H))
    if rng.random() < 0.4:
        children.append(_el("icon", W - 144, 32, 96, 96))
        children.append(_el("toolbar", 0, 160, W, 160))
    else:
        children.append(_el("toolbar", 0, 48, W, 160))
    y = 380.0
    floor_y = H - 480.0
    for _ in range(rng.randint(1, 3)):
        children.append(_el("text", 96, y, 1248, 120))
        y += 168
    if rng.random() < 0.4 and y + 400 <= floor_y:
        children.append(_el("card", 96, y, 1248, 400))
        y += 448
    m = rng.randint(2, 4)
    while m >= 2 and y + m * 260 - 24 > floor_y:
        m -= 1
    if rng.random() < 0.7 and m >= 2:
        items = []
        for k in range(m):
            iy = y + k * 260
            items.append(
                ElementTreeNode(
                    "item",
                    Box(48, iy, 1344, 236),
                    children=[
                        _el("image", 432, iy + 16, 280, 204),
                        _el("text", 752, iy + 56, 560, 120),
                    ],
                )
            )
        children.append(
            ElementTreeNode("list", Box(48, y, 1344, m * 260 - 24), children=items)
        )
        y += m * 260 + 24
    if rng.random() < 0.5:
        children.append(_el("text button", 96, H - 420, 400, 120))
    if rng.random() < 0.5:
        children.append(_el("bottom navigation", 0, H - 200, W, 160))
    else:
        children.append(_el("pager indicator", 600, H - 120, 240, 48))
    root = ElementTreeNode("canvas", Box(0, 0, W, H), children=children)
    return LayoutDoc(doc_id, "rico", W, H, root)


_BUILDERS = {"webui": _webui_doc, "rico": _rico_doc}


def make_demo_doc(index: int, domain: str = "webui", seed: int = 0) -> LayoutDoc:
    """Document `index` of the (seed, domain) corpus; O(1), order-free."""
    builder = _BUILDERS[domain]
    rng = random.Random(f"{seed}:{domain}:{index}")
    return builder(f"{domain}-{index:06d}", rng)


def make_demo_docs(n: int, domain: str = "webui", seed: int = 0) -> Iterator[LayoutDoc]:
    """Stream n documents; constant memory."""
    if n < 0:
        raise ValueError("n must be >= 0")
    for i in range(n):
        yield make_demo_doc(i, domain, seed)
