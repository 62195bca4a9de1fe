"""Wireframe SVG rendering of layout documents.

Pixel geometry is box geometry times a declared scale factor. Fill colors
come from a fixed 16-color categorical palette indexed by a stable hash of
the type name, so any type (including ones added to a vocabulary later)
maps to the same color in every process. Output is plain SVG 1.1 text
assembled with fixed number formatting, hence byte-deterministic.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

from .corpus import Box, LayoutDoc, extract_groups, flatten_elements
from .vocab import ElementType, TypeVocabulary

# Categorical palette, chosen for pairwise contrast at 16 entries.
PALETTE: tuple[str, ...] = (
    "#4e79a7",
    "#f28e2b",
    "#e15759",
    "#76b7b2",
    "#59a14f",
    "#edc948",
    "#b07aa1",
    "#ff9da7",
    "#9c755f",
    "#bab0ac",
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#8c564b",
    "#17becf",
)


def color_for(etype: str) -> str:
    """Palette entry for a type name; stable across runs and processes."""
    digest = hashlib.blake2b(etype.encode("utf-8"), digest_size=2).digest()
    return PALETTE[int.from_bytes(digest, "big") % len(PALETTE)]


@dataclass(frozen=True)
class RenderStyle:
    """Visual parameters for wireframe output; every type gets a fill."""

    fills: dict[ElementType, str] = field(default_factory=dict)
    stroke: str = "#333333"
    stroke_width: float = 1.0
    label_size: int = 10
    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        if self.label_size <= 0:
            raise ValueError("label_size must be positive")

    def fill_for(self, etype: ElementType) -> str:
        return self.fills.get(etype) or color_for(etype)


def style_for(vocab: TypeVocabulary, scale: float = 1.0) -> RenderStyle:
    """Style with an explicit fill entry for every vocabulary type."""
    return RenderStyle(fills={t: color_for(t) for t in vocab.types}, scale=scale)


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _rect(cls: str, box: Box, s: float, extra: str) -> str:
    return (
        f'<rect class="{cls}" x="{_fmt(box.l * s)}" y="{_fmt(box.t * s)}" '
        f'width="{_fmt(box.w * s)}" height="{_fmt(box.h * s)}" {extra}/>'
    )


def render_svg(doc: LayoutDoc, style: RenderStyle | None = None) -> str:
    """Render one document as SVG 1.1 text.

    Every typed element gets one rect (class "el") plus a type label;
    completion-flagged elements are drawn with a dashed stroke. Repeated-group
    containers are outlined (class "group"). A document with no typed
    elements renders as the bare canvas.
    """
    style = style or RenderStyle()
    s = style.scale
    w = _fmt(doc.canvas_w * s)
    h = _fmt(doc.canvas_h * s)
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
        f'<rect class="canvas" x="0.00" y="0.00" width="{w}" height="{h}" '
        f'fill="#ffffff" stroke="#000000" stroke-width="{_fmt(style.stroke_width)}"/>',
    ]
    for grp in extract_groups(doc):
        lines.append(
            _rect(
                "group",
                grp.box,
                s,
                f'fill="none" stroke="#888888" '
                f'stroke-width="{_fmt(style.stroke_width * 1.5)}"',
            )
        )
    for fe in flatten_elements(doc):
        dash = ' stroke-dasharray="4 2"' if fe.completed else ""
        lines.append(
            _rect(
                "el",
                fe.box,
                s,
                f'fill="{style.fill_for(fe.etype)}" fill-opacity="0.35" '
                f'stroke="{style.stroke}" '
                f'stroke-width="{_fmt(style.stroke_width)}"{dash}',
            )
        )
        lines.append(
            f'<text x="{_fmt(fe.box.l * s + 2)}" '
            f'y="{_fmt(fe.box.t * s + style.label_size)}" '
            f'font-family="sans-serif" font-size="{style.label_size}" '
            f'fill="#222222">{escape(fe.etype)}</text>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
