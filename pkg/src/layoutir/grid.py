"""Discretization grids for layout coordinates.

Continuous canvas coordinates are quantized onto an integer grid before
serialization. Positions map to ``[0, bins-1]``; widths and heights are
rounded and may reach ``bins`` (a full-canvas element spans the whole axis),
an asymmetry chosen to reproduce published token sequences exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import OutOfRangeError


@dataclass(frozen=True)
class GridSpec:
    w_bins: int
    h_bins: int

    def __post_init__(self) -> None:
        if self.w_bins < 1 or self.h_bins < 1:
            raise ValueError("grid bins must be >= 1")


WEBUI_GRID = GridSpec(120, 120)
RICO_GRID = GridSpec(144, 256)

GRIDS: dict[str, GridSpec] = {"webui": WEBUI_GRID, "rico": RICO_GRID}


def discretize(v: float, extent: float, bins: int) -> int:
    """Quantize a position coordinate to a bin index in [0, bins-1]."""
    if bins < 1:
        raise OutOfRangeError(f"bins must be >= 1, got {bins}")
    if not (0.0 <= v <= extent):
        raise OutOfRangeError(f"value {v} outside [0, {extent}]")
    # v*bins/extent keeps integer-valued inputs exact where v/extent would not;
    # the epsilon absorbs one-ulp dips below exact bin boundaries so that
    # coordinates produced by continuize re-discretize to the same bin.
    b = math.floor(v * bins / extent + 1e-9)
    return min(max(b, 0), bins - 1)


def discretize_size(v: float, extent: float, bins: int) -> int:
    """Quantize a width/height to a bin count in [1, bins].

    Uses floor(x + 0.5) rather than banker's rounding so results are
    platform-stable.
    """
    if not (0.0 <= v <= extent):
        raise OutOfRangeError(f"size {v} outside [0, {extent}]")
    b = math.floor(v * bins / extent + 0.5)
    return min(max(b, 1), bins)


def continuize(b: int, extent: float, bins: int) -> float:
    """Map a bin index back to the bin's left edge in canvas units."""
    return b * extent / bins


def continuize_center(b: int, extent: float, bins: int) -> float:
    """Bin center in canvas units; used only when rendering."""
    return (b + 0.5) * extent / bins
