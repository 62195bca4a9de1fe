"""Constraint-driven baseline placer with top-k stochastic sampling.

Turns a constraint sequence into concrete grid-bin layouts. Position
constraints map to center bands mirroring the extraction thresholds, so a
faithful placement round-trips through the consistency metrics at 1.0.
Placement is greedy: group blocks claim horizontal strips of equal-width
columns first, then pointwise elements pack into their bands, preferring
empty top-left slots. Every decision scores a candidate set and picks via
top-k sampling; k=1 degenerates to the deterministic argmax layout.

Sizes come from corpus statistics (modal bin size per type) with explicit
small/large constraints overriding. When a layout cannot fit, sizes shrink
and the attempt repeats; genuine overflow raises InfeasibleError instead of
silently dropping constraints.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

from .corpus import CorpusStats
from .errors import InfeasibleError
from .grid import GRIDS, GridSpec
from .metrics import (
    BACKGROUND_TYPES,
    hierarchy_consistency,
    pos_size_consistency,
    type_consistency,
)
from .vocab import VOCABS
from .seq import (
    ConstraintSeq,
    LayoutElementTok,
    LayoutSeq,
    PointwiseTriple,
    constraints_to_ir,
    decode_layout,
    render_constraint_tokens,
)
from .synth import SynthParams, doc_rng

log = logging.getLogger(__name__)

_P = SynthParams()  # threshold source shared with extraction
_BAND = _P.pos_margin
_OVERLAP_W = 1e6  # overlap cost per full-canvas unit; dwarfs position preference
_SHRINKS = (1.0, 0.85, 0.7, 0.55)


@dataclass(frozen=True)
class PlacerConfig:
    grid: GridSpec
    k: int = 5
    n_samples: int = 4
    gutter: int = 1
    completion_enabled: bool = True
    completion_min_support: float = 0.8
    seed: int = 0

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.gutter < 0:
            raise ValueError("gutter must be >= 0")
        if not 0.0 <= self.completion_min_support <= 1.0:
            raise ValueError("completion_min_support must be in [0, 1]")


@dataclass
class CandidateDist:
    """Scored placement proposals standing in for a next-token distribution."""

    proposals: tuple
    scores: np.ndarray

    def __post_init__(self) -> None:
        self.scores = np.asarray(self.scores, dtype=float)
        if len(self.proposals) == 0:
            raise ValueError("candidate distribution needs at least one proposal")
        if len(self.proposals) != len(self.scores):
            raise ValueError("proposals and scores must align")
        if not np.all(np.isfinite(self.scores)):
            raise ValueError("candidate scores must be finite")


def sample_topk(dist: CandidateDist, k: int, rng: np.random.Generator | None):
    """Softmax over scores, truncate to the k best, renormalize, sample.

    k=1 (or no rng) returns the argmax; score ties break to the lowest index.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    order = np.argsort(-dist.scores, kind="stable")
    top = order[: min(k, len(order))]
    if k == 1 or rng is None:
        return dist.proposals[int(top[0])]
    logits = dist.scores[top] - dist.scores[top].max()
    probs = np.exp(logits)
    probs /= probs.sum()
    return dist.proposals[int(top[rng.choice(len(top), p=probs)])]


# --- geometry ---------------------------------------------------------------------

def _center_bounds(pos: str | None, W: int, H: int) -> tuple[float, float, float, float]:
    """Allowed (cx_lo, cx_hi, cy_lo, cy_hi) for an element center.

    Bin centers land on a half-unit lattice, so a quarter-bin margin turns
    the strict band inequalities into closed interval checks.
    """
    q = _BAND
    if pos == "top":
        return 0.0, float(W), 0.0, q * H - 0.25
    if pos == "bottom":
        return 0.0, float(W), (1 - q) * H + 0.25, float(H)
    if pos == "left":
        return 0.0, q * W - 0.25, q * H, (1 - q) * H
    if pos == "right":
        return (1 - q) * W + 0.25, float(W), q * H, (1 - q) * H
    # Unconstrained elements stay vertically mid-band; any extracted label
    # there is one no constraint asks about.
    return 0.0, float(W), q * H, (1 - q) * H


def _topleft_range(w: int, h: int, bounds, W: int, H: int):
    cx_lo, cx_hi, cy_lo, cy_hi = bounds
    lmin = max(0, math.ceil(cx_lo - w / 2 - 1e-9))
    lmax = min(W - w, math.floor(cx_hi - w / 2 + 1e-9))
    tmin = max(0, math.ceil(cy_lo - h / 2 - 1e-9))
    tmax = min(H - h, math.floor(cy_hi - h / 2 + 1e-9))
    if lmin > lmax or tmin > tmax:
        return None
    return lmin, lmax, tmin, tmax


def _lattice(lo: int, hi: int, n: int = 12) -> list[int]:
    if hi <= lo:
        return [lo]
    step = max(1, (hi - lo) // n)
    vals = list(range(lo, hi + 1, step))
    if vals[-1] != hi:
        vals.append(hi)
    return vals


def _overlap_area(l, t, w, h, placed: np.ndarray) -> float:
    if not len(placed):
        return 0.0
    li = np.maximum(float(l), placed[:, 0])
    ti = np.maximum(float(t), placed[:, 1])
    ri = np.minimum(l + w, placed[:, 0] + placed[:, 2])
    bi = np.minimum(t + h, placed[:, 1] + placed[:, 3])
    return float((np.clip(ri - li, 0, None) * np.clip(bi - ti, 0, None)).sum())


def _position_candidates(w, h, rng_range, placed: np.ndarray, W, H) -> CandidateDist:
    lmin, lmax, tmin, tmax = rng_range
    props = [(l, t) for t in _lattice(tmin, tmax) for l in _lattice(lmin, lmax)]
    arr = np.array(props, dtype=float)
    ov = np.zeros(len(props))
    if len(placed):
        li = np.maximum(arr[:, None, 0], placed[None, :, 0])
        ti = np.maximum(arr[:, None, 1], placed[None, :, 1])
        ri = np.minimum(arr[:, None, 0] + w, placed[None, :, 0] + placed[None, :, 2])
        bi = np.minimum(arr[:, None, 1] + h, placed[None, :, 1] + placed[None, :, 3])
        ov = (np.clip(ri - li, 0, None) * np.clip(bi - ti, 0, None)).sum(axis=1)
    score = (
        -_OVERLAP_W * ov / (W * H)
        - (arr[:, 1] - tmin) / max(1, H)
        - 0.1 * (arr[:, 0] - lmin) / max(1, W)
    )
    return CandidateDist(tuple(props), score)


# --- sizing -----------------------------------------------------------------------

def _base_size(etype: str, stats: CorpusStats | None, grid: GridSpec) -> tuple[int, int]:
    if stats is not None:
        mode = stats.modal_size(etype)
        if mode is not None:
            return mode
    return max(1, grid.w_bins // 5), max(1, grid.h_bins // 12)


def _fit_large(pos: str | None, W: int, H: int) -> tuple[int, int]:
    # Side bands need narrow-and-tall; everything else gets wide-and-short.
    if pos in ("left", "right"):
        w = max(1, math.ceil(W / 2) - 1)
        h = math.ceil(_P.size_large_min * W * H / w)
    else:
        w = W
        h = math.ceil(_P.size_large_min * H)
    if h > H:
        raise InfeasibleError(f"large element does not fit the {pos or 'free'} band")
    return w, h


def _sized(tr: PointwiseTriple, stats, grid: GridSpec, shrink: float) -> tuple[int, int]:
    W, H = grid.w_bins, grid.h_bins
    if tr.size == "large":
        return _fit_large(tr.pos, W, H)
    w, h = _base_size(tr.etype, stats, grid)
    if shrink < 1.0:
        w, h = max(1, int(w * shrink)), max(1, int(h * shrink))
    if tr.pos in ("top", "bottom"):
        h = min(h, math.ceil(H / 2) - 1)
    if tr.pos in ("left", "right"):
        w = min(w, math.ceil(W / 2) - 1)
    if tr.size == "small":
        cap = _P.size_small_max * W * H
        if w * h > cap:
            s = math.sqrt(cap / (w * h))
            w, h = max(1, math.floor(w * s)), max(1, math.floor(h * s))
    return w, h


# --- completion -------------------------------------------------------------------

def complete_elements(
    cs: ConstraintSeq, stats: CorpusStats | None, cfg: PlacerConfig
) -> list[PointwiseTriple]:
    """Types strongly implied by the stated ones, to be placed as completions.

    A type qualifies when its best co-occurrence support against any stated
    type reaches the configured threshold and it is not itself stated.
    """
    if not cfg.completion_enabled or stats is None:
        return []
    present = {tr.etype for tr in cs.pointwise}
    present |= {tr.etype for blk in cs.groups for tr in blk}
    out = []
    for cand in sorted(stats.doc_freq):
        if cand in present:
            continue
        support = max((stats.cooc_support(cand, g) for g in present), default=0.0)
        if support >= cfg.completion_min_support:
            out.append(PointwiseTriple(cand))
    return out


# --- placement --------------------------------------------------------------------

class _Overflow(Exception):
    """Internal: no collision-free slot at this shrink level; retry smaller."""


def _pick(dist: CandidateDist, cfg: PlacerConfig, rng) -> tuple:
    return sample_topk(dist, 1 if rng is None else cfg.k, rng)


def _place_block_run(block, n_items, cfg, stats, rng, shrink, placed, out_groups):
    """Lay one repeated group as n_items equal-width columns in a shared strip."""
    W, H = cfg.grid.w_bins, cfg.grid.h_bins
    g = cfg.gutter
    sizes = [_sized(tr, stats, cfg.grid, shrink) for tr in block]
    bounds = [_center_bounds(tr.pos, W, H) for tr in block]
    cx_lo = max(b[0] for b in bounds)
    cx_hi = min(b[1] for b in bounds)
    if cx_lo > cx_hi:
        raise InfeasibleError(f"group members demand disjoint bands: {block}")

    cw = max(w for w, _ in sizes)
    while True:
        span = n_items * cw + (n_items - 1) * g
        c0_min = max(cx_lo, cw / 2)
        c0_max = min(cx_hi - (n_items - 1) * (cw + g), W - span + cw / 2)
        if c0_min <= c0_max:
            break
        if cw <= 1:
            raise InfeasibleError(f"{n_items} group columns overflow the band: {block}")
        cw = max(1, int(cw * 0.8))
    # Large members keep their area guarantee at the final column width.
    sizes = [
        (min(wm, cw), hm)
        if tr.size != "large"
        else (cw, min(H, math.ceil(_P.size_large_min * W * H / cw)))
        for tr, (wm, hm) in zip(block, sizes)
    ]
    for tr, (wm, hm) in zip(block, sizes):
        if tr.size == "large" and wm * hm < _P.size_large_min * W * H:
            raise InfeasibleError(f"large group member cannot fit a column: {tr}")

    # Stack members vertically; banded members clamp into their own band.
    ys, ycur = [], 0 if any(tr.pos == "top" for tr in block) else math.ceil(_BAND * H)
    for tr, (wm, hm) in zip(block, sizes):
        _, _, cy_lo, cy_hi = _center_bounds(tr.pos, W, H)
        tmin = max(0, math.ceil(cy_lo - hm / 2 - 1e-9))
        tmax = min(H - hm, math.floor(cy_hi - hm / 2 + 1e-9))
        if tmin > tmax:
            raise InfeasibleError(f"group member does not fit its band: {tr}")
        t = min(max(ycur, tmin), tmax)
        ys.append(t)
        ycur = t + hm + g

    strip_top = min(ys)
    strip_h = max(t + hm for t, (_, hm) in zip(ys, sizes)) - strip_top
    l0_min = math.ceil(c0_min - cw / 2 - 1e-9)
    l0_max = math.floor(c0_max - cw / 2 + 1e-9)
    arr = np.array(placed, dtype=float).reshape(-1, 4)
    cands = []
    for l0 in _lattice(max(0, l0_min), max(0, l0_max)):
        ov = sum(
            _overlap_area(l0 + k * (cw + g), strip_top, cw, strip_h, arr)
            for k in range(n_items)
        )
        cands.append(((l0,), -_OVERLAP_W * ov / (W * H) - (l0 - l0_min) / max(1, W)))
    dist = CandidateDist(tuple(c for c, _ in cands), np.array([s for _, s in cands]))
    (l0,) = _pick(dist, cfg, rng)

    for k in range(n_items):
        lk = l0 + k * (cw + g)
        toks = []
        for tr, (wm, hm), t in zip(block, sizes, ys):
            lm = lk + (cw - wm) // 2
            cx_lo_m, cx_hi_m, _, _ = _center_bounds(tr.pos, W, H)
            if lm + wm / 2 < cx_lo_m:
                lm += 1
            elif lm + wm / 2 > cx_hi_m:
                lm -= 1
            toks.append(LayoutElementTok(tr.etype, lm, t, wm, hm))
            placed.append([lm, t, wm, hm])
        out_groups.append(tuple(toks))


def _attempt(cs, completions, cfg, stats, rng, shrink, final) -> LayoutSeq:
    W, H = cfg.grid.w_bins, cfg.grid.h_bins
    placed: list[list[int]] = []
    out_groups: list[tuple] = []
    for block, run in itertools.groupby(cs.groups):
        _place_block_run(
            block, len(list(run)), cfg, stats, rng, shrink, placed, out_groups
        )

    ungrouped: list[LayoutElementTok] = []
    order = list(cs.pointwise) + completions
    flags = [False] * len(cs.pointwise) + [True] * len(completions)
    empty = np.zeros((0, 4))
    for tr, completed in zip(order, flags):
        w, h = _sized(tr, stats, cfg.grid, shrink)
        rng_range = _topleft_range(w, h, _center_bounds(tr.pos, W, H), W, H)
        if rng_range is None:
            raise InfeasibleError(f"element does not fit its band: {tr}")
        # Background layers neither avoid others nor block them.
        blocking = tr.etype not in BACKGROUND_TYPES
        arr = np.array(placed, dtype=float).reshape(-1, 4) if blocking else empty
        dist = _position_candidates(w, h, rng_range, arr, W, H)
        l, t = _pick(dist, cfg, rng)
        if blocking and not final and _overlap_area(l, t, w, h, arr) > 0:
            raise _Overflow
        ungrouped.append(LayoutElementTok(tr.etype, l, t, w, h, completed=completed))
        if blocking:
            placed.append([l, t, w, h])

    seq = LayoutSeq(tuple(ungrouped), tuple(out_groups))
    if final and rng is None:
        _gutter_sanity(ungrouped, cfg.gutter)
    return seq


def _gutter_sanity(toks: list[LayoutElementTok], gutter: int) -> None:
    solid = [t for t in toks if t.etype not in BACKGROUND_TYPES]
    for i, a in enumerate(solid):
        for b in solid[i + 1 :]:
            dx = min(a.l + a.w, b.l + b.w) - max(a.l, b.l)
            dy = min(a.t + a.h, b.t + b.h) - max(a.t, b.t)
            if dx > gutter and dy > gutter:
                raise InfeasibleError(
                    f"band overflow: {a.etype} and {b.etype} overlap beyond the gutter"
                )


def _domain_for(cs: ConstraintSeq, grid: GridSpec) -> str:
    for name, g in GRIDS.items():
        if g == grid:
            return name
    types = {tr.etype for tr in cs.pointwise}
    types |= {tr.etype for blk in cs.groups for tr in blk}
    for name, vocab in VOCABS.items():
        if all(t in vocab for t in types):
            return name
    return "webui"


def _self_check(cs: ConstraintSeq, seq: LayoutSeq, grid: GridSpec) -> None:
    ir = constraints_to_ir(cs)
    doc = decode_layout(
        seq, grid, (float(grid.w_bins), float(grid.h_bins)), domain=_domain_for(cs, grid)
    )
    scores = (
        type_consistency(ir, doc),
        pos_size_consistency(ir, doc),
        hierarchy_consistency(ir, doc),
    )
    if any(s < 1.0 for s in scores):
        raise InfeasibleError(f"placement failed its own consistency check: {scores}")


def _place_once(
    cs: ConstraintSeq, cfg: PlacerConfig, stats: CorpusStats | None, rng
) -> LayoutSeq:
    completions = complete_elements(cs, stats, cfg)
    if not cs.pointwise and not cs.groups:
        raise InfeasibleError("empty constraint sequence")
    seq = None
    for i, shrink in enumerate(_SHRINKS):
        try:
            seq = _attempt(cs, completions, cfg, stats, rng, shrink, i == len(_SHRINKS) - 1)
            break
        except _Overflow:
            log.debug("placement overflow at shrink %.2f; retrying smaller", shrink)
    assert seq is not None
    _self_check(cs, seq, cfg.grid)
    return seq


def place(cs: ConstraintSeq, cfg: PlacerConfig, stats: CorpusStats | None = None) -> LayoutSeq:
    """Deterministic placement: the argmax path of the candidate scoring."""
    return _place_once(cs, cfg, stats, rng=None)


def place_samples(
    cs: ConstraintSeq,
    cfg: PlacerConfig,
    stats: CorpusStats | None = None,
    rng: np.random.Generator | None = None,
) -> list[LayoutSeq]:
    """n_samples independent top-k draws; reproducible from (seed, constraints)."""
    if rng is None:
        rng = doc_rng(cfg.seed, render_constraint_tokens(cs))
    return [_place_once(cs, cfg, stats, rng) for _ in range(cfg.n_samples)]
