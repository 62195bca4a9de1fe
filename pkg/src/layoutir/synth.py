"""IR synthesis from unlabeled layouts.

Turns a layout document into a plausible IR by (1) randomly discarding a
small fraction of elements, (2) extracting hierarchy, size, and position
constraints from the survivors with threshold rules, (3) keeping a random
subset of the non-type constraints, and (4) emitting the result as an IR
tree. Discarded elements become completion targets: the paired layout
sequence flags them ``complete`` so a generator can learn to restore them.

Per-document randomness comes from a counter-based generator keyed by
(seed, doc id), so results are independent of worker scheduling, and the
random draws follow a fixed order regardless of parameter values: lowering
a keep probability can only shrink the surviving constraint set.
"""

from __future__ import annotations

import hashlib
import logging
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Iterable, Iterator

import numpy as np

from .corpus import Box, LayoutDoc, extract_groups, flatten_elements, grouped_indices
from .errors import NoTypedElementsError
from .grid import GRIDS
from .ir import (
    ElementNode,
    GroupNode,
    HierarchyAtom,
    IrRoot,
    MemberSig,
    PosAtom,
    SizeAtom,
    TypeAtom,
    _sig_key,
    print_ir,
)
from .seq import compile_constraints, encode_layout, render_constraint_tokens, render_layout_tokens

log = logging.getLogger("layoutir")


@dataclass(frozen=True)
class SynthParams:
    """Knobs for IR synthesis; defaults give roughly one extra constraint
    per element on top of its type."""

    discard_rate: float = 0.1
    keep_prob_pos: float = 0.5
    keep_prob_size: float = 0.3
    keep_prob_hier: float = 0.8
    pos_margin: float = 0.25
    size_small_max: float = 0.05
    size_large_min: float = 0.40
    seed: int = 0

    def __post_init__(self) -> None:
        if not (0.0 <= self.discard_rate < 1.0):
            raise ValueError("discard_rate must be in [0, 1)")
        for name in ("keep_prob_pos", "keep_prob_size", "keep_prob_hier"):
            if not (0.0 <= getattr(self, name) <= 1.0):
                raise ValueError(f"{name} must be in [0, 1]")
        if not (0.0 < self.pos_margin <= 0.5):
            raise ValueError("pos_margin must be in (0, 0.5]")
        if not (0.0 <= self.size_small_max < self.size_large_min <= 1.0):
            raise ValueError("need 0 <= size_small_max < size_large_min <= 1")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "SynthParams":
        return cls(**obj)


def doc_rng(seed: int, doc_id: str) -> np.random.Generator:
    """Counter-based per-document generator, stable across schedulers."""
    digest = hashlib.blake2b(f"{seed}:{doc_id}".encode(), digest_size=16).digest()
    return np.random.Generator(np.random.Philox(key=np.frombuffer(digest, dtype=np.uint64)))


def _clip_box(box: Box, w: float, h: float) -> Box:
    l, t = max(box.l, 0.0), max(box.t, 0.0)
    r, b = min(box.r, w), min(box.b, h)
    return Box(l, t, max(r - l, 0.0), max(b - t, 0.0))


def position_const(box: Box, canvas_w: float, canvas_h: float, pos_margin: float = 0.25) -> str | None:
    """Edge label for a box whose center falls inside a margin strip.

    Vertical labels dominate: a top-left element reads as "top". Thresholds
    are strict so a dead-center element is unlabeled at any margin <= 0.5.
    """
    c = _clip_box(box, canvas_w, canvas_h)
    if c.cy < pos_margin * canvas_h:
        return "top"
    if c.cy > (1.0 - pos_margin) * canvas_h:
        return "bottom"
    if c.cx < pos_margin * canvas_w:
        return "left"
    if c.cx > (1.0 - pos_margin) * canvas_w:
        return "right"
    return None


def size_const(
    box: Box,
    canvas_w: float,
    canvas_h: float,
    size_small_max: float = 0.05,
    size_large_min: float = 0.40,
) -> str | None:
    """Area label: small/large when the canvas-area fraction is extreme."""
    frac = _clip_box(box, canvas_w, canvas_h).area / (canvas_w * canvas_h)
    if frac <= size_small_max:
        return "small"
    if frac >= size_large_min:
        return "large"
    return None


def discard_elements(n: int, r: float, rng: np.random.Generator) -> tuple[list[int], list[int]]:
    """Independently discard each of n elements with probability r.

    Resamples until at least one element survives, so the IR is never empty.
    Returns (kept, discarded) index lists.
    """
    if n <= 0:
        raise NoTypedElementsError("nothing to discard from")
    while True:
        mask = rng.random(n) < r
        if not mask.all():
            break
    kept = [i for i in range(n) if not mask[i]]
    discarded = [i for i in range(n) if mask[i]]
    return kept, discarded


def sig_sort_key(sig: tuple[MemberSig, ...]) -> tuple:
    return tuple(_sig_key(m) for m in sig)


def hierarchy_const(sigs: Iterable[tuple[MemberSig, ...]]) -> list[HierarchyAtom]:
    """Merge identical item signatures into atoms with summed repeats."""
    counts = Counter(sigs)
    return [
        HierarchyAtom(sig, n)
        for sig, n in sorted(counts.items(), key=lambda kv: sig_sort_key(kv[0]))
    ]


def sample_const(
    atoms: Iterable, params: SynthParams, rng: np.random.Generator
) -> list:
    """Independently keep non-type atoms with their kind's probability.

    Type atoms always survive: an IR has to name its elements. The input
    order is preserved.
    """
    probs = {
        PosAtom: params.keep_prob_pos,
        SizeAtom: params.keep_prob_size,
        HierarchyAtom: params.keep_prob_hier,
    }
    out = []
    for atom in atoms:
        if isinstance(atom, TypeAtom):
            out.append(atom)
            continue
        if rng.random() < probs[type(atom)]:
            out.append(atom)
    return out


@dataclass(frozen=True)
class SynthResult:
    ir: IrRoot
    discarded: tuple[int, ...]


def synthesize_ir(
    doc: LayoutDoc, params: SynthParams, rng: np.random.Generator | None = None
) -> SynthResult:
    """Build an IR for a document; discarded flat-element indices ride along.

    The draw order is fixed: one discard uniform per element, then one
    position and one size uniform per kept element, then one uniform per
    merged group signature. Decisions compare a draw against its keep
    probability, so shrinking a probability shrinks the kept set without
    shifting any other draw.
    """
    if rng is None:
        rng = doc_rng(params.seed, doc.doc_id)
    flat = flatten_elements(doc)
    if not flat:
        raise NoTypedElementsError(f"doc {doc.doc_id} has no typed elements")
    groups = extract_groups(doc)
    w, h = doc.canvas_w, doc.canvas_h

    kept, discarded = discard_elements(len(flat), params.discard_rate, rng)
    kept_set = set(kept)
    u_annot = rng.random((len(kept), 2))
    annot_draw = {i: u_annot[j] for j, i in enumerate(kept)}

    def extracted(i: int) -> MemberSig:
        fe = flat[i]
        return (
            fe.etype,
            position_const(fe.box, w, h, params.pos_margin),
            size_const(fe.box, w, h, params.size_small_max, params.size_large_min),
        )

    # Group items shrink to their kept members; their signatures carry the
    # members' extracted annotations so identical items merge exactly.
    item_members: list[list[int]] = [
        [i for i in item if i in kept_set]
        for g in groups
        for item in g.items
    ]
    sig_members: dict[tuple[MemberSig, ...], list[list[int]]] = {}
    for members in item_members:
        if not members:
            continue
        sig = tuple(sorted((extracted(i) for i in members), key=_sig_key))
        sig_members.setdefault(sig, []).append(members)

    u_hier = rng.random(len(sig_members))
    pointwise: list[int] = [i for i in kept if i not in grouped_indices(groups)]
    group_nodes: list[GroupNode] = []
    ordered_sigs = sorted(sig_members.items(), key=lambda kv: sig_sort_key(kv[0]))
    for u, (sig, item_lists) in zip(u_hier, ordered_sigs):
        if u < params.keep_prob_hier:
            items = tuple(ElementNode(et, pos=p, size=s) for et, p, s in sig)
            group_nodes.append(GroupNode(repeat=len(item_lists), items=items))
        else:
            for members in item_lists:
                pointwise.extend(members)

    collapsed: Counter = Counter()
    for i in sorted(pointwise):
        etype, pos, size = extracted(i)
        u_pos, u_size = annot_draw[i]
        pos = pos if u_pos < params.keep_prob_pos else None
        size = size if u_size < params.keep_prob_size else None
        collapsed[(etype, pos, size)] += 1

    children: list = [
        ElementNode(etype, pos=pos, size=size, repeat=n if n > 1 else None)
        for (etype, pos, size), n in sorted(
            collapsed.items(), key=lambda kv: _sig_key(kv[0])
        )
    ]
    children.extend(sorted(group_nodes, key=group_sort_key))
    return SynthResult(IrRoot(tuple(children)), tuple(discarded))


def group_sort_key(g: GroupNode) -> tuple:
    return (tuple(_sig_key((e.etype, e.pos, e.size)) for e in g.items), g.repeat)


def build_synthetic_dataset(
    docs: Iterable[LayoutDoc], params: SynthParams
) -> Iterator[dict]:
    """One training record per document; failures are logged and skipped.

    Records carry the IR, its constraint token text, and the source layout's
    token text in which discarded elements are flagged ``complete``.
    """
    skipped = 0
    for doc in docs:
        try:
            yield synth_record(doc, params)
        except NoTypedElementsError:
            skipped += 1
            log.debug("doc %s: skipped (no typed elements)", doc.doc_id)
    if skipped:
        log.info("synthesis skipped %d documents", skipped)


def synth_record(doc: LayoutDoc, params: SynthParams) -> dict:
    result = synthesize_ir(doc, params)
    grid = GRIDS[doc.domain]
    layout_seq = encode_layout(doc, grid, completed_ids=set(result.discarded))
    return {
        "id": doc.doc_id,
        "ir": print_ir(result.ir),
        "constraint_seq": render_constraint_tokens(compile_constraints(result.ir)),
        "layout_seq": render_layout_tokens(layout_seq),
        "params": params.to_json(),
    }
