"""Layout quality and constraint-satisfaction metrics.

Perceptual metrics (alignment, overlap, matched IoU, document similarity,
unique-match diversity) work on normalized coordinates so canvas size never
matters. Consistency metrics check a layout against an IR using the exact
threshold predicates the synthesizer extracts with, so synthesis followed by
a faithful placement scores 1.0 by construction.

Auto-completed elements are part of the rendered layout and participate in
the perceptual metrics, but they are invisible to every consistency metric:
extra completions can never lower a satisfaction score.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .corpus import FlatElement, LayoutDoc, extract_groups, flatten_elements
from .errors import (
    EmptyLayoutError,
    EmptySetError,
    LengthMismatchError,
    MissingGroupStructureError,
)
from .ir import HierarchyAtom, IrRoot, PosAtom, SizeAtom, TypeAtom, flatten_constraints
from .synth import SynthParams, position_const, size_const

# Layers meant to sit behind content; free to overlap with everything.
BACKGROUND_TYPES = frozenset({"background image"})


def _norm(doc: LayoutDoc) -> tuple[list[str], np.ndarray]:
    flat = flatten_elements(doc)
    boxes = np.array(
        [[fe.box.l, fe.box.t, fe.box.w, fe.box.h] for fe in flat], dtype=float
    ).reshape(-1, 4)
    boxes[:, [0, 2]] /= doc.canvas_w
    boxes[:, [1, 3]] /= doc.canvas_h
    return [fe.etype for fe in flat], boxes


def alignment(doc: LayoutDoc) -> float:
    """Mean nearest-axis distance: 0 when every element lines up with another.

    Axes per pair: left, x-center, right, top, y-center, bottom edges in
    normalized coordinates. A single element is perfectly aligned.
    """
    _, b = _norm(doc)
    n = len(b)
    if n == 0:
        raise EmptyLayoutError("alignment needs at least one element")
    if n == 1:
        return 0.0
    xs = np.stack([b[:, 0], b[:, 0] + b[:, 2] / 2, b[:, 0] + b[:, 2]], axis=1)
    ys = np.stack([b[:, 1], b[:, 1] + b[:, 3] / 2, b[:, 1] + b[:, 3]], axis=1)
    axes = np.concatenate([xs, ys], axis=1)  # (n, 6)
    diff = np.abs(axes[:, None, :] - axes[None, :, :])  # (n, n, 6)
    closest = diff.min(axis=2)
    np.fill_diagonal(closest, np.inf)
    return float(closest.min(axis=1).mean())


def overlap(doc: LayoutDoc) -> float:
    """Total pairwise intersection area over total element area.

    Background layers are excluded: content legitimately sits on top
    of them.
    """
    types, b = _norm(doc)
    keep = [i for i, t in enumerate(types) if t not in BACKGROUND_TYPES]
    if len(b) == 0:
        raise EmptyLayoutError("overlap needs at least one element")
    b = b[keep]
    if len(b) == 0:
        return 0.0
    areas = b[:, 2] * b[:, 3]
    inter = 0.0
    for i in range(len(b) - 1):
        li = np.maximum(b[i, 0], b[i + 1 :, 0])
        ti = np.maximum(b[i, 1], b[i + 1 :, 1])
        ri = np.minimum(b[i, 0] + b[i, 2], b[i + 1 :, 0] + b[i + 1 :, 2])
        bi = np.minimum(b[i, 1] + b[i, 3], b[i + 1 :, 1] + b[i + 1 :, 3])
        inter += float((np.clip(ri - li, 0, None) * np.clip(bi - ti, 0, None)).sum())
    total = float(areas.sum())
    return inter / total if total > 0 else 0.0


def _iou_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    li = np.maximum(a[:, None, 0], b[None, :, 0])
    ti = np.maximum(a[:, None, 1], b[None, :, 1])
    ri = np.minimum(a[:, None, 0] + a[:, None, 2], b[None, :, 0] + b[None, :, 2])
    bi = np.minimum(a[:, None, 1] + a[:, None, 3], b[None, :, 1] + b[None, :, 3])
    inter = np.clip(ri - li, 0, None) * np.clip(bi - ti, 0, None)
    union = (a[:, 2] * a[:, 3])[:, None] + (b[:, 2] * b[:, 3])[None, :] - inter
    with np.errstate(invalid="ignore", divide="ignore"):
        iou = np.where(union > 0, inter / union, 0.0)
    return iou


def max_iou(gen: LayoutDoc, ref: LayoutDoc) -> float:
    """Best one-to-one same-type IoU matching, normalized by the larger side."""
    gtypes, gb = _norm(gen)
    rtypes, rb = _norm(ref)
    if len(gb) == 0 or len(rb) == 0:
        raise EmptyLayoutError("max_iou needs nonempty layouts")
    total = 0.0
    for etype in set(gtypes) & set(rtypes):
        gi = [i for i, t in enumerate(gtypes) if t == etype]
        ri = [i for i, t in enumerate(rtypes) if t == etype]
        iou = _iou_matrix(gb[gi], rb[ri])
        rows, cols = linear_sum_assignment(iou, maximize=True)
        total += float(iou[rows, cols].sum())
    return total / max(len(gb), len(rb))


def docsim(a: LayoutDoc, b: LayoutDoc) -> float:
    """Similarity via max-weight matching of same-type elements.

    Pair weight rewards nearby centers and similar sizes, scaled by the
    smaller element's side length. The matched weight sum is divided by the
    larger element count, so a layout is always at least as similar to
    itself as to anything else.
    """
    atypes, ab = _norm(a)
    btypes, bb = _norm(b)
    if len(ab) == 0 or len(bb) == 0:
        raise EmptySetError("docsim needs nonempty layouts")
    ac = ab[:, :2] + ab[:, 2:] / 2
    bc = bb[:, :2] + bb[:, 2:] / 2
    dc = np.linalg.norm(ac[:, None, :] - bc[None, :, :], axis=2)
    ds = np.abs(ab[:, None, 2:] - bb[None, :, 2:]).sum(axis=2)
    amin = np.minimum(
        (ab[:, 2] * ab[:, 3])[:, None], (bb[:, 2] * bb[:, 3])[None, :]
    )
    weights = np.sqrt(amin) * np.power(2.0, -dc - 2.0 * ds)
    same = np.array(atypes)[:, None] == np.array(btypes)[None, :]
    weights = np.where(same, weights, 0.0)
    rows, cols = linear_sum_assignment(weights, maximize=True)
    return float(weights[rows, cols].sum()) / max(len(ab), len(bb))


def unique_match(gen_set: Sequence[LayoutDoc], train_set: Sequence[LayoutDoc]) -> float:
    """Fraction of distinct nearest-training-layout retrievals."""
    if not gen_set or not train_set:
        raise EmptySetError("unique_match needs nonempty sets")
    retrieved = []
    for gen in gen_set:
        scores = np.array([docsim(gen, t) for t in train_set])
        retrieved.append(int(scores.argmax()))  # argmax takes the lowest index on ties
    return len(set(retrieved)) / len(gen_set)


# --- constraint consistency -----------------------------------------------------

def _required_types(ir: IrRoot) -> Counter:
    need: Counter = Counter()
    for atom, n in flatten_constraints(ir).items():
        if isinstance(atom, TypeAtom):
            need[atom.etype] += n
        elif isinstance(atom, HierarchyAtom):
            for etype, _, _ in atom.members:
                need[etype] += atom.repeat * n
    return need


def _visible(flat: list[FlatElement]) -> list[FlatElement]:
    return [fe for fe in flat if not fe.completed]


def type_consistency(ir: IrRoot, doc: LayoutDoc) -> float:
    """Fraction of required element slots (groups included) present in the doc."""
    need = _required_types(ir)
    if not need:
        return 1.0
    have = Counter(fe.etype for fe in _visible(flatten_elements(doc)))
    got = sum(min(n, have.get(etype, 0)) for etype, n in need.items())
    return got / sum(need.values())


def _extracted_label(fe: FlatElement, doc: LayoutDoc, params: SynthParams, kind: str) -> str | None:
    if kind == "pos":
        return position_const(fe.box, doc.canvas_w, doc.canvas_h, params.pos_margin)
    return size_const(
        fe.box, doc.canvas_w, doc.canvas_h, params.size_small_max, params.size_large_min
    )


def pos_size_consistency(ir: IrRoot, doc: LayoutDoc, params: SynthParams = SynthParams()) -> float:
    """Fraction of position/size constraints some element of the type satisfies.

    Satisfaction uses the synthesizer's extraction predicates, and elements
    are claimed per constraint kind: the same element may satisfy one
    position and one size constraint, but never two of the same kind.
    """
    atoms = flatten_constraints(ir)
    want: dict[str, Counter] = {"pos": Counter(), "size": Counter()}
    for atom, n in atoms.items():
        if isinstance(atom, PosAtom):
            want["pos"][(atom.etype, atom.value)] += n
        elif isinstance(atom, SizeAtom):
            want["size"][(atom.etype, atom.value)] += n
    total = sum(sum(c.values()) for c in want.values())
    if total == 0:
        return 1.0
    pool = _visible(flatten_elements(doc))
    got = 0
    for kind, needs in want.items():
        have: Counter = Counter()
        for fe in pool:
            label = _extracted_label(fe, doc, params, kind)
            if label is not None:
                have[(fe.etype, label)] += 1
        got += sum(min(n, have.get(key, 0)) for key, n in needs.items())
    return got / total


def _item_matches(
    members: list[FlatElement],
    sig: tuple,
    doc: LayoutDoc,
    params: SynthParams,
) -> bool:
    if Counter(fe.etype for fe in members) != Counter(etype for etype, _, _ in sig):
        return False
    ok = np.zeros((len(members), len(sig)))
    for i, fe in enumerate(members):
        pos = _extracted_label(fe, doc, params, "pos")
        size = _extracted_label(fe, doc, params, "size")
        for j, (etype, want_pos, want_size) in enumerate(sig):
            if fe.etype != etype:
                continue
            if want_pos is not None and pos != want_pos:
                continue
            if want_size is not None and size != want_size:
                continue
            ok[i, j] = 1.0
    rows, cols = linear_sum_assignment(ok, maximize=True)
    return int(ok[rows, cols].sum()) == len(sig)


def hierarchy_consistency(ir: IrRoot, doc: LayoutDoc, params: SynthParams = SynthParams()) -> float:
    """Fraction of required group items matched by the doc's group structure."""
    atoms = [a for a in flatten_constraints(ir) if isinstance(a, HierarchyAtom)]
    if not atoms:
        return 1.0
    groups = extract_groups(doc)
    if not groups:
        raise MissingGroupStructureError(
            "IR requires groups but the layout has no group structure"
        )
    flat = flatten_elements(doc)
    items = [
        [flat[i] for i in item if not flat[i].completed]
        for g in groups
        for item in g.items
    ]
    items = [m for m in items if m]
    needed = sum(a.repeat for a in atoms)
    got = 0
    for atom in atoms:
        matches = sum(1 for members in items if _item_matches(members, atom.members, doc, params))
        got += min(matches, atom.repeat)
    return got / needed


# --- aggregation ------------------------------------------------------------------

@dataclass
class EvalReport:
    align: float | None = None
    overlap: float | None = None
    miou: float | None = None
    um: float | None = None
    type_cons: float | None = None
    pos_size_cons: float | None = None
    hier_cons: float | None = None
    n: dict | None = None

    def to_json(self) -> dict:
        out = {
            "align": self.align,
            "overlap": self.overlap,
            "miou": self.miou,
            "um": self.um,
            "type_cons": self.type_cons,
            "pos_size_cons": self.pos_size_cons,
            "hier_cons": self.hier_cons,
            "n": self.n or {},
        }
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "EvalReport":
        return cls(**obj)


def _mean(values: list[float]) -> float | None:
    return float(np.mean(values)) if values else None


def evaluate(
    gen_pairs: Sequence[tuple[IrRoot, LayoutDoc]],
    refs: Sequence[LayoutDoc] | None = None,
    train_set: Sequence[LayoutDoc] | None = None,
    params: SynthParams = SynthParams(),
) -> EvalReport:
    """Aggregate report over (ir, layout) pairs.

    ``refs`` enables matched IoU (pairs and refs zip positionally);
    ``train_set`` enables the unique-match diversity score. Hierarchy
    consistency averages over the pairs whose IR states group constraints
    and is null when none does.
    """
    if not gen_pairs:
        raise EmptySetError("no pairs to evaluate")
    docs = [doc for _, doc in gen_pairs]
    aligns = [alignment(d) for d in docs]
    overlaps = [overlap(d) for d in docs]
    types = [type_consistency(ir, doc) for ir, doc in gen_pairs]
    pos_sizes = [pos_size_consistency(ir, doc, params) for ir, doc in gen_pairs]
    hiers = [
        hierarchy_consistency(ir, doc, params)
        for ir, doc in gen_pairs
        if any(isinstance(a, HierarchyAtom) for a in flatten_constraints(ir))
    ]
    mious = None
    if refs is not None:
        if len(refs) != len(gen_pairs):
            raise LengthMismatchError(len(gen_pairs), len(refs))
        mious = [max_iou(doc, ref) for doc, ref in zip(docs, refs)]
    um = unique_match(docs, train_set) if train_set is not None else None
    counts = {
        "pairs": len(gen_pairs),
        "hier_pairs": len(hiers),
        "refs": len(refs) if refs is not None else 0,
        "train": len(train_set) if train_set is not None else 0,
    }
    return EvalReport(
        align=_mean(aligns),
        overlap=_mean(overlaps),
        miou=_mean(mious) if mious is not None else None,
        um=um,
        type_cons=_mean(types),
        pos_size_cons=_mean(pos_sizes),
        hier_cons=_mean(hiers),
        n=counts,
    )
