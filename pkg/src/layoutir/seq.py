"""Token-sequence codecs for constraints and layouts.

Constraint sequences flatten an IR into ``type pos size`` triples; layout
sequences serialize placed elements as ``[complete] type l t w h`` with
integer grid bins. Both use `` | `` as separator and wrap repeated-group
items in square brackets. Serialization is canonical: ungrouped entries
sorted by type name (layouts tie-break in reading order), group blocks after
all ungrouped entries.

The two directions are exact inverses on canonical text, so datasets can be
stored as plain token strings and reloaded without drift.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import (
    COMPLETE_ATTR,
    Box,
    ElementTreeNode,
    ITEM_TAG,
    LayoutDoc,
    extract_groups,
    flatten_elements,
    grouped_indices,
)
from .errors import (
    BinOutOfRangeError,
    EmptyLayoutError,
    EmptySetError,
    MalformedTripleError,
    TokenArityError,
    UnbalancedGroupBracketError,
    UnknownTokenError,
)
from .grid import GridSpec, continuize, discretize, discretize_size
from .ir import ElementNode, GroupNode, IrRoot, POSITIONS, SIZES
from .vocab import ElementType, TypeVocabulary

UNDEF = "undefined"
SEP = "|"


@dataclass(frozen=True)
class PointwiseTriple:
    """One element's constraints as a ``type pos size`` token triple."""

    etype: ElementType
    pos: str | None = None
    size: str | None = None

    def tokens(self) -> list[str]:
        return [self.etype, self.pos or UNDEF, self.size or UNDEF]


def _triple_key(tr: PointwiseTriple) -> tuple:
    return (tr.etype, tr.pos or "", tr.size or "")


@dataclass(frozen=True)
class ConstraintSeq:
    """Canonically ordered constraint tokens: triples, then group blocks."""

    pointwise: tuple[PointwiseTriple, ...] = ()
    groups: tuple[tuple[PointwiseTriple, ...], ...] = ()

    def __post_init__(self) -> None:
        if any(not blk for blk in self.groups):
            raise ValueError("constraint group blocks must be nonempty")
        object.__setattr__(
            self, "pointwise", tuple(sorted(self.pointwise, key=lambda tr: tr.etype))
        )
        object.__setattr__(
            self,
            "groups",
            tuple(sorted(self.groups, key=lambda blk: (blk[0].etype, _block_text(blk)))),
        )

    def __len__(self) -> int:
        return len(self.pointwise) + sum(len(blk) for blk in self.groups)


def _block_text(block: tuple[PointwiseTriple, ...]) -> str:
    return " | ".join(" ".join(tr.tokens()) for tr in block)


def compile_constraints(ir: IrRoot) -> ConstraintSeq:
    """Flatten an IR: repeat=N elements become N triples, groups N blocks."""
    pointwise: list[PointwiseTriple] = []
    groups: list[tuple[PointwiseTriple, ...]] = []
    for child in ir.children:
        if isinstance(child, ElementNode):
            pointwise.extend(
                [PointwiseTriple(child.etype, child.pos, child.size)] * child.count
            )
        else:
            block = tuple(
                sorted(
                    (PointwiseTriple(e.etype, e.pos, e.size) for e in child.items),
                    key=_triple_key,
                )
            )
            groups.extend([block] * child.repeat)
    return ConstraintSeq(tuple(pointwise), tuple(groups))


def render_constraint_tokens(cs: ConstraintSeq) -> str:
    segments = [" ".join(tr.tokens()) for tr in cs.pointwise]
    segments.extend(f"[ {_block_text(blk)} ]" for blk in cs.groups)
    return f" {SEP} ".join(segments)


def constraints_to_ir(cs: ConstraintSeq) -> IrRoot:
    """Reconstruct an IR stating exactly the constraints in ``cs``.

    Compiling the result yields ``cs`` back; repeated identical blocks fold
    into one group node per block, which the IR atom view merges again.
    """
    if not cs.pointwise and not cs.groups:
        raise EmptySetError("empty constraint sequence")
    children: list = [
        ElementNode(tr.etype, pos=tr.pos, size=tr.size) for tr in cs.pointwise
    ]
    children.extend(
        GroupNode(
            repeat=1,
            items=tuple(ElementNode(tr.etype, pos=tr.pos, size=tr.size) for tr in blk),
        )
        for blk in cs.groups
    )
    return IrRoot(tuple(children))


def _split_segments(text: str, where: str) -> tuple[list[list[str]], list[list[list[str]]]]:
    """Split token text into flat segments and bracketed block segments."""
    tokens = text.split()
    flat: list[list[str]] = []
    blocks: list[list[list[str]]] = []
    cur: list[str] = []
    block: list[list[str]] | None = None

    def close_segment() -> None:
        nonlocal cur
        if cur:
            (block if block is not None else flat).append(cur)
            cur = []

    for tok in tokens:
        if tok == "[":
            if block is not None:
                raise UnbalancedGroupBracketError(f"nested group bracket in {where}")
            close_segment()
            block = []
        elif tok == "]":
            if block is None:
                raise UnbalancedGroupBracketError(f"unmatched ']' in {where}")
            close_segment()
            if not block:
                raise UnbalancedGroupBracketError(f"empty group block in {where}")
            blocks.append(block)
            block = None
        elif tok == SEP:
            close_segment()
        else:
            cur.append(tok)
    if block is not None:
        raise UnbalancedGroupBracketError(f"unclosed '[' in {where}")
    close_segment()
    return flat, blocks


def _parse_triple(tokens: list[str], vocab: TypeVocabulary) -> PointwiseTriple:
    if len(tokens) < 3:
        raise MalformedTripleError(f"expected 'type pos size', got {' '.join(tokens)!r}")
    *name_toks, pos, size = tokens
    if pos not in POSITIONS and pos != UNDEF:
        raise MalformedTripleError(f"bad position token {pos!r}")
    if size not in SIZES and size != UNDEF:
        raise MalformedTripleError(f"bad size token {size!r}")
    name = " ".join(name_toks)
    if name not in vocab:
        raise UnknownTokenError(f"unknown element type {name!r}")
    return PointwiseTriple(name, None if pos == UNDEF else pos, None if size == UNDEF else size)


def parse_constraint_tokens(text: str, vocab: TypeVocabulary) -> ConstraintSeq:
    flat, blocks = _split_segments(text, "constraint sequence")
    pointwise = tuple(_parse_triple(seg, vocab) for seg in flat)
    groups = tuple(tuple(_parse_triple(seg, vocab) for seg in blk) for blk in blocks)
    return ConstraintSeq(pointwise, groups)


# --- layout sequences ---------------------------------------------------------

@dataclass(frozen=True)
class LayoutElementTok:
    """One placed element: optional completion flag, type, and 4 bin coords."""

    etype: ElementType
    l: int
    t: int
    w: int
    h: int
    completed: bool = False

    def tokens(self) -> list[str]:
        head = ["complete"] if self.completed else []
        return head + [self.etype, str(self.l), str(self.t), str(self.w), str(self.h)]


def _layout_key(el: LayoutElementTok) -> tuple:
    return (el.etype, el.t, el.l)


@dataclass(frozen=True)
class LayoutSeq:
    """Canonically ordered layout tokens: ungrouped elements, then blocks."""

    ungrouped: tuple[LayoutElementTok, ...] = ()
    groups: tuple[tuple[LayoutElementTok, ...], ...] = ()

    def __post_init__(self) -> None:
        if any(not blk for blk in self.groups):
            raise ValueError("layout group blocks must be nonempty")
        object.__setattr__(self, "ungrouped", tuple(sorted(self.ungrouped, key=_layout_key)))
        block_key = lambda blk: _layout_key(blk[0]) + (
            tuple(tok for el in blk for tok in el.tokens()),
        )
        object.__setattr__(self, "groups", tuple(sorted(self.groups, key=block_key)))

    def __len__(self) -> int:
        return len(self.ungrouped) + sum(len(blk) for blk in self.groups)

    def elements(self) -> list[LayoutElementTok]:
        out = list(self.ungrouped)
        for blk in self.groups:
            out.extend(blk)
        return out


def render_layout_tokens(seq: LayoutSeq) -> str:
    segments = [" ".join(el.tokens()) for el in seq.ungrouped]
    segments.extend(
        "[ " + " | ".join(" ".join(el.tokens()) for el in blk) + " ]" for blk in seq.groups
    )
    return f" {SEP} ".join(segments)


def _parse_layout_element(tokens: list[str], vocab: TypeVocabulary) -> LayoutElementTok:
    completed = bool(tokens) and tokens[0] == "complete"
    body = tokens[1:] if completed else tokens
    if len(body) < 5:
        raise TokenArityError(f"expected '[complete] type l t w h', got {' '.join(tokens)!r}")
    name_toks, coords = body[:-4], body[-4:]
    try:
        l, t, w, h = (int(c) for c in coords)
    except ValueError:
        raise TokenArityError(f"non-integer coordinates in {' '.join(tokens)!r}") from None
    if min(l, t) < 0 or min(w, h) < 1:
        raise BinOutOfRangeError(f"bins out of range in {' '.join(tokens)!r}")
    name = " ".join(name_toks)
    if name not in vocab:
        raise UnknownTokenError(f"unknown element type {name!r}")
    return LayoutElementTok(name, l, t, w, h, completed)


def parse_layout_tokens(text: str, vocab: TypeVocabulary) -> LayoutSeq:
    if not text.split():
        raise EmptyLayoutError("empty layout token string")
    flat, blocks = _split_segments(text, "layout sequence")
    ungrouped = tuple(_parse_layout_element(seg, vocab) for seg in flat)
    groups = tuple(tuple(_parse_layout_element(seg, vocab) for seg in blk) for blk in blocks)
    return LayoutSeq(ungrouped, groups)


# --- layout <-> sequence ------------------------------------------------------

def _encode_box(box: Box, canvas_w: float, canvas_h: float, grid: GridSpec) -> tuple:
    # Clamp to the visible region, then discretize; width/height round and a
    # final fit clamp keeps l+w within the grid.
    l0, t0 = max(box.l, 0.0), max(box.t, 0.0)
    r0, b0 = min(box.r, canvas_w), min(box.b, canvas_h)
    l = discretize(l0, canvas_w, grid.w_bins)
    t = discretize(t0, canvas_h, grid.h_bins)
    w = discretize_size(r0 - l0, canvas_w, grid.w_bins)
    h = discretize_size(b0 - t0, canvas_h, grid.h_bins)
    return l, t, min(w, grid.w_bins - l), min(h, grid.h_bins - t)


def encode_layout(doc: LayoutDoc, grid: GridSpec, completed_ids: set | None = None) -> LayoutSeq:
    """Discretize a document onto the grid as a canonical LayoutSeq.

    ``completed_ids`` are flat-element indices to flag ``complete`` on top of
    any elements already attribute-marked in the tree.
    """
    completed_ids = completed_ids or set()
    flat = flatten_elements(doc)
    if not flat:
        raise EmptyLayoutError(f"doc {doc.doc_id}: no typed elements to encode")
    groups = extract_groups(doc)
    in_group = grouped_indices(groups)

    def tok(fe) -> LayoutElementTok:
        l, t, w, h = _encode_box(fe.box, doc.canvas_w, doc.canvas_h, grid)
        return LayoutElementTok(fe.etype, l, t, w, h, fe.completed or fe.index in completed_ids)

    ungrouped = tuple(tok(fe) for fe in flat if fe.index not in in_group)
    blocks = tuple(
        tuple(tok(flat[i]) for i in item) for g in groups for item in g.items if item
    )
    return LayoutSeq(ungrouped, blocks)


def decode_layout(
    seq: LayoutSeq, grid: GridSpec, canvas: tuple[float, float], domain: str = "webui"
) -> LayoutDoc:
    """Map bins back to canvas units, keeping group blocks and completion flags.

    Each group block becomes an "item" container node, so re-encoding a
    decoded document reproduces the same block structure.
    """
    canvas_w, canvas_h = canvas
    if not len(seq):
        raise EmptyLayoutError("empty layout sequence")

    def node(el: LayoutElementTok) -> ElementTreeNode:
        if el.l + el.w > grid.w_bins or el.t + el.h > grid.h_bins:
            raise BinOutOfRangeError(
                f"{el.etype}: box ({el.l},{el.t},{el.w},{el.h}) exceeds "
                f"{grid.w_bins}x{grid.h_bins} grid"
            )
        box = Box(
            continuize(el.l, canvas_w, grid.w_bins),
            continuize(el.t, canvas_h, grid.h_bins),
            el.w * canvas_w / grid.w_bins,
            el.h * canvas_h / grid.h_bins,
        )
        attrs = {COMPLETE_ATTR: "1"} if el.completed else {}
        return ElementTreeNode(tag="el", box=box, etype=el.etype, attrs=attrs)

    children: list[ElementTreeNode] = [node(el) for el in seq.ungrouped]
    for blk in seq.groups:
        members = [node(el) for el in blk]
        l = min(m.box.l for m in members)
        t = min(m.box.t for m in members)
        r = max(m.box.r for m in members)
        b = max(m.box.b for m in members)
        children.append(
            ElementTreeNode(tag=ITEM_TAG, box=Box(l, t, r - l, b - t), children=members)
        )
    root = ElementTreeNode(tag="canvas", box=Box(0, 0, canvas_w, canvas_h), children=children)
    return LayoutDoc(doc_id="decoded", domain=domain, canvas_w=canvas_w, canvas_h=canvas_h, root=root)
