"""Layout corpus ingestion, normalization, and summary statistics.

A corpus is a stream of layout documents, each a tree of boxed elements over
a continuous canvas. Documents arrive as JSONL (one tree per line); loading
never rescales or quantizes geometry, so saved and reloaded corpora are
bit-identical. Derived views (flat typed-element lists, repeated-group
structure, per-type histograms) feed the synthesizer, the placer, and the
metrics.

JSONL schema per line::

    {"id": str, "domain": "webui"|"rico",
     "canvas": {"w": num, "h": num},
     "root": {"tag": str, "type": str?, "box": [l,t,w,h],
              "attrs": {str: str}?, "children": [...]}}

Labeled records may additionally carry {"text": str, "ir": str}.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

from .errors import EmptyCorpusError, SchemaViolationError
from .grid import GridSpec, discretize, discretize_size
from .vocab import ElementType, vocab_for

log = logging.getLogger("layoutir")

# Attribute marking an element as auto-completed rather than user-constrained.
COMPLETE_ATTR = "complete"

# Container tags that delimit repeated groups, per domain. Each direct child
# subtree of a container is one item; a bare "item" container is itself a
# single item (the form produced by decoding bracketed layout sequences).
GROUP_CONTAINER_TAGS: dict[str, frozenset] = {
    "webui": frozenset({"ul", "ol"}),
    "rico": frozenset({"list", "ul", "ol"}),
}
ITEM_TAG = "item"

MAX_ELEMENTS_PER_DOC = 100


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle in canvas units (left, top, width, height)."""

    l: float
    t: float
    w: float
    h: float

    @property
    def r(self) -> float:
        return self.l + self.w

    @property
    def b(self) -> float:
        return self.t + self.h

    @property
    def cx(self) -> float:
        return self.l + self.w / 2

    @property
    def cy(self) -> float:
        return self.t + self.h / 2

    @property
    def area(self) -> float:
        return self.w * self.h


@dataclass
class ElementTreeNode:
    """One node of a layout tree; boxes of children need not be contained."""

    tag: str
    box: Box
    etype: ElementType | None = None
    children: list["ElementTreeNode"] = field(default_factory=list)
    attrs: dict[str, str] = field(default_factory=dict)

    @property
    def completed(self) -> bool:
        return COMPLETE_ATTR in self.attrs


@dataclass
class LayoutDoc:
    doc_id: str
    domain: str
    canvas_w: float
    canvas_h: float
    root: ElementTreeNode

    def __post_init__(self) -> None:
        if self.canvas_w <= 0 or self.canvas_h <= 0:
            raise ValueError("canvas extents must be positive")


@dataclass
class LabeledTriple:
    """A text description paired with its IR text and reference layout."""

    text: str
    ir_text: str
    layout: LayoutDoc


@dataclass(frozen=True)
class FlatElement:
    """A typed element pulled out of the tree, in depth-first order."""

    index: int
    etype: ElementType
    box: Box
    completed: bool = False


@dataclass(frozen=True)
class ExtractedGroup:
    """A repeated-group container: flat-element indices partitioned by item."""

    box: Box
    items: tuple[tuple[int, ...], ...]


# --- JSONL persistence -------------------------------------------------------

def _node_from_json(obj, line: int) -> ElementTreeNode:
    if not isinstance(obj, dict):
        raise SchemaViolationError(line, "root", "node must be an object")
    tag = obj.get("tag")
    if not isinstance(tag, str) or not tag:
        raise SchemaViolationError(line, "tag", "missing or empty")
    box = obj.get("box")
    if (
        not isinstance(box, list)
        or len(box) != 4
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in box)
    ):
        raise SchemaViolationError(line, "box", "expected [l, t, w, h] numbers")
    etype = obj.get("type")
    if etype is not None and not isinstance(etype, str):
        raise SchemaViolationError(line, "type", "must be a string")
    attrs = obj.get("attrs", {})
    if not isinstance(attrs, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in attrs.items()
    ):
        raise SchemaViolationError(line, "attrs", "must map strings to strings")
    children_json = obj.get("children", [])
    if not isinstance(children_json, list):
        raise SchemaViolationError(line, "children", "must be a list")
    children = [_node_from_json(c, line) for c in children_json]
    return ElementTreeNode(
        tag=tag,
        box=Box(*(float(v) for v in box)),
        etype=etype,
        children=children,
        attrs=dict(attrs),
    )


def _node_to_json(node: ElementTreeNode) -> dict:
    out: dict = {"tag": node.tag, "box": [node.box.l, node.box.t, node.box.w, node.box.h]}
    if node.etype is not None:
        out["type"] = node.etype
    if node.attrs:
        out["attrs"] = node.attrs
    if node.children:
        out["children"] = [_node_to_json(c) for c in node.children]
    return out


def doc_from_json(obj: dict, line: int = 0) -> LayoutDoc:
    for key in ("id", "domain", "canvas", "root"):
        if key not in obj:
            raise SchemaViolationError(line, key, "missing")
    if obj["domain"] not in ("webui", "rico"):
        raise SchemaViolationError(line, "domain", f"unknown domain {obj['domain']!r}")
    canvas = obj["canvas"]
    if not isinstance(canvas, dict) or "w" not in canvas or "h" not in canvas:
        raise SchemaViolationError(line, "canvas", "expected {w, h}")
    try:
        return LayoutDoc(
            doc_id=str(obj["id"]),
            domain=obj["domain"],
            canvas_w=float(canvas["w"]),
            canvas_h=float(canvas["h"]),
            root=_node_from_json(obj["root"], line),
        )
    except ValueError as exc:
        raise SchemaViolationError(line, "canvas", str(exc)) from exc


def doc_to_json(doc: LayoutDoc) -> dict:
    return {
        "id": doc.doc_id,
        "domain": doc.domain,
        "canvas": {"w": doc.canvas_w, "h": doc.canvas_h},
        "root": _node_to_json(doc.root),
    }


def load_layout_jsonl(path_or_fp) -> Iterator[LayoutDoc]:
    """Stream documents from a JSONL file; geometry is kept bit-exact."""
    if hasattr(path_or_fp, "read"):
        yield from _load_stream(path_or_fp)
    else:
        with open(path_or_fp, "r", encoding="utf-8") as fp:
            yield from _load_stream(fp)


def _load_stream(fp: IO[str]) -> Iterator[LayoutDoc]:
    for lineno, line in enumerate(fp, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaViolationError(lineno, "json", str(exc)) from exc
        yield doc_from_json(obj, lineno)


def save_layout_jsonl(docs: Iterable[LayoutDoc], path_or_fp) -> int:
    """Write documents as JSONL; returns the record count."""
    if hasattr(path_or_fp, "write"):
        return _save_stream(docs, path_or_fp)
    with open(path_or_fp, "w", encoding="utf-8") as fp:
        return _save_stream(docs, fp)


def _save_stream(docs: Iterable[LayoutDoc], fp: IO[str]) -> int:
    n = 0
    for doc in docs:
        fp.write(json.dumps(doc_to_json(doc), separators=(", ", ": ")) + "\n")
        n += 1
    return n


# --- element typing -----------------------------------------------------------

_WEBUI_TAG_RULES = {
    "a": "link",
    "img": "image",
    "button": "button",
    "p": "text",
    "span": "text",
    "label": "text",
    "textarea": "input",
    "select": "input",
}

_WEBUI_CLASS_HINTS = (
    ("background", "background image"),
    ("logo", "logo"),
    ("icon", "icon"),
)


def infer_element_type(node: ElementTreeNode, domain: str) -> ElementType | None:
    """Map a markup node to a vocabulary type, or None for plain containers.

    An explicit ``type`` field always wins. Otherwise WebUI uses tag rules
    (headings are titles, anchors are links, inputs split on their type
    attribute) with class-name hints for imagery; RICO tags are vocabulary
    names already, modulo case and separators.
    """
    vocab = vocab_for(domain)
    if node.etype is not None:
        return node.etype if node.etype in vocab else None
    tag = node.tag.lower()
    if domain == "webui":
        if len(tag) == 2 and tag[0] == "h" and tag[1].isdigit():
            return "title"
        if tag == "input":
            itype = node.attrs.get("type", "").lower()
            return "submit" if itype == "submit" else "input"
        if tag in _WEBUI_TAG_RULES:
            return _WEBUI_TAG_RULES[tag]
        hint = node.attrs.get("class", "").lower()
        for needle, etype in _WEBUI_CLASS_HINTS:
            if needle in hint:
                return etype
        if "src" in node.attrs:
            return "image"
        return None
    name = tag.replace("_", " ").replace("-", " ")
    if name in vocab:
        return name
    return tag if tag in vocab else None  # preserves hyphenated names like multi-tab


def _walk_typed(doc: LayoutDoc) -> tuple[list[FlatElement], dict[int, int]]:
    """DFS over typed elements; returns flat list and node-id → index map."""
    out: list[FlatElement] = []
    by_node: dict[int, int] = {}
    dropped = 0

    def visit(node: ElementTreeNode) -> None:
        nonlocal dropped
        etype = infer_element_type(node, doc.domain)
        if etype is not None:
            b = node.box
            degenerate = b.w <= 0 or b.h <= 0
            outside = b.r <= 0 or b.b <= 0 or b.l >= doc.canvas_w or b.t >= doc.canvas_h
            if degenerate or outside:
                dropped += 1
            elif len(out) < MAX_ELEMENTS_PER_DOC:
                by_node[id(node)] = len(out)
                out.append(FlatElement(len(out), etype, b, node.completed))
        for child in node.children:
            visit(child)

    visit(doc.root)
    if dropped:
        log.debug("doc %s: dropped %d degenerate/off-canvas elements", doc.doc_id, dropped)
    return out, by_node


def flatten_elements(doc: LayoutDoc) -> list[FlatElement]:
    """Typed elements in depth-first preorder.

    Degenerate boxes (non-positive extent) and elements fully outside the
    canvas are dropped; drops are logged, not fatal, because scraped data
    contains them routinely. At most MAX_ELEMENTS_PER_DOC are kept.
    """
    return _walk_typed(doc)[0]


def extract_groups(doc: LayoutDoc) -> list[ExtractedGroup]:
    """Repeated groups: outermost list containers, members split per item.

    A list container (ul/ol and per-domain analogues) with at least two typed
    descendants yields one group whose items are its direct child subtrees.
    A bare "item" container yields a single-item group regardless of member
    count; that is the shape decoded layout sequences produce. Containers
    nested inside a matched one are not matched again, so every element
    belongs to at most one group.
    """
    containers = GROUP_CONTAINER_TAGS.get(doc.domain, frozenset())
    flat, by_node = _walk_typed(doc)

    def typed_indices(node: ElementTreeNode) -> list[int]:
        acc = []
        if id(node) in by_node:
            acc.append(by_node[id(node)])
        for child in node.children:
            acc.extend(typed_indices(child))
        return acc

    groups: list[ExtractedGroup] = []

    def visit(node: ElementTreeNode) -> None:
        tag = node.tag.lower()
        if tag == ITEM_TAG:
            members = typed_indices(node)
            if members:
                groups.append(ExtractedGroup(node.box, (tuple(members),)))
            return
        if tag in containers:
            items = tuple(
                tuple(ti) for child in node.children if (ti := typed_indices(child))
            )
            if sum(len(it) for it in items) >= 2:
                groups.append(ExtractedGroup(node.box, items))
                _check_containment(doc, node.box, items, flat)
                return
        for child in node.children:
            visit(child)

    visit(doc.root)
    return groups


def _check_containment(doc, box, items, flat) -> None:
    # Members should sit inside the container, within 2% of canvas slack.
    tol_x = 0.02 * doc.canvas_w
    tol_y = 0.02 * doc.canvas_h
    for item in items:
        for i in item:
            b = flat[i].box
            if b.l < box.l - tol_x or b.t < box.t - tol_y or b.r > box.r + tol_x or b.b > box.b + tol_y:
                log.debug("doc %s: group member %d escapes its container", doc.doc_id, i)


def grouped_indices(groups: list[ExtractedGroup]) -> set:
    return {i for g in groups for item in g.items for i in item}


# --- corpus statistics --------------------------------------------------------

@dataclass
class CorpusStats:
    """Per-type geometry histograms and type co-occurrence over a corpus.

    Histogram keys are grid bins so the placer can propose discrete
    candidates directly. All histograms for a type sum to its frequency.
    """

    domain: str
    grid: GridSpec
    n_docs: int = 0
    type_freq: Counter = field(default_factory=Counter)
    doc_freq: Counter = field(default_factory=Counter)
    size_hist: dict = field(default_factory=dict)  # etype -> Counter[(w,h) bins]
    pos_hist: dict = field(default_factory=dict)  # etype -> Counter[(l,t) bins]
    cooc: Counter = field(default_factory=Counter)  # (a,b) sorted pair -> doc count

    def add_doc(self, doc: LayoutDoc) -> None:
        flat = flatten_elements(doc)
        self.n_docs += 1
        present = sorted({fe.etype for fe in flat})
        for et in present:
            self.doc_freq[et] += 1
        for i, a in enumerate(present):
            for b in present[i + 1 :]:
                self.cooc[(a, b)] += 1
        for fe in flat:
            self.type_freq[fe.etype] += 1
            l = discretize(_clamp(fe.box.l, doc.canvas_w), doc.canvas_w, self.grid.w_bins)
            t = discretize(_clamp(fe.box.t, doc.canvas_h), doc.canvas_h, self.grid.h_bins)
            w = discretize_size(_clamp(fe.box.w, doc.canvas_w), doc.canvas_w, self.grid.w_bins)
            h = discretize_size(_clamp(fe.box.h, doc.canvas_h), doc.canvas_h, self.grid.h_bins)
            self.size_hist.setdefault(fe.etype, Counter())[(w, h)] += 1
            self.pos_hist.setdefault(fe.etype, Counter())[(l, t)] += 1

    def merge(self, other: "CorpusStats") -> "CorpusStats":
        if (other.domain, other.grid) != (self.domain, self.grid):
            raise ValueError("cannot merge stats across domains or grids")
        self.n_docs += other.n_docs
        self.type_freq += other.type_freq
        self.doc_freq += other.doc_freq
        self.cooc += other.cooc
        for key, hist in other.size_hist.items():
            self.size_hist.setdefault(key, Counter()).update(hist)
        for key, hist in other.pos_hist.items():
            self.pos_hist.setdefault(key, Counter()).update(hist)
        return self

    def modal_size(self, etype: ElementType) -> tuple[int, int] | None:
        """Most frequent (w, h) bin pair for the type; ties break smaller."""
        hist = self.size_hist.get(etype)
        if not hist:
            return None
        return min(hist.items(), key=lambda kv: (-kv[1], kv[0]))[0]

    def cooc_support(self, candidate: ElementType, given: ElementType) -> float:
        """P(candidate present | given present), estimated from doc counts."""
        denom = self.doc_freq.get(given, 0)
        if denom == 0:
            return 0.0
        pair = (candidate, given) if candidate < given else (given, candidate)
        return self.cooc.get(pair, 0) / denom

    def to_json(self) -> dict:
        return {
            "domain": self.domain,
            "grid": [self.grid.w_bins, self.grid.h_bins],
            "n_docs": self.n_docs,
            "type_freq": dict(self.type_freq),
            "doc_freq": dict(self.doc_freq),
            "size_hist": {
                et: [[w, h, c] for (w, h), c in sorted(hist.items())]
                for et, hist in sorted(self.size_hist.items())
            },
            "pos_hist": {
                et: [[l, t, c] for (l, t), c in sorted(hist.items())]
                for et, hist in sorted(self.pos_hist.items())
            },
            "cooc": [[a, b, c] for (a, b), c in sorted(self.cooc.items())],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CorpusStats":
        stats = cls(domain=obj["domain"], grid=GridSpec(*obj["grid"]), n_docs=obj["n_docs"])
        stats.type_freq = Counter(obj["type_freq"])
        stats.doc_freq = Counter(obj["doc_freq"])
        stats.size_hist = {
            et: Counter({(w, h): c for w, h, c in rows}) for et, rows in obj["size_hist"].items()
        }
        stats.pos_hist = {
            et: Counter({(l, t): c for l, t, c in rows}) for et, rows in obj["pos_hist"].items()
        }
        stats.cooc = Counter({(a, b): c for a, b, c in obj["cooc"]})
        return stats


def _clamp(v: float, hi: float) -> float:
    return min(max(v, 0.0), hi)


def compute_stats(docs: Iterable[LayoutDoc], domain: str, grid: GridSpec) -> CorpusStats:
    stats = CorpusStats(domain=domain, grid=grid)
    for doc in docs:
        stats.add_doc(doc)
    if stats.n_docs == 0:
        raise EmptyCorpusError("no documents in corpus")
    return stats
