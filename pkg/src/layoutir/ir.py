"""Intermediate representation of layout constraints.

The IR is a small bracketed language describing the elements a layout must
contain, together with optional position, size and repetition properties and
flat (non-nested) repeated groups. This module defines the AST, a lenient
recursive-descent parser, a canonical printer, and the constraint-multiset
view used to compare two IRs for semantic equality.

Text form examples::

    [ [e:title [prop:position "top"] ] [e:description [prop:repeat "2"] ] ]
    [e:title]
    [group [prop:repeat "3"] [item [e:title] [e:description] ] ]

The parser accepts bare or quoted property values and arbitrary whitespace;
a root wrapper ``[ ... ]`` may be omitted around a single element or group.
The printer always emits the canonical quoted, single-spaced form.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .errors import (
    DuplicatePropError,
    EmptySetError,
    IrSyntaxError,
    LengthMismatchError,
    NestedGroupError,
)
from .vocab import ElementType, TypeVocabulary

POSITIONS = ("top", "bottom", "left", "right")
SIZES = ("small", "large")
REPEAT_MAX = 100  # generous ceiling; the densest real layouts hold 78 elements


@dataclass(frozen=True)
class ElementNode:
    """One element with optional position/size/repeat properties.

    ``repeat=None`` means the property is absent (equivalent to 1 when
    expanding); group members never carry it.
    """

    etype: ElementType
    pos: str | None = None
    size: str | None = None
    repeat: int | None = None

    def __post_init__(self) -> None:
        if self.pos is not None and self.pos not in POSITIONS:
            raise ValueError(f"bad position value {self.pos!r}")
        if self.size is not None and self.size not in SIZES:
            raise ValueError(f"bad size value {self.size!r}")
        if self.repeat is not None and not (1 <= self.repeat <= REPEAT_MAX):
            raise ValueError(f"repeat {self.repeat!r} outside [1, {REPEAT_MAX}]")

    @property
    def count(self) -> int:
        return self.repeat if self.repeat is not None else 1


@dataclass(frozen=True)
class GroupNode:
    """A repeated group: ``repeat`` copies of the same item of elements."""

    repeat: int
    items: tuple[ElementNode, ...]

    def __post_init__(self) -> None:
        if not (1 <= self.repeat <= REPEAT_MAX):
            raise ValueError(f"group repeat {self.repeat!r} outside [1, {REPEAT_MAX}]")
        if not self.items:
            raise ValueError("group item must contain at least one element")
        for e in self.items:
            if e.repeat is not None:
                raise ValueError("group item elements may not carry repeat")


IrChild = ElementNode | GroupNode


@dataclass(frozen=True)
class IrRoot:
    children: tuple[IrChild, ...]

    def __post_init__(self) -> None:
        if not self.children:
            raise ValueError("IR must contain at least one element or group")


# --- constraint atoms -------------------------------------------------------
#
# The flattened, order-insensitive view of an IR. Element-level repeat
# expands to N copies; groups with identical item signatures merge into one
# hierarchy atom whose repeat is the total count. Group members contribute
# only to their hierarchy atom, never to the pointwise atoms.

@dataclass(frozen=True)
class TypeAtom:
    etype: ElementType


@dataclass(frozen=True)
class PosAtom:
    etype: ElementType
    value: str


@dataclass(frozen=True)
class SizeAtom:
    etype: ElementType
    value: str


MemberSig = tuple[ElementType, str | None, str | None]


@dataclass(frozen=True)
class HierarchyAtom:
    """Signature of a repeated group: sorted member (type, pos, size) triples."""

    members: tuple[MemberSig, ...]
    repeat: int


ConstraintAtom = TypeAtom | PosAtom | SizeAtom | HierarchyAtom


def member_sig(e: ElementNode) -> MemberSig:
    return (e.etype, e.pos, e.size)


def group_signature(items: tuple[ElementNode, ...]) -> tuple[MemberSig, ...]:
    return tuple(sorted((member_sig(e) for e in items), key=_sig_key))


def _sig_key(sig: MemberSig) -> tuple:
    return (sig[0], sig[1] or "", sig[2] or "")


def flatten_constraints(ir: IrRoot) -> Counter:
    """Multiset of constraint atoms equivalent to ``ir``.

    Returned as a Counter mapping atoms to multiplicities. Hierarchy atoms
    with the same member signature are merged (their repeats summed) so the
    result is invariant under splitting a group into identical copies.
    """
    atoms: Counter = Counter()
    hier: Counter = Counter()
    for child in ir.children:
        if isinstance(child, ElementNode):
            n = child.count
            atoms[TypeAtom(child.etype)] += n
            if child.pos is not None:
                atoms[PosAtom(child.etype, child.pos)] += n
            if child.size is not None:
                atoms[SizeAtom(child.etype, child.size)] += n
        else:
            hier[group_signature(child.items)] += child.repeat
    for sig, total in hier.items():
        atoms[HierarchyAtom(sig, total)] += 1
    return atoms


def ir_equal(a: IrRoot, b: IrRoot) -> bool:
    """True iff both IRs state the same constraint multiset."""
    return flatten_constraints(a) == flatten_constraints(b)


def ir_accuracy(pred: list[IrRoot], gold: list[IrRoot]) -> float:
    """Fraction of positions where predicted and gold IRs are equal."""
    if len(pred) != len(gold):
        raise LengthMismatchError(len(pred), len(gold))
    if not pred:
        raise EmptySetError("no IR pairs to compare")
    hits = sum(1 for p, g in zip(pred, gold) if ir_equal(p, g))
    return hits / len(pred)


# --- parsing -----------------------------------------------------------------

_LB = "["
_RB = "]"
_WORD = "word"
_QUOTED = "quoted"


def _lex(text: str) -> list[tuple[str, str, int]]:
    toks = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
        elif c == "[":
            toks.append((_LB, "[", i))
            i += 1
        elif c == "]":
            toks.append((_RB, "]", i))
            i += 1
        elif c == '"':
            j = text.find('"', i + 1)
            if j < 0:
                raise IrSyntaxError(i, {"closing quote"}, text[i : i + 8])
            toks.append((_QUOTED, text[i + 1 : j], i))
            i = j + 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in '[]"':
                j += 1
            toks.append((_WORD, text[i:j], i))
            i = j
    return toks


class _Parser:
    def __init__(self, text: str, vocab: TypeVocabulary):
        self.toks = _lex(text)
        self.vocab = vocab
        self.i = 0
        self.end = len(text)

    def _peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, "", self.end)

    def _next(self):
        tok = self._peek()
        self.i += 1
        return tok

    def _fail(self, expected: set[str]):
        kind, val, pos = self._peek()
        raise IrSyntaxError(pos, expected, val if kind else "end of input")

    def _expect(self, kind: str, expected: set[str]):
        tok = self._peek()
        if tok[0] != kind:
            self._fail(expected)
        return self._next()

    def parse_root(self) -> IrRoot:
        self._expect(_LB, {"["})
        kind, val, _ = self._peek()
        children: list[IrChild] = []
        if kind == _WORD and (val.startswith("e:") or val == "group"):
            # Bare form: the whole IR is a single element or group.
            children.append(self._parse_child_body())
        else:
            while True:
                kind, _, _ = self._peek()
                if kind == _RB:
                    break
                if kind != _LB:
                    self._fail({"[", "]"})
                self._next()
                children.append(self._parse_child_body())
            self._next()  # closing ]
        if self._peek()[0] is not None:
            self._fail({"end of input"})
        if not children:
            raise IrSyntaxError(self.end, {"element", "group"}, "]")
        return IrRoot(tuple(children))

    def _parse_child_body(self) -> IrChild:
        kind, val, _ = self._peek()
        if kind == _WORD and val.startswith("e:"):
            return self._parse_element_body(inside_item=False)
        if kind == _WORD and val == "group":
            return self._parse_group_body()
        self._fail({"e:<type>", "group"})

    def _parse_element_body(self, inside_item: bool) -> ElementNode:
        _, head, _ = self._next()
        words = [head[2:]] if len(head) > 2 else []
        while self._peek()[0] == _WORD:
            words.append(self._next()[1])
        if not words:
            self._fail({"element type name"})
        name = self.vocab.require(" ".join(words))
        pos = size = None
        repeat = None
        while self._peek()[0] == _LB:
            self._next()
            kind_name, value, at = self._parse_prop_body()
            if kind_name == "position":
                if pos is not None:
                    raise DuplicatePropError("position")
                pos = value
            elif kind_name == "size":
                if size is not None:
                    raise DuplicatePropError("size")
                size = value
            else:
                if inside_item:
                    raise IrSyntaxError(at, {"position", "size"}, "repeat")
                if repeat is not None:
                    raise DuplicatePropError("repeat")
                repeat = int(value)
        self._expect(_RB, {"]", "["})
        return ElementNode(name, pos=pos, size=size, repeat=repeat)

    def _parse_prop_body(self) -> tuple[str, str, int]:
        kind, head, at = self._peek()
        if kind != _WORD or not head.startswith("prop:"):
            self._fail({"prop:position", "prop:size", "prop:repeat"})
        self._next()
        prop_kind = head[5:]
        if not prop_kind:
            prop_kind = self._expect(_WORD, {"position", "size", "repeat"})[1]
        if prop_kind not in ("position", "size", "repeat"):
            raise IrSyntaxError(at, {"position", "size", "repeat"}, prop_kind)
        vkind, value, vat = self._peek()
        if vkind not in (_WORD, _QUOTED):
            self._fail({"property value"})
        self._next()
        if prop_kind == "position" and value not in POSITIONS:
            raise IrSyntaxError(vat, set(POSITIONS), value)
        if prop_kind == "size" and value not in SIZES:
            raise IrSyntaxError(vat, set(SIZES), value)
        if prop_kind == "repeat":
            if not value.isdigit() or not (1 <= int(value) <= REPEAT_MAX):
                raise IrSyntaxError(vat, {f"integer in [1, {REPEAT_MAX}]"}, value)
        self._expect(_RB, {"]"})
        return prop_kind, value, at

    def _parse_group_body(self) -> GroupNode:
        self._next()  # "group"
        self._expect(_LB, {"["})
        kind_name, value, at = self._parse_prop_body()
        if kind_name != "repeat":
            raise IrSyntaxError(at, {"repeat"}, kind_name)
        repeat = int(value)
        self._expect(_LB, {"["})
        kind, val, _ = self._peek()
        if kind != _WORD or val != "item":
            self._fail({"item"})
        self._next()
        items: list[ElementNode] = []
        while self._peek()[0] == _LB:
            self._next()
            kind, val, _ = self._peek()
            if kind == _WORD and val == "group":
                raise NestedGroupError()
            if kind != _WORD or not val.startswith("e:"):
                self._fail({"e:<type>"})
            items.append(self._parse_element_body(inside_item=True))
        self._expect(_RB, {"]", "["})  # closes item
        if not items:
            raise IrSyntaxError(self.end, {"element"}, "]")
        self._expect(_RB, {"]"})  # closes group
        return GroupNode(repeat, tuple(items))


def parse_ir(text: str, vocab: TypeVocabulary) -> IrRoot:
    """Parse IR text into an AST.

    Raises IrSyntaxError, UnknownTypeError, DuplicatePropError or
    NestedGroupError on invalid input.
    """
    return _Parser(text, vocab).parse_root()


# --- printing ---------------------------------------------------------------

def _print_element(e: ElementNode) -> str:
    props = []
    if e.pos is not None:
        props.append(f'[prop:position "{e.pos}"]')
    if e.size is not None:
        props.append(f'[prop:size "{e.size}"]')
    if e.repeat is not None:
        props.append(f'[prop:repeat "{e.repeat}"]')
    if props:
        return f"[e:{e.etype} " + " ".join(props) + " ]"
    return f"[e:{e.etype}]"


def _print_group(g: GroupNode) -> str:
    items = " ".join(_print_element(e) for e in g.items)
    return f'[group [prop:repeat "{g.repeat}"] [item {items} ] ]'


def print_ir(ir: IrRoot) -> str:
    """Canonical text form: quoted values, single spaces, explicit root."""
    parts = []
    for child in ir.children:
        if isinstance(child, ElementNode):
            parts.append(_print_element(child))
        else:
            parts.append(_print_group(child))
    return "[ " + " ".join(parts) + " ]"
