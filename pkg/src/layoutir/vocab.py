"""Element type vocabularies.

Element types are plain strings; a :class:`TypeVocabulary` is the closed set
of names valid for one layout domain. Multi-word names ("background image",
"pager indicator") are single vocabulary entries and must never be split.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import UnknownTypeError

ElementType = str


@dataclass(frozen=True)
class TypeVocabulary:
    """Ordered, closed set of element type names for one domain."""

    domain_name: str
    types: tuple[ElementType, ...]
    _index: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(set(self.types)) != len(self.types):
            raise ValueError(f"duplicate type names in {self.domain_name} vocabulary")
        object.__setattr__(self, "_index", frozenset(self.types))

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def require(self, name: str) -> ElementType:
        """Return ``name`` if it is a member, else raise UnknownTypeError."""
        if name not in self._index:
            raise UnknownTypeError(name, self.domain_name)
        return name


WEBUI_VOCAB = TypeVocabulary(
    "webui",
    (
        "text",
        "link",
        "button",
        "title",
        "description",
        "submit",
        "image",
        "background image",
        "icon",
        "logo",
        "input",
    ),
)

RICO_VOCAB = TypeVocabulary(
    "rico",
    (
        "text",
        "image",
        "icon",
        "list item",
        "text button",
        "toolbar",
        "web view",
        "input",
        "card",
        "advertisement",
        "background image",
        "drawer",
        "radio button",
        "checkbox",
        "multi-tab",
        "pager indicator",
        "modal",
        "on/off switch",
        "slider",
        "map view",
        "button bar",
        "video",
        "bottom navigation",
        "number stepper",
        "date picker",
    ),
)

VOCABS: dict[str, TypeVocabulary] = {"webui": WEBUI_VOCAB, "rico": RICO_VOCAB}


def vocab_for(domain: str) -> TypeVocabulary:
    try:
        return VOCABS[domain]
    except KeyError:
        raise KeyError(f"unknown domain {domain!r}; expected one of {sorted(VOCABS)}") from None
