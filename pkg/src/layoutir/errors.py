"""Exception taxonomy shared across the toolkit.

Every error carries a stable ``code`` string so CLI diagnostics and
foreign-language callers can dispatch on it without parsing messages.
"""

from __future__ import annotations


class LayoutIrError(Exception):
    """Base class for all toolkit errors."""

    code = "Error"


# --- IR grammar ---------------------------------------------------------

class IrSyntaxError(LayoutIrError):
    """Input text does not derive from the IR grammar."""

    code = "SyntaxError"

    def __init__(self, position: int, expected: set[str], found: str = ""):
        self.position = position
        self.expected = expected
        self.found = found
        want = ", ".join(sorted(expected))
        super().__init__(f"at offset {position}: expected {want}, found {found!r}")


class UnknownTypeError(LayoutIrError):
    code = "UnknownType"

    def __init__(self, name: str, domain: str = ""):
        self.name = name
        suffix = f" in {domain} vocabulary" if domain else ""
        super().__init__(f"unknown element type {name!r}{suffix}")


class DuplicatePropError(LayoutIrError):
    code = "DuplicateProp"

    def __init__(self, kind: str):
        self.kind = kind
        super().__init__(f"duplicate {kind!r} property on one element")


class NestedGroupError(LayoutIrError):
    code = "NestedGroup"

    def __init__(self) -> None:
        super().__init__("groups may contain only elements, not other groups")


class LengthMismatchError(LayoutIrError):
    code = "LengthMismatch"

    def __init__(self, a: int, b: int):
        super().__init__(f"sequence lengths differ: {a} vs {b}")


# --- token sequences -----------------------------------------------------

class MalformedTripleError(LayoutIrError):
    code = "MalformedTriple"


class UnbalancedGroupBracketError(LayoutIrError):
    code = "UnbalancedGroupBracket"


class UnknownTokenError(LayoutIrError):
    code = "UnknownToken"


class OutOfRangeError(LayoutIrError):
    code = "OutOfRange"


class TokenArityError(LayoutIrError):
    code = "TokenArity"


class BinOutOfRangeError(LayoutIrError):
    code = "BinOutOfRange"


class EmptyLayoutError(LayoutIrError):
    code = "EmptyLayout"


# --- corpus ---------------------------------------------------------------

class SchemaViolationError(LayoutIrError):
    code = "SchemaViolation"

    def __init__(self, line: int, field: str, detail: str = ""):
        self.line = line
        self.field = field
        msg = f"line {line}: bad or missing field {field!r}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class EmptyCorpusError(LayoutIrError):
    code = "EmptyCorpus"


# --- synthesis ------------------------------------------------------------

class NoTypedElementsError(LayoutIrError):
    code = "NoTypedElements"


# --- placer ----------------------------------------------------------------

class InfeasibleError(LayoutIrError):
    code = "Infeasible"

    def __init__(self, constraint: str):
        self.constraint = constraint
        super().__init__(f"cannot satisfy constraint: {constraint}")


# --- metrics ----------------------------------------------------------------

class EmptySetError(LayoutIrError):
    code = "EmptySet"


class MissingGroupStructureError(LayoutIrError):
    code = "MissingGroupStructure"
