"""Exception hierarchy shared across the package."""


class QuantoneError(Exception):
    """Base class for all library errors."""


class ParseError(QuantoneError):
    """Base class for grammar parsing failures."""


class UnexpectedToken(ParseError):
    """A token whose snippet type is inadmissible at its position."""

    def __init__(self, position: int, token, expected: str):
        self.position = position
        self.token = token
        self.expected = expected
        super().__init__(
            f"unexpected token {token!r} at position {position}: expected {expected}"
        )


class TruncatedInput(ParseError):
    """The token sequence ended before a production was complete."""


class TrailingTokens(ParseError):
    """Input continues past a complete sentence."""

    def __init__(self, position: int):
        self.position = position
        super().__init__(f"trailing tokens starting at position {position}")


class MalformedRecord(QuantoneError):
    """A corpus file line that does not match the record format."""

    def __init__(self, line_number: int, reason: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {reason}")


class MalformedLine(QuantoneError):
    """A lexicon score file line that does not match the expected format."""

    def __init__(self, line_number: int, reason: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {reason}")


class UnknownToken(QuantoneError):
    """A token name with no entry in the active lexicon."""


class RangeViolation(QuantoneError):
    """A note event field outside its allowed range."""


class NonSentenceDiagram(QuantoneError):
    """A diagram whose open wire is not the plain sentence type."""


class MissingParameters(QuantoneError):
    """A snippet referenced by a circuit has no parameter vector."""


class SlotCountMismatch(QuantoneError):
    """A snippet's parameter vector has the wrong number of slots."""


class WidthExceeded(QuantoneError):
    """A circuit is wider than the exact-evaluation cap."""

    def __init__(self, width: int, cap: int):
        self.width = width
        self.cap = cap
        super().__init__(f"circuit width {width} exceeds evaluation cap {cap}")


class ZeroUsableShots(QuantoneError):
    """All shots failed postselection; no counts are available."""
