"""Musical context-free grammar: tokens, LL(1) parsing and random generation.

The grammar has a single nonterminal (the sentence) and three productions:

    S -> g                  a single ground snippet
    S -> p p p p s2         a motif of four primaries closed by a secondary
    S -> t S S              a tertiary snippet heading two sub-sentences

The snippet type of the next token selects the production, which is what
makes the grammar LL(1).
"""
from __future__ import annotations

import random
import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Sequence

from .errors import TrailingTokens, TruncatedInput, UnexpectedToken, UnknownToken


class SnippetType(Enum):
    GROUND = "g"
    PRIMARY = "p"
    SECONDARY = "s"
    TERTIARY = "t"


_TOKEN_RE = re.compile(r"^([gpst])([0-9]+)$")


@dataclass(frozen=True, order=True)
class Token:
    """A lexicon entry identifier, e.g. ``p4``."""

    name: str

    def __post_init__(self):
        if not _TOKEN_RE.match(self.name):
            raise UnknownToken(f"malformed token name {self.name!r}")

    @property
    def type(self) -> SnippetType:
        return SnippetType(self.name[0])

    def __str__(self) -> str:
        return self.name


def tokens_from_string(text: str) -> tuple[Token, ...]:
    """Split a whitespace-separated token string, e.g. ``"t3 g1 g1"``."""
    return tuple(Token(part) for part in text.split())


@dataclass(frozen=True)
class Lexicon:
    """An ordered set of tokens with unique names."""

    entries: tuple[Token, ...]

    def __post_init__(self):
        names = [t.name for t in self.entries]
        if len(set(names)) != len(names):
            raise ValueError("duplicate token names in lexicon")

    @classmethod
    def default(cls) -> "Lexicon":
        """The stock 18-snippet inventory: g1-g2, p1-p9, s1-s4, t1-t3."""
        names = (
            [f"g{i}" for i in range(1, 3)]
            + [f"p{i}" for i in range(1, 10)]
            + [f"s{i}" for i in range(1, 5)]
            + [f"t{i}" for i in range(1, 4)]
        )
        return cls(tuple(Token(n) for n in names))

    def of_type(self, kind: SnippetType) -> tuple[Token, ...]:
        return tuple(t for t in self.entries if t.type is kind)

    def counts(self) -> dict[SnippetType, int]:
        return {kind: len(self.of_type(kind)) for kind in SnippetType}

    def __contains__(self, token: Token) -> bool:
        return token in self.entries

    def __iter__(self) -> Iterator[Token]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


class DerivationTree:
    """Base class for parse-tree nodes."""

    def yield_tokens(self) -> tuple[Token, ...]:
        raise NotImplementedError


@dataclass(frozen=True)
class GroundLeaf(DerivationTree):
    token: Token

    def yield_tokens(self) -> tuple[Token, ...]:
        return (self.token,)


@dataclass(frozen=True)
class Motif:
    """Four primary snippets in order."""

    tokens: tuple[Token, Token, Token, Token]

    def __post_init__(self):
        if len(self.tokens) != 4 or any(
            t.type is not SnippetType.PRIMARY for t in self.tokens
        ):
            raise ValueError("a motif is exactly four primary tokens")


@dataclass(frozen=True)
class BasicSeq(DerivationTree):
    motif: Motif
    secondary: Token

    def __post_init__(self):
        if self.secondary.type is not SnippetType.SECONDARY:
            raise ValueError("basic sequence must end with a secondary token")

    def yield_tokens(self) -> tuple[Token, ...]:
        return self.motif.tokens + (self.secondary,)


@dataclass(frozen=True)
class CompositeSeq(DerivationTree):
    head: Token
    left: DerivationTree
    right: DerivationTree

    def __post_init__(self):
        if self.head.type is not SnippetType.TERTIARY:
            raise ValueError("composite sequence must start with a tertiary token")

    def yield_tokens(self) -> tuple[Token, ...]:
        return (self.head,) + self.left.yield_tokens() + self.right.yield_tokens()


def tree_yield(tree: DerivationTree) -> tuple[Token, ...]:
    """Left-to-right leaf order of a derivation tree."""
    return tree.yield_tokens()


def parse(tokens: Sequence[Token]) -> DerivationTree:
    """Parse a token sequence into its (unique) derivation tree.

    Raises UnexpectedToken, TruncatedInput or TrailingTokens on invalid
    input.
    """
    tokens = tuple(tokens)
    if not tokens:
        raise TruncatedInput("empty token sequence")
    tree, pos = _parse_sentence(tokens, 0)
    if pos != len(tokens):
        raise TrailingTokens(pos)
    return tree


def _parse_sentence(tokens: tuple[Token, ...], pos: int) -> tuple[DerivationTree, int]:
    if pos >= len(tokens):
        raise TruncatedInput(f"expected a sentence at position {pos}")
    head = tokens[pos]
    kind = head.type
    if kind is SnippetType.GROUND:
        return GroundLeaf(head), pos + 1
    if kind is SnippetType.PRIMARY:
        if pos + 5 > len(tokens):
            raise TruncatedInput(
                f"basic sequence starting at {pos} needs five tokens"
            )
        motif_toks = tokens[pos : pos + 4]
        for offset, tok in enumerate(motif_toks):
            if tok.type is not SnippetType.PRIMARY:
                raise UnexpectedToken(pos + offset, tok, "a primary token")
        closer = tokens[pos + 4]
        if closer.type is not SnippetType.SECONDARY:
            raise UnexpectedToken(pos + 4, closer, "a secondary token")
        return BasicSeq(Motif(tuple(motif_toks)), closer), pos + 5
    if kind is SnippetType.TERTIARY:
        left, pos2 = _parse_sentence(tokens, pos + 1)
        right, pos3 = _parse_sentence(tokens, pos2)
        return CompositeSeq(head, left, right), pos3
    raise UnexpectedToken(pos, head, "a ground, primary or tertiary token")


@dataclass(frozen=True)
class GenConfig:
    """Sampling weights and bounds for random composition generation."""

    weights: tuple[float, float, float] = (0.4, 0.4, 0.2)  # ground, basic, composite
    max_depth: int = 4
    seed: int = 0

    def __post_init__(self):
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be nonnegative")
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")


def generate(
    config: GenConfig, lexicon: Lexicon, rng: random.Random | None = None
) -> tuple[Token, ...]:
    """Sample one grammatical token sequence.

    Deterministic for a fixed config seed.  At maximum recursion depth the
    composite production is excluded so generation always terminates.
    """
    for kind in SnippetType:
        if not lexicon.of_type(kind):
            raise ValueError(f"lexicon has no entries of type {kind.value}")
    if rng is None:
        rng = random.Random(config.seed)
    return tree_yield(_gen_sentence(config, lexicon, rng, depth=1))


def _gen_sentence(
    config: GenConfig, lexicon: Lexicon, rng: random.Random, depth: int
) -> DerivationTree:
    w_ground, w_basic, w_comp = config.weights
    if depth >= config.max_depth:
        w_comp = 0.0
    total = w_ground + w_basic + w_comp
    if total <= 0.0:
        # Only the composite weight is positive but depth is exhausted.
        w_ground, total = 1.0, 1.0
    r = rng.random() * total
    if r < w_ground:
        return GroundLeaf(rng.choice(lexicon.of_type(SnippetType.GROUND)))
    if r < w_ground + w_basic:
        primaries = lexicon.of_type(SnippetType.PRIMARY)
        motif = Motif(tuple(rng.choice(primaries) for _ in range(4)))
        closer = rng.choice(lexicon.of_type(SnippetType.SECONDARY))
        return BasicSeq(motif, closer)
    head = rng.choice(lexicon.of_type(SnippetType.TERTIARY))
    left = _gen_sentence(config, lexicon, rng, depth + 1)
    right = _gen_sentence(config, lexicon, rng, depth + 1)
    return CompositeSeq(head, left, right)
