"""Grammar: token/lexicon invariants, LL(1) parsing, generation round-trips."""
import random

import pytest

from quantone.errors import (
    TrailingTokens,
    TruncatedInput,
    UnexpectedToken,
    UnknownToken,
)
from quantone.grammar import (
    BasicSeq,
    CompositeSeq,
    GenConfig,
    GroundLeaf,
    Lexicon,
    Motif,
    SnippetType,
    Token,
    generate,
    parse,
    tokens_from_string,
    tree_yield,
)


def toks(text):
    return tokens_from_string(text)


class TestToken:
    def test_type_from_letter(self):
        assert Token("g1").type is SnippetType.GROUND
        assert Token("p4").type is SnippetType.PRIMARY
        assert Token("s2").type is SnippetType.SECONDARY
        assert Token("t3").type is SnippetType.TERTIARY

    def test_bad_names_rejected(self):
        for bad in ("x1", "p", "1p", "G1", "p1x"):
            with pytest.raises(UnknownToken):
                Token(bad)

    def test_tokens_from_string(self):
        assert [t.name for t in toks("t3 g1 g1")] == ["t3", "g1", "g1"]


class TestLexicon:
    def test_default_inventory(self):
        lex = Lexicon.default()
        assert lex.counts() == {
            SnippetType.GROUND: 2,
            SnippetType.PRIMARY: 9,
            SnippetType.SECONDARY: 4,
            SnippetType.TERTIARY: 3,
        }
        assert len(lex.entries) == 18
        assert len({t.name for t in lex.entries}) == 18


class TestParse:
    def test_composite_of_grounds(self):
        tree = parse(toks("t3 g1 g1"))
        assert isinstance(tree, CompositeSeq)
        assert tree.head.name == "t3"
        assert isinstance(tree.left, GroundLeaf)
        assert isinstance(tree.right, GroundLeaf)

    def test_basic_sequence(self):
        tree = parse(toks("p9 p4 p4 p4 s3"))
        assert isinstance(tree, BasicSeq)
        assert isinstance(tree.motif, Motif)
        assert [t.name for t in tree.motif.tokens] == ["p9", "p4", "p4", "p4"]
        assert tree.secondary.name == "s3"

    def test_single_ground(self):
        tree = parse(toks("g1"))
        assert isinstance(tree, GroundLeaf)
        assert tree.token.name == "g1"

    def test_nested_composite(self):
        tree = parse(toks("t3 p9 p5 p9 p9 s1 t3 g2 g2"))
        assert isinstance(tree, CompositeSeq)
        assert isinstance(tree.left, BasicSeq)
        assert isinstance(tree.right, CompositeSeq)
        assert isinstance(tree.right.left, GroundLeaf)

    def test_truncated(self):
        with pytest.raises(TruncatedInput):
            parse(toks("t3 g1"))
        with pytest.raises(TruncatedInput):
            parse(toks("p1 p2 p3 p4"))
        with pytest.raises(TruncatedInput):
            parse([])

    def test_unexpected_token(self):
        with pytest.raises(UnexpectedToken) as excinfo:
            parse(toks("p1 p2 s1 p4 s2"))
        assert excinfo.value.position == 2

    def test_secondary_cannot_start(self):
        with pytest.raises(UnexpectedToken):
            parse(toks("s1"))

    def test_trailing_tokens(self):
        with pytest.raises(TrailingTokens):
            parse(toks("g1 g1"))

    def test_yield_round_trip(self):
        for text in ("g2", "t3 p8 p1 p8 p1 s4 g1", "t1 t2 g1 g2 p1 p2 p3 p4 s1"):
            tree = parse(toks(text))
            assert tree_yield(tree) == tuple(toks(text))
            assert parse(tree_yield(tree)) == tree


class TestGenerate:
    def test_weights_force_ground(self):
        cfg = GenConfig(weights=(1.0, 0.0, 0.0), seed=7)
        tokens = generate(cfg, Lexicon.default())
        assert len(tokens) == 1 and tokens[0].type is SnippetType.GROUND

    def test_weights_force_basic(self):
        cfg = GenConfig(weights=(0.0, 1.0, 0.0), seed=7)
        tokens = generate(cfg, Lexicon.default())
        types = [t.type for t in tokens]
        assert types == [SnippetType.PRIMARY] * 4 + [SnippetType.SECONDARY]

    def test_parse_oracle_many_seeds(self):
        lex = Lexicon.default()
        cfg = GenConfig()
        rng = random.Random(123)
        for _ in range(1000):
            tokens = generate(cfg, lex, rng)
            assert tree_yield(parse(tokens)) == tokens

    def test_seed_determinism(self):
        cfg = GenConfig(seed=42)
        a = generate(cfg, Lexicon.default())
        b = generate(cfg, Lexicon.default())
        assert a == b

    def test_depth_bound(self):
        lex = Lexicon.default()
        cfg = GenConfig(weights=(0.0, 0.0, 1.0), max_depth=3, seed=5)
        rng = random.Random(9)
        for _ in range(50):
            tokens = generate(cfg, lex, rng)
            # depth-3 pure-composite trees cap out at 7 tokens
            assert len(tokens) <= 7

    def test_bad_config(self):
        with pytest.raises(ValueError):
            GenConfig(weights=(-0.1, 0.6, 0.5))
        with pytest.raises(ValueError):
            GenConfig(weights=(0.0, 0.0, 0.0))
        with pytest.raises(ValueError):
            GenConfig(max_depth=0)
