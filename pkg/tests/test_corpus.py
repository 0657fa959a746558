"""Corpus loading: record format, canonical data, split handling."""
import pytest

from quantone.corpus import Corpus, Label, Record, load_corpus, save_corpus
from quantone.errors import MalformedRecord
from quantone.grammar import parse, tokens_from_string


class TestLabel:
    def test_one_hot_bijection(self):
        for label in (Label.MEL, Label.RIT):
            assert Label.from_one_hot(label.one_hot) is label
        assert Label.MEL.one_hot == (0, 1)
        assert Label.RIT.one_hot == (1, 0)

    def test_unk_has_no_one_hot(self):
        with pytest.raises(ValueError):
            Label.UNK.one_hot


class TestCanonicalCorpus:
    def test_counts_and_split(self):
        corpus = load_corpus("canonical-100")
        assert len(corpus) == 100
        assert len(corpus.subset("train")) == 50
        assert len(corpus.subset("dev")) == 25
        assert len(corpus.subset("test")) == 25
        assert corpus.subset("all") == corpus.records

    def test_label_distribution(self):
        corpus = load_corpus("canonical-100")
        mel = sum(r.label is Label.MEL for r in corpus.records)
        assert mel == 48
        train_mel = sum(r.label is Label.MEL for r in corpus.subset("train"))
        assert train_mel == 24

    def test_known_items(self):
        corpus = load_corpus("canonical-100")
        by_id = {r.id: r for r in corpus.records}
        assert [t.name for t in by_id[1].tokens] == ["t3", "g1", "g1"]
        assert by_id[1].label is Label.MEL
        assert [t.name for t in by_id[2].tokens] == ["t3", "p8", "p1", "p8", "p1", "s4", "g1"]
        assert by_id[99].tokens == tokens_from_string("t3 p9 p5 p9 p9 s1 t3 g2 g2")

    def test_every_sequence_parses(self):
        corpus = load_corpus("canonical-100")
        for record in corpus.records:
            parse(record.tokens)


class TestCorpusIO:
    def test_round_trip(self, tmp_path):
        original = load_corpus("canonical-100")
        path = tmp_path / "corpus.tsv"
        save_corpus(original, path)
        loaded = load_corpus(path)
        assert loaded.records == original.records

    def test_unk_round_trip(self, tmp_path):
        corpus = Corpus.unsplit([Record(1, Label.UNK, tokens_from_string("g1"))])
        path = tmp_path / "c.tsv"
        save_corpus(corpus, path)
        assert load_corpus(path).records[0].label is Label.UNK

    def test_malformed_lines(self, tmp_path):
        cases = {
            "1\tMEL": "missing field",
            "x\tMEL\tg1": "bad id",
            "1\tFOO\tg1": "bad label",
            "1\tMEL\tz9": "bad token",
            "1\tMEL\t": "empty tokens",
        }
        for text in cases:
            path = tmp_path / "bad.tsv"
            path.write_text(text + "\n")
            with pytest.raises(MalformedRecord):
                load_corpus(path)

    def test_error_carries_line_number(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("1\tMEL\tg1\nbroken\n")
        with pytest.raises(MalformedRecord) as excinfo:
            load_corpus(path)
        assert excinfo.value.line_number == 2

    def test_comments_and_blank_lines_ignored(self, tmp_path):
        path = tmp_path / "c.tsv"
        path.write_text("# header\n\n1\tMEL\tg1\n")
        assert len(load_corpus(path)) == 1
