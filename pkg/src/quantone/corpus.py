"""Annotated composition corpora: record format, file I/O, canonical data.

Corpus files are UTF-8 text, one record per line:

    id<TAB>LABEL<TAB>tok1 tok2 ...

with LABEL in {MEL, RIT, UNK}.  The canonical 100-piece corpus ships with
the package and loads by the name ``canonical-100``; its split is the
fixed 50/25/25 train/dev/test partition by record id.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

from .errors import MalformedRecord, UnknownToken
from .grammar import Token, tokens_from_string

CANONICAL_NAME = "canonical-100"


class Label(Enum):
    MEL = "MEL"
    RIT = "RIT"
    UNK = "UNK"  # unannotated, as written by gen-corpus

    @property
    def one_hot(self) -> tuple[int, int]:
        if self is Label.MEL:
            return (0, 1)
        if self is Label.RIT:
            return (1, 0)
        raise ValueError("UNK labels have no one-hot encoding")

    @classmethod
    def from_one_hot(cls, pair: tuple[int, int]) -> "Label":
        if tuple(pair) == (0, 1):
            return cls.MEL
        if tuple(pair) == (1, 0):
            return cls.RIT
        raise ValueError(f"not a one-hot label: {pair!r}")


@dataclass(frozen=True)
class Record:
    id: int
    label: Label
    tokens: tuple[Token, ...]


@dataclass(frozen=True)
class Corpus:
    records: tuple[Record, ...]
    split: dict[str, tuple[int, ...]]  # name -> indices into records

    def subset(self, name: str) -> tuple[Record, ...]:
        if name == "all":
            return self.records
        return tuple(self.records[i] for i in self.split[name])

    def __len__(self) -> int:
        return len(self.records)

    @classmethod
    def unsplit(cls, records) -> "Corpus":
        records = tuple(records)
        return cls(records, _default_split(len(records)))


def _parse_line(line: str, line_number: int) -> Record:
    parts = line.split("\t")
    if len(parts) != 3:
        raise MalformedRecord(line_number, f"expected 3 tab-separated fields, got {len(parts)}")
    id_text, label_text, token_text = parts
    try:
        rec_id = int(id_text)
    except ValueError:
        raise MalformedRecord(line_number, f"bad record id {id_text!r}") from None
    try:
        label = Label(label_text)
    except ValueError:
        raise MalformedRecord(line_number, f"bad label {label_text!r}") from None
    try:
        tokens = tokens_from_string(token_text)
    except UnknownToken as exc:
        raise MalformedRecord(line_number, str(exc)) from None
    if not tokens:
        raise MalformedRecord(line_number, "empty token sequence")
    return Record(rec_id, label, tokens)


def _records_from_text(text: str) -> tuple[Record, ...]:
    records = []
    for line_number, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        records.append(_parse_line(line, line_number))
    return tuple(records)


def _default_split(n: int) -> dict[str, tuple[int, ...]]:
    """50/25/25 split by position for a 100-record corpus, else everything
    in train."""
    if n == 100:
        return {
            "train": tuple(range(0, 50)),
            "dev": tuple(range(50, 75)),
            "test": tuple(range(75, 100)),
        }
    return {"train": tuple(range(n)), "dev": (), "test": ()}


def load_corpus(path_or_name: str | Path) -> Corpus:
    """Load a corpus file, or the embedded canonical corpus by name."""
    if str(path_or_name) == CANONICAL_NAME:
        text = (
            resources.files("quantone").joinpath("data/canonical_100.tsv").read_text()
        )
    else:
        text = Path(path_or_name).read_text(encoding="utf-8")
    records = _records_from_text(text)
    return Corpus(records, _default_split(len(records)))


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    lines = ["# id<TAB>LABEL<TAB>tok1 tok2 ..."]
    lines += [
        f"{r.id}\t{r.label.value}\t{' '.join(t.name for t in r.tokens)}"
        for r in corpus.records
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
