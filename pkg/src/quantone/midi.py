"""Snippet score lexicon and Standard MIDI File rendering.

Each token owns a fixed two-bar (8-beat) snippet of notes with rational
onsets and durations; a token sequence renders by concatenating snippets
end to end.  Output is a deterministic single-track format-0 SMF.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import MalformedLine, RangeViolation, UnknownToken
from .grammar import Lexicon, Token

SNIPPET_BEATS = 8
TICKS_PER_QUARTER = 480
PIANO_LOW, PIANO_HIGH = 21, 108


@dataclass(frozen=True)
class NoteEvent:
    pitch: int
    onset: Fraction
    duration: Fraction
    velocity: int

    def __post_init__(self):
        if not PIANO_LOW <= self.pitch <= PIANO_HIGH:
            raise RangeViolation(
                f"pitch {self.pitch} outside piano range {PIANO_LOW}-{PIANO_HIGH}"
            )
        if self.onset < 0:
            raise RangeViolation(f"onset {self.onset} is negative")
        if self.duration <= 0:
            raise RangeViolation(f"duration {self.duration} is not positive")
        if not 1 <= self.velocity <= 127:
            raise RangeViolation(f"velocity {self.velocity} outside 1-127")

    def shifted(self, beats: Fraction | int) -> "NoteEvent":
        return NoteEvent(self.pitch, self.onset + beats, self.duration, self.velocity)


@dataclass(frozen=True)
class SnippetScore:
    token: Token
    events: tuple[NoteEvent, ...]
    length_beats: int = SNIPPET_BEATS

    def __post_init__(self):
        for ev in self.events:
            if ev.onset + ev.duration > self.length_beats:
                raise RangeViolation(
                    f"event in {self.token.name} extends past beat {self.length_beats}"
                )


@dataclass(frozen=True)
class RenderConfig:
    tempo_bpm: float = 120.0
    numerator: int = 4
    denominator: int = 4
    program: int = 0

    def __post_init__(self):
        if self.tempo_bpm <= 0:
            raise ValueError("tempo must be positive")
        if not 0 <= self.program <= 127:
            raise ValueError("program must be 0-127")


def _parse_fraction(text: str, line_number: int) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise MalformedLine(line_number, f"bad rational {text!r}") from exc


def load_lexicon_scores(
    path: str | Path | None = None,
    lexicon: Lexicon | None = None,
) -> dict[Token, SnippetScore]:
    """Read `token pitch onset dur velocity` lines into per-token scores.

    Onset and duration are rationals (``num/den`` or an integer).  With no
    path, the bundled default score set is loaded.  Tokens must belong to
    the lexicon; every lexicon token gets a score (possibly empty/silent).
    """
    lexicon = lexicon or Lexicon.default()
    if path is None:
        text = (
            resources.files("quantone") / "data" / "default_scores.txt"
        ).read_text()
    else:
        text = Path(path).read_text()
    known = {t.name: t for t in lexicon.entries}
    events: dict[Token, list[NoteEvent]] = {t: [] for t in lexicon.entries}
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 5:
            raise MalformedLine(line_number, f"expected 5 fields, got {len(parts)}")
        name, pitch_s, onset_s, dur_s, vel_s = parts
        if name not in known:
            raise UnknownToken(f"line {line_number}: unknown token {name!r}")
        try:
            pitch = int(pitch_s)
            velocity = int(vel_s)
        except ValueError as exc:
            raise MalformedLine(line_number, "bad integer field") from exc
        event = NoteEvent(
            pitch,
            _parse_fraction(onset_s, line_number),
            _parse_fraction(dur_s, line_number),
            velocity,
        )
        events[known[name]].append(event)
    return {
        token: SnippetScore(token, tuple(evs)) for token, evs in events.items()
    }


def render(
    tokens: Sequence[Token],
    scores: Mapping[Token, SnippetScore],
    cfg: RenderConfig = RenderConfig(),
) -> list[NoteEvent]:
    """Concatenate snippet scores; snippet k occupies beats [8k, 8(k+1))."""
    out: list[NoteEvent] = []
    for k, token in enumerate(tokens):
        if token not in scores:
            raise UnknownToken(f"no score for token {token.name!r}")
        offset = Fraction(SNIPPET_BEATS * k)
        out.extend(ev.shifted(offset) for ev in scores[token].events)
    return out


def _var_len(value: int) -> bytes:
    """MIDI variable-length quantity encoding."""
    if value < 0:
        raise ValueError("negative delta time")
    chunks = [value & 0x7F]
    value >>= 7
    while value:
        chunks.append(0x80 | (value & 0x7F))
        value >>= 7
    return bytes(reversed(chunks))


def smf_bytes(events: Iterable[NoteEvent], cfg: RenderConfig = RenderConfig()) -> bytes:
    """Serialize events to a format-0 Standard MIDI File byte string.

    Deterministic: simultaneous messages are ordered note-off first, then
    by pitch, then note-on before note-off bookkeeping ties.
    """
    tempo_us = round(60_000_000 / cfg.tempo_bpm)
    # (tick, sort_class, pitch, message); sort_class 0 = off, 1 = on
    messages: list[tuple[int, int, int, bytes]] = []
    for ev in events:
        on_tick = int(ev.onset * TICKS_PER_QUARTER)
        off_tick = int((ev.onset + ev.duration) * TICKS_PER_QUARTER)
        messages.append((on_tick, 1, ev.pitch, bytes((0x90, ev.pitch, ev.velocity))))
        messages.append((off_tick, 0, ev.pitch, bytes((0x80, ev.pitch, 0))))
    messages.sort(key=lambda m: (m[0], m[1], m[2]))

    track = bytearray()
    track += _var_len(0) + bytes((0xFF, 0x51, 0x03)) + tempo_us.to_bytes(3, "big")
    track += _var_len(0) + bytes(
        (0xFF, 0x58, 0x04, cfg.numerator, _denominator_power(cfg.denominator), 24, 8)
    )
    track += _var_len(0) + bytes((0xC0, cfg.program))
    cursor = 0
    for tick, _, _, message in messages:
        track += _var_len(tick - cursor) + message
        cursor = tick
    track += _var_len(0) + bytes((0xFF, 0x2F, 0x00))

    header = b"MThd" + (6).to_bytes(4, "big")
    header += (0).to_bytes(2, "big") + (1).to_bytes(2, "big")
    header += TICKS_PER_QUARTER.to_bytes(2, "big")
    return header + b"MTrk" + len(track).to_bytes(4, "big") + bytes(track)


def _denominator_power(denominator: int) -> int:
    power = denominator.bit_length() - 1
    if 1 << power != denominator:
        raise ValueError("time signature denominator must be a power of two")
    return power


def write_midi(
    events: Iterable[NoteEvent],
    cfg: RenderConfig = RenderConfig(),
    path: str | Path = "out.mid",
) -> None:
    Path(path).write_bytes(smf_bytes(events, cfg))
