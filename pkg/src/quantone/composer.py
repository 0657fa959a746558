"""Generate-and-test composition against a trained classifier.

Candidate token sequences come from the grammar sampler; each is scored
by the model and kept only when the predicted label matches the request
and the prediction is confident enough.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .corpus import Label
from .grammar import GenConfig, Lexicon, Token, generate
from .learn import Model, Pipeline, predict_distribution, predict_label


@dataclass(frozen=True)
class ComposeRequest:
    target: Label
    count: int = 1
    accept_margin: float = 0.1
    max_attempts: int = 500
    gen: GenConfig = field(default_factory=GenConfig)
    seed: int = 0

    def __post_init__(self):
        if self.target not in (Label.MEL, Label.RIT):
            raise ValueError("target must be MEL or RIT")
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if not 0.0 <= self.accept_margin <= 0.5:
            raise ValueError("accept_margin must lie in [0, 0.5]")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")


@dataclass(frozen=True)
class ComposeReport:
    accepted: tuple[tuple[tuple[Token, ...], float], ...]
    attempts: int
    rejected_count: int
    exhausted: bool


def compose(
    model: Model,
    request: ComposeRequest,
    lexicon: Lexicon | None = None,
) -> ComposeReport:
    """Sample sequences until ``count`` acceptances or the attempt budget ends.

    A candidate is accepted when its predicted label matches the target and
    the target-class probability is at least ``0.5 + accept_margin``.
    Duplicate token sequences are generated at most once.
    """
    lexicon = lexicon or Lexicon.default()
    rng = random.Random(request.seed)
    pipeline = Pipeline(model.qa, model.ansatz)
    target_index = 0 if request.target is Label.MEL else 1
    seen: set[tuple[str, ...]] = set()
    accepted: list[tuple[tuple[Token, ...], float]] = []
    attempts = 0
    rejected = 0
    while len(accepted) < request.count and attempts < request.max_attempts:
        attempts += 1
        tokens = generate(request.gen, lexicon, rng)
        key = tuple(t.name for t in tokens)
        if key in seen:
            rejected += 1
            continue
        seen.add(key)
        dist = predict_distribution(model, tokens, pipeline=pipeline)
        matches = predict_label(dist[0], model.threshold) is request.target
        if matches and dist[target_index] >= 0.5 + request.accept_margin:
            accepted.append((tokens, dist[0]))
        else:
            rejected += 1
    return ComposeReport(
        accepted=tuple(accepted),
        attempts=attempts,
        rejected_count=rejected,
        exhausted=len(accepted) < request.count,
    )
