"""Classification head, binary cross-entropy, SPSA and the training loop.

The prediction pipeline per composition is parse -> pregroup diagram ->
cup-eliminating rewrite -> circuit compilation -> bind -> evaluation
(exact branch weights or sampled shots).  Parameters live on lexicon
snippets and are shared across compositions.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .circuit import (
    AnsatzConfig,
    ParamCircuit,
    QubitAssignment,
    bind,
    compile_diagram,
    param_vector_layout,
)
from .corpus import Corpus, Label, Record
from .diagram import PregroupDiagram, cfg_to_pregroup, rewrite, tensor_eval
from .errors import ZeroUsableShots
from .grammar import Lexicon, Token, parse
from .sim import NoiseConfig, sample


@dataclass(frozen=True)
class Model:
    """Snippet parameter vectors plus inference configuration."""

    params: dict[str, np.ndarray]
    qa: QubitAssignment = QubitAssignment()
    ansatz: AnsatzConfig = AnsatzConfig()
    epsilon: float = 1e-9
    threshold: float = 0.5

    @classmethod
    def initial(
        cls,
        lexicon: Lexicon | None = None,
        seed: int = 0,
        qa: QubitAssignment = QubitAssignment(),
        ansatz: AnsatzConfig = AnsatzConfig(),
    ) -> "Model":
        """Angles drawn uniformly from [0, 2*pi), seeded."""
        lexicon = lexicon or Lexicon.default()
        rng = np.random.default_rng(seed)
        layout = param_vector_layout(lexicon, qa, ansatz)
        params = {
            name: rng.uniform(0.0, 2.0 * math.pi, size=slots)
            for name, slots in layout.items()
        }
        return cls(params=params, qa=qa, ansatz=ansatz)

    def snippet_names(self) -> tuple[str, ...]:
        return tuple(sorted(self.params, key=lambda n: (n[0], int(n[1:]))))

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.params[n] for n in self.snippet_names()])

    def with_flat(self, theta: np.ndarray) -> "Model":
        params = {}
        pos = 0
        for name in self.snippet_names():
            size = len(self.params[name])
            params[name] = np.array(theta[pos : pos + size], dtype=float)
            pos += size
        return replace(self, params=params)

    def save(self, path: str | Path) -> None:
        payload = {
            "params": {n: list(map(float, v)) for n, v in sorted(self.params.items())},
            "q_n": self.qa.q_n,
            "q_s": self.qa.q_s,
            "iqp_layers": self.ansatz.iqp_layers,
            "epsilon": self.epsilon,
            "threshold": self.threshold,
        }
        Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True))

    @classmethod
    def load(cls, path: str | Path) -> "Model":
        payload = json.loads(Path(path).read_text())
        return cls(
            params={n: np.array(v, dtype=float) for n, v in payload["params"].items()},
            qa=QubitAssignment(payload["q_n"], payload["q_s"]),
            ansatz=AnsatzConfig(iqp_layers=payload["iqp_layers"]),
            epsilon=payload["epsilon"],
            threshold=payload["threshold"],
        )


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 2000
    a: float | None = None  # None: calibrate so the first step is ~0.1 rad
    c: float = 0.1
    A: float | None = None  # None: 0.01 * iterations
    alpha: float = 0.602
    gamma: float = 0.101
    mode: str = "exact"  # "exact" or "shots"
    shots: int = 8192
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    seed: int = 0
    target_first_step: float = 0.1
    restarts: int = 4
    checkpoint_every: int = 25  # dev-selection cadence; 0 disables

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.c <= 0 or (self.a is not None and self.a <= 0):
            raise ValueError("SPSA gains must be positive")
        if self.mode not in ("exact", "shots"):
            raise ValueError(f"unknown mode {self.mode!r}")

    @property
    def stability(self) -> float:
        return self.A if self.A is not None else 0.01 * max(self.iterations, 1)


def smooth_distribution(raw: tuple[float, float], epsilon: float = 1e-9) -> tuple[float, float]:
    """Additively smoothed, normalized prediction (l0, l1)."""
    l0 = raw[0] + epsilon
    l1 = raw[1] + epsilon
    total = l0 + l1
    return l0 / total, l1 / total


def predict_label(l0: float, threshold: float = 0.5) -> Label:
    """MEL when the first component clears the threshold, else RIT.

    Equality goes to RIT.
    """
    return Label.MEL if threshold < l0 else Label.RIT


class Pipeline:
    """Precompiled circuits for a set of token sequences.

    Caches the parse/diagram/rewrite/compile chain per distinct sequence
    and resolves symbolic parameters to flat-vector indices for fast
    repeated evaluation during training.
    """

    def __init__(
        self,
        qa: QubitAssignment = QubitAssignment(),
        ansatz: AnsatzConfig = AnsatzConfig(),
        use_rewrite: bool = True,
    ):
        self.qa = qa
        self.ansatz = ansatz
        self.use_rewrite = use_rewrite
        self._cache: dict[tuple[str, ...], ParamCircuit] = {}
        self._diagrams: dict[tuple[str, ...], tuple[PregroupDiagram, float]] = {}

    def _diagram(self, tokens: Sequence[Token]) -> tuple[PregroupDiagram, float]:
        key = tuple(t.name for t in tokens)
        if key not in self._diagrams:
            diagram = cfg_to_pregroup(parse(tokens))
            if self.use_rewrite:
                diagram = rewrite(diagram, self.qa.q_n, self.qa.q_s)
            # Each remaining cup compiles to per-qubit Bell effects, each
            # scaling the postselected amplitude by 1/sqrt(2); fold that
            # into a probability factor so tensor contraction reproduces
            # the circuit's branch weights exactly.
            types = diagram.occurrence_types
            pairs = sum(self.qa.for_type(types[i]) for i, _ in diagram.cups)
            self._diagrams[key] = (diagram, 0.5 ** pairs)
        return self._diagrams[key]

    def circuit(self, tokens: Sequence[Token]) -> ParamCircuit:
        key = tuple(t.name for t in tokens)
        if key not in self._cache:
            diagram, _ = self._diagram(tokens)
            self._cache[key] = compile_diagram(diagram, self.qa, self.ansatz)
        return self._cache[key]

    def raw_prediction(
        self,
        model: Model,
        tokens: Sequence[Token],
        mode: str = "exact",
        shots: int = 8192,
        noise: NoiseConfig | None = None,
        rng: np.random.Generator | None = None,
        tensor_cache: dict[str, np.ndarray] | None = None,
    ) -> tuple[float, float]:
        if mode == "exact":
            diagram, scale = self._diagram(tokens)
            vec = tensor_eval(
                diagram, model.params,
                q_n=self.qa.q_n, q_s=self.qa.q_s,
                iqp_layers=self.ansatz.iqp_layers,
                tensor_cache=tensor_cache,
            )
            return (abs(vec[0]) ** 2 * scale, abs(vec[1]) ** 2 * scale)
        bound = bind(self.circuit(tokens), model.params)
        try:
            result = sample(bound, shots, noise, rng)
        except ZeroUsableShots:
            return (0.0, 0.0)
        return (result.counts[0] / shots, result.counts[1] / shots)


def predict_distribution(
    model: Model,
    tokens: Sequence[Token],
    mode: str = "exact",
    shots: int = 8192,
    noise: NoiseConfig | None = None,
    rng: np.random.Generator | None = None,
    pipeline: Pipeline | None = None,
    tensor_cache: dict[str, np.ndarray] | None = None,
) -> tuple[float, float]:
    """Smoothed probability distribution (l0, l1) for one composition."""
    pipeline = pipeline or Pipeline(model.qa, model.ansatz)
    raw = pipeline.raw_prediction(model, tokens, mode, shots, noise, rng, tensor_cache)
    return smooth_distribution(raw, model.epsilon)


def bce_loss(
    model: Model,
    dataset: Iterable[Record],
    mode: str = "exact",
    shots: int = 8192,
    noise: NoiseConfig | None = None,
    rng: np.random.Generator | None = None,
    pipeline: Pipeline | None = None,
) -> float:
    """Negated binary cross-entropy sum over the dataset (lower is better)."""
    pipeline = pipeline or Pipeline(model.qa, model.ansatz)
    total = 0.0
    tensor_cache: dict[str, np.ndarray] = {}
    for record in dataset:
        l0, l1 = predict_distribution(
            model, record.tokens, mode, shots, noise, rng, pipeline, tensor_cache
        )
        # MEL's decision region is high l0 (see predict_label), so its
        # loss target puts the weight on l0; the one-hot notation names
        # the class, not the component pairing.
        target_l0 = 1.0 if record.label is Label.MEL else 0.0
        total -= target_l0 * math.log(l0) + (1.0 - target_l0) * math.log(l1)
    return total


def error_rate(
    model: Model,
    dataset: Sequence[Record],
    pipeline: Pipeline | None = None,
) -> float:
    correct = 0
    pipeline = pipeline or Pipeline(model.qa, model.ansatz)
    tensor_cache: dict[str, np.ndarray] = {}
    for record in dataset:
        l0, _ = predict_distribution(
            model, record.tokens, pipeline=pipeline, tensor_cache=tensor_cache
        )
        if predict_label(l0, model.threshold) is record.label:
            correct += 1
    return 1.0 - correct / len(dataset)


def spsa_step(
    model: Model,
    dataset: Sequence[Record],
    k: int,
    config: TrainConfig,
    rng: np.random.Generator,
    pipeline: Pipeline | None = None,
    a: float | None = None,
) -> Model:
    """One SPSA iteration: two loss evaluations at antithetic perturbations."""
    pipeline = pipeline or Pipeline(model.qa, model.ansatz)
    theta = model.flatten()
    c_k = config.c / (k + 1) ** config.gamma
    a_eff = a if a is not None else (config.a if config.a is not None else 1.0)
    a_k = a_eff / (config.stability + k + 1) ** config.alpha
    delta = rng.choice((-1.0, 1.0), size=theta.shape)

    def loss_at(vec: np.ndarray) -> float:
        return bce_loss(
            model.with_flat(vec),
            dataset,
            mode=config.mode,
            shots=config.shots,
            noise=config.noise,
            rng=rng,
            pipeline=pipeline,
        )

    plus = loss_at(theta + c_k * delta)
    minus = loss_at(theta - c_k * delta)
    grad = (plus - minus) / (2.0 * c_k) * (1.0 / delta)
    return model.with_flat(theta - a_k * grad)


def _calibrate_gain(
    model: Model,
    dataset: Sequence[Record],
    config: TrainConfig,
    rng: np.random.Generator,
    pipeline: Pipeline,
    probes: int = 3,
) -> float:
    """Pick ``a`` so the average first-step magnitude is ~target_first_step."""
    theta = model.flatten()
    mags = []
    for _ in range(probes):
        delta = rng.choice((-1.0, 1.0), size=theta.shape)
        plus = bce_loss(model.with_flat(theta + config.c * delta), dataset,
                        mode=config.mode, shots=config.shots, noise=config.noise,
                        rng=rng, pipeline=pipeline)
        minus = bce_loss(model.with_flat(theta - config.c * delta), dataset,
                         mode=config.mode, shots=config.shots, noise=config.noise,
                         rng=rng, pipeline=pipeline)
        mags.append(abs(plus - minus) / (2.0 * config.c))
    mean_grad = max(float(np.mean(mags)), 1e-12)
    return config.target_first_step * (config.stability + 1.0) ** config.alpha / mean_grad


@dataclass
class HistoryEntry:
    iteration: int
    loss: float
    train_error: float


def train(
    corpus: Corpus,
    config: TrainConfig,
    initial: Model | None = None,
    lexicon: Lexicon | None = None,
) -> tuple[Model, list[HistoryEntry]]:
    """Run SPSA on the corpus train split.

    Runs ``config.restarts`` independent optimizations (distinct
    initializations and perturbation streams) and returns the parameters
    with the best dev-split accuracy (ties broken by lowest combined
    dev+train loss), checkpointed every ``config.checkpoint_every``
    iterations.  Without a dev split (or with
    checkpointing disabled) restarts are compared by final train error and
    the final iterate is returned.  The history is the selected restart's
    full loss/error trace.

    ``initial`` carries parameters over from a previous phase, enabling
    the exact-pretrain-then-shots schedule.
    """
    dataset = corpus.subset("train")
    if config.iterations == 0:
        model = initial or Model.initial(lexicon, seed=config.seed)
        return model, []
    dev = corpus.split.get("dev", ()) if config.checkpoint_every > 0 else ()
    dev = tuple(corpus.records[i] for i in dev)

    best_score: tuple[float, float] | None = None
    best: tuple[Model, list[HistoryEntry]] | None = None
    for restart in range(config.restarts):
        seed_r = config.seed + 104729 * restart
        model = initial or Model.initial(lexicon, seed=seed_r)
        pipeline = Pipeline(model.qa, model.ansatz)
        rng = np.random.default_rng(seed_r)
        a = config.a
        if a is None:
            a = _calibrate_gain(model, dataset, config, rng, pipeline)
        history: list[HistoryEntry] = []
        # Checkpoint score: dev accuracy first, combined dev+train loss
        # as the tiebreak (accuracy on 25 dev items is coarse; the loss
        # separates checkpoints that tie).
        best_ckpt: tuple[tuple[float, float], Model] | None = None
        for k in range(config.iterations):
            model = spsa_step(model, dataset, k, config, rng, pipeline, a=a)
            loss = 0.0
            wrong = 0
            tensor_cache: dict[str, np.ndarray] = {}
            for record in dataset:
                l0, l1 = predict_distribution(
                    model, record.tokens, pipeline=pipeline, tensor_cache=tensor_cache
                )
                target_l0 = 1.0 if record.label is Label.MEL else 0.0
                loss -= target_l0 * math.log(l0) + (1.0 - target_l0) * math.log(l1)
                wrong += predict_label(l0, model.threshold) is not record.label
            history.append(HistoryEntry(k, loss, wrong / len(dataset)))
            is_last = k + 1 == config.iterations
            if dev and ((k + 1) % config.checkpoint_every == 0 or is_last):
                dev_acc = evaluate(model, dev, pipeline=pipeline)[0]
                dev_loss = bce_loss(model, dev, pipeline=pipeline)
                score = (dev_acc, -(dev_loss + loss))
                if best_ckpt is None or score > best_ckpt[0]:
                    best_ckpt = (score, model)
        if dev and best_ckpt is not None:
            score, candidate = best_ckpt
        else:
            candidate = model
            score = (-history[-1].train_error, 0.0)
        if best_score is None or score > best_score:
            best_score = score
            best = (candidate, history)
    assert best is not None
    return best


def evaluate(
    model: Model,
    dataset: Sequence[Record],
    mode: str = "exact",
    shots: int = 8192,
    noise: NoiseConfig | None = None,
    rng: np.random.Generator | None = None,
    pipeline: Pipeline | None = None,
) -> tuple[float, list[tuple[int, float, bool]]]:
    """Accuracy plus per-item (id, l0, correct) rows."""
    pipeline = pipeline or Pipeline(model.qa, model.ansatz)
    items = []
    correct = 0
    tensor_cache: dict[str, np.ndarray] = {}
    for record in dataset:
        l0, _ = predict_distribution(
            model, record.tokens, mode, shots, noise, rng, pipeline, tensor_cache
        )
        ok = predict_label(l0, model.threshold) is record.label
        correct += ok
        items.append((record.id, l0, ok))
    accuracy = correct / len(dataset) if dataset else 0.0
    return accuracy, items


def save_history(history: Sequence[HistoryEntry], path: str | Path) -> None:
    lines = ["iteration,loss,train_error"]
    lines += [f"{h.iteration},{h.loss:.10g},{h.train_error:.10g}" for h in history]
    Path(path).write_text("\n".join(lines) + "\n")


def save_evaluation(
    items: Sequence[tuple[int, float, bool]],
    dataset: Sequence[Record],
    threshold: float,
    path: str | Path,
) -> None:
    by_id = {r.id: r for r in dataset}
    lines = ["id,label,l0,predicted,correct"]
    for rec_id, l0, ok in items:
        predicted = predict_label(l0, threshold).value
        lines.append(f"{rec_id},{by_id[rec_id].label.value},{l0:.10g},{predicted},{int(ok)}")
    Path(path).write_text("\n".join(lines) + "\n")
