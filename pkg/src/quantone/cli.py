"""Command-line pipeline: corpus generation, training, evaluation,
classification, composition, and manifest replay.

Every command writes a ``manifest.json`` capturing the resolved options,
seeds, and SHA-256 checksums of its outputs; ``replay`` re-runs a
manifest and verifies byte-for-byte reproduction.

Option precedence: explicit flags > ``--config`` file (flat ``key=value``
lines) > built-in defaults.  ``QUANTONE_SEED`` supplies the seed when no
flag or config entry does.
"""
from __future__ import annotations

import hashlib
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import click

from . import __version__
from .composer import ComposeReport, ComposeRequest, compose
from .corpus import Corpus, Label, Record, load_corpus, save_corpus
from .errors import QuantoneError
from .grammar import GenConfig, Lexicon, generate, tokens_from_string
from .learn import (
    Model,
    Pipeline,
    TrainConfig,
    evaluate,
    predict_distribution,
    predict_label,
    save_evaluation,
    save_history,
    train,
)
from .midi import RenderConfig, load_lexicon_scores, render, write_midi
from .sim import NoiseConfig

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4
EXIT_EXHAUSTED = 5


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _read_config_file(path: str | None) -> dict[str, str]:
    if not path:
        return {}
    values = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise click.UsageError(f"bad config line (want key=value): {line!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def _resolve(ctx: click.Context, config: dict[str, str], name: str, cast=str):
    """Apply flag > config-file > default precedence for one option."""
    source = ctx.get_parameter_source(name)
    if source is not None and source.name != "DEFAULT":
        return ctx.params[name]
    if name in config:
        return cast(config[name])
    return ctx.params[name]


def _resolve_seed(ctx: click.Context, config: dict[str, str]) -> int:
    source = ctx.get_parameter_source("seed")
    if source is not None and source.name != "DEFAULT":
        return ctx.params["seed"]
    if "seed" in config:
        return int(config["seed"])
    env = os.environ.get("QUANTONE_SEED")
    if env is not None:
        return int(env)
    return ctx.params["seed"]


def _write_manifest(out_dir: Path, command: str, options: dict, outputs: list[Path]):
    manifest = {
        "version": __version__,
        "command": command,
        "options": options,
        "created": datetime.now(timezone.utc).isoformat(),
        "checksums": {p.name: _sha256(p) for p in outputs},
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return path


@click.group()
@click.version_option(__version__)
def main():
    """Grammar-driven quantum music classification and composition."""


@main.command("gen-corpus")
@click.option("--count", default=100, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--weights", default="0.4,0.4,0.2", show_default=True,
              help="ground,basic,composite production weights")
@click.option("--max-depth", default=4, show_default=True, type=int)
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.pass_context
def gen_corpus(ctx, count, seed, out, weights, max_depth, config_path):
    """Sample unlabeled compositions from the grammar into a corpus file."""
    config = _read_config_file(config_path)
    count = _resolve(ctx, config, "count", int)
    seed = _resolve_seed(ctx, config)
    weights = _resolve(ctx, config, "weights")
    max_depth = _resolve(ctx, config, "max_depth", int)
    try:
        parts = tuple(float(w) for w in weights.split(","))
        gen = GenConfig(weights=parts, max_depth=max_depth, seed=seed)
    except (ValueError, QuantoneError) as exc:
        raise click.UsageError(str(exc))
    lexicon = Lexicon.default()
    import random as _random

    rng = _random.Random(seed)
    records = [
        Record(i + 1, Label.UNK, generate(gen, lexicon, rng)) for i in range(count)
    ]
    out_path = Path(out)
    save_corpus(Corpus.unsplit(records), out_path)
    _write_manifest(
        out_path.parent,
        "gen-corpus",
        {"count": count, "seed": seed, "out": str(out_path), "weights": weights,
         "max_depth": max_depth},
        [out_path],
    )
    click.echo(f"wrote {count} records to {out_path}")


@main.command("train")
@click.option("--corpus", "corpus_name", default="canonical-100", show_default=True)
@click.option("--mode", default="exact", show_default=True,
              type=click.Choice(["exact", "shots"]))
@click.option("--iters", default=None, type=int,
              help="SPSA iterations [default: 2000 exact, 100 shots]")
@click.option("--shots", default=8192, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--init-model", default=None, type=click.Path(exists=True),
              help="start from a saved model instead of random init")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.pass_context
def cmd_train(ctx, corpus_name, mode, iters, shots, seed, init_model, out_dir,
              config_path):
    """Run SPSA training on the corpus train split."""
    config = _read_config_file(config_path)
    corpus_name = _resolve(ctx, config, "corpus_name")
    mode = _resolve(ctx, config, "mode")
    iters = _resolve(ctx, config, "iters", int)
    if iters is None:
        iters = 2000 if mode == "exact" else 100
    shots = _resolve(ctx, config, "shots", int)
    seed = _resolve_seed(ctx, config)
    try:
        corpus = load_corpus(corpus_name)
    except (OSError, QuantoneError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_DATA)
    initial = Model.load(init_model) if init_model else None
    tc = TrainConfig(iterations=iters, mode=mode, shots=shots, seed=seed)
    try:
        model, history = train(corpus, tc, initial=initial)
    except QuantoneError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model_path = out / "model.json"
    history_path = out / "history.csv"
    model.save(model_path)
    save_history(history, history_path)
    _write_manifest(
        out,
        "train",
        {"corpus_name": corpus_name, "mode": mode, "iters": iters, "shots": shots,
         "seed": seed, "init_model": init_model, "out_dir": str(out)},
        [model_path, history_path],
    )
    final = history[-1].train_error if history else float("nan")
    click.echo(f"trained {iters} iterations; final train error {final:.3f}")


@main.command("eval")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--corpus", "corpus_name", default="canonical-100", show_default=True)
@click.option("--split", default="test", show_default=True,
              type=click.Choice(["train", "dev", "test", "all"]))
@click.option("--mode", default="exact", show_default=True,
              type=click.Choice(["exact", "shots"]))
@click.option("--shots", default=8192, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "out_csv", required=True, type=click.Path(dir_okay=False))
@click.pass_context
def cmd_eval(ctx, model_path, corpus_name, split, mode, shots, seed, out_csv):
    """Evaluate a model on a corpus split; write a per-item CSV."""
    seed = _resolve_seed(ctx, {})
    try:
        corpus = load_corpus(corpus_name)
        model = Model.load(model_path)
    except (OSError, QuantoneError, KeyError, json.JSONDecodeError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_DATA)
    dataset = corpus.subset(split)
    import numpy as _np

    rng = _np.random.default_rng(seed)
    noise = NoiseConfig() if mode == "shots" else None
    accuracy, items = evaluate(model, dataset, mode=mode, shots=shots,
                               noise=noise, rng=rng)
    out_path = Path(out_csv)
    save_evaluation(items, dataset, model.threshold, out_path)
    _write_manifest(
        out_path.parent,
        "eval",
        {"model_path": model_path, "corpus_name": corpus_name, "split": split,
         "mode": mode, "shots": shots, "seed": seed, "out_csv": str(out_path)},
        [out_path],
    )
    click.echo(f"accuracy {accuracy:.4f} on {len(dataset)} items ({split})")


@main.command("classify")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--tokens", "token_text", required=True,
              help='space-separated tokens, e.g. "t3 g1 g1"')
def cmd_classify(model_path, token_text):
    """Classify a single token sequence."""
    try:
        model = Model.load(model_path)
        tokens = tokens_from_string(token_text)
        l0, _ = predict_distribution(model, tokens)
    except QuantoneError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_DATA)
    label = predict_label(l0, model.threshold)
    click.echo(f"l0 {l0:.6f} predicted {label.value}")


@main.command("compose")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--target", required=True, type=click.Choice(["MEL", "RIT"]))
@click.option("--count", default=1, show_default=True, type=int)
@click.option("--margin", default=0.1, show_default=True, type=float)
@click.option("--max-attempts", default=500, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--midi-dir", "midi_dir", required=True,
              type=click.Path(file_okay=False))
@click.pass_context
def cmd_compose(ctx, model_path, target, count, margin, max_attempts, seed,
                midi_dir):
    """Generate-and-test compositions; write accepted pieces as MIDI."""
    seed = _resolve_seed(ctx, {})
    try:
        model = Model.load(model_path)
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_DATA)
    request = ComposeRequest(
        target=Label(target), count=count, accept_margin=margin,
        max_attempts=max_attempts, gen=GenConfig(seed=seed), seed=seed,
    )
    report = compose(model, request)
    out = Path(midi_dir)
    out.mkdir(parents=True, exist_ok=True)
    scores = load_lexicon_scores()
    cfg = RenderConfig()
    outputs = []
    for i, (tokens, _) in enumerate(report.accepted, start=1):
        path = out / f"piece_{target.lower()}_{i:02d}.mid"
        write_midi(render(tokens, scores, cfg), cfg, path)
        outputs.append(path)
    report_path = out / "report.csv"
    _write_compose_report(report, report_path)
    outputs.append(report_path)
    _write_manifest(
        out,
        "compose",
        {"model_path": model_path, "target": target, "count": count,
         "margin": margin, "max_attempts": max_attempts, "seed": seed,
         "midi_dir": str(out)},
        outputs,
    )
    click.echo(
        f"accepted {len(report.accepted)}/{count} in {report.attempts} attempts"
    )
    if report.exhausted:
        sys.exit(EXIT_EXHAUSTED)


def _write_compose_report(report: ComposeReport, path: Path) -> None:
    lines = ["index,tokens,l0"]
    for i, (tokens, l0) in enumerate(report.accepted, start=1):
        text = " ".join(t.name for t in tokens)
        lines.append(f"{i},{text},{l0:.10g}")
    lines.append(f"# attempts={report.attempts} rejected={report.rejected_count}")
    path.write_text("\n".join(lines) + "\n")


@main.command("replay")
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def cmd_replay(manifest_path, out_dir):
    """Re-run a recorded command into OUT and verify checksums match."""
    manifest = json.loads(Path(manifest_path).read_text())
    command = manifest["command"]
    options = dict(manifest["options"])
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    args = _replay_args(command, options, out)
    result = main.main(args=args, standalone_mode=False)
    del result
    mismatches = []
    for name, digest in manifest["checksums"].items():
        replayed = out / name
        if not replayed.exists() or _sha256(replayed) != digest:
            mismatches.append(name)
    if mismatches:
        click.echo(f"checksum mismatch: {', '.join(mismatches)}", err=True)
        sys.exit(EXIT_RUNTIME)
    click.echo(f"replay of {command} reproduced {len(manifest['checksums'])} artifacts")


def _replay_args(command: str, options: dict, out: Path) -> list[str]:
    if command == "gen-corpus":
        return ["gen-corpus", "--count", str(options["count"]),
                "--seed", str(options["seed"]),
                "--out", str(out / Path(options["out"]).name),
                "--weights", options["weights"],
                "--max-depth", str(options["max_depth"])]
    if command == "train":
        args = ["train", "--corpus", options["corpus_name"],
                "--mode", options["mode"], "--iters", str(options["iters"]),
                "--shots", str(options["shots"]), "--seed", str(options["seed"]),
                "--out", str(out)]
        if options.get("init_model"):
            args += ["--init-model", options["init_model"]]
        return args
    if command == "eval":
        return ["eval", "--model", options["model_path"],
                "--corpus", options["corpus_name"], "--split", options["split"],
                "--mode", options["mode"], "--shots", str(options["shots"]),
                "--seed", str(options["seed"]),
                "--out", str(out / Path(options["out_csv"]).name)]
    if command == "compose":
        return ["compose", "--model", options["model_path"],
                "--target", options["target"], "--count", str(options["count"]),
                "--margin", str(options["margin"]),
                "--max-attempts", str(options["max_attempts"]),
                "--seed", str(options["seed"]), "--midi-dir", str(out)]
    raise click.UsageError(f"cannot replay command {command!r}")


if __name__ == "__main__":
    main()
