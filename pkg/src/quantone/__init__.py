"""Grammar-driven quantum music classification and composition.

Pipeline: context-free musical grammar -> pregroup string diagrams ->
parameterized quantum circuits -> simulated training of a melodic/rhythmic
classifier -> generate-and-test composition rendered to MIDI.
"""

__version__ = "0.1.0"

from .circuit import AnsatzConfig, ParamCircuit, QubitAssignment, compile_diagram
from .composer import ComposeReport, ComposeRequest, compose
from .corpus import Corpus, Label, Record, load_corpus, save_corpus
from .diagram import PregroupDiagram, cfg_to_pregroup, rewrite, tensor_eval
from .grammar import GenConfig, Lexicon, Token, generate, parse, tokens_from_string, tree_yield
from .learn import Model, TrainConfig, evaluate, predict_distribution, predict_label, train
from .midi import NoteEvent, RenderConfig, load_lexicon_scores, render, write_midi
from .sim import NoiseConfig, evaluate_exact, sample

__all__ = [
    "AnsatzConfig",
    "ComposeReport",
    "ComposeRequest",
    "Corpus",
    "GenConfig",
    "Label",
    "Lexicon",
    "Model",
    "NoiseConfig",
    "NoteEvent",
    "ParamCircuit",
    "PregroupDiagram",
    "QubitAssignment",
    "Record",
    "RenderConfig",
    "Token",
    "TrainConfig",
    "cfg_to_pregroup",
    "compile_diagram",
    "compose",
    "evaluate",
    "evaluate_exact",
    "generate",
    "load_corpus",
    "load_lexicon_scores",
    "parse",
    "predict_distribution",
    "predict_label",
    "render",
    "rewrite",
    "sample",
    "save_corpus",
    "tensor_eval",
    "tokens_from_string",
    "train",
    "tree_yield",
    "write_midi",
]
