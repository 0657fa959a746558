"""Pregroup types, string diagrams, the grammar functor and cup elimination.

A diagram is a row of word boxes whose concatenated types are wired up by
planar cups.  ``rewrite`` eliminates cups by rotating fully-cupped boxes
into effects (the snake equation); ``tensor_eval`` gives the reference
semantics by exact tensor contraction.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import MissingParameters
from .grammar import (
    BasicSeq,
    CompositeSeq,
    DerivationTree,
    GroundLeaf,
    SnippetType,
    Token,
)

N = "n"
S = "s"


@dataclass(frozen=True)
class BasicType:
    """A base type with an adjoint order (0 plain, -1 left, +1 right, ...)."""

    base: str
    adjoint: int = 0

    def l(self) -> "BasicType":
        return BasicType(self.base, self.adjoint - 1)

    def r(self) -> "BasicType":
        return BasicType(self.base, self.adjoint + 1)

    def __str__(self) -> str:
        if self.adjoint == 0:
            return self.base
        suffix = ("l" if self.adjoint < 0 else "r") * abs(self.adjoint)
        return f"{self.base}.{suffix}"


SENTENCE = BasicType(S)
NOUN = BasicType(N)


def functor_type(kind: SnippetType) -> tuple[BasicType, ...]:
    """Pregroup type assigned to each snippet type."""
    if kind is SnippetType.GROUND:
        return (SENTENCE,)
    if kind is SnippetType.PRIMARY:
        return (NOUN,)
    if kind is SnippetType.SECONDARY:
        return (NOUN.r(), NOUN.r(), NOUN.r(), NOUN.r(), SENTENCE)
    return (SENTENCE, SENTENCE.l(), SENTENCE.l())


@dataclass(frozen=True)
class WordBox:
    token: Token
    type: tuple[BasicType, ...]
    rotated: bool = False

    @classmethod
    def for_token(cls, token: Token) -> "WordBox":
        return cls(token, functor_type(token.type))


@dataclass(frozen=True)
class PregroupDiagram:
    """Word boxes plus cup wiring over basic-type occurrence indices.

    Occurrences are numbered left to right over the concatenated word
    types.  ``cups`` holds pairs (i, j) with i < j.  For rotated words,
    ``plugs`` maps the word index to the partner occurrence of each of its
    wires in order; those pairings are no longer counted as cups.
    """

    words: tuple[WordBox, ...]
    cups: tuple[tuple[int, int], ...]
    plugs: tuple[tuple[int, tuple[int, ...]], ...] = ()

    @property
    def word_offsets(self) -> tuple[int, ...]:
        offsets, total = [], 0
        for w in self.words:
            offsets.append(total)
            total += len(w.type)
        return tuple(offsets)

    @property
    def occurrence_types(self) -> tuple[BasicType, ...]:
        return tuple(t for w in self.words for t in w.type)

    def owner_of(self, occ: int) -> int:
        """Word index owning an occurrence."""
        offsets = self.word_offsets
        for i in reversed(range(len(self.words))):
            if occ >= offsets[i]:
                return i
        raise IndexError(occ)

    @property
    def open_wires(self) -> tuple[int, ...]:
        """Occurrence indices not consumed by a cup or a rotated word."""
        closed = set()
        for i, j in self.cups:
            closed.update((i, j))
        offsets = self.word_offsets
        for w_idx, partners in self.plugs:
            word = self.words[w_idx]
            closed.update(range(offsets[w_idx], offsets[w_idx] + len(word.type)))
            closed.update(partners)
        return tuple(
            occ for occ in range(len(self.occurrence_types)) if occ not in closed
        )

    @property
    def open_types(self) -> tuple[BasicType, ...]:
        types = self.occurrence_types
        return tuple(types[occ] for occ in self.open_wires)

    def is_planar(self) -> bool:
        """Cups drawn below the word row must not cross."""
        pairs = sorted(self.cups) + sorted(
            (min(offs, p), max(offs, p))
            for w_idx, partners in self.plugs
            for offs, p in zip(
                range(
                    self.word_offsets[w_idx],
                    self.word_offsets[w_idx] + len(self.words[w_idx].type),
                ),
                partners,
            )
        )
        for a in range(len(pairs)):
            for b in range(a + 1, len(pairs)):
                i, j = pairs[a]
                k, l = pairs[b]
                if i < k < j < l or k < i < l < j:
                    return False
        return True

    def dump(self) -> str:
        """Deterministic text serialization for golden-file tests."""
        lines = []
        for w in self.words:
            mark = "~" if w.rotated else ""
            types = " ".join(str(t) for t in w.type)
            lines.append(f"word {mark}{w.token} : {types}")
        for i, j in self.cups:
            lines.append(f"cup {i} {j}")
        for w_idx, partners in sorted(self.plugs):
            lines.append(f"plug {w_idx} -> {' '.join(map(str, partners))}")
        lines.append(f"open {' '.join(map(str, self.open_wires))}")
        return "\n".join(lines)


def cfg_to_pregroup(tree: DerivationTree) -> PregroupDiagram:
    """Translate a derivation tree into its pregroup diagram.

    Words appear in yield order; every production rule becomes a nest of
    cups, leaving a single open sentence wire.
    """
    words: list[WordBox] = []
    cups: list[tuple[int, int]] = []
    offset = [0]

    def add_word(token: Token) -> int:
        base = offset[0]
        box = WordBox.for_token(token)
        words.append(box)
        offset[0] += len(box.type)
        return base

    def build(node: DerivationTree) -> int:
        """Emit words and cups; return the node's sentence occurrence."""
        if isinstance(node, GroundLeaf):
            return add_word(node.token)
        if isinstance(node, BasicSeq):
            noun_occs = [add_word(t) for t in node.motif.tokens]
            sec_base = add_word(node.secondary)
            # p_i's n pairs with the i-th n.r counted from the right.
            for i, occ in enumerate(noun_occs):
                cups.append((occ, sec_base + (3 - i)))
            return sec_base + 4
        if isinstance(node, CompositeSeq):
            head_base = add_word(node.head)
            left_occ = build(node.left)
            right_occ = build(node.right)
            cups.append((head_base + 2, left_occ))
            cups.append((head_base + 1, right_occ))
            return head_base
        raise TypeError(f"not a derivation tree node: {node!r}")

    build(tree)
    return PregroupDiagram(tuple(words), tuple(sorted(cups)))


def reduces_to_s(diagram: PregroupDiagram) -> bool:
    """Check grammaticality by iterated adjacent annihilation.

    Works on the concatenated type string alone, independent of the cup
    wiring, so it doubles as an oracle for ``cfg_to_pregroup``.
    """
    types = list(diagram.occurrence_types)
    changed = True
    while changed:
        changed = False
        for i in range(len(types) - 1):
            a, b = types[i], types[i + 1]
            if a.base == b.base and b.adjoint == a.adjoint + 1:
                del types[i : i + 2]
                changed = True
                break
    return types == [SENTENCE]


def _wire_qubits(t: BasicType, q_n: int, q_s: int) -> int:
    return q_n if t.base == N else q_s


def word_qubits(word: WordBox, q_n: int = 2, q_s: int = 1) -> int:
    return sum(_wire_qubits(t, q_n, q_s) for t in word.type)


def rewrite(
    diagram: PregroupDiagram, q_n: int = 2, q_s: int = 1
) -> PregroupDiagram:
    """Eliminate cups by rotating fully-cupped word boxes into effects.

    A box may rotate only if all of its wires are cupped, and no cup may
    join two rotated boxes.  Among the admissible choices we pick the set
    maximizing the total qubit count of rotated boxes (dynamic programming
    over the cup tree), which minimizes compiled circuit width.  Semantics
    are preserved exactly: a rotated box contributes the transpose of its
    word tensor, contracted against the same partners as its former cups.
    """
    if not diagram.cups and not diagram.plugs:
        return diagram
    if diagram.plugs:
        raise ValueError("diagram was already rewritten")

    n_words = len(diagram.words)
    offsets = diagram.word_offsets
    open_occs = set(diagram.open_wires)
    partner = {}
    for i, j in diagram.cups:
        partner[i] = j
        partner[j] = i

    def occs_of(w: int) -> range:
        return range(offsets[w], offsets[w] + len(diagram.words[w].type))

    rotatable = [
        all(occ not in open_occs for occ in occs_of(w)) for w in range(n_words)
    ]
    weights = [word_qubits(w, q_n, q_s) for w in diagram.words]

    adj: dict[int, set[int]] = {w: set() for w in range(n_words)}
    for i, j in diagram.cups:
        a, b = diagram.owner_of(i), diagram.owner_of(j)
        adj[a].add(b)
        adj[b].add(a)

    # Max-weight independent set of rotatable boxes over the cup tree.
    NEG = float("-inf")
    include: dict[int, float] = {}
    exclude: dict[int, float] = {}
    order: list[tuple[int, int | None]] = []
    seen = set()
    for root in range(n_words):
        if root in seen:
            continue
        stack = [(root, None)]
        while stack:
            node, par = stack.pop()
            if node in seen:
                continue
            seen.add(node)
            order.append((node, par))
            for nb in adj[node]:
                if nb != par:
                    stack.append((nb, node))
    for node, par in reversed(order):
        children = [c for c, p in order if p == node]
        exclude[node] = sum(max(include[c], exclude[c]) for c in children)
        if rotatable[node]:
            include[node] = weights[node] + sum(exclude[c] for c in children)
        else:
            include[node] = NEG

    chosen: set[int] = set()
    for node, par in order:
        if par is not None and par in chosen:
            continue
        if include[node] > exclude[node]:
            chosen.add(node)

    new_words = tuple(
        replace(w, rotated=(idx in chosen)) for idx, w in enumerate(diagram.words)
    )
    new_cups = []
    plugs = []
    for w in sorted(chosen):
        plugs.append((w, tuple(partner[occ] for occ in occs_of(w))))
    for i, j in diagram.cups:
        if diagram.owner_of(i) not in chosen and diagram.owner_of(j) not in chosen:
            new_cups.append((i, j))
    return PregroupDiagram(new_words, tuple(new_cups), tuple(plugs))


def contraction_plan(
    diagram: PregroupDiagram, q_n: int = 2, q_s: int = 1
) -> tuple[tuple[tuple[str, tuple[int, ...]], ...], tuple[int, ...]]:
    """Einsum wiring for a diagram: per-word (snippet name, axis labels)
    plus the output labels of the open wires."""
    offsets = diagram.word_offsets
    types = diagram.occurrence_types
    slot_label: dict[tuple[int, int], int] = {}
    next_label = [0]

    def labels_for(occ: int) -> list[int]:
        nq = _wire_qubits(types[occ], q_n, q_s)
        out = []
        for slot in range(nq):
            key = (occ, slot)
            if key not in slot_label:
                slot_label[key] = next_label[0]
                next_label[0] += 1
            out.append(slot_label[key])
        return out

    # Cups identify the slot labels of their two occurrences.
    for i, j in diagram.cups:
        for a, b in zip(labels_for(i), labels_for(j)):
            _merge_labels(slot_label, a, b)
    plug_partner = dict()
    for w_idx, partners in diagram.plugs:
        plug_partner[w_idx] = partners

    operands = []
    for w_idx, word in enumerate(diagram.words):
        axis_labels: list[int] = []
        if word.rotated:
            for partner_occ in plug_partner[w_idx]:
                axis_labels.extend(labels_for(partner_occ))
        else:
            base = offsets[w_idx]
            for k in range(len(word.type)):
                axis_labels.extend(labels_for(base + k))
        operands.append((word.token.name, tuple(axis_labels)))

    out_labels: list[int] = []
    for occ in diagram.open_wires:
        out_labels.extend(labels_for(occ))
    return tuple(operands), tuple(out_labels)


def tensor_eval(
    diagram: PregroupDiagram,
    params: Mapping[str, np.ndarray],
    q_n: int = 2,
    q_s: int = 1,
    iqp_layers: int = 3,
    tensor_cache: dict[str, np.ndarray] | None = None,
) -> np.ndarray:
    """Exact contraction of the diagram's tensor network.

    ``params`` maps snippet names to angle vectors.  Returns the complex
    vector on the open wires (qubit 0 least significant).  This is the
    oracle for circuit-level evaluation and for rewrite equivalence.

    ``tensor_cache`` lets callers reuse word tensors across diagrams that
    share the same parameter vectors.
    """
    from .circuit import word_state_tensor

    params = getattr(params, "params", params)
    operands, out_labels = contraction_plan(diagram, q_n=q_n, q_s=q_s)

    args: list = []
    for name, axis_labels in operands:
        if name not in params:
            raise MissingParameters(name)
        if tensor_cache is not None and name in tensor_cache:
            tensor = tensor_cache[name]
        else:
            tensor = word_state_tensor(
                _token_by_name(diagram, name),
                np.asarray(params[name], dtype=float),
                q_n=q_n, q_s=q_s, iqp_layers=iqp_layers,
            )
            if tensor_cache is not None:
                tensor_cache[name] = tensor
        args.extend((tensor, list(axis_labels)))
    args.append(list(out_labels))
    result = np.einsum(*args, optimize="greedy")
    if not out_labels:
        return np.asarray(result).reshape(1)
    # Axis i of the result is open qubit i; flatten with qubit 0 as the
    # least significant index bit.
    return np.transpose(result, tuple(reversed(range(result.ndim)))).reshape(-1)


def _token_by_name(diagram: PregroupDiagram, name: str):
    for word in diagram.words:
        if word.token.name == name:
            return word.token
    raise MissingParameters(name)


def _merge_labels(slot_label: dict, a: int, b: int) -> None:
    if a == b:
        return
    keep, drop = min(a, b), max(a, b)
    for key, val in slot_label.items():
        if val == drop:
            slot_label[key] = keep
