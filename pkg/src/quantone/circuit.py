"""Compilation of pregroup diagrams into parameterized quantum circuits.

Word boxes become ansatz blocks (a 3-rotation Euler block on one qubit,
an IQP ladder otherwise).  Remaining cups become Bell effects; rotated
word boxes become transposed blocks applied to their partner qubits and
postselected.  All gate kinds used here are symmetric matrices, so the
transpose of a block is just its gate list reversed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .diagram import (
    N,
    PregroupDiagram,
    SENTENCE,
    WordBox,
    word_qubits,
)
from .errors import (
    MissingParameters,
    NonSentenceDiagram,
    SlotCountMismatch,
)
from .grammar import Lexicon, SnippetType, Token


@dataclass(frozen=True)
class QubitAssignment:
    """Qubits per wire type."""

    q_n: int = 2
    q_s: int = 1

    def for_type(self, t) -> int:
        return self.q_n if t.base == N else self.q_s

    def word_width(self, word: WordBox) -> int:
        return word_qubits(word, self.q_n, self.q_s)


@dataclass(frozen=True)
class AnsatzConfig:
    iqp_layers: int = 3
    single_qubit_form: tuple[str, str, str] = ("RX", "RZ", "RX")

    def slot_count(self, n_qubits: int) -> int:
        if n_qubits == 1:
            return 3
        return self.iqp_layers * (n_qubits - 1)


PARAMETERIZED_KINDS = {"RX", "RZ", "CRZ"}
GATE_KINDS = {"H", "RX", "RZ", "CRZ", "CNOT"}


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    param: tuple[str, int] | None = None  # (snippet name, slot index)

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if (self.param is not None) != (self.kind in PARAMETERIZED_KINDS):
            raise ValueError(f"{self.kind} gate with wrong parameter arity")


@dataclass(frozen=True)
class BoundGate:
    kind: str
    qubits: tuple[int, ...]
    angle: float | None = None


@dataclass(frozen=True)
class ParamCircuit:
    """A compiled sentence circuit with symbolic parameters."""

    width: int
    gates: tuple[Gate, ...]
    postselect: tuple[int, ...]  # qubit indices, required outcome 0
    readout: int
    param_table: dict[str, int] = field(default_factory=dict)

    def dump(self) -> str:
        lines = [f"width {self.width}"]
        for g in self.gates:
            ref = "" if g.param is None else f" {g.param[0]}[{g.param[1]}]"
            lines.append(f"{g.kind} {' '.join(map(str, g.qubits))}{ref}")
        lines.append(f"postselect {' '.join(map(str, self.postselect))}")
        lines.append(f"readout {self.readout}")
        return "\n".join(lines)


@dataclass(frozen=True)
class BoundCircuit:
    width: int
    gates: tuple[BoundGate, ...]
    postselect: tuple[int, ...]
    readout: int


def word_block_gates(
    token: Token,
    qubits: Sequence[int],
    ansatz: AnsatzConfig,
    reverse: bool = False,
) -> list[Gate]:
    """Ansatz gate list preparing (or, reversed, transposing) a word block."""
    name = token.name
    qubits = list(qubits)
    k = len(qubits)
    gates: list[Gate] = []
    if k == 1:
        q = qubits[0]
        for slot, kind in enumerate(ansatz.single_qubit_form):
            gates.append(Gate(kind, (q,), (name, slot)))
    else:
        for layer in range(ansatz.iqp_layers):
            for q in qubits:
                gates.append(Gate("H", (q,)))
            for i in range(k - 1):
                slot = layer * (k - 1) + i
                gates.append(Gate("CRZ", (qubits[i], qubits[i + 1]), (name, slot)))
    if reverse:
        gates.reverse()
    return gates


def param_vector_layout(
    lexicon: Lexicon,
    qa: QubitAssignment = QubitAssignment(),
    ansatz: AnsatzConfig = AnsatzConfig(),
) -> dict[str, int]:
    """Slot count per snippet, shared across all compositions."""
    layout = {}
    for token in lexicon:
        layout[token.name] = ansatz.slot_count(qa.word_width(WordBox.for_token(token)))
    return layout


def compile_diagram(
    diagram: PregroupDiagram,
    qa: QubitAssignment = QubitAssignment(),
    ansatz: AnsatzConfig = AnsatzConfig(),
) -> ParamCircuit:
    """Compile a (possibly rewritten) sentence diagram to a circuit.

    Unrotated words get fresh qubits and a state-prep block; rotated words
    become reversed blocks on their partner qubits with every partner
    postselected; each remaining cup becomes per-qubit Bell effects.
    """
    if diagram.open_types != (SENTENCE,):
        raise NonSentenceDiagram(
            f"open wires are {[str(t) for t in diagram.open_types]}, expected [s]"
        )
    if qa.q_s != 1:
        raise ValueError("single-qubit readout requires q_s = 1")

    offsets = diagram.word_offsets
    occ_qubits: dict[int, list[int]] = {}
    word_qubit_lists: dict[int, list[int]] = {}
    width = 0
    for w_idx, word in enumerate(diagram.words):
        if word.rotated:
            continue
        qubits = []
        for k, t in enumerate(word.type):
            occ = offsets[w_idx] + k
            nq = qa.for_type(t)
            occ_qubits[occ] = list(range(width, width + nq))
            qubits.extend(occ_qubits[occ])
            width += nq
        word_qubit_lists[w_idx] = qubits

    gates: list[Gate] = []
    postselect: list[int] = []
    param_table: dict[str, int] = {}

    for w_idx, word in enumerate(diagram.words):
        if word.rotated:
            continue
        gates.extend(word_block_gates(word.token, word_qubit_lists[w_idx], ansatz))
        param_table.setdefault(
            word.token.name, ansatz.slot_count(len(word_qubit_lists[w_idx]))
        )

    for w_idx, partners in sorted(diagram.plugs):
        word = diagram.words[w_idx]
        target_qubits = [q for occ in partners for q in occ_qubits[occ]]
        gates.extend(
            word_block_gates(word.token, target_qubits, ansatz, reverse=True)
        )
        param_table.setdefault(word.token.name, ansatz.slot_count(len(target_qubits)))
        postselect.extend(target_qubits)

    for i, j in sorted(diagram.cups):
        for qi, qj in zip(occ_qubits[i], occ_qubits[j]):
            gates.append(Gate("CNOT", (qi, qj)))
            gates.append(Gate("H", (qi,)))
            postselect.extend((qi, qj))

    open_occ = diagram.open_wires[0]
    readout = occ_qubits[open_occ][0]
    return ParamCircuit(
        width=width,
        gates=tuple(gates),
        postselect=tuple(postselect),
        readout=readout,
        param_table=param_table,
    )


def bind(circuit: ParamCircuit, params: Mapping[str, np.ndarray]) -> BoundCircuit:
    """Substitute numeric angles for symbolic parameter references."""
    params = getattr(params, "params", params)
    for name, slots in circuit.param_table.items():
        if name not in params:
            raise MissingParameters(name)
        if len(params[name]) != slots:
            raise SlotCountMismatch(
                f"{name}: expected {slots} slots, got {len(params[name])}"
            )
    bound = []
    for g in circuit.gates:
        if g.param is None:
            bound.append(BoundGate(g.kind, g.qubits))
        else:
            name, slot = g.param
            bound.append(BoundGate(g.kind, g.qubits, float(params[name][slot])))
    return BoundCircuit(circuit.width, tuple(bound), circuit.postselect, circuit.readout)


def word_state_tensor(
    token: Token,
    angles: np.ndarray,
    q_n: int = 2,
    q_s: int = 1,
    iqp_layers: int = 3,
) -> np.ndarray:
    """The word's prepared state as a tensor with one axis per qubit.

    Axis i corresponds to word qubit i (wire by wire, left to right).
    """
    from .sim import run_gates, zero_state

    qa = QubitAssignment(q_n, q_s)
    ansatz = AnsatzConfig(iqp_layers=iqp_layers)
    nq = qa.word_width(WordBox.for_token(token))
    expected = ansatz.slot_count(nq)
    if len(angles) != expected:
        raise SlotCountMismatch(
            f"{token.name}: expected {expected} slots, got {len(angles)}"
        )
    gates = word_block_gates(token, range(nq), ansatz)
    bound = [
        BoundGate(g.kind, g.qubits, None if g.param is None else float(angles[g.param[1]]))
        for g in gates
    ]
    state = run_gates(zero_state(nq), bound, nq)
    # The flat state has qubit 0 least significant; reshape puts qubit
    # nq-1 on axis 0, so reverse to get axis i == qubit i.
    return state.reshape((2,) * nq).transpose(tuple(reversed(range(nq))))
