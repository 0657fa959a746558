"""Statevector simulation with postselection accounting and synthetic noise.

Statevector layout: a flat complex array of 2**width amplitudes where
qubit 0 is the least significant index bit.  Exact evaluation returns
unnormalized branch weights of the readout outcomes, so postselection
introduces no Monte-Carlo error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuit import BoundCircuit, BoundGate
from .errors import WidthExceeded, ZeroUsableShots

DEFAULT_WIDTH_CAP = 26

_H = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / math.sqrt(2.0)
_PAULIS = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@dataclass(frozen=True)
class NoiseConfig:
    """Depolarizing-plus-readout noise knobs for the trajectory sampler."""

    p1: float = 0.0002
    p2: float = 0.002
    p_read: float = 0.002
    enabled: bool = True

    def __post_init__(self):
        for p in (self.p1, self.p2, self.p_read):
            if not 0.0 <= p <= 1.0:
                raise ValueError("noise probabilities must lie in [0, 1]")

    @classmethod
    def off(cls) -> "NoiseConfig":
        return cls(0.0, 0.0, 0.0, enabled=False)


@dataclass(frozen=True)
class ShotResult:
    shots_requested: int
    shots_usable: int
    counts: tuple[int, int]  # readout outcome 0 and 1 tallies

    def __post_init__(self):
        if sum(self.counts) != self.shots_usable:
            raise ValueError("counts must sum to usable shots")
        if self.shots_usable > self.shots_requested:
            raise ValueError("usable shots cannot exceed requested shots")


def zero_state(width: int) -> np.ndarray:
    state = np.zeros(2**width, dtype=complex)
    state[0] = 1.0
    return state


def _rx(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def _rz(theta: float) -> np.ndarray:
    return np.array(
        [[np.exp(-0.5j * theta), 0.0], [0.0, np.exp(0.5j * theta)]], dtype=complex
    )


def apply_1q(state: np.ndarray, matrix: np.ndarray, qubit: int, width: int) -> np.ndarray:
    view = state.reshape((2,) * width)
    axis = width - 1 - qubit
    moved = np.moveaxis(view, axis, -1)
    out = moved @ matrix.T
    return np.moveaxis(out, -1, axis).reshape(-1)


def apply_gate(state: np.ndarray, gate: BoundGate, width: int) -> np.ndarray:
    kind = gate.kind
    if kind == "H":
        return apply_1q(state, _H, gate.qubits[0], width)
    if kind == "RX":
        return apply_1q(state, _rx(gate.angle), gate.qubits[0], width)
    if kind == "RZ":
        return apply_1q(state, _rz(gate.angle), gate.qubits[0], width)
    view = state.reshape((2,) * width)
    q0, q1 = gate.qubits
    a0, a1 = width - 1 - q0, width - 1 - q1
    if kind == "CNOT":
        out = view.copy()
        sel10 = [slice(None)] * width
        sel11 = [slice(None)] * width
        sel10[a0], sel10[a1] = 1, 0
        sel11[a0], sel11[a1] = 1, 1
        out[tuple(sel10)] = view[tuple(sel11)]
        out[tuple(sel11)] = view[tuple(sel10)]
        return out.reshape(-1)
    if kind == "CRZ":
        out = view.copy()
        sel10 = [slice(None)] * width
        sel11 = [slice(None)] * width
        sel10[a0], sel10[a1] = 1, 0
        sel11[a0], sel11[a1] = 1, 1
        out[tuple(sel10)] = view[tuple(sel10)] * np.exp(-0.5j * gate.angle)
        out[tuple(sel11)] = view[tuple(sel11)] * np.exp(0.5j * gate.angle)
        return out.reshape(-1)
    raise ValueError(f"unknown gate kind {kind!r}")


def run_gates(state: np.ndarray, gates, width: int) -> np.ndarray:
    for gate in gates:
        state = apply_gate(state, gate, width)
    return state


def evaluate_exact(
    circuit: BoundCircuit, width_cap: int = DEFAULT_WIDTH_CAP
) -> tuple[float, float]:
    """Unnormalized branch weights (L0, L1) of the readout outcomes.

    Postselected qubits are projected onto outcome 0 without renormalizing,
    so L0 + L1 equals the probability mass surviving postselection.
    """
    if circuit.width > width_cap:
        raise WidthExceeded(circuit.width, width_cap)
    state = run_gates(zero_state(circuit.width), circuit.gates, circuit.width)
    view = state.reshape((2,) * circuit.width)
    sel = [slice(None)] * circuit.width
    for q in circuit.postselect:
        sel[circuit.width - 1 - q] = 0
    surviving = view[tuple(sel)]
    probs = np.abs(surviving) ** 2
    readout_axis = circuit.width - 1 - circuit.readout
    # Postselected axes before the readout axis have been squeezed away.
    readout_axis -= sum(
        1 for q in circuit.postselect if circuit.width - 1 - q < circuit.width - 1 - circuit.readout
    )
    other_axes = tuple(a for a in range(probs.ndim) if a != readout_axis)
    marg = probs.sum(axis=other_axes) if other_axes else probs
    return float(marg[0]), float(marg[1])


def _measured_distribution(
    state: np.ndarray, measured: list[int], width: int
) -> np.ndarray:
    """Marginal probability over the measured qubits, indexed with the
    first listed qubit as the least significant bit."""
    probs = (np.abs(state) ** 2).reshape((2,) * width)
    keep_axes = [width - 1 - q for q in measured]
    drop_axes = tuple(a for a in range(width) if a not in keep_axes)
    if drop_axes:
        probs = probs.sum(axis=drop_axes)
    # Remaining axes are ordered by original axis index; map to measured order.
    remaining = sorted(keep_axes)
    order = [remaining.index(a) for a in keep_axes]
    probs = np.transpose(probs, order)
    return np.transpose(probs, tuple(reversed(range(probs.ndim)))).reshape(-1)


def apply_noise_channel(
    state: np.ndarray,
    qubits: tuple[int, ...],
    rng: np.random.Generator,
    width: int,
) -> np.ndarray:
    """Apply a uniformly chosen non-identity Pauli on the given qubits."""
    while True:
        picks = rng.integers(0, 4, size=len(qubits))
        if picks.any():
            break
    for q, p in zip(qubits, picks):
        if p:
            state = apply_1q(state, _PAULIS[p], q, width)
    return state


def _sample_measurement(
    dist: np.ndarray, n_shots: int, rng: np.random.Generator
) -> np.ndarray:
    total = dist.sum()
    if total <= 0.0:
        raise ZeroUsableShots("state has no support on the measured qubits")
    return rng.choice(len(dist), size=n_shots, p=dist / total)


def sample(
    circuit: BoundCircuit,
    shots: int,
    noise: NoiseConfig | None = None,
    rng: np.random.Generator | None = None,
) -> ShotResult:
    """Shot-based sampling with postselection accounting.

    Noise uses the trajectory method: with probability p1/p2 each gate is
    followed by a uniform Pauli on its qubits, and each measured bit flips
    with probability p_read.  Error-free shots share one cached noiseless
    trajectory.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if rng is None:
        rng = np.random.default_rng(0)
    if noise is None:
        noise = NoiseConfig.off()
    width = circuit.width
    measured = list(circuit.postselect) + [circuit.readout]
    noisy = noise.enabled and (noise.p1 > 0.0 or noise.p2 > 0.0)

    if not noisy:
        clean = run_gates(zero_state(width), circuit.gates, width)
        dist = _measured_distribution(clean, measured, width)
        outcomes = _sample_measurement(dist, shots, rng)
    else:
        gate_probs = np.array(
            [noise.p1 if len(g.qubits) == 1 else noise.p2 for g in circuit.gates]
        )
        gates = circuit.gates
        error_mask = rng.random((shots, len(gates))) < gate_probs
        has_err = error_mask.any(axis=1)
        outcomes = np.empty(shots, dtype=np.int64)
        idx_clean = np.flatnonzero(~has_err)
        if idx_clean.size:
            clean = run_gates(zero_state(width), gates, width)
            clean_dist = _measured_distribution(clean, measured, width)
            outcomes[idx_clean] = _sample_measurement(clean_dist, idx_clean.size, rng)
        # Group error shots by their (site, Pauli) pattern so each distinct
        # trajectory is simulated once, and resume each from a cached
        # clean-prefix state to skip the shared error-free prefix.
        patterns: dict[tuple, list[int]] = {}
        for shot in np.flatnonzero(has_err):
            key = []
            for g_idx in np.flatnonzero(error_mask[shot]):
                n = len(gates[g_idx].qubits)
                while True:
                    picks = tuple(int(p) for p in rng.integers(0, 4, size=n))
                    if any(picks):
                        break
                key.append((int(g_idx), picks))
            patterns.setdefault(tuple(key), []).append(int(shot))
        prefix_bytes = len(gates) * 2**width * 16
        prefixes = None
        if patterns and prefix_bytes <= 1 << 26:
            prefixes = []
            state = zero_state(width)
            for gate in gates:
                state = apply_gate(state, gate, width)
                prefixes.append(state)
        for key, shot_list in patterns.items():
            errors = dict(key)
            first = key[0][0]
            if prefixes is not None:
                state = prefixes[first]
            else:
                state = run_gates(zero_state(width), gates[: first + 1], width)
            for g_idx in range(first, len(gates)):
                if g_idx > first:
                    state = apply_gate(state, gates[g_idx], width)
                if g_idx in errors:
                    for q, p in zip(gates[g_idx].qubits, errors[g_idx]):
                        if p:
                            state = apply_1q(state, _PAULIS[p], q, width)
            dist = _measured_distribution(state, measured, width)
            outcomes[np.array(shot_list)] = _sample_measurement(
                dist, len(shot_list), rng
            )

    bits = (outcomes[:, None] >> np.arange(len(measured))) & 1
    if noise.enabled and noise.p_read > 0.0:
        flips = rng.random(bits.shape) < noise.p_read
        bits = bits ^ flips
    post_ok = ~bits[:, :-1].any(axis=1) if len(measured) > 1 else np.ones(shots, bool)
    usable = bits[post_ok, -1]
    if usable.size == 0:
        raise ZeroUsableShots(f"all {shots} shots failed postselection")
    ones = int(usable.sum())
    return ShotResult(
        shots_requested=shots,
        shots_usable=int(usable.size),
        counts=(int(usable.size) - ones, ones),
    )
