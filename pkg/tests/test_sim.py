"""Simulator: exact evaluation vs a dense matrix-chain oracle, sampling,
noise channels, postselection accounting."""
import math

import numpy as np
import pytest

from quantone.circuit import BoundCircuit, BoundGate
from quantone.errors import WidthExceeded, ZeroUsableShots
from quantone.sim import (
    NoiseConfig,
    apply_gate,
    evaluate_exact,
    run_gates,
    sample,
    zero_state,
)

# ---------------------------------------------------------------------------
# Independent oracle: build the full 2^n x 2^n unitary for each gate and
# multiply matrices, then project postselected qubits with explicit
# projectors.  Shares nothing with the simulator's reshaping tricks.


def _kron_chain(mats):
    out = np.array([[1.0]], dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def _one_qubit_unitary(kind, angle):
    if kind == "H":
        return np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
    if kind == "RX":
        c, s = math.cos(angle / 2), math.sin(angle / 2)
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if kind == "RZ":
        return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])
    raise ValueError(kind)


def oracle_unitary(gate: BoundGate, width: int) -> np.ndarray:
    """Full-width unitary with qubit 0 as the least significant bit."""
    if gate.kind in ("H", "RX", "RZ"):
        mats = [np.eye(2, dtype=complex)] * width
        # kron builds most-significant-first, so qubit q sits at width-1-q
        mats[width - 1 - gate.qubits[0]] = _one_qubit_unitary(gate.kind, gate.angle)
        return _kron_chain(mats)
    control, target = gate.qubits
    dim = 2**width
    u = np.zeros((dim, dim), dtype=complex)
    for basis in range(dim):
        c_bit = (basis >> control) & 1
        if gate.kind == "CNOT":
            out = basis ^ (1 << target) if c_bit else basis
            u[out, basis] = 1.0
        else:  # CRZ
            t_bit = (basis >> target) & 1
            phase = 1.0
            if c_bit:
                phase = np.exp(0.5j * gate.angle if t_bit else -0.5j * gate.angle)
            u[basis, basis] = phase
    return u


def oracle_evaluate(circuit: BoundCircuit) -> tuple[float, float]:
    dim = 2**circuit.width
    state = np.zeros(dim, dtype=complex)
    state[0] = 1.0
    for gate in circuit.gates:
        state = oracle_unitary(gate, circuit.width) @ state
    weights = [0.0, 0.0]
    for basis in range(dim):
        if any((basis >> q) & 1 for q in circuit.postselect):
            continue
        weights[(basis >> circuit.readout) & 1] += abs(state[basis]) ** 2
    return weights[0], weights[1]


def random_circuit(rng, max_width=5, max_post=3):
    width = int(rng.integers(1, max_width + 1))
    gates = []
    for _ in range(int(rng.integers(1, 20))):
        kind = rng.choice(["H", "RX", "RZ", "CRZ", "CNOT"])
        if kind in ("CRZ", "CNOT") and width < 2:
            kind = "RX"
        if kind in ("H",):
            gates.append(BoundGate(kind, (int(rng.integers(width)),)))
        elif kind in ("RX", "RZ"):
            gates.append(
                BoundGate(kind, (int(rng.integers(width)),), float(rng.uniform(0, 2 * math.pi)))
            )
        else:
            q = rng.choice(width, size=2, replace=False)
            angle = float(rng.uniform(0, 2 * math.pi)) if kind == "CRZ" else None
            gates.append(BoundGate(kind, (int(q[0]), int(q[1])), angle))
    n_post = int(rng.integers(0, min(max_post, width - 1) + 1)) if width > 1 else 0
    qubits = list(rng.permutation(width))
    postselect = tuple(int(q) for q in qubits[:n_post])
    readout = int(qubits[n_post])
    return BoundCircuit(width, tuple(gates), postselect, readout)


class TestEvaluateExact:
    def test_hadamard_half_half(self):
        c = BoundCircuit(1, (BoundGate("H", (0,)),), (), 0)
        l0, l1 = evaluate_exact(c)
        assert l0 == pytest.approx(0.5) and l1 == pytest.approx(0.5)

    def test_rx_pi_flips(self):
        c = BoundCircuit(1, (BoundGate("RX", (0,), math.pi),), (), 0)
        l0, l1 = evaluate_exact(c)
        assert l0 == pytest.approx(0.0, abs=1e-12)
        assert l1 == pytest.approx(1.0)

    def test_empty_circuit(self):
        c = BoundCircuit(1, (), (), 0)
        assert evaluate_exact(c) == (1.0, 0.0)

    def test_width_cap(self):
        c = BoundCircuit(27, (), (), 0)
        with pytest.raises(WidthExceeded):
            evaluate_exact(c)

    def test_against_oracle_random_circuits(self):
        rng = np.random.default_rng(77)
        for _ in range(200):
            c = random_circuit(rng)
            got = evaluate_exact(c)
            want = oracle_evaluate(c)
            assert abs(got[0] - want[0]) < 1e-10
            assert abs(got[1] - want[1]) < 1e-10

    def test_norm_preserved(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            c = random_circuit(rng, max_post=0)
            state = run_gates(zero_state(c.width), c.gates, c.width)
            assert abs(np.vdot(state, state) - 1.0) < 1e-12


class TestSample:
    def test_no_postselect_all_usable(self):
        c = BoundCircuit(1, (BoundGate("H", (0,)),), (), 0)
        res = sample(c, 1000, NoiseConfig.off(), np.random.default_rng(0))
        assert res.shots_usable == 1000
        assert sum(res.counts) == 1000

    def test_noiseless_matches_exact_3sigma(self):
        c = BoundCircuit(1, (BoundGate("H", (0,)),), (), 0)
        res = sample(c, 100_000, NoiseConfig.off(), np.random.default_rng(1))
        freq = res.counts[0] / res.shots_usable
        sigma = math.sqrt(0.25 / 100_000)
        assert abs(freq - 0.5) <= 3 * sigma

    def test_seed_determinism(self):
        c = BoundCircuit(2, (BoundGate("H", (0,)), BoundGate("CNOT", (0, 1))), (1,), 0)
        a = sample(c, 4096, NoiseConfig(), np.random.default_rng(9))
        b = sample(c, 4096, NoiseConfig(), np.random.default_rng(9))
        assert a == b

    def test_postselection_survival(self):
        # H on every qubit: 11 postselections each surviving with prob 1/2
        gates = tuple(BoundGate("H", (q,)) for q in range(12))
        c = BoundCircuit(12, gates, tuple(range(1, 12)), 0)
        usable = []
        for seed in range(20):
            try:
                res = sample(c, 8192, NoiseConfig.off(), np.random.default_rng(seed))
                usable.append(res.shots_usable)
            except ZeroUsableShots:
                usable.append(0)
        assert 2 <= np.mean(usable) <= 8

    def test_zero_usable_shots_raised(self):
        # deterministic |1> on a postselected qubit kills every shot
        c = BoundCircuit(2, (BoundGate("RX", (1,), math.pi),), (1,), 0)
        with pytest.raises(ZeroUsableShots):
            sample(c, 64, NoiseConfig.off(), np.random.default_rng(0))

    def test_shots_validation(self):
        c = BoundCircuit(1, (), (), 0)
        with pytest.raises(ValueError):
            sample(c, 0)


class TestNoise:
    def test_disabled_noise_identical_to_noiseless(self):
        c = BoundCircuit(1, (BoundGate("H", (0,)),), (), 0)
        a = sample(c, 2048, NoiseConfig(0.0, 0.0, 0.0, enabled=True),
                   np.random.default_rng(3))
        b = sample(c, 2048, NoiseConfig.off(), np.random.default_rng(3))
        assert a.counts == b.counts

    def test_readout_flip_forced(self):
        c = BoundCircuit(1, (), (), 0)  # deterministic outcome 0
        res = sample(c, 500, NoiseConfig(0.0, 0.0, 1.0), np.random.default_rng(0))
        assert res.counts == (0, 500)

    def test_depolarizing_moves_toward_mixed(self):
        # RX(pi) gives outcome 1 with certainty; with gate noise the
        # outcome-1 frequency drops strictly below 1 but stays above 1/2
        c = BoundCircuit(1, (BoundGate("RX", (0,), math.pi),), (), 0)
        res = sample(c, 20_000, NoiseConfig(p1=0.1, p2=0.0, p_read=0.0),
                     np.random.default_rng(11))
        freq1 = res.counts[1] / res.shots_usable
        assert 0.5 < freq1 < 1.0

    def test_noise_config_validation(self):
        with pytest.raises(ValueError):
            NoiseConfig(p1=1.5)


class TestApplyGate:
    def test_cnot_truth_table(self):
        # prepare |01> (qubit 0 = 1), CNOT(0->1) gives |11> = index 3
        state = zero_state(2)
        state = apply_gate(state, BoundGate("RX", (0,), math.pi), 2)
        state = apply_gate(state, BoundGate("CNOT", (0, 1)), 2)
        probs = np.abs(state) ** 2
        assert probs[3] == pytest.approx(1.0)

    def test_crz_phase_only_on_11(self):
        state = np.full(4, 0.5, dtype=complex)
        out = apply_gate(state, BoundGate("CRZ", (0, 1), math.pi / 2), 2)
        assert np.allclose(np.abs(out), 0.5)
        # control-set branches pick up the RZ phases; others are untouched
        assert out[3] / state[3] == pytest.approx(np.exp(0.25j * math.pi))
        assert out[1] / state[1] == pytest.approx(np.exp(-0.25j * math.pi))
        assert out[0] == state[0] and out[2] == state[2]
