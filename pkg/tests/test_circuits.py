from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from walsh_synth import circuits, walsh
from walsh_synth.circuits import CNOT, RZ, Gate, GateSequence, GlobalPhaseError
from walsh_synth.series import WalshSeries


def dense(gates, n):
    """Product of explicit gate matrices; qubit 1 is the leftmost factor."""
    eye, x = np.eye(2), np.array([[0, 1], [1, 0]])
    p0, p1 = np.diag([1, 0]), np.diag([0, 1])
    u = np.eye(2 ** n, dtype=complex)
    for g in gates:
        if g.kind == CNOT:
            a, b = [eye] * n, [eye] * n
            a[g.control - 1], b[g.control - 1], b[g.qubit - 1] = p0, p1, x
            m = reduce(np.kron, a) + reduce(np.kron, b)
        else:
            ops = [eye] * n
            ops[g.qubit - 1] = (np.diag(np.exp([-0.5j * g.angle, 0.5j * g.angle]))
                                if g.kind == RZ else np.diag([1, -1]))
            m = reduce(np.kron, ops)
        u = m @ u
    return u


def target_diagonal(s, n):
    return np.exp(1j * s.evaluate(n))


sparse_series = st.integers(1, 6).flatmap(
    lambda n: st.tuples(
        st.just(n),
        st.dictionaries(st.integers(0, 2 ** n - 1), st.floats(-3, 3, allow_nan=False),
                        min_size=1, max_size=2 ** n),
    )
)


def test_walsh_operator_examples():
    g = circuits.walsh_operator_circuit(5, 0.3, 3)
    assert [str(x) for x in g.gates] == ["CNOT 1 3", "RZ 3 -0.6", "CNOT 1 3"]
    g = circuits.walsh_operator_circuit(7, 0.3, 3)
    assert [str(x) for x in g.gates][:2] == ["CNOT 1 3", "CNOT 2 3"]
    assert [str(x) for x in g.gates][3:] == ["CNOT 2 3", "CNOT 1 3"]
    assert len(circuits.walsh_operator_circuit(4, 1.0, 3)) == 1


def test_walsh_operator_constant_rejected():
    with pytest.raises(GlobalPhaseError):
        circuits.walsh_operator_circuit(0, 1.0, 3)
    with pytest.raises(ValueError):
        circuits.walsh_operator_circuit(8, 1.0, 3)


@pytest.mark.parametrize("j", range(1, 16))
def test_walsh_operator_matches_dense(j):
    n = 4
    a = 0.37
    g = circuits.walsh_operator_circuit(j, a, n)
    expected = np.exp(1j * a * walsh.walsh_matrix(n)[j])
    assert np.allclose(dense(g.gates, n), np.diag(expected), atol=1e-12)
    # CNOT count is twice the Hamming weight minus one
    assert circuits.gate_counts(g).cnots == 2 * (bin(j).count("1") - 1)


@settings(max_examples=60, deadline=None)
@given(sparse_series)
def test_all_modes_reproduce_the_diagonal(case):
    n, coeffs = case
    s = WalshSeries(tuple(coeffs.items()), n)
    want = target_diagonal(s, n)
    for mode in ("paley", "sequency", "optimized"):
        got = circuits.circuit_diagonal(circuits.synthesize(s, n, mode))
        assert np.allclose(got, want, atol=1e-10), mode


@settings(max_examples=60, deadline=None)
@given(sparse_series)
def test_gate_count_ordering(case):
    n, coeffs = case
    s = WalshSeries(tuple(coeffs.items()), n)
    paley = circuits.gate_counts(circuits.synthesize(s, n, "paley"))
    seq = circuits.gate_counts(circuits.synthesize(s, n, "sequency"))
    opt = circuits.gate_counts(circuits.synthesize(s, n, "optimized"))
    rotations = len([j for j in coeffs if j])
    assert paley.rotations == seq.rotations == opt.rotations == rotations
    assert opt.total <= seq.total


def test_phase_tracking_matches_dense_oracle():
    rng = np.random.default_rng(11)
    for n in (2, 3, 4):
        for _ in range(20):
            gates = []
            for _ in range(12):
                if rng.random() < 0.5:
                    c, t = rng.choice(np.arange(1, n + 1), 2, replace=False)
                    gates += [Gate.cnot(int(c), int(t))]
                else:
                    gates.append(Gate.rz(int(rng.integers(1, n + 1)), float(rng.normal())))
            # mirror the CNOTs so the product is diagonal
            cnots = [g for g in gates if g.kind == CNOT]
            seq = GateSequence(n, gates + cnots[::-1], "paley", 0.25)
            u = dense(seq.gates, n) * np.exp(0.25j)
            assert np.allclose(np.diag(circuits.circuit_diagonal(seq)), u, atol=1e-12)


def test_non_diagonal_circuit_rejected():
    with pytest.raises(ValueError):
        circuits.circuit_diagonal(GateSequence(2, [Gate.cnot(1, 2)]))


def test_full_series_sequency_count_is_optimal_formula():
    for n in range(1, 8):
        s = WalshSeries(tuple((j, 1.0 + j) for j in range(1, 2 ** n)), n)
        counts = circuits.gate_counts(circuits.synthesize_sequency(s, n))
        assert counts.rotations == 2 ** n - 1
        assert counts.cnots == 2 ** n - 2


def test_sequency_partitions_skip_absent_indices():
    parts = circuits.sequency_partitions([6, 4, 1, 0], 3)
    assert dict(parts) == {1: [1], 3: [6, 4]}


def test_commutes_rules():
    assert circuits.commutes(Gate.cnot(1, 3), Gate.cnot(2, 3))
    assert circuits.commutes(Gate.cnot(1, 2), Gate.cnot(1, 3))
    assert not circuits.commutes(Gate.cnot(1, 2), Gate.cnot(2, 3))
    assert circuits.commutes(Gate.rz(1, 0.2), Gate.cnot(1, 2))
    assert not circuits.commutes(Gate.z(2), Gate.cnot(1, 2))


def test_bridge_rewrite_rejects_unrelated_pairs():
    with pytest.raises(ValueError):
        circuits.bridge_rewrite(Gate.cnot(1, 2), Gate.cnot(1, 3))
    with pytest.raises(ValueError):
        circuits.bridge_rewrite(Gate.cnot(1, 2), Gate.cnot(2, 1))


def test_cancel_through_commuting_gates():
    gates = [Gate.cnot(1, 3), Gate.rz(2, 0.4), Gate.cnot(2, 3), Gate.cnot(1, 3)]
    assert circuits.cancel_commuting_pairs(gates) == [Gate.rz(2, 0.4), Gate.cnot(2, 3)]
    blocked = [Gate.cnot(1, 3), Gate.rz(3, 0.4), Gate.cnot(1, 3)]
    assert circuits.cancel_commuting_pairs(blocked) == blocked


def test_peephole_never_grows_and_is_idempotent():
    rng = np.random.default_rng(5)
    for _ in range(100):
        n = int(rng.integers(2, 6))
        idx = rng.choice(2 ** n, size=int(rng.integers(1, 2 ** n)), replace=False)
        s = WalshSeries(tuple((int(j), float(rng.normal())) for j in idx), n)
        seq = circuits.synthesize_sequency(s, n)
        opt = circuits.peephole_optimize(seq)
        assert len(opt) <= len(seq)
        assert opt.provenance == "optimized"
        assert len(circuits.peephole_optimize(opt)) == len(opt)
        assert np.allclose(circuits.circuit_diagonal(opt), circuits.circuit_diagonal(seq), atol=1e-12)


def test_reference_sparse_set_counts():
    # frozen from synthesis of the 19-index set
    idx = [1, 2, 4, 7, 8, 11, 13, 14, 16, 19, 21, 22, 25, 32, 35, 37, 38, 64, 67]
    s = WalshSeries(tuple((j, 0.1) for j in idx), 7)
    assert circuits.gate_counts(circuits.synthesize(s, 7, "paley")).total == 67
    assert circuits.gate_counts(circuits.synthesize(s, 7, "sequency")).total == 53
    opt = circuits.gate_counts(circuits.synthesize(s, 7, "optimized"))
    assert (opt.rotations, opt.total) == (19, 53)


def test_unknown_mode():
    with pytest.raises(ValueError):
        circuits.synthesize(WalshSeries(((1, 1.0),), 1), 1, "fancy")


def test_series_wider_than_register():
    with pytest.raises(ValueError):
        circuits.synthesize(WalshSeries(((9, 1.0),), 4), 3, "paley")


@pytest.mark.parametrize("mode", ["paley", "sequency", "optimized"])
def test_text_and_json_round_trip(mode):
    s = WalshSeries(((0, 0.7), (3, -1 / 3), (6, 0.25), (5, 1e-7)), 3)
    g = circuits.synthesize(s, 3, mode)
    for back in (circuits.circuit_from_text(circuits.circuit_to_text(g)),
                 circuits.circuit_from_json(circuits.circuit_to_json(g))):
        assert back.gates == g.gates
        assert back.global_phase == g.global_phase
        assert back.provenance == g.provenance
        assert back.n == 3


def test_text_parser_errors():
    with pytest.raises(ValueError):
        circuits.circuit_from_text("RZ 1 0.5\n")
    with pytest.raises(ValueError):
        circuits.circuit_from_text("# qubits 2\nSWAP 1 2\n")


def test_global_phase_carried():
    s = WalshSeries(((0, 0.5), (1, 0.2)), 1)
    g = circuits.synthesize(s, 1, "sequency")
    assert g.global_phase == 0.5
    assert np.allclose(circuits.circuit_diagonal(g, include_global_phase=False) * np.exp(0.5j),
                       circuits.circuit_diagonal(g))


def test_full_three_qubit_paley_count():
    s = WalshSeries(tuple((j, 0.1 * j) for j in range(8)), 3)
    counts = circuits.gate_counts(circuits.synthesize_paley(s, 3))
    assert (counts.cnots, counts.rotations, counts.total) == (10, 7, 17)
