"""Gate sequences for diagonal unitaries ``exp(i * sum_j a_j w_j)``.

Each Walsh operator ``w_j`` is a tensor product of Pauli-Z gates on the
qubits where ``j`` has a set bit. Its exponential is a Z-rotation
``RZ(-2 a_j)`` on the qubit of the most significant set bit of ``j``,
flanked by CNOTs from the qubits of the other set bits. Ordering operators
by Gray code makes most of those flanking CNOTs cancel.
"""

from __future__ import annotations

import json
from collections import OrderedDict
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .jsonio import dumps
from .series import WalshSeries
from .walsh import gray_code_sequence, msb_position

__all__ = [
    "RZ",
    "CNOT",
    "Z",
    "Gate",
    "GateSequence",
    "GateCounts",
    "GlobalPhaseError",
    "walsh_operator_circuit",
    "synthesize_paley",
    "synthesize_sequency",
    "sequency_partitions",
    "junction_masks",
    "synthesize",
    "peephole_optimize",
    "cancel_commuting_pairs",
    "commutes",
    "bridge_rewrite",
    "gate_counts",
    "circuit_diagonal",
    "circuit_to_text",
    "circuit_from_text",
    "circuit_to_json",
    "circuit_from_json",
]

RZ = "RZ"
CNOT = "CNOT"
Z = "Z"


class GlobalPhaseError(ValueError):
    """Raised for ``j = 0``: ``exp(i a_0 w_0)`` is a global phase, not a gate."""


@dataclass(frozen=True)
class Gate:
    """One gate. ``qubit`` is the target; ``RZ(theta) = exp(-i theta Z / 2)``."""

    kind: str
    qubit: int
    control: Optional[int] = None
    angle: Optional[float] = None

    def __post_init__(self):
        if self.kind == CNOT:
            if self.control is None or self.control == self.qubit:
                raise ValueError("CNOT needs a control distinct from its target")
        elif self.kind == RZ:
            if self.angle is None:
                raise ValueError("RZ needs an angle")
        elif self.kind != Z:
            raise ValueError(f"unknown gate kind {self.kind!r}")

    @classmethod
    def rz(cls, qubit: int, angle: float) -> "Gate":
        return cls(RZ, qubit, angle=float(angle))

    @classmethod
    def cnot(cls, control: int, target: int) -> "Gate":
        return cls(CNOT, target, control=control)

    @classmethod
    def z(cls, qubit: int) -> "Gate":
        return cls(Z, qubit)

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.qubit,) if self.control is None else (self.control, self.qubit)

    def __str__(self) -> str:
        if self.kind == CNOT:
            return f"CNOT {self.control} {self.qubit}"
        if self.kind == RZ:
            return f"RZ {self.qubit} {float(self.angle)!r}"
        return f"Z {self.qubit}"


@dataclass
class GateSequence:
    """Ordered gates on ``n`` qubits.

    ``global_phase`` holds the ``a_0`` coefficient, which is never
    synthesized; :func:`circuit_diagonal` folds it back in.
    """

    n: int
    gates: list[Gate] = field(default_factory=list)
    provenance: str = "paley"
    global_phase: float = 0.0

    def __post_init__(self):
        self.gates = list(self.gates)
        for g in self.gates:
            if any(q < 1 or q > self.n for q in g.qubits):
                raise ValueError(f"gate {g} outside register of width {self.n}")

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)


@dataclass(frozen=True)
class GateCounts:
    rotations: int = 0
    cnots: int = 0
    pauli_z: int = 0

    @property
    def total(self) -> int:
        return self.rotations + self.cnots + self.pauli_z

    def as_dict(self) -> dict:
        return {"rotations": self.rotations, "cnots": self.cnots,
                "pauli_z": self.pauli_z, "total": self.total}


def _bits(mask: int) -> list[int]:
    """1-based positions of the set bits of ``mask``, ascending."""
    return [i + 1 for i in range(mask.bit_length()) if (mask >> i) & 1]


def walsh_operator_circuit(j: int, a_j: float, n: int) -> GateSequence:
    """Gates for ``exp(i a_j w_j)`` with CNOTs targeted on the MSB qubit of j."""
    if j == 0:
        raise GlobalPhaseError("index 0 only contributes a global phase")
    if j < 0 or j >= 2 ** n:
        raise ValueError(f"index {j} outside register of width {n}")
    target = msb_position(j)
    flank = [Gate.cnot(c, target) for c in _bits(j) if c != target]
    gates = flank + [Gate.rz(target, -2.0 * a_j)] + flank[::-1]
    return GateSequence(n, gates, "paley")


def _check_width(s: WalshSeries, n: int) -> None:
    if s.n_required > n:
        raise ValueError(f"series needs {s.n_required} qubits, register has {n}")


def synthesize_paley(s: WalshSeries, n: int) -> GateSequence:
    """Concatenate single-operator circuits in ascending Paley index."""
    _check_width(s, n)
    gates: list[Gate] = []
    for j, a in sorted(s.terms):
        if j:
            gates.extend(walsh_operator_circuit(j, a, n).gates)
    return GateSequence(n, gates, "paley", s.constant)


def sequency_partitions(indices: Iterable[int], n: int) -> "OrderedDict[int, list[int]]":
    """Gray-ordered indices grouped by MSB position, ascending partition.

    Absent indices are simply skipped; relative Gray order is kept.
    """
    present = {int(j) for j in indices if j}
    parts: "OrderedDict[int, list[int]]" = OrderedDict()
    for j in gray_code_sequence(n):
        if j in present:
            parts.setdefault(msb_position(j), []).append(j)
    return parts


def junction_masks(group: Sequence[int]) -> list[int]:
    """CNOT control masks preceding each rotation of one partition.

    The first mask is the wrap-around XOR of the last and first entries;
    the rest are XORs of neighbours. For a complete partition the last entry
    is the bare MSB, so the wrap mask equals the low bits of the first entry.
    """
    if not group:
        return []
    return [group[-1] ^ group[0]] + [a ^ b for a, b in zip(group, group[1:])]


def synthesize_sequency(s: WalshSeries, n: int) -> GateSequence:
    """Gray-code (sequency) ordered synthesis with shared CNOTs.

    Within a partition with target qubit ``i`` the qubit carries the parity
    of the bits selected so far; moving between neighbouring indices needs
    one CNOT per differing bit. The partition opens with the low bits of its
    first index and closes with the low bits of its last one, which restores
    qubit ``i``.
    """
    _check_width(s, n)
    coeff = dict(s.terms)
    gates: list[Gate] = []

    def emit(mask: int, target: int) -> None:
        for c in _bits(mask):
            g = Gate.cnot(c, target)
            if gates and gates[-1] == g:
                gates.pop()
            else:
                gates.append(g)

    for target, group in sequency_partitions(coeff, n).items():
        msb = 1 << (target - 1)
        prev = msb
        for j in group:
            emit(prev ^ j, target)
            gates.append(Gate.rz(target, -2.0 * coeff[j]))
            prev = j
        emit(prev ^ msb, target)
    return GateSequence(n, gates, "sequency", s.constant)


# -- rewriting --------------------------------------------------------------

def commutes(g: Gate, h: Gate) -> bool:
    """Sufficient commutation test covering the exact rewrite rules.

    Diagonal gates commute with each other and with a CNOT unless they sit on
    its target. CNOTs commute when neither one's target is the other's
    control (common target, common control, or disjoint).
    """
    if g.kind != CNOT and h.kind != CNOT:
        return True
    if g.kind != CNOT:
        return g.qubit != h.qubit
    if h.kind != CNOT:
        return h.qubit != g.qubit
    return g.qubit != h.control and h.qubit != g.control


def bridge_rewrite(g: Gate, h: Gate) -> list[Gate]:
    """Swap two CNOTs where one's target is the other's control.

    ``[CNOT(i->j), CNOT(j->k)] == [CNOT(j->k), CNOT(i->k), CNOT(i->j)]``
    and symmetrically ``[CNOT(j->k), CNOT(i->j)] == [CNOT(i->j), CNOT(i->k),
    CNOT(j->k)]``. Both lists are in time order.
    """
    if g.kind != CNOT or h.kind != CNOT:
        raise ValueError("bridge rewrite applies to CNOT pairs only")
    if g.qubit == h.control and g.control != h.qubit:
        return [h, Gate.cnot(g.control, h.qubit), g]
    if g.control == h.qubit and g.qubit != h.control:
        return [h, Gate.cnot(h.control, g.qubit), g]
    raise ValueError(f"no bridge rewrite for {g} followed by {h}")


def cancel_commuting_pairs(gates: list[Gate]) -> list[Gate]:
    """Cancel identical CNOTs that can be brought together by commutation."""
    out = list(gates)
    i = 0
    while i < len(out):
        g = out[i]
        if g.kind == CNOT:
            for k in range(i + 1, len(out)):
                h = out[k]
                if h == g:
                    del out[k]
                    del out[i]
                    i = max(i - 1, 0)
                    break
                if not commutes(g, h):
                    i += 1
                    break
            else:
                i += 1
            continue
        i += 1
    return out


def peephole_optimize(g: GateSequence, window: int = 8,
                      budget: Optional[int] = None) -> GateSequence:
    """Shrink a diagonal circuit with exact CNOT rewrite rules.

    Cancels identical CNOTs that commute together, then tries the bridge
    rewrite on CNOT pairs within ``window`` gates, keeping it only when the
    circuit gets shorter. Stops at a fixed point or after ``budget`` accepted
    rewrites (default ``10 * len(g)``). Never lengthens the circuit.
    """
    budget = 10 * max(len(g), 1) if budget is None else budget
    gates = cancel_commuting_pairs(g.gates)
    accepted = 0
    improved = True
    while improved and accepted < budget:
        improved = False
        for p, a in enumerate(gates):
            if a.kind != CNOT:
                continue
            for q in range(p + 1, min(len(gates), p + 1 + window)):
                b = gates[q]
                if commutes(a, b):
                    continue
                if b.kind == CNOT and b != a:
                    try:
                        swapped = bridge_rewrite(a, b)
                    except ValueError:
                        break
                    # a commutes with everything in between, so it can sit next to b
                    trial = gates[:p] + gates[p + 1:q] + swapped + gates[q + 1:]
                    trial = cancel_commuting_pairs(trial)
                    if len(trial) < len(gates):
                        gates = trial
                        accepted += 1
                        improved = True
                break
            if improved:
                break
    out = replace(g, gates=gates)
    out.provenance = "optimized"
    return out


def synthesize(s: WalshSeries, n: int, mode: str = "optimized") -> GateSequence:
    """Dispatch to one of the three synthesis paths."""
    if mode == "paley":
        return synthesize_paley(s, n)
    if mode == "sequency":
        return synthesize_sequency(s, n)
    if mode == "optimized":
        return peephole_optimize(synthesize_sequency(s, n))
    raise ValueError(f"unknown synthesis mode {mode!r}")


def gate_counts(g: GateSequence | Sequence[Gate]) -> GateCounts:
    gates = g.gates if isinstance(g, GateSequence) else g
    kinds = [x.kind for x in gates]
    return GateCounts(kinds.count(RZ), kinds.count(CNOT), kinds.count(Z))


def circuit_diagonal(g: GateSequence, include_global_phase: bool = True) -> np.ndarray:
    """Diagonal of the circuit unitary by classical phase tracking.

    Every basis state is followed as a bit label: CNOTs permute labels and
    diagonal gates add a label-dependent phase. The circuit is diagonal only
    if every label returns to where it started.
    """
    n = g.n
    start = np.arange(2 ** n, dtype=np.int64)
    label = start.copy()
    phase = np.zeros(2 ** n)

    def bit(q: int) -> np.ndarray:
        return (label >> (n - q)) & 1

    for gate in g.gates:
        if gate.kind == RZ:
            phase += np.where(bit(gate.qubit), 0.5, -0.5) * gate.angle
        elif gate.kind == Z:
            phase += np.pi * bit(gate.qubit)
        elif gate.kind == CNOT:
            label ^= bit(gate.control) << (n - gate.qubit)
        else:
            raise ValueError(f"gate {gate} is not diagonal-compatible")
    if not np.array_equal(label, start):
        raise ValueError("gate sequence is not diagonal in the computational basis")
    if include_global_phase:
        phase = phase + g.global_phase
    return np.exp(1j * phase)


# -- serialization ----------------------------------------------------------

def circuit_to_text(g: GateSequence) -> str:
    lines = [f"# qubits {g.n}", f"# provenance {g.provenance}",
             f"# global_phase {float(g.global_phase)!r}"]
    lines += [str(x) for x in g.gates]
    return "\n".join(lines) + "\n"


def circuit_from_text(text: str) -> GateSequence:
    n = None
    provenance = "paley"
    global_phase = 0.0
    gates = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "#":
            if len(parts) >= 3 and parts[1] == "qubits":
                n = int(parts[2])
            elif len(parts) >= 3 and parts[1] == "provenance":
                provenance = parts[2]
            elif len(parts) >= 3 and parts[1] == "global_phase":
                global_phase = float(parts[2])
            continue
        try:
            if parts[0] == "RZ" and len(parts) == 3:
                gates.append(Gate.rz(int(parts[1]), float(parts[2])))
            elif parts[0] == "CNOT" and len(parts) == 3:
                gates.append(Gate.cnot(int(parts[1]), int(parts[2])))
            elif parts[0] == "Z" and len(parts) == 2:
                gates.append(Gate.z(int(parts[1])))
            else:
                raise ValueError("unrecognised gate")
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {raw!r}: {exc}") from exc
    if n is None:
        raise ValueError("missing '# qubits <n>' header")
    return GateSequence(n, gates, provenance, global_phase)


def _gate_doc(x: Gate) -> dict:
    if x.kind == CNOT:
        return {"kind": CNOT, "control": x.control, "target": x.qubit}
    if x.kind == RZ:
        return {"kind": RZ, "qubit": x.qubit, "angle": x.angle}
    return {"kind": Z, "qubit": x.qubit}


def circuit_to_json(g: GateSequence) -> str:
    return dumps({"qubits": g.n, "provenance": g.provenance,
                  "global_phase": g.global_phase,
                  "gates": [_gate_doc(x) for x in g.gates]})


def circuit_from_json(text: str) -> GateSequence:
    doc = json.loads(text)
    gates = []
    for d in doc["gates"]:
        if d["kind"] == CNOT:
            gates.append(Gate.cnot(int(d["control"]), int(d["target"])))
        elif d["kind"] == RZ:
            gates.append(Gate.rz(int(d["qubit"]), float(d["angle"])))
        else:
            gates.append(Gate.z(int(d["qubit"])))
    return GateSequence(int(doc["qubits"]), gates, doc.get("provenance", "paley"),
                        float(doc.get("global_phase", 0.0)))


def save_circuit(g: GateSequence, path: str | Path) -> None:
    path = Path(path)
    path.write_text(circuit_to_json(g) + "\n" if path.suffix == ".json" else circuit_to_text(g))
