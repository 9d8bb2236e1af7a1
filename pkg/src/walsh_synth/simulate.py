"""Statevector simulation on a position grid.

Split-operator evolution: potential phases in position space, a unitary
FFT to centered momenta, kinetic phases, and the inverse FFT. Units are
hbar = m = 1.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .circuits import CNOT, RZ, Z, Gate, GateSequence
from .series import WalshSeries, threshold_series
from .walsh import SampledFunction, register_width

__all__ = [
    "StateVector",
    "SimulationConfig",
    "apply_gate",
    "apply_circuit",
    "apply_diagonal",
    "momentum_transform",
    "momentum_grid",
    "kinetic_energy",
    "kinetic_phases",
    "trotter_step",
    "evolve",
    "coarse_grain",
    "fidelity",
    "write_trajectory_csv",
    "load_config",
    "config_from_dict",
]

POSITION = "position"
MOMENTUM = "momentum"


@dataclass
class StateVector:
    """``2**n`` amplitudes on the grid ``x_k = x_min + k*length/2**n``."""

    amps: np.ndarray
    x_min: float = 0.0
    length: float = 1.0
    representation: str = POSITION

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=complex).reshape(-1)
        register_width(self.amps.size)

    @property
    def n(self) -> int:
        return register_width(self.amps.size)

    @property
    def grid(self) -> np.ndarray:
        return self.x_min + np.arange(self.amps.size) * (self.length / self.amps.size)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def with_amps(self, amps: np.ndarray, representation: Optional[str] = None) -> "StateVector":
        return replace(self, amps=amps, representation=representation or self.representation)

    @classmethod
    def basis(cls, n: int, k: int, x_min: float = 0.0, length: float = 1.0) -> "StateVector":
        amps = np.zeros(2 ** n, dtype=complex)
        amps[k] = 1.0
        return cls(amps, x_min, length)


def apply_gate(psi: StateVector, g: Gate) -> StateVector:
    """Apply one gate; qubit ``i`` is axis ``i-1`` of the reshaped amplitudes."""
    n = psi.n
    if any(q < 1 or q > n for q in g.qubits):
        raise ValueError(f"gate {g} outside register of width {n}")
    t = psi.amps.reshape((2,) * n).copy()
    one = [slice(None)] * n
    one[g.qubit - 1] = 1
    if g.kind == Z:
        t[tuple(one)] *= -1
    elif g.kind == RZ:
        zero = list(one)
        zero[g.qubit - 1] = 0
        t[tuple(zero)] *= np.exp(-0.5j * g.angle)
        t[tuple(one)] *= np.exp(0.5j * g.angle)
    elif g.kind == CNOT:
        a = [slice(None)] * n
        a[g.control - 1] = 1
        a[g.qubit - 1] = 0
        b = list(a)
        b[g.qubit - 1] = 1
        a, b = tuple(a), tuple(b)
        t[a], t[b] = t[b].copy(), t[a].copy()
    return psi.with_amps(t.reshape(-1))


def apply_circuit(psi: StateVector, circuit: GateSequence) -> StateVector:
    """Apply a gate sequence gate by gate, then its recorded global phase."""
    for g in circuit.gates:
        psi = apply_gate(psi, g)
    return psi.with_amps(psi.amps * np.exp(1j * circuit.global_phase))


def apply_diagonal(psi: StateVector, phases: np.ndarray) -> StateVector:
    """``c_k <- exp(i phi_k) c_k``."""
    phases = np.asarray(phases, dtype=float).reshape(-1)
    if phases.size != psi.amps.size:
        raise ValueError(f"expected {psi.amps.size} phases, got {phases.size}")
    return psi.with_amps(psi.amps * np.exp(1j * phases))


def momentum_grid(n: int, length: float) -> np.ndarray:
    """Centered momenta ``2*pi*m/length`` for ``m`` in ``[-N/2, N/2)``."""
    size = 2 ** n
    return 2 * np.pi * np.arange(-size // 2, size // 2) / length


def kinetic_energy(n: int, length: float) -> np.ndarray:
    return momentum_grid(n, length) ** 2 / 2


def momentum_transform(psi: StateVector, direction: str = "forward") -> StateVector:
    """Unitary DFT between position and centered-momentum representations."""
    if direction == "forward":
        amps = np.fft.fftshift(np.fft.fft(psi.amps, norm="ortho"))
        return psi.with_amps(amps, MOMENTUM)
    if direction == "inverse":
        amps = np.fft.ifft(np.fft.ifftshift(psi.amps), norm="ortho")
        return psi.with_amps(amps, POSITION)
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def trotter_step(psi: StateVector, v_phases: np.ndarray, k_phases: np.ndarray) -> StateVector:
    """One first-order step: potential, FFT, kinetic, inverse FFT.

    ``v_phases`` are ``-V(x_k) dt``; ``k_phases`` are ``-K(p_m) dt`` in
    centered momentum order.
    """
    size = psi.amps.size
    v_phases = np.asarray(v_phases, dtype=float).reshape(-1)
    k_phases = np.asarray(k_phases, dtype=float).reshape(-1)
    if v_phases.size != size or k_phases.size != size:
        raise ValueError("phase vectors must match the state length")
    amps = psi.amps * np.exp(1j * v_phases)
    amps = np.fft.fftshift(np.fft.fft(amps, norm="ortho")) * np.exp(1j * k_phases)
    amps = np.fft.ifft(np.fft.ifftshift(amps), norm="ortho")
    return psi.with_amps(amps)


@dataclass
class SimulationConfig:
    """Inputs of a split-operator run.

    ``potential`` is either sampled values ``V(x_k)`` or a :class:`WalshSeries`
    evaluated on the grid. ``kinetic_mode`` is ``"exact"`` (diagonal phases
    on the momentum grid) or ``"walsh"`` (a threshold Walsh series of the
    kinetic energy at relative tolerance ``kinetic_epsilon``).
    """

    n: int
    potential: object
    t: float
    steps: int
    x_min: float = -5.0
    length: float = 10.0
    kinetic_mode: str = "exact"
    kinetic_epsilon: float = 0.0
    snapshot_every: int = 0

    def validate(self) -> None:
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if self.steps < 0:
            raise ValueError("steps must be non-negative")
        if self.t < 0:
            raise ValueError("total time must be non-negative")
        if self.length <= 0:
            raise ValueError("domain length must be positive")
        if self.kinetic_mode not in ("exact", "walsh"):
            raise ValueError(f"unknown kinetic_mode {self.kinetic_mode!r}")
        if self.snapshot_every < 0:
            raise ValueError("snapshot_every must be non-negative")
        self.potential_values()

    @property
    def dt(self) -> float:
        return self.t / self.steps if self.steps else 0.0

    def potential_values(self) -> np.ndarray:
        if isinstance(self.potential, WalshSeries):
            return self.potential.evaluate(self.n)
        v = np.asarray(self.potential, dtype=float).reshape(-1)
        if v.size != 2 ** self.n:
            raise ValueError(f"potential has {v.size} samples, grid has {2 ** self.n}")
        return v

    def kinetic_values(self) -> np.ndarray:
        k = kinetic_energy(self.n, self.length)
        if self.kinetic_mode == "exact":
            return k
        series = threshold_series(SampledFunction(k), self.kinetic_epsilon * np.max(np.abs(k)))
        return series.evaluate(self.n)


def kinetic_phases(n: int, length: float, dt: float) -> np.ndarray:
    return -kinetic_energy(n, length) * dt


def evolve(config: SimulationConfig, psi0: StateVector,
           v_phases: Optional[np.ndarray] = None) -> list[StateVector]:
    """Run ``config.steps`` Trotter steps and return snapshots.

    Snapshots are taken every ``snapshot_every`` steps (0 keeps only the
    first and last state). ``v_phases`` overrides the potential phases, e.g.
    with the diagonal of a synthesized circuit.
    """
    config.validate()
    if psi0.n != config.n:
        raise ValueError(f"state width {psi0.n} does not match config width {config.n}")
    if abs(psi0.norm - 1.0) > 1e-10:
        raise ValueError("initial state must be normalized")
    dt = config.dt
    if v_phases is None:
        v_phases = -config.potential_values() * dt
    k_phases = -config.kinetic_values() * dt
    snapshots = [psi0]
    psi = psi0
    for step in range(1, config.steps + 1):
        psi = trotter_step(psi, v_phases, k_phases)
        if (config.snapshot_every and step % config.snapshot_every == 0) or step == config.steps:
            snapshots.append(psi)
    return snapshots


def snapshot_steps(config: SimulationConfig) -> list[int]:
    """Step numbers matching the snapshots returned by :func:`evolve`."""
    steps = [0]
    for step in range(1, config.steps + 1):
        if (config.snapshot_every and step % config.snapshot_every == 0) or step == config.steps:
            steps.append(step)
    return steps


def coarse_grain(psi: StateVector, n: int) -> StateVector:
    """Dyadic block sum of amplitudes scaled by ``1/sqrt(block size)``."""
    if n > psi.n:
        raise ValueError("can only coarse-grain to a narrower register")
    block = 2 ** (psi.n - n)
    amps = psi.amps.reshape(-1, block).sum(axis=1) / np.sqrt(block)
    return psi.with_amps(amps)


def fidelity(a: StateVector, b: StateVector) -> float:
    """``|<a|b>|``; states of different width are compared on the coarser grid.

    The finer state is coarse-grained with :func:`coarse_grain` (block sum of
    amplitudes over dyadic blocks, times ``1/sqrt(block)``), so the result
    is not invariant under swapping which run was finer.
    """
    if not (np.isclose(a.x_min, b.x_min) and np.isclose(a.length, b.length)):
        raise ValueError("states live on different domains")
    if a.n > b.n:
        a = coarse_grain(a, b.n)
    elif b.n > a.n:
        b = coarse_grain(b, a.n)
    return float(min(1.0, abs(np.vdot(a.amps, b.amps))))


def write_trajectory_csv(snapshots: Sequence[StateVector], steps: Sequence[int],
                         path: str | Path) -> None:
    """CSV columns ``step, k, x_k, prob``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "k", "x_k", "prob"])
        for step, psi in zip(steps, snapshots):
            for k, (x, p) in enumerate(zip(psi.grid, psi.probabilities)):
                w.writerow([step, k, repr(float(x)), repr(float(p))])


def config_from_dict(doc: dict) -> tuple[SimulationConfig, dict]:
    """Build a config from its JSON mirror.

    ``potential`` is ``{"type": "eckart", "A": .., "a": ..}``,
    ``{"type": "samples", "values": [..]}``, ``{"type": "series", ...series
    JSON...}`` or ``{"type": "zero"}``. Returns the config and the
    ``initial`` packet parameters.
    """
    from .eckart import eckart_potential
    from .series import series_from_json

    try:
        n = int(doc["n"])
        x_min = float(doc.get("x_min", -5.0))
        length = float(doc.get("L", doc.get("length", 10.0)))
        pot = doc.get("potential", {"type": "zero"})
        kind = pot.get("type")
        grid = x_min + np.arange(2 ** n) * (length / 2 ** n)
        if kind == "eckart":
            potential = eckart_potential(float(pot["A"]), float(pot["a"]), grid)
        elif kind == "samples":
            potential = np.asarray(pot["values"], dtype=float)
        elif kind == "series":
            potential = series_from_json(json.dumps(pot))
        elif kind == "zero":
            potential = np.zeros(2 ** n)
        else:
            raise ValueError(f"unknown potential type {kind!r}")
        config = SimulationConfig(
            n=n, potential=potential, t=float(doc["t"]), steps=int(doc["steps"]),
            x_min=x_min, length=length,
            kinetic_mode=doc.get("kinetic_mode", "exact"),
            kinetic_epsilon=float(doc.get("kinetic_epsilon", 0.0)),
            snapshot_every=int(doc.get("snapshot_every", 0)),
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed simulation config: {exc}") from exc
    config.validate()
    initial = dict(doc.get("initial", {"x0": -3.0, "p0": 15.0, "sigma": 0.5}))
    return config, initial


def load_config(path: str | Path) -> tuple[SimulationConfig, dict]:
    return config_from_dict(json.loads(Path(path).read_text()))
