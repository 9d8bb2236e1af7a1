"""Walsh-series circuits for diagonal unitaries and a statevector testbed."""

from .walsh import (
    SampledFunction,
    WalshSpectrum,
    dyadic_bits,
    forward_wht,
    gray_code_sequence,
    inverse_wht,
    walsh_function,
)
from .series import (
    ErrorBudget,
    WalshSeries,
    partial_series,
    reconstruction_error,
    required_qubits,
    smoothness_bound,
    threshold_series,
    total_error_bound,
)
from .circuits import (
    Gate,
    GateCounts,
    GateSequence,
    GlobalPhaseError,
    circuit_diagonal,
    gate_counts,
    peephole_optimize,
    synthesize_paley,
    synthesize_sequency,
    walsh_operator_circuit,
)
from .simulate import (
    SimulationConfig,
    StateVector,
    apply_diagonal,
    apply_gate,
    evolve,
    fidelity,
    momentum_transform,
    trotter_step,
)
from .eckart import EckartScenario, eckart_potential, gaussian_packet, run_benchmark

__version__ = "0.1.0"
