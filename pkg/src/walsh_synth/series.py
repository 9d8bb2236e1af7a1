"""Truncated and sparsified Walsh series under a sup-norm error budget."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .walsh import (
    SampledFunction,
    WalshSpectrum,
    _bit_reversal,
    forward_wht,
    inverse_wht,
    msb_position,
)
from .jsonio import dumps

__all__ = [
    "DUST",
    "WalshSeries",
    "ErrorBudget",
    "partial_series",
    "threshold_series",
    "reconstruction_error",
    "smoothness_bound",
    "required_qubits",
    "total_error_bound",
    "commutator_norm",
    "series_to_json",
    "series_from_json",
    "save_series",
    "load_series",
]

# coefficients below DUST * max|a| are exact zeros
DUST = 1e-14


def _ordered(terms: Iterable[tuple[int, float]]) -> tuple[tuple[int, float], ...]:
    return tuple(sorted(((int(j), float(a)) for j, a in terms), key=lambda t: (-abs(t[1]), t[0])))


@dataclass(frozen=True)
class WalshSeries:
    """Sparse set of ``(paley_index, coefficient)`` terms.

    Terms are kept sorted by descending ``|a_j|`` with ties broken by
    ascending index. Paley indices do not depend on the grid width, so a
    series drawn from one width can be evaluated on any wider grid.
    """

    terms: tuple[tuple[int, float], ...]
    source_n: int

    def __post_init__(self):
        terms = _ordered(self.terms)
        indices = [j for j, _ in terms]
        if len(set(indices)) != len(indices):
            raise ValueError("duplicate Paley indices in series")
        if any(j < 0 or j >= 2 ** self.source_n for j in indices):
            raise ValueError(f"series index out of range for source width {self.source_n}")
        object.__setattr__(self, "terms", terms)

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def indices(self) -> list[int]:
        return [j for j, _ in self.terms]

    @property
    def n_required(self) -> int:
        return max([1] + [msb_position(j) for j, _ in self.terms])

    @property
    def constant(self) -> float:
        """Coefficient of ``w_0``; contributes only a global phase."""
        return dict(self.terms).get(0, 0.0)

    def scaled(self, factor: float) -> "WalshSeries":
        return WalshSeries(tuple((j, a * factor) for j, a in self.terms), self.source_n)

    def dense(self, n: Optional[int] = None) -> WalshSpectrum:
        """Zero-padded Paley spectrum on a register of width ``n``."""
        n = self.source_n if n is None else n
        if self.n_required > n:
            raise ValueError(f"series needs {self.n_required} qubits, register has {n}")
        coeffs = np.zeros(2 ** n)
        for j, a in self.terms:
            coeffs[j] = a
        return WalshSpectrum(coeffs)

    def evaluate(self, n: Optional[int] = None) -> np.ndarray:
        """Series values on the ``2**n`` grid points."""
        return inverse_wht(self.dense(n)).values


@dataclass
class ErrorBudget:
    """Tolerances entering the total simulation error bound.

    ``alpha`` is the commutator norm ``||[V, K]||``; leave it ``None`` when it
    has not been estimated.
    """

    epsilon: float = 0.0
    epsilon_V: float = 0.0
    epsilon_K: float = 0.0
    delta_t: float = 1.0
    alpha: Optional[float] = None

    def __post_init__(self):
        for name in ("epsilon", "epsilon_V", "epsilon_K"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.delta_t <= 0:
            raise ValueError("delta_t must be positive")


def _spectrum(a) -> WalshSpectrum:
    if isinstance(a, SampledFunction):
        return forward_wht(a)
    return a


def _nonzero_terms(a: WalshSpectrum) -> list[tuple[int, float]]:
    c = a.coeffs
    scale = np.max(np.abs(c)) if c.size else 0.0
    if scale == 0.0:
        return []
    keep = np.nonzero(np.abs(c) > DUST * scale)[0]
    return [(int(j), float(c[j])) for j in keep]


def partial_series(a: WalshSpectrum, k: int) -> WalshSeries:
    """Keep every non-zero term with index below ``2**k``.

    This is the same function as resampling on ``2**k`` points: terms with
    ``j < 2**k`` only read the ``k`` leading position bits, i.e. the series
    is the block average over dyadic blocks of ``2**(n-k)`` samples.
    """
    if not 0 <= k <= a.n:
        raise ValueError(f"resolution exponent k={k} outside [0, {a.n}]")
    return WalshSeries(tuple((j, c) for j, c in _nonzero_terms(a) if j < 2 ** k), a.n)


def threshold_series(a, epsilon: float, samples: Optional[SampledFunction] = None) -> WalshSeries:
    """Greedy-by-magnitude prefix meeting a sup-norm budget on the source grid.

    ``a`` may be a spectrum or the sampled function itself. The error is
    checked against ``samples`` (default: the inverse transform of ``a``)
    after each added term; the first prefix with error <= ``epsilon`` wins.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    if isinstance(a, SampledFunction):
        samples = a if samples is None else samples
    spec = _spectrum(a)
    target = inverse_wht(spec).values if samples is None else samples.values
    n = spec.n
    ranked = sorted(_nonzero_terms(spec), key=lambda t: (-abs(t[1]), t[0]))

    k = np.arange(2 ** n)
    rev = _bit_reversal(n)
    approx = np.zeros(2 ** n)
    chosen: list[tuple[int, float]] = []
    residual = float(np.max(np.abs(target))) if target.size else 0.0
    for j, c in ranked:
        if residual <= epsilon:
            series = WalshSeries(tuple(chosen), n)
            # incremental sums can disagree with the transform path by round-off
            if reconstruction_error(series, SampledFunction(target)) <= epsilon:
                return series
        row = 1.0 - 2.0 * (np.bitwise_count(rev[j] & k) & 1)
        approx += c * row
        chosen.append((j, c))
        residual = float(np.max(np.abs(approx - target)))
    return WalshSeries(tuple(chosen), n)


def reconstruction_error(s: WalshSeries, f: SampledFunction) -> float:
    """``max_k |sum_j a_j w_j(x_k) - f_k|`` on the grid of ``f``."""
    if s.n_required > f.n:
        raise ValueError(f"series needs {s.n_required} qubits but grid has width {f.n}")
    return float(np.max(np.abs(s.evaluate(f.n) - f.values)))


def smoothness_bound(f: SampledFunction, k: int) -> float:
    """Upper bound ``sup|f'| / 2**k`` on the 2**k-term partial-series error.

    The derivative is the largest forward difference of adjacent samples with
    respect to the normalized coordinate ``(x - x_min) / length``.
    """
    values = f.values
    if values.size < 2:
        raise ValueError("need at least two samples for a finite difference")
    if not 0 <= k <= f.n:
        raise ValueError(f"resolution exponent k={k} outside [0, {f.n}]")
    slope = np.max(np.abs(np.diff(values))) * values.size
    return float(slope / 2 ** k)


def required_qubits(s: WalshSeries) -> int:
    """Smallest register width hosting every index of ``s``."""
    return s.n_required


def total_error_bound(b: ErrorBudget, t: float) -> Optional[float]:
    """``alpha*t*dt + eps_V*t + eps_K*t``, or ``None`` when alpha is unknown."""
    if t < 0:
        raise ValueError("total time must be non-negative")
    if b.alpha is None:
        return None
    return b.alpha * t * b.delta_t + b.epsilon_V * t + b.epsilon_K * t


def commutator_norm(potential: np.ndarray, length: float, kinetic=None) -> float:
    """Spectral norm of ``[V, K]`` on a periodic grid, built from dense matrices.

    ``kinetic`` maps momenta to energies (default ``p**2/2``). Limited to
    n <= 8 because the matrices are dense.
    """
    v = np.asarray(potential, dtype=float)
    size = v.size
    n = int(np.log2(size))
    if 2 ** n != size or n > 8:
        raise ValueError("commutator_norm needs 2**n samples with n <= 8")
    p = 2 * np.pi * np.fft.fftfreq(size, d=length / size)
    kin = p ** 2 / 2 if kinetic is None else np.asarray(kinetic(p), dtype=float)
    dft = np.fft.fft(np.eye(size), norm="ortho")
    K = dft.conj().T @ np.diag(kin) @ dft
    V = np.diag(v)
    return float(np.linalg.norm(V @ K - K @ V, 2))


# -- JSON -------------------------------------------------------------------

def series_to_json(s: WalshSeries, **extra) -> str:
    doc = {
        "source_n": s.source_n,
        "n_required": s.n_required,
        "terms": [{"j": j, "a": a} for j, a in s.terms],
    }
    doc.update(extra)
    return dumps(doc)


def series_from_json(text: str) -> WalshSeries:
    doc = json.loads(text)
    try:
        terms = tuple((int(t["j"]), float(t["a"])) for t in doc["terms"])
        s = WalshSeries(terms, int(doc["source_n"]))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed series document: {exc}") from exc
    if "n_required" in doc and int(doc["n_required"]) != s.n_required:
        raise ValueError("n_required does not match the listed terms")
    return s


def save_series(s: WalshSeries, path: str | Path, **extra) -> None:
    Path(path).write_text(series_to_json(s, **extra) + "\n")


def load_series(path: str | Path) -> WalshSeries:
    return series_from_json(Path(path).read_text())
