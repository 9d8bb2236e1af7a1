"""Walsh functions and the discrete Walsh-Fourier transform in Paley order.

Bit conventions used throughout the package:

* a Paley index ``j`` has bits ``j_i`` numbered from the least significant
  bit, ``j = sum_i j_i 2**(i-1)``;
* a grid index ``k`` on a register of width ``n`` has bits ``k_i`` numbered
  from the most significant bit, ``k = sum_i k_i 2**(n-i)``;
* qubit ``i`` holds ``k_i``, so qubit 1 is the most significant position bit.

The discrete Walsh function is ``w_jk = (-1)**sum_i(j_i k_i)``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "SampledFunction",
    "WalshSpectrum",
    "dyadic_bits",
    "walsh_function",
    "walsh_matrix",
    "forward_wht",
    "inverse_wht",
    "fwht_natural",
    "gray_code_sequence",
    "msb_position",
    "register_width",
    "read_function_csv",
    "write_function_csv",
    "read_spectrum_csv",
    "write_spectrum_csv",
]


def register_width(size: int) -> int:
    """Return ``n`` such that ``size == 2**n``; raise ValueError otherwise."""
    if size < 1 or size & (size - 1):
        raise ValueError(f"length must be a power of two, got {size}")
    return size.bit_length() - 1


def msb_position(j: int) -> int:
    """1-based position of the most significant set bit of ``j`` (0 for j=0)."""
    return int(j).bit_length()


@dataclass
class SampledFunction:
    """Real samples ``f_k`` on the grid ``x_k = x_min + k*length/2**n``."""

    values: np.ndarray
    x_min: float = 0.0
    length: float = 1.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(-1)
        register_width(self.values.size)
        if self.length <= 0:
            raise ValueError("domain length must be positive")

    @property
    def n(self) -> int:
        return register_width(self.values.size)

    @property
    def grid(self) -> np.ndarray:
        return self.x_min + np.arange(self.values.size) * (self.length / self.values.size)

    @classmethod
    def from_callable(cls, f: Callable[[np.ndarray], np.ndarray], n: int,
                      x_min: float = 0.0, length: float = 1.0) -> "SampledFunction":
        x = x_min + np.arange(2 ** n) * (length / 2 ** n)
        return cls(np.asarray(f(x), dtype=float), x_min, length)


@dataclass
class WalshSpectrum:
    """Dense Paley-ordered coefficient vector ``a_0 .. a_{2**n - 1}``."""

    coeffs: np.ndarray
    # domain of the function the spectrum came from; carried for round trips
    x_min: float = field(default=0.0, compare=False)
    length: float = field(default=1.0, compare=False)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float).reshape(-1)
        register_width(self.coeffs.size)

    @property
    def n(self) -> int:
        return register_width(self.coeffs.size)


def dyadic_bits(x: float, n: int) -> tuple[int, ...]:
    """First ``n`` bits ``(x_1, ..., x_n)`` of the finite dyadic expansion of x.

    Dyadic rationals take their terminating expansion, so 0.5 -> (1, 0, 0).
    Doubling a binary float is exact, which keeps the bits exact too.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0.0 <= x < 1.0:
        raise ValueError(f"x must lie in [0, 1), got {x!r}")
    bits = []
    for _ in range(n):
        x *= 2.0
        bit = int(x >= 1.0)
        bits.append(bit)
        x -= bit
    return tuple(bits)


def walsh_function(j: int, x: float) -> int:
    """Continuous Paley-ordered Walsh function ``w_j(x)`` on [0, 1)."""
    if j < 0:
        raise ValueError("Walsh index must be non-negative")
    if not 0.0 <= x < 1.0:
        raise ValueError(f"x must lie in [0, 1), got {x!r}")
    n = msb_position(j)
    if n == 0:
        return 1
    xb = dyadic_bits(x, n)
    exponent = sum(((j >> (i - 1)) & 1) * xb[i - 1] for i in range(1, n + 1))
    return -1 if exponent % 2 else 1


@lru_cache(maxsize=None)
def _bit_reversal(n: int) -> np.ndarray:
    idx = np.arange(2 ** n)
    rev = np.zeros_like(idx)
    for b in range(n):
        rev |= ((idx >> b) & 1) << (n - 1 - b)
    rev.flags.writeable = False
    return rev


def walsh_matrix(n: int) -> np.ndarray:
    """Integer ``(2**n, 2**n)`` matrix of ``w_jk``; rows are Paley indices."""
    rev = _bit_reversal(n)
    k = np.arange(2 ** n)
    parity = (np.bitwise_count(rev[:, None] & k[None, :]) & 1).astype(np.int64)
    return 1 - 2 * parity


def fwht_natural(values: np.ndarray) -> np.ndarray:
    """Unnormalized fast Walsh-Hadamard transform in natural (Hadamard) order.

    Butterfly stages run over reshaped views, so the summation order is fixed
    and results are deterministic.
    """
    out = np.array(values, dtype=float).reshape(-1)
    size = out.size
    register_width(size)
    h = 1
    while h < size:
        blocks = out.reshape(-1, 2, h)
        top = blocks[:, 0, :] + blocks[:, 1, :]
        bottom = blocks[:, 0, :] - blocks[:, 1, :]
        out = np.stack((top, bottom), axis=1).reshape(-1)
        h *= 2
    return out


def forward_wht(f: SampledFunction) -> WalshSpectrum:
    """``a_j = (1/N) sum_k f_k w_jk`` in Paley order, O(N log N)."""
    values = f.values if isinstance(f, SampledFunction) else np.asarray(f, dtype=float)
    n = register_width(values.size)
    natural = fwht_natural(values) / values.size
    # Hadamard row m = bitrev(j) pairs LSB-of-j with MSB-of-k
    coeffs = natural[_bit_reversal(n)]
    x_min = getattr(f, "x_min", 0.0)
    length = getattr(f, "length", 1.0)
    return WalshSpectrum(coeffs, x_min, length)


def inverse_wht(a: WalshSpectrum) -> SampledFunction:
    """``f_k = sum_j a_j w_jk``; exact inverse of :func:`forward_wht`."""
    coeffs = a.coeffs if isinstance(a, WalshSpectrum) else np.asarray(a, dtype=float)
    n = register_width(coeffs.size)
    natural = np.empty_like(coeffs)
    natural[_bit_reversal(n)] = coeffs
    x_min = getattr(a, "x_min", 0.0)
    length = getattr(a, "length", 1.0)
    return SampledFunction(fwht_natural(natural), x_min, length)


def gray_code_sequence(n: int) -> list[int]:
    """Reflected binary Gray code over n bits, all-zeros string dropped.

    >>> gray_code_sequence(3)
    [1, 3, 2, 6, 7, 5, 4]
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    return [s ^ (s >> 1) for s in range(1, 2 ** n)]


# -- CSV --------------------------------------------------------------------

def _fmt(v: float) -> str:
    return repr(float(v))


def write_function_csv(f: SampledFunction, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "x_k", "f_k"])
        for k, (x, v) in enumerate(zip(f.grid, f.values)):
            w.writerow([k, _fmt(x), _fmt(v)])


def _read_rows(path: str | Path, columns: Sequence[str]) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in columns if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"{path}: missing CSV columns {missing}")
        return list(reader)


def read_function_csv(path: str | Path) -> SampledFunction:
    rows = _read_rows(path, ("k", "x_k", "f_k"))
    rows.sort(key=lambda r: int(r["k"]))
    if [int(r["k"]) for r in rows] != list(range(len(rows))):
        raise ValueError(f"{path}: grid indices must run 0..N-1")
    values = np.array([float(r["f_k"]) for r in rows])
    register_width(values.size)
    xs = [float(r["x_k"]) for r in rows]
    x_min = xs[0] if xs else 0.0
    length = (xs[1] - xs[0]) * len(xs) if len(xs) > 1 else 1.0
    return SampledFunction(values, x_min, length)


def write_spectrum_csv(a: WalshSpectrum, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["j", "a_j"])
        for j, c in enumerate(a.coeffs):
            w.writerow([j, _fmt(c)])


def read_spectrum_csv(path: str | Path) -> WalshSpectrum:
    rows = _read_rows(path, ("j", "a_j"))
    size = max((int(r["j"]) for r in rows), default=-1) + 1
    register_width(len(rows))
    coeffs = np.zeros(size)
    for r in rows:
        coeffs[int(r["j"])] = float(r["a_j"])
    return WalshSpectrum(coeffs)
