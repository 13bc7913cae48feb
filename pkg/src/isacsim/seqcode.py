"""Golay complementary pairs and per-subcarrier phase coding.

A Golay complementary pair (a, b) consists of two +/-1 sequences whose
aperiodic autocorrelations sum to a delta: AC_a[u] + AC_b[u] is 2*len at
u = 0 and exactly 0 at every other lag. Sequence ``a`` is used as the chip
sequence that multiplies the data symbols, one chip per data subcarrier,
constant over OFDM symbols within a frame. Sequence ``b`` is kept only so
the complementarity property can be checked.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError, StateError


@dataclass(frozen=True)
class GolayPair:
    """Complementary pair of +/-1 chip sequences of length 2**k."""

    a: np.ndarray
    b: np.ndarray

    def __len__(self) -> int:
        return len(self.a)


@dataclass
class CodedGrid:
    """Data symbol block after phase coding, plus the chips that coded it."""

    symbols: np.ndarray
    code: np.ndarray | None


def generate_golay(k: int) -> GolayPair:
    """Generate a Golay complementary pair of length 2**k.

    Uses the recursive doubling construction from the length-2 seed
    a=(+1,+1), b=(+1,-1):

        a' = a | b,   b' = a | -b

    Parameters
    ----------
    k : int
        Doubling order, 1 <= k <= 16; the pair has length 2**k.

    Returns
    -------
    GolayPair
        Integer-valued (+/-1) complementary pair.
    """
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool):
        raise ParameterError(f"k must be an integer, got {k!r}")
    if not 1 <= k <= 16:
        raise ParameterError(f"k must be in [1, 16], got {k}")
    a = np.array([1, 1], dtype=np.int64)
    b = np.array([1, -1], dtype=np.int64)
    for _ in range(k - 1):
        a, b = np.concatenate([a, b]), np.concatenate([a, -b])
    return GolayPair(a=a, b=b)


def aperiodic_autocorr(x: np.ndarray) -> np.ndarray:
    """Aperiodic autocorrelation AC[u] = sum_i x[i] conj(x[i+u]) for u = -(L-1)..L-1."""
    x = np.asarray(x)
    if x.ndim != 1 or x.size == 0:
        raise ParameterError("autocorrelation input must be a non-empty 1-D sequence")
    return np.correlate(x, x.conj(), mode="full")[::-1]


def complementary_autocorr_sum(pair: GolayPair) -> np.ndarray:
    """AC_a + AC_b over lags -(L-1)..L-1; a delta of height 2L for a true pair."""
    return aperiodic_autocorr(pair.a) + aperiodic_autocorr(pair.b)


def is_complementary(pair: GolayPair) -> bool:
    """Exact integer check of the complementarity invariant."""
    s = complementary_autocorr_sum(pair)
    mid = len(pair) - 1
    if s[mid] != 2 * len(pair):
        return False
    off = np.delete(s, mid)
    return bool(np.all(off == 0))


def phase_code(data: np.ndarray, pair: GolayPair) -> CodedGrid:
    """Multiply each data row by its chip: d'[n, m] = d[n, m] * a[n].

    The chip sequence runs across subcarriers (rows) and is constant over
    symbols (columns). Per-symbol power is preserved exactly because the
    chips have unit modulus.
    """
    data = np.asarray(data, dtype=np.complex128)
    if data.ndim != 2:
        raise DimensionError("data block must be 2-D (subcarriers x symbols)")
    if data.shape[0] != len(pair):
        raise DimensionError(
            f"chip length {len(pair)} != number of data subcarriers {data.shape[0]}"
        )
    chips = pair.a.astype(np.complex128)
    return CodedGrid(symbols=data * chips[:, None], code=chips.copy())


def phase_decode(coded: CodedGrid) -> np.ndarray:
    """Undo phase coding by multiplying with the conjugate chips (exact inverse)."""
    if coded.code is None:
        raise StateError("coded grid carries no chip reference")
    code = np.asarray(coded.code, dtype=np.complex128)
    if coded.symbols.shape[0] != code.shape[0]:
        raise DimensionError("chip reference does not match the coded block")
    return coded.symbols * code.conj()[:, None]
