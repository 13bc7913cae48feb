"""Long-range estimation: grouped cyclic cross-correlation with a virtual CP.

The CP-stripped transmit and receive sample streams are cut into M groups of
N samples. A virtual cyclic prefix of length Q is applied on the receive
side: the last Q samples of each group are added onto its first Q samples,
which restores enough circular structure for a cyclic correlation to peak at
the echo's sample delay even when that delay exceeds the frame's real CP.

Range comes from the lag that maximizes the non-coherently aggregated
per-group correlation magnitude. Velocity comes from a DFT across the groups
of the correlation values at that lag (the maximum-likelihood search over
Doppler reduces to this peak search); the iterative variant re-centres a zoom
DFT inside the winning Doppler bin, shrinking the velocity step by a factor
M per iteration with the same half-bin back-off convention as the short-range
refinement.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import SPEED_OF_LIGHT
from .errors import (
    DegenerateInputError,
    DimensionError,
    InsufficientGroupsError,
    NumericLimitError,
    ParameterError,
)
from .waveform import SampleStream

_ZOOM_FLOOR = 1e-15


@dataclass
class GroupedSamples:
    """M x N sample groups, with the VCP length applied on the receive side."""

    groups: np.ndarray
    q_vcp: int
    t_b: float

    @property
    def n_groups(self) -> int:
        return self.groups.shape[0]

    @property
    def group_len(self) -> int:
        return self.groups.shape[1]


@dataclass
class CorrProfile:
    """Per-group cyclic cross-correlation rho[m, p] and the aggregated peak lag."""

    rho: np.ndarray
    p0: int
    t_b: float

    @property
    def aggregated(self) -> np.ndarray:
        return np.abs(self.rho).sum(axis=0)


def group_with_vcp(
    tx: SampleStream, rx: SampleStream, group_len: int, q_vcp: int
) -> tuple[GroupedSamples, GroupedSamples]:
    """Partition both CP-stripped streams into groups; overlap-add the rx VCP.

    Only whole groups are kept (trailing samples dropped). On the receive
    side, group[i] for i < q_vcp becomes group[i] + group[group_len-q_vcp+i].
    """
    if group_len <= q_vcp:
        raise ParameterError(f"group length {group_len} must exceed VCP length {q_vcp}")
    if q_vcp < 0:
        raise ParameterError("VCP length must be >= 0")
    n = min(len(tx), len(rx))
    m = n // group_len
    if m < 1:
        raise ParameterError(f"streams too short for even one group of {group_len}")
    tx_g = tx.samples[: m * group_len].reshape(m, group_len).copy()
    rx_g = rx.samples[: m * group_len].reshape(m, group_len).copy()
    if q_vcp > 0:
        rx_g[:, :q_vcp] += rx_g[:, group_len - q_vcp :]
    return (
        GroupedSamples(groups=tx_g, q_vcp=q_vcp, t_b=tx.t_b),
        GroupedSamples(groups=rx_g, q_vcp=q_vcp, t_b=rx.t_b),
    )


def cyclic_xcorr(rx_groups: np.ndarray, tx_groups: np.ndarray) -> np.ndarray:
    """rho[m, p] = sum_i rx[m, i] conj(tx[m, (i - p) mod N]), via the FFT."""
    return np.fft.ifft(np.fft.fft(rx_groups, axis=1) * np.fft.fft(tx_groups, axis=1).conj(), axis=1)


def range_bin_m(t_b: float) -> float:
    """Range quantization step c*T_b/2 of the correlation lag grid."""
    return SPEED_OF_LIGHT * t_b / 2.0


def velocity_bin_mps(t_b: float, f_c: float, n_groups: int, group_len: int, n_iterations: int = 1) -> float:
    """Velocity quantization step after the given number of iterations."""
    return SPEED_OF_LIGHT / (2.0 * f_c * group_len * t_b * float(n_groups) ** n_iterations)


def cc_range(tx_g: GroupedSamples, rx_g: GroupedSamples) -> tuple[int, float, CorrProfile]:
    """Peak lag of the aggregated cyclic correlation and the implied range.

    Returns (p0, range_m, profile) with range = c * T_b * p0 / 2.
    """
    if tx_g.groups.shape != rx_g.groups.shape:
        raise DimensionError(
            f"group shapes differ: {tx_g.groups.shape} vs {rx_g.groups.shape}"
        )
    if np.any(np.all(tx_g.groups == 0, axis=1)):
        raise DegenerateInputError("an all-zero transmit group cannot be correlated")
    rho = cyclic_xcorr(rx_g.groups, tx_g.groups)
    agg = np.abs(rho).sum(axis=0)
    p0 = int(np.argmax(agg))
    return p0, range_bin_m(tx_g.t_b) * p0, CorrProfile(rho=rho, p0=p0, t_b=tx_g.t_b)


def range_peaks(profile: CorrProfile, n_targets: int, min_sep: int = 1) -> list[int]:
    """Greedy lag peaks on the aggregated correlation with cyclic bin exclusion."""
    agg = profile.aggregated.copy()
    if n_targets * (2 * min_sep + 1) > agg.size:
        raise ParameterError(f"cannot separate {n_targets} peaks on {agg.size} lags")
    out = []
    for _ in range(n_targets):
        p = int(np.argmax(agg))
        out.append(p)
        agg[np.arange(p - min_sep, p + min_sep + 1) % agg.size] = -np.inf
    return out


def _doppler_vector(profile: CorrProfile, p0: int) -> np.ndarray:
    if not 0 <= p0 < profile.rho.shape[1]:
        raise ParameterError(f"lag {p0} outside 0..{profile.rho.shape[1] - 1}")
    return profile.rho[:, p0]


def cc_velocity(profile: CorrProfile, p0: int, f_c: float) -> tuple[int, float]:
    """Doppler bin from the across-group DFT of rho(p0) and the implied velocity.

    l0 = argmax_l |sum_m rho_m(p0) e^{-j 2 pi m l / M}|; V = c l0 / (2 f_c T_b M N).
    """
    a = _doppler_vector(profile, p0)
    m_groups = a.size
    if m_groups < 2:
        raise InsufficientGroupsError("velocity estimation needs at least 2 groups")
    l0 = int(np.argmax(np.abs(np.fft.fft(a))))
    n = profile.rho.shape[1]
    v = SPEED_OF_LIGHT * l0 / (2.0 * f_c * profile.t_b * m_groups * n)
    return l0, v


def cc_velocity_iterative(
    profile: CorrProfile, p0: int, n_iterations: int, f_c: float
) -> tuple[float, list[int]]:
    """Iterative velocity refinement on the across-group correlation vector.

    Iteration 0 backs off the coarse Doppler bin by half, later iterations
    compensate the accumulated normalized Doppler out of the vector and take
    the peak of a zoom DFT at frequencies l / (M^(x+1) N); the final iteration
    keeps its raw index. With one iteration this reduces to cc_velocity.
    """
    X = n_iterations
    if X < 1:
        raise ParameterError("iteration count must be >= 1")
    a = _doppler_vector(profile, p0)
    m_groups = a.size
    if m_groups < 2:
        raise InsufficientGroupsError("velocity estimation needs at least 2 groups")
    n = profile.rho.shape[1]
    if float(m_groups) ** -X < _ZOOM_FLOOR:
        raise NumericLimitError(f"zoom bin below {_ZOOM_FLOOR:g} of the coarse bin at X={X}")

    m_idx = np.arange(m_groups)
    indices: list[int] = []
    ups = 0.0  # accumulated normalized Doppler estimate (f_d * T_b)
    for x in range(X):
        denom = float(m_groups) ** (x + 1) * n
        if x == 0:
            spec = np.abs(np.fft.fft(a))
        else:
            comp = a * np.exp(-2j * np.pi * ups * m_idx * n)
            spec = np.abs(comp @ np.exp(-2j * np.pi * np.outer(m_idx, np.arange(m_groups)) / (float(m_groups) ** (x + 1))))
        l_x = int(np.argmax(spec))
        indices.append(l_x)
        ups += (l_x - (0.5 if x < X - 1 else 0.0)) / denom
    v = SPEED_OF_LIGHT * ups / (2.0 * f_c * profile.t_b)
    return v, indices
