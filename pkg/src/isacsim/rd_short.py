"""Short-range range/velocity estimation from the channel information matrix.

The channel information matrix Y is the element-wise ratio of received to
transmitted symbols. For a single target it is a 2-D complex exponential:
a delay ramp exp(-j 2 pi n df tau) across subcarriers and a Doppler ramp
exp(j 2 pi m T_sym fd) across symbols. The plain method locates the ramp
frequencies on the coarse DFT grids; the iterative method then re-centres a
zoom transform inside the winning bin, shrinking the quantization step by a
factor N_d (range) or M_p+M_d (velocity) per iteration.

Per-iteration index convention: every iteration except the last backs off by
half a bin, so the residual left for the next zoom stays inside the one-sided
zoom window; the last iteration keeps its raw peak index.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.signal import CZT

from .constants import SPEED_OF_LIGHT
from .errors import (
    ConfigurationError,
    DimensionError,
    NumericLimitError,
    ParameterError,
)
from .waveform import SymbolGrid, WaveformConfig

_ZOOM_FLOOR = 1e-15


@dataclass
class ChannelInfoMatrix:
    """Element-wise rx/tx symbol ratio with its waveform configuration."""

    y: np.ndarray
    cfg: WaveformConfig


@dataclass
class SensingEstimate:
    """Per-target (range, velocity) estimates plus refinement bookkeeping.

    ``iterations[t][i]`` holds the integer peak pair (k_i, l_i) found at
    iteration i for target t. ``bin_sizes`` is the (range, velocity)
    quantization step after the configured number of iterations.
    """

    targets: list[tuple[float, float]]
    iterations: list[list[tuple[int, int]]]
    n_iterations: int
    bin_sizes: tuple[float, float]


def build_y(tx: SymbolGrid, rx: SymbolGrid, cfg: WaveformConfig) -> ChannelInfoMatrix:
    """Divide received by transmitted symbols element-wise on the active cells."""
    if tx.shape != rx.shape:
        raise DimensionError(f"tx shape {tx.shape} != rx shape {rx.shape}")
    active = tx.active_mask
    mags = np.abs(tx.entries[active])
    if mags.size and not np.allclose(mags, 1.0, atol=1e-9):
        raise ParameterError("transmitted symbols must be unit-modulus")
    y = np.zeros_like(tx.entries)
    y[active] = rx.entries[active] / tx.entries[active]
    return ChannelInfoMatrix(y=y, cfg=cfg)


def _common_rows(cfg: WaveformConfig) -> int:
    """Subcarrier rows active in every OFDM symbol of the frame."""
    widths = []
    if cfg.n_pilot_sym > 0:
        widths.append(cfg.n_pilot_sc)
    if cfg.n_data_sym > 0:
        widths.append(cfg.n_data_sc)
    return min(widths) if widths else 0


def range_profile(cim: ChannelInfoMatrix) -> np.ndarray:
    """Per-column IDFT over the pilot band, magnitudes summed over symbols."""
    cfg = cim.cfg
    if cfg.n_pilot_sc < 1:
        raise ConfigurationError("range estimation needs a non-empty pilot band")
    spectra = np.fft.ifft(cim.y[: cfg.n_pilot_sc, :], axis=0)
    return np.abs(spectra).sum(axis=1)


def velocity_profile(cim: ChannelInfoMatrix) -> np.ndarray:
    """Per-row DFT over symbols, magnitudes summed over the common rows."""
    rows = _common_rows(cim.cfg)
    if rows < 1:
        raise ConfigurationError("velocity estimation needs at least one active row")
    spectra = np.fft.fft(cim.y[:rows, :], axis=1)
    return np.abs(spectra).sum(axis=0)


def _greedy_peaks(profile: np.ndarray, n_peaks: int, min_sep: int = 1) -> list[int]:
    """Global argmax, then next maxima with +/-min_sep cyclic bin exclusion."""
    if n_peaks * (2 * min_sep + 1) > len(profile):
        raise ParameterError(
            f"cannot separate {n_peaks} peaks on a {len(profile)}-bin axis"
        )
    work = profile.astype(float).copy()
    peaks = []
    for _ in range(n_peaks):
        k = int(np.argmax(work))
        peaks.append(k)
        block = (np.arange(k - min_sep, k + min_sep + 1)) % len(work)
        work[block] = -np.inf
    return peaks


@lru_cache(maxsize=64)
def _zoom_transform(n: int, denom_bins: float, sign: int) -> CZT:
    # Bluestein setup is costly relative to the transform itself; reuse it.
    return CZT(n, m=n, w=np.exp(sign * 2j * np.pi / denom_bins), a=1.0 + 0.0j)


def _zoom_spectrum(v: np.ndarray, denom_bins: float, sign: int) -> np.ndarray:
    """len(v)-point transform sum_n v[n] exp(sign * j 2 pi n k / denom_bins)."""
    return _zoom_transform(len(v), float(denom_bins), sign)(v)


def range_bin_m(cfg: WaveformConfig, n_iterations: int = 1) -> float:
    """Range quantization step after the given number of iterations."""
    return SPEED_OF_LIGHT / (2.0 * cfg.delta_f) / (cfg.n_pilot_sc * cfg.n_data_sc ** (n_iterations - 1))


def velocity_bin_mps(cfg: WaveformConfig, n_iterations: int = 1) -> float:
    """Velocity quantization step after the given number of iterations."""
    return SPEED_OF_LIGHT / (2.0 * cfg.f_c * cfg.t_sym * cfg.n_sym**n_iterations)


def estimate_2dfft(cim: ChannelInfoMatrix, n_targets: int = 1) -> SensingEstimate:
    """Plain 2D FFT estimate: coarse peak bins mapped straight to range/velocity.

    Range is read off the pilot-band IDFT (R = c k1 / (2 N_p df)); velocity off
    the symbol-axis DFT (V = c l1 / (2 f_c T_sym (M_p+M_d))).
    """
    return estimate_iterative_2dfft(cim, 1, n_targets=n_targets)


def estimate_iterative_2dfft(
    cim: ChannelInfoMatrix,
    n_iterations: int,
    n_targets: int = 1,
    average_spectra: bool = False,
) -> SensingEstimate:
    """Iterative 2D FFT estimate with per-iteration zoom refinement.

    Iteration 1 is the plain coarse search. Each later iteration i compensates
    the accumulated delay (Doppler) phase out of a designated column (row) of
    Y and evaluates a zoom transform on a grid N_d (respectively M) times
    finer than the previous one; the peak index feeds the next compensation.
    By default the designated vector is the first data-symbol column for range
    and subcarrier row 0 for velocity; with ``average_spectra`` the zoom
    magnitudes are averaged over all data columns / common rows instead.

    Raises
    ------
    NumericLimitError
        If the requested iteration count pushes the zoom bin below 1e-15 of
        the coarse bin.
    """
    cfg = cim.cfg
    X = n_iterations
    if X < 1:
        raise ParameterError("iteration count must be >= 1")
    if n_targets < 1:
        raise ParameterError("n_targets must be >= 1")
    if X > 1:
        if cfg.n_data_sc < 1 or cfg.n_data_sym < 1:
            raise ConfigurationError("iterative range refinement needs a data band")
        if float(cfg.n_data_sc) ** -(X - 1) < _ZOOM_FLOOR or float(cfg.n_sym) ** -X < _ZOOM_FLOOR:
            raise NumericLimitError(
                f"zoom bin below {_ZOOM_FLOOR:g} of the coarse bin at X={X}"
            )

    m_total = cfg.n_sym
    p_range = range_profile(cim)
    p_vel = velocity_profile(cim)
    range_peaks = _greedy_peaks(p_range, n_targets)
    vel_peaks = _greedy_peaks(p_vel, n_targets)

    ref_col = cfg.n_pilot_sym if cfg.n_data_sym > 0 else 0
    data_cols = np.arange(ref_col, m_total) if cfg.n_data_sym > 0 else np.array([0])
    common = max(_common_rows(cfg), 1)

    targets: list[tuple[float, float]] = []
    iterations: list[list[tuple[int, int]]] = []
    for k1, l1 in zip(range_peaks, vel_peaks):
        idx_log = [(k1, l1)]

        # Delay chain: tau_i = (k_i - 1/2) / (df N_p N_d^(i-1)), no back-off at i = X.
        tau = (k1 - (0.5 if X > 1 else 0.0)) / (cfg.delta_f * cfg.n_pilot_sc)
        fd = (l1 - (0.5 if X > 1 else 0.0)) / (cfg.t_sym * m_total)
        for i in range(2, X + 1):
            r_denom = cfg.n_pilot_sc * float(cfg.n_data_sc) ** (i - 1)
            n_idx = np.arange(cfg.n_data_sc)
            comp = np.exp(2j * np.pi * n_idx * cfg.delta_f * tau)
            if average_spectra:
                mag = np.zeros(cfg.n_data_sc)
                for col in data_cols:
                    mag += np.abs(_zoom_spectrum(cim.y[: cfg.n_data_sc, col] * comp, r_denom, +1))
            else:
                mag = np.abs(_zoom_spectrum(cim.y[: cfg.n_data_sc, ref_col] * comp, r_denom, +1))
            k_i = int(np.argmax(mag))
            tau += (k_i - (0.5 if i < X else 0.0)) / (cfg.delta_f * r_denom)

            v_denom = float(m_total) ** i
            m_idx = np.arange(m_total)
            comp_v = np.exp(-2j * np.pi * m_idx * cfg.t_sym * fd)
            if average_spectra:
                mag_v = np.zeros(m_total)
                for row in range(common):
                    mag_v += np.abs(_zoom_spectrum(cim.y[row, :] * comp_v, v_denom, -1))
            else:
                mag_v = np.abs(_zoom_spectrum(cim.y[0, :] * comp_v, v_denom, -1))
            l_i = int(np.argmax(mag_v))
            fd += (l_i - (0.5 if i < X else 0.0)) / (cfg.t_sym * v_denom)

            idx_log.append((k_i, l_i))

        targets.append((SPEED_OF_LIGHT * tau / 2.0, SPEED_OF_LIGHT * fd / (2.0 * cfg.f_c)))
        iterations.append(idx_log)

    return SensingEstimate(
        targets=targets,
        iterations=iterations,
        n_iterations=X,
        bin_sizes=(range_bin_m(cfg, X), velocity_bin_mps(cfg, X)),
    )
