"""Multi-target echo generation in symbol and sample domains.

The symbol-domain path is the in-CP short-range model: each target
contributes a per-subcarrier delay phase ramp and a per-symbol Doppler phase
ramp, with Doppler held constant within a symbol. The sample-domain path
delays and rotates the synthesized waveform itself and therefore also covers
delays beyond the cyclic prefix (the long-range regime).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import SPEED_OF_LIGHT
from .errors import ModelViolationError, ParameterError
from .waveform import SampleStream, SymbolGrid, WaveformConfig


@dataclass(frozen=True)
class Target:
    """Point target: range (m), radial velocity (m/s), complex gain."""

    range_m: float
    velocity: float
    gain: complex = 1.0 + 0.0j

    def __post_init__(self):
        if self.range_m < 0:
            raise ParameterError("target range must be >= 0")

    @property
    def delay_s(self) -> float:
        return 2.0 * self.range_m / SPEED_OF_LIGHT

    def doppler_hz(self, f_c: float) -> float:
        return 2.0 * self.velocity * f_c / SPEED_OF_LIGHT


@dataclass(frozen=True)
class NoiseSpec:
    """AWGN at a given echo SNR; a fixed seed gives bit-identical noise."""

    snr_db: float
    seed: int


def _awgn_like(x: np.ndarray, snr_db: float, seed: int) -> np.ndarray:
    """Complex white noise sized so mean(|x|^2)/noise_power = 10^(snr_db/10)."""
    p_sig = float(np.mean(np.abs(x) ** 2))
    sigma2 = p_sig / (10.0 ** (snr_db / 10.0))
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(x.shape) + 1j * rng.standard_normal(x.shape)
    return np.sqrt(sigma2 / 2.0) * w


def echo_symbol_domain(
    grid: SymbolGrid,
    cfg: WaveformConfig,
    targets: list[Target],
    noise: NoiseSpec | None = None,
) -> SymbolGrid:
    """Received symbol grid for targets whose delay stays within the CP.

    Re[n, m] = sum_t h_t d[n, m] exp(-j 2 pi n df tau_t) exp(j 2 pi m T_sym fd_t) + w
    """
    cp_duration = cfg.cp_len * cfg.t_b
    for t in targets:
        if t.delay_s > 0 and t.delay_s >= cp_duration:
            raise ModelViolationError(
                f"target delay {t.delay_s:.3e} s >= CP duration {cp_duration:.3e} s; "
                "use the sample-domain path for beyond-CP ranges"
            )
    n_idx = np.arange(cfg.n_sc)[:, None]
    m_idx = np.arange(cfg.n_sym)[None, :]
    rx = np.zeros_like(grid.entries)
    for t in targets:
        ramp = np.exp(-2j * np.pi * n_idx * cfg.delta_f * t.delay_s) * np.exp(
            2j * np.pi * m_idx * cfg.t_sym * t.doppler_hz(cfg.f_c)
        )
        rx += t.gain * grid.entries * ramp
    if noise is not None:
        active = grid.active_mask
        w = _awgn_like(rx[active], noise.snr_db, noise.seed)
        rx = rx.copy()
        rx[active] += w
    return SymbolGrid(entries=rx, pilot_mask=grid.pilot_mask.copy(), data_mask=grid.data_mask.copy())


def _delayed(samples: np.ndarray, delay_samples: float, interp: str) -> np.ndarray:
    if delay_samples >= len(samples):
        raise ParameterError(
            f"delay of {delay_samples:.1f} samples exceeds stream length {len(samples)}"
        )
    if interp == "nearest":
        d = int(round(delay_samples))
        out = np.zeros_like(samples)
        if d < len(samples):
            out[d:] = samples[: len(samples) - d]
        return out
    if interp == "sinc":
        # Band-limited fractional delay on a 2x zero-padded copy; the padding
        # keeps the circular wrap of the FFT shift out of the frame.
        n = len(samples)
        padded = np.concatenate([samples, np.zeros(n, dtype=samples.dtype)])
        freqs = np.fft.fftfreq(2 * n)
        shifted = np.fft.ifft(np.fft.fft(padded) * np.exp(-2j * np.pi * freqs * delay_samples))
        return shifted[:n]
    raise ParameterError(f"unknown interpolation {interp!r}")


def echo_sample_domain(
    stream: SampleStream,
    cfg: WaveformConfig,
    targets: list[Target],
    noise: NoiseSpec | None = None,
    interp: str = "nearest",
) -> SampleStream:
    """Received sample stream r[i] = sum_t h_t s(i - tau_t/T_b) e^{j2 pi fd_t t_i} + w.

    Delays are realized as nearest-sample shifts by default ("nearest"), or
    with a band-limited interpolator ("sinc"). Doppler rotates every sample.
    """
    i = np.arange(len(stream))
    t_i = stream.t0 + i * stream.t_b
    rx = np.zeros_like(stream.samples)
    for t in targets:
        d = t.delay_s / stream.t_b
        echo = _delayed(stream.samples, d, interp)
        rx += t.gain * echo * np.exp(2j * np.pi * t.doppler_hz(cfg.f_c) * t_i)
    if noise is not None:
        rx = rx + _awgn_like(rx, noise.snr_db, noise.seed)
    return SampleStream(
        samples=rx,
        t_b=stream.t_b,
        t0=stream.t0,
        n_symbols=stream.n_symbols,
        body_len=stream.body_len,
        cp_len=stream.cp_len,
    )
