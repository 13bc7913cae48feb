"""Narrowband ambiguity surface and sidelobe metrics.

AF(tau, f) = | sum_i s[i] s*[i + tau/T_b] e^{j 2 pi f i T_b} |, evaluated on
caller-supplied delay/Doppler grids and normalized to a unit peak. Delay
shifts beyond the signal support produce zero rows rather than errors.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, ParameterError
from .waveform import SampleStream

DB_FLOOR = -60.0


@dataclass
class AmbiguitySurface:
    """Normalized |AF| magnitudes on a delay x Doppler grid."""

    magnitudes: np.ndarray
    delays_s: np.ndarray
    dopplers_hz: np.ndarray

    @property
    def delay_step_s(self) -> float:
        return float(self.delays_s[1] - self.delays_s[0]) if len(self.delays_s) > 1 else 0.0

    @property
    def doppler_step_hz(self) -> float:
        return float(self.dopplers_hz[1] - self.dopplers_hz[0]) if len(self.dopplers_hz) > 1 else 0.0


def default_delay_grid(stream: SampleStream, max_delay_s: float | None = None) -> np.ndarray:
    """Symmetric delay grid in steps of T_b, spanning one symbol body by default."""
    if max_delay_s is None:
        span = (stream.body_len - 1) if stream.body_len > 1 else (len(stream) - 1)
    else:
        span = int(round(max_delay_s / stream.t_b))
    span = max(span, 1)
    return np.arange(-span, span + 1) * stream.t_b


def default_doppler_grid(stream: SampleStream, max_doppler_hz: float | None = None) -> np.ndarray:
    """Symmetric Doppler grid in steps of 1/(2 * frame duration)."""
    duration = len(stream) * stream.t_b
    step = 1.0 / (2.0 * duration)
    if max_doppler_hz is None:
        max_doppler_hz = 20.0 * step
    n = max(int(round(max_doppler_hz / step)), 1)
    return np.arange(-n, n + 1) * step


def _check_symmetric(grid: np.ndarray, name: str):
    if len(grid) < 1:
        raise ParameterError(f"{name} grid is empty")
    if not np.allclose(grid, -grid[::-1], atol=1e-12 * max(1.0, np.abs(grid).max())):
        raise ParameterError(f"{name} grid must be symmetric about zero")


def ambiguity(stream: SampleStream, delays_s: np.ndarray, dopplers_hz: np.ndarray) -> AmbiguitySurface:
    """Evaluate the narrowband AF of the stream on the given grids.

    Delays are realized as integer sample shifts (each grid value is rounded
    to the nearest multiple of T_b).
    """
    delays_s = np.asarray(delays_s, dtype=float)
    dopplers_hz = np.asarray(dopplers_hz, dtype=float)
    _check_symmetric(delays_s, "delay")
    _check_symmetric(dopplers_hz, "doppler")
    s = stream.samples
    n = len(s)
    if n == 0 or not np.any(np.abs(s) > 0):
        raise DegenerateInputError("stream carries no energy")
    t_i = np.arange(n) * stream.t_b
    kernel = np.exp(2j * np.pi * np.outer(t_i, dopplers_hz))
    mag = np.zeros((len(delays_s), len(dopplers_hz)))
    for row, tau in enumerate(delays_s):
        d = int(round(tau / stream.t_b))
        if abs(d) >= n:
            continue
        if d >= 0:
            prod = s[: n - d] * s[d:].conj()
            seg = kernel[: n - d, :]
        else:
            prod = s[-d:] * s[: n + d].conj()
            seg = kernel[-d:, :]
        mag[row, :] = np.abs(prod @ seg)
    peak = mag.max()
    if peak <= 0:
        raise DegenerateInputError("ambiguity surface is identically zero")
    return AmbiguitySurface(magnitudes=mag / peak, delays_s=delays_s, dopplers_hz=dopplers_hz)


def zero_doppler_cut(surface: AmbiguitySurface) -> tuple[np.ndarray, np.ndarray]:
    """Delay axis and |AF| values along the Doppler bin nearest zero."""
    col = int(np.argmin(np.abs(surface.dopplers_hz)))
    return surface.delays_s, surface.magnitudes[:, col]


def cut_peak_sidelobe_db(surface: AmbiguitySurface, exclude: int = 1) -> float:
    """Peak sidelobe of the zero-Doppler cut, in dB, outside +/-exclude cells."""
    delays, cut = zero_doppler_cut(surface)
    peak = int(np.argmax(cut))
    mask = np.abs(np.arange(len(cut)) - peak) > exclude
    if not np.any(mask):
        raise ParameterError("exclusion window covers the whole cut")
    side = float(cut[mask].max())
    return 20.0 * np.log10(side) if side > 0 else float("-inf")


def sidelobe_metrics(surface: AmbiguitySurface) -> tuple[float, float]:
    """(peak sidelobe dB outside the 3x3 mainlobe block, zero-Doppler decay slope).

    The slope is the least-squares fit of |AF| against delay over the
    non-negative half of the zero-Doppler cut (units 1/s); for a rectangular
    pulse it approaches -1/duration, the triangular autocorrelation.
    """
    mag = surface.magnitudes
    if not np.any(mag > 0):
        raise DegenerateInputError("surface is identically zero")
    pd, pf = np.unravel_index(int(np.argmax(mag)), mag.shape)
    masked = mag.copy()
    d0, d1 = max(pd - 1, 0), min(pd + 2, mag.shape[0])
    f0, f1 = max(pf - 1, 0), min(pf + 2, mag.shape[1])
    masked[d0:d1, f0:f1] = 0.0
    side = float(masked.max())
    peak_sidelobe_db = 20.0 * np.log10(side) if side > 0 else float("-inf")

    delays, cut = zero_doppler_cut(surface)
    sel = delays >= 0
    slope = float(np.polyfit(delays[sel], cut[sel], 1)[0])
    return peak_sidelobe_db, slope


def surface_to_csv(surface: AmbiguitySurface) -> str:
    """Flatten the surface to 'delay_s,doppler_hz,magnitude' CSV text."""
    lines = ["delay_s,doppler_hz,magnitude"]
    for i, tau in enumerate(surface.delays_s):
        for j, f in enumerate(surface.dopplers_hz):
            lines.append(f"{tau!r},{f!r},{surface.magnitudes[i, j]!r}")
    return "\n".join(lines) + "\n"
