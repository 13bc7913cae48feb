import numpy as np
import pytest

from isacsim.af import (
    AmbiguitySurface,
    ambiguity,
    cut_peak_sidelobe_db,
    default_delay_grid,
    default_doppler_grid,
    sidelobe_metrics,
    surface_to_csv,
    zero_doppler_cut,
)
from isacsim.errors import DegenerateInputError, ParameterError
from isacsim.seqcode import generate_golay
from isacsim.waveform import SampleStream, WaveformConfig, build_frame, synthesize


def af_cfg():
    return WaveformConfig(
        delta_f=15e3, f_c=24e9, n_sc=32, n_pilot_sc=32, n_pilot_sym=0,
        n_data_sc=32, n_data_sym=10, body_len=32, cp_len=0,
    )


def coded_stream():
    cfg = af_cfg()
    grid = build_frame(cfg, 0, np.zeros(320, dtype=int), coding=generate_golay(5), constellation="bpsk")
    return synthesize(grid, cfg), cfg


def random_stream(seed):
    cfg = af_cfg()
    rng = np.random.default_rng(seed)
    grid = build_frame(cfg, 0, rng.integers(0, 2, 640))
    return synthesize(grid, cfg)


def small_surface(stream):
    delays = default_delay_grid(stream)
    dopplers = default_doppler_grid(stream)
    return ambiguity(stream, delays, dopplers)


def direct_af_oracle(samples, t_b, delays_s, dopplers_hz):
    """Independent double-sum evaluation of |AF|."""
    n = len(samples)
    out = np.zeros((len(delays_s), len(dopplers_hz)))
    for a, tau in enumerate(delays_s):
        d = int(round(tau / t_b))
        for b, f in enumerate(dopplers_hz):
            acc = 0.0 + 0.0j
            for i in range(n):
                j = i + d
                if 0 <= j < n:
                    acc += samples[i] * np.conj(samples[j]) * np.exp(2j * np.pi * f * i * t_b)
            out[a, b] = abs(acc)
    return out


def test_zero_offset_cell_is_one():
    stream, _ = coded_stream()
    surf = small_surface(stream)
    d0 = np.argmin(np.abs(surf.delays_s))
    f0 = np.argmin(np.abs(surf.dopplers_hz))
    assert surf.magnitudes[d0, f0] == pytest.approx(1.0, abs=1e-12)
    assert surf.magnitudes.max() == 1.0


def test_matches_direct_double_sum():
    stream = random_stream(1)
    short = SampleStream(samples=stream.samples[:64], t_b=stream.t_b)
    delays = np.arange(-5, 6) * short.t_b
    dopplers = np.arange(-3, 4) * 1e3
    surf = ambiguity(short, delays, dopplers)
    oracle = direct_af_oracle(short.samples, short.t_b, delays, dopplers)
    oracle /= oracle.max()
    assert np.abs(surf.magnitudes - oracle).max() <= 1e-9


def test_hermitian_symmetry():
    stream, _ = coded_stream()
    surf = small_surface(stream)
    assert np.abs(surf.magnitudes - surf.magnitudes[::-1, ::-1]).max() <= 1e-9


def test_volume_invariance_between_coded_and_uncoded():
    # full-support double-sum oracle: sum of AF^2 over a complete Doppler DFT
    # period equals len * energy^2 for any equal-energy signal
    coded, _ = coded_stream()
    uncoded = random_stream(2)
    def volume(s):
        n = len(s.samples)
        total = 0.0
        for d in range(-(n - 1), n):
            if d >= 0:
                prod = s.samples[: n - d] * np.conj(s.samples[d:])
            else:
                prod = s.samples[-d:] * np.conj(s.samples[: n + d])
            spec = np.fft.fft(prod, n)
            total += float(np.sum(np.abs(spec) ** 2))
        return total
    e_coded = np.sum(np.abs(coded.samples) ** 2)
    e_uncoded = np.sum(np.abs(uncoded.samples) ** 2)
    assert e_coded == pytest.approx(e_uncoded, rel=1e-12)
    v1, v2 = volume(coded), volume(uncoded)
    assert v1 == pytest.approx(v2, rel=1e-6)


def test_beyond_support_rows_are_zero():
    stream = SampleStream(samples=np.ones(8, dtype=complex), t_b=1e-6)
    delays = np.arange(-10, 11) * 1e-6
    surf = ambiguity(stream, delays, np.array([-1e3, 0.0, 1e3]))
    assert np.all(surf.magnitudes[0] == 0)
    assert np.all(surf.magnitudes[-1] == 0)


def test_thumbtack_surface_sidelobe_sentinel():
    mags = np.zeros((11, 11))
    mags[5, 5] = 1.0
    surf = AmbiguitySurface(
        magnitudes=mags,
        delays_s=np.arange(-5, 6) * 1e-6,
        dopplers_hz=np.arange(-5, 6) * 1e3,
    )
    psl, _ = sidelobe_metrics(surf)
    assert psl == float("-inf")


def test_rectangular_pulse_triangle_slope():
    # constant-envelope pulse: zero-Doppler cut is 1 - |tau|/T, slope -1/T
    n, t_b = 256, 1e-6
    stream = SampleStream(samples=np.ones(n, dtype=complex), t_b=t_b)
    delays = np.arange(-(n - 1), n) * t_b
    surf = ambiguity(stream, delays, np.array([-1.0, 0.0, 1.0]))
    _, slope = sidelobe_metrics(surf)
    duration = n * t_b
    assert slope == pytest.approx(-1.0 / duration, rel=0.05)


def test_coded_cut_beats_random_cut():
    coded, _ = coded_stream()
    coded_psl = cut_peak_sidelobe_db(small_surface(coded))
    uncoded_psl = cut_peak_sidelobe_db(small_surface(random_stream(3)))
    assert coded_psl < uncoded_psl


def test_grid_validation_and_degenerate_inputs():
    stream = SampleStream(samples=np.ones(16, dtype=complex), t_b=1e-6)
    with pytest.raises(ParameterError):
        ambiguity(stream, np.array([0.0, 1e-6]), np.array([0.0]))
    empty = SampleStream(samples=np.zeros(4, dtype=complex), t_b=1e-6)
    with pytest.raises(DegenerateInputError):
        ambiguity(empty, np.array([-1e-6, 0.0, 1e-6]), np.array([0.0]))
    flat = AmbiguitySurface(np.zeros((3, 3)), np.arange(-1, 2) * 1e-6, np.arange(-1, 2) * 1.0)
    with pytest.raises(DegenerateInputError):
        sidelobe_metrics(flat)


def test_csv_export_layout():
    stream = SampleStream(samples=np.ones(8, dtype=complex), t_b=1e-6)
    surf = ambiguity(stream, np.array([-1e-6, 0.0, 1e-6]), np.array([-1e3, 0.0, 1e3]))
    text = surface_to_csv(surf)
    lines = text.strip().split("\n")
    assert lines[0] == "delay_s,doppler_hz,magnitude"
    assert len(lines) == 1 + 9


def test_zero_doppler_cut_selects_zero_bin():
    stream, _ = coded_stream()
    surf = small_surface(stream)
    delays, cut = zero_doppler_cut(surf)
    assert len(delays) == len(cut) == len(surf.delays_s)
    assert cut.max() == 1.0
