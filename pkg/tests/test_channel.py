import numpy as np
import pytest

from isacsim.channel import NoiseSpec, Target, echo_sample_domain, echo_symbol_domain
from isacsim.constants import SPEED_OF_LIGHT
from isacsim.errors import ModelViolationError, ParameterError
from isacsim.waveform import SampleStream, WaveformConfig, build_frame, demap, synthesize


def cfg64(**kw):
    base = dict(
        delta_f=15e3,
        f_c=24e9,
        n_sc=64,
        n_pilot_sc=64,
        n_pilot_sym=2,
        n_data_sc=64,
        n_data_sym=6,
        body_len=128,
        cp_len=32,
    )
    base.update(kw)
    return WaveformConfig(**base)


def frame(cfg, seed=0):
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, cfg.n_data_sc * cfg.n_data_sym * 2)
    return build_frame(cfg, seed, bits)


def on_grid_target(cfg, k, l):
    tau = k / (cfg.n_pilot_sc * cfg.delta_f)
    f_d = l / (cfg.n_sym * cfg.t_sym)
    return Target(
        range_m=SPEED_OF_LIGHT * tau / 2.0,
        velocity=SPEED_OF_LIGHT * f_d / (2.0 * cfg.f_c),
    )


def test_identity_channel():
    cfg = cfg64()
    tx = frame(cfg)
    rx = echo_symbol_domain(tx, cfg, [Target(0.0, 0.0, 1.0)])
    assert np.array_equal(rx.entries, tx.entries)


def test_symbol_domain_matches_exponential_model():
    cfg = cfg64()
    tx = frame(cfg)
    tgt = on_grid_target(cfg, 3, 2)
    rx = echo_symbol_domain(tx, cfg, [tgt])
    n = np.arange(cfg.n_sc)[:, None]
    m = np.arange(cfg.n_sym)[None, :]
    expected = tx.entries * np.exp(-2j * np.pi * n * cfg.delta_f * tgt.delay_s) * np.exp(
        2j * np.pi * m * cfg.t_sym * tgt.doppler_hz(cfg.f_c)
    )
    assert np.allclose(rx.entries, expected, atol=1e-12)


def test_symbol_domain_rejects_beyond_cp_delay():
    cfg = cfg64()
    max_range = SPEED_OF_LIGHT * cfg.cp_len * cfg.t_b / 2.0
    with pytest.raises(ModelViolationError):
        echo_symbol_domain(frame(cfg), cfg, [Target(max_range * 1.5, 0.0)])


def test_sample_domain_integer_shift():
    cfg = cfg64()
    stream = synthesize(frame(cfg), cfg)
    r = 17 * cfg.t_b * SPEED_OF_LIGHT / 2.0
    rx = echo_sample_domain(stream, cfg, [Target(r, 0.0)])
    assert np.array_equal(rx.samples[17:], stream.samples[:-17])
    assert np.all(rx.samples[:17] == 0)


def test_sample_domain_doppler_preserves_magnitude():
    cfg = cfg64()
    stream = synthesize(frame(cfg), cfg)
    rx = echo_sample_domain(stream, cfg, [Target(0.0, 40.0)])
    assert np.allclose(np.abs(rx.samples), np.abs(stream.samples), rtol=1e-12)


def test_superposition_linearity():
    cfg = cfg64()
    stream = synthesize(frame(cfg), cfg)
    t1 = Target(200.0, 10.0, 0.8 + 0.2j)
    t2 = Target(450.0, -25.0, 0.5 - 0.7j)
    both = echo_sample_domain(stream, cfg, [t1, t2])
    summed = echo_sample_domain(stream, cfg, [t1]).samples + echo_sample_domain(stream, cfg, [t2]).samples
    denom = np.abs(both.samples).max()
    assert np.abs(both.samples - summed).max() / denom <= 1e-10


def test_delay_beyond_stream_rejected():
    cfg = cfg64()
    stream = synthesize(frame(cfg), cfg)
    r = len(stream) * cfg.t_b * SPEED_OF_LIGHT  # twice the stream duration, one way
    with pytest.raises(ParameterError):
        echo_sample_domain(stream, cfg, [Target(r, 0.0)])


def test_noise_calibration_within_0p2_db():
    stream = SampleStream(samples=np.ones(1_000_000, dtype=complex), t_b=1e-7)
    cfg = cfg64()
    for snr_db in (0.0, 10.0, 23.0):
        rx = echo_sample_domain(stream, cfg, [Target(0.0, 0.0)], NoiseSpec(snr_db, 99))
        noise = rx.samples - stream.samples
        measured = 10 * np.log10(1.0 / np.mean(np.abs(noise) ** 2))
        assert abs(measured - snr_db) <= 0.2


def test_noise_is_seed_deterministic():
    cfg = cfg64()
    stream = synthesize(frame(cfg), cfg)
    a = echo_sample_domain(stream, cfg, [Target(100.0, 5.0)], NoiseSpec(10.0, 7))
    b = echo_sample_domain(stream, cfg, [Target(100.0, 5.0)], NoiseSpec(10.0, 7))
    assert np.array_equal(a.samples, b.samples)


def test_symbol_and_sample_paths_agree_for_in_cp_delay():
    # integer-bin, zero-Doppler target: demapped sample-domain echo must match
    # the symbol-domain model almost exactly
    cfg = cfg64()
    tx = frame(cfg, seed=4)
    tgt = on_grid_target(cfg, 5, 0)  # delay = 5/(N df) -> 10 samples, inside CP
    sym = echo_symbol_domain(tx, cfg, [tgt])
    smp = demap(echo_sample_domain(synthesize(tx, cfg), cfg, [tgt]), cfg)
    active = tx.active_mask
    rel = np.abs(smp[active] - sym.entries[active]).max() / np.abs(sym.entries[active]).max()
    assert rel <= 1e-6


def test_fractional_delay_interpolator_close_to_ideal():
    cfg = cfg64(cp_len=16)
    stream = synthesize(frame(cfg, seed=2), cfg)
    r = 10.25 * cfg.t_b * SPEED_OF_LIGHT / 2.0
    rx = echo_sample_domain(stream, cfg, [Target(r, 0.0)], interp="sinc")
    # inner samples should resemble the nearest-shift version within the
    # fractional-offset error bound
    near = echo_sample_domain(stream, cfg, [Target(r, 0.0)], interp="nearest")
    err = np.abs(rx.samples[50:-50] - near.samples[50:-50]).max()
    assert 0 < err < np.abs(stream.samples).max()
