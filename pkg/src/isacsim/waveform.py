"""Pilot/data frame construction and time-domain OFDM synthesis.

Frame layout: the first ``n_pilot_sym`` OFDM symbols carry pilot cells on
subcarriers 0..n_pilot_sc-1, the remaining ``n_data_sym`` symbols carry data
cells on subcarriers 0..n_data_sc-1. Pilot cells are deterministic QPSK drawn
from a seeded generator; data cells come from mapped payload bits, optionally
phase coded with a Golay chip sequence.

Synthesis uses an unscaled forward DFT convention: the inverse transform is
scaled by 1/body_len, so demapping one symbol body with a plain forward DFT
returns the grid column unscaled.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DimensionError, ParameterError
from .seqcode import GolayPair, phase_code

_IQ_MAGIC = "#ISAC-IQ v1"


@dataclass(frozen=True)
class WaveformConfig:
    """OFDM frame parameters.

    Attributes
    ----------
    delta_f : float
        Subcarrier spacing (Hz), shared by pilot and data.
    f_c : float
        Carrier frequency (Hz).
    n_sc : int
        Total subcarriers N (synthesis places them in bins 0..N-1).
    n_pilot_sc, n_pilot_sym : int
        Pilot band width N_p and pilot symbol count M_p.
    n_data_sc, n_data_sym : int
        Data band width N_d and data symbol count M_d.
    body_len : int
        Samples per OFDM symbol body N' (the synthesis IDFT size).
    cp_len : int
        Cyclic prefix length in samples.
    doppler_spacing : str
        "full": symbol-to-symbol Doppler phase spacing includes the CP
        (T_sym = (body_len+cp_len)*T_b); "body": it does not (T_sym = 1/delta_f).
    """

    delta_f: float
    f_c: float
    n_sc: int
    n_pilot_sc: int
    n_pilot_sym: int
    n_data_sc: int
    n_data_sym: int
    body_len: int
    cp_len: int = 0
    doppler_spacing: str = "full"

    def __post_init__(self):
        if self.delta_f <= 0 or self.f_c <= 0:
            raise ParameterError("delta_f and f_c must be positive")
        if self.n_pilot_sc > self.n_sc or self.n_data_sc > self.n_sc:
            raise ParameterError("pilot/data band cannot exceed the total subcarrier count")
        if self.n_sym < 1:
            raise ParameterError("frame must contain at least one symbol")
        if self.cp_len < 0:
            raise ParameterError("cp_len must be >= 0")
        if self.doppler_spacing not in ("full", "body"):
            raise ParameterError("doppler_spacing must be 'full' or 'body'")

    @property
    def n_sym(self) -> int:
        return self.n_pilot_sym + self.n_data_sym

    @property
    def t_b(self) -> float:
        """Sample interval (s); t_b * body_len = 1/delta_f."""
        return 1.0 / (self.body_len * self.delta_f)

    @property
    def t_body(self) -> float:
        return 1.0 / self.delta_f

    @property
    def t_sym(self) -> float:
        """Symbol-start spacing used for Doppler phase (per doppler_spacing)."""
        if self.doppler_spacing == "full":
            return (self.body_len + self.cp_len) * self.t_b
        return self.t_body

    @property
    def symbol_len(self) -> int:
        return self.body_len + self.cp_len

    @property
    def frame_len(self) -> int:
        return self.n_sym * self.symbol_len


@dataclass
class SymbolGrid:
    """N x M modulation symbols with pilot/data layout masks."""

    entries: np.ndarray
    pilot_mask: np.ndarray
    data_mask: np.ndarray

    @property
    def active_mask(self) -> np.ndarray:
        return self.pilot_mask | self.data_mask

    @property
    def shape(self):
        return self.entries.shape


@dataclass
class SampleStream:
    """Complex baseband samples with frame timing metadata."""

    samples: np.ndarray
    t_b: float
    t0: float = 0.0
    n_symbols: int = 0
    body_len: int = 0
    cp_len: int = 0

    @property
    def symbol_len(self) -> int:
        return self.body_len + self.cp_len

    def __len__(self) -> int:
        return len(self.samples)


def map_bits(bits: np.ndarray, constellation: str) -> np.ndarray:
    """Map 0/1 bits to unit-modulus BPSK or (Gray) QPSK symbols."""
    bits = np.asarray(bits).astype(np.int64).ravel()
    if np.any((bits != 0) & (bits != 1)):
        raise ParameterError("bits must be 0/1")
    if constellation == "bpsk":
        return (1.0 - 2.0 * bits).astype(np.complex128)
    if constellation == "qpsk":
        if bits.size % 2:
            raise ParameterError("QPSK needs an even number of bits")
        i = 1.0 - 2.0 * bits[0::2]
        q = 1.0 - 2.0 * bits[1::2]
        return (i + 1j * q) / np.sqrt(2.0)
    raise ParameterError(f"unknown constellation {constellation!r}")


def bits_per_symbol(constellation: str) -> int:
    if constellation == "bpsk":
        return 1
    if constellation == "qpsk":
        return 2
    raise ParameterError(f"unknown constellation {constellation!r}")


def pilot_cells(cfg: WaveformConfig, pilot_seed: int) -> np.ndarray:
    """Deterministic unit-modulus QPSK pilots, N_p x M_p, fixed by the seed."""
    rng = np.random.default_rng(pilot_seed)
    idx = rng.integers(0, 4, size=(cfg.n_pilot_sc, cfg.n_pilot_sym))
    table = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2.0)
    return table[idx]


def build_frame(
    cfg: WaveformConfig,
    pilot_seed: int,
    data_bits: np.ndarray,
    coding: GolayPair | None = None,
    constellation: str = "qpsk",
) -> SymbolGrid:
    """Assemble the combined pilot+data symbol grid for one frame.

    Parameters
    ----------
    cfg : WaveformConfig
    pilot_seed : int
        Seed for the deterministic pilot constellation.
    data_bits : array of 0/1
        Payload; length must equal n_data_sc * n_data_sym * bits-per-symbol.
    coding : GolayPair, optional
        When present, data cells are phase coded with chips a[n] along the
        subcarrier axis (chip length must equal n_data_sc).
    constellation : str
        "bpsk" or "qpsk" for the data cells.
    """
    n, m = cfg.n_sc, cfg.n_sym
    entries = np.zeros((n, m), dtype=np.complex128)
    pilot_mask = np.zeros((n, m), dtype=bool)
    data_mask = np.zeros((n, m), dtype=bool)

    if cfg.n_pilot_sym > 0 and cfg.n_pilot_sc > 0:
        entries[: cfg.n_pilot_sc, : cfg.n_pilot_sym] = pilot_cells(cfg, pilot_seed)
        pilot_mask[: cfg.n_pilot_sc, : cfg.n_pilot_sym] = True

    if cfg.n_data_sym > 0 and cfg.n_data_sc > 0:
        need = cfg.n_data_sc * cfg.n_data_sym * bits_per_symbol(constellation)
        data_bits = np.asarray(data_bits).ravel()
        if data_bits.size != need:
            raise ParameterError(
                f"expected {need} data bits for {cfg.n_data_sc}x{cfg.n_data_sym} "
                f"{constellation} cells, got {data_bits.size}"
            )
        block = map_bits(data_bits, constellation).reshape(cfg.n_data_sc, cfg.n_data_sym)
        if coding is not None:
            block = phase_code(block, coding).symbols
        entries[: cfg.n_data_sc, cfg.n_pilot_sym :] = block
        data_mask[: cfg.n_data_sc, cfg.n_pilot_sym :] = True

    return SymbolGrid(entries=entries, pilot_mask=pilot_mask, data_mask=data_mask)


def synthesize(grid: SymbolGrid, cfg: WaveformConfig) -> SampleStream:
    """Generate the time-domain frame: per-symbol IDFT plus cyclic prefix.

    Each grid column is placed in bins 0..N-1 of a body_len-point inverse DFT
    (1/body_len scaling); the last cp_len body samples are prepended as CP and
    the M symbols are concatenated.
    """
    n, m = grid.shape
    if n != cfg.n_sc or m != cfg.n_sym:
        raise DimensionError(f"grid shape {grid.shape} does not match config ({cfg.n_sc}, {cfg.n_sym})")
    if cfg.body_len < cfg.n_sc:
        raise ConfigurationError(f"body_len {cfg.body_len} < subcarrier count {cfg.n_sc}")

    padded = np.zeros((cfg.body_len, m), dtype=np.complex128)
    padded[:n, :] = grid.entries
    bodies = np.fft.ifft(padded, axis=0)
    if cfg.cp_len > 0:
        symbols = np.concatenate([bodies[-cfg.cp_len :, :], bodies], axis=0)
    else:
        symbols = bodies
    samples = symbols.T.reshape(-1)
    return SampleStream(
        samples=samples,
        t_b=cfg.t_b,
        t0=0.0,
        n_symbols=m,
        body_len=cfg.body_len,
        cp_len=cfg.cp_len,
    )


def demap(stream: SampleStream, cfg: WaveformConfig) -> np.ndarray:
    """Recover the N x M grid from a frame: drop CP, forward DFT per symbol."""
    if len(stream) != cfg.frame_len:
        raise DimensionError(f"stream length {len(stream)} != frame length {cfg.frame_len}")
    sym = stream.samples.reshape(cfg.n_sym, cfg.symbol_len)
    bodies = sym[:, cfg.cp_len :]
    spectra = np.fft.fft(bodies, axis=1)
    return spectra[:, : cfg.n_sc].T.copy()


def strip_cp(stream: SampleStream) -> SampleStream:
    """Remove the CP samples, keeping the concatenated symbol bodies."""
    if stream.n_symbols <= 0 or stream.body_len <= 0:
        raise ParameterError("stream carries no frame markers")
    if stream.cp_len == 0:
        return SampleStream(
            samples=stream.samples.copy(),
            t_b=stream.t_b,
            t0=stream.t0,
            n_symbols=stream.n_symbols,
            body_len=stream.body_len,
            cp_len=0,
        )
    sym = stream.samples.reshape(stream.n_symbols, stream.symbol_len)
    return SampleStream(
        samples=sym[:, stream.cp_len :].reshape(-1).copy(),
        t_b=stream.t_b,
        t0=stream.t0 + stream.cp_len * stream.t_b,
        n_symbols=stream.n_symbols,
        body_len=stream.body_len,
        cp_len=0,
    )


def papr(stream: SampleStream) -> float:
    """Peak-to-average power ratio of the stream in dB."""
    if len(stream) == 0:
        raise ParameterError("stream is empty")
    p = np.abs(stream.samples) ** 2
    return float(10.0 * np.log10(p.max() / p.mean()))


def write_iq(stream: SampleStream, f_c: float, path) -> None:
    """Write interleaved float64 I/Q (little-endian) with a text header."""
    header = "\n".join(
        [
            _IQ_MAGIC,
            f"t_b_s={stream.t_b!r}",
            f"f_c_hz={f_c!r}",
            f"t0_s={stream.t0!r}",
            f"n_samples={len(stream)}",
            f"n_symbols={stream.n_symbols}",
            f"samples_per_symbol={stream.body_len}",
            f"cp_len={stream.cp_len}",
            "#END",
            "",
        ]
    )
    iq = np.empty(2 * len(stream), dtype="<f8")
    iq[0::2] = stream.samples.real
    iq[1::2] = stream.samples.imag
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(iq.tobytes())


def read_iq(path) -> tuple[SampleStream, float]:
    """Read a stream written by write_iq; returns (stream, f_c_hz)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    end = raw.find(b"#END\n")
    if not raw.startswith(_IQ_MAGIC.encode("ascii")) or end < 0:
        raise ParameterError(f"{path}: not an ISAC-IQ file")
    fields = {}
    for line in raw[:end].decode("ascii").splitlines()[1:]:
        key, _, value = line.partition("=")
        fields[key] = value
    data = np.frombuffer(raw[end + len(b"#END\n") :], dtype="<f8")
    n = int(fields["n_samples"])
    if data.size != 2 * n:
        raise ParameterError(f"{path}: payload length {data.size} != 2*{n}")
    samples = data[0::2] + 1j * data[1::2]
    stream = SampleStream(
        samples=samples,
        t_b=float(fields["t_b_s"]),
        t0=float(fields["t0_s"]),
        n_symbols=int(fields["n_symbols"]),
        body_len=int(fields["samples_per_symbol"]),
        cp_len=int(fields["cp_len"]),
    )
    return stream, float(fields["f_c_hz"])
