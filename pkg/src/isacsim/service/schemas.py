"""Pydantic request/response models of the HTTP service."""
from __future__ import annotations

from pydantic import BaseModel, Field


class SimulateRequest(BaseModel):
    scenario_toml: str
    what: str = "rx"  # "tx" or "rx"
    snr_db: float | None = None
    trial: int = 0


class StreamPayload(BaseModel):
    iq_b64: str  # interleaved little-endian float64 I/Q, base64 encoded
    t_b_s: float
    t0_s: float
    f_c_hz: float
    n_samples: int
    n_symbols: int
    samples_per_symbol: int
    cp_len: int


class TargetEstimate(BaseModel):
    range_m: float
    velocity_mps: float


class IterationIndices(BaseModel):
    indices: list[list[int]]  # per iteration: [k_i, l_i]


class EstimateRequest(BaseModel):
    scenario_toml: str
    method: str | None = None  # default: first estimator of the scenario
    iterations: int | None = None
    n_targets: int | None = None
    snr_db: float | None = None
    trial: int = 0
    iq_b64: str | None = None  # received samples; tx reference comes from the scenario


class EstimateResponse(BaseModel):
    method: str
    n_iterations: int
    targets: list[TargetEstimate]
    iterations: list[IterationIndices]
    range_bin_m: float
    velocity_bin_mps: float


class CrlbRequest(BaseModel):
    snr_db: float | None = None
    snr_linear: float | None = None  # takes precedence over snr_db
    n_tilde: int
    q_vcp: int
    m_tilde: int
    n_subcarriers: int
    t_b_s: float
    f_c_hz: float
    h_abs: float = 1.0
    coded: bool = True
    log_base: float = 10.0


class CrlbResponse(BaseModel):
    gain: float
    crlb_eps: float
    crlb_ups: float
    crlb_r_m2: float
    crlb_v_mps2: float


class AfRequest(BaseModel):
    scenario_toml: str
    trial: int = 0
    max_delay_s: float | None = None
    max_doppler_hz: float | None = None
    db_floor: float = Field(default=-60.0, description="floor applied to exported magnitudes (dB)")


class AfResponse(BaseModel):
    delays_s: list[float]
    dopplers_hz: list[float]
    magnitudes: list[list[float]]
    peak_sidelobe_db: float
    decay_slope: float
    csv: str


class SweepRequest(BaseModel):
    scenario_toml: str
    workers: int = 1
    timing: bool = False


class SweepResponse(BaseModel):
    columns: list[str]
    rows: list[dict]
    csv: str


class HealthResponse(BaseModel):
    status: str
    version: str
