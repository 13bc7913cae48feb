"""FastAPI service wrapping the simulation/estimation core."""
from __future__ import annotations

import base64

import numpy as np
from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .. import __version__, af, bench, bounds
from ..errors import IsacError, NumericLimitError, ParameterError
from ..waveform import SampleStream
from .schemas import (
    AfRequest,
    AfResponse,
    CrlbRequest,
    CrlbResponse,
    EstimateRequest,
    EstimateResponse,
    HealthResponse,
    IterationIndices,
    SimulateRequest,
    StreamPayload,
    SweepRequest,
    SweepResponse,
    TargetEstimate,
)

app = FastAPI(title="isacsim", version=__version__)


@app.exception_handler(IsacError)
async def _isac_error(_, exc: IsacError):
    kind = "numeric-limit" if isinstance(exc, NumericLimitError) else "config"
    return JSONResponse(status_code=422, content={"kind": kind, "message": str(exc)})


def _encode_stream(stream: SampleStream, f_c: float) -> StreamPayload:
    iq = np.empty(2 * len(stream), dtype="<f8")
    iq[0::2] = stream.samples.real
    iq[1::2] = stream.samples.imag
    return StreamPayload(
        iq_b64=base64.b64encode(iq.tobytes()).decode("ascii"),
        t_b_s=stream.t_b,
        t0_s=stream.t0,
        f_c_hz=f_c,
        n_samples=len(stream),
        n_symbols=stream.n_symbols,
        samples_per_symbol=stream.body_len,
        cp_len=stream.cp_len,
    )


def _decode_samples(iq_b64: str) -> np.ndarray:
    raw = np.frombuffer(base64.b64decode(iq_b64), dtype="<f8")
    return raw[0::2] + 1j * raw[1::2]


@app.get("/health", response_model=HealthResponse)
def health():
    return HealthResponse(status="ok", version=__version__)


@app.post("/simulate", response_model=StreamPayload)
def simulate(req: SimulateRequest):
    scenario = bench.parse_scenario(req.scenario_toml)
    stream = bench.simulate_stream(scenario, req.snr_db, req.trial, req.what)
    return _encode_stream(stream, scenario.cfg.f_c)


@app.post("/estimate", response_model=EstimateResponse)
def estimate(req: EstimateRequest):
    scenario = bench.parse_scenario(req.scenario_toml)
    overrides = {}
    if req.iterations is not None:
        overrides["iterations"] = req.iterations
    if req.n_targets is not None:
        overrides["n_targets"] = req.n_targets
    if overrides:
        from dataclasses import replace

        scenario = replace(scenario, **overrides)
    method = req.method or scenario.methods[0]
    rx_stream = None
    if req.iq_b64 is not None:
        cfg = scenario.cfg
        rx_stream = SampleStream(
            samples=_decode_samples(req.iq_b64),
            t_b=cfg.t_b,
            n_symbols=cfg.n_sym,
            body_len=cfg.body_len,
            cp_len=cfg.cp_len,
        )
    est = bench.estimate_trial(scenario, method, req.snr_db, req.trial, rx_stream=rx_stream)
    return EstimateResponse(
        method=method,
        n_iterations=est.n_iterations,
        targets=[TargetEstimate(range_m=r, velocity_mps=v) for r, v in est.targets],
        iterations=[
            IterationIndices(indices=[[int(a), int(b)] for a, b in per_target])
            for per_target in est.iterations
        ],
        range_bin_m=est.bin_sizes[0],
        velocity_bin_mps=est.bin_sizes[1],
    )


@app.post("/crlb", response_model=CrlbResponse)
def crlb_endpoint(req: CrlbRequest):
    if req.snr_linear is not None:
        snr = req.snr_linear
    elif req.snr_db is not None:
        snr = 10.0 ** (req.snr_db / 10.0)
    else:
        raise ParameterError("crlb request needs snr_db or snr_linear")
    params = bounds.CrlbParams(
        snr=snr,
        n_tilde=req.n_tilde,
        q_vcp=req.q_vcp,
        m_tilde=req.m_tilde,
        n_sc=req.n_subcarriers,
        t_b=req.t_b_s,
        f_c=req.f_c_hz,
        h=complex(req.h_abs, 0.0),
        coded=req.coded,
        log_base=req.log_base,
    )
    rep = bounds.crlb(params)
    return CrlbResponse(
        gain=params.gain,
        crlb_eps=rep.crlb_eps,
        crlb_ups=rep.crlb_ups,
        crlb_r_m2=rep.crlb_r,
        crlb_v_mps2=rep.crlb_v,
    )


@app.post("/af", response_model=AfResponse)
def af_endpoint(req: AfRequest):
    scenario = bench.parse_scenario(req.scenario_toml)
    stream = bench.simulate_stream(scenario, None, req.trial, "tx")
    delays = af.default_delay_grid(stream, req.max_delay_s)
    dopplers = af.default_doppler_grid(stream, req.max_doppler_hz)
    surface = af.ambiguity(stream, delays, dopplers)
    psl, slope = af.sidelobe_metrics(surface)
    floor = 10.0 ** (req.db_floor / 20.0)
    mags = np.maximum(surface.magnitudes, floor)
    return AfResponse(
        delays_s=surface.delays_s.tolist(),
        dopplers_hz=surface.dopplers_hz.tolist(),
        magnitudes=mags.tolist(),
        peak_sidelobe_db=psl,
        decay_slope=slope,
        csv=af.surface_to_csv(surface),
    )


@app.post("/sweep", response_model=SweepResponse)
def sweep(req: SweepRequest):
    scenario = bench.parse_scenario(req.scenario_toml)
    result = bench.run_sweep(scenario, workers=req.workers, timing=req.timing)
    return SweepResponse(
        columns=list(bench.CSV_COLUMNS),
        rows=result.rows,
        csv=bench.sweep_to_csv(result),
    )
