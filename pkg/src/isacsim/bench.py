"""Scenario files, per-trial simulation, Monte Carlo sweeps, and result I/O.

Scenarios are TOML files (see scenarios/ in the repository root for the
committed experiment set and README.md for the grammar). Determinism
contract: every trial derives its randomness from ``scenario.seed ^ trial``;
payload bits use the (base, 0) stream, channel noise the (base, 1) stream,
and sweep reductions always run in trial order, so a fixed (seed, scenario)
pair produces bit-identical results for any worker count.
"""
from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from multiprocessing import get_context

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import bounds, cc_long, rd_short
from .channel import NoiseSpec, Target, echo_sample_domain, echo_symbol_domain
from .constants import SPEED_OF_LIGHT
from .errors import ConfigurationError
from .seqcode import generate_golay
from .waveform import (
    SampleStream,
    SymbolGrid,
    WaveformConfig,
    bits_per_symbol,
    build_frame,
    demap,
    strip_cp,
    synthesize,
)

METHODS = ("2dfft", "iter2dfft", "cc", "itercc")
CSV_COLUMNS = (
    "snr_db",
    "estimator",
    "X",
    "rmse_r_m",
    "rmse_v_mps",
    "crlb_r_m",
    "crlb_v_mps",
    "trials",
    "seconds",
)


@dataclass(frozen=True)
class LongRangeParams:
    group_len: int
    vcp_len: int
    span: str = "data"  # which symbols feed the correlator: "data" or "frame"


@dataclass(frozen=True)
class Scenario:
    name: str
    seed: int
    cfg: WaveformConfig
    targets: tuple[Target, ...]
    methods: tuple[str, ...]
    iterations: int
    n_targets: int
    snr_db: tuple[float, ...]
    trials: int
    constellation: str = "qpsk"
    data_mode: str = "random"  # "random" or "constant"
    golay_order: int = 0  # 0 = uncoded
    longrange: LongRangeParams | None = None

    @property
    def coded(self) -> bool:
        return self.golay_order > 0


@dataclass
class SweepResult:
    rows: list[dict] = field(default_factory=list)


def _req(table: dict, key: str, where: str):
    if key not in table:
        raise ConfigurationError(f"scenario is missing '{key}' in [{where}]")
    return table[key]


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a scenario TOML document."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"scenario is not valid TOML: {exc}") from exc

    w = doc.get("waveform")
    if not isinstance(w, dict):
        raise ConfigurationError("scenario needs a [waveform] table")
    cfg = WaveformConfig(
        delta_f=float(_req(w, "delta_f_hz", "waveform")),
        f_c=float(_req(w, "f_c_hz", "waveform")),
        n_sc=int(_req(w, "n_subcarriers", "waveform")),
        n_pilot_sc=int(_req(w, "n_pilot_subcarriers", "waveform")),
        n_pilot_sym=int(_req(w, "n_pilot_symbols", "waveform")),
        n_data_sc=int(_req(w, "n_data_subcarriers", "waveform")),
        n_data_sym=int(_req(w, "n_data_symbols", "waveform")),
        body_len=int(_req(w, "samples_per_symbol", "waveform")),
        cp_len=int(w.get("cp_len", 0)),
        doppler_spacing=str(w.get("doppler_spacing", "full")),
    )

    raw_targets = doc.get("targets", [])
    if not raw_targets:
        raise ConfigurationError("scenario needs at least one [[targets]] entry")
    targets = tuple(
        Target(
            range_m=float(_req(t, "range_m", "targets")),
            velocity=float(_req(t, "velocity_mps", "targets")),
            gain=complex(float(t.get("gain_re", 1.0)), float(t.get("gain_im", 0.0))),
        )
        for t in raw_targets
    )

    est = doc.get("estimator", {})
    methods = est.get("method", "2dfft")
    if isinstance(methods, str):
        methods = [methods]
    methods = tuple(str(m) for m in methods)
    for m in methods:
        if m not in METHODS:
            raise ConfigurationError(f"unknown estimator '{m}' (choose from {METHODS})")

    lr = None
    if "longrange" in doc:
        t = doc["longrange"]
        group_len = int(_req(t, "group_len", "longrange"))
        if "vcp_len" in t:
            vcp = int(t["vcp_len"])
        elif "max_range_m" in t:
            vcp = int(math.ceil(2.0 * float(t["max_range_m"]) / SPEED_OF_LIGHT / cfg.t_b))
        else:
            raise ConfigurationError("[longrange] needs vcp_len or max_range_m")
        span = str(t.get("span", "data"))
        if span not in ("data", "frame"):
            raise ConfigurationError("[longrange] span must be 'data' or 'frame'")
        lr = LongRangeParams(group_len=group_len, vcp_len=vcp, span=span)
    if any(m in ("cc", "itercc") for m in methods) and lr is None:
        raise ConfigurationError("cc/itercc estimators need a [longrange] table")

    sweep = doc.get("sweep", {})
    snrs = tuple(float(s) for s in sweep.get("snr_db", [20.0]))
    trials = int(sweep.get("trials", 1))
    if not snrs or trials < 1:
        raise ConfigurationError("[sweep] needs a non-empty snr_db list and trials >= 1")

    scenario = Scenario(
        name=str(doc.get("name", "scenario")),
        seed=int(doc.get("seed", 0)),
        cfg=cfg,
        targets=targets,
        methods=methods,
        iterations=int(est.get("iterations", 1)),
        n_targets=int(est.get("n_targets", len(targets))),
        snr_db=snrs,
        trials=trials,
        constellation=str(doc.get("constellation", "qpsk")),
        data_mode=str(doc.get("data", "random")),
        golay_order=int(doc.get("golay_order", 0)),
        longrange=lr,
    )
    if scenario.golay_order:
        if 2**scenario.golay_order != cfg.n_data_sc:
            raise ConfigurationError(
                f"golay_order {scenario.golay_order} gives {2**scenario.golay_order} chips "
                f"but the data band has {cfg.n_data_sc} subcarriers"
            )
    if scenario.data_mode not in ("random", "constant"):
        raise ConfigurationError("data must be 'random' or 'constant'")
    return scenario


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def trial_base_seed(scenario: Scenario, trial: int) -> int:
    return scenario.seed ^ trial


def make_tx_grid(scenario: Scenario, trial: int):
    """Transmit grid for one trial (payload bits from the (base, 0) stream)."""
    cfg = scenario.cfg
    n_bits = cfg.n_data_sc * cfg.n_data_sym * bits_per_symbol(scenario.constellation)
    if scenario.data_mode == "constant":
        bits = np.zeros(n_bits, dtype=np.int64)
    else:
        rng = np.random.default_rng([trial_base_seed(scenario, trial), 0])
        bits = rng.integers(0, 2, n_bits)
    coding = generate_golay(scenario.golay_order) if scenario.coded else None
    return build_frame(cfg, scenario.seed, bits, coding=coding, constellation=scenario.constellation)


def _noise(scenario: Scenario, snr_db: float, trial: int) -> NoiseSpec:
    return NoiseSpec(snr_db=snr_db, seed=trial_base_seed(scenario, trial))


def longrange_streams(scenario: Scenario, tx: SampleStream, rx: SampleStream):
    """CP-stripped correlator inputs, restricted to the configured symbol span."""
    lr = scenario.longrange
    cfg = scenario.cfg
    tx_s, rx_s = strip_cp(tx), strip_cp(rx)
    if lr.span == "data" and cfg.n_data_sym > 0:
        start = cfg.n_pilot_sym * cfg.body_len
    else:
        start = 0
    def cut(s: SampleStream) -> SampleStream:
        return SampleStream(
            samples=s.samples[start:],
            t_b=s.t_b,
            t0=s.t0 + start * s.t_b,
            n_symbols=s.n_symbols,
            body_len=s.body_len,
            cp_len=0,
        )
    return cut(tx_s), cut(rx_s)


def n_groups(scenario: Scenario) -> int:
    lr = scenario.longrange
    cfg = scenario.cfg
    n_sym = cfg.n_data_sym if (lr.span == "data" and cfg.n_data_sym > 0) else cfg.n_sym
    return (n_sym * cfg.body_len) // lr.group_len


def estimate_trial(scenario: Scenario, method: str, snr_db: float | None, trial: int,
                   rx_stream: SampleStream | None = None) -> rd_short.SensingEstimate:
    """Run one estimator over one simulated (or supplied) echo realization.

    With ``rx_stream`` given, the transmit reference is regenerated from the
    scenario and the provided samples are used as the received signal.
    """
    cfg = scenario.cfg
    tx_grid = make_tx_grid(scenario, trial)
    noise = _noise(scenario, snr_db, trial) if snr_db is not None else None

    if method in ("2dfft", "iter2dfft"):
        if rx_stream is not None:
            raw = demap(rx_stream, cfg)
            rx_grid = SymbolGrid(
                entries=raw, pilot_mask=tx_grid.pilot_mask, data_mask=tx_grid.data_mask
            )
        else:
            rx_grid = echo_symbol_domain(tx_grid, cfg, list(scenario.targets), noise)
        cim = rd_short.build_y(tx_grid, rx_grid, cfg)
        x = scenario.iterations if method == "iter2dfft" else 1
        return rd_short.estimate_iterative_2dfft(cim, x, n_targets=scenario.n_targets)

    if method in ("cc", "itercc"):
        tx = synthesize(tx_grid, cfg)
        if rx_stream is None:
            rx_stream = echo_sample_domain(tx, cfg, list(scenario.targets), noise)
        tx_cut, rx_cut = longrange_streams(scenario, tx, rx_stream)
        lr = scenario.longrange
        tx_g, rx_g = cc_long.group_with_vcp(tx_cut, rx_cut, lr.group_len, lr.vcp_len)
        _, _, profile = cc_long.cc_range(tx_g, rx_g)
        peaks = cc_long.range_peaks(profile, scenario.n_targets)
        targets = []
        iteration_log = []
        for p in peaks:
            r = cc_long.range_bin_m(profile.t_b) * p
            if method == "cc":
                l0, v = cc_long.cc_velocity(profile, p, cfg.f_c)
                idx = [(p, l0)]
            else:
                v, ls = cc_long.cc_velocity_iterative(profile, p, scenario.iterations, cfg.f_c)
                idx = [(p, ls[0])] + [(p, l) for l in ls[1:]]
            targets.append((r, v))
            iteration_log.append(idx)
        x = 1 if method == "cc" else scenario.iterations
        m_t = n_groups(scenario)
        return rd_short.SensingEstimate(
            targets=targets,
            iterations=iteration_log,
            n_iterations=x,
            bin_sizes=(
                cc_long.range_bin_m(cfg.t_b),
                cc_long.velocity_bin_mps(cfg.t_b, cfg.f_c, m_t, lr.group_len, x),
            ),
        )

    raise ConfigurationError(f"unknown estimator '{method}'")


def nearest_errors(est: rd_short.SensingEstimate, truths) -> list[tuple[float, float]]:
    """Per-truth (range, velocity) absolute errors against the nearest estimate
    in (R, V) Euclidean distance."""
    out = []
    for t in truths:
        d2 = [(r - t.range_m) ** 2 + (v - t.velocity) ** 2 for r, v in est.targets]
        r_hat, v_hat = est.targets[int(np.argmin(d2))]
        out.append((abs(r_hat - t.range_m), abs(v_hat - t.velocity)))
    return out


def _trial_errors(scenario: Scenario, trial: int) -> dict:
    """Squared errors of every (method, snr) cell for one trial."""
    out = {}
    for method in scenario.methods:
        for snr in scenario.snr_db:
            est = estimate_trial(scenario, method, snr, trial)
            errs = nearest_errors(est, scenario.targets)
            se_r = sum(e[0] ** 2 for e in errs)
            se_v = sum(e[1] ** 2 for e in errs)
            out[(method, snr)] = (se_r, se_v, len(errs))
    return out


def _trial_chunk(args):
    scenario, chunk = args
    return [(t, _trial_errors(scenario, t)) for t in chunk]


def sweep_crlb(scenario: Scenario, snr_db: float) -> tuple[float, float] | None:
    """sqrt of the closed-form range/velocity bounds for long-range methods."""
    if scenario.longrange is None:
        return None
    lr = scenario.longrange
    params = bounds.CrlbParams(
        snr=10.0 ** (snr_db / 10.0),
        n_tilde=lr.group_len,
        q_vcp=lr.vcp_len,
        m_tilde=n_groups(scenario),
        n_sc=scenario.cfg.n_sc,
        t_b=scenario.cfg.t_b,
        f_c=scenario.cfg.f_c,
        h=scenario.targets[0].gain,
        coded=scenario.coded,
    )
    rep = bounds.crlb(params)
    return math.sqrt(rep.crlb_r), math.sqrt(rep.crlb_v)


def run_sweep(scenario: Scenario, workers: int = 1, timing: bool = False) -> SweepResult:
    """Monte Carlo RMSE sweep over the scenario's SNR grid and estimators.

    Trials are independent; with workers > 1 they are chunked over a spawn
    process pool and always reduced in trial order, so the result is
    bit-identical for any worker count.
    """
    if workers < 1:
        raise ConfigurationError("workers must be >= 1")
    t_start = time.perf_counter()
    per_trial: dict[int, dict] = {}
    trials = list(range(scenario.trials))
    if workers == 1 or scenario.trials == 1:
        for t in trials:
            per_trial[t] = _trial_errors(scenario, t)
    else:
        chunks = [trials[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers, mp_context=get_context("spawn")) as pool:
            for part in pool.map(_trial_chunk, [(scenario, c) for c in chunks if c]):
                for t, errs in part:
                    per_trial[t] = errs
    elapsed = time.perf_counter() - t_start

    result = SweepResult()
    seconds_total = round(elapsed, 3) if timing else 0.0
    for method in scenario.methods:
        crlb_needed = method in ("cc", "itercc")
        x = scenario.iterations if method in ("iter2dfft", "itercc") else 1
        for snr in scenario.snr_db:
            se_r = se_v = 0.0
            count = 0
            for t in range(scenario.trials):  # fixed-order reduction
                r, v, k = per_trial[t][(method, snr)]
                se_r += r
                se_v += v
                count += k
            row = {
                "snr_db": snr,
                "estimator": method,
                "X": x,
                "rmse_r_m": math.sqrt(se_r / count),
                "rmse_v_mps": math.sqrt(se_v / count),
                "crlb_r_m": None,
                "crlb_v_mps": None,
                "trials": scenario.trials,
                "seconds": seconds_total,
            }
            if crlb_needed:
                cr = sweep_crlb(scenario, snr)
                if cr is not None:
                    row["crlb_r_m"], row["crlb_v_mps"] = cr
            result.rows.append(row)
    return result


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def sweep_to_csv(result: SweepResult) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for row in result.rows:
        lines.append(",".join(_csv_cell(row[c]) for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def sweep_to_json(result: SweepResult) -> str:
    return json.dumps({"columns": list(CSV_COLUMNS), "rows": result.rows}, indent=2) + "\n"


def simulate_stream(scenario: Scenario, snr_db: float | None, trial: int, what: str = "rx"):
    """Synthesize the trial's transmit frame or its noisy echo as a stream."""
    cfg = scenario.cfg
    tx = synthesize(make_tx_grid(scenario, trial), cfg)
    if what == "tx":
        return tx
    if what == "rx":
        noise = _noise(scenario, snr_db, trial) if snr_db is not None else None
        return echo_sample_domain(tx, cfg, list(scenario.targets), noise)
    raise ConfigurationError("simulate 'what' must be 'tx' or 'rx'")
