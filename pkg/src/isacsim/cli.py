"""Command-line client of the isacsim service.

Every subcommand is a thin client: it builds a request, sends it to the
FastAPI service (an in-process instance by default, or a remote server via
--server), and writes the response to stdout or files. Exit codes: 0 on
success, 2 on configuration/parameter errors, 3 on numeric-limit errors,
64 on usage errors.
"""
from __future__ import annotations

import argparse
import asyncio
import base64
import json
import sys

import httpx

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


class ServiceError(Exception):
    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


def call_service(path: str, payload: dict, server: str | None) -> dict:
    """POST to the service; in-process ASGI when no server URL is given."""
    if server:
        with httpx.Client(base_url=server, timeout=600.0) as client:
            resp = client.post(path, json=payload)
    else:
        from .service import app

        async def _post():
            transport = httpx.ASGITransport(app=app)
            async with httpx.AsyncClient(
                transport=transport, base_url="http://isacsim", timeout=600.0
            ) as client:
                return await client.post(path, json=payload)

        resp = asyncio.run(_post())
    body = resp.json()
    if resp.status_code != 200:
        if isinstance(body, dict) and "kind" in body:
            raise ServiceError(body["kind"], body.get("message", ""))
        raise ServiceError("config", str(body))
    return body


def _read_scenario(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _write_stream_payload(payload: dict, path: str):
    header = "\n".join(
        [
            "#ISAC-IQ v1",
            f"t_b_s={payload['t_b_s']!r}",
            f"f_c_hz={payload['f_c_hz']!r}",
            f"t0_s={payload['t0_s']!r}",
            f"n_samples={payload['n_samples']}",
            f"n_symbols={payload['n_symbols']}",
            f"samples_per_symbol={payload['samples_per_symbol']}",
            f"cp_len={payload['cp_len']}",
            "#END",
            "",
        ]
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(base64.b64decode(payload["iq_b64"]))


def _read_iq_b64(path: str) -> str:
    with open(path, "rb") as fh:
        raw = fh.read()
    end = raw.find(b"#END\n")
    if not raw.startswith(b"#ISAC-IQ") or end < 0:
        raise ServiceError("config", f"{path}: not an ISAC-IQ file")
    return base64.b64encode(raw[end + len(b"#END\n") :]).decode("ascii")


def _cmd_simulate(args) -> int:
    payload = {
        "scenario_toml": _read_scenario(args.scenario),
        "what": args.what,
        "snr_db": args.snr_db,
        "trial": args.trial,
    }
    body = call_service("/simulate", payload, args.server)
    _write_stream_payload(body, args.out)
    print(f"wrote {body['n_samples']} samples to {args.out}")
    return EXIT_OK


def _cmd_estimate(args) -> int:
    payload = {
        "scenario_toml": _read_scenario(args.scenario),
        "method": args.method,
        "iterations": args.iterations,
        "n_targets": args.n_targets,
        "snr_db": args.snr_db,
        "trial": args.trial,
        "iq_b64": _read_iq_b64(args.iq) if args.iq else None,
    }
    body = call_service("/estimate", payload, args.server)
    print(f"method={body['method']} iterations={body['n_iterations']}")
    print(f"range_bin_m={body['range_bin_m']!r} velocity_bin_mps={body['velocity_bin_mps']!r}")
    for i, tgt in enumerate(body["targets"]):
        idx = body["iterations"][i]["indices"]
        print(
            f"target {i}: range_m={tgt['range_m']!r} velocity_mps={tgt['velocity_mps']!r} "
            f"peak_indices={idx}"
        )
    return EXIT_OK


def _cmd_crlb(args) -> int:
    payload = {
        "snr_db": args.snr_db,
        "snr_linear": args.snr_linear,
        "n_tilde": args.n_tilde,
        "q_vcp": args.q_vcp,
        "m_tilde": args.m_tilde,
        "n_subcarriers": args.n_subcarriers,
        "t_b_s": args.t_b,
        "f_c_hz": args.f_c,
        "h_abs": args.h_abs,
        "coded": not args.uncoded,
        "log_base": args.log_base,
    }
    body = call_service("/crlb", payload, args.server)
    for key in ("gain", "crlb_eps", "crlb_ups", "crlb_r_m2", "crlb_v_mps2"):
        print(f"{key}={body[key]!r}")
    return EXIT_OK


def _cmd_af(args) -> int:
    payload = {
        "scenario_toml": _read_scenario(args.scenario),
        "trial": args.trial,
        "max_delay_s": args.max_delay_s,
        "max_doppler_hz": args.max_doppler_hz,
        "db_floor": args.db_floor,
    }
    body = call_service("/af", payload, args.server)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(body["csv"])
    print(f"peak_sidelobe_db={body['peak_sidelobe_db']!r}")
    print(f"decay_slope={body['decay_slope']!r}")
    print(f"wrote surface to {args.out}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    payload = {
        "scenario_toml": _read_scenario(args.scenario),
        "workers": args.workers,
        "timing": args.timing,
    }
    body = call_service("/sweep", payload, args.server)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write(body["csv"])
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump({"columns": body["columns"], "rows": body["rows"]}, fh, indent=2)
            fh.write("\n")
    print(f"wrote {len(body['rows'])} rows to {args.out}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="isacsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_server(p):
        p.add_argument("--server", default=None, help="remote service URL (default: in-process)")

    p = sub.add_parser("simulate", help="synthesize a frame or its echo and write an I/Q file")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--what", choices=["tx", "rx"], default="rx")
    p.add_argument("--snr-db", type=float, default=None, dest="snr_db")
    p.add_argument("--trial", type=int, default=0)
    add_server(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("estimate", help="estimate target range/velocity (synthetic or from file)")
    p.add_argument("--scenario", required=True)
    p.add_argument("--iq", default=None, help="received I/Q file; omit for a synthetic echo")
    p.add_argument("--method", choices=["2dfft", "iter2dfft", "cc", "itercc"], default=None)
    p.add_argument("-X", "--iterations", type=int, default=None)
    p.add_argument("--n-targets", type=int, default=None, dest="n_targets")
    p.add_argument("--snr-db", type=float, default=None, dest="snr_db")
    p.add_argument("--trial", type=int, default=0)
    add_server(p)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("crlb", help="closed-form range/velocity estimation bounds")
    p.add_argument("--snr-db", type=float, default=None, dest="snr_db")
    p.add_argument("--snr-linear", type=float, default=None, dest="snr_linear")
    p.add_argument("--n-tilde", type=int, required=True, dest="n_tilde")
    p.add_argument("--q-vcp", type=int, required=True, dest="q_vcp")
    p.add_argument("--m-tilde", type=int, required=True, dest="m_tilde")
    p.add_argument("--n-subcarriers", type=int, required=True, dest="n_subcarriers")
    p.add_argument("--t-b", type=float, required=True, dest="t_b")
    p.add_argument("--f-c", type=float, required=True, dest="f_c")
    p.add_argument("--h-abs", type=float, default=1.0, dest="h_abs")
    p.add_argument("--uncoded", action="store_true")
    p.add_argument("--log-base", type=float, default=10.0, dest="log_base")
    add_server(p)
    p.set_defaults(func=_cmd_crlb)

    p = sub.add_parser("af", help="ambiguity surface of the scenario's transmit frame")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--trial", type=int, default=0)
    p.add_argument("--max-delay-s", type=float, default=None, dest="max_delay_s")
    p.add_argument("--max-doppler-hz", type=float, default=None, dest="max_doppler_hz")
    p.add_argument("--db-floor", type=float, default=-60.0, dest="db_floor")
    add_server(p)
    p.set_defaults(func=_cmd_af)

    p = sub.add_parser("sweep", help="Monte Carlo RMSE/CRLB sweep; writes CSV (and JSON)")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--json", default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timing", action="store_true", help="record wall-clock in the seconds column")
    add_server(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE
    try:
        return args.func(args)
    except ServiceError as exc:
        print(f"error ({exc.kind}): {exc}", file=sys.stderr)
        return EXIT_NUMERIC if exc.kind == "numeric-limit" else EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
