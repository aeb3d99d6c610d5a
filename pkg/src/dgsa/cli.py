"""Command-line client of the analysis service.

The CLI owns only file I/O and rendering: it parses the flat config format,
sends a request through the HTTP API (an in-process application instance by
default, or a remote server with ``--server``), and writes the CSV/JSON
reports.

Exit codes: 0 success, 2 configuration error, 3 numeric degeneracy
(zero-variance model).
"""

from __future__ import annotations

import argparse
import asyncio
import csv
import json
import sys
from typing import Optional

import httpx

from .config import load_config
from .errors import ConfigError
from .runner import CONVERGENCE_COLUMNS, CSV_COLUMNS

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DEGENERATE = 3


class ServiceClient:
    """Requests against a remote server or an in-process application."""

    def __init__(self, server: Optional[str] = None):
        self.server = server

    def request(self, method: str, path: str, **kwargs) -> httpx.Response:
        if self.server is not None:
            with httpx.Client(base_url=self.server, timeout=None) as client:
                return client.request(method, path, **kwargs)

        from .service.app import app

        async def go() -> httpx.Response:
            transport = httpx.ASGITransport(app=app)
            async with httpx.AsyncClient(
                transport=transport, base_url="http://dgsa.local", timeout=None
            ) as client:
                return await client.request(method, path, **kwargs)

        return asyncio.run(go())


def _format_number(value) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return format(float(value), ".17g")


def _write_csv(path: str, columns, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_number(row.get(c)) if c not in ("input", "n") else row.get(c) for c in columns])


def _write_json(path: str, document: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(document, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _fail_from_response(response: httpx.Response) -> int:
    try:
        payload = response.json()
    except ValueError:
        payload = {}
    error = payload.get("error")
    if error:
        key = f" [{error['key']}]" if error.get("key") else ""
        print(f"error ({error['kind']}){key}: {error['message']}", file=sys.stderr)
        return EXIT_DEGENERATE if error["kind"] == "degenerate" else EXIT_CONFIG
    # pydantic request validation or other client errors count as config errors
    detail = payload.get("detail", response.text)
    print(f"error (http {response.status_code}): {detail}", file=sys.stderr)
    return EXIT_CONFIG if 400 <= response.status_code < 500 else 1


def _cmd_analyze(args) -> int:
    cfg = load_config(args.config)
    if args.oracle and "oracle" not in cfg.analyses:
        cfg.analyses.append("oracle")

    from .service.schemas import config_to_request

    request = config_to_request(cfg)
    response = ServiceClient(args.server).request(
        "POST", "/analyze", json=request.model_dump(mode="json")
    )
    if response.status_code != 200:
        return _fail_from_response(response)
    report = response.json()

    written = []
    if "csv" in cfg.output_formats:
        path = f"{cfg.output_path}.csv"
        _write_csv(path, CSV_COLUMNS, report["rows"])
        written.append(path)
    if "json" in cfg.output_formats:
        path = f"{cfg.output_path}.json"
        _write_json(path, report)
        written.append(path)
    for path in written:
        print(path)
    return EXIT_OK


def _cmd_convergence(args) -> int:
    cfg = load_config(args.config)

    from .service.schemas import config_to_request

    payload = {
        "config": config_to_request(cfg).model_dump(mode="json"),
        "n_list": args.n,
    }
    response = ServiceClient(args.server).request("POST", "/convergence", json=payload)
    if response.status_code != 200:
        return _fail_from_response(response)
    report = response.json()

    path = f"{cfg.output_path}_convergence.csv"
    _write_csv(path, CONVERGENCE_COLUMNS, report["rows"])
    print(path)
    if "json" in cfg.output_formats:
        json_path = f"{cfg.output_path}_convergence.json"
        _write_json(json_path, report)
        print(json_path)
    return EXIT_OK


def _cmd_poincare(args) -> int:
    spec = " ".join(args.spec)
    response = ServiceClient(args.server).request("GET", "/poincare", params={"spec": spec})
    if response.status_code != 200:
        return _fail_from_response(response)
    print(_format_number(response.json()["constant"]))
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("dgsa.service.app:app", host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dgsa",
        description="Derivative-based global sensitivity analysis: estimate DGSM, "
        "Sobol' indices, screening measures, and total-index bounds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_analyze = sub.add_parser("analyze", help="run the analyses in a config file")
    p_analyze.add_argument("config", help="path to the flat key/value config")
    p_analyze.add_argument("--server", help="base URL of a running service (default: in-process)")
    p_analyze.add_argument(
        "--oracle", action="store_true", help="add quadrature reference columns (d <= 4)"
    )
    p_analyze.set_defaults(func=_cmd_analyze)

    p_conv = sub.add_parser(
        "convergence", help="upper-bound estimates for a ladder of sample sizes"
    )
    p_conv.add_argument("config", help="path to the flat key/value config")
    p_conv.add_argument(
        "--n", type=int, nargs="+", required=True, help="ascending sample sizes"
    )
    p_conv.add_argument("--server", help="base URL of a running service (default: in-process)")
    p_conv.set_defaults(func=_cmd_convergence)

    p_poin = sub.add_parser("poincare", help="print the spectral-gap constant of a marginal")
    p_poin.add_argument("spec", nargs="+", help="marginal spec, e.g.: uniform 0 1")
    p_poin.add_argument("--server", help="base URL of a running service (default: in-process)")
    p_poin.set_defaults(func=_cmd_poincare)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error (config) [{exc.key}]: {exc.message}", file=sys.stderr)
        return EXIT_CONFIG
    except httpx.HTTPError as exc:
        print(f"error (transport): {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
