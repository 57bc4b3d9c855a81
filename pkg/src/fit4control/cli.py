"""Command-line surface: one JSON config in, one JSON report out (plus CSV
series next to it).

Subcommands mirror the service endpoints (certify, scan, snake, homotopy,
blowup, simulate, search). By default the pipeline runs in-process; with
``--server`` the CLI is a thin HTTP client of a running service instance.
Exit codes: 0 success, 2 config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import pydantic

from .errors import ConfigError, NumericalError
from .pipeline import RUNNERS
from .reporting import canonical_json, csv_text, atomic_write_text

log = logging.getLogger("fit4control")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

#: the series written when --out names a .csv file directly
PRIMARY_SERIES = {
    "certify": "connectivity",
    "scan": "samples",
    "snake": "table",
    "homotopy": "path",
    "blowup": "convergence",
    "simulate": "trajectory",
    "search": "improvements",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fit4control",
        description="Certification and simulation toolkit for bilinear "
        "Schrodinger control systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in RUNNERS:
        p = sub.add_parser(name, help=f"run the {name} pipeline")
        p.add_argument("--config", type=Path, help="JSON config file")
        p.add_argument("--out", type=Path, help="output report path (.json) or series (.csv)")
        p.add_argument("--seed", type=int, help="override the config's seed")
        p.add_argument("--threads", type=int, help="worker threads (env FIT4CONTROL_THREADS)")
        p.add_argument("--verbose", action="store_true")
        p.add_argument("--server", help="base URL of a running service; run remotely")
        if name == "snake":
            p.add_argument("--d", type=int, help="dimension (alternative to --config)")
            p.add_argument("--count", type=int, help="number of entries")
    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--verbose", action="store_true")
    return parser


def _load_config(args) -> dict:
    if args.command == "snake" and args.config is None:
        if args.d is None or args.count is None:
            raise ConfigError("snake needs --config or both --d and --count")
        return {"dimension": args.d, "count": args.count}
    if args.config is None:
        raise ConfigError("--config is required")
    try:
        text = args.config.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc


def _resolve_threads(args) -> int | None:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("FIT4CONTROL_THREADS")
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"FIT4CONTROL_THREADS is not an integer: {env!r}") from exc
    return None


def _apply_overrides(config: dict, model_cls, args) -> dict:
    fields = model_cls.model_fields
    if args.seed is not None:
        if "seed" in fields:
            config = {**config, "seed": args.seed}
        else:
            log.info("--seed ignored: %s configs carry no seed", args.command)
    threads = _resolve_threads(args)
    if threads is not None:
        if "threads" in fields:
            config = {**config, "threads": threads}
        else:
            log.info("--threads ignored: %s runs single-threaded", args.command)
    return config


def _run_remote(server: str, command: str, config: dict) -> tuple[dict, dict]:
    import httpx

    url = server.rstrip("/") + "/" + command
    response = httpx.post(url, json=config, timeout=600.0)
    if response.status_code == 422:
        detail = response.json().get("detail")
        raise ConfigError(f"server rejected config: {detail}")
    if response.status_code >= 500:
        raise NumericalError(f"server failed: {response.text}")
    response.raise_for_status()
    report = response.json()
    series = report.pop("series", {})
    return report, series


def _write_outputs(command: str, report: dict, series: dict, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(canonical_json(report))
        return
    if out.suffix == ".csv":
        name = PRIMARY_SERIES[command]
        if name not in series:
            raise ConfigError(
                f"{command} produced no {name!r} series to write as CSV "
                "(add the relevant config fields or use a .json output)"
            )
        table = series[name]
        atomic_write_text(out, csv_text(table["rows"], table["header"]))
        return
    atomic_write_text(out, canonical_json(report))
    for name, table in series.items():
        path = out.with_name(f"{out.stem}.{name}.csv")
        atomic_write_text(path, csv_text(table["rows"], table["header"]))


def run_command(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK

    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )

    if args.command == "serve":
        import uvicorn

        from .service.app import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return EXIT_OK

    model_cls, runner = RUNNERS[args.command]
    try:
        config = _load_config(args)
        config = _apply_overrides(config, model_cls, args)
        try:
            request = model_cls.model_validate(config)
        except pydantic.ValidationError as exc:
            for err in exc.errors():
                loc = ".".join(str(p) for p in err["loc"]) or "<root>"
                log.error("config.%s: %s", loc, err["msg"])
                sys.stderr.write(f"config error at config.{loc}: {err['msg']}\n")
            return EXIT_CONFIG
        if args.server:
            report, series = _run_remote(args.server, args.command, config)
        else:
            report, series = runner(request)
        _write_outputs(args.command, report, series, args.out)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except NumericalError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERICAL
    if getattr(args, "out", None) is not None:
        log.info("wrote %s", args.out)
    return EXIT_OK


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
