"""Command-line client for the experiment service.

One subcommand per experiment family plus ``report`` and ``serve``.  The
client always talks HTTP request/response models: against a remote service
when --base-url is given, otherwise against an in-process instance of the
app.  Exit code 0 means every contract row passed.

Config files are plain key = value lines (JSON-parsed values, # comments);
positional key=value arguments override them.  The keys seed, out, format,
count and kind are routed to the config; everything else is an experiment
parameter.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Any

from .experiments import (
    FAMILIES,
    CorpusSpec,
    ExperimentConfig,
    ExperimentReport,
    ReportRow,
    experiment_names,
    read_report,
    write_report,
)

RESERVED_KEYS = {"seed", "out", "format", "count", "kind", "experiment"}


def _parse_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def parse_config_file(path: str) -> dict[str, Any]:
    out: dict[str, Any] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, raw = line.split("=", 1)
            out[key.strip()] = _parse_value(raw.strip())
    return out


def _merge_options(args) -> dict[str, Any]:
    options: dict[str, Any] = {}
    if args.config:
        options.update(parse_config_file(args.config))
    for item in args.overrides:
        if "=" not in item:
            raise ValueError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        options[key.strip()] = _parse_value(raw.strip())
    if args.seed is not None:
        options["seed"] = args.seed
    if args.out is not None:
        options["out"] = args.out
    if args.format is not None:
        options["format"] = args.format
    return options


def _make_client(base_url: str | None):
    if base_url:
        import httpx

        return httpx.Client(base_url=base_url, timeout=600.0)
    import warnings

    with warnings.catch_warnings():
        # starlette's shim warning is not a DeprecationWarning subclass
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

    from .service import create_app

    return TestClient(create_app())


def _run_family(family: str, args) -> int:
    options = _merge_options(args)
    names = FAMILIES[family]
    if args.experiment:
        if args.experiment not in names:
            print(f"error: {args.experiment!r} is not in family {family!r} "
                  f"(members: {', '.join(names)})", file=sys.stderr)
            return 2
        names = [args.experiment]
    seed = int(options.pop("seed", 0))
    out = options.pop("out", None)
    fmt = options.pop("format", "csv")
    corpus_kw = {}
    if "count" in options:
        corpus_kw["count"] = int(options.pop("count"))
    if "kind" in options:
        corpus_kw["kind"] = options.pop("kind")
    options.pop("experiment", None)

    all_rows: list[ReportRow] = []
    ok = True
    with _make_client(args.base_url) as client:
        for name in names:
            payload = {
                "experiment": name,
                "params": options,
                "corpus": CorpusSpec(**corpus_kw).model_dump(),
                "seed": seed,
            }
            resp = client.post("/experiments/run", json=payload)
            if resp.status_code != 200:
                detail = resp.json().get("detail", resp.text)
                print(f"error: {name}: {detail}", file=sys.stderr)
                return 2
            body = resp.json()
            rows = [ReportRow(**row) for row in body["rows"]]
            all_rows.extend(rows)
            ok &= body["passed"]
            n_pass = sum(r.status == "pass" for r in rows)
            n_fail = sum(r.status == "fail" for r in rows)
            n_rec = sum(r.status == "record" for r in rows)
            print(f"{name}: {n_pass} pass, {n_fail} fail, {n_rec} recorded "
                  f"({body['wall_time_s']:.2f}s)")
            for row in rows:
                if row.status == "fail":
                    print(f"  FAIL {row.statistic} {row.params} -> {row.value}")
    report = ExperimentReport(rows=all_rows, seed=seed, version=_service_version())
    if out:
        write_report(report, out, fmt)
        print(f"wrote {out}")
    return 0 if ok else 1


def _service_version() -> str:
    from .version import VERSION

    return VERSION


def _cmd_report(args) -> int:
    report = read_report(args.path)
    n_pass = sum(r.status == "pass" for r in report.rows)
    n_fail = sum(r.status == "fail" for r in report.rows)
    n_rec = sum(r.status == "record" for r in report.rows)
    print(f"{args.path}: {len(report.rows)} rows; "
          f"{n_pass} pass, {n_fail} fail, {n_rec} recorded")
    for row in report.rows:
        if row.status == "fail":
            print(f"  FAIL {row.experiment} {row.statistic} {row.params} -> {row.value}")
    if args.statistic:
        values = [r.value for r in report.rows if r.statistic == args.statistic]
        if values:
            from .experiments import estimate_constant

            summary = estimate_constant(values)
            print(f"{args.statistic}: max={summary['max']:.6g} "
                  f"p95={summary['p95']:.6g} "
                  f"dispersion={summary['last_quartile_dispersion']:.3%}")
        else:
            print(f"no rows with statistic {args.statistic!r}")
    return 0 if n_fail == 0 else 1


def _cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("vqlab.service:app", host=args.host, port=args.port)
    return 0


def _cmd_list(args) -> int:
    for family, names in FAMILIES.items():
        print(f"{family}: {', '.join(names)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vqlab",
        description="q-variation laboratory: experiment families over HTTP",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for family, names in FAMILIES.items():
        p = sub.add_parser(family, help=f"run experiments: {', '.join(names)}")
        p.add_argument("--experiment", choices=names, default=None,
                       help="run a single experiment of this family")
        p.add_argument("--config", default=None, help="key = value config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="report output path")
        p.add_argument("--format", choices=["csv", "json"], default=None)
        p.add_argument("--base-url", default=None,
                       help="remote service URL (default: run in-process)")
        p.add_argument("overrides", nargs="*", metavar="key=value",
                       help="experiment parameter overrides")
        p.set_defaults(func=lambda a, fam=family: _run_family(fam, a))

    p = sub.add_parser("report", help="summarize a report file; exit 1 on failures")
    p.add_argument("path")
    p.add_argument("--statistic", default=None,
                   help="summarize one statistic (max, p95, dispersion)")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("list", help="list experiment families and members")
    p.set_defaults(func=_cmd_list)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
