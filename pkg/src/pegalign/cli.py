"""Command-line client for the alignment service.

Every subcommand talks to the HTTP API. By default the app is mounted
in-process (no server needed); pass ``--server http://host:port`` to use a
remote instance instead. File paths given to ``datagen`` are resolved on
the machine running the service.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import httpx


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    import warnings

    with warnings.catch_warnings():
        # the in-process transport reuses starlette's test client; its
        # packaging warnings are irrelevant to CLI users
        warnings.simplefilter("ignore", DeprecationWarning)
        from fastapi.testclient import TestClient

        from .service.app import create_app

        return TestClient(create_app())


def _post(client: httpx.Client, path: str, payload: dict) -> dict:
    resp = client.post(path, json=payload)
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", resp.text)
        except ValueError:
            detail = resp.text
        raise SystemExit(f"error: {detail}")
    return resp.json()


def _read_config(path: str | None) -> str | None:
    if path is None:
        return None
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SystemExit(f"error: cannot read config {path}: {exc}")


def _deterministic_report_json(envelope: dict) -> str:
    """Serialize with stable key order; the report section is byte-identical
    for identical seeds, meta carries the timestamp."""
    return json.dumps(envelope, indent=2, sort_keys=True) + "\n"


def cmd_bench(args) -> int:
    with _client(args.server) as client:
        payload = {
            "scenario": args.scenario,
            "method": args.method,
            "trials": args.trials,
            "seed": args.seed,
            "estimator": args.estimator,
            "config_text": _read_config(args.config),
        }
        envelope = _post(client, "/bench", payload)
        report = envelope["report"]
        for e in report["entries"]:
            mean = e["mean_success_time_s"]
            mean_s = "-" if mean is None else f"{mean:.2f} s"
            star = "*" if e["significant"] else " "
            print(f"{report['scenario']:>10} {e['method']:>18} "
                  f"{e['successes']:>4}/{e['trials']:<4} ({mean_s}){star}")
        if args.out:
            if args.format == "json":
                Path(args.out).write_text(_deterministic_report_json(envelope), encoding="utf-8")
            else:
                rendered = _post(client, "/report/render",
                                 {"reports": [report], "format": args.format})
                Path(args.out).write_text(rendered["content"], encoding="utf-8")
            print(f"wrote {args.out}")
    return 0


def cmd_servo_demo(args) -> int:
    with _client(args.server) as client:
        payload = {
            "scenario": args.scenario,
            "seed": args.seed,
            "estimator": args.estimator,
            "config_text": _read_config(args.config),
        }
        demo = _post(client, "/servo-demo", payload)
        print(f"scenario={demo['scenario']} seed={demo['seed']} status={demo['status']} "
              f"success={demo['success']} elapsed={demo['elapsed_s']:.3f}s "
              f"iterations={demo['iterations']} "
              f"final_planar_error={demo['final_planar_error_m'] * 1000.0:.3f}mm")
        if args.out:
            Path(args.out).write_text(demo["trace_csv"], encoding="utf-8")
            print(f"wrote {args.out}")
    return 0


def cmd_accuracy(args) -> int:
    with _client(args.server) as client:
        thresholds = [float(t) for t in args.thresholds.split(",") if t.strip()]
        payload = {
            "estimator": args.estimator,
            "samples": args.samples,
            "thresholds": thresholds,
            "seed": args.seed,
        }
        result = _post(client, "/accuracy", payload)
        for t, r in zip(result["thresholds"], result["success_rates"]):
            print(f"threshold {t:g} px: {100.0 * r:.2f}%")
        if args.out:
            Path(args.out).write_text(result["csv"], encoding="utf-8")
            print(f"wrote {args.out}")
    return 0


def cmd_datagen(args) -> int:
    with _client(args.server) as client:
        payload = {
            "input_dir": args.input,
            "output_dir": args.out_dir,
            "count": args.count,
            "seed": args.seed,
            "scenario": args.scenario,
        }
        summary = _post(client, "/datagen", payload)
        print(f"wrote {summary['written']} samples to {summary['output_dir']} "
              f"(annotations: {summary['annotations_file']})")
    return 0


def cmd_report(args) -> int:
    docs = []
    for path in args.input:
        with open(path, encoding="utf-8") as f:
            doc = json.load(f)
        docs.append(doc["report"] if "report" in doc else doc)
    with _client(args.server) as client:
        rendered = _post(client, "/report/render", {"reports": docs, "format": args.format})
    if args.out:
        Path(args.out).write_text(rendered["content"], encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print(rendered["content"], end="")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pegalign",
        description="Peg-in-hole alignment simulation and benchmarking")
    parser.add_argument("--server", default=None,
                        help="base URL of a running service (default: in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bench", help="run a Monte-Carlo benchmark and write a report")
    p.add_argument("--scenario", default=None, help="metal | plastic | wide | cap")
    p.add_argument("--method", default=None,
                   help="comma list of random, spiral, servo, servo_then_spiral, optimal")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--estimator", default=None, help="exact | synth | metal_on_plastic")
    p.add_argument("--config", default=None, help="INI config file path")
    p.add_argument("--out", default=None, help="report output path")
    p.add_argument("--format", default="json", choices=("json", "csv"))
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("servo-demo", help="run one traced servo trial")
    p.add_argument("--scenario", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--estimator", default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--out", default=None, help="trace CSV output path")
    p.set_defaults(func=cmd_servo_demo)

    p = sub.add_parser("accuracy", help="estimator detection-rate curve")
    p.add_argument("--estimator", default="synth")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--thresholds", default="1,2,4,8", help="comma list of pixel thresholds")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="CSV output path")
    p.set_defaults(func=cmd_accuracy)

    p = sub.add_parser("datagen", help="composite/augment a directory of images")
    p.add_argument("--input", required=True, help="directory of source images")
    p.add_argument("--out-dir", required=True, help="output directory")
    p.add_argument("--count", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scenario", default=None)
    p.set_defaults(func=cmd_datagen)

    p = sub.add_parser("report", help="re-render report JSON as CSV or a markdown table")
    p.add_argument("--input", nargs="+", required=True, help="report JSON file(s)")
    p.add_argument("--format", default="markdown", choices=("csv", "markdown"))
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
