"""Command line for the device simulator.

    sim generate --scenario fall-forward --seed 7 -o fall.trace
    sim run fall.trace --gateway 127.0.0.1:7470 --speed 100
    sim eval --corpus traces/ --threshold 1.4
    sim scenarios

Exit code 0 on success, nonzero on any error; metrics and reports print as
key=value lines.
"""

from __future__ import annotations

import argparse
import sys

from . import evaluate, runner, scenarios, trace


def _parse_gateway(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not host:
        raise argparse.ArgumentTypeError("gateway must be host:port")
    try:
        return host, int(port)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad port in {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sim", description="Wearer-device simulator: generate, replay, and score traces."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="render a scenario to a trace file")
    gen.add_argument("--scenario", required=True, help="scenario name (see `sim scenarios`)")
    gen.add_argument("--seed", type=int, default=1)
    gen.add_argument("-o", "--output", required=True, help="trace file to write")

    run_cmd = sub.add_parser("run", help="stream a trace to a gateway")
    run_cmd.add_argument("trace", help="trace file to play")
    run_cmd.add_argument("--gateway", required=True, type=_parse_gateway, help="host:port")
    run_cmd.add_argument("--speed", type=float, default=1.0, help="clock multiplier")
    run_cmd.add_argument(
        "--linger-ms", type=int, default=runner.LINGER_MS,
        help="simulated ms to keep listening after the last row",
    )

    ev = sub.add_parser("eval", help="score the fall detector over a labeled corpus")
    ev.add_argument("--corpus", required=True, help="directory of *.trace files")
    ev.add_argument("--threshold", type=float, default=1.4, help="RMS threshold in g")

    sub.add_parser("scenarios", help="list scenario names")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "generate":
            scenario = scenarios.build(args.scenario, args.seed)
            generated = scenarios.generate(scenario)
            trace.write_trace(generated, args.output)
            print(f"output={args.output}")
            print(f"rows={len(generated.rows)}")
            return 0
        if args.command == "run":
            loaded = trace.read_trace(args.trace)
            host, port = args.gateway
            report = runner.run(
                loaded, host, port, speed=args.speed, linger_ms=args.linger_ms
            )
            for line in report.lines():
                print(line)
            return 0 if report.error is None else 1
        if args.command == "eval":
            metrics = evaluate.evaluate_directory(args.corpus, args.threshold)
            for line in metrics.lines():
                print(line)
            return 0
        if args.command == "scenarios":
            for name in scenarios.SCENARIO_NAMES:
                print(name)
            return 0
    except (scenarios.UnknownScenario, trace.TraceError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
