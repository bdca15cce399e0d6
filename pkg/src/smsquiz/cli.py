"""Operator command line: run the service, inspect banks and statistics,
replay conformance transcripts, run simulated learners, and export data."""

from __future__ import annotations

import argparse
import os
import signal
import sys

from . import fuzzy, harness
from .gateway import Gateway, ServiceRunner, make_http_server
from .session import Engine, SessionConfig
from .tables import NotFound, ParseError, load_store, parse_bank

DEFAULT_PORT = 8470
DEFAULT_DRAIN_RATE = 1.0


def _env_float(name: str, fallback: float) -> float:
    value = os.environ.get(name)
    return float(value) if value else fallback


def _env_int(name: str, fallback: int) -> int:
    value = os.environ.get(name)
    return int(value) if value else fallback


def _load_fuzzy(path: str | None) -> fuzzy.FuzzySystem:
    return fuzzy.load_system(path) if path else fuzzy.default_system()


def cmd_serve(args) -> int:
    store = load_store(args.state_dir, args.bank)
    config = SessionConfig(
        adaptation_threshold=args.threshold,
        idle_timeout_seconds=args.idle_timeout,
        sweep_interval_seconds=args.sweep_interval,
        rng_seed=args.seed,
    )
    engine = Engine(store, config, _load_fuzzy(args.fuzzy_config))
    gateway = Gateway(store, drain_rate=args.drain_rate)
    runner = ServiceRunner(store, engine, gateway)
    server = make_http_server(runner, args.host, args.port)
    runner.start()

    import threading

    def _stop(signum, frame):
        # shutdown() blocks until serve_forever returns, so hop threads
        threading.Thread(target=server.shutdown, daemon=True).start()

    signal.signal(signal.SIGINT, _stop)
    signal.signal(signal.SIGTERM, _stop)
    print(
        f"listening on http://{args.host}:{server.server_port} "
        f"(drain {args.drain_rate:g}/s, {len(store.questions)} questions, "
        f"{len(store.topics)} topics)",
        flush=True,
    )
    try:
        server.serve_forever()
    finally:
        runner.stop()
        server.server_close()
        store.save()
        print("checkpointed state, bye", flush=True)
    return 0


def cmd_load_bank(args) -> int:
    topics, questions = parse_bank(args.file)
    counts: dict[tuple[int, int], int] = {}
    for q in questions.values():
        counts[(q.topic_id, q.level)] = counts.get((q.topic_id, q.level), 0) + 1
    for topic in topics.values():
        levels = " ".join(
            f"L{level}={n}"
            for (tid, level), n in sorted(counts.items())
            if tid == topic.topic_id
        )
        print(f"topic {topic.topic_id} {topic.name}: {levels}")
    print(f"{len(questions)} questions, {len(topics)} topics")
    return 0


def cmd_stats(args) -> int:
    store = load_store(args.state_dir, args.bank)
    rows = sorted(store.player_level.values(), key=lambda s: (s.phone_no, s.player_id, s.topic_id, s.level))
    for stat in rows:
        if args.phone and stat.phone_no != args.phone:
            continue
        if args.player and stat.player_id != args.player:
            continue
        pct = 100.0 * stat.total_correct / stat.total_asked if stat.total_asked else 0.0
        print(
            f"{stat.phone_no} {stat.player_id} topic={stat.topic_id} "
            f"level={stat.level} asked={stat.total_asked} "
            f"correct={stat.total_correct} pct={pct:.1f}"
        )
    return 0


def cmd_replay(args) -> int:
    try:
        harness.replay(args.file, args.bank, seed=args.seed)
    except harness.Mismatch as exc:
        print(f"FAIL {args.file}: {exc}")
        return 1
    print(f"PASS {args.file}")
    return 0


def cmd_simulate(args) -> int:
    summaries = harness.simulate(
        args.file, args.bank, seed=args.seed, state_dir=args.state_dir
    )
    for summary in summaries:
        print(summary.format())
    return 0


def cmd_curve(args) -> int:
    store = load_store(args.state_dir, args.bank)
    if not any(
        p.player_id == args.player and p.phone_no == args.phone
        for p in store.players.values()
    ):
        print(f"error: no player {args.player} on {args.phone}", file=sys.stderr)
        return 1
    print("block,pct_correct")
    for block, pct in store.learning_curve(args.phone, args.player, args.topic, args.window):
        print(f"{block},{pct:.1f}")
    return 0


def cmd_export_surface(args) -> int:
    name, sep, value = args.fix.partition("=")
    if not sep:
        print("error: --fix expects <input>=<value>", file=sys.stderr)
        return 1
    system = _load_fuzzy(args.fuzzy_config)
    try:
        csv = fuzzy.surface_csv(system, name, float(value), resolution=args.resolution)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(csv)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smsquiz", description="adaptive SMS quiz service"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the gateway and session loop")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument(
        "--port", type=int, default=_env_int("MUATS_PORT", DEFAULT_PORT)
    )
    serve.add_argument(
        "--drain-rate",
        type=float,
        default=_env_float("MUATS_DRAIN_RATE", DEFAULT_DRAIN_RATE),
        help="outbound messages per second",
    )
    serve.add_argument("--state-dir", default="state")
    serve.add_argument("--bank", required=True)
    serve.add_argument("--seed", type=int, default=None)
    serve.add_argument("--threshold", type=int, default=10)
    serve.add_argument("--idle-timeout", type=float, default=600.0)
    serve.add_argument("--sweep-interval", type=float, default=60.0)
    serve.add_argument("--fuzzy-config", default=None)
    serve.set_defaults(func=cmd_serve)

    load_bank = sub.add_parser("load-bank", help="validate a question bank file")
    load_bank.add_argument("file")
    load_bank.set_defaults(func=cmd_load_bank)

    stats = sub.add_parser("stats", help="print per-level statistics")
    stats.add_argument("--state-dir", required=True)
    stats.add_argument("--bank", required=True)
    stats.add_argument("--phone", default=None)
    stats.add_argument("--player", default=None)
    stats.set_defaults(func=cmd_stats)

    replay_cmd = sub.add_parser("replay", help="replay a conformance transcript")
    replay_cmd.add_argument("file")
    replay_cmd.add_argument("--bank", default="banks/demo.bank")
    replay_cmd.add_argument("--seed", type=int, default=0)
    replay_cmd.set_defaults(func=cmd_replay)

    sim = sub.add_parser("simulate", help="run simulated learners")
    sim.add_argument("file", help="JSON learner profiles")
    sim.add_argument("--bank", default="banks/demo.bank")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--state-dir", default=None)
    sim.set_defaults(func=cmd_simulate)

    curve = sub.add_parser("curve", help="learning curve CSV for one player")
    curve.add_argument("--state-dir", required=True)
    curve.add_argument("--bank", required=True)
    curve.add_argument("--phone", required=True)
    curve.add_argument("--player", required=True)
    curve.add_argument("--topic", type=int, required=True)
    curve.add_argument("--window", type=int, default=10)
    curve.set_defaults(func=cmd_curve)

    surface = sub.add_parser("export-surface", help="controller surface CSV")
    surface.add_argument("--fix", required=True, metavar="INPUT=VALUE")
    surface.add_argument("--resolution", type=int, default=21)
    surface.add_argument("--fuzzy-config", default=None)
    surface.set_defaults(func=cmd_export_surface)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NotFound as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
