"""Command line entry points.

Subcommands:

  serve         run a TCP match server
  bot-match     play one scripted bot-vs-bot match, optionally record it
  export-tests  turn recorded matches into a regression test suite
  eval-suite    score an exported suite against script mutants
  mutate        enumerate mutants of a rule script

Each command works on plain text files so the artifacts can be diffed,
versioned and inspected without this package.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import assertions as asrt
from .bots import run_bot_match
from .engine import default_level, default_script, parse_level, serialize_trace
from .errors import MutantDuelError
from .match import MatchConfig, parse_config
from .mutation import apply as apply_mutant
from .mutation import enumerate_mutants, select_round_mutants
from .policy import TrainConfig, train_policy
from .rng import derive_seed
from .rules import parse_script, script_hash
from .server import MatchServer
from .store import load_harvest, write_record
from .synthesis import (dedup_assertions, parse_static_test, run_suite,
                        synthesize_static)

log = logging.getLogger(__name__)


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _load_script(path: str | None):
    return parse_script(_read(path)) if path else default_script()


def _load_level(path: str | None):
    return parse_level(_read(path)) if path else default_level()


def _load_config(path: str | None) -> MatchConfig:
    return parse_config(_read(path)) if path else MatchConfig()


def _cmd_serve(args) -> int:
    config = _load_config(args.config)
    script = _load_script(args.script)
    level = _load_level(args.level)
    with MatchServer(host=args.host, port=args.port, config=config,
                     script=script, level=level, server_seed=args.seed,
                     store_dir=args.store) as srv:
        print(f"listening on {srv.host}:{srv.port}", flush=True)
        try:
            srv.wait()
        except KeyboardInterrupt:
            print("shutting down", file=sys.stderr)
    return 0


def _cmd_bot_match(args) -> int:
    config = _load_config(args.config)
    script = _load_script(args.script)
    level = _load_level(args.level)
    bots = tuple(args.bots.split(","))
    if len(bots) != 2:
        raise MutantDuelError(f"--bots wants two comma-separated names, "
                              f"got {args.bots!r}")
    match, log_lines = run_bot_match(config, bots=bots, match_seed=args.seed,
                                     script=script, level=level,
                                     max_rounds=args.max_rounds)
    if args.out:
        match_id = args.match_id or f"bot{args.seed:04d}"
        labels = {"player0": bots[0], "player1": bots[1]}
        write_record(args.out, match_id, match, log_lines, labels=labels)
    outcome = "draw" if match.drawn else f"winner={match.winner}"
    print(f"seed={args.seed} rounds={match.round} {outcome} "
          f"hash={match.state_hash()}")
    return 0


def _cmd_export_tests(args) -> int:
    script = _load_script(args.script)
    level = _load_level(args.level)
    traces, assertions, provenance = load_harvest(args.store)
    if not traces:
        print("store holds no harvested playthroughs", file=sys.stderr)
        return 1
    assertions = dedup_assertions(assertions)
    tests = synthesize_static(traces, assertions, script,
                              threshold=args.threshold,
                              provenance=provenance)
    os.makedirs(args.out, exist_ok=True)
    for i, test in enumerate(tests):
        with open(os.path.join(args.out, f"static_{i:04d}.txt"), "w",
                  encoding="utf-8") as fh:
            fh.write(test.text())
    trained = 0
    if not args.no_policies:
        sids = sorted(s.sid for s in script.statements)
        hyper = TrainConfig()
        for sid in sids:
            covering = [t for t in traces if sid in t.covered_ids()]
            if len(covering) < args.min_traces:
                continue
            try:
                net = train_policy(covering, sid, hyper=hyper, level=level)
            except MutantDuelError as exc:
                log.info("skipping policy for statement %d: %s", sid, exc)
                continue
            with open(os.path.join(args.out, f"policy_{sid:02d}.txt"), "w",
                      encoding="utf-8") as fh:
                fh.write(net.text())
            trained += 1
    print(f"traces={len(traces)} assertions={len(assertions)} "
          f"static={len(tests)} policies={trained}")
    return 0


def _cmd_eval_suite(args) -> int:
    script = _load_script(args.script)
    tests = []
    for name in sorted(os.listdir(args.tests)):
        if not (name.startswith("static_") and name.endswith(".txt")):
            continue
        path = os.path.join(args.tests, name)
        tests.append(parse_static_test(_read(path), name[:-4]))
    if args.mutants == "all":
        mutants = enumerate_mutants(script)
    else:
        seed = derive_seed(args.seed, "round", 1)
        mutants = select_round_mutants(script, int(args.mutants), seed)
    pool = ([None] + list(mutants)) if args.control else list(mutants)
    report = run_suite(tests, pool, script)
    sys.stdout.write(report.text())
    return 0


def _cmd_mutate(args) -> int:
    script = _load_script(args.script)
    mutants = enumerate_mutants(script)
    if args.apply is not None:
        by_mid = {m.mid: m for m in mutants}
        if args.apply not in by_mid:
            raise MutantDuelError(f"no mutant with id {args.apply}")
        sys.stdout.write(apply_mutant(script, by_mid[args.apply]).text())
        return 0
    print(f"script {script_hash(script)[:12]} yields {len(mutants)} mutants")
    for m in mutants:
        print(m.descriptor())
    return 0


def _cmd_replay(args) -> int:
    from .engine import Action, replay
    script = _load_script(args.script)
    actions = [Action[a.capitalize()] for a in args.actions.split()]
    trace = replay(script, args.seed, actions)
    sys.stdout.write(serialize_trace(trace))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mutantduel",
        description="two-player mutation-testing duel over a shared game")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--script", help="rule script file (default: built-in)")
        p.add_argument("--level", help="level layout file (default: built-in)")

    p = sub.add_parser("serve", help="run a TCP match server")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=7700)
    p.add_argument("--seed", type=int, default=0, help="server seed")
    p.add_argument("--config", help="match config file")
    p.add_argument("--store", help="directory for finished match records")
    common(p)
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("bot-match", help="play one bot-vs-bot match")
    p.add_argument("--seed", type=int, default=0, help="match seed")
    p.add_argument("--bots", default="greedy,greedy",
                   help="two comma-separated bot names (greedy or random)")
    p.add_argument("--max-rounds", type=int, default=60)
    p.add_argument("--config", help="match config file")
    p.add_argument("--out", help="store directory to record the match in")
    p.add_argument("--match-id", help="record id (default bot<seed>)")
    common(p)
    p.set_defaults(func=_cmd_bot_match)

    p = sub.add_parser("export-tests",
                       help="synthesize a test suite from recorded matches")
    p.add_argument("--store", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threshold", type=int,
                   help="trace dedup distance (default: adaptive)")
    p.add_argument("--min-traces", type=int, default=3,
                   help="coverage needed before a policy is trained")
    p.add_argument("--no-policies", action="store_true")
    common(p)
    p.set_defaults(func=_cmd_export_tests)

    p = sub.add_parser("eval-suite", help="score a suite against mutants")
    p.add_argument("--tests", required=True, help="directory of static tests")
    p.add_argument("--mutants", default="all",
                   help="'all' or a per-round sample size")
    p.add_argument("--seed", type=int, default=0,
                   help="sampling seed when --mutants is a number")
    p.add_argument("--control", action="store_true",
                   help="include the unmutated script as a control row")
    common(p)
    p.set_defaults(func=_cmd_eval_suite)

    p = sub.add_parser("mutate", help="enumerate mutants of a script")
    p.add_argument("--apply", type=int, metavar="MID",
                   help="print the script with this mutant applied")
    common(p)
    p.set_defaults(func=_cmd_mutate)

    p = sub.add_parser("replay", help="replay actions and print the trace")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("actions", help="space-separated actions, e.g. "
                                   "'Right Right Jump'")
    common(p)
    p.set_defaults(func=_cmd_replay)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s",
                        stream=sys.stderr)
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MutantDuelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
