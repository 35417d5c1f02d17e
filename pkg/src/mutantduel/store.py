"""Append-only flat-file records of finished matches.

Each match gets one directory under the store root:

    <root>/<match_id>/
        meta.txt         match id, seed, free-form labels
        config.txt       the MatchConfig
        script.txt       rule script the match ran
        level.txt        level layout
        commands.log     every accepted command, in order
        final_state.txt  canonical state text at the end
        state_hash.txt   sha256 of final_state.txt's content
        harvest/         winner's traces and assertions, if any

Records are never rewritten; writing an id twice is an error.  The
stored command log replays through the match engine to the stored
final state, and verify_record checks exactly that.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace as dc_replace

from . import assertions as asrt
from .engine import (LevelLayout, Trace, parse_level, parse_trace,
                     serialize_level, serialize_trace)
from .errors import StoreError
from .match import (Match, MatchConfig, Phase, parse_config, replay_commands)
from .rules import RuleScript, parse_script
from .synthesis import harvest

STORE_ENV_VAR = "MUTANTDUEL_STORE"

_REQUIRED = ("meta.txt", "config.txt", "script.txt", "level.txt",
             "commands.log", "final_state.txt", "state_hash.txt")


@dataclass(frozen=True)
class StoreRecord:
    match_id: str
    match_seed: int
    labels: dict[str, str]
    config: MatchConfig
    script_text: str
    level: LevelLayout
    commands: tuple[str, ...]
    final_state: str
    state_hash: str
    traces: tuple[Trace, ...]
    assertions: tuple[asrt.Assertion, ...]


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except FileNotFoundError:
        raise StoreError(f"missing store file {path}") from None


def write_record(root: str, match_id: str, match: Match, commands,
                 labels: dict[str, str] | None = None) -> str:
    """Persist a finished match; returns the record directory."""
    if match.phase is not Phase.FINISHED:
        raise StoreError("only finished matches are recorded")
    if "/" in match_id or match_id in ("", ".", ".."):
        raise StoreError(f"bad match id {match_id!r}")
    rec_dir = os.path.join(root, match_id)
    if os.path.exists(rec_dir):
        raise StoreError(f"record {match_id!r} already exists; "
                         "the store is append-only")
    os.makedirs(os.path.join(rec_dir, "harvest"))
    meta = [f"match_id\t{match_id}", f"match_seed\t{match.match_seed}"]
    for key in sorted(labels or {}):
        meta.append(f"label\t{key}\t{labels[key]}")
    _write(os.path.join(rec_dir, "meta.txt"),
           "".join(line + "\n" for line in meta))
    _write(os.path.join(rec_dir, "config.txt"), match.config.text())
    _write(os.path.join(rec_dir, "script.txt"), match.script.text())
    _write(os.path.join(rec_dir, "level.txt"), serialize_level(match.level))
    _write(os.path.join(rec_dir, "commands.log"),
           "".join(line + "\n" for line in commands))
    _write(os.path.join(rec_dir, "final_state.txt"), match.state_text())
    _write(os.path.join(rec_dir, "state_hash.txt"), match.state_hash() + "\n")
    traces, assertions = harvest(match)
    for i, t in enumerate(traces):
        _write(os.path.join(rec_dir, "harvest", f"trace_{i}.txt"),
               serialize_trace(t))
    lines = [f"{a.owner or '-'}\t{a.source_trace or '-'}\t{asrt.serialize(a)}"
             for a in assertions]
    _write(os.path.join(rec_dir, "harvest", "assertions.txt"),
           "".join(line + "\n" for line in lines))
    return rec_dir


def list_matches(root: str) -> list[str]:
    if not os.path.isdir(root):
        raise StoreError(f"no store directory {root!r}")
    return sorted(name for name in os.listdir(root)
                  if os.path.isdir(os.path.join(root, name)))


def read_record(root: str, match_id: str) -> StoreRecord:
    rec_dir = os.path.join(root, match_id)
    if not os.path.isdir(rec_dir):
        raise StoreError(f"no record {match_id!r} under {root!r}")
    for name in _REQUIRED:
        if not os.path.isfile(os.path.join(rec_dir, name)):
            raise StoreError(f"record {match_id!r} is missing {name}")
    match_seed = None
    labels: dict[str, str] = {}
    for ln in _read(os.path.join(rec_dir, "meta.txt")).splitlines():
        parts = ln.split("\t")
        if parts[0] == "match_seed":
            match_seed = int(parts[1])
        elif parts[0] == "label":
            labels[parts[1]] = parts[2]
    if match_seed is None:
        raise StoreError(f"record {match_id!r} has no match_seed in meta.txt")
    config = parse_config(_read(os.path.join(rec_dir, "config.txt")))
    script_text = _read(os.path.join(rec_dir, "script.txt"))
    level = parse_level(_read(os.path.join(rec_dir, "level.txt")))
    commands = tuple(ln for ln in
                     _read(os.path.join(rec_dir, "commands.log")).splitlines()
                     if ln)
    final_state = _read(os.path.join(rec_dir, "final_state.txt"))
    state_hash = _read(os.path.join(rec_dir, "state_hash.txt")).strip()
    traces = []
    i = 0
    while True:
        path = os.path.join(rec_dir, "harvest", f"trace_{i}.txt")
        if not os.path.isfile(path):
            break
        traces.append(parse_trace(_read(path)))
        i += 1
    assertions = []
    apath = os.path.join(rec_dir, "harvest", "assertions.txt")
    if os.path.isfile(apath):
        for ln in _read(apath).splitlines():
            if not ln:
                continue
            owner, src, text = ln.split("\t", 2)
            assertions.append(asrt.parse(
                text,
                owner=None if owner == "-" else owner,
                source_trace=None if src == "-" else src))
    return StoreRecord(match_id, match_seed, labels, config, script_text,
                       level, commands, final_state, state_hash,
                       tuple(traces), tuple(assertions))


def verify_record(root: str, match_id: str) -> None:
    """Replay the command log and compare against the stored final state.

    Raises StoreError on any divergence; returning means the record is
    internally consistent, harvest included.
    """
    rec = read_record(root, match_id)
    try:
        script = parse_script(rec.script_text)
        rebuilt = replay_commands(rec.config, rec.commands, script,
                                  rec.level, rec.match_seed)
    except Exception as exc:
        raise StoreError(
            f"record {match_id!r} does not replay: {exc}") from exc
    if rebuilt.state_text() != rec.final_state:
        raise StoreError(f"record {match_id!r} final state diverges "
                         "from its command log")
    if rebuilt.state_hash() != rec.state_hash:
        raise StoreError(f"record {match_id!r} state hash diverges")
    got_traces, got_asserts = harvest(rebuilt)
    if [serialize_trace(t) for t in got_traces] != \
            [serialize_trace(t) for t in rec.traces]:
        raise StoreError(f"record {match_id!r} harvest traces diverge")
    if [asrt.serialize(a) for a in got_asserts] != \
            [asrt.serialize(a) for a in rec.assertions]:
        raise StoreError(f"record {match_id!r} harvest assertions diverge")


def load_harvest(root: str) -> tuple[list[Trace], list[asrt.Assertion], list[str]]:
    """All harvested material across the store, ready for synthesis.

    Assertion source_trace indices are rebased onto the combined trace
    list.  The third element labels each trace with its origin, for
    test provenance.
    """
    traces: list[Trace] = []
    assertions: list[asrt.Assertion] = []
    provenance: list[str] = []
    for match_id in list_matches(root):
        rec = read_record(root, match_id)
        base = len(traces)
        traces.extend(rec.traces)
        provenance.extend(f"{match_id}/trace_{i}"
                          for i in range(len(rec.traces)))
        for a in rec.assertions:
            if a.source_trace is None:
                continue
            rebased = str(int(a.source_trace) + base)
            assertions.append(dc_replace(a, source_trace=rebased))
    return traces, assertions, provenance
