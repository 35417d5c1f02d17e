"""Turning finished matches into a static regression suite.

The pipeline is: harvest winners' traces and assertions, cluster traces by
edit distance over their action sequences, deduplicate assertions
structurally, then emit one static test per representative trace. A static
test replays a fixed (seed, actions) pair and checks its oracles plus the
recorded trace length, so a mutant is caught either by an assertion
violation or by the replay diverging early or late.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass

from . import assertions as asrt
from .engine import Action, Trace, replay
from .errors import HashMismatchError, MatchRuleError, TraceFormatError
from .match import Match, Phase, format_actions, parse_actions
from .mutation import Mutant, apply as apply_mutant
from .rules import RuleScript, script_hash

log = logging.getLogger(__name__)


# --- harvesting --------------------------------------------------------------


def harvest(match: Match) -> tuple[list[Trace], list[asrt.Assertion]]:
    """The winner's traces and assertions; nothing from a draw."""
    if match.phase is not Phase.FINISHED:
        raise MatchRuleError("phase", "harvest requires a finished match")
    if match.winner is None:
        return [], []
    winner = match.players[match.winner]
    return list(winner.traces), list(winner.assertions)


# --- edit distance and clustering ---------------------------------------------


def levenshtein(a, b) -> int:
    """Unit-cost edit distance between two action sequences, two-row DP."""
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, start=1):
        cur = [i]
        for j, y in enumerate(b, start=1):
            cur.append(min(prev[j] + 1,
                           cur[j - 1] + 1,
                           prev[j - 1] + (x != y)))
        prev = cur
    return prev[len(b)]


def default_dedup_threshold(traces) -> int:
    """10% of the mean action-sequence length, rounded half-up."""
    if not traces:
        return 0
    mean = sum(len(t.actions) for t in traces) / len(traces)
    return int(mean * 0.1 + 0.5)


def _cluster(traces, threshold: int):
    """Greedy in-order clustering; returns (representatives, assignment).

    assignment[i] is the representative index trace i joined: the first
    representative within `threshold` edit distance, else itself as a new one.
    """
    reps: list[int] = []
    assignment: list[int] = []
    for i, t in enumerate(traces):
        for r in reps:
            if levenshtein(traces[r].actions, t.actions) <= threshold:
                assignment.append(r)
                break
        else:
            reps.append(i)
            assignment.append(i)
    return reps, assignment


def dedup_traces(traces, threshold: int) -> list[Trace]:
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    reps, _ = _cluster(traces, threshold)
    return [traces[i] for i in reps]


def dedup_assertions(assertions) -> list[asrt.Assertion]:
    """One per structural-equality class, first occurrence wins."""
    kept: list[asrt.Assertion] = []
    for a in assertions:
        if not any(asrt.blocks_equal(a, k) for k in kept):
            kept.append(a)
    return kept


# --- static tests -------------------------------------------------------------


@dataclass(frozen=True)
class StaticTest:
    test_id: str
    script_sha: str
    seed: int
    actions: tuple[Action, ...]
    oracles: tuple[asrt.Assertion, ...]
    provenance: str
    expected_length: int

    def text(self) -> str:
        lines = [
            f"script\t{self.script_sha}",
            f"seed\t{self.seed}",
            f"length\t{self.expected_length}",
            f"actions\t{format_actions(self.actions)}",
            f"provenance\t{self.provenance}",
        ]
        lines.extend(f"oracle\t{asrt.serialize(o)}" for o in self.oracles)
        return "".join(line + "\n" for line in lines)


def parse_static_test(text: str, test_id: str) -> StaticTest:
    fields: dict[str, str] = {}
    oracles: list[asrt.Assertion] = []
    for raw in text.splitlines():
        if not raw.strip():
            continue
        key, sep, value = raw.partition("\t")
        if not sep:
            raise TraceFormatError(f"static test line without a tab: {raw!r}")
        if key == "oracle":
            oracles.append(asrt.parse(value))
        elif key in ("script", "seed", "length", "actions", "provenance"):
            fields[key] = value
        else:
            raise TraceFormatError(f"unknown static test field {key!r}")
    try:
        return StaticTest(test_id, fields["script"], int(fields["seed"]),
                          parse_actions(fields["actions"]), tuple(oracles),
                          fields.get("provenance", "?"), int(fields["length"]))
    except (KeyError, ValueError) as exc:
        raise TraceFormatError(f"incomplete static test: {exc}") from None


def synthesize_static(traces, assertions, script: RuleScript,
                      threshold: int | None = None,
                      provenance: list[str] | None = None) -> list[StaticTest]:
    """One static test per representative trace.

    `assertions` carry `source_trace` indices into `traces`. Each
    representative bundles the assertions of every trace in its cluster.
    An oracle that turns out Violated on the representative's replay is
    dropped with a logged reason; Holds and NeverTriggered are kept, so
    the suite can never fail on the unmutated script.
    """
    if threshold is None:
        threshold = default_dedup_threshold(traces)
    reps, assignment = _cluster(traces, threshold)
    sha = script_hash(script)
    tests: list[StaticTest] = []
    for n, rep in enumerate(reps):
        trace = traces[rep]
        members = {i for i, a in enumerate(assignment) if a == rep}
        run = replay(script, trace.seed, trace.actions)
        oracles = []
        for a in assertions:
            src = int(a.source_trace) if a.source_trace is not None else -1
            if src not in members:
                continue
            verdict = asrt.evaluate(a, run, lenient=True)
            if verdict.status is asrt.VerdictStatus.VIOLATED:
                log.info("dropping oracle violated at step %s of its "
                         "representative: %s", verdict.violated_at, asrt.serialize(a))
                continue
            oracles.append(a)
        label = provenance[rep] if provenance else "?"
        tests.append(StaticTest(f"s{n}", sha, trace.seed, trace.actions,
                                tuple(oracles), label, run.length))
    return tests


# --- suite scoring -------------------------------------------------------------


@dataclass(frozen=True)
class SuiteRow:
    mutant_id: str
    killed: bool
    killing_test: str | None


@dataclass(frozen=True)
class SuiteReport:
    rows: tuple[SuiteRow, ...]
    mutation_score: float

    def text(self) -> str:
        lines = [f"{r.mutant_id}\t{int(r.killed)}\t{r.killing_test or '-'}"
                 for r in self.rows]
        lines.append(f"score\t{self.mutation_score:.6f}")
        return "".join(line + "\n" for line in lines)


def _test_kills(test: StaticTest, variant: RuleScript) -> bool:
    run = replay(variant, test.seed, test.actions)
    if run.length != test.expected_length:
        return True
    for oracle in test.oracles:
        if asrt.evaluate(oracle, run, lenient=True).status is \
                asrt.VerdictStatus.VIOLATED:
            return True
    return False


def run_suite(tests, mutants, script: RuleScript) -> SuiteReport:
    """Score the suite against the mutants.

    A `None` entry in `mutants` stands for the unmutated script presented
    as a control; control rows appear in the report but never count
    toward the mutation score.
    """
    sha = script_hash(script)
    for t in tests:
        if t.script_sha != sha:
            raise HashMismatchError(
                f"test {t.test_id} targets script {t.script_sha[:12]}, "
                f"got {sha[:12]}")
    rows: list[SuiteRow] = []
    killed = 0
    total = 0
    for m in mutants:
        variant = script if m is None else apply_mutant(script, m)
        label = "control" if m is None else str(m.mid)
        killer = None
        for t in tests:
            if _test_kills(t, variant):
                killer = t.test_id
                break
        if m is not None:
            total += 1
            killed += killer is not None
        rows.append(SuiteRow(label, killer is not None, killer))
    score = killed / total if total else 0.0
    return SuiteReport(tuple(rows), score)


def suite_digest(tests) -> str:
    """Stable digest of a whole suite, for store records."""
    h = hashlib.sha256()
    for t in tests:
        h.update(t.text().encode())
    return h.hexdigest()
