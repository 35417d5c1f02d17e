"""Two-player match state machine.

A match alternates Planning and Execution phases. During Planning each
player may record one playthrough, spend action points on attribute
upgrades or assertion constructs, and attach assertions to their own
traces. Ending the phase runs every (trace, assertion) pair each player
owns against that player's round mutants; survivors deal damage scaled
by the opponent's attack level and reduced by the defender's armour.
Play continues until a player's life reaches zero. Simultaneous death
is a draw: no winner is declared.

All state transitions funnel through `apply_command`, a text command
layer, so a stored command log replays to a bit-identical final state.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields, replace as dc_replace
from enum import Enum

from . import assertions as asrt
from .engine import (ACTION_BY_NAME, Action, LevelLayout, Trace, coverage,
                     default_level, default_script, replay, serialize_trace)
from .errors import MatchRuleError, ScopeError
from .mutation import Mutant, apply as apply_mutant, mutated_steps, select_round_mutants
from .rng import derive_seed
from .rules import RuleScript, script_hash


# --- configuration ----------------------------------------------------------


@dataclass(frozen=True)
class MatchConfig:
    """Every tunable number in one table, (de)serializable as key=value lines."""

    starting_life: int = 100
    starting_ap: int = 10
    base_damage: int = 5
    attack_step: int = 2
    armour_step: int = 3
    base_mutants: int = 5
    mutants_per_level: int = 2
    default_ap: int = 10
    coverage_ap_max: int = 10
    time_growth: int = 30
    playthrough_time: int = 150
    upgrade_price: int = 8
    construct_price: int = 5
    planning_deadline: int = 1200
    forfeit_grace: int = 300

    def validate(self) -> None:
        if self.starting_life < 1:
            raise MatchRuleError("config", "starting_life must be >= 1")
        if self.playthrough_time < 1:
            raise MatchRuleError("config", "playthrough_time must be >= 1")
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise MatchRuleError("config", f"{f.name} must be >= 0")

    def text(self) -> str:
        return "".join(f"{f.name}={getattr(self, f.name)}\n" for f in fields(self))


def parse_config(text: str) -> MatchConfig:
    known = {f.name for f in fields(MatchConfig)}
    overrides: dict[str, int] = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or key not in known:
            raise MatchRuleError("config", f"line {ln}: unknown setting {key!r}")
        try:
            overrides[key] = int(value.strip())
        except ValueError:
            raise MatchRuleError(
                "config", f"line {ln}: {key} needs an integer") from None
    cfg = MatchConfig(**overrides)
    cfg.validate()
    return cfg


UPGRADE_ITEMS = ("attack", "armour", "playthrough_time", "mutant_count")
CONSTRUCT_PREFIX = "construct:"


# --- state ------------------------------------------------------------------


class Phase(str, Enum):
    PLANNING = "Planning"
    EXECUTION = "Execution"
    FINISHED = "Finished"


@dataclass
class PlayerState:
    life: int
    action_points: int
    playthrough_time: int
    attack: int = 0
    armour: int = 0
    mutant_count_attr: int = 0
    recorded_this_phase: bool = False

    def __post_init__(self) -> None:
        self.traces: list[Trace] = []
        self.assertions: list[asrt.Assertion] = []
        self.purchased_constructs: dict[str, int] = {}


@dataclass(frozen=True)
class MutantResult:
    mid: int
    killed: bool
    killing_assertion: str | None
    replay_trace: Trace | None
    mutated: frozenset[int]


@dataclass(frozen=True)
class PlayerReport:
    results: tuple[MutantResult, ...]
    damage_taken: int
    action_points_awarded: int


@dataclass(frozen=True)
class ExecutionReport:
    round: int
    players: tuple[PlayerReport, PlayerReport]


class Match:
    """One match between players 0 and 1. Methods reject out-of-phase calls."""

    def __init__(self, config: MatchConfig, script: RuleScript | None = None,
                 level: LevelLayout | None = None, match_seed: int = 0) -> None:
        config.validate()
        self.config = config
        self.script = script if script is not None else default_script()
        self.level = level if level is not None else default_level()
        self.match_seed = match_seed
        self.players = tuple(
            PlayerState(life=config.starting_life,
                        action_points=config.starting_ap,
                        playthrough_time=config.playthrough_time)
            for _ in range(2))
        self.phase = Phase.PLANNING
        self.round = 1
        self.round_seed = derive_seed(match_seed, "round", 1)
        self.phase_deadline = config.planning_deadline
        self.winner: int | None = None
        self.drawn = False
        self._pending_awards = (0, 0)

    # -- guards ---------------------------------------------------------

    def _require_phase(self, want: Phase) -> None:
        if self.phase is not want:
            raise MatchRuleError(
                "phase", f"operation requires {want.value}, match is in {self.phase.value}")

    def _player(self, player: int) -> PlayerState:
        if player not in (0, 1):
            raise MatchRuleError("player", f"no such player {player}")
        return self.players[player]

    # -- planning operations ---------------------------------------------

    def record_playthrough(self, player: int, actions, trace_seed: int) -> int:
        self._require_phase(Phase.PLANNING)
        p = self._player(player)
        if p.recorded_this_phase:
            raise MatchRuleError("already-recorded",
                                 "already recorded a playthrough this phase")
        if len(actions) > p.playthrough_time:
            raise MatchRuleError(
                "budget", f"{len(actions)} actions exceed the "
                f"{p.playthrough_time}-tick playthrough budget")
        trace = replay(self.script, trace_seed, actions, self.level)
        p.traces.append(trace)
        p.recorded_this_phase = True
        return len(p.traces) - 1

    def purchase(self, player: int, item: str) -> None:
        self._require_phase(Phase.PLANNING)
        p = self._player(player)
        if item in UPGRADE_ITEMS:
            price = self.config.upgrade_price
        elif item.startswith(CONSTRUCT_PREFIX):
            kind = item[len(CONSTRUCT_PREFIX):]
            if kind != "IfThen":
                raise MatchRuleError("item",
                                     f"construct kind {kind!r} is not for sale")
            price = self.config.construct_price
        else:
            raise MatchRuleError("item", f"unknown item {item!r}")
        if price > p.action_points:
            raise MatchRuleError(
                "funds", f"{item} costs {price} AP, only {p.action_points} held")
        p.action_points -= price
        if item == "attack":
            p.attack += 1
        elif item == "armour":
            p.armour += 1
        elif item == "playthrough_time":
            p.playthrough_time += self.config.time_growth
        elif item == "mutant_count":
            p.mutant_count_attr += 1
        else:
            kind = item[len(CONSTRUCT_PREFIX):]
            p.purchased_constructs[kind] = p.purchased_constructs.get(kind, 0) + 1

    def place_assertion(self, player: int, trace_id: int,
                        assertion: asrt.Assertion) -> None:
        self._require_phase(Phase.PLANNING)
        p = self._player(player)
        if not 0 <= trace_id < len(p.traces):
            raise MatchRuleError("trace", f"player owns no trace {trace_id}")
        if p.purchased_constructs.get("IfThen", 0) < 1:
            raise MatchRuleError("construct", "no IfThen construct in inventory")
        try:
            verdict = asrt.evaluate(assertion, p.traces[trace_id])
        except ScopeError as exc:
            raise MatchRuleError("scope", str(exc)) from None
        if verdict.status is asrt.VerdictStatus.VIOLATED:
            raise MatchRuleError(
                "invalid-oracle",
                f"assertion is violated at step {verdict.violated_at} "
                "of its own trace")
        p.purchased_constructs["IfThen"] -= 1
        p.assertions.append(dc_replace(
            assertion, owner=str(player), source_trace=str(trace_id)))

    # -- phase transitions ------------------------------------------------

    def end_planning(self) -> ExecutionReport:
        self._require_phase(Phase.PLANNING)
        cfg = self.config
        reports = []
        for i, p in enumerate(self.players):
            q = self.players[1 - i]
            count = cfg.base_mutants + q.mutant_count_attr * cfg.mutants_per_level
            round_mutants = select_round_mutants(self.script, count, self.round_seed)
            results = tuple(self._fight_mutant(p, m) for m in round_mutants)
            survivors = sum(1 for r in results if not r.killed)
            damage = max(0, survivors * (cfg.base_damage + q.attack * cfg.attack_step)
                         - p.armour * cfg.armour_step)
            p.life = max(0, p.life - damage)
            award = cfg.default_ap + int(
                coverage(p.traces, self.script) * cfg.coverage_ap_max + 0.5)
            reports.append(PlayerReport(results, damage, award))
        self._pending_awards = tuple(r.action_points_awarded for r in reports)
        report = ExecutionReport(self.round, tuple(reports))
        self.phase = Phase.EXECUTION
        if any(p.life == 0 for p in self.players):
            self.phase = Phase.FINISHED
            alive = [i for i, p in enumerate(self.players) if p.life > 0]
            if alive:
                self.winner = alive[0]
            else:
                self.drawn = True
        return report

    def _fight_mutant(self, p: PlayerState, m: Mutant) -> MutantResult:
        mutated_script = apply_mutant(self.script, m)
        first_replay: Trace | None = None
        for trace in p.traces:
            run = replay(mutated_script, trace.seed, trace.actions, self.level)
            if first_replay is None:
                first_replay = run
            for a in p.assertions:
                verdict = asrt.evaluate(a, run, lenient=True)
                if verdict.status is asrt.VerdictStatus.VIOLATED:
                    return MutantResult(m.mid, True, asrt.serialize(a), run,
                                        mutated_steps(run, m, self.level))
        marked = (mutated_steps(first_replay, m, self.level)
                  if first_replay is not None else frozenset())
        return MutantResult(m.mid, False, None, first_replay, marked)

    def award_action_points(self) -> None:
        self._require_phase(Phase.EXECUTION)
        for p, award in zip(self.players, self._pending_awards):
            p.action_points += award
            p.playthrough_time += self.config.time_growth
            p.recorded_this_phase = False
        self._pending_awards = (0, 0)
        self.round += 1
        self.round_seed = derive_seed(self.match_seed, "round", self.round)
        self.phase_deadline = self.config.planning_deadline
        self.phase = Phase.PLANNING

    def check_winner(self) -> int | None:
        return self.winner

    def forfeit(self, player: int) -> None:
        """The given player concedes (used for disconnect timeouts)."""
        if self.phase is Phase.FINISHED:
            raise MatchRuleError("phase", "match already finished")
        self._player(player)
        self.phase = Phase.FINISHED
        self.winner = 1 - player

    # -- canonical state text and hash ------------------------------------

    def state_text(self) -> str:
        lines = [
            f"phase\t{self.phase.value}",
            f"round\t{self.round}",
            f"round_seed\t{self.round_seed}",
            f"winner\t{'-' if self.winner is None else self.winner}",
            f"drawn\t{int(self.drawn)}",
            f"script\t{script_hash(self.script)}",
        ]
        for i, p in enumerate(self.players):
            lines.append(
                f"player\t{i}\t{p.life}\t{p.action_points}\t{p.attack}\t"
                f"{p.armour}\t{p.mutant_count_attr}\t{p.playthrough_time}\t"
                f"{int(p.recorded_this_phase)}")
            for kind in sorted(p.purchased_constructs):
                lines.append(f"construct\t{i}\t{kind}\t{p.purchased_constructs[kind]}")
            for t in p.traces:
                digest = hashlib.sha256(serialize_trace(t).encode()).hexdigest()
                lines.append(f"trace\t{i}\t{digest}")
            for a in p.assertions:
                lines.append(f"assertion\t{i}\t{a.source_trace}\t{asrt.serialize(a)}")
        return "".join(line + "\n" for line in lines)

    def state_hash(self) -> str:
        return hashlib.sha256(self.state_text().encode()).hexdigest()


def start_match(config: MatchConfig, script: RuleScript | None = None,
                level: LevelLayout | None = None, match_seed: int = 0) -> Match:
    return Match(config, script, level, match_seed)


# --- the command layer -------------------------------------------------------


def parse_actions(word: str) -> tuple[Action, ...]:
    if word == "-":
        return ()
    try:
        return tuple(ACTION_BY_NAME[w] for w in word.split(" "))
    except KeyError as exc:
        raise MatchRuleError("actions", f"unknown action name {exc.args[0]!r}") from None


def format_actions(actions) -> str:
    return " ".join(a.name for a in actions) if actions else "-"


def apply_command(match: Match, line: str):
    """Run one logged command against the match.

    Commands are single tab-separated lines:

        record <player> <trace_seed> <actions or ->
        purchase <player> <item>
        place <player> <trace_id> <assertion text>
        end_planning
        award
        forfeit <player>

    Returns whatever the underlying operation returns. Raises
    MatchRuleError on malformed input or rejected operations, leaving
    the match state untouched.
    """
    op, *rest = line.rstrip("\n").split("\t")
    try:
        if op == "record":
            player, seed, acts = rest
            return match.record_playthrough(int(player), parse_actions(acts), int(seed))
        if op == "purchase":
            player, item = rest
            return match.purchase(int(player), item)
        if op == "place":
            player, trace_id, text = rest
            return match.place_assertion(int(player), int(trace_id), asrt.parse(text))
        if op == "end_planning":
            if rest:
                raise ValueError
            return match.end_planning()
        if op == "award":
            if rest:
                raise ValueError
            return match.award_action_points()
        if op == "forfeit":
            (player,) = rest
            return match.forfeit(int(player))
    except ValueError:
        raise MatchRuleError("command", f"malformed command {line!r}") from None
    raise MatchRuleError("command", f"unknown command {op!r}")


def replay_commands(config: MatchConfig, lines, script: RuleScript | None = None,
                    level: LevelLayout | None = None, match_seed: int = 0) -> Match:
    """Rebuild a match from its accepted-command log (the event-sourcing check)."""
    match = Match(config, script, level, match_seed)
    for line in lines:
        if line.strip():
            apply_command(match, line)
    return match
