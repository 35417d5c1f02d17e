"""Scripted opponents for solo play and headless evaluation.

Two difficulties:

* ``random`` picks uniformly among commands that pass the match engine's
  precondition checks, so every emitted command is accepted.
* ``greedy`` plans a coin tour with breadth-first search over player
  positions, buys one IfThen construct per phase, places the assertion
  from a fixed template pool that triggers most often on its own trace,
  and converts leftover action points into attack so matches end.
"""

from __future__ import annotations

from collections import deque
from functools import lru_cache

from . import assertions as asrt
from .engine import (Action, LevelLayout, Trace, WorldState, new_world,
                     replay, step)
from .errors import TerminalStateError
from .match import (CONSTRUCT_PREFIX, Match, Phase, UPGRADE_ITEMS,
                    format_actions)
from .rng import DetRng, derive_seed
from .rules import RuleScript

DIFFICULTIES = ("random", "greedy")

_BFS_ACTIONS = (Action.Right, Action.Left, Action.Jump, Action.NoOp)
_LEG_DEPTH_CAP = 80


# --- route planning ------------------------------------------------------------


def _search_key(state: WorldState) -> tuple:
    frame = state.frame()
    parts = []
    for a in frame.actors:
        if a.kind == "player":
            parts.append((a.x, a.y))
        elif a.kind == "coin":
            parts.append(a.alive)
        elif a.kind == "bomb":
            parts.append((a.x, a.y, a.facing, a.alive))
    return tuple(parts)


def _live_coins(state: WorldState) -> int:
    return sum(1 for a in state.frame().actors if a.kind == "coin" and a.alive)


def _bfs_leg(script: RuleScript, start: WorldState, depth: int, goal_test):
    """Shortest action path from start to a step satisfying goal_test.

    Visible actor state plus the step count identifies a world completely:
    the engine draws random numbers at a fixed rate per tick, so two states
    reached after the same number of steps share their generator state.
    Keying seen states by (depth, actors) therefore makes the search exact
    on the real level, bombs included.  goal_test receives the post-step
    state and the statement ids that fired during the step.  Returns
    (end_state, depth, actions) or (None, None, None) when unreachable
    within the depth cap.
    """
    seen = {(depth, _search_key(start))}
    queue = deque([(start, depth, ())])
    while queue:
        state, d, path = queue.popleft()
        if d >= _LEG_DEPTH_CAP:
            continue
        for action in _BFS_ACTIONS:
            try:
                nxt, fired = step(script, state, action)
            except TerminalStateError:
                continue
            if goal_test(nxt, fired):
                return nxt, d + 1, path + (action,)
            if nxt.frame().game_over:
                continue
            key = (d + 1, _search_key(nxt))
            if key in seen:
                continue
            seen.add(key)
            queue.append((nxt, d + 1, path + (action,)))
    return None, None, None


@lru_cache(maxsize=256)
def plan_route(script: RuleScript, level: LevelLayout,
               seed: int) -> tuple[Action, ...]:
    """Coin tour followed by a run at the goal, seed-exact.

    Planning happens on the same world the recording will replay in, so
    the route already sidesteps the bomb wherever the search finds a way
    through; when no safe path to a target exists the route simply stops
    at what was reachable.
    """
    state = new_world(level, seed)
    depth = 0
    route: list[Action] = []
    while True:
        before = _live_coins(state)
        if before == 0:
            break
        end, d, leg = _bfs_leg(
            script, state, depth,
            lambda s, fired: _live_coins(s) < before and not s.frame().game_over)
        if end is None:
            break
        route.extend(leg)
        state, depth = end, d
    base_score = state.frame().score
    end, d, leg = _bfs_leg(
        script, state, depth,
        lambda s, fired: (s.frame().game_over
                          and s.frame().score >= base_score + 50))
    if end is not None:
        route.extend(leg)
    return tuple(route)


@lru_cache(maxsize=256)
def plan_probe_route(script: RuleScript, level: LevelLayout, seed: int,
                     uncovered: frozenset[int]) -> tuple[Action, ...]:
    """Shortest play that fires statements none of the player's traces hit.

    Coverage feeds the per-round award, so once the scenic route has been
    recorded it pays to chase whatever statements are still dark, even
    when that means steering into a hazard on purpose.
    """
    state = new_world(level, seed)
    depth = 0
    route: list[Action] = []
    remaining = set(uncovered)
    while remaining:
        end, d, leg = _bfs_leg(script, state, depth,
                               lambda s, fired: bool(fired & remaining))
        if end is None:
            break
        route.extend(leg)
        state, depth = end, d
        hit = replay(script, seed, route, level)
        remaining = set(uncovered) - set(hit.covered_ids())
        if state.frame().game_over:
            break
    return tuple(route)


# --- assertion templates ---------------------------------------------------------


def _final_actor(trace: Trace, kind: str):
    for a in trace.frames[-1].actors:
        if a.kind == kind:
            return a
    return None


def assertion_templates(trace: Trace) -> list[asrt.Assertion]:
    """The fixed pool the greedy bot draws from, specialised to one trace.

    Contact rules come first; the rest pin exact end-of-trace values
    behind an always-true trigger so that mutants drifting the player,
    the score, or the bomb violate them.
    """
    pool = [
        asrt.if_then(asrt.touching_block("Player", "Bomb"),
                     asrt.game_over_block()),
        asrt.if_then(asrt.compare_block("Player", "y", "<", 0),
                     asrt.game_over_block()),
        asrt.if_then(asrt.touching_block("Player", "Coin"),
                     asrt.score_increases_block()),
        asrt.if_then(asrt.touching_block("Player", "Goal"),
                     asrt.game_over_block()),
    ]
    if trace.length < 1:
        return pool
    last = trace.length - 1
    final = trace.frames[last]

    def probe(step_index: int, outcome: asrt.Block) -> asrt.Assertion:
        return asrt.if_then(asrt.compare_block("Player", "alive", "==", 1),
                            outcome, scope=asrt.AtStep(step_index))

    player = _final_actor(trace, "player")
    if player is not None:
        pool.append(probe(last, asrt.attribute_is_block(
            "Player", "x", "==", player.x)))
        pool.append(probe(last, asrt.attribute_is_block(
            "Player", "y", "==", player.y)))
    pool.append(probe(last, asrt.attribute_is_block(
        "Player", "score", "==", final.score)))
    bomb = _final_actor(trace, "bomb")
    if bomb is not None:
        pool.append(probe(last, asrt.attribute_is_block(
            "Bomb", "x", "==", bomb.x)))
    mid = last // 2
    if 0 < mid < last:
        mid_bomb = next((a for a in trace.frames[mid].actors
                         if a.kind == "bomb"), None)
        if mid_bomb is not None:
            pool.append(probe(mid, asrt.attribute_is_block(
                "Bomb", "x", "==", mid_bomb.x)))
        mid_player = next((a for a in trace.frames[mid].actors
                           if a.kind == "player"), None)
        if mid_player is not None:
            pool.append(probe(mid, asrt.attribute_is_block(
                "Player", "x", "==", mid_player.x)))
    return pool


def _placeable(assertion: asrt.Assertion, trace: Trace) -> bool:
    try:
        verdict = asrt.evaluate(assertion, trace)
    except Exception:
        return False
    return verdict.status is not asrt.VerdictStatus.VIOLATED


def _best_unplaced(match: Match, player: int) -> asrt.Assertion | None:
    p = match.players[player]
    if not p.traces:
        return None
    trace = p.traces[-1]
    ranked = sorted(
        (a for a in assertion_templates(trace) if _placeable(a, trace)),
        key=lambda a: -len(asrt.evaluate(a, trace).triggered_steps))
    for cand in ranked:
        if not any(asrt.blocks_equal(cand, placed) for placed in p.assertions):
            return cand
    return None


# --- policies ------------------------------------------------------------------


def _trace_seed(match: Match, player: int) -> int:
    return derive_seed(match.match_seed, "trace", player, match.round)


def _uncovered_ids(match: Match, player: int) -> frozenset[int]:
    covered: set[int] = set()
    for t in match.players[player].traces:
        covered |= t.covered_ids()
    return frozenset(s.sid for s in match.script.statements) - covered


def _greedy_command(match: Match, player: int) -> str | None:
    p = match.players[player]
    cfg = match.config
    if not p.recorded_this_phase:
        seed = _trace_seed(match, player)
        uncovered = _uncovered_ids(match, player)
        if p.traces and uncovered:
            route = plan_probe_route(match.script, match.level, seed, uncovered)
        else:
            route = plan_route(match.script, match.level, seed)
        route = route[:p.playthrough_time]
        return (f"record\t{player}\t{seed}\t{format_actions(route)}")
    best = _best_unplaced(match, player)
    if best is not None:
        if p.purchased_constructs.get("IfThen", 0) >= 1:
            trace_id = len(p.traces) - 1
            return (f"place\t{player}\t{trace_id}\t{asrt.serialize(best)}")
        if p.action_points >= cfg.construct_price:
            return f"purchase\t{player}\t{CONSTRUCT_PREFIX}IfThen"
    if p.action_points >= cfg.upgrade_price:
        return f"purchase\t{player}\tattack"
    return None


def _random_candidates(match: Match, player: int, rng: DetRng) -> list[str]:
    p = match.players[player]
    cfg = match.config
    out: list[str] = []
    if not p.recorded_this_phase:
        n = 1 + rng.randrange(min(20, max(1, p.playthrough_time)))
        acts = [Action(rng.randrange(4)) for _ in range(n)]
        out.append(f"record\t{player}\t{_trace_seed(match, player)}\t"
                   f"{format_actions(acts)}")
    for item in UPGRADE_ITEMS:
        if p.action_points >= cfg.upgrade_price:
            out.append(f"purchase\t{player}\t{item}")
    if p.action_points >= cfg.construct_price:
        out.append(f"purchase\t{player}\t{CONSTRUCT_PREFIX}IfThen")
    if p.purchased_constructs.get("IfThen", 0) >= 1 and p.traces:
        trace_id = rng.randrange(len(p.traces))
        trace = p.traces[trace_id]
        valid = [a for a in assertion_templates(trace) if _placeable(a, trace)]
        if valid:
            pick = valid[rng.randrange(len(valid))]
            out.append(f"place\t{player}\t{trace_id}\t{asrt.serialize(pick)}")
    return out


def bot_policy(match: Match, player: int, difficulty: str,
               rng: DetRng) -> str | None:
    """Next command line for the player, or None to confirm done."""
    if difficulty not in DIFFICULTIES:
        raise ValueError(f"unknown difficulty {difficulty!r}")
    if match.phase is not Phase.PLANNING:
        return None
    if difficulty == "greedy":
        return _greedy_command(match, player)
    candidates = _random_candidates(match, player, rng)
    pick = rng.randrange(len(candidates) + 1)
    if pick == len(candidates):
        return None
    return candidates[pick]


# --- headless matches -------------------------------------------------------------


def run_bot_match(config, bots=("greedy", "greedy"), match_seed: int = 0,
                  script: RuleScript | None = None,
                  level: LevelLayout | None = None,
                  max_rounds: int = 60) -> tuple[Match, list[str]]:
    """Play a full match between two bots; returns it with its command log.

    The log holds exactly the accepted commands, so replaying it through
    the match engine reproduces the final state.
    """
    from .match import apply_command

    match = Match(config, script, level, match_seed)
    rngs = [DetRng(derive_seed(match_seed, "bot", i)) for i in (0, 1)]
    log: list[str] = []

    def run(line: str) -> None:
        apply_command(match, line)
        log.append(line)

    while match.phase is Phase.PLANNING:
        for player in (0, 1):
            for _ in range(64):
                cmd = bot_policy(match, player, bots[player], rngs[player])
                if cmd is None:
                    break
                run(cmd)
        run("end_planning")
        if match.phase is Phase.FINISHED:
            break
        run("award")
        if match.round > max_rounds:
            lives = [p.life for p in match.players]
            loser = 0 if lives[0] <= lives[1] else 1
            run(f"forfeit\t{loser}")
            break
    return match, log
