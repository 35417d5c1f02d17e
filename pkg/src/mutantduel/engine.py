"""Deterministic grid-game engine interpreting RuleScript.

Model
-----
A world is a small grid with static solid tiles (from the LevelLayout) and a
set of actors (player / coin / bomb / goal). One action is consumed per tick;
each tick every statement of the script runs in order, quantified over live
actors of its subject kind. All integers, no floats, and the only randomness
is the script's `rand100` term drawing from a splitmix64 stream seeded at
world creation, so a (script, level, seed, actions) tuple fully determines a
run. Ten ticks correspond to one displayed second in clients.

Frames are value snapshots taken after each tick. Detection statements in the
bundled script run first within a tick, so a contact that is visible in frame
t has its consequence (score bump, game over) land in frame t+1; assertion
semantics in assertions.py rely on that.

Known quirk: touching is evaluated on resolved positions only, so two actors
swapping cells within one tick pass through each other.

Speed note: statements are compiled to closures once per script (keyed by the
frozen AST) because the determinism acceptance check replays thousands of
traces.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

from .errors import LayoutError, TerminalStateError, TraceFormatError
from .rng import DetRng
from . import rules
from .rules import RuleScript, Statement


class Action(enum.IntEnum):
    """Closed, totally ordered input alphabet."""

    Left = 0
    Right = 1
    Jump = 2
    NoOp = 3


ACTION_BY_NAME = {a.name: a for a in Action}
# Script-level action names (uppercase) to engine actions.
_SCRIPT_ACTION = {"LEFT": Action.Left, "RIGHT": Action.Right,
                  "JUMP": Action.Jump, "NOOP": Action.NoOp}

TICKS_PER_SECOND = 10


@dataclass(frozen=True)
class Spawn:
    kind: str
    x: int
    y: int
    facing: int = 1


@dataclass(frozen=True)
class LevelLayout:
    width: int
    height: int
    solids: frozenset[tuple[int, int]]
    spawns: tuple[Spawn, ...]

    def validate(self) -> None:
        players = [s for s in self.spawns if s.kind == "player"]
        if len(players) != 1:
            raise LayoutError("level needs exactly one player spawn")
        seen: set[tuple[int, int]] = set()
        for s in self.spawns:
            if s.kind not in rules.ACTOR_KINDS:
                raise LayoutError(f"unknown actor kind {s.kind!r}")
            if not (0 <= s.x < self.width and 0 <= s.y < self.height):
                raise LayoutError(f"spawn {s.kind} at ({s.x}, {s.y}) out of bounds")
            if (s.x, s.y) in self.solids:
                raise LayoutError(f"spawn {s.kind} at ({s.x}, {s.y}) inside a solid tile")
            if (s.x, s.y) in seen:
                raise LayoutError(f"two spawns overlap at ({s.x}, {s.y})")
            seen.add((s.x, s.y))


@dataclass(frozen=True)
class ActorView:
    aid: int
    kind: str
    x: int
    y: int
    alive: bool
    facing: int


@dataclass(frozen=True)
class Frame:
    tick: int
    score: int
    game_over: bool
    actors: tuple[ActorView, ...]

    def actor_views(self, kind: str) -> tuple[ActorView, ...]:
        return tuple(a for a in self.actors if a.kind == kind)


@dataclass(frozen=True)
class WorldState:
    level: LevelLayout
    actors: tuple[ActorView, ...]
    score: int
    game_over: bool
    tick: int
    rng_state: int

    def frame(self) -> Frame:
        return Frame(self.tick, self.score, self.game_over, self.actors)


# --- internal mutable simulation ---------------------------------------------


class _Actor:
    __slots__ = ("aid", "kind", "x", "y", "alive", "facing")

    def __init__(self, aid: int, kind: str, x: int, y: int, alive: bool, facing: int):
        self.aid = aid
        self.kind = kind
        self.x = x
        self.y = y
        self.alive = alive
        self.facing = facing

    def view(self) -> ActorView:
        return ActorView(self.aid, self.kind, self.x, self.y, self.alive, self.facing)


class _Sim:
    __slots__ = ("level", "actors", "kinds", "solids", "score", "game_over",
                 "tick", "rng")

    def __init__(self, level: LevelLayout, actors: list[_Actor], score: int,
                 game_over: bool, tick: int, rng_state: int) -> None:
        self.level = level
        self.actors = actors
        self.kinds: dict[str, list[_Actor]] = {k: [] for k in rules.ACTOR_KINDS}
        for a in actors:
            self.kinds[a.kind].append(a)
        self.solids = level.solids
        self.score = score
        self.game_over = game_over
        self.tick = tick
        self.rng = DetRng(0)
        self.rng.state = rng_state

    @classmethod
    def from_level(cls, level: LevelLayout, seed: int) -> "_Sim":
        level.validate()
        actors = [_Actor(i, s.kind, s.x, s.y, True, s.facing)
                  for i, s in enumerate(level.spawns)]
        return cls(level, actors, 0, False, 0, DetRng(seed).state)

    @classmethod
    def from_state(cls, state: WorldState) -> "_Sim":
        actors = [_Actor(v.aid, v.kind, v.x, v.y, v.alive, v.facing)
                  for v in state.actors]
        return cls(state.level, actors, state.score, state.game_over,
                   state.tick, state.rng_state)

    def state(self) -> WorldState:
        return WorldState(self.level, tuple(a.view() for a in self.actors),
                          self.score, self.game_over, self.tick, self.rng.state)

    def frame(self) -> Frame:
        return Frame(self.tick, self.score, self.game_over,
                     tuple(a.view() for a in self.actors))


# --- script compilation -------------------------------------------------------

# Compiled callables take (sim, subject_actor, action) and return a value/bool.


def _compile_term(term, subject_kind):
    if isinstance(term, rules.Lit):
        v = term.value
        return lambda sim, s, act: v
    if isinstance(term, rules.ScoreTerm):
        return lambda sim, s, act: sim.score
    if isinstance(term, rules.RandTerm):
        return lambda sim, s, act: sim.rng.randrange(100)
    if isinstance(term, rules.AttrTerm):
        attr = term.attr
        if term.kind == subject_kind:
            return lambda sim, s, act: getattr(s, attr)
        kind = term.kind
        # Non-subject attribute reads take the first live actor of the kind
        # (id order), defaulting to 0 when none is alive.
        def read(sim, s, act):
            for a in sim.kinds[kind]:
                if a.alive:
                    return getattr(a, attr)
            return 0
        return read
    if isinstance(term, rules.BinTerm):
        left = _compile_term(term.left, subject_kind)
        right = _compile_term(term.right, subject_kind)
        if term.op == "+":
            return lambda sim, s, act: left(sim, s, act) + right(sim, s, act)
        return lambda sim, s, act: left(sim, s, act) - right(sim, s, act)
    raise TypeError(f"unknown term {term!r}")


def _compile_atom(atom, subject_kind):
    if isinstance(atom, rules.ActionIs):
        want = _SCRIPT_ACTION[atom.action]
        return lambda sim, s, act: act == want
    if isinstance(atom, rules.TouchingAtom):
        ka, kb = atom.kind_a, atom.kind_b
        if ka == subject_kind:
            return lambda sim, s, act: any(
                b.alive and b.x == s.x and b.y == s.y and b is not s
                for b in sim.kinds[kb])
        if kb == subject_kind:
            return lambda sim, s, act: any(
                a.alive and a.x == s.x and a.y == s.y and a is not s
                for a in sim.kinds[ka])
        return lambda sim, s, act: any(
            a.alive and b.alive and a is not b and a.x == b.x and a.y == b.y
            for a in sim.kinds[ka] for b in sim.kinds[kb])
    if isinstance(atom, rules.GroundedAtom):
        if atom.kind == subject_kind:
            return lambda sim, s, act: (s.x, s.y - 1) in sim.solids
        kind = atom.kind
        return lambda sim, s, act: any(
            a.alive and (a.x, a.y - 1) in sim.solids for a in sim.kinds[kind])
    if isinstance(atom, rules.OpenAtom):
        dx = atom.dx
        if atom.kind == subject_kind:
            return lambda sim, s, act: (s.x + dx, s.y) not in sim.solids
        kind = atom.kind
        return lambda sim, s, act: any(
            a.alive and (a.x + dx, a.y) not in sim.solids for a in sim.kinds[kind])
    if isinstance(atom, rules.AliveAtom):
        if atom.kind == subject_kind:
            return lambda sim, s, act: s.alive
        kind = atom.kind
        return lambda sim, s, act: any(a.alive for a in sim.kinds[kind])
    if isinstance(atom, rules.CompareAtom):
        left = _compile_term(atom.left, subject_kind)
        right = _compile_term(atom.right, subject_kind)
        op = atom.op
        if op == "<":
            return lambda sim, s, act: left(sim, s, act) < right(sim, s, act)
        if op == ">":
            return lambda sim, s, act: left(sim, s, act) > right(sim, s, act)
        return lambda sim, s, act: left(sim, s, act) == right(sim, s, act)
    raise TypeError(f"unknown atom {atom!r}")


def _compile_guard(guard: rules.Guard, subject_kind: str):
    fns = [_compile_atom(a, subject_kind) for a in guard.atoms]
    if len(fns) == 1:
        inner = fns[0]
    else:
        def inner(sim, s, act, _fns=tuple(fns)):
            for f in _fns:
                if not f(sim, s, act):
                    return False
            return True
    if guard.negated:
        return lambda sim, s, act: not inner(sim, s, act)
    return inner


def _compile_effect(effect, subject_kind):
    if isinstance(effect, rules.AssignAttr):
        term = _compile_term(effect.term, subject_kind)
        attr = effect.attr
        if effect.kind == subject_kind:
            def apply(sim, s, act):
                setattr(s, attr, term(sim, s, act))
            return apply
        kind = effect.kind

        def apply_other(sim, s, act):
            for a in sim.kinds[kind]:
                if a.alive:
                    setattr(a, attr, term(sim, s, act))
                    return
        return apply_other
    if isinstance(effect, rules.AssignScore):
        term = _compile_term(effect.term, subject_kind)

        def apply_score(sim, s, act):
            sim.score = term(sim, s, act)
        return apply_score
    if isinstance(effect, rules.AssignGameOver):
        term = _compile_term(effect.term, subject_kind)

        def apply_over(sim, s, act):
            # game_over is absorbing: assigning 0 on an ended game is a no-op.
            if term(sim, s, act) != 0:
                sim.game_over = True
        return apply_over
    if isinstance(effect, rules.KillEffect):
        if effect.kind == subject_kind:
            def kill(sim, s, act):
                s.alive = False
            return kill
        kind = effect.kind

        def kill_other(sim, s, act):
            for a in sim.kinds[kind]:
                if a.alive:
                    a.alive = False
                    return
        return kill_other
    raise TypeError(f"unknown effect {effect!r}")


class _CompiledStatement:
    __slots__ = ("sid", "subject_kind", "guard", "effect")

    def __init__(self, stmt: Statement) -> None:
        self.sid = stmt.sid
        self.subject_kind = stmt.subject_kind()
        self.guard = _compile_guard(stmt.guard, self.subject_kind)
        self.effect = _compile_effect(stmt.effect, self.subject_kind)

    def run(self, sim: _Sim, action: Action) -> bool:
        fired = False
        guard = self.guard
        effect = self.effect
        for s in sim.kinds[self.subject_kind]:
            if s.alive and guard(sim, s, action):
                effect(sim, s, action)
                fired = True
        return fired


@lru_cache(maxsize=256)
def _compile_script(script: RuleScript) -> tuple[_CompiledStatement, ...]:
    return tuple(_CompiledStatement(s) for s in script.statements)


def _run_tick(compiled, sim: _Sim, action: Action) -> frozenset[int]:
    executed = []
    for cs in compiled:
        if cs.run(sim, action):
            executed.append(cs.sid)
    sim.tick += 1
    return frozenset(executed)


# --- public stepping API ------------------------------------------------------


def new_world(level: LevelLayout, seed: int) -> WorldState:
    return _Sim.from_level(level, seed).state()


def step(script: RuleScript, state: WorldState, action: Action) -> tuple[WorldState, frozenset[int]]:
    """Advance one tick. Statements run in script order; the returned set
    holds the ids of statements whose guard fired for at least one subject."""
    if state.game_over:
        raise TerminalStateError("cannot step a finished game")
    sim = _Sim.from_state(state)
    executed = _run_tick(_compile_script(script), sim, action)
    return sim.state(), executed


# --- traces -------------------------------------------------------------------


@dataclass(frozen=True)
class Trace:
    script_hash: str
    seed: int
    actions: tuple[Action, ...]
    initial: Frame
    frames: tuple[Frame, ...]
    covered: tuple[frozenset[int], ...]

    @property
    def length(self) -> int:
        return len(self.actions)

    def __post_init__(self) -> None:
        if not (len(self.actions) == len(self.frames) == len(self.covered)):
            raise TraceFormatError("trace parts disagree on length")

    def pre_frame(self, t: int) -> Frame:
        """State the world was in when action t was chosen."""
        return self.initial if t == 0 else self.frames[t - 1]

    def covered_ids(self) -> frozenset[int]:
        out: set[int] = set()
        for c in self.covered:
            out |= c
        return frozenset(out)


def replay(script: RuleScript, seed: int, actions: list[Action] | tuple[Action, ...],
           level: LevelLayout | None = None) -> Trace:
    """Run actions from a fresh world. Replay is total: actions beyond the
    first game-over frame are dropped, so the result always satisfies the
    length invariant and never steps a finished game."""
    if level is None:
        level = default_level()
    sim = _Sim.from_level(level, seed)
    compiled = _compile_script(script)
    initial = sim.frame()
    frames: list[Frame] = []
    covered: list[frozenset[int]] = []
    kept: list[Action] = []
    for action in actions:
        if sim.game_over:
            break
        executed = _run_tick(compiled, sim, action)
        frames.append(sim.frame())
        covered.append(executed)
        kept.append(action)
    return Trace(rules.script_hash(script), seed, tuple(kept), initial,
                 tuple(frames), tuple(covered))


def coverage(traces, script: RuleScript) -> float:
    """Fraction of script statements executed at least once across traces."""
    ids = {s.sid for s in script.statements}
    if not ids:
        return 1.0
    hit: set[int] = set()
    for tr in traces:
        hit |= tr.covered_ids()
    return len(hit & ids) / len(ids)


# --- trace serialisation ------------------------------------------------------


def _frame_fields(frame: Frame) -> list[str]:
    fields = [str(frame.tick), str(frame.score), "1" if frame.game_over else "0"]
    for a in frame.actors:
        fields.append(f"{a.aid}:{a.kind}:{a.x}:{a.y}:{1 if a.alive else 0}:{a.facing}")
    return fields


def _parse_frame_fields(fields: list[str]) -> Frame:
    try:
        tick, score, over = int(fields[0]), int(fields[1]), fields[2] == "1"
        actors = []
        for tok in fields[3:]:
            aid, kind, x, y, alive, facing = tok.split(":")
            actors.append(ActorView(int(aid), kind, int(x), int(y),
                                    alive == "1", int(facing)))
    except (ValueError, IndexError) as exc:
        raise TraceFormatError(f"bad frame line: {exc}") from exc
    return Frame(tick, score, over, tuple(actors))


def serialize_trace(trace: Trace) -> str:
    lines = [
        f"script\t{trace.script_hash}",
        f"seed\t{trace.seed}",
        f"length\t{trace.length}",
        "actions\t" + (" ".join(a.name for a in trace.actions) if trace.actions else "-"),
        "initial\t" + "\t".join(_frame_fields(trace.initial)),
    ]
    for frame, cov in zip(trace.frames, trace.covered):
        covtxt = ",".join(str(i) for i in sorted(cov)) if cov else "-"
        lines.append("frame\t" + "\t".join(_frame_fields(frame)) + "\t" + covtxt)
    return "\n".join(lines) + "\n"


def parse_trace(text: str) -> Trace:
    lines = [ln for ln in text.splitlines() if ln]
    if len(lines) < 5:
        raise TraceFormatError("trace file too short")
    head = {}
    for ln in lines[:4]:
        key, _, val = ln.partition("\t")
        head[key] = val
    try:
        shash = head["script"]
        seed = int(head["seed"])
        length = int(head["length"])
        acts = head["actions"]
    except (KeyError, ValueError) as exc:
        raise TraceFormatError(f"bad trace header: {exc}") from exc
    if acts == "-":
        actions: tuple[Action, ...] = ()
    else:
        try:
            actions = tuple(ACTION_BY_NAME[w] for w in acts.split(" "))
        except KeyError as exc:
            raise TraceFormatError(f"unknown action {exc}") from exc
    if not lines[4].startswith("initial\t"):
        raise TraceFormatError("missing initial frame")
    initial = _parse_frame_fields(lines[4].split("\t")[1:])
    frames: list[Frame] = []
    covered: list[frozenset[int]] = []
    for ln in lines[5:]:
        fields = ln.split("\t")
        if fields[0] != "frame":
            raise TraceFormatError(f"unexpected line {fields[0]!r}")
        covtxt = fields[-1]
        frames.append(_parse_frame_fields(fields[1:-1]))
        covered.append(frozenset() if covtxt == "-"
                       else frozenset(int(s) for s in covtxt.split(",")))
    if length != len(actions) or length != len(frames):
        raise TraceFormatError("length header disagrees with body")
    return Trace(shash, seed, actions, initial, tuple(frames), tuple(covered))


# --- level serialisation -------------------------------------------------------


def serialize_level(level: LevelLayout) -> str:
    solids = " ".join(f"{x},{y}" for x, y in sorted(level.solids)) or "-"
    lines = [f"size\t{level.width}\t{level.height}", f"solids\t{solids}"]
    for s in level.spawns:
        lines.append(f"spawn\t{s.kind}\t{s.x}\t{s.y}\t{s.facing}")
    return "\n".join(lines) + "\n"


def parse_level(text: str) -> LevelLayout:
    width = height = None
    solids: frozenset[tuple[int, int]] = frozenset()
    spawns: list[Spawn] = []
    try:
        for ln in text.splitlines():
            if not ln:
                continue
            fields = ln.split("\t")
            if fields[0] == "size":
                width, height = int(fields[1]), int(fields[2])
            elif fields[0] == "solids":
                if fields[1] != "-":
                    solids = frozenset(
                        (int(t.split(",")[0]), int(t.split(",")[1]))
                        for t in fields[1].split(" "))
            elif fields[0] == "spawn":
                spawns.append(Spawn(fields[1], int(fields[2]),
                                    int(fields[3]), int(fields[4])))
            else:
                raise LayoutError(f"unexpected level line {fields[0]!r}")
    except (ValueError, IndexError) as exc:
        raise LayoutError(f"bad level text: {exc}") from exc
    if width is None or height is None:
        raise LayoutError("level text is missing its size line")
    level = LevelLayout(width, height, solids, tuple(spawns))
    level.validate()
    return level


# --- shadow guard evaluation (used for deleted-statement markers) -------------


def guard_may_fire_on_frame(stmt: Statement, pre_frame: Frame, action: Action,
                            level: LevelLayout) -> bool:
    """Would the statement's guard plausibly have fired at a step whose
    pre-state is `pre_frame`? Comparisons involving the random draw count as
    firing, since frames do not record draw outcomes."""
    subject_kind = stmt.subject_kind()
    sim = _Sim.from_state(WorldState(level, pre_frame.actors, pre_frame.score,
                                     False, pre_frame.tick, 0))
    if any(_atom_has_rand(a) for a in stmt.guard.atoms):
        candidates = [a for a in sim.kinds[subject_kind] if a.alive]
        if not candidates:
            return False
        non_rand = [a for a in stmt.guard.atoms if not _atom_has_rand(a)]
        if stmt.guard.negated:
            # A negated guard containing a random comparison can always fire.
            return True
        fns = [_compile_atom(a, subject_kind) for a in non_rand]
        return any(all(f(sim, s, action) for f in fns) for s in candidates)
    guard = _compile_guard(stmt.guard, subject_kind)
    return any(s.alive and guard(sim, s, action) for s in sim.kinds[subject_kind])


def _atom_has_rand(atom) -> bool:
    if not isinstance(atom, rules.CompareAtom):
        return False
    return _term_has_rand(atom.left) or _term_has_rand(atom.right)


def _term_has_rand(term) -> bool:
    if isinstance(term, rules.RandTerm):
        return True
    if isinstance(term, rules.BinTerm):
        return _term_has_rand(term.left) or _term_has_rand(term.right)
    return False


# --- bundled game content ------------------------------------------------------

DEFAULT_SCRIPT_TEXT = """\
0: IF touching(player, bomb) THEN game_over <- 1
1: IF player.y < 0 THEN game_over <- 1
2: IF touching(coin, player) THEN score <- score + 10
3: IF touching(coin, player) THEN kill(coin)
4: IF touching(player, goal) THEN score <- score + 50
5: IF touching(player, goal) THEN game_over <- 1
6: IF action == LEFT AND player.x > 0 AND open(player, -1) THEN player.x <- player.x - 1
7: IF action == RIGHT AND player.x < 11 AND open(player, 1) THEN player.x <- player.x + 1
8: IF action == JUMP AND grounded(player) THEN player.y <- player.y + 2
9: IF NOT ( grounded(player) ) THEN player.y <- player.y - 1
10: IF rand100 < 20 THEN bomb.facing <- 0 - bomb.facing
11: IF bomb.x < 7 THEN bomb.facing <- 1
12: IF bomb.x > 9 THEN bomb.facing <- -1
13: IF alive(bomb) THEN bomb.x <- bomb.x + bomb.facing
"""

_DEFAULT_WIDTH = 12
_DEFAULT_HEIGHT = 8
_HOLE_X = 5


def default_script() -> RuleScript:
    return _default_script_cached()


@lru_cache(maxsize=1)
def _default_script_cached() -> RuleScript:
    return rules.parse_script(DEFAULT_SCRIPT_TEXT, require_contiguous=True)


@lru_cache(maxsize=1)
def default_level() -> LevelLayout:
    solids = frozenset((x, 0) for x in range(_DEFAULT_WIDTH) if x != _HOLE_X)
    spawns = (
        Spawn("player", 0, 1),
        Spawn("coin", 2, 1),
        Spawn("coin", 4, 2),
        Spawn("coin", 7, 1),
        Spawn("bomb", 9, 1, facing=-1),
        Spawn("goal", 11, 1),
    )
    level = LevelLayout(_DEFAULT_WIDTH, _DEFAULT_HEIGHT, solids, spawns)
    level.validate()
    return level
