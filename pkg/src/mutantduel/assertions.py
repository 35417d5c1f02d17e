"""Block-based assertion language players snap together in the editor.

An assertion is a scoped IF/THEN over trace frames:

    GLOBAL IF Touching(Player, Bomb) THEN GameOver
    AT 12 IF Compare(Attr(Player, x), ==, 6) THEN AttributeIs(Attr(Player, y), ==, 1)
    WINDOW 0 30 IF Touching(Player, Coin) THEN ScoreIncreases

The grammar is closed. Conditions are a touch test or one comparison of an
actor attribute against an integer; outcomes are GameOver, ScoreIncreases or
one attribute comparison. Blocks carry a colour category so editors can render
them; equality of assertions is structural tree equality plus scope equality,
with ownership metadata excluded.

Evaluation semantics, chosen to line up with how the engine lands effects one
frame after the contact that caused them:

* the condition is checked on each in-scope frame; a step where it holds is a
  trigger;
* GameOver is satisfied if the flag is set at the trigger step or the next;
* ScoreIncreases means the next frame's score is strictly higher (a trigger on
  the final frame cannot be satisfied);
* AttributeIs is checked on the trigger frame itself;
* Touching requires both actors alive and in the same cell; plain attribute
  reads quantify over all actors of the kind, dead ones included, so
  `Compare(Attr(Coin, alive), ==, 0)` is expressible.

The verdict is Violated at the first trigger whose outcome fails, Holds when
every trigger passed, NeverTriggered when the condition never held in scope.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

from .engine import Frame, Trace
from .errors import AssertionParseError, ScopeError

CATEGORIES = ("construct", "actor", "attribute", "operator", "value", "outcome")
ACTOR_NAMES = ("Player", "Coin", "Bomb", "Goal")
ATTR_NAMES = ("x", "y", "score", "alive")
OP_SYMBOLS = ("<", ">", "==")
_OP_KIND = {"<": "Less", ">": "Greater", "==": "Equals"}
_KIND_OP = {v: k for k, v in _OP_KIND.items()}

# Action-point price by block kind; only constructs cost anything.
CONSTRUCT_PRICES = {"IfThen": 5}


def construct_cost(kind: str) -> int:
    return CONSTRUCT_PRICES.get(kind, 0)


@dataclass(frozen=True)
class Block:
    category: str
    kind: str
    children: tuple["Block", ...] = ()
    payload: int | None = None


class VerdictStatus(str, enum.Enum):
    HOLDS = "Holds"
    VIOLATED = "Violated"
    NEVER_TRIGGERED = "NeverTriggered"


@dataclass(frozen=True)
class Verdict:
    status: VerdictStatus
    violated_at: int | None = None
    triggered_steps: tuple[int, ...] = ()


@dataclass(frozen=True)
class GlobalScope:
    def text(self) -> str:
        return "GLOBAL"


@dataclass(frozen=True)
class AtStep:
    t: int

    def text(self) -> str:
        return f"AT {self.t}"


@dataclass(frozen=True)
class Window:
    t1: int
    t2: int

    def text(self) -> str:
        return f"WINDOW {self.t1} {self.t2}"


Scope = GlobalScope | AtStep | Window


@dataclass(frozen=True)
class Assertion:
    scope: Scope
    root: Block
    owner: str | None = field(default=None, compare=False)
    source_trace: str | None = field(default=None, compare=False)


def blocks_equal(a: Assertion, b: Assertion) -> bool:
    """Structural equality: same tree, same scope; ownership ignored."""
    return a.root == b.root and a.scope == b.scope


# --- builders -----------------------------------------------------------------


def actor_block(name: str) -> Block:
    if name not in ACTOR_NAMES:
        raise ValueError(f"unknown actor {name!r}")
    return Block("actor", name)


def attr_block(actor: str, attr: str) -> Block:
    if attr not in ATTR_NAMES:
        raise ValueError(f"unknown attribute {attr!r}")
    return Block("attribute", attr, (actor_block(actor),))


def value_block(v: int) -> Block:
    return Block("value", "Int", payload=int(v))


def compare_block(actor: str, attr: str, op: str, value: int) -> Block:
    return Block("operator", _OP_KIND[op], (attr_block(actor, attr), value_block(value)))


def touching_block(actor_a: str, actor_b: str) -> Block:
    return Block("operator", "Touching", (actor_block(actor_a), actor_block(actor_b)))


def game_over_block() -> Block:
    return Block("outcome", "GameOver")


def score_increases_block() -> Block:
    return Block("outcome", "ScoreIncreases")


def attribute_is_block(actor: str, attr: str, op: str, value: int) -> Block:
    return Block("outcome", "AttributeIs", (compare_block(actor, attr, op, value),))


def if_then(condition: Block, outcome: Block, scope: Scope | None = None,
            owner: str | None = None, source_trace: str | None = None) -> Assertion:
    root = Block("construct", "IfThen", (condition, outcome))
    return Assertion(scope or GlobalScope(), root, owner, source_trace)


# --- serialisation --------------------------------------------------------------


def _attr_text(block: Block) -> str:
    (actor,) = block.children
    return f"Attr({actor.kind}, {block.kind})"


def _condition_text(block: Block) -> str:
    if block.kind == "Touching":
        a, b = block.children
        return f"Touching({a.kind}, {b.kind})"
    attr, val = block.children
    return f"Compare({_attr_text(attr)}, {_KIND_OP[block.kind]}, {val.payload})"


def _outcome_text(block: Block) -> str:
    if block.kind == "GameOver":
        return "GameOver"
    if block.kind == "ScoreIncreases":
        return "ScoreIncreases"
    (cmp,) = block.children
    attr, val = cmp.children
    return f"AttributeIs({_attr_text(attr)}, {_KIND_OP[cmp.kind]}, {val.payload})"


def serialize(assertion: Assertion) -> str:
    cond, out = assertion.root.children
    return (f"{assertion.scope.text()} IF {_condition_text(cond)} "
            f"THEN {_outcome_text(out)}")


# --- parsing ---------------------------------------------------------------------

_ASSERT_TOKEN = re.compile(
    r"\s*(?:(?P<int>-?\d+)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<sym>==|[(),<>]))")


class _Parser:
    def __init__(self, text: str) -> None:
        self.text = text
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            m = _ASSERT_TOKEN.match(text, pos)
            if m is None or m.lastgroup is None:
                raise AssertionParseError(f"bad character {text[pos]!r}", pos + 1)
            self.tokens.append((m.lastgroup, m.group().strip(), m.start() + 1))
            pos = m.end()
        self.tokens.append(("eof", "", len(text) + 1))
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def take(self, ttype: str | None = None, value: str | None = None) -> str:
        typ, val, col = self.tokens[self.i]
        if (ttype is not None and typ != ttype) or (value is not None and val != value):
            raise AssertionParseError(f"expected {value or ttype}, got {val!r}", col)
        self.i += 1
        return val

    def int_value(self) -> int:
        return int(self.take("int"))

    def op(self) -> str:
        typ, val, col = self.peek()
        if typ == "sym" and val in OP_SYMBOLS:
            self.i += 1
            return val
        raise AssertionParseError(f"expected <, > or ==, got {val!r}", col)

    def actor(self) -> str:
        typ, val, col = self.peek()
        if typ == "name" and val in ACTOR_NAMES:
            self.i += 1
            return val
        raise AssertionParseError(f"unknown actor {val!r}", col)

    def attr_ref(self) -> tuple[str, str]:
        self.take("name", "Attr")
        self.take("sym", "(")
        actor = self.actor()
        self.take("sym", ",")
        typ, val, col = self.peek()
        if typ != "name" or val not in ATTR_NAMES:
            raise AssertionParseError(f"unknown attribute {val!r}", col)
        self.i += 1
        self.take("sym", ")")
        return actor, val

    def scope(self) -> Scope:
        typ, val, col = self.peek()
        if typ == "name" and val == "GLOBAL":
            self.i += 1
            return GlobalScope()
        if typ == "name" and val == "AT":
            self.i += 1
            return AtStep(self.int_value())
        if typ == "name" and val == "WINDOW":
            self.i += 1
            t1 = self.int_value()
            t2 = self.int_value()
            return Window(t1, t2)
        raise AssertionParseError(f"expected scope, got {val!r}", col)

    def condition(self) -> Block:
        typ, val, col = self.peek()
        if typ == "name" and val == "Touching":
            self.i += 1
            self.take("sym", "(")
            a = self.actor()
            self.take("sym", ",")
            b = self.actor()
            self.take("sym", ")")
            return touching_block(a, b)
        if typ == "name" and val == "Compare":
            self.i += 1
            self.take("sym", "(")
            actor, attr = self.attr_ref()
            self.take("sym", ",")
            op = self.op()
            self.take("sym", ",")
            value = self.int_value()
            self.take("sym", ")")
            return compare_block(actor, attr, op, value)
        raise AssertionParseError(f"expected condition, got {val!r}", col)

    def outcome(self) -> Block:
        typ, val, col = self.peek()
        if typ == "name" and val == "GameOver":
            self.i += 1
            return game_over_block()
        if typ == "name" and val == "ScoreIncreases":
            self.i += 1
            return score_increases_block()
        if typ == "name" and val == "AttributeIs":
            self.i += 1
            self.take("sym", "(")
            actor, attr = self.attr_ref()
            self.take("sym", ",")
            op = self.op()
            self.take("sym", ",")
            value = self.int_value()
            self.take("sym", ")")
            return attribute_is_block(actor, attr, op, value)
        raise AssertionParseError(f"expected outcome, got {val!r}", col)


def parse(text: str, owner: str | None = None,
          source_trace: str | None = None) -> Assertion:
    p = _Parser(text)
    scope = p.scope()
    p.take("name", "IF")
    condition = p.condition()
    p.take("name", "THEN")
    outcome = p.outcome()
    p.take("eof")
    return if_then(condition, outcome, scope, owner, source_trace)


# --- evaluation -------------------------------------------------------------------


def _attr_value(view, attr: str, frame: Frame) -> int:
    if attr == "x":
        return view.x
    if attr == "y":
        return view.y
    if attr == "alive":
        return 1 if view.alive else 0
    return frame.score  # score is global; the actor ref is just grammar


def _cmp(op_kind: str, left: int, right: int) -> bool:
    if op_kind == "Less":
        return left < right
    if op_kind == "Greater":
        return left > right
    return left == right


def _condition_holds(block: Block, frame: Frame) -> bool:
    if block.kind == "Touching":
        a, b = block.children
        views_a = [v for v in frame.actors if v.kind == a.kind.lower() and v.alive]
        views_b = [v for v in frame.actors if v.kind == b.kind.lower() and v.alive]
        return any(va is not vb and va.x == vb.x and va.y == vb.y
                   for va in views_a for vb in views_b)
    attr, val = block.children
    (actor,) = attr.children
    kind = actor.kind.lower()
    return any(_cmp(block.kind, _attr_value(v, attr.kind, frame), val.payload)
               for v in frame.actors if v.kind == kind)


def _outcome_holds(block: Block, trace: Trace, t: int) -> bool:
    frames = trace.frames
    if block.kind == "GameOver":
        if frames[t].game_over:
            return True
        return t + 1 < len(frames) and frames[t + 1].game_over
    if block.kind == "ScoreIncreases":
        return t + 1 < len(frames) and frames[t + 1].score > frames[t].score
    (cmp,) = block.children
    return _condition_holds(cmp, frames[t])


def _scope_steps(scope: Scope, length: int, lenient: bool) -> range:
    if isinstance(scope, GlobalScope):
        return range(length)
    if isinstance(scope, AtStep):
        if 0 <= scope.t < length:
            return range(scope.t, scope.t + 1)
        if lenient:
            return range(0)
        raise ScopeError(f"step {scope.t} outside trace of length {length}")
    if scope.t1 < 0 or scope.t1 > scope.t2:
        raise ScopeError(f"bad window {scope.t1}..{scope.t2}")
    if scope.t2 > length and not lenient:
        raise ScopeError(f"window end {scope.t2} outside trace of length {length}")
    return range(scope.t1, min(scope.t2 + 1, length))


def evaluate(assertion: Assertion, trace: Trace, *, lenient: bool = False) -> Verdict:
    """Check an assertion against a trace.

    With lenient=True, scope indices that fall outside the trace yield
    NeverTriggered instead of raising; used when replaying against mutants,
    where the game may end earlier than on the recording.
    """
    cond, out = assertion.root.children
    triggered: list[int] = []
    for t in _scope_steps(assertion.scope, trace.length, lenient):
        if _condition_holds(cond, trace.frames[t]):
            triggered.append(t)
            if not _outcome_holds(out, trace, t):
                return Verdict(VerdictStatus.VIOLATED, t, tuple(triggered))
    if triggered:
        return Verdict(VerdictStatus.HOLDS, None, tuple(triggered))
    return Verdict(VerdictStatus.NEVER_TRIGGERED, None, ())
