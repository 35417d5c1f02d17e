"""RuleScript: the guarded-rule language the example game is written in.

A script is an ordered list of statements of the form

    id: IF <guard> THEN <effect>

Guards are conjunctions of atoms, optionally negated as a whole with
`NOT ( ... )`. Atoms compare numeric terms with < / > / ==, test the current
input (`action == RIGHT`), or use one of the world predicates touching /
grounded / open / alive. Effects assign a term to an actor attribute, to
`score` or to `game_over`, or kill the subject actor.

Statements are quantified over live actors of a "subject" kind (the kind the
effect targets, else the first kind named in the guard, else the player), so
`IF touching(coin, player) THEN kill(coin)` runs once per live coin.

Everything here is a frozen dataclass so scripts hash and compare by value;
the interpreter lives in engine.py and the mutation operators in mutation.py.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

from .errors import RuleParseError

ACTOR_KINDS = ("player", "coin", "bomb", "goal")
TERM_ATTRS = ("x", "y", "facing")
ACTION_NAMES = ("LEFT", "RIGHT", "JUMP", "NOOP")
REL_OPS = ("<", ">", "==")
ARITH_OPS = ("+", "-")


# --- terms ------------------------------------------------------------------


@dataclass(frozen=True)
class Lit:
    value: int

    def text(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class AttrTerm:
    kind: str
    attr: str

    def text(self) -> str:
        return f"{self.kind}.{self.attr}"


@dataclass(frozen=True)
class ScoreTerm:
    def text(self) -> str:
        return "score"


@dataclass(frozen=True)
class RandTerm:
    """Fresh uniform draw in [0, 100) each time the enclosing comparison is
    evaluated. The only stochastic element in the language."""

    def text(self) -> str:
        return "rand100"


@dataclass(frozen=True)
class BinTerm:
    op: str
    left: "Term"
    right: "Term"

    def text(self) -> str:
        return f"{self.left.text()} {self.op} {self.right.text()}"


Term = Lit | AttrTerm | ScoreTerm | RandTerm | BinTerm


# --- guard atoms ------------------------------------------------------------


@dataclass(frozen=True)
class ActionIs:
    action: str

    def text(self) -> str:
        return f"action == {self.action}"


@dataclass(frozen=True)
class TouchingAtom:
    kind_a: str
    kind_b: str

    def text(self) -> str:
        return f"touching({self.kind_a}, {self.kind_b})"


@dataclass(frozen=True)
class GroundedAtom:
    kind: str

    def text(self) -> str:
        return f"grounded({self.kind})"


@dataclass(frozen=True)
class OpenAtom:
    """True when the cell `dx` columns over from the actor is not solid."""

    kind: str
    dx: int

    def text(self) -> str:
        return f"open({self.kind}, {self.dx})"


@dataclass(frozen=True)
class AliveAtom:
    kind: str

    def text(self) -> str:
        return f"alive({self.kind})"


@dataclass(frozen=True)
class CompareAtom:
    left: Term
    op: str
    right: Term

    def text(self) -> str:
        return f"{self.left.text()} {self.op} {self.right.text()}"


Atom = ActionIs | TouchingAtom | GroundedAtom | OpenAtom | AliveAtom | CompareAtom


@dataclass(frozen=True)
class Guard:
    atoms: tuple[Atom, ...]
    negated: bool = False

    def text(self) -> str:
        inner = " AND ".join(a.text() for a in self.atoms)
        return f"NOT ( {inner} )" if self.negated else inner


# --- effects ----------------------------------------------------------------


@dataclass(frozen=True)
class AssignAttr:
    kind: str
    attr: str
    term: Term

    def text(self) -> str:
        return f"{self.kind}.{self.attr} <- {self.term.text()}"


@dataclass(frozen=True)
class AssignScore:
    term: Term

    def text(self) -> str:
        return f"score <- {self.term.text()}"


@dataclass(frozen=True)
class AssignGameOver:
    term: Term

    def text(self) -> str:
        return f"game_over <- {self.term.text()}"


@dataclass(frozen=True)
class KillEffect:
    kind: str

    def text(self) -> str:
        return f"kill({self.kind})"


Effect = AssignAttr | AssignScore | AssignGameOver | KillEffect


@dataclass(frozen=True)
class Statement:
    sid: int
    guard: Guard
    effect: Effect

    def text(self) -> str:
        return f"{self.sid}: IF {self.guard.text()} THEN {self.effect.text()}"

    def subject_kind(self) -> str:
        """The actor kind the statement is quantified over."""
        eff = self.effect
        if isinstance(eff, (AssignAttr, KillEffect)):
            return eff.kind
        for atom in self.guard.atoms:
            k = _first_kind_in_atom(atom)
            if k is not None:
                return k
        return "player"


@dataclass(frozen=True)
class RuleScript:
    statements: tuple[Statement, ...]

    def text(self) -> str:
        return "".join(s.text() + "\n" for s in self.statements)

    def by_id(self, sid: int) -> Statement:
        for s in self.statements:
            if s.sid == sid:
                return s
        raise KeyError(f"no statement with id {sid}")


def _first_kind_in_atom(atom: Atom) -> str | None:
    if isinstance(atom, TouchingAtom):
        return atom.kind_a
    if isinstance(atom, (GroundedAtom, OpenAtom, AliveAtom)):
        return atom.kind
    if isinstance(atom, CompareAtom):
        for term in (atom.left, atom.right):
            k = _first_kind_in_term(term)
            if k is not None:
                return k
    return None


def _first_kind_in_term(term: Term) -> str | None:
    if isinstance(term, AttrTerm):
        return term.kind
    if isinstance(term, BinTerm):
        return _first_kind_in_term(term.left) or _first_kind_in_term(term.right)
    return None


def script_hash(script: RuleScript) -> str:
    return hashlib.sha256(script.text().encode("utf-8")).hexdigest()


# --- parsing ----------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<int>\d+)
  | (?P<name>[a-z_][a-z0-9_]*|[A-Z][A-Z0-9_]*)
  | (?P<sym><-|==|[:(),.<>+-])
    """,
    re.VERBOSE,
)


def _tokenize(line: str, lineno: int) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(line):
        m = _TOKEN_RE.match(line, pos)
        if m is None:
            raise RuleParseError(f"bad character {line[pos]!r}", lineno, pos + 1)
        if m.lastgroup != "ws":
            tokens.append((m.lastgroup, m.group(), pos + 1))
        pos = m.end()
    tokens.append(("eof", "", len(line) + 1))
    return tokens


class _LineParser:
    def __init__(self, line: str, lineno: int) -> None:
        self.tokens = _tokenize(line, lineno)
        self.lineno = lineno
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def take(self, ttype: str | None = None, value: str | None = None) -> str:
        typ, val, col = self.tokens[self.i]
        if ttype is not None and typ != ttype:
            raise RuleParseError(f"expected {ttype}, got {val!r}", self.lineno, col)
        if value is not None and val != value:
            raise RuleParseError(f"expected {value!r}, got {val!r}", self.lineno, col)
        self.i += 1
        return val

    def error(self, msg: str) -> RuleParseError:
        _, val, col = self.tokens[self.i]
        return RuleParseError(f"{msg} (at {val!r})", self.lineno, col)

    # grammar ---------------------------------------------------------------

    def statement(self) -> Statement:
        sid = int(self.take("int"))
        self.take("sym", ":")
        self.take("name", "IF")
        guard = self.guard()
        self.take("name", "THEN")
        effect = self.effect()
        self.take("eof")
        return Statement(sid, guard, effect)

    def guard(self) -> Guard:
        if self.peek()[:2] == ("name", "NOT"):
            self.take()
            self.take("sym", "(")
            atoms = self.conj()
            self.take("sym", ")")
            return Guard(atoms, negated=True)
        return Guard(self.conj())

    def conj(self) -> tuple[Atom, ...]:
        atoms = [self.atom()]
        while self.peek()[:2] == ("name", "AND"):
            self.take()
            atoms.append(self.atom())
        return tuple(atoms)

    def atom(self) -> Atom:
        typ, val, _ = self.peek()
        if typ == "name" and val == "action":
            self.take()
            self.take("sym", "==")
            act = self.take("name")
            if act not in ACTION_NAMES:
                raise self.error(f"unknown action {act!r}")
            return ActionIs(act)
        if typ == "name" and val in ("touching", "grounded", "open", "alive"):
            return self.predicate(val)
        left = self.term()
        typ, val, _ = self.peek()
        if typ != "sym" or val not in REL_OPS:
            raise self.error("expected comparison operator")
        op = self.take()
        right = self.term()
        return CompareAtom(left, op, right)

    def predicate(self, name: str) -> Atom:
        self.take()
        self.take("sym", "(")
        kind = self.kind()
        if name == "touching":
            self.take("sym", ",")
            other = self.kind()
            self.take("sym", ")")
            return TouchingAtom(kind, other)
        if name == "open":
            self.take("sym", ",")
            dx = self.int_literal()
            self.take("sym", ")")
            return OpenAtom(kind, dx)
        self.take("sym", ")")
        return GroundedAtom(kind) if name == "grounded" else AliveAtom(kind)

    def kind(self) -> str:
        val = self.take("name")
        if val not in ACTOR_KINDS:
            raise self.error(f"unknown actor kind {val!r}")
        return val

    def int_literal(self) -> int:
        if self.peek()[:2] == ("sym", "-"):
            self.take()
            return -int(self.take("int"))
        return int(self.take("int"))

    def term(self) -> Term:
        left = self.factor()
        while self.peek()[0] == "sym" and self.peek()[1] in ARITH_OPS:
            op = self.take()
            right = self.factor()
            left = BinTerm(op, left, right)
        return left

    def factor(self) -> Term:
        typ, val, _ = self.peek()
        if typ == "sym" and val == "-":
            self.take()
            return Lit(-int(self.take("int")))
        if typ == "int":
            return Lit(int(self.take()))
        if typ == "name" and val == "score":
            self.take()
            return ScoreTerm()
        if typ == "name" and val == "rand100":
            self.take()
            return RandTerm()
        if typ == "name" and val in ACTOR_KINDS:
            kind = self.take()
            self.take("sym", ".")
            attr = self.take("name")
            if attr not in TERM_ATTRS:
                raise self.error(f"unknown attribute {attr!r}")
            return AttrTerm(kind, attr)
        raise self.error("expected a term")

    def effect(self) -> Effect:
        typ, val, _ = self.peek()
        if typ == "name" and val == "kill":
            self.take()
            self.take("sym", "(")
            kind = self.kind()
            self.take("sym", ")")
            return KillEffect(kind)
        if typ == "name" and val == "score":
            self.take()
            self.take("sym", "<-")
            return AssignScore(self.term())
        if typ == "name" and val == "game_over":
            self.take()
            self.take("sym", "<-")
            return AssignGameOver(self.term())
        if typ == "name" and val in ACTOR_KINDS:
            kind = self.take()
            self.take("sym", ".")
            attr = self.take("name")
            if attr not in TERM_ATTRS:
                raise self.error(f"unknown attribute {attr!r}")
            self.take("sym", "<-")
            return AssignAttr(kind, attr, self.term())
        raise self.error("expected an effect")


def parse_script(text: str, *, require_contiguous: bool = False) -> RuleScript:
    """Parse canonical RuleScript text.

    Statement ids must be unique and strictly ascending. Authored scripts are
    additionally contiguous from 0; mutant exports (where a statement may have
    been deleted) are not, so contiguity is opt-in.
    """
    statements = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        statements.append(_LineParser(line, lineno).statement())
    ids = [s.sid for s in statements]
    if any(b <= a for a, b in zip(ids, ids[1:])):
        raise RuleParseError("statement ids must be strictly ascending", 0, 0)
    if require_contiguous and ids != list(range(len(ids))):
        raise RuleParseError("statement ids must be contiguous from 0", 0, 0)
    return RuleScript(tuple(statements))
