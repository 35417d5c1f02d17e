"""First-order mutants of a RuleScript.

Five operators:

    ROR  relational-operator replacement on numeric comparisons
    AOR  arithmetic-operator replacement (+ and - swap)
    CR   constant replacement: literal c becomes c-1, c+1 or 0
    NEG  whole-guard negation toggle
    SD   statement deletion (remaining ids keep their numbers)

Enumeration is deterministic: statements in script order, operators in the
order above, sites left to right within the statement (guard atoms first,
then the effect term), replacements in a fixed order per site. Mutant ids
are the enumeration indices, so two calls with the same script agree and
two players handed the same prefix length see the same mutants.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .engine import LevelLayout, Trace, default_level, guard_may_fire_on_frame
from .errors import StaleMutantError
from .rng import DetRng, derive_seed
from .rules import (AssignAttr, AssignGameOver, AssignScore, BinTerm, CompareAtom,
                    Lit, OpenAtom, REL_OPS, RuleScript, Statement, Term)

OPERATORS = ("ROR", "AOR", "CR", "NEG", "SD")

# a site path addresses one node inside a statement:
#   ("guard", i, "op")            relational operator of guard atom i
#   ("guard", i, "dx")            column offset of an open() atom
#   ("guard", i, side, *steps)    node inside a comparison term, side lhs/rhs
#   ("effect", *steps)            node inside the effect term
# where steps are "left"/"right" moves through BinTerm chains.
_Path = tuple


@dataclass(frozen=True)
class Mutant:
    mid: int
    operator: str
    target_statement: int
    detail: str
    original: Statement = field(compare=False, repr=False)

    def descriptor(self) -> str:
        return f"{self.mid}\t{self.operator}\t{self.target_statement}\t{self.detail}"


# --- site discovery ---------------------------------------------------------


def _term_sites(term: Term, path: _Path, lits: list, ariths: list) -> None:
    if isinstance(term, Lit):
        lits.append((path, term.value))
    elif isinstance(term, BinTerm):
        _term_sites(term.left, path + ("left",), lits, ariths)
        ariths.append((path, term.op))
        _term_sites(term.right, path + ("right",), lits, ariths)


def _statement_sites(stmt: Statement):
    """Relational, arithmetic and literal sites in canonical left-to-right order."""
    rels: list = []
    ariths: list = []
    lits: list = []
    for i, atom in enumerate(stmt.guard.atoms):
        if isinstance(atom, CompareAtom):
            _term_sites(atom.left, ("guard", i, "lhs"), lits, ariths)
            rels.append((("guard", i, "op"), atom.op))
            _term_sites(atom.right, ("guard", i, "rhs"), lits, ariths)
        elif isinstance(atom, OpenAtom):
            lits.append((("guard", i, "dx"), atom.dx))
    eff = stmt.effect
    if isinstance(eff, (AssignAttr, AssignScore, AssignGameOver)):
        _term_sites(eff.term, ("effect",), lits, ariths)
    return rels, ariths, lits


# --- site patching ----------------------------------------------------------


def _patch_term(term: Term, steps: _Path, make) -> Term:
    if not steps:
        return make(term)
    if steps[0] == "left":
        return dataclasses.replace(term, left=_patch_term(term.left, steps[1:], make))
    return dataclasses.replace(term, right=_patch_term(term.right, steps[1:], make))


def _patch_statement(stmt: Statement, path: _Path, make) -> Statement:
    if path[0] == "effect":
        new_term = _patch_term(stmt.effect.term, path[1:], make)
        return dataclasses.replace(stmt, effect=dataclasses.replace(stmt.effect, term=new_term))
    _, i, slot = path[0], path[1], path[2]
    atom = stmt.guard.atoms[i]
    if slot == "op":
        new_atom = make(atom)
    elif slot == "dx":
        new_atom = make(atom)
    elif slot == "lhs":
        new_atom = dataclasses.replace(atom, left=_patch_term(atom.left, path[3:], make))
    else:
        new_atom = dataclasses.replace(atom, right=_patch_term(atom.right, path[3:], make))
    atoms = stmt.guard.atoms[:i] + (new_atom,) + stmt.guard.atoms[i + 1:]
    return dataclasses.replace(stmt, guard=dataclasses.replace(stmt.guard, atoms=atoms))


def _cr_candidates(c: int) -> list[int]:
    out: list[int] = []
    for v in (c - 1, c + 1, 0):
        if v != c and v not in out:
            out.append(v)
    return out


# --- enumeration ------------------------------------------------------------


def enumerate_mutants(script: RuleScript) -> list[Mutant]:
    """Every syntactically valid first-order mutant, in a fixed order.

    Mutant ids are the list indices. No mutant reproduces the original text:
    every operator changes or removes its one target site.
    """
    out: list[Mutant] = []

    def add(operator: str, stmt: Statement, detail: str) -> None:
        out.append(Mutant(len(out), operator, stmt.sid, detail, stmt))

    for stmt in script.statements:
        rels, ariths, lits = _statement_sites(stmt)
        for si, (_, old) in enumerate(rels):
            for new in (op for op in REL_OPS if op != old):
                add("ROR", stmt, f"rel@{si}:{old}->{new}")
        for si, (_, old) in enumerate(ariths):
            new = "-" if old == "+" else "+"
            add("AOR", stmt, f"arith@{si}:{old}->{new}")
        for si, (_, old) in enumerate(lits):
            for new in _cr_candidates(old):
                add("CR", stmt, f"const@{si}:{old}->{new}")
        add("NEG", stmt, "negate")
        add("SD", stmt, "delete")
    return out


def select_round_mutants(script: RuleScript, n: int, round_seed: int) -> list[Mutant]:
    """Seeded sample of n mutants, identical for every caller.

    The full enumeration is shuffled once from round_seed and the first n
    taken, so a player facing a larger count sees a superset (same order)
    of a player facing a smaller one.
    """
    if n < 0:
        raise ValueError("mutant count must be >= 0")
    pool = enumerate_mutants(script)
    rng = DetRng(derive_seed(round_seed, "round-mutants"))
    return rng.shuffled(pool)[:n]


# --- application ------------------------------------------------------------


def _decode_site(detail: str) -> tuple[str, int, str, str]:
    head, repl = detail.split(":", 1)
    _, idx = head.split("@")
    old, new = repl.split("->")
    return head, int(idx), old, new


def apply(script: RuleScript, m: Mutant) -> RuleScript:
    """The script with mutant m applied; exactly one statement changes."""
    try:
        stmt = script.by_id(m.target_statement)
    except KeyError:
        raise StaleMutantError(
            f"mutant {m.mid} targets missing statement {m.target_statement}") from None

    if m.operator == "SD":
        rest = tuple(s for s in script.statements if s.sid != m.target_statement)
        return RuleScript(rest)
    if m.operator == "NEG":
        guard = dataclasses.replace(stmt.guard, negated=not stmt.guard.negated)
        new_stmt = dataclasses.replace(stmt, guard=guard)
    else:
        rels, ariths, lits = _statement_sites(stmt)
        sites = {"rel": rels, "arith": ariths, "const": lits}
        head, idx, old, new = _decode_site(m.detail)
        kind = head.split("@")[0]
        try:
            path, current = sites[kind][idx]
        except IndexError:
            raise StaleMutantError(
                f"mutant {m.mid} site {m.detail} missing from statement "
                f"{m.target_statement}") from None
        if str(current) != old:
            raise StaleMutantError(
                f"mutant {m.mid} expected {old!r} at {head}, found {current!r}")
        if kind == "rel":
            make = lambda atom: dataclasses.replace(atom, op=new)
        elif kind == "arith":
            make = lambda term: dataclasses.replace(term, op=new)
        elif path[-1] == "dx":
            make = lambda atom: dataclasses.replace(atom, dx=int(new))
        else:
            make = lambda term: Lit(int(new))
        new_stmt = _patch_statement(stmt, path, make)

    stmts = tuple(new_stmt if s.sid == m.target_statement else s
                  for s in script.statements)
    return RuleScript(stmts)


# --- execution marking ------------------------------------------------------


def mutated_steps(trace: Trace, m: Mutant,
                  level: LevelLayout | None = None) -> frozenset[int]:
    """Steps of a mutant-replay trace at which the mutation took effect.

    For every operator except SD this is simply the steps whose covered set
    contains the target statement. A deleted statement never executes, so
    for SD its original guard is shadow-evaluated against each step's
    pre-state frame instead; guards drawing on rand100 count as firable.
    """
    if m.operator != "SD":
        return frozenset(t for t, cov in enumerate(trace.covered)
                         if m.target_statement in cov)
    lvl = level if level is not None else default_level()
    fired = set()
    for t in range(trace.length):
        if guard_may_fire_on_frame(m.original, trace.pre_frame(t),
                                   trace.actions[t], lvl):
            fired.add(t)
    return frozenset(fired)
