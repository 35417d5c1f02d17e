"""Two-player mutant-detection arena over a deterministic grid game.

The pieces compose in layers: a deterministic replayable game engine
(`engine`) runs rule scripts (`rules`); `mutation` enumerates script
variants; `assertions` evaluates player-made oracles over traces;
`match` arbitrates the duel economy; `synthesis` and `policy` turn
finished matches into static and dynamic tests; `server`, `store`,
and `cli` put the whole thing behind a wire protocol with durable,
replayable match records.
"""

from .engine import (Action, LevelLayout, Trace, default_level,
                     default_script, new_world, parse_level, parse_trace,
                     replay, serialize_level, serialize_trace, step)
from .errors import MutantDuelError
from .match import Match, MatchConfig, Phase, start_match
from .mutation import Mutant, apply, enumerate_mutants, select_round_mutants
from .rules import RuleScript, parse_script, script_hash
from .synthesis import StaticTest, harvest, levenshtein, run_suite, synthesize_static

__version__ = "0.1.0"

__all__ = [
    "Action", "LevelLayout", "Match", "MatchConfig", "Mutant",
    "MutantDuelError", "Phase", "RuleScript", "StaticTest", "Trace",
    "apply", "default_level", "default_script", "enumerate_mutants",
    "harvest", "levenshtein", "new_world", "parse_level", "parse_script",
    "parse_trace", "replay", "run_suite", "script_hash",
    "select_round_mutants", "serialize_level", "serialize_trace",
    "start_match", "step", "synthesize_static", "__version__",
]
