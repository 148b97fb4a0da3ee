"""flounderlab: logic programs with delays, floundering made analysable.

Parse ``.dlp`` programs, execute them under SLDF resolution, rewrite
floundering into success with the sf/f source transformations, and analyse
the resulting delay-free programs by fair enumeration, bounded bottom-up
fixpoints, and Boolean groundness abstraction.
"""

from .engine import (
    BuiltinError,
    DepthExceeded,
    Engine,
    FiniteFailure,
    Floundered,
    LeftmostCallable,
    RightmostCallable,
    SeededRandomCallable,
    Success,
)
from .program import Clause, DelayDecl, Disj, Program
from .syntax import ParseError, parse_goal, parse_program, parse_term, program_text
from .terms import Atom, Struct, Substitution, Symbol, Var, decode, encode, unify

__version__ = "0.1.0"

__all__ = [
    "Atom",
    "BuiltinError",
    "Clause",
    "DelayDecl",
    "DepthExceeded",
    "Disj",
    "Engine",
    "FiniteFailure",
    "Floundered",
    "LeftmostCallable",
    "ParseError",
    "Program",
    "RightmostCallable",
    "SeededRandomCallable",
    "Struct",
    "Substitution",
    "Success",
    "Symbol",
    "Var",
    "decode",
    "encode",
    "parse_goal",
    "parse_program",
    "parse_term",
    "program_text",
    "unify",
    "__version__",
]
