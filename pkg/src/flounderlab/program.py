"""Program representation: clauses, delay declarations, builtin registry.

Clause bodies are sequences of goals; a goal is an :class:`~flounderlab.terms.Atom`
or a :class:`Disj` (disjunction of alternative goal sequences).  Source
programs are Horn (atoms only); disjunctions appear in transformed
programs and in delay-clause bodies compiled from ``;`` conditions.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Union

from .terms import Atom, Substitution, Term, Var, int_value, variables_in

VAR_TEST = "var"
NONGROUND_TEST = "nonground"

ORIGINAL = "original"
DELAY = "delay"

# Builtin predicates.  evar/enonground are only registered on transformed
# programs; plus/leq/true/fail are always available.
BASE_BUILTINS = frozenset({("plus", 3), ("leq", 2), ("true", 0), ("fail", 0)})
ENCODING_BUILTINS = frozenset({("evar", 1), ("enonground", 1)})


@dataclass(frozen=True, slots=True)
class Disj:
    """A disjunction of alternative conjunctions of goals."""

    branches: tuple  # tuple[tuple[Goal, ...], ...]

    def subst(self, s: Substitution) -> "Disj":
        return Disj(tuple(tuple(s.apply(g) for g in br) for br in self.branches))

    def rename(self, mapping) -> "Disj":
        from .terms import rename

        return Disj(tuple(tuple(rename(g, mapping) for g in br) for br in self.branches))

    def __iter__(self):
        # iterating a disjunction yields its branches, so generic walkers
        # (variables_in, has_extraneous) descend into them
        return iter(self.branches)

    def __repr__(self):
        return "(" + " ; ".join(", ".join(map(repr, br)) for br in self.branches) + ")"


Goal = Union[Atom, Disj]


def goal_atoms(goals) -> list[Atom]:
    """All atoms occurring in a goal sequence, recursing into disjunctions."""
    out = []
    for g in goals:
        if isinstance(g, Atom):
            out.append(g)
        else:
            for br in g.branches:
                out.extend(goal_atoms(br))
    return out


@dataclass(frozen=True, slots=True)
class DelayDecl:
    """``:- delay p(V1,...,Vn) if C`` with C normalised to DNF.

    ``dnf`` is a tuple of disjuncts; each disjunct is a tuple of primitive
    tests ``(kind, argpos)`` with kind ``var`` or ``nonground``, all of
    which must hold for the disjunct to hold.
    """

    pred: str
    arity: int
    var_names: tuple  # display names for the head variables
    dnf: tuple  # tuple[tuple[tuple[str, int], ...], ...]

    @property
    def key(self) -> tuple[str, int]:
        return (self.pred, self.arity)

    def holds(self, args: tuple) -> bool:
        """Evaluate the condition on actual call arguments: should the call delay?"""
        return any(all(_test(kind, args[pos]) for kind, pos in conj) for conj in self.dnf)

    def merged_with(self, other: "DelayDecl") -> "DelayDecl":
        return replace(self, dnf=self.dnf + other.dnf)


def _test(kind: str, t: Term) -> bool:
    if kind == VAR_TEST:
        return isinstance(t, Var)
    return bool(variables_in(t))  # nonground


# Default delay behaviour of the arithmetic builtins: plus/3 delays until
# two of its three arguments are instantiated, leq/2 until both are.
PLUS_DECL = DelayDecl(
    "plus",
    3,
    ("A", "B", "C"),
    (
        ((VAR_TEST, 0), (VAR_TEST, 1)),
        ((VAR_TEST, 0), (VAR_TEST, 2)),
        ((VAR_TEST, 1), (VAR_TEST, 2)),
    ),
)
LEQ_DECL = DelayDecl("leq", 2, ("A", "B"), (((VAR_TEST, 0),), ((VAR_TEST, 1),)))
BUILTIN_DECLS = {("plus", 3): PLUS_DECL, ("leq", 2): LEQ_DECL}


@dataclass(frozen=True, slots=True)
class Clause:
    """``head :- body`` with a program-unique positive id.

    Id 0 is reserved for top-level goals in derivation annotations.
    ``tag`` distinguishes transformation-added delay clauses.
    """

    id: int
    head: Atom
    body: tuple = ()  # tuple[Goal, ...]
    tag: str = ORIGINAL

    @property
    def key(self) -> tuple[str, int]:
        return self.head.key


class ProgramError(ValueError):
    """A structural violation detected while building a Program."""


@dataclass(frozen=True)
class Program:
    """An immutable logic program: clauses, delay declarations, builtins."""

    clauses: tuple = ()
    delays: tuple = ()
    builtins: frozenset = BASE_BUILTINS

    def __post_init__(self):
        index: dict[tuple[str, int], list[Clause]] = {}
        ids = set()
        for c in self.clauses:
            if c.id < 1:
                raise ProgramError(f"clause id must be >= 1: {c.id}")
            if c.id in ids:
                raise ProgramError(f"duplicate clause id {c.id}")
            ids.add(c.id)
            index.setdefault(c.key, []).append(c)
        delay_index = {}
        for d in self.delays:
            if d.key in delay_index:
                raise ProgramError(f"multiple delay declarations for {d.pred}/{d.arity}")
            delay_index[d.key] = d
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_delay_index", delay_index)

    def clauses_for(self, key: tuple[str, int]) -> list[Clause]:
        return self._index.get(key, [])

    def delay_for(self, key: tuple[str, int]) -> DelayDecl | None:
        d = self._delay_index.get(key)
        if d is not None:
            return d
        if key in self.builtins:
            return BUILTIN_DECLS.get(key)
        return None

    def has_delays(self) -> bool:
        return bool(self.delays)

    def is_builtin(self, key: tuple[str, int]) -> bool:
        return key in self.builtins

    def predicates(self) -> list[tuple[str, int]]:
        """Defined (non-builtin) predicates, in order of first clause."""
        seen = []
        for c in self.clauses:
            if c.key not in seen:
                seen.append(c.key)
        return seen

    def function_symbols(self) -> list:
        """Program function symbols appearing in clauses, constants first."""
        from .terms import Struct, subterms

        seen = {}
        for c in self.clauses:
            for a in [c.head] + goal_atoms(c.body):
                for t in a.args:
                    for s in subterms(t):
                        if isinstance(s, Struct) and not s.symbol.is_extraneous:
                            seen.setdefault(s.symbol, None)
        syms = list(seen)
        return sorted(syms, key=lambda s: (s.arity, s.name))

    def used_builtin_keys(self) -> set:
        """Builtin predicates actually called from clause bodies."""
        used = set()
        for c in self.clauses:
            for a in goal_atoms(c.body):
                if a.key in self.builtins:
                    used.add(a.key)
        return used

    def integer_constants(self) -> list[int]:
        from .terms import const

        out = set()
        for sym in self.function_symbols():
            if sym.arity == 0:
                v = int_value(const(sym.name))
                if v is not None:
                    out.add(v)
        return sorted(out)


@dataclass(frozen=True)
class SfProgram(Program):
    """A delay-free program whose clause set is the source clauses (with
    predicates suffixed ``_sf``) plus one delay clause per declaration."""

    source: Program = None

    def delay_clauses(self) -> list[Clause]:
        return [c for c in self.clauses if c.tag == DELAY]

    def original_clauses(self) -> list[Clause]:
        return [c for c in self.clauses if c.tag == ORIGINAL]


@dataclass(frozen=True)
class FProgram(Program):
    """A delay-free program with both ``_sf`` and ``_f`` predicate layers."""

    source: Program = None
    sf: SfProgram = None
