"""First-order terms, substitutions, and unification with occurs check.

The function-symbol alphabet is split in two.  Ordinary *program* symbols
are the ones that may appear in source programs and goals.  One reserved
*extraneous* family, ``'VAR'/1`` applied to integer constants, is kept out
of programs so that its ground terms ``'VAR'(0), 'VAR'(1), ...`` can stand
in for variables: :func:`encode` turns a non-ground atom into a ground one
by replacing distinct variables with distinct ``'VAR'(k)`` terms, and
:func:`decode` inverts that by generalising every maximal
extraneous-rooted subterm back into a variable.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Union

PROGRAM = "program"
EXTRANEOUS = "extraneous"

ENCODING_NAME = "VAR"


@dataclass(frozen=True, slots=True)
class Symbol:
    """A function symbol.  Constants are symbols of arity 0."""

    name: str
    arity: int

    @property
    def is_extraneous(self) -> bool:
        return self.name == ENCODING_NAME and self.arity == 1

    @property
    def kind(self) -> str:
        return EXTRANEOUS if self.is_extraneous else PROGRAM

    def __repr__(self):
        return f"{self.name}/{self.arity}"


@dataclass(frozen=True, slots=True)
class Var:
    """A logic variable, identified by a globally allocated integer id.

    ``hint`` is a display name only; it never takes part in equality.
    """

    id: int
    hint: str | None = field(default=None, compare=False)

    def __repr__(self):
        return self.hint or f"_{self.id}"


@dataclass(frozen=True, slots=True)
class Struct:
    """A compound term ``f(t1, ..., tn)``; a constant when ``args`` is empty."""

    symbol: Symbol
    args: tuple = ()

    def __post_init__(self):
        if len(self.args) != self.symbol.arity:
            raise ValueError(f"arity mismatch for {self.symbol!r}: {len(self.args)} args")

    def __repr__(self):
        if not self.args:
            return self.symbol.name
        return f"{self.symbol.name}({', '.join(map(repr, self.args))})"


Term = Union[Var, Struct]


@dataclass(frozen=True, slots=True)
class Atom:
    """A predicate applied to terms.  The predicate is keyed by name and arity."""

    pred: str
    args: tuple = ()

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def key(self) -> tuple[str, int]:
        return (self.pred, len(self.args))

    def __repr__(self):
        if not self.args:
            return self.pred
        return f"{self.pred}({', '.join(map(repr, self.args))})"


# Shared constructors for the list signature and common constants.

NIL_SYMBOL = Symbol("[]", 0)
CONS_SYMBOL = Symbol(".", 2)
NIL = Struct(NIL_SYMBOL)
ENCODING_SYMBOL = Symbol(ENCODING_NAME, 1)

_CONSTANTS: dict[str, Struct] = {}


def const(name: str) -> Struct:
    """An atomic constant (interned)."""
    t = _CONSTANTS.get(name)
    if t is None:
        t = _CONSTANTS[name] = Struct(Symbol(name, 0))
    return t


def intconst(n: int) -> Struct:
    return const(str(n))


def int_value(t: Term) -> int | None:
    """The integer value of a numeric constant, or None."""
    if isinstance(t, Struct) and not t.args:
        name = t.symbol.name
        if name.isdigit() or (name[:1] == "-" and name[1:].isdigit()):
            return int(name)
    return None


def cons(head: Term, tail: Term) -> Struct:
    return Struct(CONS_SYMBOL, (head, tail))


def mklist(items, tail: Term = NIL) -> Term:
    out = tail
    for item in reversed(list(items)):
        out = cons(item, out)
    return out


def list_parts(t: Term) -> tuple[list, Term]:
    """Split a term into its cons spine elements and the final tail."""
    items = []
    while isinstance(t, Struct) and t.symbol == CONS_SYMBOL:
        items.append(t.args[0])
        t = t.args[1]
    return items, t


def encoded_const(k: int) -> Struct:
    """The k-th reserved ground term standing for a variable: 'VAR'(k)."""
    return Struct(ENCODING_SYMBOL, (intconst(k),))


def is_extraneous_rooted(t: Term) -> bool:
    return isinstance(t, Struct) and t.symbol.is_extraneous


def encoded_index(t: Term) -> int | None:
    """k if t is 'VAR'(k) for an integer k, else None."""
    if is_extraneous_rooted(t):
        return int_value(t.args[0])
    return None


# ---------------------------------------------------------------------------
# Walks


def subterms(t: Term) -> Iterator[Term]:
    stack = [t]
    while stack:
        x = stack.pop()
        yield x
        if isinstance(x, Struct):
            stack.extend(reversed(x.args))


def variables_in(x) -> list[Var]:
    """All variables of a term, atom, or nested sequence, first occurrence first."""
    seen: dict[int, Var] = {}

    def walk(t):
        if isinstance(t, Var):
            if t.id not in seen:
                seen[t.id] = t
        elif isinstance(t, Struct):
            for a in t.args:
                walk(a)
        elif isinstance(t, Atom):
            for a in t.args:
                walk(a)
        else:
            for item in t:
                walk(item)

    walk(x)
    return list(seen.values())


def is_ground(t: Term) -> bool:
    return not any(isinstance(s, Var) for s in subterms(t))


def has_extraneous(x) -> bool:
    """True if any symbol anywhere in x (term/atom/sequence) is extraneous."""
    if isinstance(x, Var):
        return False
    if isinstance(x, Struct):
        return x.symbol.is_extraneous or any(has_extraneous(a) for a in x.args)
    if isinstance(x, Atom):
        return any(has_extraneous(a) for a in x.args)
    return any(has_extraneous(item) for item in x)


def is_program_term(t: Term) -> bool:
    """True if every symbol in t is a program symbol (variables allowed)."""
    return not has_extraneous(t)


def term_depth(t: Term) -> int:
    """Structural depth; variables, constants and 'VAR'(k) all count 1."""
    if isinstance(t, Var):
        return 1
    if encoded_index(t) is not None:
        return 1
    if not t.args:
        return 1
    return 1 + max(term_depth(a) for a in t.args)


# ---------------------------------------------------------------------------
# Substitutions


class Substitution:
    """An idempotent finite map from variables to terms.

    Identity bindings are dropped on construction.  Instances are immutable;
    ``compose`` returns a new substitution s.t. applying the composition
    equals applying self then other.
    """

    __slots__ = ("_bind",)

    def __init__(self, bindings: dict[int, Term] | None = None):
        if bindings:
            self._bind = {
                v: t for v, t in bindings.items() if not (isinstance(t, Var) and t.id == v)
            }
        else:
            self._bind = {}

    @property
    def bindings(self) -> dict[int, Term]:
        return dict(self._bind)

    def domain(self) -> set[int]:
        return set(self._bind)

    def get(self, v: Var) -> Term | None:
        return self._bind.get(v.id)

    def is_empty(self) -> bool:
        return not self._bind

    def apply(self, x):
        """Apply to a Term, Atom, or sequence of goals (homomorphically)."""
        if isinstance(x, Var):
            t = self._bind.get(x.id)
            return x if t is None else t
        if isinstance(x, Struct):
            if not x.args:
                return x
            return Struct(x.symbol, tuple(self.apply(a) for a in x.args))
        if isinstance(x, Atom):
            return Atom(x.pred, tuple(self.apply(a) for a in x.args))
        if isinstance(x, tuple):
            return tuple(self.apply(item) for item in x)
        if isinstance(x, list):
            return [self.apply(item) for item in x]
        return x.subst(self)  # goal structures implement .subst

    def compose(self, other: "Substitution") -> "Substitution":
        out = {v: other.apply(t) for v, t in self._bind.items()}
        for v, t in other._bind.items():
            if v not in self._bind:
                out[v] = t
        return Substitution(out)

    def restrict(self, variables) -> "Substitution":
        ids = {v.id if isinstance(v, Var) else v for v in variables}
        return Substitution({v: t for v, t in self._bind.items() if v in ids})

    def is_renaming(self) -> bool:
        """True if this maps variables to distinct variables only."""
        targets = [t for t in self._bind.values()]
        if not all(isinstance(t, Var) for t in targets):
            return False
        return len({t.id for t in targets}) == len(targets)

    def __eq__(self, other):
        return isinstance(other, Substitution) and self._bind == other._bind

    def __hash__(self):
        return hash(frozenset(self._bind.items()))

    def __len__(self):
        return len(self._bind)

    def __repr__(self):
        inner = ", ".join(f"_{v}->{t!r}" for v, t in sorted(self._bind.items()))
        return "{" + inner + "}"


EMPTY_SUBST = Substitution()


# ---------------------------------------------------------------------------
# Unification and matching


def _occurs(vid: int, t: Term, bind: dict[int, Term]) -> bool:
    stack = [t]
    while stack:
        x = stack.pop()
        if isinstance(x, Var):
            if x.id == vid:
                return True
            b = bind.get(x.id)
            if b is not None:
                stack.append(b)
        else:
            stack.extend(x.args)
    return False


def _walk(t: Term, bind: dict[int, Term]) -> Term:
    while isinstance(t, Var):
        b = bind.get(t.id)
        if b is None:
            return t
        t = b
    return t


def _resolve(t: Term, bind: dict[int, Term]) -> Term:
    t = _walk(t, bind)
    if isinstance(t, Struct) and t.args:
        return Struct(t.symbol, tuple(_resolve(a, bind) for a in t.args))
    return t


def _unify_pairs(stack: list) -> Substitution | None:
    # Where either side may bind, the right-hand variable is bound, so
    # unifying a goal against a renamed clause head keeps goal variables
    # free whenever possible (immediately floundered goals then really do
    # get an empty answer substitution).
    bind: dict[int, Term] = {}
    while stack:
        a, b = stack.pop()
        a = _walk(a, bind)
        b = _walk(b, bind)
        if isinstance(b, Var):
            if isinstance(a, Var) and a.id == b.id:
                continue
            if _occurs(b.id, a, bind):
                return None
            bind[b.id] = a
        elif isinstance(a, Var):
            if _occurs(a.id, b, bind):
                return None
            bind[a.id] = b
        else:
            if a.symbol != b.symbol:
                return None
            stack.extend(zip(a.args, b.args))
    return Substitution({v: _resolve(t, bind) for v, t in bind.items()})


def unify(t1: Term, t2: Term) -> Substitution | None:
    """Most general unifier with occurs check, or None if not unifiable."""
    return _unify_pairs([(t1, t2)])


def unify_atoms(a1: Atom, a2: Atom) -> Substitution | None:
    if a1.key != a2.key:
        return None
    return _unify_pairs(list(zip(a1.args, a2.args)))


def match(pattern, instance) -> Substitution | None:
    """One-way unification: a substitution s with s(pattern) == instance.

    Variables of ``instance`` are treated as constants.  Accepts terms,
    atoms, or equal-length sequences thereof.
    """
    bind: dict[int, Term] = {}

    def go(p, i) -> bool:
        if isinstance(p, Var):
            b = bind.get(p.id)
            if b is None:
                bind[p.id] = i
                return True
            return b == i
        if isinstance(i, Var):
            return False
        if isinstance(p, Atom):
            if not isinstance(i, Atom) or p.key != i.key:
                return False
            return all(go(pa, ia) for pa, ia in zip(p.args, i.args))
        if isinstance(p, Struct):
            if not isinstance(i, Struct) or p.symbol != i.symbol:
                return False
            return all(go(pa, ia) for pa, ia in zip(p.args, i.args))
        return False

    if isinstance(pattern, (Var, Struct, Atom)):
        ok = go(pattern, instance)
    else:
        pattern, instance = list(pattern), list(instance)
        ok = len(pattern) == len(instance) and all(map(go, pattern, instance))
    return Substitution(bind) if ok else None


def is_instance(a1, a2) -> bool:
    """True if a1 is an instance of a2 (some substitution maps a2 to a1)."""
    return match(a2, a1) is not None


def is_variant(a1, a2) -> bool:
    """True if a1 and a2 are equal up to a renaming of variables."""
    fwd: dict[int, int] = {}
    bwd: dict[int, int] = {}

    def go(x, y) -> bool:
        if isinstance(x, Var):
            if not isinstance(y, Var):
                return False
            if fwd.setdefault(x.id, y.id) != y.id:
                return False
            return bwd.setdefault(y.id, x.id) == x.id
        if isinstance(y, Var):
            return False
        if isinstance(x, Atom):
            if not isinstance(y, Atom) or x.key != y.key:
                return False
            return all(go(xa, ya) for xa, ya in zip(x.args, y.args))
        if not isinstance(y, Struct) or x.symbol != y.symbol:
            return False
        return all(go(xa, ya) for xa, ya in zip(x.args, y.args))

    if isinstance(a1, (Var, Struct, Atom)):
        return go(a1, a2)
    a1, a2 = list(a1), list(a2)
    return len(a1) == len(a2) and all(map(go, a1, a2))


# ---------------------------------------------------------------------------
# Variable supply and renaming


class VarSource:
    """Monotone supply of fresh variables (and fresh encoding constants)."""

    def __init__(self, start: int = 0, enc_start: int = 0):
        self._next = itertools.count(start)
        self._next_enc = itertools.count(enc_start)

    def new(self, hint: str | None = None) -> Var:
        return Var(next(self._next), hint)

    def new_encoded(self) -> Struct:
        return encoded_const(next(self._next_enc))


def rename(x, mapping: dict[int, Var]):
    """Rewrite variables of x through mapping (must cover all of them)."""
    if isinstance(x, Var):
        return mapping[x.id]
    if isinstance(x, Struct):
        if not x.args:
            return x
        return Struct(x.symbol, tuple(rename(a, mapping) for a in x.args))
    if isinstance(x, Atom):
        return Atom(x.pred, tuple(rename(a, mapping) for a in x.args))
    if isinstance(x, tuple):
        return tuple(rename(item, mapping) for item in x)
    return x.rename(mapping)  # goal structures implement .rename


def renaming_for(x, source: VarSource) -> dict[int, Var]:
    return {v.id: source.new(v.hint) for v in variables_in(x)}


# ---------------------------------------------------------------------------
# Encoding and decoding


def encode(a: Atom, fresh: Iterator[Term] | None = None) -> Atom:
    """Ground an atom by replacing distinct variables with distinct

    extraneous-rooted terms ('VAR'(0), 'VAR'(1), ... in first-occurrence
    order unless a generator is supplied).
    """
    supply = fresh if fresh is not None else (encoded_const(k) for k in itertools.count())
    mapping: dict[int, Term] = {}

    def walk(t: Term) -> Term:
        if isinstance(t, Var):
            if t.id not in mapping:
                mapping[t.id] = next(supply)
            return mapping[t.id]
        if not t.args:
            return t
        return Struct(t.symbol, tuple(walk(a) for a in t.args))

    return Atom(a.pred, tuple(walk(t) for t in a.args))


def decode(a: Atom) -> Atom:
    """Generalise every maximal extraneous-rooted subterm into a variable.

    Syntactically identical subterms share a variable; distinct ones get
    distinct variables.  decode(encode(a)) is a variant of a.
    """
    return decode_all([a])[0]


def decode_all(atoms) -> list[Atom]:
    """Decode several atoms with a shared subterm-to-variable mapping."""
    atoms = list(atoms)
    taken = variables_in(atoms)
    mapping: dict[Term, Var] = {}
    counter = itertools.count(1 + max((v.id for v in taken), default=-1))

    def walk(t: Term) -> Term:
        if isinstance(t, Var):
            return t
        if t.symbol.is_extraneous:
            v = mapping.get(t)
            if v is None:
                v = mapping[t] = Var(next(counter))
            return v
        if not t.args:
            return t
        return Struct(t.symbol, tuple(walk(a) for a in t.args))

    return [Atom(a.pred, tuple(walk(t) for t in a.args)) for a in atoms]
