"""Source-to-source transformations that turn floundering into success.

``sf_transform`` rewrites a program with delay declarations into a
delay-free one whose success set is the original success set plus the
encodings of its floundered answers: every predicate is suffixed ``_sf``
and each delay declaration becomes a *delay clause* whose body replaces
``var`` by ``evar`` and ``nonground`` by ``enonground``.

``f_transform`` additionally builds an ``_f`` layer that captures exactly
the flounder encodings: each non-delay clause ``p_sf(X) :- B`` gets a
companion ``p_f(X) :- B, D`` where D is the disjunction of B's calls with
``_sf`` renamed to ``_f`` (facts get body ``fail``); delay clauses get an
unchanged companion body.
"""

from __future__ import annotations

from .program import (
    BUILTIN_DECLS,
    DELAY,
    ENCODING_BUILTINS,
    Clause,
    DelayDecl,
    Disj,
    FProgram,
    Program,
    ProgramError,
    SfProgram,
    NONGROUND_TEST,
    VAR_TEST,
)
from .terms import Atom, Var, VarSource, variables_in

SF_SUFFIX = "_sf"
F_SUFFIX = "_f"

_CONDITION_BUILTIN = {VAR_TEST: "evar", NONGROUND_TEST: "enonground"}

FAIL = Atom("fail")
TRUE = Atom("true")

_NEVER_FLOUNDERS = {("true", 0), ("fail", 0), ("evar", 1), ("enonground", 1)}


def sf_transform(p: Program) -> SfProgram:
    """Delay-free program computing the success set plus flounder encodings."""
    for c in p.clauses:
        if c.head.key in ENCODING_BUILTINS:
            raise ProgramError(f"program defines {c.head.pred}/{c.head.arity}")
    user = set(_user_keys(p))
    groups: list[list[Clause]] = []
    covered: set[tuple[str, int]] = set()
    for key in p.predicates():
        covered.add(key)
        group = []
        decl = next((d for d in p.delays if d.key == key), None)
        if decl is not None:
            group.append(_delay_clause(decl, key in user, p))
        for c in p.clauses_for(key):
            group.append(
                Clause(0, _rename_atom(c.head, user, SF_SUFFIX),
                       _rename_goals(c.body, user, SF_SUFFIX), c.tag)
            )
        groups.append(group)
    for decl in p.delays:
        if decl.key not in covered:
            groups.append([_delay_clause(decl, decl.key in user, p)])
            covered.add(decl.key)
    # Builtins with default delay behaviour flounder too; materialise their
    # delay clauses when the program actually calls them.
    for key in sorted(p.used_builtin_keys()):
        if key not in covered and key in BUILTIN_DECLS:
            groups.append([_delay_clause(BUILTIN_DECLS[key], False, p)])
    clauses = tuple(
        Clause(i + 1, c.head, c.body, c.tag)
        for i, c in enumerate(c for g in groups for c in g)
    )
    return SfProgram(clauses, (), p.builtins | ENCODING_BUILTINS, source=p)


def _user_keys(p: Program) -> list[tuple[str, int]]:
    keys = p.predicates()
    for d in p.delays:
        if d.key not in keys and not p.is_builtin(d.key):
            keys.append(d.key)
    return keys


def _rename_key(key: tuple[str, int], user: set, suffix: str) -> str:
    return key[0] + suffix if key in user else key[0]


def _rename_atom(a: Atom, user: set, suffix: str) -> Atom:
    return Atom(_rename_key(a.key, user, suffix), a.args)


def _rename_goals(goals, user: set, suffix: str):
    out = []
    for g in goals:
        if isinstance(g, Atom):
            out.append(_rename_atom(g, user, suffix))
        else:
            out.append(Disj(tuple(_rename_goals(br, user, suffix) for br in g.branches)))
    return tuple(out)


def _delay_clause(decl: DelayDecl, rename_head: bool, p: Program) -> Clause:
    vars_ = VarSource()
    head_vars = tuple(vars_.new(n) for n in decl.var_names)
    head = Atom(decl.pred + SF_SUFFIX if rename_head else decl.pred, head_vars)
    branches = tuple(
        tuple(Atom(_CONDITION_BUILTIN[kind], (head_vars[pos],)) for kind, pos in conj)
        for conj in decl.dnf
    )
    body = branches[0] if len(branches) == 1 else (Disj(branches),)
    return Clause(0, head, body, DELAY)


def f_transform(p: Program) -> FProgram:
    """Program with ``_sf`` and ``_f`` layers; the ``_f`` success set is the
    encoded flounder set of the source."""
    for c in p.clauses:
        if any(not isinstance(g, Atom) for g in c.body):
            raise ProgramError("f transformation requires a Horn source program")
    sfp = sf_transform(p)
    companions: dict[tuple[str, int], list[Clause]] = {}
    for c in sfp.clauses:
        head = Atom(_to_f_name(c.head.pred), c.head.args)
        if c.tag == DELAY:
            body = c.body
        else:
            disjuncts = tuple(
                (Atom(_to_f_name(a.pred), a.args),)
                for a in c.body
                if a.key not in _NEVER_FLOUNDERS
            )
            if not disjuncts:
                flounder_part: tuple = (FAIL,)
            elif len(disjuncts) == 1:
                flounder_part = disjuncts[0]
            else:
                flounder_part = (Disj(disjuncts),)
            body = c.body + flounder_part
        companions.setdefault(head.key, []).append(Clause(0, head, body, c.tag))
    clauses = list(sfp.clauses)
    for group in companions.values():
        clauses.extend(group)
    clauses = tuple(Clause(i + 1, c.head, c.body, c.tag) for i, c in enumerate(clauses))
    return FProgram(clauses, (), sfp.builtins, source=p, sf=sfp)


def _to_f_name(pred: str) -> str:
    if pred.endswith(SF_SUFFIX):
        return pred[: -len(SF_SUFFIX)] + F_SUFFIX
    return pred + F_SUFFIX


# ---------------------------------------------------------------------------
# Goal-level counterparts (used by the fair enumerator)


def sf_goal(goals, p: Program) -> tuple:
    """Rename a goal over p to call the ``_sf`` layer."""
    user = set(_user_keys(p))
    return _rename_goals(goals, user, SF_SUFFIX)


def flounder_goal(goals, p: Program) -> tuple:
    """The goal whose f-program successes encode flounderings of ``goals``.

    A single atom A becomes A_f.  A conjunction A1,...,An becomes
    A1_sf,...,An_sf,(A1_f ; ... ; An_f): the conjunction flounders iff every
    atom succeeds-or-flounders and at least one actually flounders.
    """
    user = set(_user_keys(p))
    atoms = list(goals)
    if not all(isinstance(g, Atom) for g in atoms):
        raise ProgramError("flounder queries take conjunctions of atoms")
    f_alts = [
        Atom(_to_f_name(_rename_atom(a, user, SF_SUFFIX).pred), a.args)
        for a in atoms
        if a.key not in _NEVER_FLOUNDERS
    ]
    if not f_alts:
        return (FAIL,)
    if len(atoms) == 1:
        return (f_alts[0],)
    sf_part = tuple(_rename_atom(a, user, SF_SUFFIX) for a in atoms)
    if len(f_alts) == 1:
        return sf_part + (f_alts[0],)
    return sf_part + (Disj(tuple((a,) for a in f_alts)),)


def strip_suffix(pred: str) -> str:
    for suffix in (SF_SUFFIX, F_SUFFIX):
        if pred.endswith(suffix):
            return pred[: -len(suffix)]
    return pred


def strip_atom(a: Atom) -> Atom:
    return Atom(strip_suffix(a.pred), a.args)
