"""SLDF resolution: depth-first execution of goals under safe computation rules.

A *safe* computation rule only ever selects atoms that are callable under
the program's delay declarations.  When a nonempty resolvent has no
callable atom the derivation *flounders*; the engine reports the answer
substitution built so far together with the residual (delayed) atoms.

Derivations are recorded with clause/atom annotations so that the same
clause selection can be replayed under a different safe rule; outcome
class, derivation length, and answers are preserved up to renaming, and
``replay`` exists so tests can assert exactly that.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterator

from .program import DELAY, Disj, Goal, Program
from .terms import (
    Atom,
    EMPTY_SUBST,
    Substitution,
    Var,
    VarSource,
    has_extraneous,
    int_value,
    intconst,
    rename,
    renaming_for,
    unify_atoms,
    variables_in,
)


# ---------------------------------------------------------------------------
# Computation rules


@dataclass(frozen=True)
class LeftmostCallable:
    def pick(self, indices: list[int], rng) -> int:
        return indices[0]


@dataclass(frozen=True)
class RightmostCallable:
    def pick(self, indices: list[int], rng) -> int:
        return indices[-1]


@dataclass(frozen=True)
class SeededRandomCallable:
    seed: int = 0

    def pick(self, indices: list[int], rng) -> int:
        return rng.choice(indices)


def rule_from_name(name: str, seed: int = 0):
    if name == "left":
        return LeftmostCallable()
    if name == "right":
        return RightmostCallable()
    if name == "random":
        return SeededRandomCallable(seed)
    raise ValueError(f"unknown computation rule {name!r}")


# ---------------------------------------------------------------------------
# Derivations and outcomes

# An annotation is a tuple of (clause_id, atom_index) pairs, most recent
# first; top-level goal atoms carry ((0, i),).  Expanding the k-th branch
# of an in-body disjunction extends with pseudo-clause id -(k+1).
Annotation = tuple


@dataclass(frozen=True, slots=True)
class Step:
    annotation: Annotation
    kind: str  # "clause" | "builtin" | "disj"
    detail: tuple  # ("clause", id) -> (id,); ("builtin", name, alt); ("disj", branch)


@dataclass(frozen=True)
class Derivation:
    goal: tuple
    steps: tuple
    used_delay_clauses: bool

    @property
    def length(self) -> int:
        """Resolution steps (disjunction expansion is control, not a step)."""
        return sum(1 for s in self.steps if s.kind != "disj")

    def choices(self) -> dict:
        return {s.annotation: (s.kind, s.detail) for s in self.steps}


@dataclass(frozen=True)
class Success:
    answer: Substitution  # restricted to the goal's variables
    instance: tuple  # the goal instantiated by the full answer
    derivation: Derivation


@dataclass(frozen=True)
class Floundered:
    answer: Substitution
    instance: tuple
    residual: tuple  # nonempty, all non-callable atoms
    derivation: Derivation


@dataclass(frozen=True)
class FiniteFailure:
    pass


@dataclass(frozen=True)
class DepthExceeded:
    depth: int


@dataclass(frozen=True)
class BuiltinError:
    message: str
    atom: Atom


Outcome = Success | Floundered | FiniteFailure | DepthExceeded | BuiltinError


class EngineInvariantError(AssertionError):
    """An internal engine invariant was violated (a bug, not a user error)."""


class ReplayMismatch(EngineInvariantError):
    """A replayed derivation diverged from its recorded clause selection."""


class _BuiltinTypeError(Exception):
    def __init__(self, message: str, atom: Atom):
        self.message = message
        self.atom = atom


# ---------------------------------------------------------------------------
# Engine


class Engine:
    """Executes goals against one immutable program.

    A single engine instance is single-threaded; each ``solve`` call owns
    its fresh-variable counter, its random stream, and its supply of
    encoding constants, so results are reproducible given the rule.
    """

    def __init__(self, program: Program, int_range: tuple[int, int] = (0, 16)):
        self.program = program
        self.int_range = int_range
        self._max_var_id = max(
            (v.id for c in program.clauses for v in variables_in((c.head,) + c.body)),
            default=-1,
        )
        # per-clause variable split, so resolution renames heads first and
        # bodies only after head unification succeeds
        self._clause_vars: dict = {}
        for c in program.clauses:
            head_vars = variables_in(c.head)
            head_ids = {v.id for v in head_vars}
            body_vars = [v for v in variables_in(c.body) if v.id not in head_ids]
            self._clause_vars[c.id] = (head_vars, body_vars)
        program_pure = not any(
            has_extraneous((c.head,) + c.body) for c in program.clauses
        )
        self._observation_applies = program_pure and ("evar", 1) not in program.builtins

    # -- public API

    def solve(
        self,
        goal,
        rule=LeftmostCallable(),
        depth: int = 64,
        limit: int | None = None,
        sld: bool = False,
        delay_clauses_only: bool = False,
    ) -> Iterator[Outcome]:
        """Enumerate SLDF outcomes of a goal by depth-first backtracking.

        ``limit`` caps the number of Success/Floundered outcomes.  With
        ``sld`` every atom is callable and selection is leftmost (the
        ignore-delays oracle).  ``delay_clauses_only`` restricts resolution
        to delay-tagged clauses and encoding builtins (the immediate-
        floundering probe for transformed programs).
        """
        if depth < 0:
            raise ValueError("depth bound must be >= 0")
        search = _Search(self, rule, depth, sld, delay_clauses_only)
        return search.run(tuple(goal), limit)

    def solve_sld(self, goal, depth: int = 64, limit: int | None = None) -> Iterator[Outcome]:
        return self.solve(goal, depth=depth, limit=limit, sld=True)

    def replay(self, derivation: Derivation, rule, sld: bool = False) -> Outcome:
        """Re-run a completed derivation's clause selection under another rule."""
        search = _Search(self, rule, depth=derivation.length + 1, sld=sld)
        return search.replay(derivation)


class _Search:
    def __init__(self, engine: Engine, rule, depth: int, sld: bool, delay_only: bool = False):
        self.engine = engine
        self.program = engine.program
        self.rule = rule
        self.depth = depth
        self.sld = sld
        self.delay_only = delay_only
        self.rng = random.Random(getattr(rule, "seed", 0))
        self.vars: VarSource | None = None
        self.check_obs = False

    # -- setup

    def _prepare(self, goal: tuple):
        goal_max = max((v.id for v in variables_in(goal)), default=-1)
        start = max(self.engine._max_var_id, goal_max) + 1
        self.vars = VarSource(start=start)
        self.check_obs = self.engine._observation_applies and not has_extraneous(goal)
        self.goal_vars = variables_in(goal)
        return tuple((g, ((0, i + 1),)) for i, g in enumerate(goal))

    # -- selection

    def _selectable(self, g: Goal) -> bool:
        if isinstance(g, Disj):
            return True
        if self.sld:
            return True
        decl = self.program.delay_for(g.key)
        return decl is None or not decl.holds(g.args)

    def run(self, goal: tuple, limit: int | None) -> Iterator[Outcome]:
        items = self._prepare(goal)
        emitted = 0
        answers = 0
        for out in self._search(items, EMPTY_SUBST, 0, False, None, goal):
            yield out
            emitted += 1
            if isinstance(out, (Success, Floundered)):
                answers += 1
                if limit is not None and answers >= limit:
                    return
        if emitted == 0:
            yield FiniteFailure()

    # -- core depth-first search

    def _search(self, items, acc, steps, used_delay, trace, goal):
        if not items:
            yield self._success(acc, used_delay, trace, goal)
            return
        selectable = [i for i, (g, _) in enumerate(items) if self._selectable(g)]
        if not selectable:
            yield self._floundered(items, acc, used_delay, trace, goal)
            return
        idx = self.rule.pick(selectable, self.rng)
        g, ann = items[idx]
        rest = items[:idx] + items[idx + 1 :]

        if isinstance(g, Disj):
            for k, branch in enumerate(g.branches):
                new = tuple(
                    (bg, ((-(k + 1), j + 1),) + ann) for j, bg in enumerate(branch)
                )
                step = Step(ann, "disj", (k,))
                yield from self._search(
                    items[:idx] + new + items[idx + 1 :],
                    acc,
                    steps,
                    used_delay,
                    (step, trace),
                    goal,
                )
            return

        if steps >= self.depth:
            yield DepthExceeded(self.depth)
            return

        key = g.key
        clauses = self.program.clauses_for(key)
        has_original = any(c.tag != DELAY for c in clauses)
        if self.delay_only:
            clauses = [c for c in clauses if c.tag == DELAY]

        if self.program.is_builtin(key) and not has_original:
            # Builtin evaluation; any delay clauses added by a transformation
            # are still tried below as ordinary resolution alternatives.
            if self.delay_only and key not in (("evar", 1), ("enonground", 1)):
                alts = []
            else:
                try:
                    alts = self._builtin_solutions(g)
                except _BuiltinTypeError as e:
                    yield BuiltinError(e.message, e.atom)
                    return
            for alt_i, (theta, is_delay) in enumerate(alts):
                step = Step(ann, "builtin", (key[0], alt_i))
                yield from self._search(
                    _apply_items(theta, rest),
                    acc.compose(theta),
                    steps + 1,
                    used_delay or is_delay,
                    (step, trace),
                    goal,
                )

        for clause in clauses:
            resolved = self._resolve_clause(g, clause)
            if resolved is None:
                continue
            theta, body = resolved
            if self.check_obs and not used_delay and _subst_has_extraneous(theta):
                raise EngineInvariantError(
                    f"extraneous symbol bound while solving a program-symbol goal: {theta!r}"
                )
            new = tuple(
                (theta.apply(bg), ((clause.id, j + 1),) + ann) for j, bg in enumerate(body)
            )
            step = Step(ann, "clause", (clause.id,))
            yield from self._search(
                _apply_items(theta, items[:idx]) + new + _apply_items(theta, items[idx + 1 :]),
                acc.compose(theta),
                steps + 1,
                used_delay or clause.tag == DELAY,
                (step, trace),
                goal,
            )

    def _resolve_clause(self, g: Atom, clause):
        """Unify g with a renamed-apart clause head; on success return the

        mgu and the renamed, instantiated body."""
        head_vars, body_vars = self.engine._clause_vars[clause.id]
        mapping = {v.id: self.vars.new(v.hint) for v in head_vars}
        theta = unify_atoms(g, rename(clause.head, mapping))
        if theta is None:
            return None
        if body_vars:
            for v in body_vars:
                mapping[v.id] = self.vars.new(v.hint)
        body = rename(clause.body, mapping)
        return theta, body

    # -- outcome construction

    def _success(self, acc, used_delay, trace, goal) -> Success:
        deriv = Derivation(goal, _materialize(trace), used_delay)
        return Success(acc.restrict(self.goal_vars), acc.apply(goal), deriv)

    def _floundered(self, items, acc, used_delay, trace, goal) -> Floundered:
        deriv = Derivation(goal, _materialize(trace), used_delay)
        residual = tuple(g for g, _ in items)
        return Floundered(acc.restrict(self.goal_vars), acc.apply(goal), residual, deriv)

    # -- builtins

    def _builtin_solutions(self, a: Atom) -> list[tuple[Substitution, bool]]:
        name = a.pred
        if name == "true":
            return [(EMPTY_SUBST, False)]
        if name == "fail":
            return []
        if name == "evar":
            (t,) = a.args
            if isinstance(t, Var):
                return [(Substitution({t.id: self.vars.new_encoded()}), True)]
            if t.symbol.is_extraneous:
                return [(EMPTY_SUBST, True)]
            return []
        if name == "enonground":
            (t,) = a.args
            if has_extraneous(t):
                return [(EMPTY_SUBST, True)]
            out = []
            for v in variables_in(t):
                out.append((Substitution({v.id: self.vars.new_encoded()}), True))
            return out
        if name == "plus":
            return self._plus(a)
        if name == "leq":
            return self._leq(a)
        raise _BuiltinTypeError(f"unknown builtin {name}/{len(a.args)}", a)

    def _int_args(self, a: Atom) -> list[int | None]:
        vals = []
        for t in a.args:
            if isinstance(t, Var):
                vals.append(None)
            else:
                v = int_value(t)
                if v is None:
                    raise _BuiltinTypeError(
                        f"{a.pred} called on non-integer argument {t!r}", a
                    )
                vals.append(v)
        return vals

    def _plus(self, a: Atom) -> list[tuple[Substitution, bool]]:
        x, y, z = self._int_args(a)
        known = sum(v is not None for v in (x, y, z))
        if known == 3:
            return [(EMPTY_SUBST, False)] if x + y == z else []
        if known == 2:
            if x is None:
                val, var = z - y, a.args[0]
            elif y is None:
                val, var = z - x, a.args[1]
            else:
                val, var = x + y, a.args[2]
            return [(Substitution({var.id: intconst(val)}), False)]
        # Underinstantiated (only reachable ignoring delays): enumerate the
        # configured integer range for the unknown arguments.
        lo, hi = self.engine.int_range
        out = []
        for xv in [x] if x is not None else range(lo, hi + 1):
            for yv in [y] if y is not None else range(lo, hi + 1):
                zv = xv + yv
                if z is not None and z != zv:
                    continue
                if z is None and not (lo <= zv <= hi):
                    continue
                theta = unify_atoms(
                    a, Atom(a.pred, (intconst(xv), intconst(yv), intconst(zv)))
                )
                if theta is not None:
                    out.append((theta, False))
        return out

    def _leq(self, a: Atom) -> list[tuple[Substitution, bool]]:
        x, y = self._int_args(a)
        if x is not None and y is not None:
            return [(EMPTY_SUBST, False)] if x <= y else []
        lo, hi = self.engine.int_range
        out = []
        for xv in [x] if x is not None else range(lo, hi + 1):
            for yv in [y] if y is not None else range(lo, hi + 1):
                if xv <= yv:
                    theta = unify_atoms(a, Atom(a.pred, (intconst(xv), intconst(yv))))
                    if theta is not None:
                        out.append((theta, False))
        return out

    # -- replay

    def replay(self, derivation: Derivation) -> Outcome:
        goal = derivation.goal
        items = self._prepare(goal)
        choices = derivation.choices()
        acc = EMPTY_SUBST
        used_delay = False
        trace = None
        while True:
            if not items:
                if choices:
                    raise ReplayMismatch("recorded steps left over at success")
                return self._success(acc, used_delay, trace, goal)
            selectable = [i for i, (g, _) in enumerate(items) if self._selectable(g)]
            if not selectable:
                if choices:
                    raise ReplayMismatch("recorded steps left over at floundering")
                return self._floundered(items, acc, used_delay, trace, goal)
            idx = self.rule.pick(selectable, self.rng)
            g, ann = items[idx]
            choice = choices.pop(ann, None)
            if choice is None:
                raise ReplayMismatch(f"no recorded choice for selected atom {g!r}")
            kind, detail = choice
            if isinstance(g, Disj):
                if kind != "disj":
                    raise ReplayMismatch("disjunction selected where atom was recorded")
                (k,) = detail
                new = tuple(
                    (bg, ((-(k + 1), j + 1),) + ann) for j, bg in enumerate(g.branches[k])
                )
                trace = (Step(ann, "disj", (k,)), trace)
                items = items[:idx] + new + items[idx + 1 :]
                continue
            rest = items[:idx] + items[idx + 1 :]
            if kind == "builtin":
                name, alt_i = detail
                if name != g.pred:
                    raise ReplayMismatch(f"recorded builtin {name}, selected {g.pred}")
                try:
                    alts = self._builtin_solutions(g)
                except _BuiltinTypeError as e:
                    raise ReplayMismatch(f"builtin error on replay: {e.message}")
                if alt_i >= len(alts):
                    raise ReplayMismatch("recorded builtin alternative unavailable")
                theta, is_delay = alts[alt_i]
                trace = (Step(ann, "builtin", (name, alt_i)), trace)
            else:
                (cid,) = detail
                clause = next(
                    (c for c in self.program.clauses_for(g.key) if c.id == cid), None
                )
                if clause is None:
                    raise ReplayMismatch(f"recorded clause {cid} does not match {g!r}")
                resolved = self._resolve_clause(g, clause)
                if resolved is None:
                    raise ReplayMismatch(f"recorded clause {cid} no longer unifies")
                theta, body = resolved
                new = tuple(
                    (theta.apply(bg), ((clause.id, j + 1),) + ann)
                    for j, bg in enumerate(body)
                )
                trace = (Step(ann, "clause", (cid,)), trace)
                acc = acc.compose(theta)
                used_delay = used_delay or clause.tag == DELAY
                items = (
                    _apply_items(theta, items[:idx]) + new + _apply_items(theta, items[idx + 1 :])
                )
                continue
            acc = acc.compose(theta)
            used_delay = used_delay or is_delay
            items = _apply_items(theta, rest)


def _apply_items(theta: Substitution, items: tuple) -> tuple:
    return tuple((theta.apply(g), ann) for g, ann in items)


def _materialize(trace) -> tuple:
    steps = []
    while trace is not None:
        step, trace = trace
        steps.append(step)
    steps.reverse()
    return tuple(steps)


def _subst_has_extraneous(s: Substitution) -> bool:
    return any(has_extraneous(t) for t in s.bindings.values())
