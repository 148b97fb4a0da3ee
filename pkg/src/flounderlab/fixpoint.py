"""Bottom-up semantics over a finite truncation of the ground atom base.

``tp_step`` is one application of the immediate-consequence operator of a
delay-free program, restricted to a :class:`BoundedBase`; ``tfp_step``
additionally propagates a *flounder flag*: an atom is flagged when it is
derivable through a delay clause or through a flagged body atom.  The
least fixpoint of the flagged operator, decoded, is a bounded
approximation of the set of goals that flounder with empty answers.

``verify_success_split`` checks the central set equation on a bounded
base: the success set of the sf-transformed program equals the plain
(delays-ignored) success set united with the encoded flounder set, both
sides produced by independent engine-based oracles.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .engine import Engine, Floundered, Success
from .program import DELAY, Disj, Program
from .terms import (
    Atom,
    Struct,
    Term,
    Var,
    const,
    decode_all,
    encoded_const,
    has_extraneous,
    int_value,
    intconst,
    is_variant,
    match,
    term_depth,
    variables_in,
)
from .transform import sf_transform, strip_atom

_ENCODING_KEYS = {("evar", 1), ("enonground", 1)}


class BaseTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class BoundedBase:
    """A finite term universe and the ground atoms buildable over it.

    ``terms`` may extend beyond ``depth`` up to ``interior_depth``: fixpoint
    computation runs over the full (interior) universe so that derivations
    whose intermediate terms outgrow the reported slice are not lost, while
    comparisons and reports are restricted to the depth-``depth`` surface.
    """

    depth: int
    enc_count: int
    terms: tuple
    preds: tuple
    int_range: tuple
    lists_only: bool
    constants: tuple
    interior_depth: int = 0

    def __post_init__(self):
        if self.interior_depth < self.depth:
            object.__setattr__(self, "interior_depth", self.depth)
        object.__setattr__(self, "_term_set", frozenset(self.terms))
        object.__setattr__(self, "_pred_set", frozenset(self.preds))
        object.__setattr__(
            self,
            "surface_terms",
            tuple(t for t in self.terms if term_depth(t) <= self.depth),
        )
        object.__setattr__(self, "_surface_set", frozenset(self.surface_terms))
        object.__setattr__(
            self, "extraneous_terms", tuple(t for t in self.terms if _is_enc(t))
        )
        object.__setattr__(
            self,
            "terms_with_extraneous",
            tuple(t for t in self.terms if has_extraneous(t)),
        )

    @classmethod
    def for_program(
        cls,
        program: Program,
        depth: int = 3,
        enc_count: int = 8,
        constants: tuple[str, ...] = (),
        lists_only: bool = False,
        int_range: tuple[int, int] = (0, 16),
        max_terms: int = 50_000,
        interior_depth: int | None = None,
    ) -> "BoundedBase":
        symbols = program.function_symbols()
        pool = [s for s in symbols if s.arity == 0]
        functors = [s for s in symbols if s.arity > 0]
        consts = [Struct(s) for s in pool]
        for name in constants:
            c = const(name)
            if c not in consts:
                consts.append(c)
        if program.used_builtin_keys() & {("plus", 3), ("leq", 2)}:
            for n in range(int_range[0], int_range[1] + 1):
                c = intconst(n)
                if c not in consts:
                    consts.append(c)
        encs = [encoded_const(k) for k in range(enc_count)]
        full_depth = depth if interior_depth is None else max(depth, interior_depth)
        if lists_only:
            terms = cls._list_terms(consts, encs, full_depth)
        else:
            terms = cls._closure_terms(consts, encs, functors, full_depth, max_terms)
        preds = tuple(program.predicates())
        return cls(
            depth,
            enc_count,
            tuple(terms),
            preds,
            int_range,
            lists_only,
            tuple(consts),
            full_depth,
        )

    @staticmethod
    def _list_terms(consts, encs, depth):
        # Flat cons spines over the constant pool.  Tails range over nil,
        # the encodings, and the bare constants: resolution against
        # append-style facts legitimately produces improper lists.
        from .terms import NIL, mklist

        elements = [c for c in consts if c != NIL]
        tails = list(dict.fromkeys([NIL] + encs + elements))
        terms = list(dict.fromkeys(consts + encs + [NIL]))
        max_spine = depth - 1
        for n in range(1, max_spine + 1):
            for elems in itertools.product(elements, repeat=n):
                for tail in tails:
                    terms.append(mklist(elems, tail=tail))
        return list(dict.fromkeys(terms))

    @staticmethod
    def _closure_terms(consts, encs, functors, depth, max_terms):
        layer = list(dict.fromkeys(consts + encs))
        terms = list(layer)
        for _ in range(depth - 1):
            prev = list(terms)
            new = []
            for f in functors:
                for args in itertools.product(prev, repeat=f.arity):
                    t = Struct(f, args)
                    if t not in set(terms) and t not in set(new):
                        new.append(t)
                if len(terms) + len(new) > max_terms:
                    raise BaseTooLarge(
                        f"term universe exceeds {max_terms} terms; restrict the "
                        "signature (e.g. lists_only) or lower the depth"
                    )
            terms.extend(new)
        return terms

    def contains_term(self, t: Term) -> bool:
        return t in self._term_set

    def contains_atom(self, a: Atom) -> bool:
        return a.key in self._pred_set and all(t in self._term_set for t in a.args)

    def on_surface(self, a: Atom) -> bool:
        return all(t in self._surface_set for t in a.args)

    def with_preds(self, preds) -> "BoundedBase":
        return BoundedBase(
            self.depth,
            self.enc_count,
            self.terms,
            tuple(preds),
            self.int_range,
            self.lists_only,
            self.constants,
            self.interior_depth,
        )

    def atoms_for(self, key: tuple[str, int]):
        """All ground surface atoms of a predicate (lazy)."""
        name, arity = key
        for args in itertools.product(self.surface_terms, repeat=arity):
            yield Atom(name, args)

    def describe(self) -> str:
        mode = "lists-only" if self.lists_only else "free"
        return (
            f"base(depth={self.depth}, interior={self.interior_depth}, "
            f"encodings={self.enc_count}, terms={len(self.surface_terms)}"
            f"/{len(self.terms)}, mode={mode}, ints={self.int_range[0]}..{self.int_range[1]})"
        )


def _is_enc(t: Term) -> bool:
    return isinstance(t, Struct) and t.symbol.is_extraneous


@dataclass(frozen=True)
class FInterpretation:
    """A set of ground atoms, some flagged as flounder-derived."""

    atoms: frozenset = frozenset()
    flagged: frozenset = frozenset()

    def __post_init__(self):
        if not self.flagged <= self.atoms:
            raise ValueError("flagged atoms must be a subset of the atom set")

    def union(self, other: "FInterpretation") -> "FInterpretation":
        return FInterpretation(self.atoms | other.atoms, self.flagged | other.flagged)


# ---------------------------------------------------------------------------
# One step of the (flagged) immediate-consequence operator


def tp_step(program: Program, interp: frozenset, base: BoundedBase) -> frozenset:
    """Ground atoms derivable in one step from ``interp``, within the base."""
    out = set(interp)
    for head, _flag in _instances(program, interp, frozenset(), base):
        out.add(head)
    return frozenset(out)


def tfp_step(program: Program, interp: FInterpretation, base: BoundedBase) -> FInterpretation:
    """Flagged variant: a derived atom is flagged iff some supporting ground

    instance comes from a delay clause or has a flagged body atom."""
    atoms = set(interp.atoms)
    flagged = set(interp.flagged)
    for head, flag in _instances(program, interp.atoms, interp.flagged, base):
        atoms.add(head)
        if flag:
            flagged.add(head)
    return FInterpretation(frozenset(atoms), frozenset(flagged))


class _FactIndex:
    """Known atoms indexed by predicate and by (argument position, term)."""

    def __init__(self, atoms=()):
        self.by_pred: dict = {}
        self.by_arg: dict = {}
        for a in atoms:
            self.add(a)

    def add(self, a: Atom):
        self.by_pred.setdefault(a.key, []).append(a)
        for pos, t in enumerate(a.args):
            self.by_arg.setdefault((a.key, pos, t), []).append(a)

    def candidates(self, query: Atom):
        """Facts possibly matching the query, narrowed by its ground args."""
        best = self.by_pred.get(query.key, ())
        for pos, t in enumerate(query.args):
            if isinstance(t, Var) or variables_in(t):
                continue
            bucket = self.by_arg.get((query.key, pos, t), ())
            if len(bucket) < len(best):
                best = bucket
        return best


def _alternatives(body) -> list:
    """Expand in-body disjunctions into alternative flat atom sequences."""
    alts = [[]]
    for g in body:
        if isinstance(g, Atom):
            alts = [alt + [g] for alt in alts]
        else:
            expanded = []
            for branch in g.branches:
                for suffix in _alternatives(branch):
                    expanded.extend(alt + suffix for alt in alts)
            alts = expanded
    return alts


def _instances(program, atoms: frozenset, flagged: frozenset, base: BoundedBase):
    index = _FactIndex(atoms)
    for clause in program.clauses:
        head_vars = variables_in((clause.head,) + clause.body)
        for alt in _alternatives(clause.body):
            for bind, flag in _join(alt, 0, {}, False, index, None, -1, flagged, base):
                for assignment in _ground_free(head_vars, bind, base):
                    head = _apply_bind(clause.head, assignment)
                    if base.contains_atom(head):
                        yield head, flag or clause.tag == DELAY


def _ground_free(head_vars, bind, base):
    free = [v.id for v in head_vars if v.id not in bind]
    if not free:
        yield bind
        return
    for combo in itertools.product(base.terms, repeat=len(free)):
        full = dict(bind)
        full.update(zip(free, combo))
        yield full


def _apply_bind(x, bind: dict):
    if isinstance(x, Var):
        return bind.get(x.id, x)
    if isinstance(x, Struct):
        if not x.args:
            return x
        return Struct(x.symbol, tuple(_apply_bind(a, bind) for a in x.args))
    return Atom(x.pred, tuple(_apply_bind(a, bind) for a in x.args))


def _join(body, i, bind, flag, index, delta_index, delta_pos, flagged, base):
    """Join a flat body left to right against known atoms and the builtins,

    yielding (binding, flounder-flag) pairs for each satisfying grounding.
    When ``delta_pos`` is nonnegative, that position draws its facts from
    ``delta_index`` (the semi-naive restriction)."""
    if i == len(body):
        yield bind, flag
        return
    a = _apply_bind(body[i], bind)
    key = a.key
    if key in _ENCODING_KEYS:
        for newbind in _encoding_solutions(key[0], a.args[0], bind, base):
            yield from _join(body, i + 1, newbind, True, index, delta_index, delta_pos, flagged, base)
        return
    if key == ("true", 0):
        yield from _join(body, i + 1, bind, flag, index, delta_index, delta_pos, flagged, base)
        return
    if key == ("fail", 0):
        return
    source = delta_index if i == delta_pos else index
    for fact in source.candidates(a):
        theta = match(a, fact)
        if theta is None:
            continue
        newbind = dict(bind)
        newbind.update(theta.bindings)
        yield from _join(
            body, i + 1, newbind, flag or fact in flagged, index, delta_index, delta_pos, flagged, base
        )
    # arithmetic builtins evaluate directly, alongside any delay clauses
    # a transformation may have given them
    if key in (("plus", 3), ("leq", 2)) and i != delta_pos:
        for newbind in _arith_solutions(key[0], a.args, bind, base):
            yield from _join(body, i + 1, newbind, flag, index, delta_index, delta_pos, flagged, base)


def _encoding_solutions(name: str, t: Term, bind: dict, base: BoundedBase):
    if name == "evar":
        for e in base.extraneous_terms:
            theta = match(t, e) if not isinstance(t, Var) else None
            if isinstance(t, Var):
                nb = dict(bind)
                nb[t.id] = e
                yield nb
            elif theta is not None:
                nb = dict(bind)
                nb.update(theta.bindings)
                yield nb
        return
    # enonground
    if has_extraneous(t):
        yield dict(bind)
        return
    for v in variables_in(t):
        for e in base.terms_with_extraneous:
            nb = dict(bind)
            nb[v.id] = e
            yield nb


def _arith_solutions(name: str, args: tuple, bind: dict, base: BoundedBase):
    lo, hi = base.int_range
    known = []
    for t in args:
        if isinstance(t, Var):
            known.append(None)
        else:
            v = int_value(t)
            if v is None:
                return
            known.append(v)
    domains = [[v] if v is not None else range(lo, hi + 1) for v in known]
    for combo in itertools.product(*domains):
        if name == "plus" and combo[0] + combo[1] != combo[2]:
            continue
        if name == "leq" and not combo[0] <= combo[1]:
            continue
        nb = dict(bind)
        ok = True
        for t, v in zip(args, combo):
            if isinstance(t, Var):
                prev = nb.get(t.id)
                if prev is not None and int_value(prev) != v:
                    ok = False
                    break
                nb[t.id] = intconst(v)
        if ok:
            yield nb


# ---------------------------------------------------------------------------
# Least fixpoints


@dataclass
class LfpResult:
    value: object  # frozenset or FInterpretation
    iterations: int
    trace: list  # per-iteration (new atoms, new flags)


def lfp(step, initial) -> LfpResult:
    """Iterate a monotone step function to its least fixed point."""
    current = initial
    trace = []
    while True:
        nxt = step(current)
        if nxt == current:
            return LfpResult(current, len(trace), trace)
        trace.append(_delta(current, nxt))
        current = nxt


def _delta(old, new):
    if isinstance(old, FInterpretation):
        return (len(new.atoms) - len(old.atoms), len(new.flagged) - len(old.flagged))
    return (len(new) - len(old), 0)


_CONTROL_KEYS = _ENCODING_KEYS | {("true", 0), ("fail", 0)}


def _lfp_rounds(program: Program, base: BoundedBase) -> LfpResult:
    """Round-synchronous semi-naive fixpoint, equivalent to iterating the

    step operator but re-joining only against each round's delta."""
    compiled = []
    for clause in program.clauses:
        head_vars = variables_in((clause.head,) + clause.body)
        for alt in _alternatives(clause.body):
            user_pos = [i for i, a in enumerate(alt) if a.key not in _CONTROL_KEYS]
            compiled.append((clause, head_vars, alt, user_pos))

    atoms: set = set()
    flagged: set = set()
    index = _FactIndex()
    delta_index = None
    trace = []
    round_no = 0
    while True:
        pending: dict[Atom, bool] = {}

        def derive(clause, head_vars, alt, delta_pos):
            for bind, fl in _join(
                alt, 0, {}, False, index, delta_index, delta_pos, flagged, base
            ):
                fl = fl or clause.tag == DELAY
                for assignment in _ground_free(head_vars, bind, base):
                    head = _apply_bind(clause.head, assignment)
                    if base.contains_atom(head):
                        pending[head] = pending.get(head, False) or fl

        if round_no == 0:
            for clause, head_vars, alt, _pos in compiled:
                derive(clause, head_vars, alt, -1)
        else:
            for clause, head_vars, alt, positions in compiled:
                for p in positions:
                    derive(clause, head_vars, alt, p)

        new_atoms = [a for a in pending if a not in atoms]
        new_flags = [a for a, fl in pending.items() if fl and a not in flagged]
        if not new_atoms and not new_flags:
            return LfpResult(
                FInterpretation(frozenset(atoms), frozenset(flagged)), round_no, trace
            )
        trace.append((len(new_atoms), len(new_flags)))
        atoms.update(new_atoms)
        flagged.update(new_flags)
        delta_index = _FactIndex(set(new_atoms) | set(new_flags))
        for a in new_atoms:
            index.add(a)
        round_no += 1


def tp_lfp(program: Program, base: BoundedBase) -> LfpResult:
    res = _lfp_rounds(program, base)
    return LfpResult(res.value.atoms, res.iterations, res.trace)


def tfp_lfp(program: Program, base: BoundedBase) -> LfpResult:
    return _lfp_rounds(program, base)


def efs_extract(interp: FInterpretation) -> list:
    """Decode the flagged atoms into (deduplicated) non-ground program atoms:

    a bounded approximation of the flounder set, in source predicate names.
    Besides variant-deduplication, atoms that merely identify variables of
    another reported atom are dropped: delay conditions cannot distinguish
    two variables from one, so an empty-answer flounder witness survives
    any variable identification and such instances add nothing.
    """
    decoded_all: list[Atom] = []
    for a in sorted(interp.flagged, key=repr):
        if a.key in _ENCODING_KEYS:
            continue
        decoded = strip_atom(decode_all([a])[0])
        if not any(is_variant(decoded, w) for w in decoded_all):
            decoded_all.append(decoded)
    return [
        b
        for b in decoded_all
        if not any(b2 is not b and _identifies_variables_of(b, b2) for b2 in decoded_all)
    ]


def _identifies_variables_of(b: Atom, a: Atom) -> bool:
    """True if b is a's image under a variables-to-variables substitution."""
    theta = match(a, b)
    return theta is not None and all(
        isinstance(t, Var) for t in theta.bindings.values()
    )


# ---------------------------------------------------------------------------
# Engine-based oracles and the success-set split check


def success_oracle(
    program: Program,
    base: BoundedBase,
    size_cap: int = 40,
    stable_window: int = 6,
) -> tuple[frozenset, int]:
    """Ground base atoms with plain SLD successes (delays ignored).

    Enumerates computed answers of each predicate's most general goal by
    increasing proof size, instantiates them over the base, and stops once
    no new base atom has appeared for ``stable_window`` consecutive sizes.
    Returns the atom set and the proof-size bound actually used.
    """
    eng = Engine(program, int_range=base.int_range)
    found: set[Atom] = set()
    last_growth = 0
    level = 0
    goals = {}
    for key in base.preds:
        name, arity = key
        goals[key] = (Atom(name, tuple(Var(i, f"X{i}") for i in range(arity))),)
    for level in range(1, size_cap + 1):
        for key, goal in goals.items():
            for out in eng.solve_sld(goal, depth=level):
                if not isinstance(out, Success) or out.derivation.length != level:
                    continue
                for inst in _base_instances(out.instance[0], base):
                    if inst not in found:
                        found.add(inst)
                        last_growth = level
        if level - last_growth >= stable_window:
            break
    return frozenset(found), level


def _base_instances(a: Atom, base: BoundedBase):
    """Ground instances of an atom with all arguments inside the base."""
    if a.key not in base._pred_set:
        return
    vars_ = variables_in(a)
    if not vars_:
        if base.contains_atom(a):
            yield a
        return
    allowance = {v.id: base.depth for v in vars_}
    for t in a.args:
        _tighten(t, 1, allowance, base.depth)
    domains = []
    for v in vars_:
        limit = allowance[v.id]
        dom = [t for t in base.surface_terms if term_depth(t) <= limit]
        if not dom:
            return
        domains.append(dom)
    for combo in itertools.product(*domains):
        bind = {v.id: t for v, t in zip(vars_, combo)}
        inst = _apply_bind(a, bind)
        if base.on_surface(inst) and base.contains_atom(inst):
            yield inst


def _tighten(t: Term, depth_here: int, allowance: dict, max_depth: int):
    if isinstance(t, Var):
        room = max_depth - depth_here + 1
        if room < allowance[t.id]:
            allowance[t.id] = room
        return
    for arg in t.args:
        _tighten(arg, depth_here + 1, allowance, max_depth)


def flounder_oracle(
    program: Program, base: BoundedBase, depth: int = 30
) -> tuple[frozenset, list]:
    """Encoded flounder set restricted to the base, via SLDF execution.

    Groups base atoms by their decoded shape, runs each shape once, and
    keeps those with a floundered derivation whose answer is a variant of
    the shape (empty or renaming answer substitution).
    """
    eng = Engine(program, int_range=base.int_range)
    shape_status: dict = {}
    in_efs: set[Atom] = set()
    nfs_shapes: list[Atom] = []
    for key in base.preds:
        for atom in base.atoms_for(key):
            shape = decode_all([atom])[0]
            canon = _canonical(shape)
            status = shape_status.get(canon)
            if status is None:
                status = _flounders_with_renaming(eng, shape, depth)
                shape_status[canon] = status
                if status:
                    nfs_shapes.append(shape)
            if status:
                in_efs.add(atom)
    return frozenset(in_efs), nfs_shapes


def _canonical(a: Atom) -> Atom:
    mapping = {}
    for i, v in enumerate(variables_in(a)):
        mapping[v.id] = Var(i)
    return _apply_bind(a, mapping)


def _flounders_with_renaming(eng: Engine, shape: Atom, depth: int) -> bool:
    goal = (shape,)
    for out in eng.solve(goal, depth=depth):
        if isinstance(out, Floundered) and is_variant(out.instance[0], shape):
            return True
    return False


@dataclass
class SplitCheckReport:
    """Result of checking success(sf(P)) == success(P) + encoded flounders."""

    equal: bool
    lfp_only: list
    oracle_only: list
    base_info: str
    lfp_iterations: int
    success_size_used: int
    flounder_depth: int
    lfp_size: int
    oracle_size: int

    def summary(self) -> str:
        verdict = "EQUAL" if self.equal else "DIFFER"
        return (
            f"{verdict}: lfp(sf)={self.lfp_size} atoms, oracle={self.oracle_size} atoms "
            f"on {self.base_info} (success proofs to size {self.success_size_used}, "
            f"flounder depth {self.flounder_depth})"
        )


def verify_success_split(
    program: Program,
    base: BoundedBase | None = None,
    flounder_depth: int = 30,
    size_cap: int = 40,
    **base_kwargs,
) -> SplitCheckReport:
    """Check SS(sf(P)) = SS(P) ∪ EFS(P) on a bounded base, both sides from

    independent routes: the left by the bottom-up fixpoint of the
    transformed program, the right by top-down engine oracles."""
    if base is None:
        base = BoundedBase.for_program(program, **base_kwargs)
    sfp = sf_transform(program)
    sf_base = base.with_preds(sfp.predicates())
    lfp_res = tp_lfp(sfp, sf_base)
    src_keys = set(base.preds)
    lfp_atoms = frozenset(
        stripped
        for a in lfp_res.value
        for stripped in [strip_atom(a)]
        if stripped.key in src_keys and stripped.pred != a.pred and base.on_surface(a)
    )
    successes, size_used = success_oracle(program, base, size_cap=size_cap)
    efs, _shapes = flounder_oracle(program, base, depth=flounder_depth)
    oracle = successes | efs
    lfp_only = sorted(lfp_atoms - oracle, key=repr)
    oracle_only = sorted(oracle - lfp_atoms, key=repr)
    return SplitCheckReport(
        equal=not lfp_only and not oracle_only,
        lfp_only=lfp_only,
        oracle_only=oracle_only,
        base_info=base.describe(),
        lfp_iterations=lfp_res.iterations,
        success_size_used=size_used,
        flounder_depth=flounder_depth,
        lfp_size=len(lfp_atoms),
        oracle_size=len(oracle),
    )
