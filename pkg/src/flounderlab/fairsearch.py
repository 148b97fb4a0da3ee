"""Fair enumeration of delay-free programs and flounder queries.

The fair strategy is iterative deepening on proof size (resolution-step
count): level d emits exactly the answers whose derivations take d steps,
so every answer with a proof within the bound appears exactly once per
proof, and an answer's first appearance is at the size of its minimal
proof.  Occurrences of ``'VAR'(k)`` in answers are encodings of variables
in floundered computed answers of the original program; decoding
generalises them back.
"""

from __future__ import annotations

from dataclasses import dataclass

from .engine import DepthExceeded, Engine, Success
from .program import FProgram, Program
from .terms import (
    Atom,
    Substitution,
    decode_all,
    has_extraneous,
    is_instance,
    is_variant,
)
from .transform import f_transform, flounder_goal

SUCCESS_ONLY = "success-only"
FLOUNDER_ENCODING = "flounder-encoding"


@dataclass(frozen=True)
class AnswerReport:
    """One computed answer of a delay-free program.

    ``raw`` is the instantiated goal, possibly containing 'VAR'(k) terms;
    ``decoded`` generalises those back to variables.  ``kind`` is
    flounder-encoding iff the derivation went through a delay clause or the
    answer contains an extraneous symbol.  ``depth`` is the proof size.
    """

    raw: tuple
    decoded: tuple
    answer: Substitution
    kind: str
    depth: int


class EnumerationStream:
    """Iterator over AnswerReports that records truncation metadata."""

    def __init__(self, gen, max_depth: int):
        self._gen = gen
        self.max_depth = max_depth
        self.truncated = False
        self.answers = 0
        self.exhausted = False

    def __iter__(self):
        return self

    def __next__(self) -> AnswerReport:
        try:
            return next(self._gen)
        except StopIteration:
            self.exhausted = True
            raise


def enumerate_answers(
    program: Program,
    goal,
    max_depth: int = 12,
    max_answers: int | None = None,
    engine: Engine | None = None,
) -> EnumerationStream:
    """Fairly enumerate the computed answers of ``goal`` against a

    delay-free program, flagging answers whose proofs use delay clauses."""
    if program.has_delays():
        raise ValueError("fair enumeration requires a delay-free program")
    eng = engine or Engine(program)
    goal = tuple(goal)
    stream = EnumerationStream(None, max_depth)

    def gen():
        emitted = 0
        for level in range(1, max_depth + 1):
            for out in eng.solve_sld(goal, depth=level):
                if not isinstance(out, Success):
                    if isinstance(out, DepthExceeded) and level == max_depth:
                        stream.truncated = True
                    continue
                if out.derivation.length != level:
                    continue
                raw = out.instance
                kind = (
                    FLOUNDER_ENCODING
                    if out.derivation.used_delay_clauses or has_extraneous(raw)
                    else SUCCESS_ONLY
                )
                yield AnswerReport(raw, _decoded(raw), out.answer, kind, level)
                emitted += 1
                stream.answers = emitted
                if max_answers is not None and emitted >= max_answers:
                    stream.truncated = True
                    return

    stream._gen = gen()
    return stream


def _decoded(goals) -> tuple:
    atoms = [g for g in goals if isinstance(g, Atom)]
    if len(atoms) == len(goals):
        return tuple(decode_all(atoms))
    return goals  # residual disjunctions are left as-is (not meaningful here)


@dataclass
class FlounderReport:
    """Bound-relative answer to "does this goal flounder?".

    ``witnesses`` are the maximally general decoded flounder instances of
    the goal found within the depth bound; a negative result only means no
    witness exists within that bound.
    """

    goal: tuple
    flounders: bool
    witnesses: list
    depth: int
    truncated: bool
    answers_scanned: int = 0


def flounder_query(
    program: Program,
    goal,
    max_depth: int = 12,
    fprogram: FProgram | None = None,
    max_answers: int | None = None,
) -> FlounderReport:
    """Decide (within a bound) whether a goal of a program with delays

    flounders, by enumerating the f-layer of the transformed program and
    decoding its answers into witnesses."""
    goal = tuple(goal)
    fp = fprogram if fprogram is not None else f_transform(program)
    fgoal = flounder_goal(goal, program)
    stream = enumerate_answers(fp, fgoal, max_depth=max_depth, max_answers=max_answers)
    witnesses: list[tuple] = []
    scanned = 0
    for report in stream:
        scanned += 1
        raw = tuple(report.answer.apply(a) for a in goal)
        decoded = tuple(decode_all(raw))
        if any(is_variant(decoded, w) for w in witnesses):
            continue
        witnesses.append(decoded)
    # keep only maximally general witnesses: drop instances of other witnesses
    # (mutual instances are variants and were already collapsed above)
    kept = [
        w
        for w in witnesses
        if not any(w2 is not w and is_instance(w, w2) for w2 in witnesses)
    ]
    return FlounderReport(goal, bool(kept), kept, max_depth, stream.truncated, scanned)
