"""Concrete syntax for delayed logic programs (``.dlp`` files).

Grammar sketch::

    program   ::= item*
    item      ::= ':-' 'delay' head ('if'|'when') condition '.'  |  clause '.'
    clause    ::= atom (':-' body)?
    body      ::= goal (',' goal)*
    goal      ::= atom | '(' body (';' body)* ')'
    condition ::= ctest (',' ctest)* (';' ...)*      -- ';' binds loosest
    ctest     ::= ('var'|'nonground') '(' variable ')'
    term      ::= primary ('.' term)?                -- infix cons, right assoc
    primary   ::= variable | integer | name ('(' term (',' term)* ')')? | list
    list      ::= '[' (term (',' term)* ('|' term)?)? ']'

Variables start with an uppercase letter or ``_``; names start lowercase or
are quoted with single quotes.  ``%`` starts a comment.  A ``.`` ends a
clause when followed by layout or end of input, and is the list constructor
otherwise, so ``append(A.As, Bs, A.Cs).`` parses as expected.  The printer
always emits the ``[A|As]`` sugar for cons.
"""

from __future__ import annotations

from dataclasses import dataclass

from .program import (
    BASE_BUILTINS,
    BUILTIN_DECLS,
    DELAY,
    ENCODING_BUILTINS,
    Clause,
    DelayDecl,
    Disj,
    Goal,
    Program,
    NONGROUND_TEST,
    VAR_TEST,
)
from .terms import (
    Atom,
    CONS_SYMBOL,
    ENCODING_NAME,
    ENCODING_SYMBOL,
    NIL,
    Struct,
    Symbol,
    Term,
    Var,
    VarSource,
    int_value,
    list_parts,
    variables_in,
)


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


# ---------------------------------------------------------------------------
# Lexer

_PUNCT = {"(": "(", ")": ")", "[": "[", "]": "]", "|": "|", ",": ",", ";": ";"}


@dataclass(frozen=True, slots=True)
class _Tok:
    kind: str  # name var int punct neck enddot consdot eof
    text: str
    line: int
    col: int


def _tokenize(src: str) -> list[_Tok]:
    toks = []
    i, line, col = 0, 1, 1
    n = len(src)

    def err(msg):
        raise ParseError(msg, line, col)

    while i < n:
        ch = src[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "%":
            while i < n and src[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if ch == ":" and src[i : i + 2] == ":-":
            toks.append(_Tok("neck", ":-", start_line, start_col))
            i += 2
            col += 2
            continue
        if ch in _PUNCT:
            toks.append(_Tok("punct", ch, start_line, start_col))
            i += 1
            col += 1
            continue
        if ch == ".":
            nxt = src[i + 1] if i + 1 < n else ""
            if nxt == "" or nxt in " \t\r\n%":
                toks.append(_Tok("enddot", ".", start_line, start_col))
            else:
                toks.append(_Tok("consdot", ".", start_line, start_col))
            i += 1
            col += 1
            continue
        if ch == "'":
            j = i + 1
            buf = []
            while True:
                if j >= n:
                    err("unterminated quoted name")
                if src[j] == "'":
                    if src[j : j + 2] == "''":
                        buf.append("'")
                        j += 2
                        continue
                    j += 1
                    break
                if src[j] == "\n":
                    err("newline in quoted name")
                buf.append(src[j])
                j += 1
            toks.append(_Tok("name", "".join(buf), start_line, start_col))
            col += j - i
            i = j
            continue
        if ch.isdigit() or (ch == "-" and i + 1 < n and src[i + 1].isdigit()):
            j = i + 1
            while j < n and src[j].isdigit():
                j += 1
            toks.append(_Tok("int", src[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            text = src[i:j]
            kind = "var" if (ch == "_" or ch.isupper()) else "name"
            toks.append(_Tok(kind, text, start_line, start_col))
            col += j - i
            i = j
            continue
        err(f"unexpected character {ch!r}")
    toks.append(_Tok("eof", "", line, col))
    return toks


# ---------------------------------------------------------------------------
# Parser


class _Parser:
    def __init__(self, src: str, vars: VarSource, allow_encoded: bool = False):
        self.toks = _tokenize(src)
        self.pos = 0
        self.vars = vars
        self.allow_encoded = allow_encoded
        self.scope: dict[str, Var] = {}

    # -- token helpers

    def peek(self) -> _Tok:
        return self.toks[self.pos]

    def next(self) -> _Tok:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def at(self, kind: str, text: str | None = None) -> bool:
        t = self.peek()
        return t.kind == kind and (text is None or t.text == text)

    def expect(self, kind: str, text: str | None = None) -> _Tok:
        t = self.peek()
        if not self.at(kind, text):
            want = text or kind
            self.err(f"expected {want!r}, found {t.text!r}" if t.text else f"expected {want!r}")
        return self.next()

    def err(self, msg: str):
        t = self.peek()
        raise ParseError(msg, t.line, t.col)

    # -- fragments

    def variable(self, name: str) -> Var:
        if name == "_":
            return self.vars.new("_")
        v = self.scope.get(name)
        if v is None:
            v = self.scope[name] = self.vars.new(name)
        return v

    def term(self) -> Term:
        t = self.primary()
        if self.at("consdot"):
            self.next()
            return Struct(CONS_SYMBOL, (t, self.term()))
        return t

    def primary(self) -> Term:
        t = self.peek()
        if t.kind == "var":
            self.next()
            return self.variable(t.text)
        if t.kind == "int":
            self.next()
            return Struct(Symbol(t.text, 0))
        if t.kind == "punct" and t.text == "[":
            return self.list_term()
        if t.kind == "name":
            self.next()
            args = ()
            if self.at("punct", "("):
                self.next()
                items = [self.term()]
                while self.at("punct", ","):
                    self.next()
                    items.append(self.term())
                self.expect("punct", ")")
                args = tuple(items)
            if t.text == ENCODING_NAME:
                if not (self.allow_encoded and len(args) == 1):
                    raise ParseError(
                        f"{ENCODING_NAME!r}/1 is reserved for encoded variables", t.line, t.col
                    )
                return Struct(ENCODING_SYMBOL, args)
            return Struct(Symbol(t.text, len(args)), args)
        self.err("expected a term")

    def list_term(self) -> Term:
        self.expect("punct", "[")
        if self.at("punct", "]"):
            self.next()
            return NIL
        items = [self.term()]
        while self.at("punct", ","):
            self.next()
            items.append(self.term())
        tail: Term = NIL
        if self.at("punct", "|"):
            self.next()
            tail = self.term()
        self.expect("punct", "]")
        out = tail
        for item in reversed(items):
            out = Struct(CONS_SYMBOL, (item, out))
        return out

    def atom(self) -> Atom:
        t = self.peek()
        if t.kind != "name":
            self.err("expected a predicate name")
        term = self.primary()
        if isinstance(term, Struct) and term.symbol.is_extraneous:
            raise ParseError("encoded-variable term is not a predicate", t.line, t.col)
        return Atom(term.symbol.name, term.args)

    def goal(self) -> Goal:
        if self.at("punct", "("):
            self.next()
            branches = [self.conjunction()]
            while self.at("punct", ";"):
                self.next()
                branches.append(self.conjunction())
            self.expect("punct", ")")
            if len(branches) == 1:
                # a parenthesised conjunction is not a disjunction node
                br = branches[0]
                if len(br) == 1:
                    return br[0]
            return Disj(tuple(branches))
        return self.atom()

    def conjunction(self) -> tuple:
        goals = [self.goal()]
        while self.at("punct", ","):
            self.next()
            goals.append(self.goal())
        return tuple(goals)

    def goal_body(self) -> tuple:
        """A top-level goal: a conjunction, allowing an unparenthesised ';'."""
        branches = [self.conjunction()]
        while self.at("punct", ";"):
            self.next()
            branches.append(self.conjunction())
        if len(branches) == 1:
            return branches[0]
        return (Disj(tuple(branches)),)

    # -- delay conditions

    def condition_dnf(self, head_vars: dict[int, str]) -> tuple:
        disjuncts = [self.condition_conj(head_vars)]
        while self.at("punct", ";"):
            self.next()
            disjuncts.append(self.condition_conj(head_vars))
        return tuple(disjuncts)

    def condition_conj(self, head_vars: dict[int, str]) -> tuple:
        tests = [self.condition_test(head_vars)]
        while self.at("punct", ","):
            self.next()
            tests.append(self.condition_test(head_vars))
        return tuple(tests)

    def condition_test(self, head_vars: dict[int, str]) -> tuple:
        t = self.peek()
        if t.kind != "name" or t.text not in (VAR_TEST, NONGROUND_TEST):
            self.err("expected var(V) or nonground(V)")
        self.next()
        self.expect("punct", "(")
        vt = self.peek()
        if vt.kind != "var" or vt.text == "_":
            self.err("delay condition takes a named head variable")
        self.next()
        self.expect("punct", ")")
        v = self.scope.get(vt.text)
        if v is None or v.id not in head_vars:
            raise ParseError(
                f"condition variable {vt.text} is not a delay head variable", vt.line, vt.col
            )
        return (t.text, head_vars[v.id])

    def delay_decl(self) -> DelayDecl:
        head = self.atom()
        positions: dict[int, int] = {}
        names = []
        for pos, arg in enumerate(head.args):
            if not isinstance(arg, Var) or arg.hint == "_":
                self.err("delay head arguments must be distinct named variables")
            if arg.id in positions:
                self.err("delay head arguments must be distinct variables")
            positions[arg.id] = pos
            names.append(arg.hint)
        kw = self.peek()
        if kw.kind == "name" and kw.text in ("if", "when"):
            self.next()
        else:
            self.err("expected 'if' or 'when'")
        dnf = self.condition_dnf(positions)
        return DelayDecl(head.pred, head.arity, tuple(names), dnf)

    # -- items

    def program(self) -> Program:
        clauses: list[Clause] = []
        delays: dict[tuple[str, int], DelayDecl] = {}
        next_id = 1
        while not self.at("eof"):
            self.scope = {}
            if self.at("neck"):
                self.next()
                kw = self.expect("name")
                if kw.text != "delay":
                    raise ParseError("only ':- delay' directives are supported", kw.line, kw.col)
                d = self.delay_decl()
                self.expect("enddot")
                if d.key in delays:
                    delays[d.key] = delays[d.key].merged_with(d)
                else:
                    delays[d.key] = d
                continue
            t = self.peek()
            head = self.atom()
            self._check_definable(head, t)
            body: tuple = ()
            if self.at("neck"):
                self.next()
                body = self.conjunction()
            self.expect("enddot")
            clauses.append(Clause(next_id, head, body))
            next_id += 1
        builtins = BASE_BUILTINS | ENCODING_BUILTINS if self.allow_encoded else BASE_BUILTINS
        return Program(tuple(clauses), tuple(delays.values()), builtins)

    def _check_definable(self, head: Atom, tok: _Tok):
        # Reloading transformation output (allow_encoded) legitimately defines
        # evar/enonground and delay clauses for the arithmetic builtins.
        if self.allow_encoded:
            return
        if head.key in ENCODING_BUILTINS:
            raise ParseError(f"{head.pred}/{head.arity} may not be defined", tok.line, tok.col)
        if head.key in BASE_BUILTINS:
            raise ParseError(
                f"{head.pred}/{head.arity} is a builtin and may not be defined", tok.line, tok.col
            )


def parse_program(src: str, allow_encoded: bool = False, vars: VarSource | None = None) -> Program:
    """Parse a ``.dlp`` source text into a Program.

    ``allow_encoded`` additionally permits ``'VAR'(...)`` terms and user
    definitions of evar/enonground (used for demonstration fixtures and for
    reloading material produced by the transformations).
    """
    p = _Parser(src, vars or VarSource(), allow_encoded)
    return p.program()


def parse_goal(src: str, allow_encoded: bool = False, vars: VarSource | None = None) -> tuple:
    """Parse a goal (a conjunction, ';' allowed) using the body grammar."""
    p = _Parser(src, vars or VarSource(), allow_encoded)
    goals = p.goal_body()
    if p.at("enddot"):
        p.next()
    p.expect("eof")
    return goals


def parse_term(src: str, allow_encoded: bool = False, vars: VarSource | None = None) -> Term:
    p = _Parser(src, vars or VarSource(), allow_encoded)
    t = p.term()
    p.expect("eof")
    return t


# ---------------------------------------------------------------------------
# Printer

_IDENT_OK = set("abcdefghijklmnopqrstuvwxyz")


def _name_text(name: str) -> str:
    if name and name[0] in _IDENT_OK and all(c.isalnum() or c == "_" for c in name):
        return name
    if int_value(Struct(Symbol(name, 0))) is not None:
        return name
    return "'" + name.replace("'", "''") + "'"


def _display_names(obj) -> dict[int, str]:
    """Choose display names for all variables of a clause/goal scope."""
    names: dict[int, str] = {}
    used: set[str] = set()
    anon = 0
    gen = 0
    for v in variables_in(obj):
        hint = v.hint
        if hint == "_":
            names[v.id] = f"_{anon}" if anon else "_"
            anon += 1
            used.add(names[v.id])
            continue
        if hint and hint not in used:
            names[v.id] = hint
            used.add(hint)
            continue
        while True:
            cand = _gen_name(gen)
            gen += 1
            if cand not in used:
                break
        names[v.id] = cand
        used.add(cand)
    return names


def _gen_name(k: int) -> str:
    letter = chr(ord("A") + k % 26)
    suffix = k // 26
    return letter if not suffix else f"{letter}{suffix}"


def term_text(t: Term, names: dict[int, str] | None = None) -> str:
    if names is None:
        names = _display_names(t)
    return _term_text(t, names)


def _term_text(t: Term, names: dict[int, str]) -> str:
    if isinstance(t, Var):
        return names.get(t.id, t.hint or f"_{t.id}")
    if t == NIL:
        return "[]"
    if t.symbol == CONS_SYMBOL:
        items, tail = list_parts(t)
        inner = ", ".join(_term_text(x, names) for x in items)
        if tail == NIL:
            return f"[{inner}]"
        return f"[{inner}|{_term_text(tail, names)}]"
    if not t.args:
        return _name_text(t.symbol.name)
    args = ", ".join(_term_text(a, names) for a in t.args)
    return f"{_name_text(t.symbol.name)}({args})"


def atom_text(a: Atom, names: dict[int, str] | None = None) -> str:
    if names is None:
        names = _display_names(a)
    return _atom_text(a, names)


def _atom_text(a: Atom, names: dict[int, str]) -> str:
    if not a.args:
        return _name_text(a.pred)
    args = ", ".join(_term_text(t, names) for t in a.args)
    return f"{_name_text(a.pred)}({args})"


def _goal_text(g: Goal, names: dict[int, str]) -> str:
    if isinstance(g, Atom):
        return _atom_text(g, names)
    inner = " ; ".join(
        ", ".join(_goal_text(x, names) for x in branch) for branch in g.branches
    )
    return f"({inner})"


def goal_text(goals, names: dict[int, str] | None = None) -> str:
    goals = goals if isinstance(goals, tuple) else tuple(goals)
    if names is None:
        names = _display_names(goals)
    return ", ".join(_goal_text(g, names) for g in goals)


def clause_text(c: Clause) -> str:
    names = _display_names((c.head,) + c.body)
    head = _atom_text(c.head, names)
    if not c.body:
        return head + "."
    return f"{head} :- {goal_text(c.body, names)}."


def delay_text(d: DelayDecl) -> str:
    args = ", ".join(d.var_names)
    head = f"{_name_text(d.pred)}({args})" if d.var_names else _name_text(d.pred)
    disjuncts = " ; ".join(
        ", ".join(f"{kind}({d.var_names[pos]})" for kind, pos in conj) for conj in d.dnf
    )
    return f":- delay {head} if {disjuncts}."


def program_text(p: Program) -> str:
    """Normal-form layout: each predicate's delay declaration (if any)

    directly above its clauses, predicates in order of first appearance,
    one blank line between predicate groups."""
    groups: list[list[str]] = []
    seen: set[tuple[str, int]] = set()
    for key in p.predicates():
        seen.add(key)
        lines = []
        d = next((d for d in p.delays if d.key == key), None)
        if d is not None:
            lines.append(delay_text(d))
        lines.extend(clause_text(c) for c in p.clauses_for(key))
        groups.append(lines)
    orphan = [delay_text(d) for d in p.delays if d.key not in seen]
    if orphan:
        groups.append(orphan)
    return "\n\n".join("\n".join(g) for g in groups) + ("\n" if groups else "")
