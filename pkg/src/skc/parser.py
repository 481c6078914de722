"""Surface syntax: tokenizer, recursive-descent parser, desugaring, printer.

An identifier bound by an enclosing binder parses as a variable; any other
identifier is a function name.  Futures (``$c3``) are accepted only where the
caller allows them, never in programs loaded from source.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .core import (
    App, Async, BoolFalse, BoolTrue, Config, FnName, Fst, Future, FutureId,
    If, Lam, Nil, Par, Pair, Res, Run, SKCError, Set, Snd, System, Take, Term,
    Unit, Var, FALSE, NIL, TRUE, UNIT, fn_names_of, free_vars, is_value,
    subst_var,
)

__all__ = [
    "ParseError", "FutureInSource", "UnknownSugar", "DuplicateDefinition",
    "UndefinedHandler", "Program", "parse_term", "parse_system",
    "parse_program", "pretty", "pretty_term", "pretty_system", "pretty_program",
    "pretty_config", "KEYWORDS", "desugar_let", "desugar_let_rec",
    "desugar_pair_lambda", "desugar_pair",
]

KEYWORDS = frozenset({
    "def", "event", "main", "let", "rec", "in", "if", "then", "else",
    "async", "fst", "snd", "take", "set", "True", "False", "nu",
})


class ParseError(SKCError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        where = f"{line}:{col}: " if line else ""
        super().__init__(where + message)
        self.line = line
        self.col = col


class FutureInSource(ParseError):
    pass


class UnknownSugar(ParseError):
    pass


class DuplicateDefinition(ParseError):
    pass


class UndefinedHandler(ParseError):
    pass


_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<future>\$[A-Za-z0-9_]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_'\-]*)
  | (?P<zero>0)
  | (?P<op><=|[\\().,=|])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str  # "ident", "kw", "future", "zero", "op", "eof"
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            if kind == "ident" and chunk in KEYWORDS:
                kind = "kw"
            tokens.append(Token(kind, chunk, line, pos - line_start + 1))
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# ---------------------------------------------------------------------------
# Macro expansions


def desugar_let(x: str, bound: Term, body: Term) -> Term:
    """``let x = M in M'``  =>  ``(\\x.M') M``."""
    return App(Lam(x, body), bound)


def desugar_let_rec(x: str, bound: Term, body: Term) -> Term:
    """``let rec x = M in M'``  =>  ``let x = fix \\x.M in M'``."""
    return desugar_let(x, App(FnName("fix"), Lam(x, bound)), body)


def desugar_pair_lambda(x: str, y: str, body: Term, avoid: Iterable[str] = ()) -> Term:
    """``\\(x,y).M``  =>  ``\\z.(\\x.\\y.M) (fst z) (snd z)`` with ``z`` fresh."""
    taken = set(free_vars(body)) | {x, y} | set(avoid)
    z = "z"
    i = 0
    while z in taken:
        i += 1
        z = f"z{i}"
    return Lam(z, App(App(Lam(x, Lam(y, body)), Fst(Var(z))), Snd(Var(z))))


def desugar_pair(left: Term, right: Term) -> Term:
    """Pairs of values stay pairs; otherwise ``(\\p.\\q.(p,q)) M N``."""
    if is_value(left) and is_value(right):
        return Pair(left, right)
    return App(App(Lam("p", Lam("q", Pair(Var("p"), Var("q")))), left), right)


def _wrap_handler(t: Term) -> Term:
    # callHandler(h) is shorthand for callHandler \_.h
    if isinstance(t, App) and t.fn == FnName("callHandler") and isinstance(t.arg, FnName):
        return App(t.fn, Lam("_", t.arg))
    return t


# ---------------------------------------------------------------------------
# Parser


_ATOM_START_KW = {"True", "False", "async", "fst", "snd", "take", "set"}


class _Parser:
    def __init__(self, tokens: list[Token], allow_futures: bool):
        self.toks = tokens
        self.i = 0
        self.allow_futures = allow_futures

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def advance(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg: str, tok: Optional[Token] = None, cls=ParseError):
        tok = tok or self.tok
        return cls(msg, tok.line, tok.col)

    def at(self, text: str) -> bool:
        return self.tok.kind in ("op", "kw") and self.tok.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def binder(self) -> str:
        t = self.tok
        if t.kind != "ident":
            raise self.error(f"expected a binder, found {t.text or 'end of input'!r}")
        self.advance()
        return t.text

    # term := lambda | if | let | app
    def term(self, scope: frozenset[str]) -> Term:
        if self.at("\\"):
            return self.lam(scope)
        if self.at("if"):
            self.advance()
            cond = self.term(scope)
            self.expect("then")
            then = self.term(scope)
            self.expect("else")
            return If(cond, then, self.term(scope))
        if self.at("let"):
            return self.let(scope)
        return self.app(scope)

    def lam(self, scope: frozenset[str]) -> Term:
        start = self.expect("\\")
        if self.at("("):
            self.advance()
            if self.tok.kind != "ident" or self.peek().text != ",":
                raise self.error("malformed pair pattern; expected \\(x,y).M", start, UnknownSugar)
            x = self.binder()
            self.expect(",")
            y = self.binder()
            if not self.at(")") or self.peek().text != ".":
                raise self.error("malformed pair pattern; expected \\(x,y).M", start, UnknownSugar)
            self.advance()
            self.advance()
            inner = scope | {v for v in (x, y) if v != "_"}
            body = self.term(inner)
            return desugar_pair_lambda(x, y, body, avoid=scope)
        x = self.binder()
        self.expect(".")
        return Lam(x, self.term(scope | {x} if x != "_" else scope))

    def let(self, scope: frozenset[str]) -> Term:
        start = self.expect("let")
        rec = self.at("rec")
        if rec:
            self.advance()
        x = self.binder()
        if rec and x == "_":
            raise self.error("let rec needs a named binder", start, UnknownSugar)
        self.expect("=")
        inner = scope | {x} if x != "_" else scope
        bound = self.term(inner if rec else scope)
        self.expect("in")
        body = self.term(inner)
        return desugar_let_rec(x, bound, body) if rec else desugar_let(x, bound, body)

    def starts_atom(self) -> bool:
        t = self.tok
        if t.kind in ("ident", "future"):
            return True
        if t.kind == "kw":
            return t.text in _ATOM_START_KW
        return t.kind == "op" and t.text == "("

    def app(self, scope: frozenset[str]) -> Term:
        if not self.starts_atom():
            found = self.tok.text or "end of input"
            raise self.error(f"expected a term, found {found!r}")
        result = self.atom(scope)
        while True:
            if self.starts_atom():
                result = _wrap_handler(App(result, self.atom(scope)))
            elif self.at("\\") or self.at("if") or self.at("let"):
                # a trailing lambda/if/let argument extends as far right as possible
                return _wrap_handler(App(result, self.term(scope)))
            else:
                return result

    def atom(self, scope: frozenset[str]) -> Term:
        t = self.tok
        if t.kind == "ident":
            self.advance()
            if t.text == "_":
                raise self.error("'_' cannot be referenced", t)
            return Var(t.text) if t.text in scope else FnName(t.text)
        if t.kind == "future":
            if not self.allow_futures:
                raise self.error(f"future {t.text} cannot appear in source", t, FutureInSource)
            self.advance()
            return Future(FutureId(t.text[1:]))
        if t.kind == "kw":
            self.advance()
            match t.text:
                case "True":
                    return TRUE
                case "False":
                    return FALSE
                case "async":
                    return Async(self.atom(scope))
                case "fst":
                    return Fst(self.atom(scope))
                case "snd":
                    return Snd(self.atom(scope))
                case "take":
                    name = self.tok
                    if name.kind != "ident" or name.text in scope or name.text == "_":
                        raise self.error("take expects a function name", name)
                    self.advance()
                    return Take(name.text)
                case "set":
                    target = self.atom(scope)
                    return Set(target, self.atom(scope))
        self.expect("(")
        if self.at(")"):
            self.advance()
            return UNIT
        first = self.term(scope)
        if self.at(","):
            self.advance()
            second = self.term(scope)
            self.expect(")")
            return desugar_pair(first, second)
        self.expect(")")
        return first

    # system := sysatom ("|" sysatom)*
    def system(self) -> System:
        result = self.sysatom()
        while self.at("|"):
            self.advance()
            result = Par(result, self.sysatom())
        return result

    def sysatom(self) -> System:
        t = self.tok
        if t.kind == "zero":
            self.advance()
            return NIL
        if self.at("nu"):
            self.advance()
            fut = self.tok
            if fut.kind != "future":
                raise self.error("expected a future after 'nu'")
            self.advance()
            self.expect(".")
            return Res(FutureId(fut.text[1:]), self.sysatom())
        if t.kind == "future":
            self.advance()
            self.expect("<=")
            return Run(FutureId(t.text[1:]), self.term(frozenset()))
        if self.at("("):
            self.advance()
            inner = self.system()
            self.expect(")")
            return inner
        raise self.error(f"expected a system, found {t.text or 'end of input'!r}")

    def eof(self):
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}")


def parse_term(text: str, *, allow_futures: bool = True, variables: Iterable[str] = ()) -> Term:
    """Parse and desugar a single term.

    ``variables`` names identifiers to treat as (free) variables rather than
    function names, for building open terms.
    """
    p = _Parser(tokenize(text), allow_futures)
    t = p.term(frozenset(variables))
    p.eof()
    return t


def parse_system(text: str) -> System:
    p = _Parser(tokenize(text), True)
    s = p.system()
    p.eof()
    return s


@dataclass
class Program:
    defs: list[tuple[str, Term]] = field(default_factory=list)
    events: list[tuple[str, str]] = field(default_factory=list)
    main: Term = UNIT


def parse_program(text: str) -> Program:
    """Parse a ``.skc`` program: ``def``/``event`` declarations then ``main``."""
    p = _Parser(tokenize(text), allow_futures=False)
    prog = Program()
    seen: set[str] = set()
    handler_tokens: dict[str, Token] = {}
    while p.at("def") or p.at("event"):
        kw = p.advance()
        name_tok = p.tok
        name = p.binder()
        if name == "_":
            raise p.error("'_' is not a valid name", name_tok)
        if name in seen:
            raise p.error(f"duplicate definition of {name!r}", name_tok, DuplicateDefinition)
        seen.add(name)
        p.expect("=")
        if kw.text == "def":
            prog.defs.append((name, p.term(frozenset())))
        else:
            handler_tokens[name] = p.tok
            prog.events.append((name, p.binder()))
    p.expect("main")
    p.expect("=")
    prog.main = p.term(frozenset())
    p.eof()
    from .services import BUILTIN_NAMES  # deferred: services imports this module
    for event, handler in prog.events:
        if handler not in seen and handler not in BUILTIN_NAMES:
            tok = handler_tokens[event]
            raise UndefinedHandler(f"event {event!r} uses undefined handler {handler!r}", tok.line, tok.col)
    return prog


# ---------------------------------------------------------------------------
# Printer


def _safe_binder(t: Lam) -> Lam:
    # A binder that shadows a function name used in its body would re-parse
    # that name as a variable, so such binders are renamed first.
    names = fn_names_of(t.body)
    if t.binder not in names:
        return t
    avoid = names | free_vars(t.body) | KEYWORDS
    i = 1
    while f"{t.binder}{i}" in avoid:
        i += 1
    fresh = f"{t.binder}{i}"
    return Lam(fresh, subst_var(t.body, t.binder, Var(fresh)))


_TOP, _HEAD, _ATOM = 0, 1, 2


def _pp(t: Term, level: int) -> str:
    match t:
        case Var(name) | FnName(name):
            return name
        case Future(fid):
            return str(fid)
        case Unit():
            return "()"
        case BoolTrue():
            return "True"
        case BoolFalse():
            return "False"
        case Pair(left, right):
            return f"({_pp(left, _TOP)}, {_pp(right, _TOP)})"
        case Take(name):
            s = f"take {name}"
        case Lam():
            lam = _safe_binder(t)
            s = f"\\{lam.binder}.{_pp(lam.body, _TOP)}"
            return f"({s})" if level > _TOP else s
        case If(c, a, b):
            s = f"if {_pp(c, _TOP)} then {_pp(a, _TOP)} else {_pp(b, _TOP)}"
            return f"({s})" if level > _TOP else s
        case App(fn, arg):
            s = f"{_pp(fn, _HEAD)} {_pp(arg, _ATOM)}"
        case Async(body):
            s = f"async {_pp(body, _ATOM)}"
        case Fst(arg):
            s = f"fst {_pp(arg, _ATOM)}"
        case Snd(arg):
            s = f"snd {_pp(arg, _ATOM)}"
        case Set(target, body):
            s = f"set {_pp(target, _ATOM)} {_pp(body, _ATOM)}"
        case _:
            raise TypeError(f"not a term: {t!r}")
    return f"({s})" if level == _ATOM else s


def pretty_term(t: Term) -> str:
    return _pp(t, _TOP)


def _pps(s: System, atom: bool) -> str:
    match s:
        case Nil():
            return "0"
        case Run(c, body):
            return f"{c} <= {pretty_term(body)}"
        case Res(c, body):
            return f"nu {c}.{_pps(body, True)}"
        case Par(left, right):
            text = f"{_pps(left, False)} | {_pps(right, True)}"
            return f"({text})" if atom else text
    raise TypeError(f"not a system: {s!r}")


def pretty_system(s: System) -> str:
    return _pps(s, False)


def pretty_config(cfg: Config, hide: Iterable[str] = ()) -> str:
    hidden = set(hide)
    defs = "; ".join(
        f"{name} = {pretty_term(body)}" for name, body in cfg.repo.items() if name not in hidden
    )
    return f"<{pretty_system(cfg.system)} || {{{defs}}}>"


def pretty_program(p: Program) -> str:
    lines = [f"def {name} = {pretty_term(body)}" for name, body in p.defs]
    lines += [f"event {event} = {handler}" for event, handler in p.events]
    lines.append(f"main = {pretty_term(p.main)}")
    return "\n".join(lines) + "\n"


def pretty(obj) -> str:
    """Render a term, system or configuration as surface text."""
    if isinstance(obj, Term):
        return pretty_term(obj)
    if isinstance(obj, System):
        return pretty_system(obj)
    if isinstance(obj, Config):
        return pretty_config(obj)
    raise TypeError(f"cannot pretty-print {type(obj).__name__}")
