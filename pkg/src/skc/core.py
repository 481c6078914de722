"""Abstract syntax, substitution and the definition repository.

Terms, systems and configurations are immutable frozen dataclasses, so they
hash and compare structurally and can be shared freely.  Three disjoint
namespaces are kept apart by node type: ``Var`` for lambda-bound variables,
``FnName`` for repository names and ``Future`` for runtime futures.
"""

from __future__ import annotations

import re
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from typing import Optional

__all__ = [
    "SKCError", "NotAValue", "FutureInStoredBody", "Undefined",
    "FutureId", "ROOT",
    "Term", "Var", "Lam", "App", "Async", "FnName", "Future", "Unit",
    "BoolTrue", "BoolFalse", "Pair", "If", "Fst", "Snd", "Set", "Take",
    "UNIT", "TRUE", "FALSE",
    "System", "Run", "Par", "Res", "Nil", "NIL",
    "Repo", "Config",
    "is_value", "futures_of", "free_vars", "fn_names_of", "free_futures",
    "system_futures", "subst_var", "subst_future", "subst_future_term",
    "rename_futures", "alpha_eq", "children", "max_future_num",
]


class SKCError(Exception):
    """Base class for engine errors."""


class NotAValue(SKCError):
    pass


class FutureInStoredBody(SKCError):
    pass


class Undefined(SKCError):
    def __init__(self, name: str):
        super().__init__(f"function {name!r} is not defined")
        self.name = name


_NUM_SUFFIX = re.compile(r"(\d+)$")


@dataclass(frozen=True, order=True)
class FutureId:
    """A future name.  Engine-generated ids look like ``c7``."""

    name: str

    @property
    def num(self) -> Optional[int]:
        m = _NUM_SUFFIX.search(self.name)
        return int(m.group(1)) if m else None

    def __str__(self) -> str:
        return "$" + self.name


ROOT = FutureId("root")


# ---------------------------------------------------------------------------
# Terms


class Term:
    __slots__ = ()


@dataclass(frozen=True)
class Var(Term):
    name: str


@dataclass(frozen=True)
class Lam(Term):
    binder: str
    body: Term


@dataclass(frozen=True)
class App(Term):
    fn: Term
    arg: Term


@dataclass(frozen=True)
class Async(Term):
    body: Term


@dataclass(frozen=True)
class FnName(Term):
    name: str


@dataclass(frozen=True)
class Future(Term):
    fid: FutureId


@dataclass(frozen=True)
class Unit(Term):
    pass


@dataclass(frozen=True)
class BoolTrue(Term):
    pass


@dataclass(frozen=True)
class BoolFalse(Term):
    pass


@dataclass(frozen=True)
class Pair(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class If(Term):
    cond: Term
    then: Term
    else_: Term


@dataclass(frozen=True)
class Fst(Term):
    arg: Term


@dataclass(frozen=True)
class Snd(Term):
    arg: Term


@dataclass(frozen=True)
class Set(Term):
    target: Term
    body: Term


@dataclass(frozen=True)
class Take(Term):
    name: str


UNIT = Unit()
TRUE = BoolTrue()
FALSE = BoolFalse()


def children(t: Term) -> tuple[Term, ...]:
    """Immediate subterms, in a fixed order used for hole paths."""
    match t:
        case Lam(_, body) | Async(body):
            return (body,)
        case App(fn, arg):
            return (fn, arg)
        case Pair(left, right):
            return (left, right)
        case If(c, a, b):
            return (c, a, b)
        case Fst(a) | Snd(a):
            return (a,)
        case Set(target, body):
            return (target, body)
    return ()


def _rebuild(t: Term, kids: tuple[Term, ...]) -> Term:
    match t:
        case Lam(binder, _):
            return Lam(binder, kids[0])
        case Async(_):
            return Async(kids[0])
        case App():
            return App(*kids)
        case Pair():
            return Pair(*kids)
        case If():
            return If(*kids)
        case Fst():
            return Fst(kids[0])
        case Snd():
            return Snd(kids[0])
        case Set():
            return Set(*kids)
    return t


def is_value(t: Term) -> bool:
    """True iff ``t`` is a value.  Function names are not values."""
    match t:
        case Var() | Lam() | Future() | Unit() | BoolTrue() | BoolFalse():
            return True
        case Pair(left, right):
            return is_value(left) and is_value(right)
    return False


def _walk(t: Term) -> Iterator[Term]:
    stack = [t]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(children(node))


def futures_of(t: Term) -> frozenset[FutureId]:
    return frozenset(n.fid for n in _walk(t) if isinstance(n, Future))


def fn_names_of(t: Term) -> frozenset[str]:
    """Function names referenced by ``t`` (``take f`` included)."""
    out = set()
    for n in _walk(t):
        if isinstance(n, FnName | Take):
            out.add(n.name)
    return frozenset(out)


def free_vars(t: Term) -> frozenset[str]:
    match t:
        case Var(name):
            return frozenset((name,))
        case Lam(binder, body):
            return free_vars(body) - {binder}
    result: frozenset[str] = frozenset()
    for k in children(t):
        result |= free_vars(k)
    return result


def max_future_num(futures: Iterable[FutureId]) -> int:
    return max((f.num for f in futures if f.num is not None), default=-1)


def _fresh_name(base: str, avoid: frozenset[str] | set[str]) -> str:
    stem = base.rstrip("0123456789'") or "v"
    i = 1
    while f"{stem}{i}" in avoid:
        i += 1
    return f"{stem}{i}"


def subst_var(t: Term, x: str, v: Term) -> Term:
    """Capture-avoiding ``t{v/x}``; ``v`` must be a value."""
    if not is_value(v):
        raise NotAValue(f"cannot substitute non-value {v!r}")
    return _subst(t, x, v, free_vars(v))


def _subst(t: Term, x: str, v: Term, fv: frozenset[str]) -> Term:
    match t:
        case Var(name):
            return v if name == x else t
        case Lam(binder, body):
            if binder == x or x not in free_vars(body):
                return t
            if binder in fv:
                fresh = _fresh_name(binder, fv | free_vars(body) | {x})
                body = _subst(body, binder, Var(fresh), frozenset((fresh,)))
                binder = fresh
            return Lam(binder, _subst(body, x, v, fv))
        case FnName() | Future() | Unit() | BoolTrue() | BoolFalse() | Take():
            return t
    return _rebuild(t, tuple(_subst(k, x, v, fv) for k in children(t)))


def subst_future_term(t: Term, c: FutureId, v: Term) -> Term:
    """Replace every occurrence of future ``c`` in ``t`` by ``v``.

    ``v`` is closed with respect to variables in every runtime use, so no
    binder can capture it.
    """
    if c not in futures_of(t):
        return t
    return _subst_fut(t, c, v)


def _subst_fut(t: Term, c: FutureId, v: Term) -> Term:
    match t:
        case Future(fid):
            return v if fid == c else t
        case Var() | FnName() | Unit() | BoolTrue() | BoolFalse() | Take():
            return t
    return _rebuild(t, tuple(_subst_fut(k, c, v) for k in children(t)))


def rename_futures(t: Term, mapping: Mapping[FutureId, FutureId]) -> Term:
    if not mapping or not (futures_of(t) & mapping.keys()):
        return t
    return _rename_fut(t, mapping)


def _rename_fut(t: Term, mapping: Mapping[FutureId, FutureId]) -> Term:
    match t:
        case Future(fid):
            return Future(mapping[fid]) if fid in mapping else t
        case Var() | FnName() | Unit() | BoolTrue() | BoolFalse() | Take():
            return t
    return _rebuild(t, tuple(_rename_fut(k, mapping) for k in children(t)))


def alpha_eq(t1: Term, t2: Term) -> bool:
    """Equality up to consistent renaming of lambda-bound variables."""
    return _alpha(t1, t2, {}, {}, 0)


def _alpha(a: Term, b: Term, env_a: dict, env_b: dict, depth: int) -> bool:
    match a, b:
        case Var(x), Var(y):
            # Bound variables compare by binding depth, free ones by name.
            return env_a.get(x, x) == env_b.get(y, y) if (x in env_a) == (y in env_b) else False
        case Lam(x, body_a), Lam(y, body_b):
            ea = {**env_a, x: depth}
            eb = {**env_b, y: depth}
            return _alpha(body_a, body_b, ea, eb, depth + 1)
    if type(a) is not type(b):
        return False
    ka, kb = children(a), children(b)
    if not ka:
        return a == b
    return all(_alpha(x, y, env_a, env_b, depth) for x, y in zip(ka, kb))


# ---------------------------------------------------------------------------
# Systems


class System:
    __slots__ = ()

    def __or__(self, other: System) -> System:
        return Par(self, other)


@dataclass(frozen=True)
class Run(System):
    """A running function ``c <= M``."""

    future: FutureId
    body: Term


@dataclass(frozen=True)
class Par(System):
    left: System
    right: System


@dataclass(frozen=True)
class Res(System):
    future: FutureId
    body: System


@dataclass(frozen=True)
class Nil(System):
    pass


NIL = Nil()


def system_futures(s: System) -> frozenset[FutureId]:
    """Every future occurring in ``s``, bound or free."""
    match s:
        case Run(c, body):
            return futures_of(body) | {c}
        case Par(left, right):
            return system_futures(left) | system_futures(right)
        case Res(c, body):
            return system_futures(body) | {c}
    return frozenset()


def free_futures(s: System) -> frozenset[FutureId]:
    """Futures of ``s`` not bound by an enclosing restriction.

    The producer position of ``c <= M`` counts as an occurrence of ``c``.
    """
    match s:
        case Run(c, body):
            return futures_of(body) | {c}
        case Par(left, right):
            return free_futures(left) | free_futures(right)
        case Res(c, body):
            return free_futures(body) - {c}
    return frozenset()


def subst_future(s: System, c: FutureId, v: Term) -> System:
    """``s{v/c}``: substitute free occurrences of ``c`` inside terms of ``s``."""
    if not is_value(v):
        raise NotAValue(f"cannot substitute non-value {v!r}")
    return _subst_sys(s, c, v)


def _subst_sys(s: System, c: FutureId, v: Term) -> System:
    match s:
        case Run(d, body):
            return Run(d, subst_future_term(body, c, v))
        case Par(left, right):
            return Par(_subst_sys(left, c, v), _subst_sys(right, c, v))
        case Res(d, body):
            return s if d == c else Res(d, _subst_sys(body, c, v))
    return s


# ---------------------------------------------------------------------------
# Repository and configurations


class Repo(Mapping[str, Term]):
    """The definition repository: a finite map from function names to bodies.

    Immutable; ``define`` and ``undef`` return new repositories.  Insertion
    order is kept for printing only.
    """

    __slots__ = ("_defs",)

    def __init__(self, defs: Mapping[str, Term] | Iterable[tuple[str, Term]] = ()):
        items = dict(defs)
        for name, body in items.items():
            if futures_of(body):
                raise FutureInStoredBody(f"body of {name!r} contains futures")
        self._defs = items

    def __getitem__(self, name: str) -> Term:
        return self._defs[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._defs)

    def __len__(self) -> int:
        return len(self._defs)

    def __hash__(self) -> int:
        return hash(frozenset(self._defs.items()))

    def __repr__(self) -> str:
        return f"Repo({self._defs!r})"

    def lookup(self, name: str) -> Optional[Term]:
        return self._defs.get(name)

    def define(self, name: str, body: Term) -> Repo:
        if futures_of(body):
            raise FutureInStoredBody(f"body for {name!r} contains futures")
        new = Repo.__new__(Repo)
        new._defs = {**self._defs, name: body}
        return new

    def undef(self, name: str) -> Repo:
        if name not in self._defs:
            raise Undefined(name)
        new = Repo.__new__(Repo)
        new._defs = {k: v for k, v in self._defs.items() if k != name}
        return new


@dataclass(frozen=True)
class Config:
    """A serverless architecture ``<S | D>`` plus the fresh-future counter."""

    system: System
    repo: Repo = field(default_factory=Repo)
    fresh_counter: int = -1

    def __post_init__(self):
        floor = max_future_num(system_futures(self.system)) + 1
        if self.fresh_counter < floor:
            object.__setattr__(self, "fresh_counter", floor)
