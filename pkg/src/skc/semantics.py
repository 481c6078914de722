"""Reduction semantics: prenex normalization, redex search and rewriting.

Structural congruence is handled by normalizing every system to a prenex
form (all restrictions at the top, a flat list of running functions), after
which each running function is searched for its single redex under the
evaluation contexts.  Together these two steps realize the closure rules for
congruence, restriction and parallel composition.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .core import (
    App, Async, BoolFalse, BoolTrue, Config, FnName, Fst, Future, FutureId,
    If, Lam, Nil, Par, Pair, Repo, Res, Run, SKCError, Set, Snd, System, Take,
    Term, Var, NIL, children, fn_names_of, free_futures, free_vars,
    futures_of, is_value, max_future_num, rename_futures, subst_future_term,
    subst_var, system_futures,
)
from .parser import desugar_let_rec, pretty_term

__all__ = [
    "RULES", "Redex", "StuckReason", "NormalSystem", "StaleRedex", "normalize",
    "decompose", "find_redexes", "stuck_components", "apply_redex",
    "congruent", "subterm_at", "replace_at", "bind_fn_name", "canonical_config",
]

RULES = ("beta", "ret", "async", "push", "set", "take", "cond_t", "cond_f", "fst", "snd")

_MASK = FutureId("?")


class StaleRedex(SKCError):
    pass


@dataclass(frozen=True)
class Redex:
    """One reduction opportunity in a normalized configuration.

    ``component`` indexes the normalized component list for internal rules;
    push redexes instead name the restricted ``future`` being returned.
    """

    rule: str
    component: Optional[int]
    path: tuple[int, ...] = ()
    future: Optional[FutureId] = None


@dataclass(frozen=True)
class StuckReason:
    """Why a running function cannot take a step."""

    reason: str
    detail: str = ""

    def __str__(self) -> str:
        return f"{self.reason}({self.detail})" if self.detail else self.reason


@dataclass(frozen=True)
class NormalSystem:
    restricted: tuple[FutureId, ...]
    components: tuple[Run, ...]

    def embed(self) -> System:
        body: System = NIL
        for run in self.components:
            body = run if body == NIL else Par(body, run)
        for c in reversed(self.restricted):
            body = Res(c, body)
        return body


# ---------------------------------------------------------------------------
# Normalization


def normalize(s: System) -> NormalSystem:
    """Prenex form of ``s``: restrictions extruded, parallel flattened, 0 dropped.

    Restricted futures are renamed only where extrusion would otherwise
    capture or clash.  Components are ordered free-producer first, then by
    printed text with restricted futures masked.
    """
    taken = set(free_futures(s))
    counter = [max_future_num(system_futures(s)) + 1]
    restricted: list[FutureId] = []
    runs: list[Run] = []

    def walk(node: System, ren: dict[FutureId, FutureId]) -> None:
        match node:
            case Run(c, body):
                runs.append(Run(ren.get(c, c), rename_futures(body, ren)))
            case Par(left, right):
                walk(left, ren)
                walk(right, ren)
            case Res(c, body):
                new = c
                if c in taken:
                    new = FutureId(f"c{counter[0]}")
                    counter[0] += 1
                taken.add(new)
                restricted.append(new)
                walk(body, {**ren, c: new} if new != c else {k: v for k, v in ren.items() if k != c})
            case Nil():
                pass

    walk(s, {})
    rset = frozenset(restricted)
    mask = {c: _MASK for c in rset}

    def order(run: Run) -> tuple:
        masked = pretty_term(rename_futures(run.body, mask))
        return (run.future in rset, masked, str(run.future), pretty_term(run.body))

    runs.sort(key=order)
    position = {run.future: i for i, run in enumerate(runs) if run.future in rset}
    restricted.sort(key=lambda c: (c not in position, position.get(c, 0), c.name))
    return NormalSystem(tuple(restricted), tuple(runs))


# ---------------------------------------------------------------------------
# Redex search


def subterm_at(t: Term, path: tuple[int, ...]) -> Term:
    for i in path:
        t = children(t)[i]
    return t


def replace_at(t: Term, path: tuple[int, ...], new: Term) -> Term:
    if not path:
        return new
    i, rest = path[0], path[1:]
    match t:
        case App(fn, arg):
            return App(replace_at(fn, rest, new), arg) if i == 0 else App(fn, replace_at(arg, rest, new))
        case If(c, a, b):
            return If(replace_at(c, rest, new), a, b)
        case Fst(a):
            return Fst(replace_at(a, rest, new))
        case Snd(a):
            return Snd(replace_at(a, rest, new))
        case Set(target, body):
            return Set(replace_at(target, rest, new), body)
    raise ValueError(f"path {path} is not an evaluation position in {t!r}")


def _value_head(v: Term, wanted: str) -> StuckReason:
    if isinstance(v, Future):
        return StuckReason("WaitingOnFuture", str(v.fid))
    return StuckReason(wanted, pretty_term(v))


def decompose(t: Term, repo: Repo) -> Union[tuple[str, tuple[int, ...]], StuckReason, None]:
    """Find the redex of ``t`` under the evaluation contexts.

    Returns ``(rule, path)`` for the unique redex, a ``StuckReason`` diagnostic
    when no rule applies, or ``None`` when ``t`` is a value.  The contexts
    are ``[-]``, ``E M``, ``(\\x.M) E``, ``if E then M else M'``,
    ``fst E``, ``snd E`` and ``set E M``.
    """
    path: list[int] = []
    while True:
        match t:
            case FnName(f):
                if f in repo:
                    return "ret", tuple(path)
                return StuckReason("UndefinedFunction", f)
            case App(fn, arg):
                if not is_value(fn):
                    path.append(0)
                    t = fn
                elif isinstance(fn, Lam):
                    if is_value(arg):
                        return "beta", tuple(path)
                    path.append(1)
                    t = arg
                else:
                    return _value_head(fn, "NotAFunction")
            case Async():
                return "async", tuple(path)
            case If(cond, _, _):
                if isinstance(cond, BoolTrue):
                    return "cond_t", tuple(path)
                if isinstance(cond, BoolFalse):
                    return "cond_f", tuple(path)
                if is_value(cond):
                    return _value_head(cond, "NotABoolean")
                path.append(0)
                t = cond
            case Fst(arg) | Snd(arg):
                rule = "fst" if isinstance(t, Fst) else "snd"
                if isinstance(arg, Pair):
                    return rule, tuple(path)
                if is_value(arg):
                    return _value_head(arg, "NotAPair")
                path.append(0)
                t = arg
            case Set(target, body):
                # the target name is inert: it names the entry, it is not expanded
                if isinstance(target, FnName):
                    if futures_of(body):
                        return StuckReason("FutureInStoredBody", target.name)
                    return "set", tuple(path)
                if is_value(target):
                    return _value_head(target, "SetTargetNotName")
                path.append(0)
                t = target
            case Take(f):
                if f in repo:
                    return "take", tuple(path)
                return StuckReason("UndefinedFunction", f)
            case _:
                return None


def find_redexes(cfg: Config) -> list[Redex]:
    """All redexes of ``cfg``: internal ones by component, then pushes."""
    ns = normalize(cfg.system)
    out = []
    for i, run in enumerate(ns.components):
        found = decompose(run.body, cfg.repo)
        if isinstance(found, tuple):
            out.append(Redex(found[0], i, found[1], run.future))
    producers = {run.future: run for run in ns.components}
    for c in ns.restricted:
        run = producers.get(c)
        if run is not None and is_value(run.body):
            out.append(Redex("push", None, (), c))
    return out


def stuck_components(cfg: Config) -> list[tuple[FutureId, StuckReason]]:
    """Components with no redex whose body is not a value."""
    ns = normalize(cfg.system)
    out = []
    for run in ns.components:
        found = decompose(run.body, cfg.repo)
        if isinstance(found, StuckReason):
            out.append((run.future, found))
    return out


# ---------------------------------------------------------------------------
# Rewriting


def bind_fn_name(t: Term, f: str) -> Term:
    """Turn references to function ``f`` into the variable ``f``.

    Used for the reductum of ``take``, whose recursive let binds ``f``.
    Inner binders named ``f`` are renamed first so nothing is captured.
    ``set f M`` targets and ``take f`` keep naming the repository entry.
    """
    match t:
        case FnName(name):
            return Var(name) if name == f else t
        case Lam(binder, body):
            if f not in fn_names_of(body):
                return t
            if binder == f:
                avoid = free_vars(body) | fn_names_of(body)
                i = 1
                while f"{f}{i}" in avoid:
                    i += 1
                body = subst_var(body, f, Var(f"{f}{i}"))
                binder = f"{f}{i}"
            return Lam(binder, bind_fn_name(body, f))
        case App(fn, arg):
            return App(bind_fn_name(fn, f), bind_fn_name(arg, f))
        case Async(body):
            return Async(bind_fn_name(body, f))
        case Pair(a, b):
            return Pair(bind_fn_name(a, f), bind_fn_name(b, f))
        case If(c, a, b):
            return If(bind_fn_name(c, f), bind_fn_name(a, f), bind_fn_name(b, f))
        case Fst(a):
            return Fst(bind_fn_name(a, f))
        case Snd(a):
            return Snd(bind_fn_name(a, f))
        case Set(target, body):
            target = target if isinstance(target, FnName) else bind_fn_name(target, f)
            return Set(target, bind_fn_name(body, f))
    return t


def apply_redex(cfg: Config, r: Redex, *, check: bool = True) -> Config:
    """Rewrite ``cfg`` at ``r``; the result is normalized again.

    ``check=False`` skips re-validating ``r`` against ``find_redexes`` for
    callers that just obtained it from there.
    """
    if check and r not in find_redexes(cfg):
        raise StaleRedex(f"{r} does not apply")
    ns = normalize(cfg.system)
    restricted = list(ns.restricted)
    comps = list(ns.components)
    repo = cfg.repo
    counter = cfg.fresh_counter

    if r.rule == "push":
        idx = next(i for i, run in enumerate(comps) if run.future == r.future)
        value = comps.pop(idx).body
        restricted.remove(r.future)
        comps = [Run(run.future, subst_future_term(run.body, r.future, value)) for run in comps]
    else:
        run = comps[r.component]
        hole = subterm_at(run.body, r.path)
        match r.rule, hole:
            case "beta", App(Lam(x, body), arg):
                new = subst_var(body, x, arg)
            case "ret", FnName(f):
                new = repo[f]
            case "async", Async(body):
                c = FutureId(f"c{counter}")
                counter += 1
                new = Future(c)
                restricted.append(c)
                comps.append(Run(c, body))
            case "set", Set(FnName(f), body):
                new = FnName(f)
                repo = repo.define(f, body)
            case "take", Take(f):
                body = bind_fn_name(repo[f], f)
                new = desugar_let_rec(f, body, body)
                repo = repo.undef(f)
            case "cond_t", If(_, then, _):
                new = then
            case "cond_f", If(_, _, else_):
                new = else_
            case "fst", Fst(Pair(left, _)):
                new = left
            case "snd", Snd(Pair(_, right)):
                new = right
            case _:
                raise StaleRedex(f"{r.rule} does not match {pretty_term(hole)}")
        comps[r.component] = Run(run.future, replace_at(run.body, r.path, new))

    system = normalize(NormalSystem(tuple(restricted), tuple(comps)).embed()).embed()
    return Config(system, repo, counter)


def canonical_config(cfg: Config) -> Config:
    """``cfg`` with its system replaced by the embedded prenex form."""
    return Config(normalize(cfg.system).embed(), cfg.repo, cfg.fresh_counter)


# ---------------------------------------------------------------------------
# Congruence


def _match(a: Term, b: Term, fmap: dict, rmap: dict, trail: list,
           env_a: dict, env_b: dict, depth: int, bound_a, bound_b) -> bool:
    """Alpha-equality of terms up to a partial bijection on restricted futures."""
    match a, b:
        case Var(x), Var(y):
            if (x in env_a) != (y in env_b):
                return False
            return env_a[x] == env_b[y] if x in env_a else x == y
        case Lam(x, ba), Lam(y, bb):
            return _match(ba, bb, fmap, rmap, trail, {**env_a, x: depth},
                          {**env_b, y: depth}, depth + 1, bound_a, bound_b)
        case Future(c), Future(d):
            return _match_future(c, d, fmap, rmap, trail, bound_a, bound_b)
    if type(a) is not type(b):
        return False
    ka, kb = children(a), children(b)
    if not ka:
        return a == b
    return all(_match(x, y, fmap, rmap, trail, env_a, env_b, depth, bound_a, bound_b)
               for x, y in zip(ka, kb))


def _match_future(c, d, fmap, rmap, trail, bound_a, bound_b) -> bool:
    if (c in bound_a) != (d in bound_b):
        return False
    if c not in bound_a:
        return c == d
    if c in fmap:
        return fmap[c] == d
    if d in rmap:
        return False
    fmap[c] = d
    rmap[d] = c
    trail.append(c)
    return True


def congruent(s1: System, s2: System) -> bool:
    """Exact structural congruence check by bijection search on restrictions."""
    n1, n2 = normalize(s1), normalize(s2)
    if len(n1.restricted) != len(n2.restricted) or len(n1.components) != len(n2.components):
        return False
    b1, b2 = frozenset(n1.restricted), frozenset(n2.restricted)
    used = [False] * len(n2.components)
    fmap: dict = {}
    rmap: dict = {}

    def undo(trail: list) -> None:
        for c in trail:
            del rmap[fmap.pop(c)]

    def search(i: int) -> bool:
        if i == len(n1.components):
            # restrictions without a producer or occurrence must pair up too
            return len(b1 - fmap.keys()) == len(b2 - rmap.keys())
        run = n1.components[i]
        for j, other in enumerate(n2.components):
            if used[j]:
                continue
            trail: list = []
            if (_match_future(run.future, other.future, fmap, rmap, trail, b1, b2)
                    and _match(run.body, other.body, fmap, rmap, trail, {}, {}, 0, b1, b2)):
                used[j] = True
                if search(i + 1):
                    return True
                used[j] = False
            undo(trail)
        return False

    return search(0)
