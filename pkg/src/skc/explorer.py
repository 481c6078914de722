"""Exhaustive exploration of all interleavings of a configuration.

States are deduplicated by a canonical key that is invariant under
structural congruence and renaming of restricted futures; equal keys are
confirmed with an exact ``congruent`` check before two configurations are
merged.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from collections import Counter, deque
from dataclasses import dataclass, field
from math import factorial, prod
from typing import Callable, Optional

from .core import (
    App, Async, BoolFalse, BoolTrue, Config, FnName, Fst, Future,
    FutureId, If, Lam, Pair, Repo, Set, Snd, Take, Term, Unit, Var,
    alpha_eq, children,
)
from .runtime import Stuck, Value, classify_final
from .semantics import apply_redex, congruent, find_redexes, normalize

__all__ = [
    "DEFAULT_MAX_STATES", "DEFAULT_MAX_DEPTH", "canonical_term",
    "canonical_repo", "canonical_system", "canonical_key", "StateGraph",
    "OutcomeSummary", "explore", "final_outcomes", "same_repo", "to_dot",
    "summary_json",
]

DEFAULT_MAX_STATES = 50_000
DEFAULT_MAX_DEPTH = 500

# beyond this many tie-breaking orders the first one is used and exact
# congruence checking keeps deduplication sound
_MAX_ORDERINGS = 5040


def canonical_term(t: Term, future: Callable[[FutureId], str] = str) -> str:
    """Prefix rendering with binders replaced by their binding depth."""
    out: list[str] = []

    def go(t: Term, env: dict[str, int], depth: int) -> None:
        match t:
            case Var(name):
                out.append(f"#{env[name]}" if name in env else f"%{name}")
            case Lam(binder, body):
                out.append("(\\ ")
                go(body, {**env, binder: depth}, depth + 1)
                out.append(")")
            case FnName(name):
                out.append(name)
            case Future(fid):
                out.append(future(fid))
            case Unit():
                out.append("()")
            case BoolTrue():
                out.append("T")
            case BoolFalse():
                out.append("F")
            case Take(name):
                out.append(f"(take {name})")
            case _:
                tag = {App: "@", Async: "async", Pair: ",", If: "if",
                       Fst: "fst", Snd: "snd", Set: "set"}[type(t)]
                out.append(f"({tag}")
                for k in children(t):
                    out.append(" ")
                    go(k, env, depth)
                out.append(")")

    go(t, {}, 0)
    return "".join(out)


def canonical_repo(repo: Repo) -> str:
    return ";".join(f"{name}={canonical_term(repo[name])}" for name in sorted(repo))


def same_repo(a: Repo, b: Repo) -> bool:
    """Same domain and alpha-equal bodies name by name."""
    return a.keys() == b.keys() and all(alpha_eq(a[k], b[k]) for k in a)


def canonical_system(cfg_or_system) -> str:
    """Congruence-invariant text of a system (or of a configuration's system)."""
    system = cfg_or_system.system if isinstance(cfg_or_system, Config) else cfg_or_system
    ns = normalize(system)
    bound = frozenset(ns.restricted)

    def masked(fid: FutureId) -> str:
        return "?" if fid in bound else str(fid)

    def sort_key(run) -> tuple[bool, str, str]:
        return (run.future in bound, masked(run.future), canonical_term(run.body, masked))

    runs = sorted(ns.components, key=sort_key)
    groups = [list(g) for _, g in itertools.groupby(runs, key=sort_key)]
    if prod(factorial(len(g)) for g in groups) > _MAX_ORDERINGS:
        orderings = [runs]
    else:
        orderings = (
            [r for g in choice for r in g]
            for choice in itertools.product(*(itertools.permutations(g) for g in groups))
        )

    best: Optional[str] = None
    for order in orderings:
        index: dict[FutureId, int] = {}

        def name(fid: FutureId) -> str:
            if fid not in bound:
                return str(fid)
            if fid not in index:
                index[fid] = len(index)
            return f"@{index[fid]}"

        text = " | ".join(f"{name(r.future)}<={canonical_term(r.body, name)}" for r in order)
        text += f" ~{len(bound) - len(index)}"
        if best is None or text < best:
            best = text
    return best


def canonical_key(cfg: Config) -> str:
    text = canonical_system(cfg) + " || " + canonical_repo(cfg.repo)
    return hashlib.sha256(text.encode()).hexdigest()


@dataclass
class StateGraph:
    states: dict[str, Config] = field(default_factory=dict)
    edges: list[tuple[str, str, str]] = field(default_factory=list)
    initial: str = ""
    value_finals: list[str] = field(default_factory=list)
    stuck_finals: list[str] = field(default_factory=list)
    depth: dict[str, int] = field(default_factory=dict)
    truncated: bool = False

    @property
    def finals(self) -> list[str]:
        return self.value_finals + self.stuck_finals


def explore(cfg: Config, max_states: int = DEFAULT_MAX_STATES,
            max_depth: int = DEFAULT_MAX_DEPTH) -> StateGraph:
    """Breadth-first closure of ``cfg`` under every redex."""
    g = StateGraph()
    buckets: dict[str, list[str]] = {}

    def intern(c: Config) -> tuple[Optional[str], bool]:
        key = canonical_key(c)
        ids = buckets.setdefault(key, [])
        for sid in ids:
            other = g.states[sid]
            if same_repo(other.repo, c.repo) and congruent(other.system, c.system):
                return sid, False
        if len(g.states) >= max_states:
            return None, False
        sid = key[:16] if not ids else f"{key[:16]}-{len(ids)}"
        ids.append(sid)
        g.states[sid] = c
        return sid, True

    g.initial, _ = intern(cfg)
    g.depth[g.initial] = 0
    queue = deque([g.initial])
    while queue:
        sid = queue.popleft()
        state = g.states[sid]
        redexes = find_redexes(state)
        if not redexes:
            if isinstance(classify_final(state), Value):
                g.value_finals.append(sid)
            else:
                g.stuck_finals.append(sid)
            continue
        if g.depth[sid] >= max_depth:
            g.truncated = True
            continue
        for r in redexes:
            target, new = intern(apply_redex(state, r, check=False))
            if target is None:
                g.truncated = True
                continue
            g.edges.append((sid, r.rule, target))
            if new:
                g.depth[target] = g.depth[sid] + 1
                queue.append(target)
    return g


@dataclass
class OutcomeSummary:
    value_finals: int
    stuck_finals: int
    stuck_reasons: Counter
    finals_with_stuck: int
    final_repos: list[Repo]
    root_values: list[Optional[Term]]
    value_classes: int
    deterministic: bool
    truncated: bool

    @property
    def finals(self) -> int:
        return self.value_finals + self.stuck_finals


def final_outcomes(g: StateGraph) -> OutcomeSummary:
    """Distinct final repositories and root values, stuck counts and verdict.

    A program is outcome-deterministic when every final state falls in one
    value class (root value and repository) and no final state is stuck.
    ``stuck_reasons`` also counts spawned components left stuck behind a
    finished root, which do not affect the verdict.
    """
    repos: list[Repo] = []
    roots: list[Optional[Term]] = []
    classes: set[tuple[str, str]] = set()
    reasons: Counter = Counter()
    with_stuck = 0
    for sid in g.finals:
        cfg = g.states[sid]
        if not any(same_repo(cfg.repo, r) for r in repos):
            repos.append(cfg.repo)
        outcome = classify_final(cfg)
        pairs = outcome.reasons if isinstance(outcome, Stuck) else outcome.warnings
        with_stuck += bool(pairs)
        for _, why in pairs:
            reasons[why.reason] += 1
        if isinstance(outcome, Stuck):
            continue
        term = outcome.term
        if not any((term is None and r is None) or (term is not None and r is not None and alpha_eq(term, r))
                   for r in roots):
            roots.append(term)
        root_text = canonical_term(term) if term is not None else ""
        classes.add((root_text, canonical_repo(cfg.repo)))
    return OutcomeSummary(
        value_finals=len(g.value_finals),
        stuck_finals=len(g.stuck_finals),
        stuck_reasons=reasons,
        finals_with_stuck=with_stuck,
        final_repos=repos,
        root_values=roots,
        value_classes=len(classes),
        deterministic=len(classes) == 1 and not g.stuck_finals,
        truncated=g.truncated,
    )


def summary_json(g: StateGraph, hide=()) -> dict:
    from .parser import pretty_term
    s = final_outcomes(g)
    hidden = set(hide)
    return {
        "states": len(g.states),
        "edges": len(g.edges),
        "finals": s.finals,
        "value_finals": s.value_finals,
        "stuck_finals": s.stuck_finals,
        "stuck_reasons": dict(s.stuck_reasons),
        "finals_with_stuck_components": s.finals_with_stuck,
        "distinct_final_repos": len(s.final_repos),
        "final_repos": [
            {k: pretty_term(r[k]) for k in r if k not in hidden} for r in s.final_repos
        ],
        "root_values": [pretty_term(v) if v is not None else None for v in s.root_values],
        "deterministic": s.deterministic,
        "truncated": s.truncated,
    }


def to_dot(g: StateGraph) -> str:
    value, stuck = set(g.value_finals), set(g.stuck_finals)
    lines = ["digraph skc {", "  rankdir=LR;", '  node [shape=box, fontname="monospace"];']
    for sid in g.states:
        label = sid[:8]
        attrs = []
        if sid == g.initial:
            label += "\\ninitial"
            attrs.append("penwidth=2")
        if sid in value:
            label += "\\nvalue"
            attrs.append("shape=doublecircle")
        elif sid in stuck:
            label += "\\nstuck"
            attrs.append("color=red")
        attrs.insert(0, f'label="{label}"')
        lines.append(f'  "{sid}" [{", ".join(attrs)}];')
    for src, rule, dst in g.edges:
        lines.append(f'  "{src}" -> "{dst}" [label="{rule}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def dumps_summary(g: StateGraph, hide=()) -> str:
    return json.dumps(summary_json(g, hide), indent=2, sort_keys=True)
