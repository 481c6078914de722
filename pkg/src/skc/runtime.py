"""Driving a configuration to completion under a scheduling strategy."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional, Union

from .core import ROOT, Config, FutureId, Repo, Run, Term, is_value
from .parser import Program, pretty_config
from .semantics import (
    Redex, StuckReason, apply_redex, find_redexes, normalize, stuck_components,
)
from .services import BUILTIN_NAMES, program_repo

__all__ = [
    "DEFAULT_MAX_STEPS", "Deterministic", "RandomStrategy", "Strategy",
    "Step", "Value", "Stuck", "StepLimit", "Outcome", "boot", "run",
    "classify_final", "replay",
]

DEFAULT_MAX_STEPS = 100_000


@dataclass(frozen=True)
class Deterministic:
    """Always take the first redex in ``find_redexes`` order."""


@dataclass(frozen=True)
class RandomStrategy:
    seed: int


Strategy = Union[Deterministic, RandomStrategy]


@dataclass(frozen=True)
class Step:
    index: int
    rule: str
    component: str
    path: tuple[int, ...]
    config: Config = field(repr=False)
    redex: Redex = field(repr=False, compare=False)

    @property
    def config_text(self) -> str:
        """The configuration after this step, builtins hidden; printed on demand."""
        return pretty_config(self.config, hide=BUILTIN_NAMES)

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "rule": self.rule,
            "component": self.component,
            "path": list(self.path),
            "config_text": self.config_text,
        }


@dataclass(frozen=True)
class Value:
    """The root reduced to a value.  ``warnings`` lists leftover daemons."""

    term: Optional[Term]
    repo: Repo
    config: Config
    warnings: tuple[tuple[FutureId, StuckReason], ...] = ()


@dataclass(frozen=True)
class Stuck:
    reasons: tuple[tuple[FutureId, StuckReason], ...]
    config: Config


@dataclass(frozen=True)
class StepLimit:
    config: Config


Outcome = Union[Value, Stuck, StepLimit]


def boot(p: Program) -> Config:
    """Initial configuration ``$root <= main`` over builtins plus program defs."""
    return Config(Run(ROOT, p.main), program_repo(p))


def _root(cfg: Config) -> Optional[Run]:
    for run in normalize(cfg.system).components:
        if run.future == ROOT:
            return run
    return None


def classify_final(cfg: Config) -> Union[Value, Stuck]:
    """Outcome of a configuration that has no redex left."""
    stuck = tuple(stuck_components(cfg))
    root = _root(cfg)
    if root is None:
        return Value(None, cfg.repo, cfg, stuck) if not stuck else Stuck(stuck, cfg)
    if is_value(root.body):
        return Value(root.body, cfg.repo, cfg, stuck)
    return Stuck(stuck, cfg)


def _label(cfg: Config, r: Redex) -> str:
    if r.future is not None:
        return str(r.future)
    return str(normalize(cfg.system).components[r.component].future)


def run(cfg: Config, strat: Strategy = Deterministic(),
        max_steps: int = DEFAULT_MAX_STEPS) -> tuple[Outcome, list[Step]]:
    """Reduce until no redex remains or ``max_steps`` steps were taken."""
    rng = random.Random(strat.seed) if isinstance(strat, RandomStrategy) else None
    trace: list[Step] = []
    while True:
        redexes = find_redexes(cfg)
        if not redexes:
            return classify_final(cfg), trace
        if len(trace) >= max_steps:
            return StepLimit(cfg), trace
        r = redexes[0] if rng is None else rng.choice(redexes)
        component = _label(cfg, r)
        cfg = apply_redex(cfg, r, check=False)
        trace.append(Step(len(trace), r.rule, component, r.path, cfg, r))


def replay(cfg: Config, trace: list[Step]) -> Config:
    """Re-apply a trace step by step, checking each redex is available."""
    for step in trace:
        if step.redex not in find_redexes(cfg):
            raise ValueError(f"step {step.index} ({step.rule}) is not enabled")
        cfg = apply_redex(cfg, step.redex)
    return cfg
