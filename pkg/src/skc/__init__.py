"""Executable serverless kernel calculus: parse, reduce and explore programs
of a lambda calculus with futures, asynchronous spawning and a mutable
definition repository."""

from .core import (
    ROOT, App, Async, BoolFalse, BoolTrue, Config, FnName, Fst, Future,
    FutureId, If, Lam, Nil, Par, Pair, Repo, Res, Run, Set, Snd, System, Take,
    Term, Unit, Var, alpha_eq, free_futures, futures_of, is_value, subst_future,
    subst_var,
)
from .explorer import canonical_key, explore, final_outcomes
from .parser import parse_program, parse_system, parse_term, pretty
from .runtime import Deterministic, RandomStrategy, boot, run
from .semantics import apply_redex, congruent, find_redexes, normalize
from .services import builtin_repo, install_event, tailor_repo

__version__ = "0.1.0"
