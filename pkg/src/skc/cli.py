"""``skc`` command line: parse, run and explore ``.skc`` programs.

Exit codes: 0 value, 1 parse error, 2 I/O error, 3 step limit, 4 stuck,
5 truncated exploration under ``--strict``.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from dataclasses import dataclass
from typing import Optional, Sequence

from .core import FutureId, SKCError, Term
from .explorer import (
    DEFAULT_MAX_DEPTH, DEFAULT_MAX_STATES, explore, final_outcomes,
    summary_json, to_dot,
)
from .parser import ParseError, Program, parse_program, pretty_term
from .runtime import (
    DEFAULT_MAX_STEPS, Deterministic, RandomStrategy, StepLimit, Stuck, Value,
    boot, run,
)
from .services import BUILTIN_NAMES

EXIT_OK, EXIT_PARSE, EXIT_IO, EXIT_LIMIT, EXIT_STUCK, EXIT_TRUNCATED = range(6)


@dataclass
class CliConfig:
    command: str
    path: str
    strategy: str = "det"
    seed: Optional[int] = None
    max_steps: int = DEFAULT_MAX_STEPS
    max_states: int = DEFAULT_MAX_STATES
    max_depth: int = DEFAULT_MAX_DEPTH
    format: str = "text"
    trace: bool = False
    dot: Optional[str] = None
    strict: bool = False


def _color(code: str, text: str) -> str:
    if os.environ.get("SKC_COLOR", "auto") == "never" or not sys.stdout.isatty():
        return text
    return f"\033[{code}m{text}\033[0m"


def term_json(t: Term) -> dict:
    """Tagged-dictionary form of a term for ``--format json``."""
    out: dict = {"kind": type(t).__name__}
    for f in dataclasses.fields(t):
        value = getattr(t, f.name)
        if isinstance(value, Term):
            value = term_json(value)
        elif isinstance(value, FutureId):
            value = str(value)
        out[f.name.rstrip("_")] = value
    return out


def _load(path: str) -> Program:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_program(text)


def _visible_repo(repo) -> dict[str, str]:
    return {k: pretty_term(v) for k, v in repo.items() if k not in BUILTIN_NAMES}


def cmd_parse(cfg: CliConfig, program: Program) -> int:
    if cfg.format == "json":
        doc = {
            "defs": [{"name": n, "body": term_json(b)} for n, b in program.defs],
            "events": [{"event": e, "handler": h} for e, h in program.events],
            "main": term_json(program.main),
        }
        print(json.dumps(doc, indent=2))
        return EXIT_OK
    for name, body in program.defs:
        print(f"def {name} = {pretty_term(body)}")
    for event, handler in program.events:
        print(f"event {event} = {handler}")
    print(f"main = {pretty_term(program.main)}")
    return EXIT_OK


def _reasons(pairs) -> list[dict]:
    return [{"component": str(c), "reason": r.reason, "detail": r.detail} for c, r in pairs]


def cmd_run(cfg: CliConfig, program: Program) -> int:
    if cfg.strategy == "random":
        strategy = RandomStrategy(cfg.seed)
    else:
        strategy = Deterministic()
    outcome, trace = run(boot(program), strategy, cfg.max_steps)
    match outcome:
        case Value():
            status, code = "value", EXIT_OK
        case StepLimit():
            status, code = "step-limit", EXIT_LIMIT
        case Stuck():
            status, code = "stuck", EXIT_STUCK

    if cfg.format == "json":
        doc = {"outcome": status, "steps": len(trace),
               "repo": _visible_repo(outcome.config.repo)}
        if isinstance(outcome, Value):
            doc["value"] = pretty_term(outcome.term) if outcome.term is not None else None
            doc["warnings"] = _reasons(outcome.warnings)
        elif isinstance(outcome, Stuck):
            doc["reasons"] = _reasons(outcome.reasons)
        if cfg.trace:
            doc["trace"] = [s.to_dict() for s in trace]
        print(json.dumps(doc, indent=2))
        return code

    if cfg.trace:
        for s in trace:
            path = ".".join(map(str, s.path)) or "-"
            print(f"{s.index:5d}  {_color('36', f'{s.rule:7s}')}  {s.component:8s} {path:10s} {s.config_text}")
    print(f"outcome: {status} after {len(trace)} steps")
    if isinstance(outcome, Value):
        if outcome.term is not None:
            print(f"value: {pretty_term(outcome.term)}")
        for c, why in outcome.warnings:
            print(f"warning: {c} left unfinished: {why}")
    elif isinstance(outcome, Stuck):
        for c, why in outcome.reasons:
            print(_color("31", f"stuck: {c}: {why}"), file=sys.stderr)
    print("repository:")
    for name, body in _visible_repo(outcome.config.repo).items():
        print(f"  {name} = {body}")
    return code


def cmd_explore(cfg: CliConfig, program: Program) -> int:
    g = explore(boot(program), cfg.max_states, cfg.max_depth)
    if cfg.dot:
        with open(cfg.dot, "w", encoding="utf-8") as fh:
            fh.write(to_dot(g))
    doc = summary_json(g, hide=BUILTIN_NAMES)
    if cfg.format == "json":
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        s = final_outcomes(g)
        verdict = "deterministic" if s.deterministic else "nondeterministic"
        n, k = s.finals, len(s.final_repos)
        print(f"{doc['states']} states, {doc['edges']} edges")
        print(f"{n} final state{'' if n == 1 else 's'}; {verdict}")
        print(f"{k} distinct final repositor{'y' if k == 1 else 'ies'}; {verdict}")
        for i, repo in enumerate(doc["final_repos"]):
            body = ", ".join(f"{name} = {t}" for name, t in repo.items())
            print(f"  repo {i}: {{{body}}}")
        if s.finals_with_stuck:
            reasons = ", ".join(f"{r} x{c}" for r, c in sorted(s.stuck_reasons.items()))
            print(f"{s.stuck_finals} stuck final state(s), "
                  f"{s.finals_with_stuck} with stuck components: {reasons}")
        if g.truncated:
            print(_color("33", "TRUNCATED: exploration bounds reached"))
    if g.truncated and cfg.strict:
        return EXIT_TRUNCATED
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="skc", description="Serverless kernel calculus engine")
    sub = ap.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("path")
    common.add_argument("--format", choices=("text", "json"), default="text")

    sub.add_parser("parse", parents=[common], help="print the desugared program")

    p_run = sub.add_parser("run", parents=[common], help="reduce a program")
    p_run.add_argument("--strategy", choices=("det", "random"), default="det")
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--max-steps", type=int, default=DEFAULT_MAX_STEPS)
    p_run.add_argument("--trace", action="store_true")

    p_exp = sub.add_parser("explore", parents=[common], help="enumerate all interleavings")
    p_exp.add_argument("--max-states", type=int, default=DEFAULT_MAX_STATES)
    p_exp.add_argument("--max-depth", type=int, default=DEFAULT_MAX_DEPTH)
    p_exp.add_argument("--dot", metavar="PATH")
    p_exp.add_argument("--strict", action="store_true")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    cfg = CliConfig(**{k: v for k, v in vars(args).items() if v is not None or k == "seed"})
    if cfg.command == "run" and cfg.strategy == "random" and cfg.seed is None:
        ap.error("--strategy random requires --seed")
    try:
        program = _load(cfg.path)
    except OSError as exc:
        print(f"skc: {exc.filename or cfg.path}: {exc.strerror}", file=sys.stderr)
        return EXIT_IO
    except ParseError as exc:
        print(f"skc: {cfg.path}:{exc} [{type(exc).__name__}]", file=sys.stderr)
        return EXIT_PARSE
    except SKCError as exc:
        print(f"skc: {cfg.path}: {exc} [{type(exc).__name__}]", file=sys.stderr)
        return EXIT_PARSE
    handler = {"parse": cmd_parse, "run": cmd_run, "explore": cmd_explore}[cfg.command]
    try:
        return handler(cfg, program)
    except SKCError as exc:
        print(f"skc: {exc} [{type(exc).__name__}]", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"skc: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
