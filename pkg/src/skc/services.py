"""Builtin definitions, event installation and the shipped program corpus."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

from .core import App, FnName, Lam, Repo, SKCError

__all__ = [
    "BUILTIN_NAMES", "CALL_HANDLER", "FIX", "Y_FIX", "EventBinding",
    "EventCollision", "BuiltinCollision", "builtin_repo", "install_event",
    "event_body", "program_repo", "corpus_names", "corpus_path",
    "corpus_text", "tailor_repo",
]

BUILTIN_NAMES = frozenset({"callHandler", "fix"})


class EventCollision(SKCError):
    pass


class BuiltinCollision(SKCError):
    pass


def _term(text: str):
    from .parser import parse_term
    return parse_term(text, allow_futures=False)


# raising an event spawns the handler and returns () without waiting for it
CALL_HANDLER = _term(r"\h.\x.let _ = async (h () x) in ()")

# Y as usually written; it never yields a value under call-by-value
Y_FIX = _term(r"\f.(\x.f (x x)) (\x.f (x x))")

# eta-expanded so that `fix F` reduces to a value under call-by-value
FIX = _term(r"\f.(\x.f (\v.x x v)) (\x.f (\v.x x v))")


@dataclass(frozen=True)
class EventBinding:
    event: str
    handler: str


def builtin_repo() -> Repo:
    return Repo([("callHandler", CALL_HANDLER), ("fix", FIX)])


def event_body(handler: str):
    """``callHandler \\_.h``; the handler name is wrapped so it is not expanded early."""
    return App(FnName("callHandler"), Lam("_", FnName(handler)))


def install_event(d: Repo, b: EventBinding, *, check_handler: bool = True) -> Repo:
    if b.event in d:
        raise EventCollision(f"{b.event!r} is already defined")
    if check_handler and b.handler not in d:
        from .parser import UndefinedHandler
        raise UndefinedHandler(f"event {b.event!r} uses undefined handler {b.handler!r}")
    return d.define(b.event, event_body(b.handler))


def program_repo(program) -> Repo:
    """Builtins, then the program's definitions, then its events."""
    repo = builtin_repo()
    for name, _ in [*program.defs, *program.events]:
        if name in BUILTIN_NAMES:
            raise BuiltinCollision(f"{name!r} is a builtin and cannot be redefined")
    for name, body in program.defs:
        repo = repo.define(name, body)
    for event, handler in program.events:
        repo = install_event(repo, EventBinding(event, handler), check_handler=False)
    return repo


_CORPUS = resources.files(__package__) / "corpus"


def corpus_names() -> list[str]:
    return sorted(p.name for p in _CORPUS.iterdir() if p.name.endswith(".skc"))


def corpus_path(name: str):
    return _CORPUS / name


def corpus_text(name: str) -> str:
    return (_CORPUS / name).read_text(encoding="utf-8")


def tailor_repo() -> Repo:
    """Repository of the runnable user-registration excerpt."""
    from .parser import parse_program
    return program_repo(parse_program(corpus_text("tailor_excerpt.skc")))
