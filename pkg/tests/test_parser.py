import random

import pytest

from skc.core import (
    App, Async, FnName, Fst, Future, FutureId, If, Lam, NIL, Pair, Par, Run,
    Set, Snd, Take, UNIT, Var, TRUE, alpha_eq,
)
from skc.parser import (
    DuplicateDefinition, FutureInSource, ParseError, UndefinedHandler,
    UnknownSugar, parse_program, parse_system, parse_term, pretty,
    pretty_program,
)
from skc.services import corpus_names, corpus_text

from generators import surface_program


class TestDesugaring:
    def test_let(self):
        assert parse_term("let x = () in x") == App(Lam("x", Var("x")), UNIT)

    def test_pattern_lambda(self):
        expected = Lam("z", App(App(Lam("x", Lam("y", Var("x"))), Fst(Var("z"))), Snd(Var("z"))))
        assert parse_term(r"\(x,y).x") == expected

    def test_pattern_lambda_avoids_capture(self):
        t = parse_term(r"\z.\(x,y).z")
        assert t.body.binder != "z"
        assert alpha_eq(t, parse_term(r"\z.\w.(\x.\y.z) (fst w) (snd w)"))

    def test_let_rec_is_let_of_fix(self):
        t = parse_term(r"let rec x = \n.x n in x ()")
        assert t == parse_term(r"let x = fix (\x.\n.x n) in x ()")
        assert t == App(Lam("x", App(Var("x"), UNIT)),
                        App(FnName("fix"), Lam("x", Lam("n", App(Var("x"), Var("n"))))))

    def test_pair_of_non_values(self):
        t = parse_term("(f (), True)")
        assert t == App(App(Lam("p", Lam("q", Pair(Var("p"), Var("q")))),
                            App(FnName("f"), UNIT)), TRUE)

    def test_pair_of_values_stays_pair(self):
        assert parse_term(r"(True, \x.x)") == Pair(TRUE, Lam("x", Var("x")))

    def test_call_handler_shorthand(self):
        assert parse_term("callHandler(h)") == parse_term(r"callHandler \_.h")
        assert parse_term("callHandler(h)") == App(FnName("callHandler"), Lam("_", FnName("h")))

    def test_wildcard_not_referenceable(self):
        with pytest.raises(ParseError):
            parse_term(r"\_._")

    @pytest.mark.parametrize("src", [r"\(x).x", r"\(x,y) x", "let rec _ = () in ()"])
    def test_malformed_sugar(self, src):
        with pytest.raises(UnknownSugar):
            parse_term(src)


class TestGrammar:
    def test_application_left_assoc(self):
        assert parse_term("f g h") == App(App(FnName("f"), FnName("g")), FnName("h"))

    def test_lambda_extends_right(self):
        assert parse_term(r"\x.x x") == Lam("x", App(Var("x"), Var("x")))

    def test_prefix_operators_take_one_atom(self):
        assert parse_term("async f x") == App(Async(FnName("f")), FnName("x"))
        assert parse_term("fst p q") == App(Fst(FnName("p")), FnName("q"))
        assert parse_term("set (x ()) v") == Set(App(FnName("x"), UNIT), FnName("v"))
        assert parse_term("take f") == Take("f")

    def test_trailing_lambda_argument(self):
        assert parse_term(r"f \x.x ()") == App(FnName("f"), Lam("x", App(Var("x"), UNIT)))

    def test_if(self):
        assert parse_term("if True then () else f") == If(TRUE, UNIT, FnName("f"))

    def test_scoping_decides_namespace(self):
        t = parse_term(r"\x.x y")
        assert t == Lam("x", App(Var("x"), FnName("y")))

    def test_identifiers_with_hyphen(self):
        assert parse_term("talr-receptionist x") == App(FnName("talr-receptionist"), FnName("x"))

    def test_comments(self):
        assert parse_term("f # trailing\n ()") == App(FnName("f"), UNIT)

    def test_error_position(self):
        with pytest.raises(ParseError) as exc:
            parse_term("f (\n  ) )")
        assert (exc.value.line, exc.value.col) == (2, 5)

    def test_futures_only_when_allowed(self):
        assert parse_term("$c1") == Future(FutureId("c1"))
        with pytest.raises(FutureInSource):
            parse_term("$c1", allow_futures=False)


class TestProgram:
    def test_simple(self):
        p = parse_program("def id = \\x.x\nmain = id ()")
        assert p.defs == [("id", Lam("x", Var("x")))]
        assert p.main == App(FnName("id"), UNIT)

    def test_undefined_handler(self):
        with pytest.raises(UndefinedHandler):
            parse_program("event e = h\nmain = ()")

    def test_handler_defined_later(self):
        p = parse_program("event e = h\ndef h = \\x.x\nmain = e ()")
        assert p.events == [("e", "h")]

    def test_future_in_source(self):
        with pytest.raises(FutureInSource):
            parse_program("def f = $c1\nmain = ()")

    def test_duplicate(self):
        with pytest.raises(DuplicateDefinition):
            parse_program("def f = ()\ndef f = True\nmain = ()")

    def test_multiline_definitions(self):
        p = parse_program("def f = \\x.\n  if x\n  then ()\n  else ()\nmain = f True")
        assert p.defs[0][1] == Lam("x", If(Var("x"), UNIT, UNIT))

    def test_missing_main(self):
        with pytest.raises(ParseError):
            parse_program("def f = ()")


class TestPretty:
    def test_round_trip_simple(self):
        t = parse_term(r"\x.x ()")
        assert alpha_eq(parse_term(pretty(t)), t)

    def test_systems(self):
        assert pretty(Run(FutureId("c1"), UNIT)) == "$c1 <= ()"
        assert pretty(Par(NIL, Run(FutureId("c1"), UNIT))) == "0 | $c1 <= ()"
        s = parse_system(r"nu $c.($r <= $c | $c <= \x.x) | 0")
        assert parse_system(pretty(s)) == s

    def test_binder_shadowing_function_name(self):
        # \f. applied to the function f: the printer must not let the binder capture it
        t = Lam("f", App(Var("f"), FnName("f")))
        assert alpha_eq(parse_term(pretty(t)), t)

    def test_nested_application_parenthesized(self):
        t = App(FnName("f"), App(FnName("g"), UNIT))
        assert pretty(t) == "f (g ())"

    @pytest.mark.parametrize("name", corpus_names())
    def test_corpus_round_trip(self, name):
        p = parse_program(corpus_text(name))
        q = parse_program(pretty_program(p))
        assert [n for n, _ in q.defs] == [n for n, _ in p.defs]
        assert all(alpha_eq(a, b) for (_, a), (_, b) in zip(p.defs, q.defs))
        assert alpha_eq(p.main, q.main)

    @pytest.mark.parametrize("seed", range(50))
    def test_random_round_trip(self, seed):
        p = parse_program(surface_program(random.Random(seed)))
        q = parse_program(pretty_program(p))
        assert all(alpha_eq(a, b) for (_, a), (_, b) in zip(p.defs, q.defs))
        assert alpha_eq(p.main, q.main)
        assert q.events == p.events

    @pytest.mark.parametrize("seed", range(50))
    def test_no_sugar_survives(self, seed):
        # every pair node has value components; callHandler never gets a bare name
        p = parse_program(surface_program(random.Random(seed)))
        from skc.core import is_value
        from oracles import _positions
        for body in [b for _, b in p.defs] + [p.main]:
            for _, node in _positions(body):
                if isinstance(node, Pair):
                    assert is_value(node)
                if isinstance(node, App) and node.fn == FnName("callHandler"):
                    assert not isinstance(node.arg, FnName)
