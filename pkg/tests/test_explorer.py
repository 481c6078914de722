import random

import pytest

from skc.core import Config, FutureId, Repo, TRUE, FALSE, UNIT, Res, rename_futures
from skc.explorer import (
    canonical_key, canonical_system, explore, final_outcomes, summary_json,
)
from skc.parser import parse_program, parse_system
from skc.runtime import boot
from skc.semantics import apply_redex, congruent, find_redexes
from skc.services import corpus_text

from generators import concurrent_program, random_system, scramble, sequential_program
from oracles import group_by_congruence, last_writer_outcomes, naive_reachable


def rename_futures_system(s, ren):
    # s is nu a.nu b.(A | B | C); rename the binders and every occurrence together
    from skc.core import Par, Run
    def go(n):
        if isinstance(n, Res):
            return Res(ren.get(n.future, n.future), go(n.body))
        if isinstance(n, Par):
            return Par(go(n.left), go(n.right))
        return Run(ren.get(n.future, n.future), rename_futures(n.body, ren))
    return go(s)


def key(system: str, **repo) -> str:
    return canonical_key(Config(parse_system(system), Repo(repo)))


def explore_src(src: str, **kw):
    return explore(boot(parse_program(src)), **kw)


class TestCanonicalKey:
    def test_nil(self):
        assert key(r"$c1 <= \x.x | 0") == key(r"$c1 <= \x.x")

    def test_swap_and_commute(self):
        a = key("nu $a.nu $b.($a <= $b | $b <= ())")
        b = key("nu $b.nu $a.($b <= () | $a <= $b)")
        assert a == b

    def test_distinct_bodies(self):
        assert key("$c1 <= ()") != key("$c1 <= True")

    def test_free_futures_not_renamed(self):
        assert key("$c1 <= ()") != key("$c2 <= ()")

    def test_repo_part_of_key(self):
        assert key("$c1 <= ()", f=UNIT) != key("$c1 <= ()", f=TRUE)

    def test_rename_restricted(self):
        s = parse_system("nu $c3.nu $c4.($c3 <= $c4 | $c4 <= $c9 | $c9 <= ())")
        ren = {FutureId("c3"): FutureId("c77"), FutureId("c4"): FutureId("c3")}
        t = parse_system("nu $c77.nu $c3.($c77 <= $c3 | $c3 <= $c9 | $c9 <= ())")
        assert canonical_system(s) == canonical_system(t)
        renamed = Config(rename_futures_system(s, ren))
        assert canonical_key(renamed) == canonical_key(Config(s))

    @pytest.mark.parametrize("seed", range(30))
    def test_invariant_under_scrambling(self, seed):
        rng = random.Random(seed)
        s = random_system(rng, term_depth=3)
        k = canonical_key(Config(s))
        for _ in range(10):
            assert canonical_key(Config(scramble(rng, s))) == k


class TestExplore:
    def test_identity(self):
        g = explore_src(r"main = (\x.x) ()")
        assert (len(g.states), len(g.edges), len(g.value_finals)) == (2, 1, 1)
        assert [rule for _, rule, _ in g.edges] == ["beta"]

    def test_diamond(self):
        g = explore_src(corpus_text("diamond_async.skc"))
        assert len(g.edges) > len(g.states) - 1  # paths merge
        assert len(g.finals) == 1 and final_outcomes(g).deterministic

    def test_race(self):
        g = explore_src(corpus_text("race_set.skc"))
        s = final_outcomes(g)
        assert not s.deterministic
        values = {r["k"] for r in s.final_repos}
        assert values == last_writer_outcomes([TRUE, FALSE])

    def test_take_stuck_on_some_path(self):
        # when the set lands between the two takes both succeed; otherwise one is stuck
        src = ("def f = ()\nmain = let _ = async (take f) in let _ = async (take f) in "
               "let _ = async (set f True) in ()")
        g = explore_src(src)
        s = final_outcomes(g)
        assert s.value_finals == len(g.finals) == 4
        assert 0 < s.finals_with_stuck < len(g.finals)
        assert set(s.stuck_reasons) == {"UndefinedFunction"}

    def test_root_stuck_breaks_determinism(self):
        src = "def f = ()\nmain = let _ = async (take f) in f"
        s = final_outcomes(explore_src(src))
        assert s.stuck_finals == 1 and s.value_finals == 1
        assert s.stuck_reasons["UndefinedFunction"] == 1
        assert not s.deterministic

    def test_take_waits_for_set(self):
        # a take that finds f undefined is not final: it fires once the set lands
        src = "main = let _ = async (set f True) in let _ = async (take f) in ()"
        s = final_outcomes(explore_src(src))
        assert s.deterministic and s.stuck_finals == 0
        assert [set(r) for r in s.final_repos] == [{"callHandler", "fix"}]

    def test_loops_fold(self):
        g = explore_src(r"main = fix (\k.\n.k n) ()")
        assert not g.truncated and not g.finals
        assert any(dst in {s for s, _, _ in g.edges[:i]} for i, (_, _, dst) in enumerate(g.edges))

    def test_truncation(self):
        growing = r"main = fix (\k.\n.k (n, n)) ()"
        g = explore_src(growing, max_states=40)
        assert g.truncated and len(g.states) == 40
        g = explore_src(growing, max_depth=5)
        assert g.truncated and max(g.depth.values()) == 5

    def test_summary_json(self):
        doc = summary_json(explore_src(corpus_text("race_set.skc")), hide={"callHandler", "fix"})
        assert doc["distinct_final_repos"] == 2 and doc["deterministic"] is False
        assert {r["k"] for r in doc["final_repos"]} == {"True", "False"}
        assert not doc["truncated"]

    @pytest.mark.parametrize("seed", range(10))
    def test_sequential_programs_deterministic(self, seed):
        g = explore_src(sequential_program(random.Random(seed)))
        assert len(g.value_finals) == 1 and not g.stuck_finals

    @pytest.mark.parametrize("seed", range(25))
    def test_complete_against_naive_oracle(self, seed):
        cfg = boot(parse_program(concurrent_program(random.Random(seed))))
        classes = group_by_congruence(naive_reachable(cfg))
        g = explore(cfg)
        assert len(classes) == len(g.states)
        for cls in classes:
            assert sum(
                congruent(cls[0].system, st.system) and cls[0].repo.keys() == st.repo.keys()
                for st in g.states.values()) >= 1

    @pytest.mark.parametrize("seed", range(10))
    def test_edges_replayable(self, seed):
        g = explore(boot(parse_program(concurrent_program(random.Random(seed)))))
        for src, rule, dst in g.edges:
            state = g.states[src]
            targets = [apply_redex(state, r) for r in find_redexes(state) if r.rule == rule]
            assert any(congruent(t.system, g.states[dst].system) for t in targets)

    def test_closed_under_redexes(self):
        g = explore_src(corpus_text("race_set.skc"))
        out = {src for src, _, _ in g.edges}
        for sid, state in g.states.items():
            assert (sid in out) == bool(find_redexes(state))
