from itertools import product

import pytest
from hypothesis import given, settings, strategies as st

from lazy_pta.dataflow import (Domain, SolverConfig, SolverLimitError, boundary_points_to,
                               extractors, intraproc_solve, meet_liveness, meet_points_to, must,
                               must_pointees, rel_apply, rel_restrict, rel_self_compose,
                               transfer_liveness, transfer_points_to)
from lazy_pta.lang import (ADDR, COPY, LOAD, NOP, NULL, STORE, UNDEF, USE, Statement,
                           build_cfg, parse_program)

# relation from the worked example on relation operations
R = frozenset({("a", "b"), ("a", "c"), ("b", "d"), ("c", "e"), ("c", "g"), ("d", "a"),
               ("d", "g"), ("e", UNDEF)})
RP = {"a", "b", "c", "d", "e"}


def test_worked_apply():
    assert rel_apply(R, {"a", "c"}) == {"b", "c", "e", "g"}
    assert rel_apply(R, set()) == set()
    assert rel_apply(set(), {"a"}) == set()


def test_worked_restrict():
    assert rel_restrict(R, {"a", "c"}) == {("a", "b"), ("a", "c"), ("c", "e"), ("c", "g")}
    assert rel_restrict(R, RP) == R
    assert rel_restrict(R, set()) == set()


def test_worked_compose():
    want = {("a", "d"), ("a", "e"), ("a", "g"), ("b", "a"), ("b", "g"), ("c", UNDEF),
            ("d", "b"), ("d", "c")}
    assert rel_self_compose(R) == want
    assert rel_self_compose(R, RP) == want
    assert rel_self_compose(set()) == set()
    assert rel_self_compose({("x", "y")}, {"x"}) == set()


def test_must_cases():
    dom = Domain(frozenset({"x", "w"}), frozenset({"x", "w", "y", UNDEF}))
    V = dom.locations
    assert must({("x", "y")}, dom) == {("x", "y")} | {("w", v) for v in V}
    assert must_pointees({("x", "y"), ("x", "w")}, "x", dom) == set()
    assert must_pointees({("x", UNDEF)}, "x", dom) == V
    assert must_pointees(set(), "x", dom) == V


DOM = Domain.of({"x", "y", "a", "b"}, {"c"})


def test_store_weak_update():
    e = extractors(Statement(STORE, "x", "y"), frozenset({("x", "a"), ("x", "b")}),
                   frozenset({"a"}), DOM)
    assert e.defs == {"a", "b"}
    assert e.kill == set()
    assert e.ref == {"x", "y"}


def test_store_strong_update():
    e = extractors(Statement(STORE, "x", "y"), frozenset({("x", "a"), ("y", "c")}),
                   frozenset({"a"}), DOM)
    assert (e.defs, e.kill, e.ref, e.pointee) == ({"a"}, {"a"}, {"x", "y"}, {"c"})


def test_store_dead_target():
    e = extractors(Statement(STORE, "x", "y"), frozenset({("x", "a")}), frozenset({"b"}), DOM)
    assert e.ref == {"x"}


def test_store_through_undefined_kills_everything():
    e = extractors(Statement(STORE, "x", "y"), frozenset({("x", UNDEF)}), frozenset(), DOM)
    assert e.defs == set()
    assert e.kill == DOM.pointers


def test_load_row():
    e = extractors(Statement(LOAD, "x", "y"), frozenset({("y", "a"), ("a", "b")}),
                   frozenset({"x"}), DOM)
    assert (e.defs, e.kill, e.ref, e.pointee) == ({"x"}, {"x"}, {"y", "a"}, {"b"})


def test_load_dead():
    e = extractors(Statement(LOAD, "x", "y"), frozenset({("y", "a")}), frozenset(), DOM)
    assert e.ref == set()


def test_addr_row():
    e = extractors(Statement(ADDR, "x", "a"), frozenset(), frozenset(), DOM)
    assert (e.defs, e.kill, e.ref, e.pointee) == ({"x"}, {"x"}, set(), {"a"})


def test_copy_row():
    e = extractors(Statement(COPY, "x", "y"), frozenset({("y", "a")}), frozenset({"x"}), DOM)
    assert (e.defs, e.kill, e.ref, e.pointee) == ({"x"}, {"x"}, {"y"}, {"a"})
    assert extractors(Statement(COPY, "x", "y"), frozenset(), frozenset(), DOM).ref == set()


def test_use_and_nop():
    assert extractors(Statement(USE, "x"), frozenset(), frozenset(), DOM).ref == {"x"}
    assert extractors(Statement(NOP), frozenset(), frozenset(), DOM) == (set(),) * 4


FIG2 = Domain.of({"p", "q", "r", "s"})


def test_transfer_examples():
    assert transfer_liveness(Statement(COPY, "p", "q"), frozenset({"p", "q", "r"}),
                             frozenset({("q", "r"), ("r", "s")}), FIG2) == {"q", "r"}
    assert transfer_liveness(Statement(NOP), frozenset({"q"}), frozenset(), FIG2) == {"q"}
    assert transfer_liveness(Statement(USE, "z"), frozenset(), frozenset(),
                             Domain.of({"z"})) == {"z"}
    assert transfer_points_to(Statement(LOAD, "p", "p"),
                              frozenset({("p", "r"), ("q", "r"), ("r", "s")}),
                              frozenset({"p", "q"}), FIG2) == {("p", "s"), ("q", "r")}
    assert transfer_points_to(Statement(ADDR, "r", "s"), frozenset({("q", "r")}),
                              frozenset({"q", "r"}), FIG2) == {("q", "r"), ("r", "s")}
    assert transfer_points_to(Statement(ADDR, "r", "s"), frozenset({("q", "r")}),
                              frozenset(), FIG2) == set()


def test_meets():
    a4 = frozenset({("q", "r")})
    a5 = frozenset({("p", "r"), ("q", "r")})
    assert meet_points_to([a4, a5], frozenset({"q"})) == {("q", "r")}
    assert meet_points_to([a5], frozenset({"p"})) == {("p", "r")}
    assert meet_liveness([frozenset({"a"}), frozenset({"b"})]) == {"a", "b"}
    assert boundary_points_to(frozenset({"z"})) == {("z", UNDEF)}
    assert boundary_points_to(frozenset({"z"}), undef_seed=False) == set()


def solve(src: str, **kw):
    prog = parse_program(src)
    cfg = build_cfg(prog.procedures["main"], start_nop=False)
    return cfg, intraproc_solve(cfg, Domain.of(prog.P, prog.nonpointers), SolverConfig(**kw))


def test_two_statement_chain():
    _, sol = solve("ptr x; var y; proc main() { x = &y; use x; }")
    assert sol.facts[1].lin == set()
    assert sol.facts[1].aout == {("x", "y")} == sol.facts[2].ain


def test_dead_first_write_never_materialises():
    _, sol = solve("ptr x; var y, z; proc main() { x = &y; x = &z; use x; }")
    assert sol.facts[3].ain == {("x", "z")}
    for f in sol.facts.values():
        assert ("x", "y") not in f.ain | f.aout


FIG2_SRC = ("ptr p, q, r, s; proc main() { q = &r; do { p = q; "
            "if (*) { p = *p; print p; } else { s = q; } r = &s; } while (*); }")


def test_fig2_rounds():
    _, sol = solve(FIG2_SRC, undef_seed=False, record_rounds=True)
    assert sol.stats.rounds >= 2
    first = sol.history[0]
    # after the first round r is not yet live, so (r,s) is not at node 2
    assert first[2].ain == {("q", "r")}
    assert first[3].ain == {("p", "r"), ("q", "r")}
    assert first[6].ain == {("q", "r")}
    assert sol.facts[2].ain == {("q", "r"), ("r", "s")}


def test_eager_mode_same_fixpoint():
    _, lazy = solve(FIG2_SRC)
    _, eager = solve(FIG2_SRC, eager=True)
    assert {n: (f.lin, f.lout, f.ain, f.aout) for n, f in lazy.facts.items()} == \
           {n: (f.lin, f.lout, f.ain, f.aout) for n, f in eager.facts.items()}


def test_round_limit():
    with pytest.raises(SolverLimitError):
        solve(FIG2_SRC, max_rounds=1)


# --------------------------------------------------------------- properties

NAMES = ["a", "b", "c", "d", "e"]


@st.composite
def domains(draw):
    k = draw(st.integers(1, 5))
    P = NAMES[:k]
    extra = draw(st.integers(0, 6 - k)) if k < 6 else 0
    others = ["v%d" % i for i in range(min(extra, 8 - k - 2))]
    return Domain.of(P, others)


def rels(dom):
    pairs = sorted(dom.full())
    return st.frozensets(st.sampled_from(pairs), max_size=len(pairs))


def subsets(items):
    items = sorted(items)
    return st.frozensets(st.sampled_from(items), max_size=len(items))


@st.composite
def stmts(draw, dom):
    P = sorted(dom.pointers)
    kind = draw(st.sampled_from([ADDR, COPY, LOAD, STORE, USE, NOP]))
    x = draw(st.sampled_from(P))
    y = draw(st.sampled_from(P))
    if kind == ADDR:
        return Statement(ADDR, x, draw(st.sampled_from(sorted(dom.locations - {UNDEF}))))
    if kind == USE:
        return Statement(USE, x)
    if kind == NOP:
        return Statement(NOP)
    return Statement(kind, x, y)


@st.composite
def ordered_points(draw):
    dom = draw(domains())
    stmt = draw(stmts(dom))
    a2 = draw(rels(dom))
    a1 = a2 | draw(rels(dom))
    l2 = draw(subsets(dom.pointers))
    l1 = l2 | draw(subsets(dom.pointers))
    return dom, stmt, l1, a1, l2, a2


@settings(max_examples=1200, deadline=None)
@given(ordered_points())
def test_transfers_monotone(case):
    dom, stmt, l1, a1, l2, a2 = case
    assert transfer_liveness(stmt, l1, a1, dom) >= transfer_liveness(stmt, l2, a2, dom)
    assert transfer_points_to(stmt, a1, l1, dom) >= transfer_points_to(stmt, a2, l2, dom)


@settings(max_examples=1200, deadline=None)
@given(ordered_points())
def test_must_antimonotone_and_cardinality(case):
    dom, _, _, a1, _, a2 = case
    m1, m2 = must(a1, dom), must(a2, dom)
    for x in dom.pointers:
        s1 = rel_apply(m1, {x})
        assert s1 <= rel_apply(m2, {x})
        assert len(s1) in (0, 1, len(dom.locations))


@st.composite
def rel_cases(draw):
    dom = draw(domains())
    return dom, draw(rels(dom)), draw(subsets(dom.locations))


@settings(max_examples=1200, deadline=None)
@given(rel_cases())
def test_relation_ops_brute_force(case):
    dom, R, X = case
    assert rel_apply(R, X) == {v for (u, v) in R for x in X if u == x}
    XP = X & dom.pointers
    assert rel_restrict(R, XP) == {(u, v) for (u, v) in R if u in XP}
    brute = {(u, w) for (u, v), (v2, w) in product(R, R) if v == v2 and v in dom.pointers}
    assert rel_self_compose(R, dom.pointers) == brute
    assert rel_self_compose(R) == brute
