import pytest

from lazy_pta.analyses import Options, run_lpta
from lazy_pta.callstrings import (BACKWARD, BLOCKED, LAMBDA, ContextDiagnostics, EngineConfig,
                                  extend_on_call, format_callstring, interproc_solve,
                                  liveness_for_context, match_on_return, parse_callstring,
                                  regenerate, represent)
from lazy_pta.corpus import generate_corpus
from lazy_pta.dataflow import Domain, SolverLimitError
from lazy_pta.lang import UNDEF, build_supergraph

Q = UNDEF


def test_format_and_parse():
    assert format_callstring(LAMBDA) == "λ"
    assert format_callstring((1, 2, 2)) == "c1c2c2"
    assert parse_callstring("c1c2") == (1, 2)
    assert parse_callstring("λ") == LAMBDA


def test_extend_and_match():
    assert extend_on_call(LAMBDA, 1) == (1,)
    assert extend_on_call((1,), 2) == (1, 2)
    assert extend_on_call(LAMBDA, 1, BACKWARD) == (1,)
    assert match_on_return((1, 2), 2) == (1,)
    assert match_on_return((1,), 2) is BLOCKED
    assert match_on_return((1,), 1) == LAMBDA
    assert match_on_return(LAMBDA, 1) is BLOCKED


def test_represent():
    v = frozenset({"w", "z"})
    kept, log = represent({(1, 2): v, (1, 2, 2): v})
    assert kept == {(1, 2): v}
    assert log == {(1, 2, 2): (1, 2)}
    kept, log = represent({(1,): frozenset({"a"}), (2,): frozenset({"b"})})
    assert len(kept) == 2 and log == {}
    kept, log = represent({(3,): v, (1, 2): v, (1, 1, 1): v})
    assert list(kept) == [(3,)]
    # ties on length go to the smaller site sequence
    kept, _ = represent({(2,): v, (1,): v})
    assert list(kept) == [(1,)]


def test_regenerate():
    zx = frozenset({("z", "x")})
    assert regenerate({(1, 2): zx}, {(1, 2, 2): (1, 2)}) == {(1, 2): zx, (1, 2, 2): zx}
    assert regenerate({(1,): zx}, {}) == {(1,): zx}


def test_liveness_for_context():
    table = {8: {(1,): frozenset({"w", "z"}), (1, 2): frozenset({"w", "x", "z"})}}
    assert liveness_for_context((1, 2, 2), 8, table) == {"w", "x", "z"}
    assert liveness_for_context((1,), 8, table) == {"w", "z"}
    diag = ContextDiagnostics()
    assert liveness_for_context(LAMBDA, 3, table, diag) == set()
    assert diag.missing_liveness == 1
    assert liveness_for_context((1, 2, 2), 8, {8: {}}, None, {(1, 2, 2): (1,)}) == set()


def solve_fig1(fig1, **kw):
    sg = build_supergraph(fig1)
    dom = Domain.of(fig1.P, fig1.nonpointers)
    return sg, interproc_solve(sg, dom, EngineConfig(**kw))


def test_fig1_round_one(fig1):
    sg, res = solve_fig1(fig1, record_rounds=True)
    first = res.history[0]
    start_p = sg.start("p")
    assert first.contexts[start_p][(1,)].ain == {("w", "x"), ("z", Q)}
    assert first.merged[12].aout == set()
    assert first.contexts[3][LAMBDA].lout == {"w", "z"}
    assert first.contexts[9][(1,)].lin == {"w"}
    assert first.contexts[9][(1,)].lout == {"w", "z"}


def test_fig1_final(fig1):
    sg, res = solve_fig1(fig1)
    assert res.max_call_strings == 3
    assert res.derivable["p"] == [(1,), (1, 2), (1, 2, 2)]
    assert res.reps["p"][(1, 2, 2)] == (1, 2)
    assert res.contexts[13][(1, 2)].aout == res.contexts[13][(1, 2, 2)].aout
    assert ("z", "x") in res.merged[12].ain
    assert res.stats.rounds == 3
    assert res.diagnostics.missing_liveness == 0


def test_trace_returns_match(fig1):
    _, res = solve_fig1(fig1, trace=True)
    sg = build_supergraph(fig1)
    returns = [t for t in res.trace if t.edge == "return"]
    assert returns
    for t in returns:
        site = sg.nodes[t.dst].site if t.analysis == "points-to" else sg.nodes[t.src].site
        assert t.callee_string[-1] == site
        assert t.caller_string == t.callee_string[:-1]
    for t in res.trace:
        if t.edge == "call":
            assert t.callee_string[:-1] == t.caller_string


def test_representation_off_non_recursive():
    for _, prog in generate_corpus(60, seed=11):
        if prog.is_recursive():
            continue
        a = run_lpta(prog, Options(interprocedural=True))
        b = run_lpta(prog, Options(interprocedural=True, representation=False))
        assert {n: (f.lin, f.ain, f.aout) for n, f in a.facts.items()} == \
               {n: (f.lin, f.ain, f.aout) for n, f in b.facts.items()}


def _sets(res):
    return {n: (f.lin, f.lout, f.ain, f.aout) for n, f in res.facts.items()}


def _leq(small, big):
    return all(all(x <= y for x, y in zip(small[n], big[n])) for n in big)


def test_representation_matches_deep_unrolling(fig1):
    # truncated call strings under-approximate; by depth 8 they catch up
    programs = [fig1] + [p for _, p in generate_corpus(400, seed=3) if p.is_recursive()]
    assert len(programs) > 30
    for prog in programs:
        full = _sets(run_lpta(prog, Options(interprocedural=True)))
        prev = None
        for k in range(1, 9):
            got = _sets(run_lpta(prog, Options(interprocedural=True, representation=False,
                                                max_length=k)))
            assert _leq(got, full)
            if prev is not None:
                assert _leq(prev, got)
            prev = got
            if got == full:
                # deeper runs are squeezed between this one and the full result
                break
        assert prev == full


def test_monotone_growth_across_rounds(fig1):
    _, res = solve_fig1(fig1, record_rounds=True)
    for before, after in zip(res.history, res.history[1:]):
        for n, f in before.merged.items():
            g = after.merged[n]
            assert f.lin <= g.lin and f.ain <= g.ain and f.aout <= g.aout


def test_eager_same_result(fig1):
    _, a = solve_fig1(fig1)
    _, b = solve_fig1(fig1, eager=True)
    assert {n: (f.lin, f.ain) for n, f in a.merged.items()} == \
           {n: (f.lin, f.ain) for n, f in b.merged.items()}


def test_string_limit(fig1):
    with pytest.raises(SolverLimitError):
        solve_fig1(fig1, representation=False, max_strings=5)


def test_canonical(fig1):
    sg, res = solve_fig1(fig1)
    assert res.canonical(sg, ()) == LAMBDA
    assert res.canonical(sg, (1, 2, 2, 2)) == (1, 2)
    assert res.canonical(sg, (2,)) is None
