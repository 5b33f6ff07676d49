import pytest

from lazy_pta.analyses import run_lpta
from lazy_pta.lang import NULL, UNDEF, build_supergraph, parse_program
from lazy_pta.oracle import OracleLimitError, oracle_enumerate
from lazy_pta.verify import sufficiency_violations


def test_fig2_small_bounds(fig2):
    sg = build_supergraph(fig2, start_nop=False)
    o = oracle_enumerate(fig2, 2, 1, sg=sg)
    assert "r" in o.at(3)["p"]
    assert ("p", "r") in run_lpta(fig2).facts[3].ain


def test_straight_line_single_path():
    prog = parse_program("ptr x, y; var a; proc main() { x = &a; y = x; use y; }")
    o = oracle_enumerate(prog, 4, 4)
    assert all(len(ctx) == 1 for ctx in o.by_context.values())
    assert o.states == len(o.by_context) == 5
    assert o.at(4)["y"] == {"a"}
    assert o.at(2)["x"] == {UNDEF}


def test_fig1_recursion(fig1):
    o = oracle_enumerate(fig1, 4, 3)
    assert "x" in o.at(12)["z"]
    assert "y" in o.at(6)["z"]
    # z never holds x at the print
    assert "x" not in o.at(6)["z"]
    assert max(len(s) for s in o.by_context[8]) == 3


def test_traps_and_non_pointer_cells():
    prog = parse_program("ptr x, y; var a; proc main() { x = &a; y = *x; *x = y; use y; }")
    o = oracle_enumerate(prog, 4, 4)
    assert o.at(4)["y"] == {UNDEF}
    assert o.at(4)["x"] == {"a"}
    trap = parse_program("ptr x, y; proc main() { x = null; y = *x; use y; }")
    o = oracle_enumerate(trap, 4, 4)
    assert o.traps == 1
    assert 4 not in o.by_context
    assert o.at(3)["x"] == {NULL}


def test_bounds_validated(fig2):
    with pytest.raises(ValueError):
        oracle_enumerate(fig2, 0, 1)


def test_state_limit(fig1):
    with pytest.raises(OracleLimitError):
        oracle_enumerate(fig1, 4, 4, max_states=5)


def test_lpta_sufficient_on_fixtures(fig1, fig2, fig8):
    for p in (fig1, fig2, fig8):
        r = run_lpta(p)
        assert sufficiency_violations(r, oracle_enumerate(p, 4, 4, sg=r.sg)) == []
