import json

import pytest

from lazy_pta.cli import main

from conftest import GOLDEN, fixture_path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_fig2_json(capsys):
    code, out, _ = run(capsys, fixture_path("fig2.pt"), "--analysis=lpta", "--mode=intra",
                       "--dump=points-to,must", "--format=json", "--no-undef-seed")
    assert code == 0
    data = json.loads(out)
    assert data["nodes"][2]["ain"] == [["p", "r"], ["q", "r"], ["r", "s"]]
    assert "uin" in data["nodes"][0] and "lin" not in data["nodes"][0]


def test_fig1_stats(capsys):
    code, out, _ = run(capsys, fixture_path("fig1.pt"), "--mode=inter", "--dump=stats")
    assert code == 0
    assert "max_call_strings: 3" in out
    assert "_time" not in out


def test_timings_opt_in(capsys):
    _, out, _ = run(capsys, fixture_path("fig1.pt"), "--dump=stats", "--timings")
    assert "wall_time" in out


def test_missing_file(capsys):
    code, _, err = run(capsys, "missing.pt")
    assert code == 2 and "cannot read" in err


def test_parse_error(tmp_path, capsys):
    bad = tmp_path / "bad.pt"
    bad.write_text("ptr x; proc main() { x = &q; }")
    code, _, err = run(capsys, bad)
    assert code == 2 and "q" in err


def test_bad_flag(capsys):
    assert run(capsys, fixture_path("fig2.pt"), "--format=xml")[0] == 2
    assert run(capsys, fixture_path("fig2.pt"), "--dump=nonsense")[0] == 2
    assert run(capsys)[0] == 2


def test_analysis_errors(capsys):
    assert run(capsys, fixture_path("fig1.pt"), "--mode=intra")[0] == 1
    assert run(capsys, fixture_path("fig1.pt"), "--analysis=conventional")[0] == 1
    assert run(capsys, fixture_path("fig2.pt"), "--analysis=conventional", "--mode=inter")[0] == 1


def test_strict_sanity(capsys):
    code, _, err = run(capsys, fixture_path("fig5.pt"), "--strict-sanity")
    assert code == 3 and "node 3" in err
    assert run(capsys, fixture_path("fig5.pt"))[0] == 0
    assert run(capsys, fixture_path("fig2.pt"), "--strict-sanity")[0] == 0
    assert run(capsys, fixture_path("fig1.pt"), "--strict-sanity")[0] == 0


def test_oracle_flag(capsys):
    code, _, err = run(capsys, fixture_path("fig1.pt"), "--oracle-bounds", "4,4")
    assert code == 0 and "0 violations" in err
    assert run(capsys, fixture_path("fig1.pt"), "--oracle-bounds", "0,4")[0] == 2


@pytest.mark.parametrize("golden, argv", [
    ("fig2_lpta.json", ["fig2.pt", "--no-undef-seed"]),
    ("fig2_conventional.json", ["fig2.pt", "--analysis=conventional"]),
    ("fig1_lpta.json", ["fig1.pt"]),
    ("fig8_lpta.json", ["fig8.pt"]),
])
def test_golden_flag(capsys, golden, argv):
    code, _, err = run(capsys, fixture_path(argv[0]), *argv[1:], "--format=json",
                       "--golden", GOLDEN / golden)
    assert code == 0, err


def test_golden_mismatch(capsys):
    code, _, err = run(capsys, fixture_path("fig2.pt"), "--format=json",
                       "--golden", GOLDEN / "fig2_lpta.json")
    assert code == 1 and "has extra (r,?)" in err


def test_all_and_andersen(capsys):
    code, out, _ = run(capsys, fixture_path("fig2.pt"), "--analysis=all", "--format=json")
    assert code == 0
    names = [r["analysis"] for r in json.loads(out)["results"]]
    assert names == ["lpta", "spta", "conventional", "andersen"]
    code, out, _ = run(capsys, fixture_path("fig2.pt"), "--analysis=andersen")
    assert "(p,r), (p,s), (q,r), (r,s), (s,r)" in out
    code, out, _ = run(capsys, fixture_path("fig1.pt"), "--analysis=all")
    assert code == 0 and "conventional" not in out


def test_dot_and_output_file(tmp_path, capsys):
    dest = tmp_path / "out.dot"
    code, out, _ = run(capsys, fixture_path("fig1.pt"), "--format=dot", "-o", dest)
    assert code == 0 and out == ""
    assert dest.read_text().count("style=dashed") == 4


def test_deterministic_output(capsys):
    a = run(capsys, fixture_path("fig1.pt"), "--format=json", "--dump=liveness,points-to,must,contexts,stats")[1]
    b = run(capsys, fixture_path("fig1.pt"), "--format=json", "--dump=liveness,points-to,must,contexts,stats")[1]
    assert a == b


def test_generate(capsys):
    code, out, _ = run(capsys, "--generate", "7")
    assert code == 0 and "proc main" in out
    assert run(capsys, "--generate", "7")[1] == out
