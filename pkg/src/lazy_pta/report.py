"""Text, JSON and DOT renderings of analysis results; golden comparison."""

from __future__ import annotations

import json
from typing import Iterable, Iterator, Optional

from .analyses import AnalysisResult
from .callstrings import format_callstring
from .dataflow import NodeFacts
from .lang import Supergraph

DUMPS = ("liveness", "points-to", "must", "contexts", "stats")
DEFAULT_DUMPS = ("liveness", "points-to", "must", "stats")

METRIC_KEYS = ("total_pairs", "distinct_pairs", "max_call_strings", "rounds",
               "liveness_iterations", "points_to_iterations", "eager_restarts",
               "liveness_time", "points_to_time", "wall_time")


def vars_json(s: Iterable[str]) -> list[str]:
    return sorted(s)


def pairs_json(r: Iterable[tuple[str, str]]) -> list[list[str]]:
    return [list(p) for p in sorted(r)]


def must_json(u: frozenset, result: AnalysisResult) -> dict:
    """Per-pointer must targets; a full V is written as the sentinel "*"."""
    out = {}
    V = result.dom.locations
    for x in sorted(result.dom.pointers):
        targets = {v for p, v in u if p == x}
        out[x] = "*" if targets == V else sorted(targets)
    return out


def _facts_json(f: NodeFacts, dumps: Iterable[str]) -> dict:
    d = {}
    if "liveness" in dumps:
        d["lin"] = vars_json(f.lin)
        d["lout"] = vars_json(f.lout)
    if "points-to" in dumps:
        d["ain"] = pairs_json(f.ain)
        d["aout"] = pairs_json(f.aout)
    return d


def metrics(result: AnalysisResult) -> dict:
    return {k: result.stats[k] for k in METRIC_KEYS if k in result.stats}


def result_to_dict(result: AnalysisResult, dumps: Iterable[str] = DEFAULT_DUMPS,
                   program_name: str = "", timings: bool = True) -> dict:
    dumps = tuple(dumps)
    nodes = []
    for n in sorted(result.facts):
        node = result.sg.nodes[n]
        entry = {"id": n, "proc": node.proc, "stmt": node.label()}
        entry.update(_facts_json(result.facts[n], dumps))
        if "must" in dumps:
            entry["uin"] = must_json(result.uin[n], result)
            entry["uout"] = must_json(result.uout[n], result)
        if "contexts" in dumps and result.contexts is not None:
            entry["contexts"] = {format_callstring(s): _facts_json(f, dumps)
                                 for s, f in sorted(result.contexts.get(n, {}).items(),
                                                    key=lambda kv: (len(kv[0]), kv[0]))}
        nodes.append(entry)
    out = {"program": program_name, "analysis": result.analysis, "mode": result.mode,
           "nodes": nodes}
    if "stats" in dumps:
        m = metrics(result)
        if not timings:
            m = {k: v for k, v in m.items() if not k.endswith("_time")}
        out["metrics"] = m
    return out


def emit_json(result: AnalysisResult, dumps: Iterable[str] = DEFAULT_DUMPS,
              program_name: str = "", timings: bool = True) -> str:
    return json.dumps(result_to_dict(result, dumps, program_name, timings), indent=2,
                      ensure_ascii=False) + "\n"


def andersen_to_dict(summary: frozenset, program_name: str = "") -> dict:
    return {"program": program_name, "analysis": "andersen", "mode": "flow-insensitive",
            "summary": pairs_json(summary), "metrics": {"total_pairs": len(summary),
                                                        "distinct_pairs": len(summary)}}


def load_facts(text: str) -> dict[int, dict[str, object]]:
    """Read emit_json output back into sets keyed by node id."""
    data = json.loads(text)
    out = {}
    for entry in data.get("nodes", []):
        f: dict[str, object] = {}
        for key in ("lin", "lout"):
            if key in entry:
                f[key] = frozenset(entry[key])
        for key in ("ain", "aout"):
            if key in entry:
                f[key] = frozenset(tuple(p) for p in entry[key])
        for key in ("uin", "uout"):
            if key in entry:
                f[key] = {x: (t if t == "*" else frozenset(t)) for x, t in entry[key].items()}
        out[entry["id"]] = f
    return out


class GoldenSchemaError(ValueError):
    pass


def compare_golden(result_json: str, golden_json: str) -> list[str]:
    """Field-by-field set comparison.  An empty list means the result matches.

    Only fields present in the golden entry are compared, so goldens may pin
    a subset of the output.
    """
    try:
        got = json.loads(result_json)
        want = json.loads(golden_json)
    except json.JSONDecodeError as e:
        raise GoldenSchemaError(str(e)) from e
    if "nodes" not in got or "nodes" not in want:
        raise GoldenSchemaError("missing 'nodes' array")
    got_nodes = {e["id"]: e for e in got["nodes"]}
    diffs = []
    for w in want["nodes"]:
        n = w["id"]
        g = got_nodes.get(n)
        if g is None:
            diffs.append("node %s: missing from result" % n)
            continue
        for key, wv in w.items():
            if key in ("id", "proc", "stmt"):
                if g.get(key) != wv:
                    diffs.append("node %s: %s is %r, expected %r" % (n, key, g.get(key), wv))
                continue
            if key not in g:
                diffs.append("node %s: field %s missing" % (n, key))
                continue
            diffs.extend(_diff_field(n, key, g[key], wv))
    for key, wv in want.get("metrics", {}).items():
        if got.get("metrics", {}).get(key) != wv:
            diffs.append("metrics: %s is %r, expected %r"
                         % (key, got.get("metrics", {}).get(key), wv))
    return diffs


def _as_set(v) -> set:
    return {tuple(x) if isinstance(x, list) else x for x in v}


def _diff_field(n, key, got, want) -> list[str]:
    out = []
    if isinstance(want, dict):
        for sub in sorted(set(want) | set(got)):
            if sub not in got or sub not in want:
                out.append("node %s: %s[%s] present on one side only" % (n, key, sub))
            else:
                out.extend(_diff_field(n, "%s[%s]" % (key, sub), got[sub], want[sub]))
        return out
    if isinstance(want, str) or isinstance(got, str):
        if want != got:
            out.append("node %s: %s is %r, expected %r" % (n, key, got, want))
        return out
    gs, ws = _as_set(got), _as_set(want)
    for item in sorted(ws - gs, key=str):
        out.append("node %s: %s missing %s" % (n, key, _fmt(item)))
    for item in sorted(gs - ws, key=str):
        out.append("node %s: %s has extra %s" % (n, key, _fmt(item)))
    return out


def _fmt(item) -> str:
    if isinstance(item, tuple):
        return "(%s)" % ",".join(item)
    return str(item)


# ------------------------------------------------------------------- text

def _set(s: Iterable[str]) -> str:
    return "{" + ", ".join(sorted(s)) + "}"


def _rel(r: Iterable[tuple[str, str]]) -> str:
    return "{" + ", ".join("(%s,%s)" % p for p in sorted(r)) + "}"


def emit_text(result: AnalysisResult, dumps: Iterable[str] = DEFAULT_DUMPS) -> str:
    dumps = tuple(dumps)
    lines = ["analysis %s (%s)" % (result.analysis, result.mode)]
    for n in sorted(result.facts):
        node = result.sg.nodes[n]
        f = result.facts[n]
        lines.append("%3d %-6s %s" % (n, node.proc, node.label()))
        if "liveness" in dumps:
            lines.append("      Lin  %s   Lout %s" % (_set(f.lin), _set(f.lout)))
        if "points-to" in dumps:
            lines.append("      Ain  %s" % _rel(f.ain))
            lines.append("      Aout %s" % _rel(f.aout))
        if "must" in dumps:
            lines.append("      Uin  %s" % _must_text(result.uin[n], result))
            lines.append("      Uout %s" % _must_text(result.uout[n], result))
        if "contexts" in dumps and result.contexts is not None:
            for s, cf in sorted(result.contexts.get(n, {}).items(),
                                key=lambda kv: (len(kv[0]), kv[0])):
                lines.append("      <%s> Lin %s Ain %s" % (format_callstring(s), _set(cf.lin),
                                                          _rel(cf.ain)))
    if "stats" in dumps:
        lines.append("metrics:")
        for k, v in metrics(result).items():
            lines.append("  %s: %s" % (k, "%.6f" % v if isinstance(v, float) else v))
    return "\n".join(lines) + "\n"


def _must_text(u: frozenset, result: AnalysisResult) -> str:
    parts = []
    for x, t in must_json(u, result).items():
        if t == "*":
            parts.append("%s->*" % x)
        elif t:
            parts.append("%s->%s" % (x, ",".join(t)))
    return "{" + ", ".join(parts) + "}"


# -------------------------------------------------------------------- DOT

def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def dot_lines(sg: Supergraph, result: Optional[AnalysisResult] = None,
              dumps: Iterable[str] = ("liveness", "points-to")) -> Iterator[str]:
    dumps = tuple(dumps)
    yield "digraph supergraph {"
    yield "  node [shape=box, fontname=monospace];"
    for proc, cfg in sg.procs.items():
        yield '  subgraph "cluster_%s" {' % proc
        yield '    label="%s";' % proc
        for n in sorted(cfg.nodes):
            label = "%d: %s" % (n, sg.nodes[n].label())
            if result is not None:
                f = result.facts[n]
                if "liveness" in dumps:
                    label += "\\nLin=%s Lout=%s" % (_set(f.lin), _set(f.lout))
                if "points-to" in dumps:
                    label += "\\nAin=%s\\nAout=%s" % (_rel(f.ain), _rel(f.aout))
            yield '    n%d [label="%s"];' % (n, _dot_escape(label).replace("\\\\n", "\\n"))
        yield "  }"
    for m in sorted(sg.succ):
        for n in sg.succ[m]:
            yield "  n%d -> n%d;" % (m, n)
    for c, s in sg.call_edges():
        yield "  n%d -> n%d [style=dashed, label=\"c%d\"];" % (c, s, sg.nodes[c].site)
    for e, r in sg.return_edges():
        yield "  n%d -> n%d [style=dashed, label=\"r%d\"];" % (e, r, sg.nodes[r].site)
    yield "}"


def emit_dot(sg: Supergraph, result: Optional[AnalysisResult] = None,
             dumps: Iterable[str] = ("liveness", "points-to")) -> str:
    return "\n".join(dot_lines(sg, result, dumps)) + "\n"
