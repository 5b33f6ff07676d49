"""Checks of analysis results against their defining properties."""

from __future__ import annotations

from dataclasses import dataclass, field

from .analyses import (AnalysisResult, Options, run_andersen, run_lpta, run_spta, sanity_check,
                       use_precision)
from .corpus import inline_program
from .dataflow import (extractors, meet_liveness, meet_points_to, pointers_of,
                       transfer_liveness, transfer_points_to, boundary_points_to)
from .lang import UNDEF, Program, build_cfg
from .oracle import OracleResult, oracle_enumerate


def _views(result: AnalysisResult):
    """(node, label, facts) for every analysed context, or merged facts."""
    if result.contexts:
        for n in sorted(result.contexts):
            for s, f in result.contexts[n].items():
                yield n, s, f
    else:
        for n in sorted(result.facts):
            yield n, (), result.facts[n]


def sufficiency_violations(result: AnalysisResult, oracle: OracleResult) -> list[tuple]:
    """Observed (node, stack, x, z) with x referenced, z ≠ ? and (x,z) ∉ Ain."""
    bad = []
    for n, per_stack in sorted(oracle.by_context.items()):
        stmt = result.sg.nodes[n].stmt
        for stack, env in sorted(per_stack.items()):
            f = result.context_facts(n, stack)
            if f is None:
                bad.append((n, stack, None, None))
                continue
            ref = extractors(stmt, f.ain, f.lout, result.dom).ref
            for x in sorted(ref):
                for z in sorted(env.get(x, ())):
                    if z != UNDEF and (x, z) not in f.ain:
                        bad.append((n, stack, x, z))
    return bad


def sparseness_violations(result: AnalysisResult) -> list[tuple]:
    bad = []
    for n, s, f in _views(result):
        if not pointers_of(f.ain) <= f.lin:
            bad.append((n, s, "ain"))
        if not pointers_of(f.aout) <= f.lout:
            bad.append((n, s, "aout"))
    return bad


def kill_def_violations(result: AnalysisResult) -> list[tuple]:
    """Nodes whose Kill is neither ∅ nor P and differs from Def."""
    bad = []
    P = result.dom.pointers
    for n, s, f in _views(result):
        e = extractors(result.sg.nodes[n].stmt, f.ain, f.lout, result.dom)
        if e.kill and e.kill != P and e.kill != e.defs:
            bad.append((n, s, e.kill, e.defs))
    return bad


def intra_fixpoint_violations(result: AnalysisResult, undef_seed: bool = True) -> list[int]:
    """Nodes of an intraprocedural result where one more application of the
    equations would change something."""
    sg, dom = result.sg, result.dom
    cfg = sg.procs["main"]
    lazy = result.analysis == "lpta"
    bad = []
    for n in cfg.rpo():
        f = result.facts[n]
        stmt = cfg.nodes[n].stmt
        if lazy:
            lout = meet_liveness(result.facts[s].lin for s in cfg.succ[n]) if n != cfg.end \
                else frozenset()
            lin = transfer_liveness(stmt, lout, f.ain, dom)
            if (lin, lout) != (f.lin, f.lout):
                bad.append(n)
                continue
        if n == cfg.start:
            ain = boundary_points_to(f.lin, undef_seed)
        else:
            ain = meet_points_to((result.facts[m].aout for m in cfg.pred[n]), f.lin)
        if ain != f.ain or transfer_points_to(stmt, f.ain, f.lout, dom) != f.aout:
            bad.append(n)
    return bad


def inline_differences(program: Program, options: Options | None = None) -> list[str]:
    """Compare interprocedural lpta with lpta of the fully inlined program."""
    inter = run_lpta(program, Options(interprocedural=True) if options is None else options)
    flat = inline_program(program)
    cfg = build_cfg(flat.procedures["main"], start_nop=True)
    from .dataflow import Domain, intraproc_solve
    sol = intraproc_solve(cfg, Domain(program.P, program.V))
    by_tag: dict[tuple, list] = {}
    for n, node in cfg.nodes.items():
        by_tag.setdefault(node.tag, []).append(sol.facts[n])
    diffs = []
    for n, node in sorted(inter.sg.nodes.items()):
        copies = by_tag.get(node.tag, [])
        want = inter.facts[n]
        for name in ("lin", "lout", "ain", "aout"):
            got = frozenset().union(*(getattr(c, name) for c in copies))
            if got != getattr(want, name):
                diffs.append("node %d %s: inter %s, inlined %s"
                             % (n, name, sorted(getattr(want, name)), sorted(got)))
    return diffs


@dataclass
class CorpusReport:
    """Violation counts from running every check over a set of programs."""
    programs: int = 0
    recursive: int = 0
    inlined: int = 0
    oracle_states: int = 0
    oracle_checks: int = 0
    sparseness: int = 0
    kill_def: int = 0
    sufficiency: int = 0
    laziness: int = 0
    inlining: int = 0
    andersen: int = 0
    precision_diff: int = 0
    precision_sites: int = 0
    # the same, restricted to programs the sanity check accepts
    clean_programs: int = 0
    clean_diff: int = 0
    clean_sites: int = 0
    rows: list = field(default_factory=list)
    failures: list = field(default_factory=list)


def check_corpus(programs, bounds: tuple[int, int] = (4, 4)) -> CorpusReport:
    """Run lpta, spta, Andersen and the oracle on each (seed, program) pair."""
    rep = CorpusReport()
    for seed, prog in programs:
        rep.programs += 1
        lz = run_lpta(prog)
        sp = run_spta(prog)
        bad = {}
        bad["sparseness"] = len(sparseness_violations(lz)) + len(sparseness_violations(sp))
        bad["kill_def"] = len(kill_def_violations(lz)) + len(kill_def_violations(sp))
        oracle = oracle_enumerate(prog, *bounds, sg=lz.sg)
        rep.oracle_states += oracle.states
        rep.oracle_checks += sum(len(env) for ctx in oracle.by_context.values()
                                 for env in ctx.values())
        bad["sufficiency"] = len(sufficiency_violations(lz, oracle))
        bad["laziness"] = sum(1 for n in lz.facts
                              if not (lz.facts[n].ain <= sp.facts[n].ain
                                      and lz.facts[n].aout <= sp.facts[n].aout))
        summary = run_andersen(prog)
        bad["andersen"] = sum(1 for f in lz.facts.values()
                              for p in f.ain if p[1] != UNDEF and p not in summary)
        if prog.is_recursive():
            rep.recursive += 1
            bad["inlining"] = 0
        else:
            rep.inlined += 1
            bad["inlining"] = len(inline_differences(prog, Options(interprocedural=True)))
        d, t = use_precision(lz, sp)
        rep.precision_diff += d
        rep.precision_sites += t
        clean = sanity_check(prog, lz).ok
        if clean:
            rep.clean_programs += 1
            rep.clean_diff += d
            rep.clean_sites += t
        rep.rows.append((seed, len(prog.procedures), clean, t, d,
                         lz.stats["total_pairs"], sp.stats["total_pairs"]))
        for k, v in bad.items():
            setattr(rep, k, getattr(rep, k) + v)
            if v:
                rep.failures.append((seed, k, v))
    return rep
