"""Analysis drivers: lazy (lpta), liveness-free (spta), classic may, Andersen."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

from .callstrings import CallString, EngineConfig, InterprocResult, LAMBDA, interproc_solve
from .dataflow import (EMPTY, Domain, NodeFacts, SolverConfig, extractors, intraproc_solve,
                       meet_points_to, must, rel_apply)
from .lang import (ADDR, COPY, LOAD, STORE, UNDEF, USE, LazyPtaError, Program, Simple,
                   Supergraph, build_supergraph, walk_items)


class AnalysisError(LazyPtaError):
    """The requested analysis cannot run on this program."""


@dataclass
class Options:
    interprocedural: Optional[bool] = None   # None picks by procedure count
    eager: bool = False
    undef_seed: bool = True
    representation: bool = True
    max_length: Optional[int] = None
    record_rounds: bool = False
    trace: bool = False


@dataclass
class AnalysisResult:
    analysis: str
    mode: str
    program: Program
    sg: Supergraph
    dom: Domain
    facts: dict[int, NodeFacts]
    uin: dict[int, frozenset]
    uout: dict[int, frozenset]
    stats: dict
    contexts: Optional[dict[int, dict[CallString, NodeFacts]]] = None
    interproc: Optional[InterprocResult] = None
    history: list = field(default_factory=list)

    def context_facts(self, node: int, stack: CallString) -> Optional[NodeFacts]:
        """Facts for a concrete stack of call sites (λ for intraprocedural runs)."""
        if self.interproc is None:
            return self.facts[node]
        sigma = self.interproc.canonical(self.sg, stack)
        if sigma is None:
            return None
        table = self.contexts.get(node, {})
        if sigma in table:
            return table[sigma]
        # the canonical string is a representative that is not derivable
        for s, f in table.items():
            if self.interproc.reps[self.sg.nodes[node].proc].get(s) == sigma:
                return f
        return None

    def total_pairs(self) -> int:
        return sum(len(f.ain) + len(f.aout) for f in self.facts.values())

    def distinct_pairs(self) -> int:
        pairs: set = set()
        for f in self.facts.values():
            pairs |= f.ain
            pairs |= f.aout
        return len(pairs)


def extract_must(result: AnalysisResult) -> tuple[dict[int, frozenset], dict[int, frozenset]]:
    """Must information from may information, per node."""
    full = result.dom.full()
    uin, uout = {}, {}
    for n, f in result.facts.items():
        if f.reached:
            uin[n] = must(f.ain, result.dom)
            uout[n] = must(f.aout, result.dom)
        else:
            uin[n] = uout[n] = full
    return uin, uout


def _domain(program: Program) -> Domain:
    return Domain(program.P, program.V)


def _mode(program: Program, options: Options) -> bool:
    inter = options.interprocedural
    if inter is None:
        inter = len(program.procedures) > 1
    if not inter and len(program.procedures) > 1:
        raise AnalysisError("intraprocedural mode needs a single-procedure program; "
                            "this program has %d procedures" % len(program.procedures))
    return inter


def _finish(name: str, mode: str, program: Program, sg: Supergraph, dom: Domain,
            facts: dict[int, NodeFacts], stats: dict, **kw) -> AnalysisResult:
    res = AnalysisResult(name, mode, program, sg, dom, facts, {}, {}, stats, **kw)
    res.uin, res.uout = extract_must(res)
    res.stats["total_pairs"] = res.total_pairs()
    res.stats["distinct_pairs"] = res.distinct_pairs()
    return res


def _solver_stats(s, elapsed: float, max_strings: int) -> dict:
    return {
        "rounds": s.rounds,
        "liveness_iterations": s.liveness_steps,
        "points_to_iterations": s.points_to_steps,
        "eager_restarts": s.eager_restarts,
        "max_call_strings": max_strings,
        "liveness_time": s.liveness_time,
        "points_to_time": s.points_to_time,
        "wall_time": elapsed,
    }


def _run(program: Program, options: Options, lazy: bool) -> AnalysisResult:
    name = "lpta" if lazy else "spta"
    inter = _mode(program, options)
    dom = _domain(program)
    t0 = time.perf_counter()
    if not inter:
        sg = build_supergraph(program, start_nop=False)
        cfg = sg.procs["main"]
        config = SolverConfig(eager=options.eager, undef_seed=options.undef_seed,
                              liveness=lazy, record_rounds=options.record_rounds)
        sol = intraproc_solve(cfg, dom, config)
        stats = _solver_stats(sol.stats, time.perf_counter() - t0, 1)
        return _finish(name, "intra", program, sg, dom, sol.facts, stats,
                       contexts={n: {LAMBDA: f} for n, f in sol.facts.items()},
                       history=sol.history)
    sg = build_supergraph(program)
    config = EngineConfig(lazy=lazy, undef_seed=options.undef_seed, eager=options.eager,
                          representation=options.representation,
                          max_length=options.max_length,
                          record_rounds=options.record_rounds, trace=options.trace)
    res = interproc_solve(sg, dom, config)
    stats = _solver_stats(res.stats, time.perf_counter() - t0, res.max_call_strings)
    stats["missing_liveness"] = res.diagnostics.missing_liveness
    return _finish(name, "inter", program, sg, dom, res.merged, stats,
                   contexts=res.contexts, interproc=res, history=res.history)


def run_lpta(program: Program, options: Optional[Options] = None) -> AnalysisResult:
    """Lazy points-to analysis: points-to facts only along live ranges."""
    return _run(program, options or Options(), lazy=True)


def run_spta(program: Program, options: Optional[Options] = None) -> AnalysisResult:
    """The same framework with every pointer considered live everywhere."""
    return _run(program, options or Options(), lazy=False)


# ------------------------------------------------------- classic may analysis

def _may_transfer(stmt, ain: frozenset, dom: Domain) -> frozenset:
    k = stmt.kind
    if k in (ADDR, COPY, LOAD):
        x = stmt.lhs
        if k == ADDR:
            pointee = frozenset((stmt.rhs,))
        elif k == COPY:
            pointee = rel_apply(ain, (stmt.rhs,))
        else:
            pointee = rel_apply(ain, rel_apply(ain, (stmt.rhs,)) & dom.pointers)
        return frozenset(p for p in ain if p[0] != x) | {(x, v) for v in pointee}
    if k == STORE:
        targets = rel_apply(ain, (stmt.lhs,))
        defs = targets & dom.pointers
        kill = defs if len(targets) == 1 else EMPTY
        pointee = rel_apply(ain, (stmt.rhs,))
        return frozenset(p for p in ain if p[0] not in kill) | {(d, v) for d in defs for v in pointee}
    return ain


def run_conventional_may(program: Program) -> AnalysisResult:
    """Flow-sensitive may analysis without liveness and without `?`."""
    if len(program.procedures) > 1:
        raise AnalysisError("the conventional analysis is intraprocedural only")
    dom = _domain(program)
    t0 = time.perf_counter()
    sg = build_supergraph(program, start_nop=False)
    cfg = sg.procs["main"]
    nodes = cfg.rpo()
    ain = {n: EMPTY for n in nodes}
    aout = {n: EMPTY for n in nodes}
    steps = 0
    work = list(nodes)
    queued = set(work)
    while work:
        n = min(work)
        work.remove(n)
        queued.discard(n)
        steps += 1
        new_in = EMPTY if n == cfg.start else meet_points_to(aout[m] for m in cfg.pred[n])
        new_out = _may_transfer(cfg.nodes[n].stmt, new_in, dom)
        ain[n] = new_in
        if new_out != aout[n]:
            aout[n] = new_out
            for s in cfg.succ[n]:
                if s not in queued:
                    queued.add(s)
                    work.append(s)
    facts = {n: NodeFacts(EMPTY, EMPTY, ain[n], aout[n], True) for n in nodes}
    stats = {"rounds": 1, "liveness_iterations": 0, "points_to_iterations": steps,
             "max_call_strings": 1, "wall_time": time.perf_counter() - t0}
    return _finish("conventional", "intra", program, sg, dom, facts, stats)


# ---------------------------------------------------------------- Andersen

def run_andersen(program: Program) -> frozenset:
    """Flow-insensitive inclusion-based summary over all statements."""
    P = program.P
    pts: dict[str, set] = {x: set() for x in P}
    stmts = [it.stmt for proc in program.procedures.values()
             for it in walk_items(proc.body) if isinstance(it, Simple)]
    changed = True
    while changed:
        changed = False
        for s in stmts:
            if s.kind == ADDR:
                add = {s.rhs}
                dst = [s.lhs]
            elif s.kind == COPY:
                add = pts[s.rhs]
                dst = [s.lhs]
            elif s.kind == LOAD:
                add = set()
                for t in pts[s.rhs]:
                    if t in P:
                        add |= pts[t]
                dst = [s.lhs]
            elif s.kind == STORE:
                add = pts[s.rhs]
                dst = [t for t in pts[s.lhs] if t in P]
            else:
                continue
            for d in dst:
                if not add <= pts[d]:
                    pts[d] |= add
                    changed = True
    return frozenset((x, v) for x, vs in pts.items() for v in vs)


# ------------------------------------------------------------ sanity check

@dataclass
class SanityReport:
    findings: list[tuple[int, str]]

    @property
    def ok(self) -> bool:
        return not self.findings


def sanity_check(program: Program, result: AnalysisResult) -> SanityReport:
    """Flag stores whose pointer is live but has no pointer-valued target."""
    findings = []
    for n in sorted(result.facts):
        stmt = result.sg.nodes[n].stmt
        if stmt.kind != STORE:
            continue
        tables = result.contexts.get(n) if result.contexts else None
        views = list(tables.values()) if tables else [result.facts[n]]
        for f in views:
            if stmt.lhs in f.lin and not extractors(stmt, f.ain, f.lout, result.dom).defs:
                findings.append((n, str(stmt)))
                break
    return SanityReport(findings)


def use_sites(result: AnalysisResult) -> list[tuple[int, str, CallString]]:
    """(node, pointer, context) triples where a pointer is read for its target.

    Loads count only when the loaded value is live in that context; a dead
    load is not a use (strong liveness drops it).
    """
    sites = []
    for n, node in sorted(result.sg.nodes.items()):
        k = node.stmt.kind
        if k not in (USE, STORE, LOAD):
            continue
        table = result.contexts.get(n, {}) if result.contexts else {LAMBDA: result.facts[n]}
        for sigma in sorted(table, key=lambda s: (len(s), s)):
            if k == LOAD:
                if node.stmt.lhs in table[sigma].lout:
                    sites.append((n, node.stmt.rhs, sigma))
            else:
                sites.append((n, node.stmt.lhs, sigma))
    return sites


def use_precision(lpta: AnalysisResult, spta: AnalysisResult) -> tuple[int, int]:
    """Count (node, pointer) use sites whose non-`?` pointee sets differ
    between two runs in some calling context.

    Returns (differing sites, total sites).
    """
    differing: set = set()
    total: set = set()
    for n, x, sigma in use_sites(lpta):
        total.add((n, x))
        mine = lpta.context_facts(n, sigma)
        other = spta.context_facts(n, sigma)
        a = rel_apply(mine.ain, (x,)) - {UNDEF}
        b = rel_apply(other.ain, (x,)) - {UNDEF} if other is not None else None
        if a != b:
            differing.add((n, x))
    return len(differing), len(total)


__all__ = ["AnalysisError", "AnalysisResult", "Options", "SanityReport", "extract_must",
           "run_andersen", "run_conventional_may", "run_lpta", "run_spta", "sanity_check",
           "use_precision", "use_sites"]
