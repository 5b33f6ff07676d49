"""Lattice values, relation algebra, extractors and the intraprocedural solver.

Liveness values are frozensets of pointer names; points-to values are
frozensets of ``(pointer, location)`` pairs.  Both lattices are ordered by
``⊇`` so the analyses start from the empty set and only ever add facts.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional

from .lang import (ADDR, COPY, LOAD, STORE, USE, UNDEF, Cfg, LazyPtaError, Statement)

VarSet = frozenset  # frozenset[str]
PtRel = frozenset   # frozenset[tuple[str, str]]

EMPTY: frozenset = frozenset()


class SolverLimitError(LazyPtaError):
    """A solver exceeded its round or iteration guard."""


@dataclass(frozen=True)
class Domain:
    """The pointer set P and the location set V of one program."""
    pointers: frozenset[str]
    locations: frozenset[str]

    @classmethod
    def of(cls, pointers: Iterable[str], others: Iterable[str] = ()) -> "Domain":
        from .lang import NULL
        P = frozenset(pointers)
        return cls(P, P | frozenset(others) | {UNDEF, NULL})

    def full(self) -> frozenset:
        """P × V."""
        return frozenset((x, v) for x in self.pointers for v in self.locations)


# ------------------------------------------------------- relation algebra

def rel_apply(R: Iterable[tuple[str, str]], X: Iterable[str]) -> frozenset[str]:
    """R X: every location some member of X points to."""
    X = set(X)
    return frozenset(v for u, v in R if u in X)


def rel_restrict(R: Iterable[tuple[str, str]], X: Iterable[str]) -> frozenset:
    """R|X: the pairs of R whose pointer lies in X."""
    X = set(X)
    return frozenset(p for p in R if p[0] in X)


def rel_self_compose(R: Iterable[tuple[str, str]], pointers: Optional[Iterable[str]] = None) -> frozenset:
    """R∘R through pointer-valued middles only.

    Without ``pointers`` the middle location must itself occur as a source
    in R, which gives the same answer because R ⊆ P × V.
    """
    R = frozenset(R)
    by_src: dict[str, list[str]] = {}
    for u, v in R:
        by_src.setdefault(u, []).append(v)
    P = None if pointers is None else set(pointers)
    out = set()
    for u, v in R:
        if P is not None and v not in P:
            continue
        for w in by_src.get(v, ()):
            out.add((u, w))
    return frozenset(out)


def pointers_of(R: Iterable[tuple[str, str]]) -> frozenset[str]:
    return frozenset(u for u, _ in R)


def must_pointees(R: Iterable[tuple[str, str]], x: str, dom: Domain) -> frozenset[str]:
    """must(R){x}: all of V when x has no known pointee or only `?`."""
    pts = rel_apply(R, (x,))
    if not pts or pts == {UNDEF}:
        return dom.locations
    if len(pts) == 1:
        return pts
    return EMPTY


def must(R: Iterable[tuple[str, str]], dom: Domain) -> frozenset:
    R = frozenset(R)
    out = set()
    for x in dom.pointers:
        out.update((x, y) for y in must_pointees(R, x, dom))
    return frozenset(out)


# -------------------------------------------------------------- extractors

class Extract(NamedTuple):
    defs: frozenset
    kill: frozenset
    ref: frozenset
    pointee: frozenset


_NONE = Extract(EMPTY, EMPTY, EMPTY, EMPTY)


def extractors(stmt: Statement, ain: frozenset, lout: frozenset, dom: Domain) -> Extract:
    k = stmt.kind
    if k == USE:
        return Extract(EMPTY, EMPTY, frozenset((stmt.lhs,)), EMPTY)
    if k == ADDR:
        d = frozenset((stmt.lhs,))
        return Extract(d, d, EMPTY, frozenset((stmt.rhs,)))
    if k == COPY:
        d = frozenset((stmt.lhs,))
        live = stmt.lhs in lout
        ref = frozenset((stmt.rhs,)) if live else EMPTY
        return Extract(d, d, ref, rel_apply(ain, (stmt.rhs,)))
    if k == LOAD:
        d = frozenset((stmt.lhs,))
        y = stmt.rhs
        targets = rel_apply(ain, (y,))
        ref = (frozenset((y,)) | (targets & dom.pointers)) if stmt.lhs in lout else EMPTY
        pointee = rel_apply(ain, targets & dom.pointers)
        return Extract(d, d, ref, pointee)
    if k == STORE:
        x, y = stmt.lhs, stmt.rhs
        d = rel_apply(ain, (x,)) & dom.pointers
        kill = must_pointees(ain, x, dom) & dom.pointers
        ref = frozenset((x, y)) if d & lout else frozenset((x,))
        return Extract(d, kill, ref, rel_apply(ain, (y,)))
    return _NONE


def transfer_liveness(stmt: Statement, lout: frozenset, ain: frozenset, dom: Domain) -> frozenset:
    e = extractors(stmt, ain, lout, dom)
    return (lout - e.kill) | e.ref


def transfer_points_to(stmt: Statement, ain: frozenset, lout: frozenset, dom: Domain) -> frozenset:
    e = extractors(stmt, ain, lout, dom)
    kept = {p for p in ain if p[0] not in e.kill}
    kept.update((d, v) for d in e.defs for v in e.pointee)
    return frozenset(p for p in kept if p[0] in lout)


def meet_liveness(values: Iterable[frozenset]) -> frozenset:
    out: set = set()
    for v in values:
        out |= v
    return frozenset(out)


def meet_points_to(values: Iterable[frozenset], lin: Optional[frozenset] = None) -> frozenset:
    out: set = set()
    for v in values:
        out |= v
    if lin is not None:
        return rel_restrict(out, lin)
    return frozenset(out)


def boundary_points_to(lin: frozenset, undef_seed: bool = True) -> frozenset:
    """Points-to value entering the program: every live pointer holds `?`."""
    if not undef_seed:
        return EMPTY
    return frozenset((x, UNDEF) for x in lin)


# ------------------------------------------------------------------ solver

@dataclass
class NodeFacts:
    lin: frozenset = EMPTY
    lout: frozenset = EMPTY
    ain: frozenset = EMPTY
    aout: frozenset = EMPTY
    reached: bool = False


@dataclass
class SolverConfig:
    eager: bool = False
    undef_seed: bool = True
    liveness: bool = True
    max_rounds: int = 1000
    max_steps: int = 1_000_000
    record_rounds: bool = False


@dataclass
class SolveStats:
    rounds: int = 0
    liveness_steps: int = 0
    points_to_steps: int = 0
    liveness_time: float = 0.0
    points_to_time: float = 0.0
    eager_restarts: int = 0


@dataclass
class IntraSolution:
    facts: dict[int, NodeFacts]
    stats: SolveStats
    history: list[dict[int, NodeFacts]] = field(default_factory=list)


def _snapshot(lin, lout, ain, aout, nodes) -> dict[int, NodeFacts]:
    return {n: NodeFacts(lin[n], lout[n], ain[n], aout[n], bool(lin[n] | lout[n]))
            for n in nodes}


def intraproc_solve(cfg: Cfg, dom: Domain, config: Optional[SolverConfig] = None,
                    calls_as_nop: bool = True) -> IntraSolution:
    """Alternate a liveness pass and a points-to pass until neither changes.

    With ``config.liveness`` off every pointer is treated as live at every
    point (the eager, non-lazy variant).
    """
    config = config or SolverConfig()
    nodes = cfg.rpo()
    succ = {n: list(cfg.succ[n]) for n in nodes}
    pred = {n: list(cfg.pred[n]) for n in nodes}
    if not calls_as_nop:
        pseudo = set(cfg.call_pairs)
        succ = {m: [n for n in s if (m, n) not in pseudo] for m, s in succ.items()}
        pred = {n: [m for m in p if (m, n) not in pseudo] for n, p in pred.items()}
    stmt = {n: cfg.nodes[n].stmt for n in nodes}
    start, end = cfg.start, cfg.end

    if config.liveness:
        lin = {n: EMPTY for n in nodes}
        lout = {n: EMPTY for n in nodes}
    else:
        lin = {n: dom.pointers for n in nodes}
        lout = {n: dom.pointers for n in nodes}
    ain = {n: EMPTY for n in nodes}
    aout = {n: EMPTY for n in nodes}
    stats = SolveStats()
    history = []
    visited_pt: set[int] = set()

    def liveness_pass() -> bool:
        changed = False
        heap = [-n for n in nodes]
        heapq.heapify(heap)
        queued = set(nodes)
        while heap:
            n = -heapq.heappop(heap)
            queued.discard(n)
            stats.liveness_steps += 1
            if stats.liveness_steps > config.max_steps:
                raise SolverLimitError("liveness step limit exceeded")
            new_out = EMPTY if n == end else meet_liveness(lin[s] for s in succ[n])
            new_in = transfer_liveness(stmt[n], new_out, ain[n], dom)
            if new_out != lout[n]:
                lout[n] = new_out
                changed = True
            if new_in != lin[n]:
                lin[n] = new_in
                changed = True
                for m in pred[n]:
                    if m not in queued:
                        queued.add(m)
                        heapq.heappush(heap, -m)
        return changed

    def points_to_pass() -> tuple[bool, bool]:
        """Returns (changed, interrupted)."""
        changed = False
        heap = list(nodes)
        heapq.heapify(heap)
        queued = set(nodes)
        while heap:
            n = heapq.heappop(heap)
            queued.discard(n)
            stats.points_to_steps += 1
            if stats.points_to_steps > config.max_steps:
                raise SolverLimitError("points-to step limit exceeded")
            if n == start:
                new_in = boundary_points_to(lin[n], config.undef_seed)
            else:
                new_in = meet_points_to((aout[m] for m in pred[n]), lin[n])
            new_out = transfer_points_to(stmt[n], new_in, lout[n], dom)
            first = n not in visited_pt
            visited_pt.add(n)
            grew = new_in != ain[n] or new_out != aout[n]
            if new_in != ain[n]:
                ain[n] = new_in
                changed = True
            if new_out != aout[n]:
                aout[n] = new_out
                changed = True
            if grew or first:
                for s in succ[n]:
                    if s not in queued:
                        queued.add(s)
                        heapq.heappush(heap, s)
            if config.eager and config.liveness and grew:
                if transfer_liveness(stmt[n], lout[n], ain[n], dom) != lin[n]:
                    stats.eager_restarts += 1
                    return changed, True
        return changed, False

    while True:
        stats.rounds += 1
        if stats.rounds > config.max_rounds:
            raise SolverLimitError("round limit exceeded")
        changed = False
        if config.liveness:
            t0 = time.perf_counter()
            changed |= liveness_pass()
            stats.liveness_time += time.perf_counter() - t0
        t0 = time.perf_counter()
        pt_changed, interrupted = points_to_pass()
        changed |= pt_changed
        stats.points_to_time += time.perf_counter() - t0
        if config.record_rounds:
            history.append(_snapshot(lin, lout, ain, aout, nodes))
        if not changed and not interrupted:
            break
        if not config.liveness:
            # liveness is constant, one points-to fixpoint is final
            break
    return IntraSolution(_snapshot(lin, lout, ain, aout, nodes), stats, history)
