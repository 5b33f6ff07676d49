"""Call-string based interprocedural engine with value-based termination.

Points-to information travels forward: a call string grows by ``c_i`` on
the call edge and loses it on the matching return edge.  Liveness travels
backward: the string grows on return edges and shrinks on call edges.

Both analyses share one set of call strings per procedure.  A string is
described at its procedure's boundaries by a *key*: the points-to value
reaching Start and the liveness value reaching End.  Strings with equal
keys produce identical body values, so only one representative per key is
analysed and the others are regenerated from it at the procedure exit.
Keeping a single partition for both directions avoids pairing a points-to
context with liveness from a context that merely looked alike for the
other analysis.
"""

from __future__ import annotations

import heapq
import logging
import time
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .dataflow import (EMPTY, Domain, NodeFacts, SolveStats, SolverLimitError,
                       boundary_points_to, rel_restrict, transfer_liveness,
                       transfer_points_to)
from .lang import CALLNODE, RETURN, Supergraph

log = logging.getLogger(__name__)

CallString = tuple  # tuple[int, ...] of call-site ids
LAMBDA: CallString = ()

FORWARD = "forward"
BACKWARD = "backward"


class _Blocked:
    def __repr__(self) -> str:
        return "BLOCKED"


BLOCKED = _Blocked()


def format_callstring(sigma: CallString) -> str:
    if not sigma:
        return "λ"
    return "".join("c%d" % s for s in sigma)


def parse_callstring(text: str) -> CallString:
    if text in ("λ", ""):
        return LAMBDA
    return tuple(int(part) for part in text.split("c")[1:])


def extend_on_call(sigma: CallString, site: int, direction: str = FORWARD) -> CallString:
    """Append ``site``.  Forward analyses call this on call edges,
    backward analyses on return edges."""
    return sigma + (site,)


def match_on_return(sigma: CallString, site: int, direction: str = FORWARD):
    """Drop a trailing ``site`` or report that the path is not valid."""
    if sigma and sigma[-1] == site:
        return sigma[:-1]
    return BLOCKED


def string_order(sigma: CallString) -> tuple:
    return (len(sigma), sigma)


def represent(entries: Mapping[CallString, object]) -> tuple[dict, dict]:
    """Partition strings by value; keep the shortest (then smallest) string
    of each class and log the others against it."""
    classes: dict[object, list] = {}
    for sigma, value in entries.items():
        classes.setdefault(value, []).append(sigma)
    kept, replog = {}, {}
    for members in classes.values():
        members.sort(key=string_order)
        head = members[0]
        kept[head] = entries[head]
        for other in members[1:]:
            replog[other] = head
    return kept, replog


def regenerate(exit_entries: Mapping[CallString, frozenset],
               replog: Mapping[CallString, CallString]) -> dict:
    """Give every represented string its representative's exit value."""
    out = dict(exit_entries)
    for other, head in replog.items():
        if head in exit_entries:
            out[other] = out.get(other, EMPTY) | exit_entries[head]
    return out


@dataclass
class ContextDiagnostics:
    missing_liveness: int = 0


def liveness_for_context(sigma: CallString, node: int,
                         liveness: Mapping[int, Mapping[CallString, frozenset]],
                         diagnostics: Optional[ContextDiagnostics] = None,
                         replog: Optional[Mapping[CallString, CallString]] = None) -> frozenset:
    """Liveness for ``sigma`` at ``node``: its own entry, else that of its
    representative, else that of its longest proper prefix that has one."""
    table = liveness.get(node, {})
    if sigma in table:
        return table[sigma]
    if replog and sigma in replog and replog[sigma] in table:
        return table[replog[sigma]]
    for k in range(len(sigma) - 1, -1, -1):
        if sigma[:k] in table:
            return table[sigma[:k]]
    if diagnostics is not None:
        diagnostics.missing_liveness += 1
    log.debug("no liveness for %s at node %d", format_callstring(sigma), node)
    return EMPTY


@dataclass
class EngineConfig:
    lazy: bool = True
    undef_seed: bool = True
    eager: bool = False
    representation: bool = True
    max_length: Optional[int] = None
    max_rounds: int = 1000
    max_steps: int = 2_000_000
    max_strings: int = 20_000
    record_rounds: bool = False
    trace: bool = False


@dataclass
class TraceRecord:
    analysis: str
    edge: str
    src: int
    dst: int
    callee_string: CallString
    caller_string: CallString
    value_hash: int


@dataclass
class RoundSnapshot:
    number: int
    contexts: dict[int, dict[CallString, NodeFacts]]
    merged: dict[int, NodeFacts]


@dataclass
class InterprocResult:
    merged: dict[int, NodeFacts]
    contexts: dict[int, dict[CallString, NodeFacts]]
    derivable: dict[str, list[CallString]]
    reps: dict[str, dict[CallString, CallString]]
    stats: SolveStats
    max_call_strings: int
    history: list[RoundSnapshot] = field(default_factory=list)
    trace: list[TraceRecord] = field(default_factory=list)
    diagnostics: ContextDiagnostics = field(default_factory=ContextDiagnostics)

    def canonical(self, sg: Supergraph, stack: CallString) -> Optional[CallString]:
        """Analysed string standing for a concrete stack of call sites."""
        cur = LAMBDA
        proc = "main"
        for site in stack:
            cs = sg.sites[site]
            if cs.caller != proc:
                return None
            nxt = self.reps.get(cs.callee, {}).get(cur + (site,))
            if nxt is None:
                return None
            cur, proc = nxt, cs.callee
        return cur


class InterprocSolver:
    def __init__(self, sg: Supergraph, dom: Domain, config: Optional[EngineConfig] = None):
        self.sg = sg
        self.dom = dom
        self.config = config or EngineConfig()
        self.lin: dict[int, dict] = {n: {} for n in sg.nodes}
        self.lout: dict[int, dict] = {n: {} for n in sg.nodes}
        self.ain: dict[int, dict] = {n: {} for n in sg.nodes}
        self.aout: dict[int, dict] = {n: {} for n in sg.nodes}
        self.strings: dict[str, set] = {p: set() for p in sg.procs}
        self.rep: dict[str, dict] = {p: {} for p in sg.procs}
        self.callees: dict[str, set] = {p: set() for p in sg.procs}
        for cs in sg.sites.values():
            self.callees[cs.caller].add(cs.callee)
        self.stats = SolveStats()
        self.history: list[RoundSnapshot] = []
        self.trace: list[TraceRecord] = []
        self.diagnostics = ContextDiagnostics()
        self.changed = False
        self._queue: list = []
        self._queued: set = set()
        self._direction = FORWARD
        self._visited: set = set()
        self.strings["main"].add(LAMBDA)
        self.rep["main"][LAMBDA] = LAMBDA

    # -- table access --------------------------------------------------

    def get_lin(self, n: int, sigma: CallString) -> frozenset:
        if not self.config.lazy:
            return self.dom.pointers
        return self.lin[n].get(sigma, EMPTY)

    def get_lout(self, n: int, sigma: CallString) -> frozenset:
        if not self.config.lazy:
            return self.dom.pointers
        return self.lout[n].get(sigma, EMPTY)

    def key(self, proc: str, sigma: CallString) -> tuple:
        if not sigma:
            start = self.sg.start(proc)
            return (boundary_points_to(self.get_lin(start, LAMBDA), self.config.undef_seed), EMPTY)
        cs = self.sg.sites[sigma[-1]]
        caller = sigma[:-1]
        pt = self.aout[cs.call_node].get(caller, EMPTY)
        live = self.get_lin(cs.return_node, caller)
        return (pt, live)

    def is_rep(self, proc: str, sigma: CallString) -> bool:
        return self.rep[proc].get(sigma) == sigma

    # -- worklist --------------------------------------------------------

    def push(self, n: int, sigma: CallString) -> None:
        item = (n, sigma)
        if item in self._queued:
            return
        self._queued.add(item)
        prio = n if self._direction == FORWARD else -n
        heapq.heappush(self._queue, (prio, len(sigma), sigma, n))

    def push_proc(self, proc: str, sigma: CallString) -> None:
        for n in self.sg.proc_nodes(proc):
            self.push(n, sigma)

    def push_all(self) -> None:
        for proc, reps in self.rep.items():
            for sigma in sorted({r for r in reps.values()}, key=string_order):
                self.push_proc(proc, sigma)

    # -- string creation and partitioning ---------------------------------

    def ensure_string(self, proc: str, sigma: CallString) -> bool:
        if sigma in self.strings[proc]:
            return True
        if self.config.max_length is not None and len(sigma) > self.config.max_length:
            return False
        total = sum(len(s) for s in self.strings.values())
        if total >= self.config.max_strings:
            raise SolverLimitError("call string limit exceeded")
        self.strings[proc].add(sigma)
        self.repartition(proc)
        return True

    def repartition(self, proc: str) -> None:
        dirty = [proc]
        while dirty:
            q = dirty.pop()
            touched = self._repartition_one(q)
            for callee in sorted(self.callees[q]):
                if touched and callee not in dirty:
                    dirty.append(callee)

    def _repartition_one(self, q: str) -> bool:
        strings = self.strings[q]
        if self.config.representation:
            _, replog = represent({s: self.key(q, s) for s in strings})
        else:
            replog = {}
        new_rep = {s: replog.get(s, s) for s in strings}
        old_rep = self.rep[q]
        if new_rep == old_rep:
            return False
        sources: dict[CallString, list] = {}
        for s in strings:
            before, after = old_rep.get(s), new_rep[s]
            if before == after:
                continue
            if after == s and before is not None:
                # split off: continue from the values it was sharing
                sources.setdefault(s, []).append(before)
            elif before == s:
                # merged: its own values are valid for the shared key too
                sources.setdefault(after, []).append(s)
        tables = (self.lin, self.lout, self.ain, self.aout)
        updates = []
        for target, srcs in sources.items():
            for n in self.sg.proc_nodes(q):
                for table in tables:
                    acc = table[n].get(target)
                    for src in srcs:
                        val = table[n].get(src)
                        if val is not None:
                            acc = val if acc is None else acc | val
                    if acc is not None and acc != table[n].get(target):
                        updates.append((table, n, target, acc))
        for table, n, target, acc in updates:
            table[n][target] = acc
        if updates:
            self.changed = True
        self.rep[q] = new_rep
        for s in strings:
            if old_rep.get(s) != new_rep[s]:
                if new_rep[s] == s:
                    self.push_proc(q, s)
                else:
                    self.push(self.sg.start(q), new_rep[s])
                    self.push(self.sg.end(q), new_rep[s])
                if s:
                    cs = self.sg.sites[s[-1]]
                    caller = s[:-1]
                    if self.is_rep(cs.caller, caller):
                        self.push(cs.call_node, caller)
                        self.push(cs.return_node, caller)
        log.debug("repartition %s: %s", q,
                  {format_callstring(k): format_callstring(v) for k, v in new_rep.items()})
        return bool(updates)

    def class_of(self, proc: str, rep: CallString) -> list[CallString]:
        return sorted((s for s, r in self.rep[proc].items() if r == rep), key=string_order)

    # -- passes ---------------------------------------------------------

    def _set(self, table: dict, n: int, sigma: CallString, value: frozenset) -> bool:
        old = table[n].get(sigma)
        if old is None:
            table[n][sigma] = value
            self.changed = True
            return True
        if value <= old:
            return False
        table[n][sigma] = old | value
        self.changed = True
        return True

    def _note(self, analysis, edge, src, dst, callee_string, caller_string, value) -> None:
        if self.config.trace:
            self.trace.append(TraceRecord(analysis, edge, src, dst, callee_string,
                                          caller_string, hash(value)))

    def liveness_pass(self) -> None:
        self._direction = BACKWARD
        self._queue, self._queued = [], set()
        self.push_all()
        sg = self.sg
        while self._queue:
            _, _, sigma, n = heapq.heappop(self._queue)
            self._queued.discard((n, sigma))
            node = sg.nodes[n]
            proc = node.proc
            if not self.is_rep(proc, sigma):
                continue
            self.stats.liveness_steps += 1
            if self.stats.liveness_steps > self.config.max_steps:
                raise SolverLimitError("liveness step limit exceeded")
            if n == sg.end(proc):
                new_out = self.key(proc, sigma)[1]
            elif node.role == CALLNODE:
                cs = sg.sites[node.site]
                callee = cs.callee
                inner = sigma + (cs.site,)
                new_out = EMPTY
                if self.ensure_string(callee, inner):
                    r = self.rep[callee][inner]
                    new_out = self.lin[sg.start(callee)].get(r, EMPTY)
                    self._note("liveness", "call", sg.start(callee), n, inner, sigma, new_out)
            else:
                new_out = frozenset().union(*(self.lin[s].get(sigma, EMPTY) for s in sg.succ[n]))
            self._set(self.lout, n, sigma, new_out)
            lout = self.lout[n][sigma]
            new_in = transfer_liveness(node.stmt, lout, self.ain[n].get(sigma, EMPTY), self.dom)
            if not self._set(self.lin, n, sigma, new_in):
                continue
            for m in sg.pred[n]:
                self.push(m, sigma)
            if node.role == RETURN:
                cs = sg.sites[node.site]
                inner = extend_on_call(sigma, cs.site, BACKWARD)
                self._note("liveness", "return", n, sg.end(cs.callee), inner, sigma,
                           self.lin[n][sigma])
                if self.ensure_string(cs.callee, inner):
                    self.repartition(cs.callee)
                    self.push(sg.end(cs.callee), self.rep[cs.callee][inner])
            if n == sg.start(proc):
                if not sigma:
                    self.repartition(proc)
                for s in self.class_of(proc, sigma):
                    for cs in sg.sites_calling(proc):
                        outer = match_on_return(s, cs.site, BACKWARD)
                        if outer is BLOCKED:
                            continue
                        if self.is_rep(cs.caller, outer):
                            self.push(cs.call_node, outer)

    def points_to_pass(self) -> bool:
        """Returns True when eager mode interrupted the pass."""
        self._direction = FORWARD
        self._queue, self._queued = [], set()
        self.push_all()
        sg = self.sg
        while self._queue:
            _, _, sigma, n = heapq.heappop(self._queue)
            self._queued.discard((n, sigma))
            node = sg.nodes[n]
            proc = node.proc
            if not self.is_rep(proc, sigma):
                continue
            self.stats.points_to_steps += 1
            if self.stats.points_to_steps > self.config.max_steps:
                raise SolverLimitError("points-to step limit exceeded")
            lin = self.get_lin(n, sigma)
            if n == sg.start(proc):
                new_in = rel_restrict(self.key(proc, sigma)[0], lin)
            elif node.role == RETURN:
                cs = sg.sites[node.site]
                inner = sigma + (cs.site,)
                value = EMPTY
                r = self.rep[cs.callee].get(inner)
                if r is not None:
                    value = self.aout[sg.end(cs.callee)].get(r, EMPTY)
                new_in = rel_restrict(value, lin)
            else:
                acc: set = set()
                for m in sg.pred[n]:
                    acc |= self.aout[m].get(sigma, EMPTY)
                new_in = rel_restrict(acc, lin)
            first = (n, sigma) not in self._visited
            self._visited.add((n, sigma))
            grew_in = self._set(self.ain, n, sigma, new_in)
            ain = self.ain[n][sigma]
            new_out = transfer_points_to(node.stmt, ain, self.get_lout(n, sigma), self.dom)
            grew_out = self._set(self.aout, n, sigma, new_out)
            if self.config.eager and self.config.lazy and grew_in:
                live = transfer_liveness(node.stmt, self.get_lout(n, sigma), ain, self.dom)
                if not live <= self.get_lin(n, sigma):
                    self.stats.eager_restarts += 1
                    self.changed = True
                    return True
            if not (grew_out or first):
                continue
            for s in sg.succ[n]:
                self.push(s, sigma)
            if node.role == CALLNODE:
                cs = sg.sites[node.site]
                inner = extend_on_call(sigma, cs.site, FORWARD)
                self._note("points-to", "call", n, sg.start(cs.callee), inner, sigma,
                           self.aout[n][sigma])
                if self.ensure_string(cs.callee, inner):
                    self.repartition(cs.callee)
                    self.push(sg.start(cs.callee), self.rep[cs.callee][inner])
            if n == sg.end(proc):
                for s in self.class_of(proc, sigma):
                    for cs in sg.sites_calling(proc):
                        outer = match_on_return(s, cs.site, FORWARD)
                        if outer is BLOCKED:
                            continue
                        self._note("points-to", "return", n, cs.return_node, s, outer,
                                   self.aout[n][sigma])
                        if self.is_rep(cs.caller, outer):
                            self.push(cs.return_node, outer)
        return False

    # -- driver -------------------------------------------------------------

    def solve(self) -> InterprocResult:
        self.repartition("main")
        while True:
            self.stats.rounds += 1
            if self.stats.rounds > self.config.max_rounds:
                raise SolverLimitError("round limit exceeded")
            self.changed = False
            if self.config.lazy:
                t0 = time.perf_counter()
                self.liveness_pass()
                self.stats.liveness_time += time.perf_counter() - t0
            t0 = time.perf_counter()
            interrupted = self.points_to_pass()
            self.stats.points_to_time += time.perf_counter() - t0
            if self.config.record_rounds:
                contexts, merged, _ = self.collect()
                self.history.append(RoundSnapshot(self.stats.rounds, contexts, merged))
            if not self.changed and not interrupted:
                break
        contexts, merged, derivable = self.collect()
        max_strings = max((len(v) for v in derivable.values()), default=0)
        return InterprocResult(merged, contexts, derivable,
                               {p: dict(r) for p, r in self.rep.items()},
                               self.stats, max_strings, self.history, self.trace,
                               self.diagnostics)

    def derivable(self) -> dict[str, list[CallString]]:
        """Strings reachable from λ through representatives only."""
        sg = self.sg
        found: dict[str, set] = {p: set() for p in sg.procs}
        found["main"].add(LAMBDA)
        work = [("main", LAMBDA)]
        while work:
            proc, sigma = work.pop()
            r = self.rep[proc].get(sigma)
            if r is None:
                continue
            for cs in sg.sites.values():
                if cs.caller != proc:
                    continue
                inner = r + (cs.site,)
                if inner in self.strings[cs.callee] and inner not in found[cs.callee]:
                    found[cs.callee].add(inner)
                    work.append((cs.callee, inner))
        return {p: sorted(v, key=string_order) for p, v in found.items()}

    def collect(self):
        sg = self.sg
        derivable = self.derivable()
        contexts: dict[int, dict[CallString, NodeFacts]] = {}
        merged: dict[int, NodeFacts] = {}
        for proc, strings in derivable.items():
            for n in sg.proc_nodes(proc):
                per: dict[CallString, NodeFacts] = {}
                for s in strings:
                    r = self.rep[proc].get(s)
                    if r is None:
                        continue
                    lin = self.get_lin(n, r)
                    lout = self.get_lout(n, r)
                    per[s] = NodeFacts(lin, lout, self.ain[n].get(r, EMPTY),
                                       self.aout[n].get(r, EMPTY), bool(lin | lout))
                contexts[n] = per
                merged[n] = NodeFacts(
                    frozenset().union(*(f.lin for f in per.values())),
                    frozenset().union(*(f.lout for f in per.values())),
                    frozenset().union(*(f.ain for f in per.values())),
                    frozenset().union(*(f.aout for f in per.values())),
                    any(f.reached for f in per.values()))
        return contexts, merged, derivable


def interproc_solve(sg: Supergraph, dom: Domain,
                    config: Optional[EngineConfig] = None) -> InterprocResult:
    return InterprocSolver(sg, dom, config).solve()
