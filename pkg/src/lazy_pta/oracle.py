"""Bounded concrete interpreter used as ground truth for the analyses.

Every pointer starts out holding ``?``.  A load or store through ``?`` or
``null`` ends the execution (as a trap would), a load from a non-pointer
cell yields ``?`` and a store into one is ignored.  Executions are
enumerated exhaustively under two bounds: how often a node may be entered
within one activation, and how deep calls may nest.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional

from .lang import (ADDR, CALLNODE, COPY, LOAD, NULL, RETURN, STORE, UNDEF, LazyPtaError,
                   Program, Supergraph, build_supergraph)


class OracleLimitError(LazyPtaError):
    """The oracle's state budget was exhausted."""


@dataclass
class OracleResult:
    # node -> call stack -> pointer -> addresses held on entry
    by_context: dict[int, dict[tuple, dict[str, set]]]
    states: int = 0
    traps: int = 0
    pruned: int = 0
    sg: Optional[Supergraph] = field(default=None, repr=False)

    def at(self, node: int) -> dict[str, set]:
        merged: dict[str, set] = defaultdict(set)
        for env in self.by_context.get(node, {}).values():
            for x, vals in env.items():
                merged[x] |= vals
        return dict(merged)


def _dominated(seen: list, counts: tuple) -> bool:
    for other in seen:
        if all(a <= b for a, b in zip(other, counts)):
            return True
    return False


def oracle_enumerate(program: Program, branch_bound: int = 4, recursion_bound: int = 4,
                     max_states: int = 500_000, sg: Optional[Supergraph] = None,
                     start_nop: bool = True) -> OracleResult:
    """Run every execution within the bounds and record pointer values.

    The supergraph defaults to the interprocedural one; pass the graph an
    analysis used so that node ids agree.
    """
    if branch_bound < 1 or recursion_bound < 1:
        raise ValueError("bounds must be at least 1")
    if sg is None:
        sg = build_supergraph(program, start_nop=start_nop)
    P = program.P
    ptrs = sorted(P)
    index = {x: i for i, x in enumerate(ptrs)}
    nodes = sorted(sg.nodes)
    slot = {n: i for i, n in enumerate(nodes)}
    sites_of = {cs.call_node: cs for cs in sg.sites.values()}
    out: dict[int, dict[tuple, dict[str, set]]] = defaultdict(lambda: defaultdict(lambda: defaultdict(set)))
    seen: dict[tuple, list] = defaultdict(list)
    result = OracleResult({}, sg=sg)

    # state: node, env (tuple of values), stack of (site, counts), counts of
    # the current activation (tuple indexed by slot)
    zero = tuple(0 for _ in nodes)
    start = sg.start("main")
    work = [(start, tuple(UNDEF for _ in ptrs), (), zero)]
    while work:
        n, env, stack, counts = work.pop()
        if counts[slot[n]] >= branch_bound:
            result.pruned += 1
            continue
        counts = counts[:slot[n]] + (counts[slot[n]] + 1,) + counts[slot[n] + 1:]
        sites = tuple(s for s, _ in stack)
        flat = counts + tuple(c for _, cs in stack for c in cs)
        key = (n, env, sites)
        if _dominated(seen[key], flat):
            continue
        seen[key].append(flat)
        result.states += 1
        if result.states > max_states:
            raise OracleLimitError("oracle state limit exceeded")
        rec = out[n][sites]
        for x, v in zip(ptrs, env):
            rec[x].add(v)

        node = sg.nodes[n]
        stmt = node.stmt
        if node.role == CALLNODE:
            cs = sites_of[n]
            if len(stack) >= recursion_bound:
                result.pruned += 1
                continue
            work.append((sg.start(cs.callee), env, stack + ((cs.site, counts),), zero))
            continue
        if n == sg.end(node.proc) and stack:
            site, saved = stack[-1]
            cs = sg.sites[site]
            work.append((cs.return_node, env, stack[:-1], saved))
            continue
        k = stmt.kind
        if k == ADDR:
            env = env[:index[stmt.lhs]] + (stmt.rhs,) + env[index[stmt.lhs] + 1:]
        elif k == COPY:
            v = env[index[stmt.rhs]]
            env = env[:index[stmt.lhs]] + (v,) + env[index[stmt.lhs] + 1:]
        elif k == LOAD:
            t = env[index[stmt.rhs]]
            if t in (UNDEF, NULL):
                result.traps += 1
                continue
            v = env[index[t]] if t in index else UNDEF
            env = env[:index[stmt.lhs]] + (v,) + env[index[stmt.lhs] + 1:]
        elif k == STORE:
            t = env[index[stmt.lhs]]
            if t in (UNDEF, NULL):
                result.traps += 1
                continue
            if t in index:
                v = env[index[stmt.rhs]]
                env = env[:index[t]] + (v,) + env[index[t] + 1:]
        for s in sg.succ[n]:
            work.append((s, env, stack, counts))

    result.by_context = {n: {s: {x: set(v) for x, v in env.items()} for s, env in ctx.items()}
                         for n, ctx in out.items()}
    return result
