"""Seeded random programs and whole-program inlining for property tests."""

from __future__ import annotations

import os
import random
from dataclasses import dataclass, field
from typing import Optional

from .lang import (CALL, END, NOP, START, DoWhile, If, LazyPtaError, Procedure, Program, Simple,
                   Statement, While, format_program, parse_program)

SEED_ENV = "LAZY_PTA_SEED"

DEFAULT_WEIGHTS = {
    "addr": 4.0,
    "copy": 3.0,
    "load": 3.0,
    "store": 3.0,
    "use": 3.0,
    "null": 0.5,
    "call": 1.5,
    "if": 1.5,
    "while": 0.8,
    "do": 0.4,
}


@dataclass
class CorpusConfig:
    max_pointers: int = 6
    max_nonpointers: int = 2
    max_procs: int = 3
    max_statements: int = 25
    max_depth: int = 3
    init_prob: float = 0.6
    recursion: bool = True
    weights: dict = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))


def default_seed() -> int:
    return int(os.environ.get(SEED_ENV, "0"))


class _Gen:
    def __init__(self, rng: random.Random, config: CorpusConfig):
        self.rng = rng
        self.config = config
        n_ptr = rng.randint(1, config.max_pointers)
        n_var = rng.randint(0, config.max_nonpointers)
        self.pointers = ["p%d" % i for i in range(n_ptr)]
        self.nonpointers = ["v%d" % i for i in range(n_var)]
        n_proc = rng.randint(1, config.max_procs)
        self.procs = ["main"] + ["f%d" % i for i in range(1, n_proc)]
        self.budget = rng.randint(3, config.max_statements)
        self.kinds = list(config.weights)
        self.weights = [config.weights[k] for k in self.kinds]

    def callees(self, proc: str) -> list[str]:
        others = [p for p in self.procs if p != "main"]
        if self.config.recursion:
            return others
        # acyclic: a procedure only calls procedures listed after it
        idx = self.procs.index(proc)
        return [p for p in others if self.procs.index(p) > idx]

    def ptr(self) -> str:
        return self.rng.choice(self.pointers)

    def loc(self) -> str:
        return self.rng.choice(self.pointers + self.nonpointers)

    def body(self, proc: str, depth: int, limit: int) -> list:
        items: list = []
        for _ in range(limit):
            if self.budget <= 0:
                break
            kind = self.rng.choices(self.kinds, self.weights)[0]
            if kind in ("if", "while", "do"):
                if depth >= self.config.max_depth:
                    continue
                inner = self.body(proc, depth + 1, self.rng.randint(1, 4))
                if kind == "if":
                    orelse = self.body(proc, depth + 1, self.rng.randint(0, 3)) \
                        if self.rng.random() < 0.5 else []
                    items.append(If(inner, orelse))
                elif kind == "while":
                    items.append(While(inner))
                else:
                    items.append(DoWhile(inner))
                continue
            if kind == "call":
                targets = self.callees(proc)
                if not targets:
                    continue
                stmt = Statement(CALL, self.rng.choice(targets))
            elif kind == "addr":
                stmt = Statement("addr", self.ptr(), self.loc())
            elif kind == "null":
                stmt = Statement("addr", self.ptr(), "null")
            elif kind == "use":
                stmt = Statement("use", self.ptr())
            else:
                stmt = Statement(kind, self.ptr(), self.ptr())
            self.budget -= 1
            items.append(Simple(stmt, (proc, 0)))
        return items

    def prologue(self) -> list:
        """Initialise some pointers so that fewer runs trap immediately."""
        items = []
        for x in self.pointers:
            if self.budget > 1 and self.rng.random() < self.config.init_prob:
                items.append(Simple(Statement("addr", x, self.loc()), ("main", 0)))
                self.budget -= 1
        return items

    def program(self) -> Program:
        procs = {}
        init = self.prologue()
        share = max(1, self.budget // len(self.procs))
        for name in self.procs:
            body = self.body(name, 0, share + 2)
            procs[name] = Procedure(name, init + body if name == "main" else body)
        return Program(self.pointers, self.nonpointers, procs)


def generate_source(seed: int, config: Optional[CorpusConfig] = None) -> str:
    """Source text of one random program; identical for identical seeds."""
    gen = _Gen(random.Random(seed), config or CorpusConfig())
    return format_program(gen.program())


def generate_program(seed: int, config: Optional[CorpusConfig] = None) -> Program:
    return parse_program(generate_source(seed, config))


def generate_corpus(count: int, seed: Optional[int] = None,
                    config: Optional[CorpusConfig] = None) -> list[tuple[int, Program]]:
    """``count`` programs derived from a base seed (default: $LAZY_PTA_SEED)."""
    base = default_seed() if seed is None else seed
    master = random.Random(base)
    out = []
    for _ in range(count):
        s = master.randrange(2 ** 32)
        out.append((s, generate_program(s, config)))
    return out


# ------------------------------------------------------------------ inlining

def _marker(tag: tuple) -> Simple:
    return Simple(Statement(NOP), tag)


def inline_program(program: Program) -> Program:
    """Replace every call by the callee's body, recursively.

    No-op markers tagged like the supergraph's call, Start, End and return
    nodes are kept so that results can be mapped back node by node.
    """
    if program.is_recursive():
        raise LazyPtaError("cannot inline a recursive program")

    def expand(items: list) -> list:
        out = []
        for it in items:
            if isinstance(it, Simple) and it.stmt.kind == CALL:
                callee = it.stmt.lhs
                out.append(_marker(it.tag + ("call",)))
                out.append(_marker((callee, START)))
                out.extend(expand(program.procedures[callee].body))
                out.append(_marker((callee, END)))
                out.append(_marker(it.tag + ("ret",)))
            elif isinstance(it, Simple):
                out.append(it)
            elif isinstance(it, If):
                out.append(If(expand(it.then), expand(it.orelse)))
            elif isinstance(it, While):
                out.append(While(expand(it.body)))
            elif isinstance(it, DoWhile):
                out.append(DoWhile(expand(it.body)))
        return out

    main = Procedure("main", expand(program.procedures["main"].body))
    return Program(list(program.pointers), list(program.nonpointers), {"main": main})
