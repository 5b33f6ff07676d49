"""Pointer language front end: parser, statements, CFGs and the supergraph.

The input language has global `ptr`/`var` declarations followed by
parameterless procedures.  Statements are the canonical pointer forms
(``x = &a``, ``x = y``, ``x = *y``, ``*x = y``), ``use x`` (``print x`` is
sugar), ``x = null`` and calls ``p();``.  Control flow is structured and
nondeterministic: ``if (*) {..} else {..}``, ``while (*) {..}`` and
``do {..} while (*);``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Union

UNDEF = "?"
NULL = "null"

ADDR = "addr"
COPY = "copy"
LOAD = "load"
STORE = "store"
USE = "use"
CALL = "call"
NOP = "nop"

STATEMENT_KINDS = (ADDR, COPY, LOAD, STORE, USE, CALL, NOP)

KEYWORDS = {"ptr", "var", "proc", "if", "else", "while", "do", "use", "print", "null"}


class LazyPtaError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(LazyPtaError):
    """Syntax or declaration error in a source program."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        if line:
            message = "%d:%d: %s" % (line, col, message)
        super().__init__(message)


class UndeclaredIdentifier(ParseError):
    def __init__(self, name: str, line: int = 0, col: int = 0):
        self.name = name
        super().__init__("undeclared identifier '%s'" % name, line, col)


class CfgError(LazyPtaError):
    """A procedure body violates a CFG invariant."""


@dataclass(frozen=True)
class Statement:
    kind: str
    lhs: Optional[str] = None
    rhs: Optional[str] = None

    def __str__(self) -> str:
        k = self.kind
        if k == ADDR:
            if self.rhs == NULL:
                return "%s = null" % self.lhs
            return "%s = &%s" % (self.lhs, self.rhs)
        if k == COPY:
            return "%s = %s" % (self.lhs, self.rhs)
        if k == LOAD:
            return "%s = *%s" % (self.lhs, self.rhs)
        if k == STORE:
            return "*%s = %s" % (self.lhs, self.rhs)
        if k == USE:
            return "use %s" % self.lhs
        if k == CALL:
            return "%s()" % self.lhs
        return "nop"

    def pointer_operands(self) -> tuple[str, ...]:
        """Operands that must be declared ``ptr``."""
        if self.kind in (ADDR, USE):
            return (self.lhs,)
        if self.kind in (COPY, LOAD, STORE):
            return (self.lhs, self.rhs)
        return ()


NOP_STMT = Statement(NOP)


# AST for structured bodies.  Every simple statement carries a tag that
# survives inlining so that inlined copies can be mapped back.

@dataclass
class Simple:
    stmt: Statement
    tag: tuple
    line: int = 0


@dataclass
class If:
    then: list
    orelse: list


@dataclass
class While:
    body: list


@dataclass
class DoWhile:
    body: list


Item = Union[Simple, If, While, DoWhile]


@dataclass
class Procedure:
    name: str
    body: list


@dataclass
class Program:
    pointers: list[str]
    nonpointers: list[str]
    procedures: dict[str, Procedure]

    @property
    def P(self) -> frozenset[str]:
        return frozenset(self.pointers)

    @property
    def V(self) -> frozenset[str]:
        return frozenset(self.pointers) | frozenset(self.nonpointers) | {UNDEF, NULL}

    def call_sites(self) -> int:
        return sum(1 for p in self.procedures.values()
                   for it in walk_items(p.body)
                   if isinstance(it, Simple) and it.stmt.kind == CALL)

    def is_recursive(self) -> bool:
        graph = {name: {it.stmt.lhs for it in walk_items(p.body)
                        if isinstance(it, Simple) and it.stmt.kind == CALL}
                 for name, p in self.procedures.items()}
        state: dict[str, int] = {}

        def visit(n: str) -> bool:
            state[n] = 1
            for m in sorted(graph[n]):
                if state.get(m) == 1:
                    return True
                if m not in state and visit(m):
                    return True
            state[n] = 2
            return False

        return any(visit(n) for n in sorted(graph) if n not in state)


def walk_items(items: Iterable[Item]) -> Iterator[Item]:
    for it in items:
        yield it
        if isinstance(it, If):
            yield from walk_items(it.then)
            yield from walk_items(it.orelse)
        elif isinstance(it, (While, DoWhile)):
            yield from walk_items(it.body)


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[;,(){}=&*])
""", re.VERBOSE)


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise ParseError("unexpected character %r" % source[pos], line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind in ("id", "punct"):
            tokens.append(Token(kind, m.group(), line, m.start() - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class Parser:
    def __init__(self, source: str):
        self.tokens = tokenize(source)
        self.pos = 0
        self.pointers: list[str] = []
        self.nonpointers: list[str] = []
        self.procedures: dict[str, Procedure] = {}
        self.calls: list[tuple[str, Token]] = []
        self._counter = 0
        self._proc = ""

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.peek()
        self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.advance()
        if tok.text != text or tok.kind == "eof":
            raise ParseError("expected '%s' but found '%s'" % (text, tok.text or "end of input"),
                             tok.line, tok.col)
        return tok

    def ident(self) -> Token:
        tok = self.advance()
        if tok.kind != "id" or tok.text in KEYWORDS:
            raise ParseError("expected identifier but found '%s'" % (tok.text or "end of input"),
                             tok.line, tok.col)
        return tok

    def parse(self) -> Program:
        declared: set[str] = set()
        while self.peek().text in ("ptr", "var"):
            kind = self.advance().text
            while True:
                tok = self.ident()
                if tok.text in declared:
                    raise ParseError("duplicate declaration of '%s'" % tok.text, tok.line, tok.col)
                declared.add(tok.text)
                (self.pointers if kind == "ptr" else self.nonpointers).append(tok.text)
                if self.peek().text == ",":
                    self.advance()
                    continue
                break
            self.expect(";")
        while self.peek().kind != "eof":
            tok = self.peek()
            if tok.text != "proc":
                raise ParseError("expected 'proc' but found '%s'" % tok.text, tok.line, tok.col)
            self.advance()
            name = self.ident()
            if name.text in self.procedures:
                raise ParseError("duplicate procedure '%s'" % name.text, name.line, name.col)
            if name.text in declared:
                raise ParseError("procedure '%s' clashes with a variable" % name.text,
                                 name.line, name.col)
            if self.peek().text == "(":
                self.advance()
                self.expect(")")
            self._proc = name.text
            self._counter = 0
            body = self.block()
            self.procedures[name.text] = Procedure(name.text, body)
        if "main" not in self.procedures:
            tok = self.peek()
            raise ParseError("missing procedure 'main'", tok.line, tok.col)
        for callee, tok in self.calls:
            if callee not in self.procedures:
                raise ParseError("call to undefined procedure '%s'" % callee, tok.line, tok.col)
        return Program(list(self.pointers), list(self.nonpointers), self.procedures)

    def block(self) -> list:
        self.expect("{")
        items = []
        while self.peek().text != "}":
            if self.peek().kind == "eof":
                tok = self.peek()
                raise ParseError("unexpected end of input", tok.line, tok.col)
            items.extend(self.item())
        self.expect("}")
        return items

    def _simple(self, stmt: Statement, tok: Token) -> Simple:
        self._counter += 1
        return Simple(stmt, (self._proc, self._counter), tok.line)

    def item(self) -> list:
        tok = self.peek()
        if tok.text == ";":
            self.advance()
            return []
        if tok.text == "if":
            self.advance()
            self.nondet()
            then = self.block()
            orelse = []
            if self.peek().text == "else":
                self.advance()
                if self.peek().text == "if":
                    orelse = self.item()
                else:
                    orelse = self.block()
            return [If(then, orelse)]
        if tok.text == "while":
            self.advance()
            self.nondet()
            return [While(self.block())]
        if tok.text == "do":
            self.advance()
            body = self.block()
            self.expect("while")
            self.nondet()
            self.expect(";")
            return [DoWhile(body)]
        stmt = self.statement()
        self.expect(";")
        return [self._simple(stmt, tok)]

    def nondet(self) -> None:
        self.expect("(")
        self.expect("*")
        self.expect(")")

    def var(self, pointer: bool) -> str:
        tok = self.ident()
        name = tok.text
        if name not in self.pointers and name not in self.nonpointers:
            raise UndeclaredIdentifier(name, tok.line, tok.col)
        if pointer and name not in self.pointers:
            raise ParseError("'%s' is used as a pointer but not declared ptr" % name,
                             tok.line, tok.col)
        return name

    def statement(self) -> Statement:
        tok = self.peek()
        if tok.text in ("use", "print"):
            self.advance()
            return Statement(USE, self.var(True))
        if tok.text == "*":
            self.advance()
            lhs = self.var(True)
            self.expect("=")
            if self.peek().text in ("*", "&"):
                bad = self.peek()
                raise ParseError("only 'x' may appear on the right of a store", bad.line, bad.col)
            return Statement(STORE, lhs, self.var(True))
        if tok.kind == "id" and self.peek(1).text == "(":
            name = self.ident()
            self.expect("(")
            self.expect(")")
            self.calls.append((name.text, name))
            return Statement(CALL, name.text)
        lhs = self.var(True)
        self.expect("=")
        nxt = self.peek()
        if nxt.text == "&":
            self.advance()
            return Statement(ADDR, lhs, self.var(False))
        if nxt.text == "*":
            self.advance()
            if self.peek().text in ("*", "&"):
                bad = self.peek()
                raise ParseError("multi-level dereference is not supported", bad.line, bad.col)
            return Statement(LOAD, lhs, self.var(True))
        if nxt.text == "null":
            self.advance()
            return Statement(ADDR, lhs, NULL)
        return Statement(COPY, lhs, self.var(True))


def parse_program(source: str) -> Program:
    """Parse source text into a Program.  Raises ParseError."""
    return Parser(source).parse()


# ---------------------------------------------------------- pretty printing

def _format_items(items: list, indent: int) -> Iterator[str]:
    pad = "    " * indent
    for it in items:
        if isinstance(it, Simple):
            if it.stmt.kind == NOP:
                continue
            yield pad + str(it.stmt) + ";"
        elif isinstance(it, If):
            yield pad + "if (*) {"
            yield from _format_items(it.then, indent + 1)
            if it.orelse:
                yield pad + "} else {"
                yield from _format_items(it.orelse, indent + 1)
            yield pad + "}"
        elif isinstance(it, While):
            yield pad + "while (*) {"
            yield from _format_items(it.body, indent + 1)
            yield pad + "}"
        elif isinstance(it, DoWhile):
            yield pad + "do {"
            yield from _format_items(it.body, indent + 1)
            yield pad + "} while (*);"


def format_program(program: Program) -> str:
    """Render a program in canonical concrete syntax."""
    lines = []
    if program.pointers:
        lines.append("ptr %s;" % ", ".join(program.pointers))
    if program.nonpointers:
        lines.append("var %s;" % ", ".join(program.nonpointers))
    for proc in program.procedures.values():
        lines.append("")
        lines.append("proc %s() {" % proc.name)
        lines.extend(_format_items(proc.body, 1))
        lines.append("}")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------- CFGs

START = "start"
END = "end"
STMT = "stmt"
CALLNODE = "call"
RETURN = "return"


@dataclass
class Node:
    id: int
    proc: str
    stmt: Statement
    role: str
    tag: tuple
    site: Optional[int] = None
    callee: Optional[str] = None
    line: int = 0

    def label(self) -> str:
        if self.role == START:
            return "Start_%s" % self.proc
        if self.role == END:
            return "End_%s" % self.proc
        if self.role == CALLNODE:
            return "c%d: call %s" % (self.site, self.callee)
        if self.role == RETURN:
            return "r%d: return %s" % (self.site, self.callee)
        return str(self.stmt)


@dataclass
class Cfg:
    """Intraprocedural flow graph of one procedure.

    Call statements become a call node and a return node joined by a
    pseudo edge recorded in ``call_pairs``; the pseudo edge is listed in
    ``succ`` only when the graph is used on its own (calls as no-ops).
    """
    proc: str
    nodes: dict[int, Node]
    succ: dict[int, list[int]]
    pred: dict[int, list[int]]
    start: int
    end: int
    call_pairs: list[tuple[int, int]] = field(default_factory=list)

    def rpo(self) -> list[int]:
        return sorted(self.nodes)

    def edges(self) -> list[tuple[int, int]]:
        return [(m, n) for m in sorted(self.succ) for n in self.succ[m]]


class _Builder:
    """Lower structured items to a graph, using epsilon nodes for joins."""

    def __init__(self, proc: str):
        self.proc = proc
        self.info: dict[int, tuple] = {}
        self.succ: dict[int, list[int]] = {}
        self.eps: set[int] = set()
        self.next_id = 0
        self.pseudo: list[tuple[int, int]] = []

    def new(self, info: Optional[tuple]) -> int:
        k = self.next_id
        self.next_id += 1
        self.succ[k] = []
        if info is None:
            self.eps.add(k)
        else:
            self.info[k] = info
        return k

    def link(self, srcs: Iterable[int], dst: int) -> None:
        for s in srcs:
            if dst not in self.succ[s]:
                self.succ[s].append(dst)

    def lower(self, items: list, preds: list[int]) -> list[int]:
        for it in items:
            if isinstance(it, Simple):
                if it.stmt.kind == CALL:
                    c = self.new((CALLNODE, it.stmt, it.tag, it.line))
                    r = self.new((RETURN, it.stmt, it.tag, it.line))
                    self.link(preds, c)
                    self.link([c], r)
                    self.pseudo.append((c, r))
                    preds = [r]
                else:
                    n = self.new((STMT, it.stmt, it.tag, it.line))
                    self.link(preds, n)
                    preds = [n]
            elif isinstance(it, If):
                fork = self.new(None)
                self.link(preds, fork)
                then_exit = self.lower(it.then, [fork])
                else_exit = self.lower(it.orelse, [fork])
                join = self.new(None)
                self.link(then_exit, join)
                self.link(else_exit, join)
                preds = [join]
            elif isinstance(it, While):
                head = self.new(None)
                self.link(preds, head)
                body_exit = self.lower(it.body, [head])
                self.link(body_exit, head)
                out = self.new(None)
                self.link([head], out)
                preds = [out]
            elif isinstance(it, DoWhile):
                head = self.new(None)
                self.link(preds, head)
                body_exit = self.lower(it.body, [head])
                latch = self.new(None)
                self.link(body_exit, latch)
                self.link([latch], head)
                out = self.new(None)
                self.link([latch], out)
                preds = [out]
        return preds

    def real_succ(self, k: int) -> list[int]:
        """Successors of k with epsilon nodes skipped, order preserved."""
        out: list[int] = []
        seen: set[int] = set()
        stack = list(reversed(self.succ[k]))
        while stack:
            m = stack.pop()
            if m in seen:
                continue
            seen.add(m)
            if m in self.eps:
                stack.extend(reversed(self.succ[m]))
            elif m not in out:
                out.append(m)
        return out


def _first_is_plain(items: list) -> bool:
    return bool(items) and isinstance(items[0], Simple) and items[0].stmt.kind != CALL


def build_cfg(proc: Procedure, start_nop: bool = True, first_id: int = 1) -> Cfg:
    """Build the CFG of one procedure with reverse post-order node ids.

    With ``start_nop=False`` a leading plain statement serves as the entry
    node instead of a separate Start no-op (the shape of hand-drawn
    single-procedure examples).  The End node is always a no-op.
    """
    b = _Builder(proc.name)
    items = list(proc.body)
    if not start_nop and _first_is_plain(items):
        first = items.pop(0)
        entry = b.new((START, first.stmt, first.tag, first.line))
    else:
        entry = b.new((START, NOP_STMT, (proc.name, START), 0))
    exits = b.lower(items, [entry])
    end = b.new((END, NOP_STMT, (proc.name, END), 0))
    b.link(exits, end)

    real = [k for k in range(b.next_id) if k not in b.eps]
    rsucc = {k: b.real_succ(k) for k in real}

    # Reverse post-order; successors are explored last-first so that the
    # first branch of a fork receives the smaller number.
    order: list[int] = []
    visited: set[int] = set()
    stack: list[tuple[int, Iterator[int]]] = []
    visited.add(entry)
    stack.append((entry, iter(list(reversed(rsucc[entry])))))
    while stack:
        k, it = stack[-1]
        nxt = next(it, None)
        if nxt is None:
            stack.pop()
            order.append(k)
        elif nxt not in visited:
            visited.add(nxt)
            stack.append((nxt, iter(list(reversed(rsucc[nxt])))))
    order.reverse()
    unreachable = [k for k in real if k not in visited]
    if unreachable:
        raise CfgError("procedure %s: %d unreachable statement(s)" % (proc.name, len(unreachable)))
    ids = {k: first_id + i for i, k in enumerate(order)}

    nodes: dict[int, Node] = {}
    for k in order:
        role, stmt, tag, line = b.info[k]
        if k == entry and stmt.kind != NOP:
            role = STMT
        callee = stmt.lhs if role in (CALLNODE, RETURN) else None
        node_stmt = NOP_STMT if role in (CALLNODE, RETURN) else stmt
        if role == CALLNODE:
            tag = tag + ("call",)
        elif role == RETURN:
            tag = tag + ("ret",)
        nodes[ids[k]] = Node(ids[k], proc.name, node_stmt, role, tag, callee=callee, line=line)
    succ = {ids[k]: [ids[m] for m in rsucc[k]] for k in order}
    pred: dict[int, list[int]] = {n: [] for n in nodes}
    for m in sorted(succ):
        for n in succ[m]:
            pred[n].append(m)
    for n in pred:
        pred[n].sort()
    cfg = Cfg(proc.name, nodes, succ, pred, ids[entry], ids[end],
              [(ids[c], ids[r]) for c, r in b.pseudo])
    _check_cfg(cfg)
    return cfg


def _check_cfg(cfg: Cfg) -> None:
    if cfg.pred[cfg.start]:
        raise CfgError("procedure %s: entry node has a predecessor" % cfg.proc)
    if cfg.succ[cfg.end]:
        raise CfgError("procedure %s: exit node has a successor" % cfg.proc)
    seen = {cfg.end}
    work = [cfg.end]
    while work:
        n = work.pop()
        for m in cfg.pred[n]:
            if m not in seen:
                seen.add(m)
                work.append(m)
    if len(seen) != len(cfg.nodes):
        raise CfgError("procedure %s: exit is unreachable from some node" % cfg.proc)


@dataclass
class CallSite:
    site: int
    caller: str
    callee: str
    call_node: int
    return_node: int


@dataclass
class Supergraph:
    """All procedure CFGs with call and return edges.

    ``succ``/``pred`` hold intraprocedural edges only; the call-to-return
    pseudo edges are not data flow edges and are omitted.
    """
    program: Program
    nodes: dict[int, Node]
    succ: dict[int, list[int]]
    pred: dict[int, list[int]]
    procs: dict[str, Cfg]
    sites: dict[int, CallSite]
    pointers: frozenset[str]
    locations: frozenset[str]

    def start(self, proc: str) -> int:
        return self.procs[proc].start

    def end(self, proc: str) -> int:
        return self.procs[proc].end

    def proc_nodes(self, proc: str) -> list[int]:
        return sorted(self.procs[proc].nodes)

    def call_edges(self) -> list[tuple[int, int]]:
        return [(cs.call_node, self.start(cs.callee)) for cs in self.sites.values()]

    def return_edges(self) -> list[tuple[int, int]]:
        return [(self.end(cs.callee), cs.return_node) for cs in self.sites.values()]

    def site_at(self, node: int) -> Optional[CallSite]:
        site = self.nodes[node].site
        return self.sites[site] if site is not None else None

    def sites_calling(self, proc: str) -> list[CallSite]:
        return [cs for cs in self.sites.values() if cs.callee == proc]


def build_supergraph(program: Program, start_nop: bool = True) -> Supergraph:
    """Join all CFGs; main is numbered first, then procedures in source order.

    ``start_nop=False`` is only honoured for single-procedure programs,
    which are then analysed as a plain CFG.
    """
    order = ["main"] + [p for p in program.procedures if p != "main"]
    if len(order) > 1:
        start_nop = True
    procs: dict[str, Cfg] = {}
    nodes: dict[int, Node] = {}
    succ: dict[int, list[int]] = {}
    pred: dict[int, list[int]] = {}
    next_id = 1
    for name in order:
        cfg = build_cfg(program.procedures[name], start_nop=start_nop, first_id=next_id)
        procs[name] = cfg
        next_id += len(cfg.nodes)
        nodes.update(cfg.nodes)
        pseudo = set(cfg.call_pairs)
        for m, outs in cfg.succ.items():
            succ[m] = [n for n in outs if (m, n) not in pseudo]
        for n, ins in cfg.pred.items():
            pred[n] = [m for m in ins if (m, n) not in pseudo]
    sites: dict[int, CallSite] = {}
    for cfg in procs.values():
        for c, r in sorted(cfg.call_pairs):
            s = len(sites) + 1
            callee = nodes[c].callee
            nodes[c].site = s
            nodes[r].site = s
            sites[s] = CallSite(s, cfg.proc, callee, c, r)
    # Sites are numbered by call node id, which follows the global numbering.
    renum = {old: i + 1 for i, old in enumerate(sorted(sites, key=lambda s: sites[s].call_node))}
    sites = {renum[s]: CallSite(renum[s], cs.caller, cs.callee, cs.call_node, cs.return_node)
             for s, cs in sites.items()}
    for cs in sites.values():
        nodes[cs.call_node].site = cs.site
        nodes[cs.return_node].site = cs.site
    return Supergraph(program, nodes, succ, pred, procs, sites, program.P, program.V)
