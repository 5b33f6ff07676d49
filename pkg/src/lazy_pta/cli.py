"""Command line entry point: ``lazy-pta PROGRAM.pt [options]``.

Exit status: 0 on success, 2 when the input cannot be read or parsed, 1
when an analysis cannot run (or a golden comparison fails), 3 when
``--strict-sanity`` is given and the sanity check reports a store.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from typing import Optional

from .analyses import (AnalysisError, Options, run_andersen, run_conventional_may, run_lpta,
                       run_spta, sanity_check)
from .corpus import generate_source
from .dataflow import SolverLimitError
from .lang import LazyPtaError, build_supergraph, parse_program
from .oracle import OracleLimitError, oracle_enumerate
from .report import (DEFAULT_DUMPS, DUMPS, andersen_to_dict, compare_golden, emit_dot,
                     emit_text, result_to_dict)
from .verify import sufficiency_violations

log = logging.getLogger("lazy_pta")

ANALYSES = ("lpta", "spta", "conventional", "andersen", "all")


@dataclass
class RunConfig:
    path: str
    analysis: str = "lpta"
    mode: Optional[str] = None
    dumps: tuple = DEFAULT_DUMPS
    format: str = "text"
    eager: bool = False
    undef_seed: bool = True
    oracle_bounds: Optional[tuple[int, int]] = None
    strict_sanity: bool = False
    timings: bool = False
    output: Optional[str] = None
    golden: Optional[str] = None
    extra: dict = field(default_factory=dict)


def _bounds(text: str) -> tuple[int, int]:
    try:
        b, r = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected BRANCH,RECURSION, e.g. 4,4")
    if b < 1 or r < 1:
        raise argparse.ArgumentTypeError("bounds must be at least 1")
    return b, r


def _dumps(text: str) -> tuple:
    items = tuple(x.strip() for x in text.split(",") if x.strip())
    bad = [x for x in items if x not in DUMPS]
    if bad:
        raise argparse.ArgumentTypeError("unknown dump %s (choose from %s)"
                                         % (", ".join(bad), ", ".join(DUMPS)))
    return items


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lazy-pta", description=__doc__.splitlines()[0])
    ap.add_argument("input", nargs="?", help="program file (.pt)")
    ap.add_argument("--analysis", choices=ANALYSES, default="lpta")
    ap.add_argument("--mode", choices=("intra", "inter"),
                    help="default: intra for one procedure, inter otherwise")
    ap.add_argument("--dump", type=_dumps, default=DEFAULT_DUMPS,
                    help="comma separated subset of: " + ",".join(DUMPS))
    ap.add_argument("--format", choices=("text", "json", "dot"), default="text")
    ap.add_argument("--eager", action="store_true",
                    help="restart liveness as soon as a points-to change affects it")
    ap.add_argument("--no-undef-seed", action="store_true",
                    help="do not seed live pointers with ? at program entry")
    ap.add_argument("--oracle-bounds", type=_bounds, metavar="B,R",
                    help="also run the bounded concrete oracle and check sufficiency")
    ap.add_argument("--strict-sanity", action="store_true",
                    help="exit 3 when the sanity check flags a store")
    ap.add_argument("--timings", action="store_true", help="include wall times in metrics")
    ap.add_argument("--golden", help="compare JSON output with this file")
    ap.add_argument("-o", "--output", help="write the report here instead of stdout")
    ap.add_argument("--generate", type=int, metavar="SEED",
                    help="print a random corpus program for SEED and exit")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _options(cfg: RunConfig) -> Options:
    inter = None if cfg.mode is None else cfg.mode == "inter"
    return Options(interprocedural=inter, eager=cfg.eager, undef_seed=cfg.undef_seed)


def run(cfg: RunConfig, out, err) -> int:
    try:
        with open(cfg.path, encoding="utf-8") as fh:
            source = fh.read()
    except OSError as e:
        print("lazy-pta: cannot read %s: %s" % (cfg.path, e.strerror), file=err)
        return 2
    try:
        program = parse_program(source)
        build_supergraph(program)
    except LazyPtaError as e:
        print("lazy-pta: %s: %s" % (cfg.path, e), file=err)
        return 2

    names = ["lpta", "spta", "conventional", "andersen"] if cfg.analysis == "all" \
        else [cfg.analysis]
    if cfg.analysis == "all" and len(program.procedures) > 1:
        names.remove("conventional")
    results = []
    sanity_failed = False
    try:
        for name in names:
            if name == "andersen":
                results.append(("andersen", run_andersen(program)))
                continue
            if name == "conventional":
                if cfg.mode == "inter":
                    raise AnalysisError("the conventional analysis requires --mode=intra")
                res = run_conventional_may(program)
            elif name == "lpta":
                res = run_lpta(program, _options(cfg))
            else:
                res = run_spta(program, _options(cfg))
            results.append((name, res))
            if name == "lpta":
                report = sanity_check(program, res)
                for n, text in report.findings:
                    print("lazy-pta: sanity: node %d: store '%s' has no defined target"
                          % (n, text), file=err)
                sanity_failed |= not report.ok
                if cfg.oracle_bounds:
                    o = oracle_enumerate(program, *cfg.oracle_bounds, sg=res.sg)
                    bad = sufficiency_violations(res, o)
                    print("lazy-pta: oracle: %d states, %d violations"
                          % (o.states, len(bad)), file=err)
                    for v in bad[:20]:
                        print("lazy-pta: oracle: %s" % (v,), file=err)
                    if bad:
                        return 1
    except (AnalysisError, SolverLimitError, OracleLimitError) as e:
        print("lazy-pta: %s" % e, file=err)
        return 1

    text = _render(cfg, results)
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        out.write(text)

    if cfg.golden:
        with open(cfg.golden, encoding="utf-8") as fh:
            golden = fh.read()
        mine = json.dumps(_json_payload(cfg, results[0]))
        diffs = compare_golden(mine, golden)
        for d in diffs:
            print("lazy-pta: golden: %s" % d, file=err)
        if diffs:
            return 1
    if cfg.strict_sanity and sanity_failed:
        return 3
    return 0


def _json_payload(cfg: RunConfig, item) -> dict:
    name, res = item
    if name == "andersen":
        return andersen_to_dict(res, cfg.path)
    return result_to_dict(res, cfg.dumps, cfg.path, timings=cfg.timings)


def _render(cfg: RunConfig, results: list) -> str:
    if cfg.format == "json":
        payload = [_json_payload(cfg, r) for r in results]
        data = payload[0] if len(payload) == 1 else {"program": cfg.path, "results": payload}
        return json.dumps(data, indent=2, ensure_ascii=False) + "\n"
    if cfg.format == "dot":
        for name, res in results:
            if name != "andersen":
                return emit_dot(res.sg, res, cfg.dumps)
        program = parse_program(open(cfg.path, encoding="utf-8").read())
        return emit_dot(build_supergraph(program))
    chunks = []
    for name, res in results:
        if name == "andersen":
            chunks.append("analysis andersen (flow-insensitive)\n  " +
                          ", ".join("(%s,%s)" % p for p in sorted(res)) + "\n")
        else:
            dumps = cfg.dumps
            text = emit_text(res, dumps)
            if not cfg.timings:
                text = "\n".join(l for l in text.splitlines() if "_time:" not in l) + "\n"
            chunks.append(text)
    return "\n".join(chunks)


def main(argv: Optional[list[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code else 0
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    if args.generate is not None:
        sys.stdout.write(generate_source(args.generate))
        return 0
    if not args.input:
        ap.print_usage(sys.stderr)
        return 2
    cfg = RunConfig(path=args.input, analysis=args.analysis, mode=args.mode, dumps=args.dump,
                    format=args.format, eager=args.eager, undef_seed=not args.no_undef_seed,
                    oracle_bounds=args.oracle_bounds, strict_sanity=args.strict_sanity,
                    timings=args.timings, output=args.output, golden=args.golden)
    return run(cfg, sys.stdout, sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
