"""
Command line: ``rhopol parse|run|reduce|check|bisim|translate``.

Exit codes: 0 Holds / Equivalent / success, 1 Fails / Distinguished,
2 Unknown, 64 usage, 65 bad input (parse or unsupported construct),
66 unreadable file, 70 internal error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .bisim import bisim, default_observable, observable
from .nsl import parse_formula
from .nslogic import CheckContext, FormulaError, check, default_universe, pretty_formula
from .ocapjs import JsError, translate_source
from .parser import ParseError, Parser, parse_proc
from .reduction import explore, run, successors
from .sugar import DesugarError, SBlock, SQuote, desugar
from .syntax import Quote, Var, canonical_name, canonicalize, pretty, pretty_name

EX_USAGE, EX_DATAERR, EX_NOINPUT, EX_SOFTWARE = 64, 65, 66, 70


class UsageError(Exception):
    pass


class InputError(Exception):
    """Malformed input file; the message carries ``path:line:col``."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _read(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise FileNotFoundError(f"{path}: {e.strerror}") from None


def _load_proc(path):
    try:
        return parse_proc(_read(path))
    except (ParseError, DesugarError) as e:
        raise InputError(f"{path}:{e}") from None


def _name(text):
    """A name written in surface syntax: an identifier or ``@...``."""
    p = Parser(text)
    n = p.name()
    p.skip_nl()
    if p.tok.kind != "eof":
        raise UsageError(f"not a single name: {text!r}")
    if isinstance(n, SQuote):
        return canonical_name(Quote(desugar(SBlock((n.proc,)))))
    return Var(n.ident)


def _env_suite(path):
    """Processes separated by lines consisting of ``---``."""
    blocks, cur = [], []
    for line in _read(path).splitlines():
        if line.strip() == "---":
            blocks.append("\n".join(cur))
            cur = []
        else:
            cur.append(line)
    blocks.append("\n".join(cur))
    try:
        return tuple(parse_proc(b) for b in blocks if b.strip())
    except (ParseError, DesugarError) as e:
        raise InputError(f"{path}:{e}") from None


class _Out:
    def __init__(self, fmt, schema, stream):
        self.structured = fmt == "structured"
        self.stream = stream
        if self.structured:
            self.record({"schema": schema, "version": __version__})

    def record(self, rec):
        self.stream.write(json.dumps(rec, sort_keys=True) + "\n")

    def text(self, line):
        if not self.structured:
            self.stream.write(line + "\n")


def _cmd_parse(args, out):
    p = _load_proc(args.file)
    c = canonicalize(p)
    o = _Out(args.format, "rhopol.parse/1", out)
    o.record({"canonical": pretty(c)}) if o.structured else o.text(pretty(c))
    return 0


def _cmd_run(args, out):
    p = _load_proc(args.proc)
    trace = run(p, seed=args.seed, max_steps=args.max_steps)
    if args.format == "structured":
        out.write(trace.to_jsonl())
        return 0
    out.write(f"seed {trace.seed}: {len(trace.steps)} step(s), "
              f"{'terminated' if trace.terminated else 'stopped at max-steps'}\n")
    for rec in trace.records():
        out.write(f"{rec['step']:>4}  on {rec['channel']}:  {rec['state']}\n")
    out.write(f"final: {pretty(trace.final)}\n")
    return 0


def _cmd_reduce(args, out):
    p = _load_proc(args.proc)
    space = explore(p, args.depth, args.max_states)
    terminal = [s for s in space.states if not successors(s)]
    o = _Out(args.format, "rhopol.reduce/1", out)
    summary = {"states": len(space), "truncated": space.truncated, "depth": args.depth,
               "levels": space.level_sizes(), "terminal": len(terminal),
               "frontier": len(space.frontier)}
    if args.figure:
        from .report import plot_levels
        plot_levels({os.path.basename(args.proc): space.level_sizes()}, args.figure,
                    title=f"reachable states of {os.path.basename(args.proc)}",
                    frontier={os.path.basename(args.proc): len(space.frontier)})
        summary["figure"] = args.figure
    if o.structured:
        o.record(summary)
        for s in terminal if args.terminal else ():
            o.record({"terminal": pretty(s)})
    else:
        o.text(f"{summary['states']} states, {summary['terminal']} terminal, "
               f"truncated: {str(space.truncated).lower()}")
        o.text("per depth: " + " ".join(map(str, summary["levels"])))
        for s in terminal if args.terminal else ():
            o.text("terminal: " + pretty(s))
        if args.figure:
            o.text(f"figure: {args.figure}")
    return 0


def _cmd_check(args, out):
    p = _load_proc(args.proc)
    try:
        f = parse_formula(_read(args.formula))
    except (ParseError, FormulaError) as e:
        raise InputError(f"{args.formula}:{e}") from None
    universe = tuple(_name(u) for u in args.universe) if args.universe else default_universe(p)
    suite = _env_suite(args.env_suite) if args.env_suite else ()
    ctx = CheckContext(universe, args.depth, args.max_states, suite)
    res = check(p, f, ctx)
    o = _Out(args.format, "rhopol.check/1", out)
    rec = res.as_record()
    rec.update({"formula": pretty_formula(f), "depth": args.depth,
                "universe": [pretty_name(u) for u in ctx.universe]})
    if o.structured:
        o.record(rec)
    else:
        o.text(f"{res.verdict}: {res.reason}")
        o.text("universe: " + ", ".join(rec["universe"]))
        if res.witness is not None:
            o.text("witness: " + pretty(res.witness))
    return res.code


def _cmd_bisim(args, out):
    p, q = _load_proc(args.left), _load_proc(args.right)
    names = observable(*(_name(n) for n in args.names)) if args.names else default_observable(p, q)
    if args.exclude:
        names = names - observable(*(_name(n) for n in args.exclude))
    res = bisim(p, q, names, depth=args.depth, max_states=args.max_states)
    o = _Out(args.format, "rhopol.bisim/1", out)
    rec = res.as_record()
    if args.figure:
        from .report import plot_levels
        plot_levels({"left": explore(p, args.depth, args.max_states).level_sizes(),
                     "right": explore(q, args.depth, args.max_states).level_sizes()},
                    args.figure, title=f"bisim at depth {args.depth}: {res.verdict}")
        rec["figure"] = args.figure
    if o.structured:
        o.record(rec)
    else:
        o.text(f"{res.verdict} (depth {res.depth_checked}): {res.reason}")
        o.text("N = {" + ", ".join(res.observable) + "}")
        w = res.distinguishing
        if w:
            o.text(f"witness: {w['kind']} on the {w['side']} side"
                   + (f", barb {w['barb']}" if w.get("barb") else ""))
            for k, pair in enumerate(w["path"]):
                o.text(f"  {k}: {pair['left']}  ~  {pair['right']}")
        if args.figure:
            o.text(f"figure: {args.figure}")
    return res.code


def _cmd_translate(args, out):
    try:
        prog = translate_source(_read(args.file), params=args.param, k=args.k)
    except JsError as e:
        raise InputError(f"{args.file}:{e}") from None
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(prog.text)
    else:
        out.write(prog.text)
    return 0


def _default_seed():
    raw = os.environ.get("RHOPOL_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"RHOPOL_SEED is not an integer: {raw!r}") from None


def build_parser(seed_default=0):
    ap = _Parser(prog="rhopol", description="rho-calculus interpreter, namespace-logic checker "
                                            "and bisimulation tool")
    ap.add_argument("--version", action="version", version=f"rhopol {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def fmt(p):
        p.add_argument("--format", choices=("text", "structured"), default="text")

    p = sub.add_parser("parse", help="print the canonical form of a .rho file")
    p.add_argument("file")
    fmt(p)

    p = sub.add_parser("run", help="run one seeded trace")
    p.add_argument("--proc", required=True)
    p.add_argument("--seed", type=int, default=seed_default)
    p.add_argument("--max-steps", type=int, default=100)
    fmt(p)

    p = sub.add_parser("reduce", help="summarise the bounded reachable set")
    p.add_argument("--proc", required=True)
    p.add_argument("--depth", type=int, default=32)
    p.add_argument("--max-states", type=int, default=10_000)
    p.add_argument("--terminal", action="store_true", help="list terminal states")
    p.add_argument("--figure", help="write a states-per-depth figure to this file")
    fmt(p)

    p = sub.add_parser("check", help="check a process against an .nsl formula")
    p.add_argument("--proc", required=True)
    p.add_argument("--formula", required=True)
    p.add_argument("--depth", type=int, default=32)
    p.add_argument("--max-states", type=int, default=5000)
    p.add_argument("--universe", nargs="+", metavar="NAME")
    p.add_argument("--env-suite", help="environments for |>, separated by '---' lines")
    fmt(p)

    p = sub.add_parser("bisim", help="bounded weak barbed bisimilarity")
    p.add_argument("--left", required=True)
    p.add_argument("--right", required=True)
    p.add_argument("--depth", type=int, default=12)
    p.add_argument("--max-states", type=int, default=4000)
    p.add_argument("--names", nargs="+", metavar="NAME", help="observable names (default: free names)")
    p.add_argument("--exclude", nargs="+", metavar="NAME", help="names removed from the observable set")
    p.add_argument("--figure", help="write a states-per-depth figure to this file")
    fmt(p)

    p = sub.add_parser("translate", help="translate a JavaScript subset file to .rho")
    p.add_argument("file")
    p.add_argument("--param", action="append", default=[], metavar="NAME",
                   help="identifier supplied from outside (repeatable)")
    p.add_argument("-k", default="k", help="completion channel (default k)")
    p.add_argument("-o", "--output")
    return ap


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    err = sys.stderr
    try:
        args = build_parser(_default_seed()).parse_args(argv)
        for flag in ("depth", "max_steps"):
            if getattr(args, flag, 0) is not None and getattr(args, flag, 0) < 0:
                raise UsageError(f"--{flag.replace('_', '-')} must be non-negative")
        if getattr(args, "max_states", 1) < 1:
            raise UsageError("--max-states must be positive")
        handler = globals()[f"_cmd_{args.command}"]
        return handler(args, out)
    except UsageError as e:
        err.write(f"rhopol: usage error: {e}\n")
        return EX_USAGE
    except FileNotFoundError as e:
        err.write(f"rhopol: {e}\n")
        return EX_NOINPUT
    except (InputError, ParseError, DesugarError, FormulaError) as e:
        err.write(f"rhopol: {e}\n")
        return EX_DATAERR
    except RecursionError:
        err.write("rhopol: term too deeply nested\n")
        return EX_SOFTWARE


def main_exit():
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
