"""Command-line entry point: check, derive, translate, eval, run, erase, cohere."""

from __future__ import annotations

import argparse
import sys
from typing import Optional

from . import effects, stlc
from .coherence import GenConfig, coherence_check, enumerate_derivations
from .derivation import (
    DerivationError, ReplayError, SearchExhausted, UnboundVariable, to_skeleton,
)
from .surface import ParseError, parse, parse_env, show
from .target import Converged, FuelExhausted, InternalLimit, erase, evaluate

EXIT_OK, EXIT_TYPE, EXIT_INCOHERENT, EXIT_UNKNOWN, EXIT_PARSE = 0, 1, 2, 3, 4

_CALCULI = {"stlc": stlc, "eff": effects}
_FLAVOR = {"stlc": "stlc", "eff": "effect"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse would exit with 2, which is reserved for incoherence
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="shiftcoerce", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def judgment(sp, type_required=True):
        sp.add_argument("--calculus", choices=sorted(_CALCULI), default="stlc")
        sp.add_argument("--type", required=type_required, help="goal type of the term")
        sp.add_argument("--env", metavar="FILE", help="file of 'name : type' lines")
        sp.add_argument("file", metavar="FILE", help="source term ('-' for stdin)")

    sp = sub.add_parser("check", help="print the canonical derivation")
    judgment(sp)

    sp = sub.add_parser("derive", help="print enumerated derivations")
    judgment(sp)
    sp.add_argument("--budget", type=int, default=2)
    sp.add_argument("--limit", type=int, default=16)

    sp = sub.add_parser("translate", help="print the translated target term")
    judgment(sp)
    sp.add_argument("--derivation", metavar="FILE", help="derivation skeleton to replay")

    sp = sub.add_parser("eval", help="evaluate a target term")
    sp.add_argument("--fuel", type=int, default=10_000)
    sp.add_argument("--trace", action="store_true")
    sp.add_argument("file", metavar="FILE")

    sp = sub.add_parser("run", help="evaluate a source term of the effect calculus")
    sp.add_argument("--fuel", type=int, default=10_000)
    sp.add_argument("file", metavar="FILE")

    sp = sub.add_parser("erase", help="replace coercions by lambda terms")
    sp.add_argument("file", metavar="FILE")

    sp = sub.add_parser("cohere", help="differential coherence check")
    judgment(sp)
    sp.add_argument("--budget", type=int, default=2)
    sp.add_argument("--derivations", type=int, default=4)
    sp.add_argument("--contexts", type=int, default=4)
    sp.add_argument("--fuel", type=int, default=10_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--json", action="store_true")
    return p


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _judgment(args):
    cat = "eff" if args.calculus == "eff" else "stlc"
    env = parse_env(_read(args.env), f"type-src-{cat}") if args.env else {}
    term = parse(f"term-src-{cat}", _read(args.file))
    goal = parse(f"type-src-{cat}", args.type)
    return _CALCULI[args.calculus], env, term, goal


def _canonical(calc, env, term, goal, out, err):
    d = calc.check(env, term, goal)
    if d is None:
        print(f"type error: {show(term)} does not have type {show(goal)}", file=err)
    return d


def _outcome(o) -> tuple[str, int]:
    if isinstance(o, Converged):
        return f"{show(o.value)} (beta={o.beta}, iota={o.iota})", EXIT_OK
    if isinstance(o, FuelExhausted):
        return f"fuel exhausted (beta={o.budget}, iota={o.iota})", EXIT_UNKNOWN
    return f"stuck: {show(o.term)}", EXIT_TYPE


def _cmd_check(args, out, err):
    calc, env, term, goal = _judgment(args)
    d = _canonical(calc, env, term, goal, out, err)
    if d is None:
        return EXIT_TYPE
    print(show(to_skeleton(d, annotate=True)), file=out)
    return EXIT_OK


def _cmd_derive(args, out, err):
    calc, env, term, goal = _judgment(args)
    ds = calc.enumerate_derivations(env, term, goal, args.budget, args.limit)
    if not ds:
        print(f"type error: {show(term)} does not have type {show(goal)}", file=err)
        return EXIT_TYPE
    for d in ds:
        print(show(to_skeleton(d, annotate=True)), file=out)
    return EXIT_OK


def _cmd_translate(args, out, err):
    calc, env, term, goal = _judgment(args)
    if args.derivation:
        skel = parse("derivation", _read(args.derivation))
        d = calc.replay(env, term, goal, skel)
    else:
        d = _canonical(calc, env, term, goal, out, err)
        if d is None:
            return EXIT_TYPE
    print(show(calc.translate_term(d)), file=out)
    return EXIT_OK


def _cmd_eval(args, out, err):
    term = parse("term-target", _read(args.file))
    trace = (lambda line: print(line, file=out)) if args.trace else None
    text, code = _outcome(evaluate(term, beta_fuel=args.fuel, trace=trace))
    print(text, file=out)
    return code


def _cmd_run(args, out, err):
    term = parse("term-src-eff", _read(args.file))
    o = effects.source_eval(term, fuel=args.fuel)
    if isinstance(o, Converged):
        print(show(o.value), file=out)
        return EXIT_OK
    text, code = _outcome(o)
    print(text, file=out)
    return code


def _cmd_erase(args, out, err):
    print(show(erase(parse("term-target", _read(args.file)))), file=out)
    return EXIT_OK


def _cmd_cohere(args, out, err):
    calc, env, term, goal = _judgment(args)
    config = GenConfig(seed=args.seed, budget=args.budget, max_derivations=args.derivations,
                       contexts=args.contexts, fuel=args.fuel, flavor=_FLAVOR[args.calculus])
    ds = enumerate_derivations(config.flavor, env, term, goal, args.budget, args.derivations)
    if not ds:
        print(f"type error: {show(term)} does not have type {show(goal)}", file=err)
        return EXIT_TYPE
    report = coherence_check(config.flavor, env, term, goal, config, ds)
    print(report.to_json() if args.json else report.to_text(), file=out)
    return {"Coherent": EXIT_OK, "Incoherent": EXIT_INCOHERENT}.get(report.summary, EXIT_UNKNOWN)


_COMMANDS = {
    "check": _cmd_check, "derive": _cmd_derive, "translate": _cmd_translate,
    "eval": _cmd_eval, "run": _cmd_run, "erase": _cmd_erase, "cohere": _cmd_cohere,
}


def main(argv: Optional[list] = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "fuel", 1) < 0 or getattr(args, "budget", 0) < 0:
            raise UsageError("fuel and budget must be non-negative")
    except UsageError as exc:
        print(f"usage error: {exc}", file=err)
        return EXIT_PARSE
    try:
        return _COMMANDS[args.command](args, out, err)
    except ParseError as exc:
        print(f"parse error: {exc}", file=err)
        return EXIT_PARSE
    except OSError as exc:
        print(f"cannot read input: {exc}", file=err)
        return EXIT_PARSE
    except (UnboundVariable, ReplayError, DerivationError, SearchExhausted) as exc:
        print(f"type error: {exc}", file=err)
        return EXIT_TYPE
    except InternalLimit as exc:
        print(f"internal limit: {exc}", file=err)
        return EXIT_UNKNOWN


if __name__ == "__main__":
    sys.exit(main())
