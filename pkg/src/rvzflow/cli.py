"""Command line entry point ``rvz``.

Exit codes: 0 success, 1 usage or validation error, 2 resource cap reached.
Errors are reported as a JSON object on stderr.  Option precedence for the
thread count: ``THREADS`` environment variable, then ``--threads``, then the
``--config`` file (``key=value`` lines), then built-in defaults.  The config
file may set any long option of the chosen subcommand.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import re
import sys
from fractions import Fraction
from typing import Sequence

from . import counting, induction, measure, perm, words, zippered
from .errors import BoundTooLargeError, RVZError
from .perm import Permutation

SCHEMA_VERSION = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def _real(text: str) -> float:
    """A float literal or ``log(x)`` / ``exp(x)`` of one."""
    text = text.strip()
    m = re.fullmatch(r"(log|exp)\(\s*([^()]+?)\s*\)", text)
    if m:
        fn = math.log if m.group(1) == "log" else math.exp
        return fn(float(m.group(2)))
    return float(text)


def _vector(text: str, exact: bool):
    parts = [p for p in re.split(r"[,\s]+", text.strip()) if p]
    if exact:
        return tuple(Fraction(p) for p in parts)
    return tuple(float(Fraction(p)) if "/" in p else float(p) for p in parts)


def _num_out(x):
    if isinstance(x, Fraction):
        return str(x)
    return float(x)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=False)


# -- handlers -------------------------------------------------------------


def _rauzy(args, out) -> int:
    pi = Permutation.parse(args.pi)
    if args.action == "class":
        rc = perm.rauzy_class(pi)
        data = rc.to_dict()
    else:
        data = {"pi": list(pi.images), "op": args.op, "result": list(perm.apply_op(args.op, pi).images)}
    out.write(_dump(_envelope(args, data)) + "\n")
    return 0


def _iet(args, out) -> int:
    exact = args.mode == "rational"
    pi = Permutation.parse(args.pi)
    p = induction.IETPoint(_vector(args.lam, exact), pi).normalized()
    if args.action == "step":
        q, rec = induction.rv_step(p)
        data = {"op": rec.op, "lambda": [_num_out(x) for x in q.lam], "pi": list(q.pi.images),
                "shrink": _num_out(rec.shrink), "matrix": rec.matrix.to_json()}
        out.write(_dump(_envelope(args, data)) + "\n")
    elif args.action == "orbit":
        out.write(_dump(_envelope(args, {})) + "\n")
        for _ in range(args.steps):
            q, letter, log_shrink = induction._zorich(p, args.n_max)
            shrink = _shrink(p, q, letter) if exact else math.exp(log_shrink)
            out.write(_dump({"letter": {"c": letter.c, "n": letter.n},
                             "lambda": [_num_out(x) for x in q.lam], "pi": list(q.pi.images),
                             "shrink": _num_out(shrink)}) + "\n")
            p = q
    elif args.action == "encode":
        w = induction.encode(p, args.k, args.n_max)
        out.write(_dump(_envelope(args, {"word": w.to_dict(), "text": str(w)})) + "\n")
    return 0


def _shrink(p, q, letter) -> Fraction:
    """Exact ``|lam_new| / |lam_old|`` of one accelerated step, before renormalizing.

    ``p.lam = s A(letter) q.lam`` with ``|q.lam| = 1``, so ``s = |p.lam| / |A q.lam|``.
    """
    back = words.letter_matrix(letter).apply(q.lam)
    return sum(p.lam) / sum(back)


def _word_info(w: words.Word) -> dict:
    data = {"word": w.to_dict(), "text": str(w), "admissible": words.is_admissible(w),
            "matrix": w.matrix.to_json(), "norm": w.norm, "leb": str(words.cylinder_leb(w)),
            "end": list(w.end.images)}
    if data["admissible"]:
        data["canonical"] = str(words.canonical_form(w))
        point, l = induction.periodic_point(w)
        data["periodic_point"] = {"lambda": list(point.lam), "pi": list(point.pi.images), "log_length": l}
    return data


def _words(args, out) -> int:
    pi = Permutation.parse(args.pi)
    if args.action == "info":
        w = words.Word.parse(args.word, pi)
        out.write(_dump(_envelope(args, _word_info(w))) + "\n")
        return 0
    q = counting.EnumQuery.make(pi, _real(args.T), args.prefix, args.sector)
    out.write(_dump(_envelope(args, {})) + "\n")
    for i, item in enumerate(counting.enumerate_words(q, with_log_rho=True, node_budget=args.node_budget)):
        if args.limit is not None and i >= args.limit:
            break
        out.write(_dump({"word": str(item.word), "norm": counting.col_norm(item.matrix),
                         "log_rho": item.log_rho, "matrix": item.matrix.to_json()}) + "\n")
    return 0


def _orbits(args, out) -> int:
    pi = Permutation.parse(args.pi)
    T0 = _real(args.Tmax if args.action == "gap" else args.Tmin)
    q = counting.EnumQuery.make(pi, T0, args.prefix, args.sector)
    if args.action == "gap":
        items = counting.enumerate_words(q, node_budget=args.node_budget)
        rep = counting.period_norm_gap(items)
        out.write(_dump(_envelope(args, rep.to_dict())) + "\n")
        return 0
    grid = counting.make_grid(_real(args.Tmin), _real(args.Tmax), _real(args.step))
    code = 0
    try:
        rep = counting.count_orbits(q, grid, args.engine, args.orbit_rule, args.threads, args.node_budget,
                                     mirror=not args.no_mirror)
    except BoundTooLargeError as exc:
        rep = exc.partial
        code = 2
    if args.no_timing:
        rep.wallclock = 0.0
        for row in rep.per_T:
            row.seconds = 0.0
    if args.out:
        with open(args.out, "w", newline="") as fh:
            _write_csv(rep, fh)
    summary = _envelope(args, rep.to_dict())
    summary["grid"] = grid
    out.write(_dump(summary) + "\n")
    if code == 2:
        _error("bound too large: node budget or depth cap reached", 2)
    return code


def _write_csv(rep, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["T", "n_words", "n_orbits", "nodes", "seconds"])
    for r in rep.per_T:
        w.writerow([repr(r.T), r.n_words, r.n_orbits, r.nodes, f"{r.seconds:.6f}"])


def _zip(args, out) -> int:
    pi = Permutation.parse(args.pi)
    if args.action == "check":
        cfg = measure.McConfig(seed=args.seed, samples=args.samples, threads=args.threads)
        rep = measure.zip_check(pi, cfg)
        out.write(_dump(_envelope(args, rep)) + "\n")
        return 0
    exact = args.mode == "rational"
    d = zippered.DeltaCoords(_vector(args.lam, exact), pi, _vector(args.delta, exact))
    z = zippered.from_delta(d, check=False)
    data = {"h": [_num_out(x) for x in z.h], "a": [_num_out(x) for x in z.a],
            "violations": zippered.validate(z), "area": _num_out(zippered.area(d)),
            "sector": zippered.sector(d)}
    out.write(_dump(_envelope(args, data)) + "\n")
    return 0


def _measure(args, out) -> int:
    cfg = measure.McConfig(seed=args.seed, samples=args.samples, threads=args.threads,
                           tolerance_sigmas=args.sigmas, birkhoff_steps=args.birkhoff_steps)
    pi = Permutation.parse(args.pi)
    if args.action == "cylinder":
        w1 = words.Word.parse(args.word, pi)
        w2 = words.Word.parse(args.word2, pi) if args.word2 else None
        rep = measure.mc_cylinder(w1, w2, cfg)
    elif args.action == "bracket":
        q = words.Word.parse(args.q, pi)
        ws = []
        for tail in (args.tails or "").split(";"):
            if tail.strip():
                ws.append(words.Word.parse(f"{args.q},{tail},{_chain_text(q)}", pi))
        rep = measure.lemma2_bracket(q, ws, cfg)
    else:
        rep = measure.mc_expansion(pi, _real(args.t), cfg)
    out.write(_dump(_envelope(args, rep)) + "\n")
    return 0


def _chain_text(q: words.Word) -> str:
    return ",".join(f"{x.c}{x.n}" for x in q)


def _envelope(args, data: dict) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("handler",)}
    return {"schema_version": SCHEMA_VERSION, "command": f"{args.command} {args.action}", **data, "config": cfg}


# -- parser ---------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file with option defaults")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--output", "-o", dest="output", help="write the main output here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rvz", description="Rauzy-Veech-Zorich renormalization toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("rauzy", help="permutations and Rauzy classes")
    rs = r.add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = rs.add_parser("class")
    p.add_argument("--pi", required=True)
    _common(p)
    p = rs.add_parser("op")
    p.add_argument("--pi", required=True)
    p.add_argument("--op", choices=("a", "b"), required=True)
    _common(p)
    r.set_defaults(handler=_rauzy)

    r = sub.add_parser("iet", help="Rauzy-Veech and Zorich maps")
    rs = r.add_subparsers(dest="action", required=True, parser_class=_Parser)
    for name in ("step", "orbit", "encode"):
        p = rs.add_parser(name)
        p.add_argument("--pi", required=True)
        p.add_argument("--lambda", dest="lam", required=True)
        p.add_argument("--mode", choices=("float", "rational"), default="float")
        p.add_argument("--n-max", type=int, default=induction.N_MAX)
        if name == "orbit":
            p.add_argument("--steps", type=int, default=20)
        if name == "encode":
            p.add_argument("--k", type=int, default=10)
        _common(p)
    r.set_defaults(handler=_iet)

    r = sub.add_parser("words", help="words, matrices and enumeration")
    rs = r.add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = rs.add_parser("info")
    p.add_argument("--pi", required=True)
    p.add_argument("--word", required=True)
    _common(p)
    p = rs.add_parser("enumerate")
    p.add_argument("--pi", required=True)
    p.add_argument("--T", required=True)
    p.add_argument("--prefix")
    p.add_argument("--sector", choices=counting.SECTORS)
    p.add_argument("--limit", type=int)
    p.add_argument("--node-budget", type=int, default=counting.DEFAULT_NODE_BUDGET)
    _common(p)
    r.set_defaults(handler=_words)

    r = sub.add_parser("orbits", help="periodic orbit counts")
    rs = r.add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = rs.add_parser("count")
    p.add_argument("--pi", required=True)
    p.add_argument("--Tmin", required=True)
    p.add_argument("--Tmax", required=True)
    p.add_argument("--step", default="1")
    p.add_argument("--prefix")
    p.add_argument("--sector", choices=counting.SECTORS)
    p.add_argument("--engine", choices=("auto", "numba", "python"), default="auto")
    p.add_argument("--orbit-rule", choices=counting.ORBIT_RULES, default="canonical")
    p.add_argument("--node-budget", type=int, default=counting.DEFAULT_NODE_BUDGET)
    p.add_argument("--out", help="CSV file for the per-T rows")
    p.add_argument("--no-timing", action="store_true", help="zero all timings (byte-reproducible output)")
    p.add_argument("--no-mirror", action="store_true", help="visit b-rooted words instead of mirroring a-rooted ones")
    _common(p)
    p = rs.add_parser("gap")
    p.add_argument("--pi", required=True)
    p.add_argument("--prefix", required=True)
    p.add_argument("--Tmax", required=True)
    p.add_argument("--sector", choices=counting.SECTORS)
    p.add_argument("--node-budget", type=int, default=counting.DEFAULT_NODE_BUDGET)
    _common(p)
    r.set_defaults(handler=_orbits)

    r = sub.add_parser("zip", help="zippered rectangles")
    rs = r.add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = rs.add_parser("check")
    p.add_argument("--pi", required=True)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    _common(p)
    p = rs.add_parser("point")
    p.add_argument("--pi", required=True)
    p.add_argument("--lambda", dest="lam", required=True)
    p.add_argument("--delta", required=True)
    p.add_argument("--mode", choices=("float", "rational"), default="float")
    _common(p)
    r.set_defaults(handler=_zip)

    r = sub.add_parser("measure", help="Monte-Carlo checks")
    rs = r.add_subparsers(dest="action", required=True, parser_class=_Parser)
    for name in ("cylinder", "bracket", "expansion"):
        p = rs.add_parser(name)
        p.add_argument("--pi", required=True)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--samples", type=int, default=100_000)
        p.add_argument("--sigmas", type=float, default=3.0)
        p.add_argument("--birkhoff-steps", type=int, default=10**6)
        p.add_argument("--json", action="store_true", help="accepted for compatibility; output is always JSON")
        if name == "cylinder":
            p.add_argument("--word", required=True)
            p.add_argument("--word2")
        elif name == "bracket":
            p.add_argument("--q", required=True)
            p.add_argument("--tails", help="semicolon separated middle words w~")
        else:
            p.add_argument("--t", required=True)
        _common(p)
    r.set_defaults(handler=_measure)
    return parser


def _read_config(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{n}: expected key=value")
            k, v = (s.strip() for s in line.split("=", 1))
            out[k.replace("-", "_")] = v
    return out


def _subparser(parser: argparse.ArgumentParser, argv: Sequence[str]) -> argparse.ArgumentParser | None:
    cmd = parser._subparsers._group_actions[0].choices.get(argv[0]) if argv else None
    if cmd is None or len(argv) < 2:
        return None
    return cmd._subparsers._group_actions[0].choices.get(argv[1])


def parse_args(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    argv = list(argv)
    pre = _Parser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        leaf = _subparser(parser, argv)
        if leaf is None:
            raise UsageError("--config needs a subcommand")
        values = _read_config(known.config)
        dests = {a.dest: a for a in leaf._actions}
        defaults = {}
        for k, v in values.items():
            if k not in dests or k in ("help", "config"):
                raise UsageError(f"unknown config key {k!r}")
            act = dests[k]
            if act.type is not None:
                v = act.type(v)
            elif isinstance(act, argparse._StoreTrueAction):
                v = v.lower() in ("1", "true", "yes", "on")
            defaults[k] = v
        leaf.set_defaults(**defaults)
        for a in leaf._actions:
            if a.dest in defaults:
                a.required = False
    args = parser.parse_args(argv)
    env = os.environ.get("THREADS")
    if env:
        try:
            args.threads = int(env)
        except ValueError:
            raise UsageError("THREADS must be an integer") from None
    if args.threads < 1:
        raise UsageError("threads must be >= 1")
    return args


def _error(msg: str, code: int) -> None:
    sys.stderr.write(json.dumps({"error": msg, "exit_code": code}) + "\n")


def run(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
    except UsageError as exc:
        _error(str(exc), 1)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    out = open(args.output, "w") if getattr(args, "output", None) else sys.stdout
    try:
        return args.handler(args, out)
    except BoundTooLargeError as exc:
        _error(str(exc), 2)
        return 2
    except (RVZError, ValueError, ArithmeticError, UsageError, OSError) as exc:
        _error(f"{type(exc).__name__}: {exc}", 1)
        return 1
    finally:
        if out is not sys.stdout:
            out.close()


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
