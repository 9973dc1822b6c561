"""Command-line front end.

    poplead converge --n 64 --tau 1 --init all-leaders --trials 100 --output conv.csv
    poplead hold --n 64 --tau 2 --horizon 1e4 --trials 100
    poplead lottery --n 64 --trials 10000
    poplead epidemic --n 64 128 256 --trials 200
    poplead chvp --n 64 256 --trials 200
    poplead sweep --n 32 64 128 --tau 1 2 --trials 50
    poplead states --n 64 --tau 1
    poplead trace --n 16 --init uniform-random --every 16

Records go to ``--output`` (``-`` for stdout) or, when that is omitted and
``POPLEAD_OUTPUT_DIR`` is set, to ``$POPLEAD_OUTPUT_DIR/<command>.<ext>``.
A summary is always printed to stdout.  Exit status: 0 ok, 1 runtime
failure, 2 invalid configuration.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import secrets
import sys
from fractions import Fraction
from typing import Iterable, List, Optional

from . import __version__, kernels
from .engine import make_rng, trial_seed
from .experiments import (ADVERSARIAL_KINDS, DEFAULT_SEED, InitKind,
                          TrialRecord, chvp_experiment, convergence_experiment,
                          epidemic_experiment, generate_initial,
                          holding_experiment, lottery_experiment)
from .monitors import census, is_safe
from .protocols import (DEFAULT_CB, DEFAULT_CMID, DEFAULT_CR, POptParams,
                        decode_popt, encode_popt, enumerate_popt_states, popt_state_count)

log = logging.getLogger("poplead")

OUTPUT_DIR_ENV = "POPLEAD_OUTPUT_DIR"


class ConfigError(Exception):
    pass


def _fmt(v):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return float(f"{v:.6g}")
    return v


def _cell(v):
    v = _fmt(v)
    return f"{v:.6g}" if isinstance(v, float) else v


def render(rows: List[dict], fmt: str) -> str:
    buf = io.StringIO()
    if fmt == "json":
        for r in rows:
            buf.write(json.dumps({k: _fmt(v) for k, v in r.items()}) + "\n")
        return buf.getvalue()
    if not rows:
        return ""
    fields: List[str] = []
    for r in rows:
        fields.extend(k for k in r if k not in fields)
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\r\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _cell(v) for k, v in r.items()})
    return buf.getvalue()


def record_rows(records: Iterable[TrialRecord], timing: bool) -> List[dict]:
    rows = []
    for r in records:
        row = r.row()
        if not timing:
            # wall-clock time would break byte-identical reruns
            row.pop("duration")
        rows.append(row)
    return rows


def write_output(args, rows: List[dict]):
    path = args.output
    if path is None and os.environ.get(OUTPUT_DIR_ENV):
        ext = "jsonl" if args.format == "json" else "csv"
        os.makedirs(os.environ[OUTPUT_DIR_ENV], exist_ok=True)
        path = os.path.join(os.environ[OUTPUT_DIR_ENV], f"{args.command}.{ext}")
    if path is None:
        return
    text = render(rows, args.format)
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)
        print(f"wrote {len(rows)} records to {path}")


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------


def _seed(text: str) -> int:
    if text == "random":
        return secrets.randbits(64)
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _nonneg_float(text: str) -> float:
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text}")
    return v


def build_params(args, n: int, tau: int) -> POptParams:
    try:
        kw = dict(tau=tau, cr=args.cr, cb=args.cb, cmid=Fraction(args.cmid))
        if args.m is not None:
            return POptParams(n=n, m=args.m, **kw)
        return POptParams.from_knowledge(n, args.N if args.N is not None else n, **kw)
    except ValueError as e:
        raise ConfigError(str(e)) from None


def _common(p: argparse.ArgumentParser, trials=100):
    p.add_argument("--trials", type=_positive, default=trials)
    p.add_argument("--seed", type=_seed, default=DEFAULT_SEED,
                   help=f"master seed (default {DEFAULT_SEED}); 'random' draws one")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--output", help="record file; '-' for stdout")
    p.add_argument("--workers", type=_positive, default=1)
    p.add_argument("--timing", action="store_true", help="include wall-clock durations")


def _popt_opts(p: argparse.ArgumentParser, many=False):
    nargs = "+" if many else None
    p.add_argument("--n", type=int, nargs=nargs, required=True)
    p.add_argument("--tau", type=int, nargs=nargs, default=[1] if many else 1)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--N", type=int, help="knowledge N >= n; m = ceil(log2 N)")
    g.add_argument("--m", type=int, help="override m directly")
    p.add_argument("--cr", type=int, default=DEFAULT_CR)
    p.add_argument("--cb", type=int, default=DEFAULT_CB)
    p.add_argument("--cmid", default=str(DEFAULT_CMID))


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="poplead", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    kinds = [k.value for k in InitKind]

    p = sub.add_parser("converge", help="convergence time of P_opt")
    _popt_opts(p)
    p.add_argument("--init", choices=kinds, default=InitKind.ALL_LEADERS.value)
    p.add_argument("--max-steps", type=int, help="budget in steps (default 200 n log2 n)")
    _common(p)

    p = sub.add_parser("hold", help="holding time of P_opt from a safe snapshot")
    _popt_opts(p)
    p.add_argument("--horizon", type=_nonneg_float, default=1e4, help="parallel time")
    _common(p)

    p = sub.add_parser("lottery", help="unique-winner frequency of the lottery game")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int)
    _common(p, trials=10_000)

    p = sub.add_parser("epidemic", help="propagation time of the epidemic")
    p.add_argument("--n", type=int, nargs="+", required=True)
    _common(p, trials=200)

    p = sub.add_parser("chvp", help="countdown time and spread of CHVP")
    p.add_argument("--n", type=int, nargs="+", required=True)
    p.add_argument("--l1-factor", type=int, default=20)
    p.add_argument("--l2", type=int, default=0)
    p.add_argument("--k", type=int, default=2)
    _common(p, trials=200)

    p = sub.add_parser("sweep", help="convergence over the product of n and tau lists")
    _popt_opts(p, many=True)
    p.add_argument("--init", choices=kinds, nargs="+",
                   default=[k.value for k in ADVERSARIAL_KINDS])
    p.add_argument("--budget-factor", type=float, default=200.0,
                   help="budget = factor * n * log2 n steps")
    _common(p)

    p = sub.add_parser("states", help="number of states per agent")
    _popt_opts(p)
    p.add_argument("--no-enumerate", action="store_true")

    p = sub.add_parser("trace", help="census dump of one seeded run")
    _popt_opts(p)
    p.add_argument("--init", choices=kinds, default=InitKind.UNIFORM_RANDOM.value)
    p.add_argument("--every", type=_positive, help="steps between dumps (default n)")
    p.add_argument("--max-steps", type=int, help="default 200 n log2 n")
    p.add_argument("--seed", type=_seed, default=DEFAULT_SEED)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--output", help="record file; '-' for stdout")
    return ap


def _check_n(n):
    if n < 2:
        raise ConfigError(f"population size n={n} must be >= 2")


def _default_budget(n, factor=200.0):
    return int(factor * n * math.log2(n))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _summary_line(label, stats, extra=""):
    print(f"{label:<44} trials={stats.trials:<6} censored={stats.censored:<4} "
          f"mean={stats.mean:.6g} median={stats.median:.6g} "
          f"ci95=[{stats.ci_low:.6g}, {stats.ci_high:.6g}]{extra}")


def cmd_converge(args):
    _check_n(args.n)
    p = build_params(args, args.n, args.tau)
    budget = args.max_steps if args.max_steps is not None else _default_budget(args.n)
    if budget < 0:
        raise ConfigError("max-steps must be >= 0")
    res = convergence_experiment(p, InitKind(args.init), args.trials, budget,
                                 args.seed, args.workers)
    _summary_line(f"converge n={p.n} tau={p.tau} init={args.init}", res.stats,
                  f" censoring={res.info['censoring_rate']:.6g}")
    write_output(args, record_rows(res.records, args.timing))


def cmd_hold(args):
    _check_n(args.n)
    p = build_params(args, args.n, args.tau)
    res = holding_experiment(p, args.trials, args.horizon, args.seed, args.workers)
    _summary_line(f"hold n={p.n} tau={p.tau} horizon={args.horizon:g}", res.stats,
                  f" disruption={res.info['disruption_rate']:.6g}")
    write_output(args, record_rows(res.records, args.timing))


def cmd_lottery(args):
    _check_n(args.n)
    if args.m is not None and args.m < 1:
        raise ConfigError("m must be >= 1")
    res = lottery_experiment(args.n, args.m, args.trials, master_seed=args.seed,
                             workers=args.workers)
    i = res.info
    print(f"lottery n={args.n} trials={args.trials} frequency={i['frequency']:.6g} "
          f"ci95=[{i['ci_low']:.6g}, {i['ci_high']:.6g}] "
          f"lower>=1/16: {'yes' if i['ci_low'] >= 1 / 16 else 'no'}")
    write_output(args, record_rows(res.records, args.timing))


def cmd_epidemic(args):
    for n in args.n:
        _check_n(n)
    out = epidemic_experiment(args.n, args.trials, args.seed, args.workers)
    rows = []
    for n, res in out.items():
        _summary_line(f"epidemic n={n}", res.stats,
                      f" a={res.info['a']:.6g} p99={res.info['p99']:.6g}")
        rows += record_rows(res.records, args.timing)
    write_output(args, rows)


def cmd_chvp(args):
    for n in args.n:
        _check_n(n)
    out = chvp_experiment(args.n, args.trials, args.k, args.l1_factor, args.l2,
                          args.seed, args.workers)
    rows = []
    for n, res in out.items():
        _summary_line(f"chvp n={n}", res.stats,
                      f" C={res.info['C']:.6g} c_spread={res.info['c_spread']:.6g}")
        rows += record_rows(res.records, args.timing)
    write_output(args, rows)


def cmd_sweep(args):
    rows = []
    for n in args.n:
        _check_n(n)
        for tau in args.tau:
            p = build_params(args, n, tau)
            for kind in args.init:
                res = convergence_experiment(p, InitKind(kind), args.trials,
                                             _default_budget(n, args.budget_factor),
                                             args.seed, args.workers)
                _summary_line(f"sweep n={n} tau={tau} init={kind}", res.stats,
                              f" censoring={res.info['censoring_rate']:.6g}")
                rows += record_rows(res.records, args.timing)
    write_output(args, rows)


def cmd_states(args):
    _check_n(args.n)
    p = build_params(args, args.n, args.tau)
    formula = popt_state_count(p)
    line = (f"states n={p.n} m={p.m} tau={p.tau} r_max={p.r_max} b_max={p.b_max} "
            f"formula={formula}")
    if not args.no_enumerate:
        enumerated = sum(1 for _ in enumerate_popt_states(p))
        line += f" enumerated={enumerated} equal={'yes' if enumerated == formula else 'no'}"
    print(line)


def cmd_trace(args):
    _check_n(args.n)
    p = build_params(args, args.n, args.tau)
    budget = args.max_steps if args.max_steps is not None else _default_budget(args.n)
    every = args.every or p.n
    seed = trial_seed(args.seed, 0)
    pop = generate_initial(InitKind(args.init), p, make_rng(seed ^ 0x5EED))
    sess = kernels.PoptSession(encode_popt(pop), p, seed)
    rows = []
    while True:
        states = decode_popt(sess.s)
        hit = is_safe(states, p)
        rows.append({"step": sess.steps, "parallel_time": sess.steps / p.n, "safe": hit,
                     **census(states, p).__dict__})
        if hit or sess.steps >= budget:
            break
        sess.advance(min(every, budget - sess.steps))
    t = sess.steps
    print(f"trace n={p.n} tau={p.tau} init={args.init} steps={t} safe={'yes' if hit else 'no'}")
    if args.output is None and not os.environ.get(OUTPUT_DIR_ENV):
        args.output = "-"
    write_output(args, rows)


COMMANDS = {
    "converge": cmd_converge, "hold": cmd_hold, "lottery": cmd_lottery,
    "epidemic": cmd_epidemic, "chvp": cmd_chvp, "sweep": cmd_sweep,
    "states": cmd_states, "trace": cmd_trace,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"poplead: invalid configuration: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # runtime failure
        log.exception("run failed")
        print(f"poplead: error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
