"""Command line interface.

Subcommands: haar analyze|synthesize, norm <name>, median solve|verify,
op build <name>, exp run <name>, exp list.  Exit codes: 0 pass, 1 criterion
failure, 2 usage error.  Seeds come from --seed or HAARLAB_SEED.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from fractions import Fraction

import numpy as np

from .grid import GridSpec
from .haar import HaarCoefficients, SampledFunction, analyze, synthesize
from .kernels import KernelSpec, discretize, sio_commutator
from .lab import ExperimentConfig, experiment_names, run_experiment
from .martops import (
    DenseOperator,
    commutator,
    diagonal_part,
    cascade,
    multiplier,
    paraproduct,
    paraproduct_adjoint,
    remainder,
)
from .median import (
    OrthoLinePair,
    WeightedPointSet,
    complex_median,
    quadrant_masses_exact,
    result_json,
)
from .norms import (
    LorentzIndex,
    besov_martingale,
    besov_continuous,
    bmo_martingale,
    lorentz_norm,
    schatten,
    sobolev_seminorm,
)


class UsageError(Exception):
    pass


def _load_grid(path: str | None, n=1, d=2, L=5) -> GridSpec:
    if path:
        with open(path) as fh:
            return GridSpec.from_json(fh.read())
    return GridSpec(n=n, d=d, L=L)


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _seed_of(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("HAARLAB_SEED")
    if env is not None:
        return int(env)
    raise UsageError("a seed is required: pass --seed or set HAARLAB_SEED")


def cmd_haar(args) -> int:
    g = _load_grid(args.grid, n=args.n, d=args.d, L=args.L)
    if args.action == "analyze":
        f = SampledFunction.load_csv(g, args.infile)
        coeffs = analyze(f)
        if args.out:
            coeffs.save_csv(args.out)
        else:
            coeffs.save_csv(sys.stdout.fileno())
        return 0
    coeffs = HaarCoefficients.load_csv(g, args.infile)
    f = synthesize(coeffs)
    if args.out:
        f.save_csv(args.out)
    else:
        f.save_csv(sys.stdout.fileno())
    return 0


def cmd_norm(args) -> int:
    params = {"p": args.p, "q": args.q}
    if args.norm == "schatten":
        op = DenseOperator.load(args.infile)
        value = schatten(op, LorentzIndex(args.p, args.q if args.q else math.inf))
        gdesc = json.loads(op.grid.to_json())
    elif args.norm == "lorentz":
        seq = [float(x) for x in open(args.infile).read().split()]
        value = lorentz_norm(seq, LorentzIndex(args.p, args.q if args.q else math.inf))
        gdesc = None
    else:
        g = _load_grid(args.grid, n=args.n, d=args.d, L=args.L)
        f = SampledFunction.load_csv(g, args.infile)
        gdesc = json.loads(g.to_json())
        if args.norm == "besov":
            value = besov_martingale(f, args.p)
        elif args.norm == "bmo":
            value = bmo_martingale(f)
        elif args.norm == "besov-continuous":
            if args.epsilon is None:
                raise UsageError("besov-continuous needs --epsilon")
            value = besov_continuous(f, args.p, args.epsilon)
            params["epsilon"] = args.epsilon
        elif args.norm == "sobolev":
            value = sobolev_seminorm(f, args.p)
        else:
            raise UsageError(f"unknown norm {args.norm!r}")
    report = {
        "norm_name": args.norm,
        "params": params,
        "value": value,
        "grid": gdesc,
        "seed": args.seed,
    }
    _emit(json.dumps(report, sort_keys=True), args.out)
    return 0


def cmd_median(args) -> int:
    P = WeightedPointSet.load_csv(args.infile)
    if args.action == "solve":
        pair = complex_median(P)
        _emit(result_json(P, pair), args.out)
        return 0
    if args.center is None or args.theta is None:
        raise UsageError("median verify needs --center RE IM and --theta T")
    pair = OrthoLinePair(center=(args.center[0], args.center[1]), theta=args.theta)
    masses = quadrant_masses_exact(P, pair)
    need = Fraction(P.total, 16)
    certified = all(m >= need for m in masses)
    _emit(json.dumps(pair.to_json_obj(masses, P.total, certified), sort_keys=True), args.out)
    return 0 if certified else 1


_OP_BUILDERS = {
    "multiplier": lambda b, extra: multiplier(b),
    "paraproduct": lambda b, extra: paraproduct(b),
    "paraproduct-adjoint": lambda b, extra: paraproduct_adjoint(b),
    "diagonal": lambda b, extra: diagonal_part(b),
    "remainder": lambda b, extra: remainder(b),
    "cascade": lambda b, extra: cascade(extra, b),
    "kernel": None,
    "kernel-commutator": None,
}


def cmd_op(args) -> int:
    g = _load_grid(args.grid, n=args.n, d=args.d, L=args.L)
    if args.op in ("kernel", "kernel-commutator"):
        K = KernelSpec(args.kernel, n=g.n)
        if args.op == "kernel":
            op = discretize(K, g)
        else:
            b = SampledFunction.load_csv(g, args.symbol)
            op = sio_commutator(K, b)
    else:
        if args.symbol is None:
            raise UsageError("op build needs --symbol CSV")
        b = SampledFunction.load_csv(g, args.symbol)
        extra = None
        if args.op == "cascade":
            if args.symbol2 is None:
                raise UsageError("cascade needs --symbol2 for the outer symbol")
            extra = SampledFunction.load_csv(g, args.symbol2)
        builder = _OP_BUILDERS.get(args.op)
        if builder is None:
            raise UsageError(f"unknown operator {args.op!r}")
        op = builder(b, extra)
    if not args.out:
        raise UsageError("op build needs --out PATH")
    op.save(args.out)
    return 0


def cmd_exp(args) -> int:
    if args.action == "list":
        _emit("\n".join(experiment_names()), None)
        return 0
    cfg_obj = {}
    if args.config:
        with open(args.config) as fh:
            cfg_obj = json.load(fh)
    cfg_obj["name"] = args.name
    cfg_obj["seed"] = _seed_of(args)
    if args.L is not None:
        cfg_obj["L"] = args.L
    if args.trials is not None:
        cfg_obj["trials"] = args.trials
    cfg = ExperimentConfig.from_dict(cfg_obj)
    report = run_experiment(cfg)
    _emit(report.to_json(), args.out)
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(report.trial_csv())
    for v in report.verdicts:
        status = "PASS" if v["passed"] else "FAIL"
        sys.stderr.write(f"[{status}] {v['criterion']}\n")
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="haarlab", description=__doc__)
    ap.add_argument("--seed", type=int, default=None, help="seed (or HAARLAB_SEED)")
    sub = ap.add_subparsers(dest="command", required=True)

    p_haar = sub.add_parser("haar", help="analyze or synthesize Haar coefficients")
    p_haar.add_argument("action", choices=["analyze", "synthesize"])
    p_haar.add_argument("--in", dest="infile", required=True)
    p_haar.add_argument("--grid")
    p_haar.add_argument("--n", type=int, default=1)
    p_haar.add_argument("--d", type=int, default=2)
    p_haar.add_argument("--L", type=int, default=5)
    p_haar.add_argument("--out")
    p_haar.set_defaults(fn=cmd_haar)

    p_norm = sub.add_parser("norm", help="compute a norm, emit a JSON report")
    p_norm.add_argument(
        "norm",
        choices=["schatten", "lorentz", "besov", "bmo", "besov-continuous", "sobolev"],
    )
    p_norm.add_argument("--in", dest="infile", required=True)
    p_norm.add_argument("--p", type=float, default=2.0)
    p_norm.add_argument("--q", type=float, default=None)
    p_norm.add_argument("--epsilon", type=float, default=None)
    p_norm.add_argument("--grid")
    p_norm.add_argument("--n", type=int, default=1)
    p_norm.add_argument("--d", type=int, default=2)
    p_norm.add_argument("--L", type=int, default=5)
    p_norm.add_argument("--out")
    p_norm.set_defaults(fn=cmd_norm)

    p_med = sub.add_parser("median", help="solve or verify a median partition")
    p_med.add_argument("action", choices=["solve", "verify"])
    p_med.add_argument("--in", dest="infile", required=True)
    p_med.add_argument("--center", nargs=2, type=float, default=None)
    p_med.add_argument("--theta", type=float, default=None)
    p_med.add_argument("--out")
    p_med.set_defaults(fn=cmd_median)

    p_op = sub.add_parser("op", help="build an operator container")
    p_op.add_argument("action", choices=["build"])
    p_op.add_argument(
        "op",
        choices=sorted(_OP_BUILDERS),
    )
    p_op.add_argument("--symbol")
    p_op.add_argument("--symbol2")
    p_op.add_argument("--kernel", default="hilbert")
    p_op.add_argument("--grid")
    p_op.add_argument("--n", type=int, default=1)
    p_op.add_argument("--d", type=int, default=2)
    p_op.add_argument("--L", type=int, default=5)
    p_op.add_argument("--out")
    p_op.set_defaults(fn=cmd_op)

    p_exp = sub.add_parser("exp", help="run a named experiment")
    p_exp.add_argument("action", choices=["run", "list"])
    p_exp.add_argument("name", nargs="?", default=None)
    p_exp.add_argument("--config", help="JSON config file")
    p_exp.add_argument("--L", type=int, default=None)
    p_exp.add_argument("--trials", type=int, default=None)
    p_exp.add_argument("--out")
    p_exp.add_argument("--csv")
    p_exp.set_defaults(fn=cmd_exp)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        if args.command == "exp" and args.action == "run" and not args.name:
            raise UsageError("exp run needs an experiment name")
        return args.fn(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # argparse errors
        return 2 if exc.code not in (0, None) else 0
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
