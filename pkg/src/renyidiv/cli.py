"""Command-line entry point: ``renyidiv <subcommand> [flags]``.

Exit codes: 0 success, 1 usage or input error, 2 computation error. Every
error is a single JSON line on stderr.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import sys

import numpy as np

from . import __version__
from .bounds import (bias_bound, bound_constants, concentration_bound, effective_beta, mse_bound,
                     optimal_bandwidth, variance_bound)
from .divergence import DivergenceParams, plugin_divergence
from .errors import DimensionMismatchError, DomainError, RenyiDivError
from .experiment import export, load_config, run
from .kernel import get_kernel, registered_kernels, validate_kernel
from .mirrored_kde import HolderParams, MirroredKde, SampleSet
from .sampling import TruncatedGaussian, sample

EXIT_OK, EXIT_USAGE, EXIT_COMPUTE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _ranged(kind, lo=None, hi=None, lo_open=False, hi_open=False, allow_inf=False):
    def parse(text):
        try:
            val = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected {kind.__name__}, got {text!r}") from None
        if isinstance(val, float) and (math.isnan(val) or (math.isinf(val) and not allow_inf)):
            raise argparse.ArgumentTypeError(f"must be finite, got {text!r}")
        left = "(" if lo_open else "["
        right = ")" if hi_open else "]"
        rng = f"{left}{'-inf' if lo is None else lo}, {'inf' if hi is None else hi}{right}"
        if lo is not None and (val < lo or (lo_open and val == lo)):
            raise argparse.ArgumentTypeError(f"must lie in {rng}, got {text}")
        if hi is not None and (val > hi or (hi_open and val == hi)):
            raise argparse.ArgumentTypeError(f"must lie in {rng}, got {text}")
        return val

    return parse


def _alpha(text):
    val = _ranged(float, 0.0, lo_open=True)(text)
    if val == 1.0:
        raise argparse.ArgumentTypeError("must lie in (0, 1) or (1, inf), got 1")
    return val


def _float_list(text):
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals or not all(math.isfinite(v) for v in vals):
        raise argparse.ArgumentTypeError(f"expected finite comma-separated numbers, got {text!r}")
    return vals


_positive = _ranged(float, 0.0, lo_open=True)
_bandwidth = _ranged(float, 0.0, 0.5, lo_open=True, hi_open=True)
_count = _ranged(int, 1)


def read_points(path) -> np.ndarray:
    """Read a CSV of points, one per row; a non-numeric first row is treated as a header."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if rows:
        try:
            [float(c) for c in rows[0]]
        except ValueError:
            rows = rows[1:]
    if not rows:
        raise UsageError(f"{path}: no data rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise UsageError(f"{path}: rows have differing numbers of columns")
    try:
        return np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None


def write_points(points: np.ndarray, fh, header: bool = False) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    if header:
        writer.writerow([f"x{j + 1}" for j in range(points.shape[1])])
    for row in points:
        writer.writerow([repr(float(v)) for v in row])


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def cmd_validate_kernel(args) -> int:
    report = validate_kernel(get_kernel(args.kernel), args.ell, args.tol)
    _emit(report.to_dict())
    return EXIT_OK


def cmd_sample(args) -> int:
    mean = args.mean
    spread = args.std if args.std is not None else args.var
    if len(spread) == 1:
        spread = spread * len(mean)
    if len(spread) != len(mean):
        raise UsageError(f"--mean has {len(mean)} entries but the spread flag has {len(spread)}")
    if any(s <= 0 for s in spread):
        raise UsageError("--var/--std entries must be > 0")
    dist = TruncatedGaussian.from_std(mean, spread) if args.std is not None else TruncatedGaussian(mean, spread)
    pts = sample(dist, args.n, args.seed).points
    if args.out in (None, "-"):
        write_points(pts, sys.stdout, args.header)
    else:
        with open(args.out, "w", newline="") as fh:
            write_points(pts, fh, args.header)
    return EXIT_OK


def cmd_estimate(args) -> int:
    if args.kappa2 < args.kappa1:
        raise UsageError(f"--kappa2 ({args.kappa2}) must be >= --kappa1 ({args.kappa1})")
    xs, ys = read_points(args.samples_p), read_points(args.samples_q)
    if xs.shape[1] != ys.shape[1]:
        raise UsageError(f"dimension mismatch: --samples-p has d={xs.shape[1]}, --samples-q has d={ys.shape[1]}")
    try:
        sp, sq = SampleSet(xs), SampleSet(ys)
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    kernel = get_kernel(args.kernel)
    p_est = MirroredKde(sp, kernel, args.bandwidth, args.kappa1, args.kappa2)
    q_est = MirroredKde(sq, kernel, args.bandwidth, args.kappa1, args.kappa2)
    params = DivergenceParams(args.alpha, args.quad_m, qmc_points=args.qmc_points)
    _emit(plugin_divergence(p_est, q_est, params).to_dict())
    return EXIT_OK


def cmd_bounds(args) -> int:
    if args.kappa2 < args.kappa1:
        raise UsageError(f"--kappa2 ({args.kappa2}) must be >= --kappa1 ({args.kappa1})")
    kernel = get_kernel(args.kernel)
    flags = []
    beta = effective_beta(args.beta, kernel)
    if beta != args.beta:
        flags.append(f"beta={args.beta} capped to {beta} by the kernel's moment order")
    holder = HolderParams(beta=beta, L=args.L, r=args.r, kappa1=args.kappa1, kappa2=args.kappa2)
    consts = bound_constants(holder, kernel, args.d, args.alpha, include_prefactor=not args.no_prefactor)
    h = args.bandwidth
    if h is None:
        h = optimal_bandwidth(beta, args.d, args.n)
        flags.append("bandwidth not given; using the rate-optimal bandwidth")
    _emit({
        "constants": consts.to_dict(),
        "bounds": {
            "n": args.n,
            "bandwidth": h,
            "optimal_bandwidth": optimal_bandwidth(beta, args.d, args.n),
            "bias_bound": bias_bound(consts, holder, kernel, args.d, args.n, h),
            "variance_bound": variance_bound(consts, args.n, kernel, args.d),
            "epsilon": args.epsilon,
            "concentration_bound": concentration_bound(consts, args.epsilon, args.n, kernel, args.d),
            "mse_bound": mse_bound(consts, holder, kernel, args.d, args.n, h),
        },
        "flags": flags,
    })
    return EXIT_OK


def cmd_experiment(args) -> int:

    try:
        config = load_config(args.config)
    except (OSError, json.JSONDecodeError, KeyError, DomainError) as exc:
        raise UsageError(f"--config {args.config}: {type(exc).__name__}: {exc}") from None
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    result = run(config, workers=args.threads)
    csv_path, sidecar = export(result, args.out)
    _emit({"csv": str(csv_path), "metadata": str(sidecar), "ground_truth": result.ground_truth,
           "rows": len(result.rows)})
    return EXIT_OK


class _DefaultsFormatter(argparse.ArgumentDefaultsHelpFormatter):
    """Show defaults, except for flags that have none."""

    def _get_help_string(self, action):
        if action.default is None:
            return action.help
        return super()._get_help_string(action)


def build_parser() -> argparse.ArgumentParser:
    fmt = _DefaultsFormatter
    parser = _Parser(prog="renyidiv", formatter_class=fmt,
                     description="Mirror-image KDE Renyi-alpha divergence estimation, bounds and experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    kernels = registered_kernels()

    p = sub.add_parser("validate-kernel", help="check kernel normalization and moments", formatter_class=fmt)
    p.add_argument("--kernel", choices=kernels, default="epanechnikov", help="kernel name")
    p.add_argument("--ell", type=_ranged(int, 0), default=1, help="highest moment order j to check (integer >= 0)")
    p.add_argument("--tol", type=_positive, default=1e-9, help="absolute tolerance on each moment (> 0)")
    p.set_defaults(func=cmd_validate_kernel)

    p = sub.add_parser("sample", help="draw from a Gaussian truncated to [0,1]^d", formatter_class=fmt)
    p.add_argument("--mean", type=_float_list, required=True, help="comma-separated mean vector (length d)")
    spread = p.add_mutually_exclusive_group()
    spread.add_argument("--var", type=_float_list, default=[0.2],
                        help="variances (squared units), one value or d comma-separated")
    spread.add_argument("--std", type=_float_list, default=None, help="standard deviations instead of --var")
    p.add_argument("--n", type=_count, required=True, help="number of points (integer >= 1)")
    p.add_argument("--seed", type=_ranged(int, 0), required=True, help="RNG seed (integer >= 0)")
    p.add_argument("--out", default=None, help="output CSV path; stdout when omitted or '-'")
    p.add_argument("--header", action="store_true", help="write a header row x1,...,xd")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("estimate", help="plug-in Renyi-alpha divergence between two samples", formatter_class=fmt)
    p.add_argument("--samples-p", required=True, help="CSV of points from p (n rows, d columns, header optional)")
    p.add_argument("--samples-q", required=True, help="CSV of points from q")
    p.add_argument("--alpha", type=_alpha, required=True, help="divergence order, in (0,1) or (1,inf)")
    p.add_argument("--bandwidth", type=_bandwidth, default=0.25, help="kernel bandwidth h, in (0, 0.5)")
    p.add_argument("--kernel", choices=kernels, default="epanechnikov", help="kernel name")
    p.add_argument("--kappa1", type=_positive, required=True, help="lower clipping bound (density units, > 0)")
    p.add_argument("--kappa2", type=_positive, required=True, help="upper clipping bound (density units, >= kappa1)")
    p.add_argument("--quad-m", type=_ranged(int, 2), default=48, help="Gauss-Legendre points per axis (d <= 3)")
    p.add_argument("--qmc-points", type=_ranged(int, 16), default=2**16, help="Sobol points when d > 3")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("bounds", help="explicit constants and finite-sample bounds", formatter_class=fmt)
    p.add_argument("--alpha", type=_alpha, required=True, help="divergence order, in (0,1) or (1,inf)")
    p.add_argument("--kappa1", type=_positive, required=True, help="lower density bound (> 0)")
    p.add_argument("--kappa2", type=_positive, required=True, help="upper density bound (>= kappa1)")
    p.add_argument("--beta", type=_ranged(float, 0.0, lo_open=True, allow_inf=True), required=True,
                   help="Holder smoothness (> 0, 'inf' allowed; capped by the kernel's moment order)")
    p.add_argument("--L", type=_ranged(float, 0.0), required=True, help="Holder constant (>= 0)")
    p.add_argument("--r", type=_ranged(float, 1.0), default=2.0, help="norm index of the Holder condition (>= 1)")
    p.add_argument("--d", type=_count, required=True, help="dimension (integer >= 1)")
    p.add_argument("--n", type=_count, required=True, help="sample size per distribution (integer >= 1)")
    p.add_argument("--bandwidth", type=_bandwidth, default=None,
                   help="bandwidth h in (0, 0.5); rate-optimal n^(-1/(d+beta)) when omitted")
    p.add_argument("--kernel", choices=kernels, default="epanechnikov", help="kernel name")
    p.add_argument("--epsilon", type=_ranged(float, 0.0), default=0.1, help="deviation for the concentration bound (>= 0)")
    p.add_argument("--no-prefactor", action="store_true",
                   help="drop the C_f C_L / (|alpha-1| kappa1) factor from the bias bound")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("experiment", help="Monte Carlo bias/variance/MSE sweep", formatter_class=fmt)
    p.add_argument("--config", required=True,
                   help="experiment JSON; the bare name paper_fig3.json selects the bundled configuration")
    p.add_argument("--out", required=True, help="output CSV path; a .json sidecar is written next to it")
    p.add_argument("--seed", type=_ranged(int, 0), default=None, help="master seed, overrides the config's seed")
    p.add_argument("--threads", type=_count, default=None, help="worker threads for trials (default: all cores)")
    p.set_defaults(func=cmd_experiment)
    return parser


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": " ".join(str(message).split())}) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        return _fail("usage", exc, EXIT_USAGE)
    except DimensionMismatchError as exc:
        return _fail("usage", exc, EXIT_USAGE)
    except (RenyiDivError, OSError, ArithmeticError, ValueError) as exc:
        return _fail("computation", f"{type(exc).__name__}: {exc}", EXIT_COMPUTE)


if __name__ == "__main__":
    sys.exit(main())
