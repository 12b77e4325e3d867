"""Monte Carlo harness: bias, variance and MSE of the plug-in estimator versus ``n``.

Seeding scheme: trial ``t`` at sample size ``n`` draws the ``p`` sample
from ``SeedSequence(seed, spawn_key=(n, t, 0))`` and the ``q`` sample
from ``SeedSequence(seed, spawn_key=(n, t, 1))``. Any single trial can
be replayed with ``run_trial``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import BoundConstants, bound_constants, effective_beta, mse_bound, optimal_bandwidth
from .divergence import DivergenceParams, plugin_divergence, true_divergence
from .errors import DomainError, TrialError
from .kernel import KernelSpec, get_kernel
from .mirrored_kde import HolderParams, MirroredKde
from .quadrature import tensor_grid
from .sampling import RNG_ALGORITHM, TruncatedGaussian, sample

log = logging.getLogger(__name__)

CSV_COLUMNS = ("n", "bandwidth", "mean_estimate", "bias", "variance", "std", "mse", "mse_direct", "bound")
BUNDLED_CONFIG = Path(__file__).with_name("data") / "paper_fig3.json"


def _auto_or_float(value, name):
    if value == "auto":
        return "auto"
    try:
        return float(value)
    except (TypeError, ValueError):
        raise DomainError(f"{name} must be a number or 'auto', got {value!r}") from None


@dataclass(frozen=True)
class ExperimentConfig:
    p_dist: TruncatedGaussian
    q_dist: TruncatedGaussian
    alpha: float
    h: float | str
    kernel: KernelSpec
    n_grid: tuple[int, ...]
    trials: int
    kappa1: float | str = "auto"
    kappa2: float | str = "auto"
    quad_m: int = 48
    seed: int = 0
    beta: float = math.inf
    L: float | str = "auto"
    r: float = 2.0
    include_prefactor: bool = True
    truth_m: int = 96

    def __post_init__(self):
        if self.p_dist.d != self.q_dist.d:
            raise DomainError(f"p has d={self.p_dist.d} but q has d={self.q_dist.d}")
        if self.trials < 2:
            raise DomainError(f"trials must be >= 2, got {self.trials}")
        grid = tuple(int(n) for n in self.n_grid)
        if any(n < 1 for n in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
            raise DomainError(f"n_grid must be strictly increasing positive integers, got {grid}")
        object.__setattr__(self, "n_grid", grid)
        if self.h != "auto" and not 0 < float(self.h) < 0.5:
            raise DomainError(f"bandwidth must lie in (0, 1/2) or be 'auto', got {self.h}")
        if self.quad_m < 2 or self.truth_m < 2:
            raise DomainError("quadrature sizes must be >= 2")

    @property
    def d(self) -> int:
        return self.p_dist.d

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        raw = dict(raw)
        known = {"p", "q", "alpha", "bandwidth", "kernel", "n_grid", "trials", "kappa1", "kappa2",
                 "quad_m", "seed", "beta", "L", "r", "include_prefactor", "truth_m", "description"}
        unknown = set(raw) - known
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")

        def dist(spec, name):
            if "var" in spec and "std" in spec:
                raise DomainError(f"{name}: give either 'var' or 'std', not both")
            if "std" in spec:
                return TruncatedGaussian.from_std(spec["mean"], spec["std"])
            return TruncatedGaussian(spec["mean"], spec["var"])

        beta = raw.get("beta", "inf")
        return cls(
            p_dist=dist(raw["p"], "p"),
            q_dist=dist(raw["q"], "q"),
            alpha=float(raw["alpha"]),
            h=_auto_or_float(raw.get("bandwidth", "auto"), "bandwidth"),
            kernel=get_kernel(raw.get("kernel", "epanechnikov")),
            n_grid=tuple(raw["n_grid"]),
            trials=int(raw["trials"]),
            kappa1=_auto_or_float(raw.get("kappa1", "auto"), "kappa1"),
            kappa2=_auto_or_float(raw.get("kappa2", "auto"), "kappa2"),
            quad_m=int(raw.get("quad_m", 48)),
            seed=int(raw["seed"]),
            beta=math.inf if beta in ("inf", "infinity") else float(beta),
            L=_auto_or_float(raw.get("L", "auto"), "L"),
            r=float(raw.get("r", 2.0)),
            include_prefactor=bool(raw.get("include_prefactor", True)),
            truth_m=int(raw.get("truth_m", 96)),
        )

    def to_dict(self) -> dict:
        def dist(g):
            return {"mean": g.mean.tolist(), "var": g.var.tolist()}

        return {
            "p": dist(self.p_dist), "q": dist(self.q_dist), "alpha": self.alpha,
            "bandwidth": self.h, "kernel": self.kernel.name, "n_grid": list(self.n_grid),
            "trials": self.trials, "kappa1": self.kappa1, "kappa2": self.kappa2,
            "quad_m": self.quad_m, "seed": self.seed,
            "beta": "inf" if math.isinf(self.beta) else self.beta,
            "L": self.L, "r": self.r, "include_prefactor": self.include_prefactor,
            "truth_m": self.truth_m,
        }


def load_config(path) -> ExperimentConfig:
    """Read a JSON config; the bare name ``paper_fig3.json`` resolves to the bundled copy."""
    path = Path(path)
    if not path.exists() and path.name == BUNDLED_CONFIG.name and len(path.parts) == 1:
        path = BUNDLED_CONFIG
    with open(path) as fh:
        return ExperimentConfig.from_dict(json.load(fh))


@dataclass(frozen=True)
class NRow:
    n: int
    bandwidth: float
    mean_estimate: float
    bias: float
    variance: float
    std: float
    mse: float
    mse_direct: float
    bound: float


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    ground_truth: float
    ground_truth_delta: float
    kappa1: float
    kappa2: float
    holder: HolderParams
    constants: BoundConstants
    rows: tuple[NRow, ...]
    estimates: dict = field(repr=False)
    flags: tuple[str, ...] = ()


def trial_seed(master: int, n: int, trial: int, stream: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master, spawn_key=(n, trial, stream))


def _resolve(config: ExperimentConfig):
    d = config.d
    flags = []
    pts, _ = tensor_grid(config.quad_m, d)
    vals = np.concatenate([config.p_dist(pts), config.q_dist(pts)])
    kappa1 = float(vals.min()) if config.kappa1 == "auto" else float(config.kappa1)
    kappa2 = float(vals.max()) if config.kappa2 == "auto" else float(config.kappa2)
    if "auto" in (config.kappa1, config.kappa2):
        flags.append("kappa bounds taken from the true densities over the quadrature grid")
    beta = effective_beta(config.beta, config.kernel)
    if beta != config.beta:
        flags.append(f"beta={config.beta} capped to {beta} for constants by the kernel's moment order")
    if config.L == "auto":
        if beta != 2.0:
            raise DomainError("L='auto' is only available for effective beta = 2")
        L = max(config.p_dist.holder_constant(config.r), config.q_dist.holder_constant(config.r))
        flags.append("L taken as the sup of the dual-norm Hessian rows of p and q")
    else:
        L = float(config.L)
    if config.h != "auto":
        flags.append("bound evaluated at the fixed bandwidth: its variance term decays as 1/n, "
                     "its bias term does not shrink with n")
    holder = HolderParams(beta=beta, L=L, r=config.r, kappa1=kappa1, kappa2=kappa2)
    return holder, tuple(flags)


def bandwidth_for(config: ExperimentConfig, holder: HolderParams, n: int) -> float:
    if config.h == "auto":
        return optimal_bandwidth(holder.beta, config.d, n)
    return float(config.h)


def run_trial(config: ExperimentConfig, n: int, trial: int, kappa1: float, kappa2: float, h: float) -> float:
    """One replayable plug-in estimate at sample size ``n``."""
    xs = sample(config.p_dist, n, trial_seed(config.seed, n, trial, 0))
    ys = sample(config.q_dist, n, trial_seed(config.seed, n, trial, 1))
    p_est = MirroredKde(xs, config.kernel, h, kappa1, kappa2)
    q_est = MirroredKde(ys, config.kernel, h, kappa1, kappa2)
    params = DivergenceParams(config.alpha, config.quad_m, estimate_error=False)
    return plugin_divergence(p_est, q_est, params).value


def run(config: ExperimentConfig, workers: int | None = None) -> ExperimentResult:
    """Run every trial for every ``n`` and aggregate against the quadrature ground truth.

    Trials run on a thread pool; results are collected by index, so the
    output does not depend on ``workers``.
    """
    holder, flags = _resolve(config)
    d = config.d
    truth = true_divergence(config.p_dist, config.q_dist, config.alpha, config.truth_m, d)
    coarse = true_divergence(config.p_dist, config.q_dist, config.alpha, max(2, (2 * config.truth_m) // 3), d)
    consts = bound_constants(holder, config.kernel, d, config.alpha, config.include_prefactor)
    workers = workers or os.cpu_count() or 1

    rows, estimates = [], {}
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for n in config.n_grid:
            h = bandwidth_for(config, holder, n)

            def job(t, n=n, h=h):
                try:
                    return run_trial(config, n, t, holder.kappa1, holder.kappa2, h)
                except Exception as exc:  # noqa: BLE001 - re-raised with replay info
                    raise TrialError(f"{type(exc).__name__}: {exc}", n, t, (config.seed, n, t)) from exc

            est = np.array(list(pool.map(job, range(config.trials))))
            estimates[n] = est
            rows.append(_aggregate(n, h, est, truth, mse_bound(consts, holder, config.kernel, d, n, h)))
            log.info("n=%d mean=%.6g mse=%.3g", n, rows[-1].mean_estimate, rows[-1].mse)
    return ExperimentResult(config, truth, abs(truth - coarse), holder.kappa1, holder.kappa2, holder,
                            consts, tuple(rows), estimates, flags)


def _aggregate(n: int, h: float, est: np.ndarray, truth: float, bound: float) -> NRow:
    t = est.size
    mean = float(np.mean(est))
    var = float(np.var(est, ddof=1))
    bias = mean - truth
    return NRow(
        n=n, bandwidth=h, mean_estimate=mean, bias=bias, variance=var, std=math.sqrt(var),
        mse=bias**2 + var * (t - 1) / t, mse_direct=float(np.mean((est - truth) ** 2)), bound=bound,
    )


def result_table(result: ExperimentResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in result.rows:
        writer.writerow([row.n] + [repr(float(getattr(row, c))) for c in CSV_COLUMNS[1:]])
    return buf.getvalue()


def result_metadata(result: ExperimentResult) -> dict:
    return {
        "software_version": __version__,
        "rng": RNG_ALGORITHM,
        "config": result.config.to_dict(),
        "ground_truth": result.ground_truth,
        "ground_truth_quadrature_delta": result.ground_truth_delta,
        "kappa1": result.kappa1,
        "kappa2": result.kappa2,
        "holder": {"beta": result.holder.beta, "L": result.holder.L, "r": result.holder.r,
                   "ell": result.holder.ell},
        "constants": result.constants.to_dict(),
        "flags": list(result.flags),
    }


def export(result: ExperimentResult, path) -> tuple[Path, Path]:
    """Write the per-``n`` CSV and a JSON sidecar next to it (same stem, ``.json``)."""
    path = Path(path)
    sidecar = path.with_suffix(".json")
    try:
        path.write_text(result_table(result))
        sidecar.write_text(json.dumps(result_metadata(result), indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write experiment output to {exc.filename or path}: {exc.strerror}") from exc
    return path, sidecar
