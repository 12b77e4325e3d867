"""Explicit constants and finite-sample bounds for the plug-in divergence estimator.

All bounds are functions of a ``BoundConstants`` record, so every term of
a reported curve can be audited. Conventions:

* ``C_f`` bounds the first and second partials of ``f(x1, x2) = x1^a x2^(1-a)``
  on ``[kappa1, kappa2]^2``.
* ``C_L = 1 / min f`` is the Lipschitz constant of ``log`` above ``min f``.
* the bias prefactor ``C_f C_L / (|a - 1| kappa1)`` can be dropped with
  ``include_prefactor=False`` to get the bare displayed constants.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .errors import DomainError
from .kernel import KernelSpec
from .mirrored_kde import HolderParams, MirroredKde

MAX_BANDWIDTH = 0.499


def _check_kappa(kappa1: float, kappa2: float, alpha: float) -> None:
    if not kappa1 > 0:
        raise DomainError(f"kappa1 must be > 0, got {kappa1}")
    if not kappa2 >= kappa1:
        raise DomainError(f"kappa2 must be >= kappa1, got {kappa2} < {kappa1}")
    if not (alpha > 0 and alpha != 1):
        raise DomainError(f"alpha must lie in (0, 1) or (1, inf), got {alpha}")


def f_partials(x1, x2, alpha: float) -> tuple:
    """Closed-form ``(f_1, f_2, f_11, f_22, f_12)`` of ``x1^a x2^(1-a)``."""
    a = alpha
    f1 = a * x1 ** (a - 1) * x2 ** (1 - a)
    f2 = (1 - a) * x1**a * x2 ** (-a)
    f11 = a * (a - 1) * x1 ** (a - 2) * x2 ** (1 - a)
    f22 = -a * (1 - a) * x1**a * x2 ** (-a - 1)
    f12 = a * (1 - a) * x1 ** (a - 1) * x2 ** (-a)
    return f1, f2, f11, f22, f12


def _corners(kappa1, kappa2):
    return [(kappa1, kappa1), (kappa1, kappa2), (kappa2, kappa1), (kappa2, kappa2)]


def compute_cf(kappa1: float, kappa2: float, alpha: float) -> float:
    """Largest absolute first/second partial of ``f`` over the square.

    Each partial is a product of powers, hence monotone in each argument,
    so its extremes sit at the corners.
    """
    _check_kappa(kappa1, kappa2, alpha)
    return max(abs(float(v)) for c in _corners(kappa1, kappa2) for v in f_partials(*c, alpha))


def compute_cl(kappa1: float, kappa2: float, alpha: float) -> float:
    _check_kappa(kappa1, kappa2, alpha)
    c = min(x1**alpha * x2 ** (1 - alpha) for x1, x2 in _corners(kappa1, kappa2))
    return 1.0 / c


def compute_c2(holder: HolderParams, kernel: KernelSpec, d: int) -> float:
    return holder.L / math.factorial(holder.ell) * kernel.l1_norm**d


def compute_c3(holder: HolderParams, d: int) -> float:
    """Boundary-collar bias constant ``L ((3 d^(1/r))^beta + (3d + 1)^ell / ell!)``."""
    ell = holder.ell
    return holder.L * ((3.0 * d ** (1.0 / holder.r)) ** holder.beta + (3 * d + 1) ** ell / math.factorial(ell))


@dataclass(frozen=True)
class BoundConstants:
    c_f: float
    c_l: float
    c2: float
    c3: float
    k1: float
    mcdiarmid_c: float
    prefactor: float
    include_prefactor: bool
    bias_coeffs: tuple[float, float, float]
    alpha: float
    kappa1: float
    kappa2: float
    beta: float
    ell: int
    l1_norm: float
    d: int

    def to_dict(self) -> dict:
        out = asdict(self)
        out["bias_coeffs"] = list(self.bias_coeffs)
        return out


def bound_constants(holder: HolderParams, kernel: KernelSpec, d: int, alpha: float,
                    include_prefactor: bool = True) -> BoundConstants:
    """Collect every constant for the given smoothness class, kernel and ``alpha``.

    Refuses ``beta`` whose ``ell`` exceeds the kernel's validated moment order.
    """
    if holder.ell > kernel.validated_moment_order:
        raise DomainError(
            f"beta={holder.beta} needs vanishing kernel moments up to {holder.ell}, "
            f"kernel {kernel.name!r} is only validated to {kernel.validated_moment_order}")
    k1_, k2_ = holder.kappa1, holder.kappa2
    c_f = compute_cf(k1_, k2_, alpha)
    c_l = compute_cl(k1_, k2_, alpha)
    c2 = compute_c2(holder, kernel, d)
    c3 = compute_c3(holder, d)
    mc = abs(alpha - 1) / (2 * c_l * c_f)
    pref = c_f * c_l / (abs(alpha - 1) * k1_) if include_prefactor else 1.0
    coeffs = (pref * (c2 + c3), pref * c2, pref * k2_ * kernel.l1_norm**d)
    return BoundConstants(
        c_f=c_f, c_l=c_l, c2=c2, c3=c3, k1=mc**2, mcdiarmid_c=mc, prefactor=pref,
        include_prefactor=include_prefactor, bias_coeffs=coeffs, alpha=alpha,
        kappa1=k1_, kappa2=k2_, beta=holder.beta, ell=holder.ell, l1_norm=kernel.l1_norm, d=d,
    )


def effective_beta(beta: float, kernel: KernelSpec) -> float:
    """Cap smoothness at what the kernel's moments can exploit."""
    return float(min(beta, kernel.validated_moment_order + 1))


def bias_bound(consts: BoundConstants, holder: HolderParams, kernel: KernelSpec, d: int, n: int, h: float) -> float:
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if not 0 < h < 0.5:
        raise DomainError(f"bandwidth must lie in (0, 1/2), got {h}")
    a, b, c = consts.bias_coeffs
    beta = holder.beta
    return a * h**beta + b * h ** (2 * beta) + c / (n * h**d)


def concentration_bound(consts: BoundConstants, epsilon: float, n: int, kernel: KernelSpec, d: int) -> float:
    """``P(|D - E D| > eps) <= 2 exp(-C^2 eps^2 n / ||K||_1^(2d))``, capped at 1."""
    if epsilon < 0:
        raise DomainError(f"epsilon must be >= 0, got {epsilon}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    expo = consts.mcdiarmid_c**2 * epsilon**2 * n / kernel.l1_norm ** (2 * d)
    return min(1.0, 2.0 * math.exp(-expo))


def variance_bound(consts: BoundConstants, n: int, kernel: KernelSpec, d: int) -> float:
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    return 2.0 * kernel.l1_norm ** (2 * d) / (consts.k1 * n)


def optimal_bandwidth(beta: float, d: int, n: int) -> float:
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    return min(MAX_BANDWIDTH, float(n) ** (-1.0 / (d + beta)))


def mse_bound(consts: BoundConstants, holder: HolderParams, kernel: KernelSpec, d: int, n: int,
              h: float | None = None) -> float:
    """Variance bound plus squared bias bound; ``h`` defaults to the rate-optimal bandwidth."""
    if h is None:
        h = optimal_bandwidth(holder.beta, d, n)
    return variance_bound(consts, n, kernel, d) + bias_bound(consts, holder, kernel, d, n, h) ** 2


@dataclass(frozen=True)
class BiasField:
    points: np.ndarray
    weights: np.ndarray
    mean_estimate: np.ndarray
    bias: np.ndarray
    pointwise_se: np.ndarray
    refits: int
    integrated_sq_bias_raw: float
    integrated_sq_bias: float
    standard_error: float


def empirical_bias_field(est_builder: Callable[[int], MirroredKde], true_density: Callable,
                         grid: tuple[np.ndarray, np.ndarray], refits: int = 200,
                         workers: int | None = None) -> BiasField:
    """Monte Carlo estimate of ``B_p(x) = E p_hat(x) - p(x)`` on a quadrature grid.

    ``est_builder(i)`` must return the ``i``-th independent fit. The
    integrated squared bias is reported both raw and with the Monte Carlo
    variance of the mean subtracted (``B^2 - s^2/R`` pointwise), which
    removes the upward bias of squaring a noisy mean. The standard error
    uses the delta method over refits.
    """
    if refits < 2:
        raise DomainError(f"refits must be >= 2, got {refits}")
    points, weights = grid
    points = np.asarray(points, dtype=float)
    weights = np.asarray(weights, dtype=float)

    def one(i):
        return est_builder(i).evaluate_points(points)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        draws = np.stack(list(pool.map(one, range(refits))))
    mean = draws.mean(axis=0)
    var = draws.var(axis=0, ddof=1)
    bias = mean - np.asarray(true_density(points), dtype=float)
    raw = float(np.dot(weights, bias**2))
    debiased = float(np.dot(weights, bias**2 - var / refits))
    influence = (draws - mean) @ (2.0 * weights * bias)
    se = float(np.std(influence, ddof=1) / np.sqrt(refits))
    return BiasField(points, weights, mean, bias, np.sqrt(var / refits), refits, raw, debiased, se)
