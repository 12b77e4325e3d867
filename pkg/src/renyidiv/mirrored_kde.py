"""Mirror-image kernel density estimator on the unit cube.

Each sample is reflected across the faces ``x_j = 0`` (``y -> -y``) and
``x_j = 1`` (``y -> 2 - y``) before smoothing, so the kernel mass that
would leak out of ``[0, 1]^d`` is folded back in. The literal definition
sums one regional kernel per partition of the axes into lower collar,
interior and upper collar; ``literal_kernel_sum`` evaluates it term by
term and serves as the reference for the pruned implementation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate

from .errors import DimensionMismatchError, DomainError, InvalidBandwidthError
from .kernel import KernelSpec, product_kernel_eval

# evaluation is chunked so the (queries x samples) work array stays bounded
_CHUNK_ELEMENTS = 4_000_000


@dataclass(frozen=True)
class HolderParams:
    """Smoothness class and density bounds assumed for ``p`` and ``q``."""

    beta: float
    L: float
    r: float
    kappa1: float
    kappa2: float

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError(f"beta must be > 0, got {self.beta}")
        if self.L < 0:
            raise DomainError(f"L must be >= 0, got {self.L}")
        if not self.r >= 1:
            raise DomainError(f"r must be >= 1, got {self.r}")
        if not 0 < self.kappa1 <= self.kappa2:
            raise DomainError(f"need 0 < kappa1 <= kappa2, got ({self.kappa1}, {self.kappa2})")

    @property
    def ell(self) -> int:
        """Greatest integer strictly less than ``beta``."""
        if np.isinf(self.beta):
            raise DomainError("ell is undefined for beta = inf")
        return int(np.ceil(self.beta)) - 1


@dataclass(frozen=True)
class SampleSet:
    points: np.ndarray

    def __post_init__(self):
        raw = self.points.points if isinstance(self.points, SampleSet) else self.points
        pts = np.array(raw, dtype=float, copy=True)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise DomainError(f"samples must be a non-empty (n, d) array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)) or pts.min() < 0.0 or pts.max() > 1.0:
            raise DomainError("every sample coordinate must lie in [0, 1]")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


class RegionIndex(NamedTuple):
    """Partition of the (0-based) axes into lower collar, interior, upper collar."""

    lower: frozenset
    interior: frozenset
    upper: frozenset

    @property
    def d(self) -> int:
        return len(self.lower) + len(self.interior) + len(self.upper)

    def is_valid(self, d: int) -> bool:
        parts = (self.lower, self.interior, self.upper)
        disjoint = sum(len(s) for s in parts) == len(set().union(*parts))
        return disjoint and set().union(*parts) == set(range(d))


def all_regions(d: int) -> list[RegionIndex]:
    """All ``3**d`` partitions of ``range(d)`` into three labelled parts."""
    out = []
    for labels in itertools.product((0, 1, 2), repeat=d):
        parts = [frozenset(i for i, lab in enumerate(labels) if lab == k) for k in range(3)]
        out.append(RegionIndex(*parts))
    return out


def _check_bandwidth(h: float) -> None:
    if not 0.0 < h < 0.5:
        raise InvalidBandwidthError(f"bandwidth must lie in (0, 1/2), got {h}")


def _as_points(x, d: int | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :] if d is None or x.shape[0] == d else x[:, None]
    if x.ndim != 2:
        raise DomainError(f"query must be a point or an (m, d) array, got shape {x.shape}")
    if d is not None and x.shape[1] != d:
        raise DimensionMismatchError(f"query has dimension {x.shape[1]}, estimator has {d}")
    if not np.all(np.isfinite(x)) or x.min() < 0.0 or x.max() > 1.0:
        raise DomainError("query points must lie in [0, 1]^d")
    return x


def region_of(x, h: float) -> RegionIndex:
    """Region label of ``x``; coordinates equal to ``h`` or ``1 - h`` go to the collars."""
    _check_bandwidth(h)
    x = _as_points(x)[0]
    lower = frozenset(int(i) for i in np.flatnonzero(x <= h))
    upper = frozenset(int(i) for i in np.flatnonzero(x >= 1.0 - h)) - lower
    interior = frozenset(range(x.size)) - lower - upper
    return RegionIndex(lower, interior, upper)


def regional_kernel_eval(k: KernelSpec, S: RegionIndex, x, y, h: float) -> float:
    """Regional kernel: reflect ``y`` across 0 on ``S.lower`` and across 1 on ``S.upper``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    u = np.empty_like(x)
    for j in range(x.size):
        if j in S.lower:
            u[j] = (x[j] + y[j]) / h
        elif j in S.upper:
            u[j] = (x[j] - 2.0 + y[j]) / h
        else:
            u[j] = (x[j] - y[j]) / h
    return product_kernel_eval(k, u)


def literal_kernel_sum(k: KernelSpec, x, y, h: float) -> float:
    """``sum_S K_S(x, y)`` over all 3^d partitions, term by term."""
    x = np.asarray(x, dtype=float).reshape(-1)
    return float(sum(regional_kernel_eval(k, S, x, y, h) for S in all_regions(x.size)))


def axis_factors(k: KernelSpec, xs: np.ndarray, ys: np.ndarray, h: float) -> np.ndarray:
    """Per-axis mirrored kernel ``K((x-y)/h) + K((x+y)/h) + K((x-2+y)/h)``.

    ``xs`` has shape ``(m,)`` and ``ys`` shape ``(n,)``; returns ``(m, n)``.
    Reflections are only formed for samples within ``h`` of the
    corresponding face, as the others vanish on [0, 1].
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    out = k((xs[:, None] - ys[None, :]) / h)
    near0 = np.flatnonzero(ys <= h)
    if near0.size:
        out[:, near0] += k((xs[:, None] + ys[None, near0]) / h)
    near1 = np.flatnonzero(ys >= 1.0 - h)
    if near1.size:
        out[:, near1] += k((xs[:, None] - 2.0 + ys[None, near1]) / h)
    return out


def reflected_kernel_sum(k: KernelSpec, x, y, h: float) -> float:
    """Mirrored kernel mass at ``x`` from a single sample ``y`` (reflected-points route)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    val = 1.0
    for j in range(x.size):
        val *= axis_factors(k, x[j:j + 1], y[j:j + 1], h)[0, 0]
    return float(val)


@dataclass(frozen=True)
class MirroredKde:
    """Fitted mirror-image KDE with clipping bounds ``[kappa1, kappa2]``."""

    sample: SampleSet
    kernel: KernelSpec
    h: float
    kappa1: float = 0.0
    kappa2: float = np.inf

    def __post_init__(self):
        if not isinstance(self.sample, SampleSet):
            object.__setattr__(self, "sample", SampleSet(self.sample))
        _check_bandwidth(self.h)
        if not 0 <= self.kappa1 <= self.kappa2:
            raise DomainError(f"need 0 <= kappa1 <= kappa2, got ({self.kappa1}, {self.kappa2})")

    @property
    def d(self) -> int:
        return self.sample.d

    @property
    def n(self) -> int:
        return self.sample.n

    def clip(self, values):
        return np.clip(values, self.kappa1, self.kappa2)

    def evaluate_points(self, x) -> np.ndarray:
        """Unclipped estimate at each row of ``x`` (shape ``(m, d)``)."""
        x = _as_points(x, self.d)
        pts = self.sample.points
        n, d = pts.shape
        out = np.empty(x.shape[0])
        step = max(1, _CHUNK_ELEMENTS // n)
        for start in range(0, x.shape[0], step):
            xc = x[start:start + step]
            acc = axis_factors(self.kernel, xc[:, 0], pts[:, 0], self.h)
            for j in range(1, d):
                acc *= axis_factors(self.kernel, xc[:, j], pts[:, j], self.h)
            out[start:start + step] = acc.sum(axis=1)
        return out / (n * self.h**d)

    def evaluate_grid(self, nodes) -> np.ndarray:
        """Unclipped estimate on a tensor grid.

        ``nodes`` is either one 1-D array shared by every axis or a sequence
        of ``d`` per-axis arrays. Returns the flattened grid in C order (last
        axis fastest), matching ``quadrature.tensor_grid``. Cost is
        ``O(prod(len(nodes_j)) * n)``; the last contraction is a matrix product.
        """
        pts = self.sample.points
        n, d = pts.shape
        if isinstance(nodes, np.ndarray) and nodes.ndim == 1 or np.ndim(nodes[0]) == 0:
            axes = [np.asarray(nodes, dtype=float)] * d
        else:
            axes = [np.asarray(a, dtype=float) for a in nodes]
            if len(axes) != d:
                raise DimensionMismatchError(f"got {len(axes)} node arrays for d={d}")
        for a in axes:
            if a.min() < 0.0 or a.max() > 1.0:
                raise DomainError("grid nodes must lie in [0, 1]")
        factors = [axis_factors(self.kernel, axes[j], pts[:, j], self.h) for j in range(d)]
        acc = factors[0]
        for j in range(1, d - 1):
            acc = (acc[:, None, :] * factors[j][None, :, :]).reshape(-1, n)
        if d == 1:
            vals = acc.sum(axis=1)
        else:
            vals = (acc @ factors[-1].T).reshape(-1)
        return vals / (n * self.h**d)

    def __call__(self, x):
        return evaluate(self, x)


def fit(points, kernel: KernelSpec, h: float, kappa1: float = 0.0, kappa2: float = np.inf) -> MirroredKde:
    return MirroredKde(SampleSet(points), kernel, h, kappa1, kappa2)


def evaluate(est: MirroredKde, x):
    """Unclipped estimate; scalar for a single point, array for ``(m, d)`` input."""
    single = np.ndim(x) <= 1
    vals = est.evaluate_points(x)
    return float(vals[0]) if single and vals.size == 1 else vals


def evaluate_clipped(est: MirroredKde, x):
    vals = est.clip(est.evaluate_points(x))
    single = np.ndim(x) <= 1
    return float(vals[0]) if single and vals.size == 1 else vals


def literal_evaluate(est: MirroredKde, x) -> float:
    """Reference estimate from the partition sum; slow, for testing."""
    x = _as_points(x, est.d)[0]
    total = sum(literal_kernel_sum(est.kernel, x, y, est.h) for y in est.sample.points)
    return total / (est.n * est.h**est.d)


def _interval_abs_integral(k: KernelSpec, center: float, h: float) -> float:
    """``int_0^1 |K((x - center)/h)| dx`` with the kernel's support edges as breakpoints."""
    lo, hi = max(0.0, center - h), min(1.0, center + h)
    if hi <= lo:
        return 0.0
    pts = [p for p in (center,) if lo < p < hi]
    val, _ = integrate.quad(lambda t: abs(float(k(np.array([(t - center) / h]))[0])), lo, hi,
                            points=pts or None, epsabs=1e-14, epsrel=1e-12, limit=200)
    return val


def mirrored_mass(k: KernelSpec, y, h: float, d: int | None = None) -> float:
    """``sum_S int_{[0,1]^d} |K_S(x, y)| dx`` by adaptive quadrature.

    Every regional kernel is a product over axes, so each of the ``3**d``
    terms is integrated as a product of 1-D adaptive integrals.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    if d is not None and y.size != d:
        raise DimensionMismatchError(f"y has dimension {y.size}, expected {d}")
    # centre of the kernel in x for each label: reflect across 0, keep, reflect across 1
    per_axis = []
    for yj in y:
        per_axis.append({
            "lower": _interval_abs_integral(k, -yj, h),
            "interior": _interval_abs_integral(k, yj, h),
            "upper": _interval_abs_integral(k, 2.0 - yj, h),
        })
    total = 0.0
    for S in all_regions(y.size):
        term = 1.0
        for j in range(y.size):
            label = "lower" if j in S.lower else "upper" if j in S.upper else "interior"
            term *= per_axis[j][label]
        total += term
    return total
