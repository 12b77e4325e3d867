"""Univariate kernels supported on [-1, 1] and their moment checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import InvalidKernelError

QUAD_TOL = 1e-9
# largest moment order probed when a kernel is registered
MAX_PROBED_ORDER = 8


def _epanechnikov(u):
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)


def _uniform(u):
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) <= 1.0, 0.5, 0.0)


@dataclass(frozen=True)
class KernelSpec:
    """A validated univariate kernel.

    ``evaluate`` must accept numpy arrays and return zero for ``|u| > 1``.
    ``validated_moment_order`` is the largest ``ell`` for which
    ``int u^j K(u) du = 0`` holds for all ``1 <= j <= ell``.
    """

    name: str
    evaluate: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    l1_norm: float
    validated_moment_order: int

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        # enforce the support even if the user function does not
        return np.where(np.abs(u) <= 1.0, self.evaluate(u), 0.0)


@dataclass(frozen=True)
class ValidationReport:
    kernel: str
    ell: int
    tol: float
    moments: tuple[float, ...]
    targets: tuple[float, ...]
    passed_per_moment: tuple[bool, ...]
    l1_norm: float

    @property
    def passed(self) -> bool:
        return all(self.passed_per_moment)

    @property
    def first_failure(self) -> int | None:
        for j, ok in enumerate(self.passed_per_moment):
            if not ok:
                return j
        return None

    def to_dict(self) -> dict:
        return {
            "kernel": self.kernel,
            "ell": self.ell,
            "tol": self.tol,
            "moments": list(self.moments),
            "targets": list(self.targets),
            "passed_per_moment": list(self.passed_per_moment),
            "passed": self.passed,
            "l1_norm": self.l1_norm,
        }


def _scalar(func):
    def g(u):
        val = float(np.asarray(func(np.array([u]))).reshape(-1)[0])
        if not np.isfinite(val):
            raise InvalidKernelError(f"kernel value at u={u!r} is not finite")
        return val

    return g


def _check_finite(func, name):
    grid = np.linspace(-1.0, 1.0, 4001)
    vals = np.asarray(func(grid), dtype=float)
    if vals.shape != grid.shape:
        raise InvalidKernelError(f"kernel {name!r} is not vectorised (shape {vals.shape})")
    if not np.all(np.isfinite(vals)):
        raise InvalidKernelError(f"kernel {name!r} has non-finite values on [-1, 1]")


def kernel_moment(func, j: int) -> float:
    """Return ``int_{-1}^{1} u^j K(u) du`` by adaptive quadrature."""
    g = _scalar(func)
    val, _ = integrate.quad(lambda u: u**j * g(u), -1.0, 1.0, epsabs=1e-13, epsrel=1e-13, limit=200)
    return val


def kernel_l1_norm(func) -> float:
    g = _scalar(func)
    val, _ = integrate.quad(lambda u: abs(g(u)), -1.0, 1.0, epsabs=1e-13, epsrel=1e-13, limit=200)
    return val


def validate_kernel(k: KernelSpec | Callable, ell: int, tol: float = QUAD_TOL) -> ValidationReport:
    """Check normalization and vanishing moments up to order ``ell``.

    Moment ``j = 0`` is compared against 1 and every ``1 <= j <= ell``
    against 0. Accepts a ``KernelSpec`` or a bare vectorised callable.
    """
    if ell < 0:
        raise ValueError(f"ell must be >= 0, got {ell}")
    if not tol > 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    if isinstance(k, KernelSpec):
        name, func = k.name, k
    else:
        name, func = getattr(k, "__name__", "custom"), k
    _check_finite(func, name)
    moments, targets, flags = [], [], []
    for j in range(ell + 1):
        m = kernel_moment(func, j)
        t = 1.0 if j == 0 else 0.0
        moments.append(m)
        targets.append(t)
        flags.append(abs(m - t) <= tol)
    return ValidationReport(
        kernel=name,
        ell=ell,
        tol=tol,
        moments=tuple(moments),
        targets=tuple(targets),
        passed_per_moment=tuple(flags),
        l1_norm=kernel_l1_norm(func),
    )


def make_kernel(name: str, func: Callable, tol: float = QUAD_TOL) -> KernelSpec:
    """Build a ``KernelSpec`` from a vectorised function, probing its moment order.

    Raises ``InvalidKernelError`` when the function is not normalized.
    """
    report = validate_kernel(func, MAX_PROBED_ORDER, tol)
    if not report.passed_per_moment[0]:
        raise InvalidKernelError(f"kernel {name!r} integrates to {report.moments[0]!r}, not 1")
    order = report.first_failure
    order = MAX_PROBED_ORDER if order is None else order - 1
    return KernelSpec(name=name, evaluate=func, l1_norm=report.l1_norm, validated_moment_order=order)


_REGISTRY: dict[str, KernelSpec] = {}


def register_kernel(k: KernelSpec) -> KernelSpec:
    _REGISTRY[k.name] = k
    return k


def get_kernel(name: str) -> KernelSpec:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown kernel {name!r}; registered: {sorted(_REGISTRY)}") from None


def registered_kernels() -> list[str]:
    return sorted(_REGISTRY)


EPANECHNIKOV = register_kernel(make_kernel("epanechnikov", _epanechnikov))
UNIFORM = register_kernel(make_kernel("uniform", _uniform))


def product_kernel_eval(k: KernelSpec, v) -> float | np.ndarray:
    """Product kernel ``prod_i K(v_i)``; the last axis of ``v`` indexes coordinates."""
    v = np.asarray(v, dtype=float)
    if v.ndim == 0:
        raise ValueError("v must have at least one coordinate")
    out = np.prod(k(v), axis=-1)
    return float(out) if out.ndim == 0 else out
