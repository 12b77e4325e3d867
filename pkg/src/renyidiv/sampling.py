"""Gaussians with diagonal covariance restricted to the unit cube.

Random streams use numpy's ``Philox`` (4x64, counter-based) seeded
through ``numpy.random.SeedSequence``. A seed is either an integer or a
``SeedSequence``; child streams for trials come from ``spawn_key``
tuples, see ``experiment.trial_seed``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .errors import DomainError, PathologicalDistributionError
from .mirrored_kde import SampleSet

RNG_ALGORITHM = "numpy.random.Philox (4x64-10) seeded by SeedSequence"
MIN_ACCEPTANCE = 1e-6


def make_rng(seed) -> np.random.Generator:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(int(seed))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True, eq=False)
class TruncatedGaussian:
    """``N(mean, diag(var))`` conditioned on ``[0, 1]^d``; ``var`` holds variances."""

    mean: np.ndarray
    var: np.ndarray
    normalizer: float = field(init=False)

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        var = np.asarray(self.var, dtype=float)
        if var.ndim == 0:
            var = np.full(mean.shape, float(var))
        if var.ndim == 2:
            if np.any(var != np.diag(np.diag(var))):
                raise DomainError("only diagonal covariance matrices are supported")
            var = np.diag(var).copy()
        if var.shape != mean.shape:
            raise DomainError(f"mean has shape {mean.shape} but variances have shape {var.shape}")
        if np.any(var <= 0) or not np.all(np.isfinite(var)) or not np.all(np.isfinite(mean)):
            raise DomainError("variances must be positive and finite")
        for a in (mean, var):
            a.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "var", var)
        sd = np.sqrt(var)
        z = float(np.prod(ndtr((1.0 - mean) / sd) - ndtr(-mean / sd)))
        object.__setattr__(self, "normalizer", z)

    def __eq__(self, other):
        if not isinstance(other, TruncatedGaussian):
            return NotImplemented
        return np.array_equal(self.mean, other.mean) and np.array_equal(self.var, other.var)

    def __hash__(self):
        return hash((self.mean.tobytes(), self.var.tobytes()))

    @classmethod
    def from_std(cls, mean, std):
        return cls(mean, np.asarray(std, dtype=float) ** 2)

    @property
    def d(self) -> int:
        return self.mean.size

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(self.var)

    def untruncated_pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        z = (x - self.mean) / self.std
        return np.exp(-0.5 * np.sum(z * z, axis=-1)) / np.prod(np.sqrt(2 * np.pi * self.var))

    def __call__(self, x):
        return density(self, x)

    def hessian(self, x) -> np.ndarray:
        """Hessian of the truncated density at each row of ``x``; shape ``(m, d, d)``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        p = self.untruncated_pdf(x) / self.normalizer
        g = (x - self.mean) / self.var
        hess = g[:, :, None] * g[:, None, :]
        hess -= np.diag(1.0 / self.var)[None]
        return p[:, None, None] * hess

    def holder_constant(self, r: float = 2.0, grid_points: int = 41) -> float:
        """Lipschitz constant of the gradient in the ``r``-norm (the beta = 2 Holder constant).

        ``|d_i p(x + v) - d_i p(x)| <= sup ||grad d_i p||_{r*} ||v||_r`` with
        ``r*`` the dual exponent; the supremum is taken over a uniform grid
        that includes the cube's faces.
        """
        axis = np.linspace(0.0, 1.0, grid_points)
        pts = np.stack([g.reshape(-1) for g in np.meshgrid(*([axis] * self.d), indexing="ij")], axis=-1)
        hess = self.hessian(pts)
        dual = np.inf if r == 1 else r / (r - 1.0)
        rows = np.linalg.norm(hess, ord=dual, axis=-1)
        return float(rows.max())


def density(dist: TruncatedGaussian, x) -> np.ndarray | float:
    x = np.asarray(x, dtype=float)
    pts = np.atleast_2d(x)
    if pts.shape[-1] != dist.d:
        raise DomainError(f"point dimension {pts.shape[-1]} does not match d={dist.d}")
    if pts.min() < 0.0 or pts.max() > 1.0:
        raise DomainError("density is only defined on [0, 1]^d")
    vals = dist.untruncated_pdf(pts) / dist.normalizer
    return float(vals[0]) if x.ndim <= 1 else vals


def sample(dist: TruncatedGaussian, n: int, seed) -> SampleSet:
    """``n`` i.i.d. draws by rejection of untruncated Gaussian proposals.

    Proposals are drawn in batches sized from the exact acceptance rate
    (the normalizer), so the output depends only on ``(dist, n, seed)``.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if dist.normalizer < MIN_ACCEPTANCE:
        raise PathologicalDistributionError(
            f"acceptance rate {dist.normalizer:.3g} is below {MIN_ACCEPTANCE:g}")
    rng = make_rng(seed)
    out = np.empty((n, dist.d))
    filled = 0
    while filled < n:
        batch = int(np.ceil(1.1 * (n - filled) / dist.normalizer)) + 16
        prop = dist.mean + dist.std * rng.standard_normal((batch, dist.d))
        keep = prop[np.all((prop >= 0.0) & (prop <= 1.0), axis=1)]
        take = min(keep.shape[0], n - filled)
        out[filled:filled + take] = keep[:take]
        filled += take
    return SampleSet(out)
