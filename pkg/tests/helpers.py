"""Independent quadrature oracles used across the test modules."""

import numpy as np

from renyidiv.mirrored_kde import axis_factors

_GL3_X, _GL3_W = np.polynomial.legendre.leggauss(3)


def axis_breakpoints(ys, h):
    """Every point in [0, 1] where a (reflected) kernel support starts or ends."""
    ys = np.asarray(ys, dtype=float)
    centers = np.concatenate([ys, -ys, 2.0 - ys])
    pts = np.concatenate([centers - h, centers + h, [0.0, 1.0]])
    return np.unique(pts[(pts >= 0.0) & (pts <= 1.0)])


def composite_rule(breaks):
    """3-point Gauss-Legendre on each panel; exact for piecewise quintics."""
    a, b = breaks[:-1], breaks[1:]
    keep = b > a
    a, b = a[keep], b[keep]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    nodes = (mid[:, None] + half[:, None] * _GL3_X[None, :]).reshape(-1)
    weights = (half[:, None] * _GL3_W[None, :]).reshape(-1)
    return nodes, weights


def exact_rules(est):
    """Per-axis composite rules aligned with the estimator's kinks."""
    return [composite_rule(axis_breakpoints(est.sample.points[:, j], est.h)) for j in range(est.d)]


def integrate_on_grid(est, rules):
    """Tensor quadrature of ``est.evaluate_grid`` over the per-axis rules (materializes the grid)."""
    vals = est.evaluate_grid([r[0] for r in rules]).reshape([r[0].size for r in rules])
    for _, w in rules:
        vals = np.tensordot(vals, w, axes=([0], [0]))
    return float(vals)


def integrate_separable(est, rules):
    """Same tensor rule applied term by term; each sample's kernel is a product over axes."""
    pts = est.sample.points
    acc = np.ones(est.n)
    for j, (nodes, w) in enumerate(rules):
        acc *= w @ axis_factors(est.kernel, nodes, pts[:, j], est.h)
    return float(acc.sum() / (est.n * est.h**est.d))


def cos_density(x):
    """Smooth density on [0, 1] with vanishing derivative at both ends."""
    x = np.asarray(x, dtype=float)
    return 1.0 + 0.5 * np.cos(2.0 * np.pi * x)


def sample_cos_density(n, rng):
    out = np.empty(0)
    while out.size < n:
        u = rng.uniform(size=2 * n)
        acc = rng.uniform(size=2 * n) * 1.5 <= cos_density(u)
        out = np.concatenate([out, u[acc]])
    return out[:n]
