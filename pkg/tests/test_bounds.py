import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from renyidiv.bounds import (bias_bound, bound_constants, compute_c2, compute_c3, compute_cf, compute_cl,
                             concentration_bound, effective_beta, empirical_bias_field, mse_bound,
                             optimal_bandwidth, variance_bound)
from renyidiv.errors import DomainError
from renyidiv.kernel import EPANECHNIKOV as E, UNIFORM, make_kernel
from renyidiv.mirrored_kde import HolderParams, MirroredKde, SampleSet
from renyidiv.quadrature import tensor_grid


def grid_cf(k1, k2, a, m=100):
    x1, x2 = np.meshgrid(np.linspace(k1, k2, m), np.linspace(k1, k2, m))
    parts = [a * x1 ** (a - 1) * x2 ** (1 - a), (1 - a) * x1**a * x2 ** (-a),
             a * (a - 1) * x1 ** (a - 2) * x2 ** (1 - a), a * (a - 1) * x1**a * x2 ** (-a - 1),
             a * (1 - a) * x1 ** (a - 1) * x2 ** (-a)]
    return max(np.abs(p).max() for p in parts)


def grid_cl(k1, k2, a, m=100):
    x1, x2 = np.meshgrid(np.linspace(k1, k2, m), np.linspace(k1, k2, m))
    return 1.0 / (x1**a * x2 ** (1 - a)).min()


def test_cf_examples():
    assert compute_cf(1, 1, 0.8) == pytest.approx(0.8)
    assert compute_cf(1, 1, 0.5) == pytest.approx(0.5)
    assert compute_cf(0.1, 3.2, 0.8) == pytest.approx(grid_cf(0.1, 3.2, 0.8), rel=1e-12)


def test_cl_examples():
    assert compute_cl(0.7, 0.7, 0.8) == pytest.approx(1 / 0.7)
    assert compute_cl(1, 2, 0.8) == pytest.approx(1.0)
    # f increases in both arguments for alpha in (0, 1): the minimum is f(kappa1, kappa1)
    assert compute_cl(0.1, 3.2, 0.8) == pytest.approx(1 / 0.1, rel=1e-12)
    assert compute_cl(0.1, 3.2, 0.8) == pytest.approx(grid_cl(0.1, 3.2, 0.8), rel=1e-12)


def test_corner_evaluation_for_large_alpha():
    # alpha > 1 flips the sign of several partials; corners must still win
    for a in (1.5, 3.0):
        assert compute_cf(0.2, 2.0, a) == pytest.approx(grid_cf(0.2, 2.0, a), rel=1e-12)
        assert compute_cl(0.2, 2.0, a) == pytest.approx(grid_cl(0.2, 2.0, a), rel=1e-12)


@pytest.mark.parametrize("args", [(0.0, 1.0, 0.8), (1.0, 0.5, 0.8), (0.1, 1.0, 1.0)])
def test_constant_domain_errors(args):
    with pytest.raises(DomainError):
        compute_cf(*args)


def c3_reference(L, r, beta, d):
    ell = math.ceil(beta) - 1
    first = (3 * d ** (1 / r)) ** beta
    second = sum(Fraction(math.comb(ell, k)) * (3 * d) ** k for k in range(ell + 1)) / math.factorial(ell)
    return L * (first + float(second))


@pytest.mark.parametrize("L, r, beta, d, expected", [
    (1.0, 1.0, 1.0, 1, 4.0),
    (0.0, 2.0, 2.0, 3, 0.0),
    (1.0, 2.0, 2.0, 3, 37.0),
])
def test_c3_examples(L, r, beta, d, expected):
    h = HolderParams(beta, L, r, 0.1, 1.0)
    assert compute_c3(h, d) == pytest.approx(expected, rel=1e-12, abs=1e-12)
    assert compute_c3(h, d) == pytest.approx(c3_reference(L, r, beta, d), rel=1e-12, abs=1e-12)


def test_constants_record():
    h = HolderParams(2.0, 1.5, 2.0, 0.1, 3.2)
    c = bound_constants(h, E, 3, 0.8)
    assert c.k1 == (abs(0.8 - 1) / (2 * c.c_l * c.c_f)) ** 2
    assert c.c2 == 1.5 / math.factorial(1) * E.l1_norm**3
    assert c.c2 == compute_c2(h, E, 3)
    assert c.prefactor == pytest.approx(c.c_f * c.c_l / (0.2 * 0.1))
    assert all(v > 0 for v in (c.c_f, c.c_l, c.c2, c.c3, c.k1, c.mcdiarmid_c, *c.bias_coeffs))
    bare = bound_constants(h, E, 3, 0.8, include_prefactor=False)
    assert bare.bias_coeffs == pytest.approx((bare.c2 + bare.c3, bare.c2, 3.2 * E.l1_norm**3))
    assert set(c.to_dict()) >= {"c_f", "c_l", "c2", "c3", "k1", "mcdiarmid_c", "bias_coeffs"}


def test_refuses_smoothness_beyond_kernel():
    with pytest.raises(DomainError):
        bound_constants(HolderParams(2.5, 1.0, 2.0, 0.1, 1.0), E, 1, 0.8)
    assert effective_beta(math.inf, E) == 2.0
    assert effective_beta(1.5, E) == 1.5
    quartic = make_kernel("quartic-b", lambda u: np.where(np.abs(u) <= 1, 15 / 32 * (3 - 10 * u**2 + 7 * u**4), 0.0))
    assert effective_beta(math.inf, quartic) == 4.0


def _setup(d=3, beta=2.0):
    holder = HolderParams(beta, 1.0, 2.0, 0.1, 3.2)
    return holder, bound_constants(holder, E, d, 0.8)


def bias_reference(holder, d, n, h, alpha=0.8, k1=0.1, k2=3.2, l1=1.0):
    # second transcription: constants rebuilt from scratch
    a = alpha
    corners = [(x, y) for x in (k1, k2) for y in (k1, k2)]
    cf = max(max(abs(a * x ** (a - 1) * y ** (1 - a)), abs((1 - a) * x**a * y ** -a),
                 abs(a * (a - 1) * x ** (a - 2) * y ** (1 - a)), abs(a * (1 - a) * x**a * y ** (-a - 1)),
                 abs(a * (1 - a) * x ** (a - 1) * y ** -a)) for x, y in corners)
    cl = 1 / min(x**a * y ** (1 - a) for x, y in corners)
    ell = math.ceil(holder.beta) - 1
    c2 = holder.L / math.factorial(ell) * l1**d
    c3 = holder.L * ((3 * d ** (1 / holder.r)) ** holder.beta + (3 * d + 1) ** ell / math.factorial(ell))
    pref = cf * cl / (abs(a - 1) * k1)
    b = holder.beta
    return pref * ((c2 + c3) * h**b + c2 * h ** (2 * b) + k2 * l1**d / (n * h**d))


def test_bias_bound_dual_implementation():
    holder, c = _setup()
    for n in (1, 10, 1000, 5000):
        for h in (0.05, 0.25, 0.4):
            assert bias_bound(c, holder, E, 3, n, h) == pytest.approx(bias_reference(holder, 3, n, h), rel=1e-12)


def test_bias_bound_limits():
    holder, c = _setup()
    vals = [bias_bound(c, holder, E, 3, 100, h) for h in (1e-2, 1e-3, 1e-4)]
    assert vals[0] < vals[1] < vals[2]
    a, b, _ = c.bias_coeffs
    limit = a * 0.25**2 + b * 0.25**4
    assert bias_bound(c, holder, E, 3, 10**15, 0.25) == pytest.approx(limit, rel=1e-6)
    with pytest.raises(DomainError):
        bias_bound(c, holder, E, 3, 10, 0.5)


def test_concentration_bound():
    _, c = _setup()
    assert concentration_bound(c, 0.0, 10, E, 3) == 1.0
    assert concentration_bound(c, 0.5, 10**14, E, 3) < 1e-6
    # doubling n squares the half-bound
    half = lambda n: 2 * math.exp(-c.mcdiarmid_c**2 * 0.3**2 * n) / 2  # noqa: E731
    assert half(2 * 10**9) == pytest.approx(half(10**9) ** 2, rel=1e-10)
    assert concentration_bound(c, 0.3, 10**9, E, 3) == pytest.approx(2 * half(10**9), rel=1e-12)


def test_variance_bound():
    from dataclasses import replace

    _, c = _setup()
    unit = replace(c, k1=1.0)
    assert variance_bound(unit, 2, UNIFORM, 1) == pytest.approx(1.0)
    assert variance_bound(c, 200, E, 3) == pytest.approx(variance_bound(c, 100, E, 3) / 2)


@pytest.mark.parametrize("beta, d, n, expected", [
    (2.0, 2, 81, 81 ** (-1 / 4)),
    (1.0, 1, 16, 0.25),
    (2.0, 3, 1, 0.499),
    (math.inf, 3, 1000, 0.499),
])
def test_optimal_bandwidth(beta, d, n, expected):
    assert optimal_bandwidth(beta, d, n) == pytest.approx(expected)


def test_mse_bound_shape():
    holder, c = _setup(d=1, beta=2.0)
    ns = [1, 2, 5, 10, 50, 100, 500, 1000, 2000, 5000]
    vals = [mse_bound(c, holder, E, 1, n) for n in ns]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    # beta >= d: squared bias decays faster than the 1/n variance term
    ratio = [bias_bound(c, holder, E, 1, n, optimal_bandwidth(2.0, 1, n)) ** 2 / variance_bound(c, n, E, 1)
             for n in (10**4, 10**6, 10**8)]
    assert ratio[0] > ratio[1] > ratio[2]


@given(st.floats(0.05, 0.9), st.floats(1.0, 4.0), st.floats(0.1, 3.0).filter(lambda a: abs(a - 1) > 1e-3))
@settings(max_examples=50, deadline=None)
def test_constants_match_grid_search(k1, span, a):
    k2 = k1 * span
    assert compute_cf(k1, k2, a) == pytest.approx(grid_cf(k1, k2, a), rel=1e-9)
    assert compute_cl(k1, k2, a) == pytest.approx(grid_cl(k1, k2, a), rel=1e-9)


def test_bias_field_uniform_density_is_unbiased():
    rng_root = np.random.SeedSequence(3)
    children = rng_root.spawn(100)
    pts, w = tensor_grid(120, 1)

    def build(i):
        rng = np.random.default_rng(children[i])
        return MirroredKde(SampleSet(rng.uniform(size=200)), E, 0.2)

    field = empirical_bias_field(build, lambda x: np.ones(len(x)), (pts, w), refits=100)
    # exactly unbiased up to Monte Carlo noise, including the collars
    assert abs(field.integrated_sq_bias) < 4 * field.standard_error + 1e-4
    assert field.integrated_sq_bias_raw >= field.integrated_sq_bias


def flat_center_density(x):
    x = np.asarray(x, dtype=float)
    return 1.0 + 4.0 * ((x - 0.5) ** 4 - 1.0 / 80.0)


def test_bias_field_center_of_symmetric_density():
    children = np.random.SeedSequence(9).spawn(200)
    center = np.array([[0.5]])

    def build(i):
        rng = np.random.default_rng(children[i])
        out = np.empty(0)
        while out.size < 500:
            u = rng.uniform(size=1000)
            out = np.concatenate([out, u[rng.uniform(size=1000) * 1.2 <= flat_center_density(u)]])
        return MirroredKde(SampleSet(out[:500]), E, 0.1)

    # p'' vanishes at the center, so the leading bias term is O(h^4)
    field = empirical_bias_field(build, lambda x: flat_center_density(x[:, 0]), (center, np.ones(1)), refits=200)
    assert abs(field.bias[0]) < 3 * field.pointwise_se[0]
