import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special, stats

from parisruin import BM_DEFAULT, CL_DEFAULT, JumpSpec, LambdaKernel, LevyModel, QuadratureConfig, ScaleFunction
from parisruin.errors import DomainError, TruncationFailure
from parisruin.lambda_kernel import (
    kendall_transform_check,
    lambda_exp_moment,
    lambda_q,
    lambda_time_integral,
)

JUMP_DIFF = LevyModel(1.0, 0.5, JumpSpec.exponential(0.8, 1.5))
C, A, ALPHA = 1.5, 1.0, 1.0


def w_cl0(x):
    """``W^(0)`` of the default CL model in closed form."""
    return np.where(x >= 0, (1 - A / (C * ALPHA) * np.exp(-(ALPHA - A / C) * x)) / (C - A / ALPHA), 0.0)


def cl_density(s, z):
    """Continuous density of ``X_s = C s - S_s`` for exponential claims (Bessel form)."""
    w = C * s - z
    if w <= 0:
        return 0.0
    arg = 2 * math.sqrt(A * ALPHA * s * w)
    return math.exp(-A * s - ALPHA * w) * math.sqrt(A * ALPHA * s / w) * special.ive(1, arg) * math.exp(arg)


def cl_sample(s, n, rng):
    counts = rng.poisson(A * s, n)
    claims = rng.gamma(np.maximum(counts, 1), 1 / ALPHA) * (counts > 0)
    return C * s - claims


@pytest.fixture(scope="module")
def cl0():
    return LambdaKernel(CL_DEFAULT, 0.0)


@pytest.mark.parametrize("model", [CL_DEFAULT, BM_DEFAULT, JUMP_DIFF], ids=["cl", "bm", "jumpdiff"])
def test_sentinel_on_grid(model):
    for q in (0.0, 0.05, 0.1):
        k = LambdaKernel(model, q)
        for r in (0.5, 1.0, 2.0):
            assert k.lambda_q(0.0, r) == pytest.approx(math.exp(q * r), rel=1e-6)


def test_sentinel_examples():
    assert lambda_q(LambdaKernel(CL_DEFAULT, 0.1), 0.0, 2.0) == pytest.approx(math.exp(0.2), rel=1e-6)
    assert LambdaKernel(BM_DEFAULT, 0.0).lambda_q(0.0, 3.7) == pytest.approx(1.0, rel=1e-6)


def test_lambda_against_bessel_quadrature(cl0):
    for x, r in ((1.0, 1.0), (0.0, 0.5), (-0.7, 2.0)):
        cont = integrate.quad(lambda z: w_cl0(x + z) * z / r * cl_density(r, z), max(0.0, -x), C * r,
                              epsabs=1e-13, limit=200)[0]
        atom = w_cl0(x + C * r) * C * math.exp(-A * r)
        assert cl0.lambda_q(x, r) == pytest.approx(cont + atom, rel=1e-9)


def test_lambda_against_monte_carlo(cl0):
    rng = np.random.default_rng(7)
    xs = cl_sample(1.0, 1_000_000, rng)
    vals = np.where(xs > 0, w_cl0(1.0 + xs) * xs, 0.0)
    mean, se = vals.mean(), vals.std(ddof=1) / math.sqrt(vals.size)
    assert abs(cl0.lambda_q(1.0, 1.0) - mean) < 3 * se


def test_time_integral_against_2d_quadrature(cl0):
    lam, r, x = 1.0, 1.0, 1.0
    p = CL_DEFAULT.psi(lam)
    cont = integrate.dblquad(lambda z, s: math.exp(-p * s) * w_cl0(x + z) * z / s * cl_density(s, z),
                             0.0, r, 0.0, lambda s: C * s, epsabs=1e-12, epsrel=1e-10)[0]
    atom = integrate.quad(lambda s: math.exp(-p * s) * w_cl0(x + C * s) * C * math.exp(-A * s), 0, r,
                          epsabs=1e-14)[0]
    assert lambda_time_integral(cl0, x, r, lam) == pytest.approx(cont + atom, abs=1e-5)
    assert cl0.lambda_time_integral(x, r, lam) == pytest.approx(cont + atom, rel=1e-8)


@pytest.mark.parametrize("model", [CL_DEFAULT, BM_DEFAULT], ids=["cl", "bm"])
def test_time_integral_at_zero(model):
    k = LambdaKernel(model, 0.1)
    for lam in (0.0, 0.5, 2.0):
        g = model.psi(lam) - 0.1
        expect = (1 - math.exp(-g * 1.5)) / g
        assert k.lambda_time_integral(0.0, 1.5, lam) == pytest.approx(expect, rel=1e-8)
    assert k.lambda_time_integral(0.0, 2.0, k.phi_q) == pytest.approx(2.0, abs=1e-8)


def test_time_integral_vectorised():
    k = LambdaKernel(CL_DEFAULT, 0.05)
    xs = np.array([-1.0, 0.0, 0.5, 2.0])
    vec = k.lambda_time_integral(xs, 1.0, 0.5)
    assert np.allclose(vec, [k.lambda_time_integral(x, 1.0, 0.5) for x in xs], rtol=1e-13)


def test_exp_moment_gaussian_closed_form():
    k = LambdaKernel(BM_DEFAULT, 0.0)
    expect = stats.norm.pdf(1.0) + stats.norm.cdf(1.0)
    assert lambda_exp_moment(k, 1.0) == pytest.approx(expect, rel=1e-9)
    # law of large numbers: E[X_r^+] / r -> psi'(0)
    assert k.lambda_exp_moment(200.0) == pytest.approx(BM_DEFAULT.dpsi(0.0), rel=1e-2)
    assert LambdaKernel(CL_DEFAULT, 0.0).lambda_exp_moment(200.0) == pytest.approx(0.5, rel=1e-2)


def test_exp_moment_against_monte_carlo():
    k = LambdaKernel(CL_DEFAULT, 0.1)
    rng = np.random.default_rng(11)
    xs = cl_sample(1.0, 1_000_000, rng)
    vals = np.where(xs > 0, np.exp(k.phi_q * xs) * xs, 0.0)
    mean, se = vals.mean(), vals.std(ddof=1) / math.sqrt(vals.size)
    got = k.lambda_exp_moment(1.0)
    assert got > 0 and abs(got - mean) < 3 * se


def test_kendall_examples():
    assert abs(kendall_transform_check(LambdaKernel(CL_DEFAULT, 0.0), 0.0, 1.0)) < 1e-6
    assert abs(LambdaKernel(BM_DEFAULT, 0.2).kendall_transform_check(0.5, 0.7)) < 1e-5
    for model in (CL_DEFAULT, BM_DEFAULT):
        assert abs(LambdaKernel(model, 0.1).kendall_transform_check(-1e4, 1.0)) < 1e-8


@pytest.mark.parametrize("model", [CL_DEFAULT, BM_DEFAULT, JUMP_DIFF], ids=["cl", "bm", "jumpdiff"])
def test_kendall_grid(model):
    for x, theta, q in ((0.0, 0.5, 0.0), (1.0, 1.0, 0.1), (-0.5, 2.0, 0.05), (3.0, 0.3, 0.1)):
        assert abs(LambdaKernel(model, q).kendall_transform_check(x, theta)) < 1e-5


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([CL_DEFAULT, BM_DEFAULT]), st.sampled_from([0.0, 0.1]),
       st.floats(-3, 4), st.floats(0.01, 2), st.floats(0.05, 3))
def test_nonnegative_and_monotone_in_x(model, q, x, dx, r):
    k = LambdaKernel(model, q)
    lo, hi = k.lambda_q(np.array([x, x + dx]), r)
    assert lo >= 0
    assert hi >= lo * (1 - 1e-12)


def test_small_r_limit_bounded_variation(cl0):
    # X_s / s -> c as s -> 0, so Lambda(x, 0+) = c W(x) when there is no Gaussian part
    for x in (0.5, 1.0, 3.0):
        assert cl0.lambda_q(x, 1e-4) == pytest.approx(C * w_cl0(x), rel=1e-2)


def test_small_r_limit_gaussian():
    # with a Gaussian part E[X_s^+] / s ~ sigma / sqrt(2 pi s), so Lambda(x, s) grows like s^(-1/2)
    k = LambdaKernel(BM_DEFAULT, 0.0)
    s = 1e-6
    ratio = k.lambda_q(1.0, s) / (k.sf.w(1.0) / math.sqrt(2 * math.pi * s))
    assert ratio == pytest.approx(1.0, rel=1e-2)


def test_truncation_failure_and_domain():
    k = LambdaKernel(CL_DEFAULT, 0.1, quad=QuadratureConfig(z_max=0.5))
    with pytest.raises(TruncationFailure):
        k.lambda_q(1.0, 2.0)
    with pytest.raises(DomainError):
        LambdaKernel(CL_DEFAULT, 0.1).lambda_q(1.0, 0.0)
    with pytest.raises(ValueError):
        LambdaKernel(CL_DEFAULT, 0.1, sf=ScaleFunction(CL_DEFAULT, 0.2))
    with pytest.raises(ValueError):
        QuadratureConfig(lambda_tol=0.0)
