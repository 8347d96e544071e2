import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from parisruin import BM_DEFAULT, CL_DEFAULT, JumpSpec, LevyModel, MarginalLaw, preset
from parisruin.errors import MethodUnavailable
from parisruin.levy_model import marginal_density

ERLANG = LevyModel(2.0, 0.0, JumpSpec.erlang(1.0, 2, 2.0))
JUMP_DIFF = LevyModel(1.0, 0.5, JumpSpec.exponential(0.8, 1.5))
DET_DIFF = LevyModel(1.2, 0.4, JumpSpec.deterministic(0.5, 1.0))
MODELS = [CL_DEFAULT, BM_DEFAULT, ERLANG, JUMP_DIFF, DET_DIFF]


def test_psi_examples():
    assert BM_DEFAULT.psi(1.0) == 1.5
    assert CL_DEFAULT.psi(1.0) == pytest.approx(1.0, abs=1e-15)
    for m in MODELS:
        assert m.psi(0.0) == 0.0


def test_phi_examples():
    assert BM_DEFAULT.phi(0.0) == 0.0
    assert BM_DEFAULT.phi(1.5) == pytest.approx(1.0, abs=1e-12)
    assert LevyModel.brownian(-1.0, 1.0).phi(0.0) == pytest.approx(2.0, abs=1e-12)


def test_degenerate_models_rejected():
    with pytest.raises(ValueError):
        LevyModel(1.0, 0.0)
    with pytest.raises(ValueError):
        LevyModel(-1.0, 0.0, JumpSpec.exponential(1.0, 1.0))
    with pytest.raises(ValueError):
        JumpSpec.exponential(-1.0, 1.0)
    with pytest.raises(ValueError):
        JumpSpec.deterministic(1.0, 0.0)


def test_presets_and_round_trip():
    assert preset("cl-default") == CL_DEFAULT
    assert preset("bm-default") == BM_DEFAULT
    with pytest.raises(ValueError):
        preset("nope")
    for m in MODELS:
        assert LevyModel.from_dict(m.to_dict()) == m


def test_psi_derivative_matches_finite_difference():
    for m in MODELS:
        for lam in (0.0, 0.3, 2.0):
            h = 1e-5
            fd = (m.psi(lam + h) - m.psi(lam - h)) / (2 * h)
            assert m.dpsi(lam) == pytest.approx(fd, rel=1e-8, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(MODELS), st.floats(0, 5), st.floats(0, 5), st.floats(0.05, 0.95))
def test_psi_convex(m, a, b, w):
    lo, hi = min(a, b), max(a, b)
    mid = w * lo + (1 - w) * hi
    assert m.psi(mid) <= w * m.psi(lo) + (1 - w) * m.psi(hi) + 1e-12


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(MODELS), st.floats(0, 10), st.floats(0, 10))
def test_phi_inverts_psi_and_is_monotone(m, q1, q2):
    p1, p2 = m.phi(q1), m.phi(q2)
    assert abs(m.psi(p1) - q1) <= 1e-12 * max(1.0, q1) * 10
    if q1 <= q2:
        assert p1 <= p2 + 1e-12


def test_marginal_examples():
    law = MarginalLaw(LevyModel.brownian(0.0, 1.0), 1.0)
    assert law.pdf(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-14)
    loc, mass = MarginalLaw(CL_DEFAULT, 2.0).atoms
    assert loc[0] == 3.0 and mass[0] == pytest.approx(math.exp(-2.0), rel=1e-15)


def test_series_matches_fourier_for_cl():
    series = MarginalLaw(CL_DEFAULT, 1.0, method="series")
    fourier = MarginalLaw(CL_DEFAULT, 1.0, method="fourier")
    z = np.array([-2.0, 0.0, 0.5, 1.2])
    assert np.max(np.abs(series.pdf(z) - fourier.pdf(z))) < 1e-6
    # closed form for N = 1: exp(-a t) a t alpha exp(-alpha w) contributes most
    pdf, (loc, mass) = marginal_density(series, np.array([0.5]))
    assert pdf[0] > 0 and loc[0] == 1.5


def test_series_matches_fourier_for_erlang():
    series = MarginalLaw(ERLANG, 1.5, method="series")
    fourier = MarginalLaw(ERLANG, 1.5, method="fourier")
    z = np.array([-1.0, 0.7, 2.5])
    assert np.max(np.abs(series.pdf(z) - fourier.pdf(z))) < 1e-6


def test_fourier_with_gaussian_part_matches_convolution():
    # X_t = N(mu t, sigma^2 t) - S_t with exponential claims, by direct convolution
    m, t = JUMP_DIFF, 1.0
    law = MarginalLaw(m, t)
    a, alpha, sd = m.jumps.rate, m.jumps.alpha, m.sigma * math.sqrt(t)

    def direct(z):
        out = math.exp(-a * t) * stats.norm.pdf(z, m.mu * t, sd)
        for n in range(1, 40):
            wn = stats.poisson.pmf(n, a * t)
            f = lambda s, n=n: stats.gamma.pdf(s, n, scale=1 / alpha) * stats.norm.pdf(z + s, m.mu * t, sd)
            out += wn * integrate.quad(f, 0, np.inf, limit=200)[0]
        return out

    for z in (-1.0, 0.3, 1.5):
        assert law.pdf(z) == pytest.approx(direct(z), abs=1e-8)


def test_method_unavailable():
    with pytest.raises(MethodUnavailable):
        MarginalLaw(CL_DEFAULT, 1.0, method="gaussian")
    with pytest.raises(MethodUnavailable):
        MarginalLaw(BM_DEFAULT, 1.0, method="series")
    with pytest.raises(MethodUnavailable):
        MarginalLaw(LevyModel(1.0, 0.0, JumpSpec.deterministic(1.0, 0.5)), 1.0, method="fourier")


@pytest.mark.parametrize("m", MODELS, ids=["cl", "bm", "erlang", "jumpdiff", "detdiff"])
@pytest.mark.parametrize("t", [0.5, 2.0])
def test_marginal_mass_and_exponential_moment(m, t):
    law = MarginalLaw(m, t)
    assert law.expect(lambda z: np.ones_like(z)) == pytest.approx(1.0, abs=1e-8)
    for lam in (0.5, m.phi(0.1)):
        got = law.expect(lambda z: np.exp(lam * z), tilt=lam)
        assert got == pytest.approx(math.exp(m.psi(lam) * t), rel=1e-5)


def test_lundberg_exponent_cl():
    # psi(-R) = 0 for CL with Exp(1) claims: R = alpha - a / c
    assert CL_DEFAULT.lundberg_exponent() == pytest.approx(1 - 1 / 1.5, rel=1e-10)
    # Brownian motion: R = 2 mu / sigma^2
    assert BM_DEFAULT.lundberg_exponent() == pytest.approx(2.0, rel=1e-10)
