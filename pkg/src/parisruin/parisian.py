"""Fluctuation identities for Parisian ruin with a fixed delay ``r``.

Parisian ruin ``tau_r`` is the first time an excursion below zero has lasted
``r`` units of time; ``tau_b^+`` is the first passage above ``b``. All
quantities below are assembled from the scale function ``W^(q)``, the kernel
``Lambda^(q)`` and a handful of one-dimensional quadratures.

Values that leave the range implied by their probabilistic meaning are
reported with a :class:`RangeWarning`, never clipped.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NetProfitViolation, PrecisionWarning, RangeWarning
from .lambda_kernel import LambdaKernel
from .quadrature import gl_rule, interior_breaks, sqrt_end_rule

__all__ = [
    "ParisianQuery",
    "PotentialDensityPoint",
    "joint_laplace",
    "exit_laplace",
    "potential_laplace",
    "potential_density_pos",
    "potential_density_full",
    "joint_laplace_inf_b",
    "potential_laplace_inf_b",
    "ruin_probability",
]

RANGE_TOL = 1e-8
DENSITY_WARN = 1e-4


@dataclass(frozen=True)
class ParisianQuery:
    """Arguments ``(x, b, q, lam, r)`` of one identity; ``b`` may be ``inf``."""

    x: float
    b: float
    q: float
    lam: float
    r: float

    def __post_init__(self):
        if not self.r > 0:
            raise DomainError("the delay r must be positive")
        if not (self.q >= 0 and self.lam >= 0):
            raise DomainError("q and lam must be nonnegative")
        if not self.b > 0:
            raise DomainError("b must be positive")
        if self.x > self.b:
            raise DomainError(f"x = {self.x} exceeds b = {self.b}")
        if math.isnan(self.x):
            raise DomainError("x is NaN")

    @property
    def finite_b(self) -> bool:
        return math.isfinite(self.b)


@dataclass(frozen=True)
class PotentialDensityPoint:
    """Density of the ``exp(q r)``-weighted killed potential measure at ``y``."""

    y: float
    value: float
    abs_error: float


def _check(k: LambdaKernel, query: ParisianQuery, finite: bool | None = True):
    if abs(k.q - query.q) > 0:
        raise DomainError(f"kernel is built for q = {k.q}, query has q = {query.q}")
    if finite is True and not query.finite_b:
        raise DomainError("this identity needs a finite barrier b")
    if finite is False and query.finite_b:
        raise DomainError("this identity is the b = inf limit; pass b = inf")


def _near_root(k: LambdaKernel, lam: float) -> tuple[float, bool]:
    gap = float(k.model.psi(lam)) - k.q
    return gap, abs(gap) < 1e-9 * max(1.0, k.q)


def _w_exp_integral(k: LambdaKernel, y: float, lam: float) -> float:
    """``int_0^y W^(q)(y - z) exp(lam z) dz``."""
    if y <= 0:
        return 0.0
    m = k.model
    pts = []
    if m.jumps.kind == "deterministic":
        pts = list(np.arange(1, int(y / m.jumps.size) + 1) * m.jumps.size)
    panels = max(2, int(math.ceil(y)))
    u, w = gl_rule(interior_breaks(0.0, y, pts), k.quad.z_order, panels)
    # substitute u = y - z
    return float(np.sum(w * k.sf.w(u) * np.exp(lam * (y - u))))


def _w_exp_tail(k: LambdaKernel, y: float, lam: float) -> float:
    """``int_0^inf W^(q)(y + v) exp(-lam v) dv`` for ``lam > Phi(q)``."""
    m = k.model
    gap = lam - k.phi_q
    upper = 40.0 / gap
    pts = []
    if m.jumps.kind == "deterministic":
        n = np.arange(1, int((y + upper) / m.jumps.size) + 1)
        pts = list(n * m.jumps.size - y)
    v, w = gl_rule(interior_breaks(0.0, upper, pts), k.quad.z_order, 8)
    return float(math.exp(k.phi_q * y) * np.sum(w * np.exp(-gap * v) * k.sf.w_tilted(y + v)))


def _ratio(k: LambdaKernel, query: ParisianQuery) -> float:
    if query.x == query.b:
        return 1.0
    return k.lambda_q(query.x, query.r) / k.lambda_q(query.b, query.r)


def _range_report(name: str, value: float, lo: float, hi: float):
    scale = max(1.0, abs(hi))
    if value < lo - RANGE_TOL * scale or value > hi + RANGE_TOL * scale:
        warnings.warn(f"{name} = {value:.12g} is outside [{lo:.6g}, {hi:.6g}]",
                      RangeWarning, stacklevel=3)


def _joint_bracket(k: LambdaKernel, y: float, lam: float, r: float) -> float:
    gap, _ = _near_root(k, lam)
    if gap == 0.0:
        return math.exp(lam * y)
    if (lam - k.phi_q) * y > 1.0:
        # exp(lam y) - gap int_0^y W(y - z) exp(lam z) dz cancels down from exp(lam y);
        # the Laplace identity of W turns it into a tail integral without cancellation
        return gap * (_w_exp_tail(k, y, lam) - k.lambda_time_integral(y, r, lam))
    return math.exp(lam * y) - gap * (_w_exp_integral(k, y, lam)
                                      + k.lambda_time_integral(y, r, lam))


def _potential_bracket(k: LambdaKernel, y: float, lam: float, r: float) -> float:
    gap, near = _near_root(k, lam)
    factor = r if near else -math.expm1(-gap * r) / gap
    return (math.exp(lam * y) * factor - _w_exp_integral(k, y, lam)
            - k.lambda_time_integral(y, r, lam))


def joint_laplace(k: LambdaKernel, query: ParisianQuery) -> float:
    """``E_x[exp(-q(tau_r - r) + lam X_{tau_r} - psi(lam) r); tau_r < tau_b^+]``."""
    _check(k, query)
    x, b, lam, r = query.x, query.b, query.lam, query.r
    if x == b:
        return 0.0
    ratio = _ratio(k, query)
    value = _joint_bracket(k, x, lam, r) - ratio * _joint_bracket(k, b, lam, r)
    _range_report("joint_laplace", value, 0.0, math.exp(-float(k.model.psi(lam)) * r))
    return value


def exit_laplace(k: LambdaKernel, query: ParisianQuery) -> float:
    """``E_x[exp(-q tau_b^+); tau_b^+ < tau_r]``; ``lam`` is ignored."""
    _check(k, query)
    value = _ratio(k, query)
    _range_report("exit_laplace", value, 0.0, 1.0)
    return value


def potential_laplace(k: LambdaKernel, query: ParisianQuery) -> float:
    """``E_x[int_0^{tau_r ^ tau_b^+} exp(-q(t - r) + lam X_t - psi(lam) r) dt]``."""
    _check(k, query)
    x, b, lam, r = query.x, query.b, query.lam, query.r
    if x == b:
        return 0.0
    ratio = _ratio(k, query)
    value = _potential_bracket(k, x, lam, r) - ratio * _potential_bracket(k, b, lam, r)
    _range_report("potential_laplace", value, 0.0, math.inf)
    return value


def potential_density_pos(k: LambdaKernel, query: ParisianQuery, y):
    """Density of ``int_0^inf exp(-q t) P_x(X_t in dy, t < tau_r ^ tau_b^+) dt`` for ``y >= 0``."""
    _check(k, query)
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise DomainError("this density is restricted to y >= 0")
    ratio = _ratio(k, query)
    out = ratio * k.sf.w(query.b - y) - k.sf.w(query.x - y)
    if query.x == query.b:
        out = np.zeros_like(y)
    return float(out) if out.ndim == 0 else out


# full density -------------------------------------------------------------

def _continuous_pdf(k: LambdaKernel, t: float, z):
    z = np.asarray(z, dtype=float)
    if t <= 0:
        return np.zeros(z.shape)
    return k.law(t).pdf(z)


def _main_atom(k: LambdaKernel, t: float) -> tuple[float, float] | None:
    """Location and mass of the no-jump atom of ``X_t`` (``sigma = 0`` only)."""
    m = k.model
    if m.sigma > 0 or m.jumps.kind == "deterministic":
        return None
    return m.mu * t, math.exp(-m.jumps.rate * t)


def _gauss_scale_breaks(k: LambdaKernel, dist: float, r: float, at_end: bool) -> list[float]:
    # p_s(d) with a Gaussian part changes on the scale s ~ d^2 / sigma^2
    sig = k.model.sigma
    if sig == 0 or dist == 0:
        return []
    base = dist * dist / (sig * sig)
    pts = [base * f for f in (0.05, 0.2, 1.0, 4.0)]
    return [r - p for p in pts] if at_end else pts


def _density_terms(k: LambdaKernel, u: float, y: float, r: float, order: int, panels: int) -> float:
    """``T1 - T2 - T3`` of the full potential density at start point ``u``."""
    m, q = k.model, k.q
    mu = m.mu
    bv = m.sigma == 0
    # T1 = int_0^r exp(q(r - s)) p_s(y - u) ds
    pts = [(y - u) / mu] if bv else _gauss_scale_breaks(k, abs(y - u), r, False)
    s, w = sqrt_end_rule(interior_breaks(0.0, r, pts), order, panels)
    t1 = sum(wi * math.exp(q * (r - si)) * float(_continuous_pdf(k, si, y - u)) for si, wi in zip(s, w))
    # T2 = int_0^u W(u - z) p_r(y - z) dz
    t2 = 0.0
    if u > 0:
        pts = [y - mu * r] if bv else []
        if m.jumps.kind == "deterministic":
            pts += list(u - np.arange(1, int(u / m.jumps.size) + 1) * m.jumps.size)
        z, wz = gl_rule(interior_breaks(0.0, u, pts), order, max(panels, int(math.ceil(u))))
        t2 = float(np.sum(wz * k.sf.w(u - z) * _continuous_pdf(k, r, y - z)))
    # T3 = int_0^r p_{r-s}(y) Lambda(u, s) ds
    if bv:
        pts = [r - y / mu] if y > 0 else []
    else:
        pts = _gauss_scale_breaks(k, abs(y), r, True)
    s, w = sqrt_end_rule(interior_breaks(0.0, r, pts), order, panels)
    lam_s = np.array([k.lambda_q(u, si) for si in s])
    p_rs = np.array([float(_continuous_pdf(k, r - si, y)) for si in s])
    t3 = float(np.sum(w * p_rs * lam_s))
    # atoms moving at speed mu
    atom = _main_atom(k, 1.0)
    if atom is not None:
        a = m.jumps.rate
        s_star = (y - u) / mu
        if 0 < s_star < r:
            t1 += math.exp(q * (r - s_star) - a * s_star) / mu
        z_star = y - mu * r
        if 0 < z_star < u:
            t2 += float(k.sf.w(u - z_star)) * math.exp(-a * r)
        s_star = r - y / mu
        if 0 < s_star < r:
            t3 += math.exp(-a * (r - s_star)) * k.lambda_q(u, s_star) / mu
    return t1 - t2 - t3


def potential_density_full(k: LambdaKernel, query: ParisianQuery, y: float) -> PotentialDensityPoint:
    """Density of ``int_0^inf exp(-q(t - r)) P_x(X_t in dy, t < tau_r ^ tau_b^+) dt``.

    Valid for all real ``y``. The error estimate is the change under doubling
    the quadrature panels; a :class:`PrecisionWarning` is issued when it
    exceeds ``1e-4``.
    """
    _check(k, query)
    if k.model.jumps.kind == "deterministic" and k.model.sigma == 0:
        raise DomainError("the full density needs a law with a density part")
    x, b, r = query.x, query.b, query.r
    y = float(y)
    if x == b:
        return PotentialDensityPoint(y, 0.0, 0.0)
    ratio = _ratio(k, query)
    order = k.quad.s_order

    def evaluate(panels):
        return (_density_terms(k, x, y, r, order, panels)
                - ratio * _density_terms(k, b, y, r, order, panels))

    coarse = evaluate(k.quad.s_panels)
    fine = evaluate(2 * k.quad.s_panels)
    err = abs(fine - coarse)
    if err > DENSITY_WARN:
        warnings.warn(f"potential density at y={y}: estimated error {err:.2e}",
                      PrecisionWarning, stacklevel=2)
    if fine < -max(err, RANGE_TOL):
        warnings.warn(f"potential density at y={y} is negative ({fine:.3e})",
                      RangeWarning, stacklevel=2)
    return PotentialDensityPoint(y, fine, err)


# b = infinity ----------------------------------------------------------------

def joint_laplace_inf_b(k: LambdaKernel, query: ParisianQuery) -> float:
    """``E_x[exp(-q(tau_r - r) + lam X_{tau_r} - psi(lam) r); tau_r < inf]``."""
    _check(k, query, finite=False)
    x, lam, r = query.x, query.lam, query.r
    phi_q = k.phi_q
    gap, near = _near_root(k, lam)
    m_r = k.lambda_exp_moment(r)
    lam_x = k.lambda_q(x, r)
    if near and lam >= phi_q - 1e-6:
        # (psi(lam) - q) / (lam - Phi(q)) -> psi'(Phi(q))
        value = math.exp(lam * x) - lam_x * float(k.model.dpsi(phi_q)) / m_r
    else:
        slope = gap / (lam - phi_q)
        tail = slope - gap * k.exp_moment_time_integral(r, lam)
        value = _joint_bracket(k, x, lam, r) - lam_x / m_r * tail
    _range_report("joint_laplace_inf_b", value, 0.0, math.exp(-float(k.model.psi(lam)) * r))
    return value


def potential_laplace_inf_b(k: LambdaKernel, query: ParisianQuery) -> float:
    """``E_x[int_0^{tau_r} exp(-q(t - r) + lam X_t - psi(lam) r) dt]``; ``inf`` for ``lam >= Phi(q)``."""
    _check(k, query, finite=False)
    x, lam, r = query.x, query.lam, query.r
    if lam >= k.phi_q:
        return math.inf
    m_r = k.lambda_exp_moment(r)
    tail = 1.0 / (lam - k.phi_q) - k.exp_moment_time_integral(r, lam)
    value = _potential_bracket(k, x, lam, r) - k.lambda_q(x, r) / m_r * tail
    _range_report("potential_laplace_inf_b", value, 0.0, math.inf)
    return value


def ruin_probability(k: LambdaKernel, x: float, r: float) -> float:
    """Probability of Parisian ruin with delay ``r`` from ``x``.

    Uses ``1 - psi'(0+) Lambda^(0)(x, r) / int_0^inf (z / r) P(X_r in dz)``.
    When ``psi'(0+) <= 0`` ruin is certain; ``1.0`` is returned together with
    a :class:`NetProfitViolation` warning.
    """
    if not r > 0:
        raise DomainError("the delay r must be positive")
    drift = k.model.drift
    if drift <= 0:
        warnings.warn(f"psi'(0+) = {drift:.6g} <= 0: Parisian ruin is certain",
                      NetProfitViolation, stacklevel=2)
        return 1.0
    k0 = k if k.q == 0 else LambdaKernel(k.model, 0.0, quad=k.quad)
    value = 1.0 - drift * k0.lambda_q(x, r) / k0.lambda_exp_moment(r)
    _range_report("ruin_probability", value, 0.0, 1.0)
    return value
