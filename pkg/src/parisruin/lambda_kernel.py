"""The kernel ``Lambda^(q)(x, r)`` and the integrals built from it.

    Lambda^(q)(x, r) = int_0^inf W^(q)(x + z) (z / r) P(X_r in dz)

Every routine integrates against the marginal law of ``X_s`` on ``z > 0``:
a composite Gauss-Legendre rule over the continuous part, broken at the
points where the integrand is not smooth, plus exact atom contributions.
Integrals over ``s`` use a square-root substitution at both ends, because
with a Gaussian part ``Lambda(x, s)`` blows up like ``s**(-1/2)`` as
``s -> 0`` for ``x > 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainError, TruncationFailure
from .levy_model import LevyModel, MarginalLaw
from .quadrature import gl_rule, interior_breaks, sqrt_end_rule
from .scale_fn import ScaleFunction

__all__ = [
    "QuadratureConfig",
    "LambdaKernel",
    "lambda_q",
    "lambda_exp_moment",
    "lambda_time_integral",
    "kendall_transform_check",
]


@dataclass(frozen=True)
class QuadratureConfig:
    """Accuracy knobs of :class:`LambdaKernel`.

    Parameters
    ----------
    lambda_tol : float
        Target absolute error of the neglected ``z``-tail, relative to the
        size of the tilted integrand.
    safety : float
        Factor by which the tail tolerance is tightened when choosing the
        truncation point.
    z_max : float
        Largest admissible truncation point; exceeding it raises
        :class:`TruncationFailure`.
    z_order, z_panels : int
        Gauss-Legendre order and panels per smooth piece in ``z``.
    s_order, s_panels : int
        Order and panels per half-interval of the square-root rule in ``s``.
    """

    lambda_tol: float = 1e-8
    safety: float = 10.0
    z_max: float = 1e4
    z_order: int = 32
    z_panels: int = 4
    s_order: int = 16
    s_panels: int = 4

    def __post_init__(self):
        if not (self.lambda_tol > 0 and self.safety >= 1 and self.z_max > 0):
            raise ValueError("invalid quadrature configuration")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


class LambdaKernel:
    """Evaluator of ``Lambda^(q)`` for a fixed model and discount rate.

    Parameters
    ----------
    model : LevyModel
    q : float
    sf : ScaleFunction, optional
        Scale function ``W^(q)``; built from ``model`` and ``q`` if omitted.
    quad : QuadratureConfig, optional
    """

    def __init__(self, model: LevyModel, q: float = 0.0, sf: ScaleFunction | None = None,
                 quad: QuadratureConfig | None = None):
        if q < 0:
            raise DomainError("q must be nonnegative")
        self.model = model
        self.q = float(q)
        self.sf = ScaleFunction(model, q) if sf is None else sf
        if self.sf.model != model or self.sf.q != self.q:
            raise ValueError("scale function belongs to a different model or q")
        self.quad = QuadratureConfig() if quad is None else quad
        self.phi_q = self.sf.phi_q

    # z-integration ----------------------------------------------------------

    def law(self, s: float) -> MarginalLaw:
        return MarginalLaw(self.model, s, density_tol=self.quad.lambda_tol)

    def _z_rule(self, law: MarginalLaw, lower: float):
        """Nodes and weights on ``[lower, z_hi]`` for the continuous part."""
        tol = self.quad.lambda_tol / self.quad.safety
        _, hi = law.support(tilt=self.phi_q, tol=tol)
        if hi > self.quad.z_max:
            raise TruncationFailure(
                f"tail bound needs z up to {hi:.1f} > z_max = {self.quad.z_max}")
        lo = max(lower, law.support(tol=tol)[0])
        if not hi > lo:
            return np.zeros(0), np.zeros(0)
        breaks = interior_breaks(lo, hi, law.kinks)
        return gl_rule(breaks, self.quad.z_order, self.quad.z_panels)

    def _moments(self, s: float, xs: np.ndarray) -> np.ndarray:
        """``Lambda(x, s)`` for every ``x`` in ``xs`` at one time ``s``."""
        law = self.law(s)
        loc, mass = law.atoms
        keep = loc > 0
        loc, aw = loc[keep], mass[keep] * loc[keep] / s
        out = np.zeros(xs.shape)
        # for x < 0, W(x + z) vanishes below z = -x and may jump there
        blocks = [np.flatnonzero(xs >= 0)] + [np.array([i]) for i in np.flatnonzero(xs < 0)]
        for idx in blocks:
            if idx.size == 0:
                continue
            xg = xs[idx]
            z, w = self._z_rule(law, max(0.0, -float(xg.min())))
            if z.size:
                dens = w * (z / s) * law.pdf(z)
                out[idx] = self.sf.w(xg[:, None] + z[None, :]) @ dens
            if loc.size:
                out[idx] += self.sf.w(xg[:, None] + loc[None, :]) @ aw
        return out

    def lambda_q(self, x, r: float):
        """``Lambda^(q)(x, r)``; vectorised over ``x``."""
        if not r > 0:
            raise DomainError("r must be positive")
        x = np.asarray(x, dtype=float)
        out = self._moments(r, x.ravel()).reshape(x.shape)
        return float(out) if out.ndim == 0 else out

    def exp_moment(self, s: float, tilt: float | None = None) -> float:
        """``int_0^inf exp(tilt z) (z / s) P(X_s in dz)``, default ``tilt = Phi(q)``."""
        if not s > 0:
            raise DomainError("r must be positive")
        tilt = self.phi_q if tilt is None else tilt
        law = self.law(s)
        z, w = self._z_rule(law, 0.0)
        total = float(np.sum(w * np.exp(tilt * z) * (z / s) * law.pdf(z)))
        loc, mass = law.atoms
        keep = loc > 0
        total += float(np.sum(mass[keep] * np.exp(tilt * loc[keep]) * loc[keep] / s))
        return total

    def lambda_exp_moment(self, r: float) -> float:
        """``int_0^inf exp(Phi(q) z) (z / r) P(X_r in dz)``."""
        return self.exp_moment(r)

    # s-integration ----------------------------------------------------------

    def s_breaks(self, x: float, r: float) -> list[float]:
        """Break points in ``s`` of ``s -> Lambda(x, s)`` on ``[0, r]``.

        Without a Gaussian part an atom of ``X_s`` moves at speed ``mu`` and
        ``Lambda(x, s)`` jumps when it passes ``z = -x`` for ``x < 0``.
        """
        m = self.model
        pts = []
        if m.sigma == 0 and x < 0:
            pts.append(-x / m.mu)
            if m.jumps.kind == "deterministic":
                n = np.arange(1, int(m.mu * r / m.jumps.size) + 2)
                pts.extend((n * m.jumps.size - x) / m.mu)
        return interior_breaks(0.0, r, pts)

    def s_rule(self, r: float, x: float = 0.0):
        return sqrt_end_rule(self.s_breaks(x, r), self.quad.s_order, self.quad.s_panels)

    def lambda_time_integral(self, x, r: float, lam: float):
        """``int_0^r exp(-psi(lam) s) Lambda^(q)(x, s) ds``; vectorised over ``x``."""
        if not r > 0:
            raise DomainError("r must be positive")
        x = np.asarray(x, dtype=float)
        p = float(self.model.psi(lam))
        flat = x.ravel()
        total = np.zeros(flat.shape)
        groups = [np.flatnonzero(flat >= 0)] + [np.array([i]) for i in np.flatnonzero(flat < 0)]
        for idx in groups:
            if idx.size == 0:
                continue
            s, w = self.s_rule(r, float(flat[idx].min()))
            for si, wi in zip(s, w):
                total[idx] += wi * math.exp(-p * si) * self._moments(si, flat[idx])
        total = total.reshape(x.shape)
        return float(total) if total.ndim == 0 else total

    def exp_moment_time_integral(self, r: float, lam: float) -> float:
        """``int_0^r exp(-psi(lam) s) M(s) ds`` with ``M`` from :meth:`exp_moment`."""
        s, w = self.s_rule(r)
        p = float(self.model.psi(lam))
        return float(sum(wi * math.exp(-p * si) * self.exp_moment(si) for si, wi in zip(s, w)))

    def kendall_transform_check(self, x: float, theta: float, horizon: float = 40.0) -> float:
        """Residual of the Laplace transform in ``r`` of ``exp(-q r) Lambda(x, r)``.

        Returns ``int_0^inf exp(-(theta + q) r) Lambda(x, r) dr`` minus
        ``int_0^inf exp(-Phi(theta + q) z) W^(q)(x + z) dz``. The ``r``
        integral is cut at ``horizon / theta``.
        """
        if not theta > 0:
            raise DomainError("theta must be positive")
        r_cut = horizon / theta
        edges = np.unique(np.concatenate([self.s_breaks(x, r_cut), np.geomspace(1.0, r_cut, 9)]))
        edges = edges[edges <= r_cut]
        s, w = sqrt_end_rule(edges, self.quad.s_order, self.quad.s_panels)
        lhs = 0.0
        for si, wi in zip(s, w):
            lhs += wi * math.exp(-(theta + self.q) * si) * float(self._moments(si, np.array([x]))[0])
        rhs = self._kendall_rhs(x, theta)
        return lhs - rhs

    def _kendall_rhs(self, x: float, theta: float) -> float:
        # work with the tilted scale function so the integrand decays cleanly
        gap = self.model.phi(theta + self.q) - self.phi_q
        start = max(0.0, -x)

        def f(z):
            return math.exp(-gap * z + self.phi_q * x) * float(self.sf.w_tilted(x + z))

        val, _ = integrate.quad(f, start, start + 60.0 / gap, epsabs=1e-13, epsrel=1e-11, limit=400)
        return val


def lambda_q(k: LambdaKernel, x, r: float):
    return k.lambda_q(x, r)


def lambda_exp_moment(k: LambdaKernel, r: float) -> float:
    return k.lambda_exp_moment(r)


def lambda_time_integral(k: LambdaKernel, x, r: float, lam: float):
    return k.lambda_time_integral(x, r, lam)


def kendall_transform_check(k: LambdaKernel, x: float, theta: float) -> float:
    return k.kendall_transform_check(x, theta)
