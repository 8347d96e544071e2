"""Parametric spectrally negative Levy models.

A model is ``X_t = x + mu t + sigma B_t - S_t`` where ``S`` is a compound
Poisson process with positive jump sizes ``J``. The Laplace exponent is

    psi(lam) = mu lam + sigma^2 lam^2 / 2 + rate (E[exp(-lam J)] - 1),

so ``mu`` is the premium rate (the drift between jumps) for ``sigma = 0``
and ``psi(0) = 0`` holds by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate, optimize, special, stats

from .errors import ConvergenceFailure, DomainError, MethodUnavailable
from .quadrature import gl_rule, interior_breaks

__all__ = [
    "JumpSpec",
    "LevyModel",
    "MarginalLaw",
    "psi",
    "phi",
    "marginal_density",
    "CL_DEFAULT",
    "BM_DEFAULT",
    "preset",
]

JUMP_KINDS = ("none", "exp", "erlang", "deterministic")


@dataclass(frozen=True)
class JumpSpec:
    """Downward compound Poisson jumps.

    Parameters
    ----------
    kind : {"none", "exp", "erlang", "deterministic"}
    rate : float
        Poisson arrival intensity.
    alpha : float, optional
        Rate of the exponential/Erlang jump size (mean ``shape / alpha``).
    shape : int
        Erlang shape; 1 for exponential jumps.
    size : float, optional
        Jump size for deterministic jumps.
    """

    kind: str = "none"
    rate: float = 0.0
    alpha: float | None = None
    shape: int = 1
    size: float | None = None

    def __post_init__(self):
        if self.kind not in JUMP_KINDS:
            raise ValueError(f"unknown jump kind {self.kind!r}")
        if self.kind == "none":
            return
        if not self.rate > 0:
            raise ValueError("jump rate must be positive")
        if self.kind in ("exp", "erlang"):
            if self.alpha is None or not self.alpha > 0:
                raise ValueError("alpha must be positive")
            if self.kind == "exp" and self.shape != 1:
                raise ValueError("exponential jumps have shape 1")
            if int(self.shape) != self.shape or self.shape < 1:
                raise ValueError("Erlang shape must be a positive integer")
        if self.kind == "deterministic" and (self.size is None or not self.size > 0):
            raise ValueError("deterministic jump size must be positive")

    @classmethod
    def exponential(cls, rate: float, alpha: float) -> JumpSpec:
        return cls("exp", float(rate), alpha=float(alpha))

    @classmethod
    def erlang(cls, rate: float, shape: int, alpha: float) -> JumpSpec:
        return cls("erlang", float(rate), alpha=float(alpha), shape=int(shape))

    @classmethod
    def deterministic(cls, rate: float, size: float) -> JumpSpec:
        return cls("deterministic", float(rate), size=float(size))

    @property
    def active(self) -> bool:
        return self.kind != "none"

    @property
    def abscissa(self) -> float:
        """Left end of the half-plane where ``E[exp(-lam J)]`` is finite."""
        if self.kind in ("exp", "erlang"):
            return -self.alpha
        return -math.inf

    def laplace(self, lam):
        """``E[exp(-lam J)]``; accepts complex arguments."""
        if self.kind == "none":
            return np.zeros_like(lam, dtype=np.result_type(lam, float)) + 1.0
        if self.kind == "deterministic":
            return np.exp(-lam * self.size)
        return (self.alpha / (self.alpha + lam)) ** self.shape

    def dlaplace(self, lam):
        """Derivative of :meth:`laplace` in ``lam``."""
        if self.kind == "none":
            return np.zeros_like(lam, dtype=np.result_type(lam, float))
        if self.kind == "deterministic":
            return -self.size * np.exp(-lam * self.size)
        return -self.shape * self.laplace(lam) / (self.alpha + lam)

    def mean(self) -> float:
        if self.kind == "none":
            return 0.0
        if self.kind == "deterministic":
            return self.size
        return self.shape / self.alpha

    def tail_bound(self, t: float, tol: float) -> float:
        """Level ``s`` with ``P(S_t > s) <= tol`` by a Chernoff bound."""
        if self.kind == "none" or t <= 0:
            return 0.0
        log_tol = math.log(1.0 / tol)
        if self.kind == "deterministic":
            theta = 1.0 / self.size
            return (self.rate * t * (math.e - 1.0) + log_tol) / theta
        # theta = alpha/2 gives E[exp(theta J)] = 2**shape
        theta = 0.5 * self.alpha
        return (self.rate * t * (2.0**self.shape - 1.0) + log_tol) / theta

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "none":
            return out
        out["rate"] = self.rate
        if self.kind in ("exp", "erlang"):
            out["alpha"] = self.alpha
        if self.kind == "erlang":
            out["shape"] = self.shape
        if self.kind == "deterministic":
            out["size"] = self.size
        return out


@dataclass(frozen=True)
class LevyModel:
    """Spectrally negative Levy process with finite-activity jumps."""

    mu: float
    sigma: float = 0.0
    jumps: JumpSpec = field(default_factory=JumpSpec)

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError("sigma must be nonnegative")
        if self.sigma == 0:
            if not self.jumps.active:
                raise ValueError("deterministic drift: paths are monotone")
            if not self.mu > 0:
                raise ValueError("sigma = 0 requires a positive premium rate, "
                                 "otherwise paths are monotone")

    @classmethod
    def brownian(cls, mu: float, sigma: float) -> LevyModel:
        return cls(float(mu), float(sigma))

    @classmethod
    def cramer_lundberg(cls, c: float, rate: float, alpha: float) -> LevyModel:
        """Premium rate ``c``, claims ``Exp(alpha)`` arriving at ``rate``."""
        return cls(float(c), 0.0, JumpSpec.exponential(rate, alpha))

    @property
    def bounded_variation(self) -> bool:
        return self.sigma == 0

    def psi(self, lam):
        """Laplace exponent; vectorised, complex arguments allowed."""
        lam = np.asarray(lam) if not np.isscalar(lam) else lam
        out = self.mu * lam + 0.5 * self.sigma**2 * lam * lam
        if self.jumps.active:
            out = out + self.jumps.rate * (self.jumps.laplace(lam) - 1.0)
        return out

    def dpsi(self, lam):
        out = self.mu + self.sigma**2 * lam
        if self.jumps.active:
            out = out + self.jumps.rate * self.jumps.dlaplace(lam)
        return out

    @property
    def drift(self) -> float:
        """``E[X_1] = psi'(0+)``."""
        return float(self.dpsi(0.0))

    def phi(self, q: float, root_tol: float = 1e-12, max_iter: int = 200) -> float:
        """Right inverse ``sup{lam >= 0 : psi(lam) = q}``.

        Newton's method started to the right of the largest root, where
        convexity makes the iterates decrease monotonically; a bisection
        bracket guards against roundoff.
        """
        if q < 0:
            raise DomainError("q must be nonnegative")
        d0 = self.drift
        if q == 0 and d0 >= 0:
            return 0.0
        lo = 0.0
        if q == 0:
            # psi < 0 just left of the minimiser, which lies where psi' = 0
            hi = 1.0
            while self.dpsi(hi) <= 0:
                hi *= 2.0
            lo = optimize.brentq(self.dpsi, 0.0, hi, xtol=1e-15)
        hi = max(1.0, 2.0 * lo)
        for _ in range(2000):
            if self.psi(hi) > q:
                break
            lo, hi = hi, 2.0 * hi
        else:  # pragma: no cover - psi is superlinear
            raise ConvergenceFailure("could not bracket Phi(q)")
        tol = root_tol * max(1.0, q)
        lam = hi
        for _ in range(max_iter):
            f = float(self.psi(lam)) - q
            if abs(f) <= tol:
                polished = lam - f / float(self.dpsi(lam))
                if abs(float(self.psi(polished)) - q) <= abs(f):
                    return polished
                return lam
            if f > 0:
                hi = lam
            else:
                lo = lam
            nxt = lam - f / float(self.dpsi(lam))
            if not lo < nxt < hi:
                nxt = 0.5 * (lo + hi)
            if nxt == lam:
                break
            lam = nxt
        if abs(float(self.psi(lam)) - q) <= tol:
            return lam
        raise ConvergenceFailure(f"Phi({q}) did not converge: residual "
                                 f"{float(self.psi(lam)) - q:.3e}")

    def lundberg_exponent(self) -> float:
        """Adjustment coefficient ``R > 0`` with ``psi(-R) = 0``.

        ``P_x(tau_0^- < inf) <= exp(-R x)`` for ``x >= 0``. Requires
        ``psi'(0+) > 0``.
        """
        if self.drift <= 0:
            raise DomainError("Lundberg exponent needs psi'(0+) > 0")
        if not self.jumps.active:
            return 2.0 * self.mu / self.sigma**2

        def f(theta):
            return float(self.psi(-theta))

        cap = -self.jumps.abscissa
        hi = 1.0 if math.isinf(cap) else 0.5 * cap
        for _ in range(200):
            if f(hi) > 0:
                break
            hi = 2.0 * hi if math.isinf(cap) else 0.5 * (hi + cap)
        else:  # pragma: no cover
            raise ConvergenceFailure("could not bracket the Lundberg exponent")
        # f < 0 on (0, R): start from a point below the minimiser of f
        lo = hi
        while f(lo) >= 0 and lo > 1e-300:
            lo *= 0.5
        return optimize.brentq(f, lo, hi, xtol=1e-14)

    def to_dict(self) -> dict:
        return {"mu": self.mu, "sigma": self.sigma, "jumps": self.jumps.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> LevyModel:
        unknown = set(d) - {"mu", "sigma", "jumps"}
        if unknown:
            raise ValueError(f"unknown model keys: {sorted(unknown)}")
        jd = dict(d.get("jumps", {"kind": "none"}))
        allowed = {"kind", "rate", "alpha", "shape", "size"}
        if set(jd) - allowed:
            raise ValueError(f"unknown jump keys: {sorted(set(jd) - allowed)}")
        return cls(float(d["mu"]), float(d.get("sigma", 0.0)), JumpSpec(**jd))


CL_DEFAULT = LevyModel.cramer_lundberg(c=1.5, rate=1.0, alpha=1.0)
BM_DEFAULT = LevyModel.brownian(mu=1.0, sigma=1.0)

_PRESETS = {"cl-default": CL_DEFAULT, "bm-default": BM_DEFAULT}


def preset(name: str) -> LevyModel:
    try:
        return _PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown model preset {name!r}; "
                         f"choose from {sorted(_PRESETS)}") from None


def psi(model: LevyModel, lam):
    if np.any(np.real(lam) < 0) and not np.iscomplexobj(lam):
        raise DomainError("psi is evaluated for lam >= 0")
    return model.psi(lam)


def phi(model: LevyModel, q: float, root_tol: float = 1e-12) -> float:
    return model.phi(q, root_tol=root_tol)


METHODS = ("gaussian", "series", "fourier")


@dataclass(frozen=True)
class MarginalLaw:
    """Law of ``X_t`` under ``P_0``: a continuous density plus atoms.

    Atoms occur only without a Gaussian part: at ``mu t`` with mass
    ``exp(-rate t)`` (no jump yet) and, for deterministic jumps, at every
    ``mu t - n size``.
    """

    model: LevyModel
    t: float
    method: str | None = None
    density_tol: float = 1e-8
    series_tol: float = 1e-12

    def __post_init__(self):
        if not self.t > 0:
            raise DomainError("t must be positive")
        m = self.model
        auto = self._auto_method()
        method = self.method or auto
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}")
        if method == "gaussian" and m.jumps.active:
            raise MethodUnavailable("closed-form Gaussian law needs a model without jumps")
        if method == "series" and not m.jumps.active:
            raise MethodUnavailable("Poisson mixture needs jumps")
        if method == "series" and m.sigma > 0 and m.jumps.kind != "deterministic":
            raise MethodUnavailable("Poisson mixture with a Gaussian part needs deterministic jumps")
        if method == "fourier" and m.jumps.kind == "deterministic" and m.sigma == 0:
            raise MethodUnavailable("purely atomic law has no density to invert")
        object.__setattr__(self, "method", method)

    def _auto_method(self) -> str:
        m = self.model
        if not m.jumps.active:
            return "gaussian"
        if m.sigma == 0 or m.jumps.kind == "deterministic":
            return "series"
        return "fourier"

    @cached_property
    def _n_max(self) -> int:
        at = self.model.jumps.rate * self.t
        return max(1, int(stats.poisson.isf(self.series_tol, at)) + 1)

    @cached_property
    def atoms(self) -> tuple[np.ndarray, np.ndarray]:
        """Locations and masses of the atoms of ``X_t``."""
        m = self.model
        if m.sigma > 0:
            return np.zeros(0), np.zeros(0)
        a, t = m.jumps.rate, self.t
        if m.jumps.kind == "deterministic":
            n = np.arange(self._n_max + 1)
            return m.mu * t - n * m.jumps.size, stats.poisson.pmf(n, a * t)
        return np.array([m.mu * t]), np.array([math.exp(-a * t)])

    @property
    def kinks(self) -> list[float]:
        """Points where the continuous density is not smooth."""
        if self.model.sigma == 0:
            return [self.model.mu * self.t]
        return []

    def support(self, tilt: float = 0.0, tol: float | None = None) -> tuple[float, float]:
        """Interval outside which the ``exp(tilt z)``-weighted mass is below ``tol``.

        The upper end is exact (``mu t``) when there is no Gaussian part.
        """
        tol = self.density_tol if tol is None else tol
        m, t = self.model, self.t
        k = math.sqrt(2.0 * math.log(1.0 / tol)) + 1.5
        sd = m.sigma * math.sqrt(t)
        lo = m.mu * t - k * sd - m.jumps.tail_bound(t, tol)
        if m.sigma == 0:
            hi = m.mu * t
        else:
            hi = m.mu * t + m.sigma**2 * t * max(tilt, 0.0) + k * sd
        return lo, hi

    def pdf(self, z):
        """Density of the continuous part of ``X_t`` at ``z``."""
        z = np.asarray(z, dtype=float)
        if self.method == "gaussian":
            m = self.model
            return stats.norm.pdf(z, loc=m.mu * self.t, scale=m.sigma * math.sqrt(self.t))
        if self.method == "series":
            return self._series_pdf(z)
        if self.model.sigma > 0:
            return self._fourier_pdf(z)
        return self._fourier_pdf_bv(z)

    def _series_pdf(self, z):
        m, t = self.model, self.t
        a = m.jumps.rate
        if m.jumps.kind == "deterministic":
            if m.sigma == 0:
                return np.zeros_like(z)
            n = np.arange(self._n_max + 1)
            w = stats.poisson.pmf(n, a * t)
            loc = m.mu * t - n * m.jumps.size
            dens = stats.norm.pdf(z[..., None], loc=loc, scale=m.sigma * math.sqrt(t))
            return dens @ w
        # sigma = 0, X_t = mu t - S_t with S_t | N = n ~ Gamma(n k, alpha)
        n = np.arange(1, self._n_max + 1)
        logw = stats.poisson.logpmf(n, a * t)
        w = m.mu * t - z
        out = np.zeros_like(z)
        pos = w > 0
        if np.any(pos):
            wp = w[pos][..., None]
            k, alpha = m.jumps.shape, m.jumps.alpha
            shape = n * k
            logg = shape * math.log(alpha) + (shape - 1) * np.log(wp) - alpha * wp - special.gammaln(shape)
            out[pos] = np.exp(logg + logw).sum(axis=-1)
        return out

    @cached_property
    def _fourier_grid(self):
        m, t, tol = self.model, self.t, self.density_tol
        u_max = math.sqrt(2.0 * (math.log(1.0 / tol) + 10.0) / (m.sigma**2 * t))
        lo, hi = self.support(tol=tol * 1e-3)
        period = 2.0 * (hi - lo) + 10.0 * m.sigma * math.sqrt(t)
        h = 2.0 * math.pi / period
        u = np.arange(0.0, u_max + h, h)
        w = np.full(u.shape, h)
        w[0] = 0.5 * h
        cf = np.exp(t * m.psi(1j * u))
        return u, w, cf

    def _fourier_pdf(self, z):
        u, w, cf = self._fourier_grid
        flat = z.ravel()
        out = np.empty_like(flat)
        chunk = max(1, 2_000_000 // max(len(u), 1))
        for i in range(0, flat.size, chunk):
            zz = flat[i:i + chunk, None]
            out[i:i + chunk] = (np.exp(-1j * u * zz) * cf).real @ w / math.pi
        return np.maximum(out, 0.0).reshape(z.shape)

    def _fourier_pdf_bv(self, z):
        # continuous part of S_t via Fourier integrals with cos/sin weights
        m, t = self.model, self.t
        a = m.jumps.rate

        def g(u):
            return math.exp(-a * t) * (np.exp(a * t * m.jumps.laplace(-1j * u)) - 1.0)

        out = np.zeros(z.shape)
        for idx, zi in np.ndenumerate(z):
            w = m.mu * t - zi
            if w <= 0:
                continue
            re = integrate.quad(lambda u: g(u).real, 0, np.inf, weight="cos", wvar=w, limlst=200)[0]
            im = integrate.quad(lambda u: g(u).imag, 0, np.inf, weight="sin", wvar=w, limlst=200)[0]
            out[idx] = (re + im) / math.pi
        return out

    def expect(self, g, lo: float | None = None, hi: float | None = None, tilt: float = 0.0,
               order: int = 32, panels: int = 16) -> float:
        """``E[g(X_t)]`` by composite quadrature plus the atom contributions."""
        slo, shi = self.support(tilt=tilt)
        lo = slo if lo is None else lo
        hi = shi if hi is None else hi
        nodes, weights = gl_rule(interior_breaks(lo, hi, self.kinks), order, panels)
        total = float(np.sum(weights * g(nodes) * self.pdf(nodes)))
        loc, mass = self.atoms
        keep = (loc >= lo) & (loc <= hi)
        if np.any(keep):
            total += float(np.sum(g(loc[keep]) * mass[keep]))
        return total


def marginal_density(law: MarginalLaw, z):
    """Continuous density at ``z`` and the atom report ``(locations, masses)``."""
    return law.pdf(z), law.atoms
