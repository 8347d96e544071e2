"""q-scale functions ``W^(q)`` and their exponentially tilted versions.

``W^(q)`` vanishes on the negative half-line and on ``[0, inf)`` has Laplace
transform ``1 / (psi(lam) - q)`` for ``lam > Phi(q)``. Everything here is
computed through the tilted function ``W_Phi(x) = exp(-Phi(q) x) W^(q)(x)``,
which is bounded by ``1 / psi'(Phi(q))``, and multiplied back afterwards.
"""

from __future__ import annotations

import math

import mpmath
import numpy as np
from numpy.polynomial import polynomial as P
from scipy import integrate, special
from scipy.interpolate import PchipInterpolator

from .errors import ConvergenceFailure, DomainError, MethodUnavailable
from .inversion import euler, talbot
from .levy_model import LevyModel

__all__ = ["ScaleFunction", "w_q", "w_tilted", "laplace_identity_residual"]

SCALE_METHODS = ("two_exponential", "mixed_exponential", "delay_series", "numerical_inversion")


class ScaleFunction:
    """Evaluator of ``W^(q)`` for one model and one discount rate.

    Parameters
    ----------
    model : LevyModel
    q : float
        Discount rate, ``q >= 0``.
    method : str, optional
        ``"two_exponential"`` (Brownian motion with drift),
        ``"mixed_exponential"`` (exponential or Erlang jumps, with or without
        a Gaussian part), ``"delay_series"`` (deterministic jumps without a
        Gaussian part) or ``"numerical_inversion"``. Chosen from the model
        when omitted.
    talbot_nodes, euler_nodes : int
        Node counts of the two inverters used by ``numerical_inversion``.
    agree_tol : float
        Largest tolerated disagreement between the two inverters, relative
        to ``max(1, |W_Phi|)``.
    cache_dx : float, optional
        When set (numerical inversion only), ``W_Phi`` is tabulated on
        ``[0, x_max]`` with this spacing and interpolated monotonically.
    x_max : float
        Upper end of the cache table.
    """

    def __init__(self, model: LevyModel, q: float = 0.0, method: str | None = None,
                 talbot_nodes: int = 24, euler_nodes: int = 18, agree_tol: float = 1e-7,
                 cache_dx: float | None = None, x_max: float = 50.0, root_tol: float = 1e-12):
        if q < 0:
            raise DomainError("q must be nonnegative")
        self.model = model
        self.q = float(q)
        self.phi_q = model.phi(q, root_tol=root_tol)
        self.talbot_nodes = talbot_nodes
        self.euler_nodes = euler_nodes
        self.agree_tol = agree_tol
        # q = 0 with zero drift puts a double root at the origin
        degenerate = self.q == 0 and model.drift == 0
        if method is None:
            if degenerate:
                method = "numerical_inversion"
            elif not model.jumps.active:
                method = "two_exponential"
            elif model.jumps.kind in ("exp", "erlang"):
                method = "mixed_exponential"
            elif model.sigma == 0:
                method = "delay_series"
            else:
                method = "numerical_inversion"
        if method not in SCALE_METHODS:
            raise ValueError(f"unknown scale method {method!r}")
        self.method = method
        self.w0 = 1.0 / model.mu if model.sigma == 0 else 0.0
        slope = float(model.dpsi(self.phi_q))
        self.limit_tilted = 1.0 / slope if slope > 0 else math.inf
        self._table = None
        if degenerate and method in ("two_exponential", "mixed_exponential"):
            raise MethodUnavailable("partial fractions need simple roots; "
                                    "zero drift with q = 0 gives a double root")
        if method == "two_exponential":
            if model.jumps.active:
                raise MethodUnavailable("two-exponential form needs a model without jumps")
            self._init_two_exponential()
        elif method == "mixed_exponential":
            if model.jumps.kind not in ("exp", "erlang"):
                raise MethodUnavailable("partial fractions need exponential or Erlang jumps")
            self._init_mixed_exponential()
        elif method == "delay_series":
            if model.jumps.kind != "deterministic" or model.sigma > 0:
                raise MethodUnavailable("delay series needs deterministic jumps and no Gaussian part")
        elif cache_dx is not None:
            grid = np.arange(0.0, x_max + cache_dx, cache_dx)
            self._table = (x_max, PchipInterpolator(grid, self._invert(grid)))

    # closed forms -------------------------------------------------------

    def _init_two_exponential(self):
        mu, s2 = self.model.mu, self.model.sigma**2
        root = math.sqrt(mu * mu + 2.0 * self.q * s2)
        lower = (-mu - root) / s2
        self._rates = np.array([0.0, lower - self.phi_q])
        self._coefs = np.array([1.0, -1.0]) / root

    def _init_mixed_exponential(self):
        # 1/(psi - q) = N(lam)/D(lam) with N = (alpha + lam)^k
        m = self.model
        k, alpha, a = m.jumps.shape, m.jumps.alpha, m.jumps.rate
        base = P.polypow([alpha, 1.0], k)
        head = [-a - self.q, m.mu, 0.5 * m.sigma**2]
        den = P.polyadd(P.polymul(head, base), [a * alpha**k])
        den = P.polytrim(den, tol=0.0)
        roots = np.roots(den[::-1]).astype(complex)
        dden = P.polyder(den)
        # polish on the polynomial, then pin the dominant root to Phi(q)
        for _ in range(3):
            roots = roots - P.polyval(roots, den) / P.polyval(roots, dden)
        i_phi = int(np.argmin(np.abs(roots - self.phi_q)))
        roots[i_phi] = self.phi_q
        coefs = P.polyval(roots, base) / P.polyval(roots, dden)
        self._rates = roots - self.phi_q
        self._coefs = coefs
        for lam in self.phi_q + np.array([0.5, 1.0, 2.0]):
            exact = 1.0 / (float(m.psi(lam)) - self.q)
            approx = float(np.sum(coefs / (lam - roots)).real)
            if abs(approx - exact) > 1e-9 * abs(exact):
                raise ConvergenceFailure(
                    f"partial-fraction residues fail the Laplace identity at lam={lam}: "
                    f"{approx} vs {exact}")

    def _delay_series(self, x):
        # W(x) = sum_n (-a)^n (x - n d)^n exp(beta (x - n d)) / (n! mu^(n+1))
        m = self.model
        a, d, mu = m.jumps.rate, m.jumps.size, m.mu
        beta = (a + self.q) / mu
        n_max = int(np.max(x) // d) if x.size else 0
        n = np.arange(n_max + 1)
        u = x[:, None] - n * d
        live = u > 0
        live[:, 0] = True
        uc = np.where(live, u, 1.0)
        logt = (special.xlogy(n, a * uc / mu) - special.gammaln(n + 1) + beta * uc
                - math.log(mu) - self.phi_q * x[:, None])
        terms = np.where(live, np.exp(logt), 0.0) * (-1.0) ** n
        total = terms.sum(axis=1)
        cond = np.abs(terms).sum(axis=1) / np.maximum(np.abs(total), 1e-300)
        # alternating sums lose log10(cond) digits; redo those in extended precision
        for i in np.flatnonzero(cond > 1e4):
            total[i] = self._delay_series_mp(float(x[i]), float(cond[i]))
        return total

    def _delay_series_mp(self, x, cond):
        m = self.model
        with mpmath.workdps(25 + int(math.log10(cond))):
            a, d, mu = mpmath.mpf(m.jumps.rate), mpmath.mpf(m.jumps.size), mpmath.mpf(m.mu)
            beta = (a + self.q) / mu
            xm = mpmath.mpf(x)
            total = mpmath.mpf(0)
            for n in range(int(x // m.jumps.size) + 1):
                u = xm - n * d
                if n and u <= 0:
                    break
                total += (-a * u / mu) ** n * mpmath.exp(beta * u) / mpmath.factorial(n)
            return float(total / mu * mpmath.exp(-self.phi_q * xm))

    # numerical inversion ---------------------------------------------------

    def _tilted_transform(self, s):
        return 1.0 / (self.model.psi(s + self.phi_q) - self.q)

    def _invert(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        pos = x > 0
        if np.any(pos):
            xt = x[pos]
            a = talbot(self._tilted_transform, xt, self.talbot_nodes)
            b = euler(self._tilted_transform, xt, self.euler_nodes)
            gap = np.abs(a - b) / np.maximum(1.0, np.abs(a))
            if np.max(gap) > self.agree_tol:
                worst = xt[int(np.argmax(gap))]
                raise ConvergenceFailure(
                    f"Talbot and Euler inversions disagree by {np.max(gap):.2e} at x={worst}")
            out[pos] = a
        out[x == 0] = self.w0
        return out

    # public evaluation -------------------------------------------------------

    def w_tilted(self, x):
        """``W_Phi(x) = exp(-Phi(q) x) W^(q)(x)``; zero for ``x < 0``."""
        x = np.asarray(x, dtype=float)
        if self.method == "delay_series":
            flat = np.maximum(x.ravel(), 0.0)
            return np.where(x >= 0, self._delay_series(flat).reshape(x.shape), 0.0)
        if self.method == "numerical_inversion":
            if self._table is not None:
                x_max, interp = self._table
                inside = (x >= 0) & (x <= x_max)
                out = np.where(inside, interp(np.clip(x, 0.0, x_max)), 0.0)
                far = x > x_max
                if np.any(far):
                    out[far] = self._invert(x[far])
                return out
            return self._invert(x)
        xc = np.maximum(x, 0.0)
        vals = (np.exp(np.multiply.outer(xc, self._rates)) @ self._coefs).real
        vals = np.where(x == 0, self.w0, vals)
        return np.where(x >= 0, vals, 0.0)

    def w(self, x):
        """``W^(q)(x)``."""
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, np.exp(self.phi_q * np.maximum(x, 0.0)) * self.w_tilted(x), 0.0)

    __call__ = w

    def laplace_identity_residual(self, lam: float, margin: float = 1e-3) -> float:
        """``int_0^inf exp(-lam x) W(x) dx - 1/(psi(lam) - q)``.

        Adaptive quadrature on ``[0, X]`` and an exponential tail completion
        using ``W_Phi(x) ~ W_Phi(X)`` beyond ``X``.
        """
        gap = lam - self.phi_q
        if not gap > margin:
            raise DomainError(f"lam must exceed Phi(q) + {margin} = {self.phi_q + margin}")
        upper = 40.0 / gap

        def f(x):
            return math.exp(-gap * x) * float(self.w_tilted(x))

        val, _ = integrate.quad(f, 0.0, upper, epsabs=1e-14, epsrel=1e-12, limit=400)
        val += float(self.w_tilted(upper)) * math.exp(-gap * upper) / gap
        return val - 1.0 / (float(self.model.psi(lam)) - self.q)


def w_q(sf: ScaleFunction, x):
    return sf.w(x)


def w_tilted(sf: ScaleFunction, x):
    return sf.w_tilted(x)


def laplace_identity_residual(sf: ScaleFunction, lam: float) -> float:
    return sf.laplace_identity_residual(lam)
