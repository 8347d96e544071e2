"""Monte Carlo reference values for Parisian ruin functionals.

Two path simulators share one set of estimands:

* :func:`simulate_cl_exact` handles models without a Gaussian part. Paths
  are linear between jumps, so the Parisian clock, first passage above ``b``
  and all discounted time integrals are evaluated in closed form.
* :func:`simulate_diffusive` handles ``sigma > 0`` on a time grid, with
  Brownian-bridge corrections for crossings between grid points. It always
  runs at ``dt`` and ``dt / 2`` and reports both.

Random numbers come from counter-based Philox streams keyed by
``(seed, block index)``, where a block is a fixed run of consecutive paths.
Results therefore depend only on the seed and the block size.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import DomainError, GridTooCoarse, MethodUnavailable
from .levy_model import LevyModel

__all__ = [
    "Estimand",
    "SimConfig",
    "SimEstimate",
    "TwoGridEstimate",
    "MarginalSample",
    "simulate_cl_exact",
    "simulate_diffusive",
    "estimate_marginal",
]

ESTIMAND_KINDS = ("ruin", "ruin_laplace", "exit", "potential", "occupation")

CENSORED, RUINED, HIT_B, ESCAPED = 0, 1, 2, 3


@dataclass(frozen=True)
class Estimand:
    """One path functional.

    Kinds
    -----
    ``ruin``
        ``1{tau_r < tau_b^+}`` (censored paths count as 0).
    ``ruin_laplace``
        ``exp(-q tau_r + lam X_{tau_r}) 1{tau_r < tau_b^+}``.
    ``exit``
        ``exp(-q tau_b^+) 1{tau_b^+ < tau_r}``.
    ``potential``
        ``int_0^{tau_r ^ tau_b^+} exp(-q t + lam X_t) dt``.
    ``occupation``
        ``int_0^{tau_r ^ tau_b^+} exp(-q t) 1{lo <= X_t < hi} dt / (hi - lo)``,
        the bin average of the discounted occupation density.
    """

    kind: str
    q: float = 0.0
    lam: float = 0.0
    lo: float = 0.0
    hi: float = 0.0

    def __post_init__(self):
        if self.kind not in ESTIMAND_KINDS:
            raise ValueError(f"unknown estimand kind {self.kind!r}")
        if self.q < 0 or self.lam < 0:
            raise DomainError("q and lam must be nonnegative")
        if self.kind == "occupation" and not self.hi > self.lo:
            raise DomainError("occupation bins need hi > lo")

    @property
    def name(self) -> str:
        if self.kind == "ruin":
            return "ruin"
        if self.kind == "exit":
            return f"exit[q={self.q:g}]"
        if self.kind == "occupation":
            return f"occupation[q={self.q:g},{self.lo:g}:{self.hi:g}]"
        return f"{self.kind}[q={self.q:g},lam={self.lam:g}]"


@dataclass(frozen=True)
class SimConfig:
    """Simulation setup.

    Parameters
    ----------
    model : LevyModel
    x, b, r : float
        Start, upper barrier (``inf`` allowed) and Parisian delay.
    horizon : float
        Paths still undecided at this time are censored.
    n_paths : int
    seed : int
    dt : float, optional
        Time step of the diffusive simulator; must not exceed ``r / 100``.
    block_size : int
        Paths per random-number stream.
    escape_tol : float
        With ``b = inf`` a path is stopped once it is so high that Parisian
        ruin afterwards has probability below this (Lundberg bound).
    """

    model: LevyModel
    x: float
    b: float
    r: float
    horizon: float = 400.0
    n_paths: int = 100_000
    seed: int = 0
    dt: float | None = None
    block_size: int = 8192
    escape_tol: float = 1e-10

    def __post_init__(self):
        if not self.r > 0:
            raise DomainError("r must be positive")
        if self.x > self.b:
            raise DomainError("x must not exceed b")
        if self.n_paths < 1 or self.block_size < 1:
            raise ValueError("n_paths and block_size must be positive")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if self.horizon < 10 * self.r:
            warnings.warn("horizon shorter than 10 r", UserWarning, stacklevel=3)
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class SimEstimate:
    """Sample mean with its standard error and provenance."""

    mean: float
    std_error: float
    n_paths: int
    n_censored: int
    seed: int
    bias_bound: float = 0.0
    dt: float | None = None

    def to_dict(self) -> dict:
        return {"mean": self.mean, "std_error": self.std_error, "n_paths": self.n_paths,
                "n_censored": self.n_censored, "seed": self.seed,
                "bias_bound": self.bias_bound, "dt": self.dt}


@dataclass(frozen=True)
class TwoGridEstimate:
    """Diffusive estimates at ``dt`` (coarse) and ``dt / 2`` (fine)."""

    fine: SimEstimate
    coarse: SimEstimate
    richardson: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "richardson", 2.0 * self.fine.mean - self.coarse.mean)

    @property
    def combined_se(self) -> float:
        return math.hypot(self.fine.std_error, self.coarse.std_error)


# jump-law encoding shared by the kernels
def _jump_code(model: LevyModel) -> tuple[int, float, float, float, float]:
    j = model.jumps
    if not j.active:
        return 0, 0.0, 1.0, 1.0, 0.0
    if j.kind == "deterministic":
        return 2, j.rate, 1.0, 1.0, j.size
    return 1, j.rate, float(j.shape), 1.0 / j.alpha, 0.0


@njit(cache=True)
def _draw_jump(rng, code, shape, scale, size):
    if code == 2:
        return size
    if shape == 1.0:
        return rng.exponential() * scale
    return rng.gamma(shape, scale)


@njit(cache=True)
def _seg_exp(t0, x0, dur, mu, q, lam):
    # int_0^dur exp(-q (t0 + u) + lam (x0 + mu u)) du
    k = lam * mu - q
    head = math.exp(-q * t0 + lam * x0)
    if abs(k * dur) < 1e-8:
        return head * dur * (1.0 + 0.5 * k * dur)
    return head * math.expm1(k * dur) / k


@njit(cache=True)
def _seg_disc(t0, t1, q):
    # int_t0^t1 exp(-q t) dt
    if t1 <= t0:
        return 0.0
    if q == 0.0:
        return t1 - t0
    return math.exp(-q * t0) * -math.expm1(-q * (t1 - t0)) / q


@njit(cache=True)
def _cl_block(rng, n, x, b, r, horizon, level, mu, rate, code, shape, scale, size,
              pq, plam, cont, oq, olo, ohi, kind, tau, xtau, pot, occ):
    inf = math.inf
    for p in range(n):
        t = 0.0
        xv = x
        g = 0.0  # start of the current excursion below zero
        below = xv < 0.0
        out = CENSORED
        tj = rng.exponential() / rate
        while True:
            # candidate events along the current linear piece
            if below:
                t_up = t + (-xv) / mu
                t_ruin = g + r
                t_evt = min(t_up, t_ruin, tj, horizon)
            else:
                t_top = t + (b - xv) / mu if b < inf else t + (level - xv) / mu
                t_evt = min(t_top, tj, horizon)
            dur = t_evt - t
            for i in range(pq.size):
                pot[p, i] += _seg_exp(t, xv, dur, mu, pq[i], plam[i])
            for i in range(oq.size):
                # time spent in [olo, ohi) along x = xv + mu u
                u0 = max(0.0, (olo[i] - xv) / mu)
                u1 = min(dur, (ohi[i] - xv) / mu)
                if u1 > u0:
                    occ[p, i] += _seg_disc(t + u0, t + u1, oq[i])
            xv = xv + mu * dur
            t = t_evt
            if t_evt == horizon:
                out = CENSORED
                break
            if below:
                if t_evt == t_ruin and t_ruin <= tj and t_ruin < t_up:
                    out = RUINED
                    break
                if t_evt == t_up and t_up < tj:
                    xv = 0.0
                    below = False
                    continue
            else:
                if t_evt == t_top and t_top < tj:
                    if b < inf:
                        xv = b
                        out = HIT_B
                    else:
                        xv = level
                        out = ESCAPED
                    break
            # a jump
            xv -= _draw_jump(rng, code, shape, scale, size)
            tj = t + rng.exponential() / rate
            if not below and xv < 0.0:
                below = True
                g = t
        kind[p] = out
        tau[p] = t
        xtau[p] = xv
        if out == ESCAPED:
            for i in range(pq.size):
                pot[p, i] += math.exp(-pq[i] * t) * cont[i]


@njit(cache=True)
def _diff_block(rng, n, x, b, r, horizon, level, dt, mu, sigma, rate, code, shape, scale, size,
                pq, plam, cont, oq, olo, ohi, kind, tau, xtau, pot, occ):
    inf = math.inf
    s2 = sigma * sigma
    top = b if b < inf else level
    for p in range(n):
        t = 0.0
        xv = x
        below = xv < 0.0
        g = 0.0
        out = CENSORED
        tj = rng.exponential() / rate if rate > 0.0 else inf
        while xv < top:
            h = dt
            jump_now = False
            if tj < t + h:
                h = tj - t
                jump_now = True
            if t + h > horizon:
                h = horizon - t
                jump_now = False
            xn = xv + mu * h + sigma * math.sqrt(h) * rng.standard_normal()
            # first passage above the barrier inside the step
            hit = xn >= top
            if not hit and h > 0.0:
                hit = rng.random() < math.exp(-2.0 * (top - xv) * (top - xn) / (s2 * h))
            t_hit = inf
            if hit:
                t_hit = t + 0.5 * h if xn < top else t + h * (top - xv) / (xn - xv)
            # zero crossings inside the step
            ruin_t = inf
            new_below = below
            new_g = g
            if below:
                if xn >= 0.0:
                    t_c = t + h * (-xv) / (xn - xv)
                    if g + r <= t_c:
                        ruin_t = g + r
                    new_below = False
                else:
                    if h > 0.0 and rng.random() < math.exp(-2.0 * xv * xn / (s2 * h)):
                        if g + r <= t + 0.5 * h:
                            ruin_t = g + r
                        new_g = t + 0.5 * h
                    if ruin_t == inf and new_g + r <= t + h:
                        ruin_t = new_g + r
            else:
                if xn < 0.0:
                    new_below = True
                    new_g = t + h * xv / (xv - xn)
                    if new_g + r <= t + h:
                        ruin_t = new_g + r
            t_end = t + h
            stop = min(ruin_t, t_hit)
            if stop < t_end:
                t_end = stop
            dur = t_end - t
            if dur > 0.0:
                xm_end = xv + (xn - xv) * (dur / h) if h > 0.0 else xv
                for i in range(pq.size):
                    f0 = math.exp(-pq[i] * t + plam[i] * xv)
                    f1 = math.exp(-pq[i] * t_end + plam[i] * xm_end)
                    pot[p, i] += 0.5 * dur * (f0 + f1)
                xm = 0.5 * (xv + xm_end)
                tm = t + 0.5 * dur
                for i in range(oq.size):
                    if olo[i] <= xm < ohi[i]:
                        occ[p, i] += dur * math.exp(-oq[i] * tm)
            if stop <= t + h and stop < inf:
                t = stop
                if ruin_t <= t_hit:
                    if h > 0.0:
                        xv = min(xv + (xn - xv) * ((ruin_t - (t_end - dur)) / h), 0.0)
                    out = RUINED
                else:
                    xv = top
                    out = HIT_B if b < inf else ESCAPED
                break
            t = t + h
            xv = xn
            below = new_below
            g = new_g
            if t >= horizon:
                out = CENSORED
                break
            if jump_now:
                xv -= _draw_jump(rng, code, shape, scale, size)
                tj = t + rng.exponential() / rate
                if not below and xv < 0.0:
                    below = True
                    g = t
        else:
            out = HIT_B if b < inf else ESCAPED
        kind[p] = out
        tau[p] = t
        xtau[p] = xv
        if out == ESCAPED:
            for i in range(pq.size):
                pot[p, i] += math.exp(-pq[i] * t) * cont[i]


def _escape_level(cfg: SimConfig, estimands) -> float:
    if math.isfinite(cfg.b):
        return math.inf
    m = cfg.model
    if m.drift <= 0:
        return math.inf
    R = m.lundberg_exponent()
    highest = max([cfg.x, 0.0] + [e.hi for e in estimands if e.kind == "occupation"])
    return highest + math.log(1.0 / cfg.escape_tol) / R


def _continuation(cfg: SimConfig, level: float, e: Estimand) -> float:
    # E_L[int_0^inf exp(-q t + lam X_t) dt] once ruin has become negligible
    if not math.isfinite(level):
        return 0.0
    gap = e.q - float(cfg.model.psi(e.lam))
    if gap <= 0:
        return math.inf
    return math.exp(e.lam * level) / gap


def _run(cfg: SimConfig, estimands, kernel, dt=None, stream=0):
    estimands = list(estimands)
    m = cfg.model
    level = _escape_level(cfg, estimands)
    pots = [e for e in estimands if e.kind == "potential"]
    occs = [e for e in estimands if e.kind == "occupation"]
    pq = np.array([e.q for e in pots], dtype=float)
    plam = np.array([e.lam for e in pots], dtype=float)
    cont = np.array([_continuation(cfg, level, e) for e in pots], dtype=float)
    oq = np.array([e.q for e in occs], dtype=float)
    olo = np.array([e.lo for e in occs], dtype=float)
    ohi = np.array([e.hi for e in occs], dtype=float)
    code, rate, shape, scale, size = _jump_code(m)
    n = cfg.n_paths
    kind = np.empty(n, dtype=np.int64)
    tau = np.empty(n)
    xtau = np.empty(n)
    pot = np.zeros((n, pq.size))
    occ = np.zeros((n, oq.size))
    bs = cfg.block_size
    for blk, start in enumerate(range(0, n, bs)):
        stop = min(n, start + bs)
        rng = np.random.Generator(np.random.Philox(key=[cfg.seed, blk * 4 + stream]))
        sl = slice(start, stop)
        args = (rng, stop - start, cfg.x, cfg.b, cfg.r, cfg.horizon, level)
        tail = (pq, plam, cont, oq, olo, ohi, kind[sl], tau[sl], xtau[sl], pot[sl], occ[sl])
        if dt is None:
            kernel(*args, m.mu, rate, code, shape, scale, size, *tail)
        else:
            kernel(*args, dt, m.mu, m.sigma, rate, code, shape, scale, size, *tail)
    return _summarise(cfg, estimands, level, kind, tau, xtau, pot, occ, pots, occs, dt)


def _summarise(cfg, estimands, level, kind, tau, xtau, pot, occ, pots, occs, dt):
    n = kind.size
    n_cens = int(np.count_nonzero(kind == CENSORED))
    n_esc = int(np.count_nonzero(kind == ESCAPED))
    # ruin after escape or after the horizon is not seen by the estimates
    bias = n_cens / n + (n_esc / n) * cfg.escape_tol
    ruined = kind == RUINED
    hit = kind == HIT_B
    out = {}
    for e in estimands:
        if e.kind == "ruin":
            vals = ruined.astype(float)
        elif e.kind == "ruin_laplace":
            vals = np.where(ruined, np.exp(-e.q * tau + e.lam * np.where(ruined, xtau, 0.0)), 0.0)
        elif e.kind == "exit":
            vals = np.where(hit, np.exp(-e.q * tau), 0.0)
        elif e.kind == "potential":
            vals = pot[:, pots.index(e)]
        else:
            vals = occ[:, occs.index(e)] / (e.hi - e.lo)
        mean = float(np.mean(vals))
        se = float(np.std(vals, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        out[e.name] = SimEstimate(mean, se, n, n_cens, cfg.seed, bias, dt)
    return out


def simulate_cl_exact(cfg: SimConfig, estimands) -> dict[str, SimEstimate]:
    """Event-driven exact simulation for models without a Gaussian part.

    Returns a mapping from :attr:`Estimand.name` to :class:`SimEstimate`.
    ``bias_bound`` bounds the probability mass of paths whose outcome the
    simulation could not see (censored at the horizon or stopped at the
    escape level).
    """
    m = cfg.model
    if m.sigma > 0 or not m.jumps.active or m.mu <= 0:
        raise MethodUnavailable("exact simulation needs sigma = 0, jumps and a positive premium rate")
    return _run(cfg, estimands, _cl_block)


def simulate_diffusive(cfg: SimConfig, estimands) -> dict[str, TwoGridEstimate]:
    """Time-stepping simulation for ``sigma > 0`` at ``dt`` and ``dt / 2``.

    Crossings of zero and of ``b`` between grid points are detected with the
    Brownian-bridge probability ``exp(-2 u v / (sigma^2 h))``. Jumps are
    placed at their exact times. The bias is ``O(dt)``; each estimand is
    returned at both step sizes with the Richardson value ``2 fine - coarse``.
    """
    m = cfg.model
    if m.sigma == 0:
        raise MethodUnavailable("the diffusive simulator needs sigma > 0")
    dt = cfg.dt if cfg.dt is not None else cfg.r / 200.0
    if dt > cfg.r / 100.0:
        raise GridTooCoarse(f"dt = {dt} exceeds r / 100 = {cfg.r / 100}")
    coarse = _run(cfg, estimands, _diff_block, dt=dt, stream=1)
    fine = _run(cfg, estimands, _diff_block, dt=0.5 * dt, stream=2)
    return {name: TwoGridEstimate(fine[name], coarse[name]) for name in fine}


@dataclass(frozen=True)
class MarginalSample:
    """Exact draws of ``X_t`` under ``P_0``."""

    samples: np.ndarray
    atom_location: float | None
    atom_frequency: float

    def histogram(self, edges):
        """Density histogram of the draws away from the atom, normalised by all draws."""
        s = self.samples
        if self.atom_location is not None:
            s = s[s != self.atom_location]
        counts, edges = np.histogram(s, bins=edges)
        return counts / (self.samples.size * np.diff(edges)), edges


def estimate_marginal(model: LevyModel, t: float, n: int, seed: int) -> MarginalSample:
    """Draw ``n`` exact samples of ``X_t`` (Gaussian part plus compound Poisson sum)."""
    if not t > 0:
        raise DomainError("t must be positive")
    rng = np.random.Generator(np.random.Philox(key=[seed, 0]))
    x = np.full(n, model.mu * t)
    j = model.jumps
    counts = None
    if j.active:
        counts = rng.poisson(j.rate * t, size=n)
        if j.kind == "deterministic":
            x -= counts * j.size
        else:
            pos = counts > 0
            x[pos] -= rng.gamma(counts[pos] * j.shape, 1.0 / j.alpha)
    if model.sigma > 0:
        x += model.sigma * math.sqrt(t) * rng.standard_normal(n)
        return MarginalSample(x, None, 0.0)
    freq = float(np.mean(counts == 0))
    return MarginalSample(x, model.mu * t, freq)
