"""Formula versus Monte Carlo on a grid of queries.

Every row pairs one formula value with the matching simulation estimate and
its z-score ``(formula - mc_mean) / mc_se``. Paths are simulated once per
``(x, b, r)`` cell; all ``q``, ``lam`` and bins of that cell are estimated
from the same paths.
"""

from __future__ import annotations

import csv
import io
import json
import math
import subprocess
from dataclasses import asdict, dataclass
from itertools import product
from pathlib import Path

import numpy as np

from .config import NumericBlock
from .lambda_kernel import LambdaKernel
from .levy_model import LevyModel
from .mc_oracle import Estimand, SimConfig, simulate_cl_exact, simulate_diffusive
from .parisian import (
    ParisianQuery,
    exit_laplace,
    joint_laplace,
    joint_laplace_inf_b,
    potential_density_full,
    potential_density_pos,
    potential_laplace,
    potential_laplace_inf_b,
    ruin_probability,
)
from .quadrature import gl_rule, interior_breaks
from .scale_fn import ScaleFunction

__all__ = ["STANDARD_GRID", "TARGETS", "CompareRow", "make_kernel", "grid_queries",
           "compare", "rows_to_csv", "rows_to_json", "metadata", "SCHEMA_VERSION"]

SCHEMA_VERSION = "1"

STANDARD_GRID = {
    "x": (0.5, 1.0, 2.0),
    "b": (3.0, math.inf),
    "q": (0.0, 0.05, 0.1),
    "lam": (0.0, 0.5, "phi"),
    "r": (0.5, 1.0, 2.0),
}

TARGETS = ("parisian-joint", "parisian-exit", "parisian-potential", "ruin-prob",
           "density-pos", "density-full")

POS_BINS = ((0.4, 0.6), (1.4, 1.6), (2.4, 2.6))
NEG_BINS = ((-0.6, -0.4), (-1.1, -0.9))

COLUMNS = ("index", "target", "x", "b", "q", "lam", "r", "y_lo", "y_hi", "formula",
           "mc_mean", "mc_se", "z_score", "mc_coarse_mean", "mc_coarse_se", "dt_gap_z", "passed")


@dataclass(frozen=True)
class CompareRow:
    index: int
    target: str
    x: float
    b: float
    q: float
    lam: float
    r: float
    y_lo: float | None
    y_hi: float | None
    formula: float
    mc_mean: float
    mc_se: float
    z_score: float
    mc_coarse_mean: float | None = None
    mc_coarse_se: float | None = None
    dt_gap_z: float | None = None
    passed: bool = True


def make_kernel(model: LevyModel, q: float, numeric: NumericBlock | None = None) -> LambdaKernel:
    numeric = NumericBlock() if numeric is None else numeric
    sf = ScaleFunction(model, q, talbot_nodes=numeric.talbot_nodes,
                       euler_nodes=numeric.euler_nodes, root_tol=numeric.root_tol)
    return LambdaKernel(model, q, sf=sf, quad=numeric.quadrature())


def grid_queries(model: LevyModel, grid: dict) -> list[ParisianQuery]:
    """Expand a grid to queries, resolving ``lam = "phi"`` and dropping duplicates."""
    out, seen = [], set()
    for x, b, q, lam, r in product(grid["x"], grid["b"], grid["q"], grid["lam"], grid["r"]):
        lam_v = model.phi(q) if lam == "phi" else float(lam)
        key = (x, b, q, round(lam_v, 14), r)
        if key in seen or x > b:
            continue
        seen.add(key)
        out.append(ParisianQuery(float(x), float(b), float(q), lam_v, float(r)))
    return out


def _bin_average(f, lo: float, hi: float, cuts=(), order: int = 4) -> float:
    z, w = gl_rule(interior_breaks(lo, hi, cuts), order)
    return float(sum(wi * f(zi) for zi, wi in zip(z, w)) / (hi - lo))


def _plan(model: LevyModel, queries, targets):
    """Formula jobs per (x, b, r) cell with the estimands they need."""
    cells: dict[tuple, list] = {}
    for qy in queries:
        inf_b = not qy.finite_b
        phi_q = model.phi(qy.q)
        jobs = cells.setdefault((qy.x, qy.b, qy.r), [])
        for t in targets:
            if t == "parisian-joint":
                jobs.append((t, qy, None, Estimand("ruin_laplace", qy.q, qy.lam)))
            elif t == "parisian-exit" and not inf_b:
                jobs.append((t, qy, None, Estimand("exit", qy.q)))
            elif t == "parisian-potential" and not (inf_b and qy.lam >= phi_q):
                jobs.append((t, qy, None, Estimand("potential", qy.q, qy.lam)))
            elif t == "ruin-prob" and inf_b and qy.q == 0 and qy.lam == 0:
                jobs.append((t, qy, None, Estimand("ruin")))
            elif t in ("density-pos", "density-full") and not inf_b and qy.lam == 0:
                bins = POS_BINS if t == "density-pos" else NEG_BINS
                for lo, hi in bins:
                    jobs.append((t, qy, (lo, hi), Estimand("occupation", qy.q, lo=lo, hi=hi)))
    return cells


def _formula(model, kernels, target, qy, ybin) -> tuple[float, float]:
    """Formula value and the factor mapping the MC estimand onto it."""
    k = kernels(qy.q)
    weight = math.exp((qy.q - float(model.psi(qy.lam))) * qy.r)
    if target == "parisian-joint":
        f = joint_laplace(k, qy) if qy.finite_b else joint_laplace_inf_b(k, qy)
        return f, weight
    if target == "parisian-exit":
        return exit_laplace(k, qy), 1.0
    if target == "parisian-potential":
        f = potential_laplace(k, qy) if qy.finite_b else potential_laplace_inf_b(k, qy)
        return f, weight
    if target == "ruin-prob":
        return ruin_probability(k, qy.x, qy.r), 1.0
    lo, hi = ybin
    if target == "density-pos":
        return _bin_average(lambda y: potential_density_pos(k, qy, y), lo, hi,
                            cuts=(qy.x,), order=8), 1.0
    # the full density carries exp(q r); the occupation estimand does not
    scale = math.exp(-qy.q * qy.r)
    return _bin_average(lambda y: potential_density_full(k, qy, y).value * scale, lo, hi), 1.0


def _z(diff: float, se: float) -> float:
    if se > 0:
        return diff / se
    return 0.0 if abs(diff) < 1e-12 else math.copysign(math.inf, diff)


def compare(model: LevyModel, targets, grid: dict | None = None, n_paths: int = 100_000,
            seed: int = 42, numeric: NumericBlock | None = None, horizon: float = 400.0,
            block_size: int = 8192, dt: float | None = None, z_max: float = 3.0,
            dt_gap_max: float = 2.0) -> list[CompareRow]:
    """Evaluate formulas and simulations on ``grid`` and return one row per pair.

    For models with a Gaussian part the simulation runs at ``dt`` and
    ``dt / 2``; the row passes when the formula is within ``z_max`` combined
    standard errors of the ``dt / 2`` estimate and the two estimates differ
    by less than ``dt_gap_max`` combined standard errors.
    """
    targets = [t for t in targets]
    bad = set(targets) - set(TARGETS)
    if bad:
        raise ValueError(f"unknown compare targets {sorted(bad)}")
    grid = STANDARD_GRID if grid is None else grid
    numeric = NumericBlock() if numeric is None else numeric
    cache: dict[float, LambdaKernel] = {}

    def kernels(q):
        if q not in cache:
            cache[q] = make_kernel(model, q, numeric)
        return cache[q]

    cells = _plan(model, grid_queries(model, grid), targets)
    rows: list[CompareRow] = []
    diffusive = model.sigma > 0
    for (x, b, r), jobs in cells.items():
        if not jobs:
            continue
        estimands = list({j[3].name: j[3] for j in jobs}.values())
        cfg = SimConfig(model, x, b, r, horizon=horizon, n_paths=n_paths, seed=seed,
                        dt=dt, block_size=block_size)
        sims = simulate_diffusive(cfg, estimands) if diffusive else simulate_cl_exact(cfg, estimands)
        for target, qy, ybin, est in jobs:
            f, weight = _formula(model, kernels, target, qy, ybin)
            sim = sims[est.name]
            lo, hi = ybin if ybin else (None, None)
            if diffusive:
                fine, coarse = sim.fine, sim.coarse
                mean, se = fine.mean * weight, fine.std_error * weight
                comb = sim.combined_se * weight
                z = _z(f - mean, comb)
                gap = _z((fine.mean - coarse.mean) * weight, comb)
                ok = abs(z) <= z_max and abs(gap) < dt_gap_max
                rows.append(CompareRow(len(rows), target, x, b, qy.q, qy.lam, r, lo, hi, f, mean, se,
                                       z, coarse.mean * weight, coarse.std_error * weight, gap, ok))
            else:
                mean, se = sim.mean * weight, sim.std_error * weight
                z = _z(f - mean, se)
                rows.append(CompareRow(len(rows), target, x, b, qy.q, qy.lam, r, lo, hi, f, mean, se,
                                       z, passed=abs(z) <= z_max))
    return rows


# output ----------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.12g}"


def _json_num(v):
    if v is None or isinstance(v, (bool, int)):
        return v
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return float(f"{v:.12g}")


def git_describe() -> str:
    try:
        res = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"],
                             cwd=Path(__file__).resolve().parent, capture_output=True,
                             text=True, timeout=10, check=False)
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return res.stdout.strip() or "unknown"


def metadata(model: LevyModel, seed=None, numeric: NumericBlock | None = None, **extra) -> dict:
    from . import __version__

    numeric = NumericBlock() if numeric is None else numeric
    meta = {"schema": SCHEMA_VERSION, "package_version": __version__, "git": git_describe(),
            "model": model.to_dict(), "seed": seed, "tolerances": numeric.to_dict()}
    meta.update(extra)
    return meta


def rows_to_csv(rows, meta: dict, columns=COLUMNS) -> str:
    buf = io.StringIO()
    buf.write(f"# metadata: {json.dumps(meta, sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        d = asdict(row) if not isinstance(row, dict) else row
        w.writerow([_fmt(d.get(c)) for c in columns])
    return buf.getvalue()


def rows_to_json(rows, meta: dict, columns=COLUMNS) -> str:
    recs = []
    for row in rows:
        d = asdict(row) if not isinstance(row, dict) else row
        recs.append({c: (d.get(c) if isinstance(d.get(c), str) else _json_num(d.get(c)))
                     for c in columns})
    return json.dumps({"metadata": meta, "rows": recs}, indent=2, sort_keys=False) + "\n"
