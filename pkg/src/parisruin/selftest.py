"""Invariant checks that need no simulation.

Each check returns rows ``{"check", "params", "residual", "tol", "passed"}``.
"""

from __future__ import annotations

import math

from .config import NumericBlock
from .levy_model import LevyModel
from .parisian import ParisianQuery, exit_laplace, joint_laplace

QR_GRID = [(q, r) for q in (0.0, 0.05, 0.1) for r in (0.5, 1.0, 2.0)]
KENDALL_POINTS = [(0.0, 1.0, 0.0), (0.5, 0.7, 0.2), (1.0, 2.0, 0.1),
                  (2.0, 0.5, 0.05), (-0.5, 1.0, 0.1), (1.0, 0.3, 0.0)]


def _row(check, params, residual, tol):
    return {"check": check, "params": params, "residual": residual, "tol": tol,
            "passed": bool(abs(residual) <= tol)}


def sentinel_rows(model: LevyModel, numeric: NumericBlock | None = None, tol: float = 1e-6):
    """``Lambda^(q)(0, r) = exp(q r)`` (relative error)."""
    from .compare import make_kernel

    rows = []
    for q, r in QR_GRID:
        k = make_kernel(model, q, numeric)
        rel = k.lambda_q(0.0, r) / math.exp(q * r) - 1.0
        rows.append(_row("lambda_sentinel", f"q={q:g} r={r:g}", rel, tol))
    return rows


def laplace_rows(model: LevyModel, numeric: NumericBlock | None = None, tol: float = 1e-6):
    """Scale-function Laplace identity at ``Phi(q) + 0.5`` and ``Phi(q) + 2``."""
    from .compare import make_kernel

    rows = []
    for q in (0.0, 0.1):
        sf = make_kernel(model, q, numeric).sf
        for off in (0.5, 2.0):
            res = sf.laplace_identity_residual(sf.phi_q + off)
            rows.append(_row("scale_laplace", f"q={q:g} lam=Phi+{off:g}", res, tol))
    return rows


def kendall_rows(model: LevyModel, numeric: NumericBlock | None = None, tol: float = 1e-5):
    """Laplace transform in ``r`` of ``exp(-q r) Lambda(x, r)``."""
    from .compare import make_kernel

    rows = []
    for x, theta, q in KENDALL_POINTS:
        k = make_kernel(model, q, numeric)
        res = k.kendall_transform_check(x, theta)
        rows.append(_row("kendall", f"x={x:g} theta={theta:g} q={q:g}", res, tol))
    return rows


def collapse_rows(model: LevyModel, numeric: NumericBlock | None = None, tol: float = 1e-8):
    """``lam = Phi(q)`` collapse of the joint transform and ``exit = 1`` at ``x = b``."""
    from .compare import make_kernel

    rows = []
    for q in (0.05, 0.1):
        k = make_kernel(model, q, numeric)
        lam = k.phi_q
        for x, b, r in ((1.0, 3.0, 1.0), (0.5, 3.0, 2.0)):
            qy = ParisianQuery(x, b, q, lam, r)
            expect = math.exp(lam * x) - exit_laplace(k, qy) * math.exp(lam * b)
            rows.append(_row("phi_collapse", f"x={x:g} b={b:g} q={q:g} r={r:g}",
                             joint_laplace(k, qy) - expect, tol))
        qy = ParisianQuery(3.0, 3.0, q, 0.0, 1.0)
        rows.append(_row("exit_at_b", f"b=3 q={q:g}", exit_laplace(k, qy) - 1.0, 0.0))
    return rows


def run_all(model: LevyModel, numeric: NumericBlock | None = None):
    return (sentinel_rows(model, numeric) + laplace_rows(model, numeric)
            + kendall_rows(model, numeric) + collapse_rows(model, numeric))
