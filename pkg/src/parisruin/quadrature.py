"""Composite Gauss-Legendre rules shared by the formula layer."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def _leggauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def gl_rule(breaks, order: int = 16, panels: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of a composite Gauss-Legendre rule.

    Each interval ``[breaks[i], breaks[i+1]]`` is split into ``panels``
    equal sub-panels carrying ``order`` nodes each. Empty intervals are
    skipped.
    """
    x0, w0 = _leggauss(order)
    b = np.asarray(breaks, dtype=float)
    nodes, weights = [], []
    for lo, hi in zip(b[:-1], b[1:]):
        if not hi > lo:
            continue
        edges = np.linspace(lo, hi, panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        nodes.append((mid[:, None] + half[:, None] * x0).ravel())
        weights.append((half[:, None] * w0).ravel())
    if not nodes:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(nodes), np.concatenate(weights)


def sqrt_end_rule(breaks, order: int = 16, panels: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Composite rule robust to ``|s - e|^(-1/2)`` behaviour at every break.

    Every interval is halved and each half is mapped by ``s = e + h v**2``
    from its outer endpoint ``e``, so integrable inverse-square-root
    singularities and square-root kinks at the breaks become smooth in ``v``.
    """
    b = np.asarray(breaks, dtype=float)
    v, wv = gl_rule([0.0, 1.0], order, panels)
    nodes, weights = [], []
    for lo, hi in zip(b[:-1], b[1:]):
        if not hi > lo:
            continue
        h = 0.5 * (hi - lo)
        nodes.append(lo + h * v * v)
        weights.append(2.0 * h * v * wv)
        nodes.append(hi - h * v * v)
        weights.append(2.0 * h * v * wv)
    if not nodes:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(nodes), np.concatenate(weights)


def interior_breaks(lo: float, hi: float, points) -> list[float]:
    """Sorted ``[lo, *points inside (lo, hi), hi]``."""
    inside = sorted({float(p) for p in points if lo < p < hi})
    return [lo, *inside, hi]
