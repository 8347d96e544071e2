"""Expected discounted payoffs up to Parisian ruin or first passage above ``b``.

    V(x) = E_x[ int_0^T exp(-q t) g(X_t) dt + exp(-q T) f(X_T) ],
    T = tau_r ^ tau_b^+,

with ``g`` and the penalty below zero given as exponential mixtures
``h(y) = sum_i w_i exp(lam_i y)`` and a scalar payoff ``f_at_b`` collected
when ``b`` is reached first (the path creeps, so ``X_T = b`` there).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DomainError, MixtureDomainError
from .lambda_kernel import LambdaKernel
from .parisian import (
    ParisianQuery,
    exit_laplace,
    joint_laplace,
    joint_laplace_inf_b,
    potential_laplace,
    potential_laplace_inf_b,
)

__all__ = ["ExpMixture", "ValuationSpec", "value"]


@dataclass(frozen=True)
class ExpMixture:
    """``h(y) = sum_i w_i exp(lam_i y)`` with distinct ``lam_i >= 0``."""

    terms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        terms = tuple((float(w), float(lam)) for w, lam in self.terms)
        if not terms:
            raise DomainError("an exponential mixture needs at least one term")
        lams = [lam for _, lam in terms]
        if any(not lam >= 0 for lam in lams):
            raise DomainError("mixture exponents must be nonnegative")
        if len(set(lams)) != len(lams):
            raise DomainError("mixture exponents must be distinct")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def constant(cls, c: float) -> ExpMixture:
        return cls(((c, 0.0),))

    def __call__(self, y):
        return sum(w * math.exp(lam * y) for w, lam in self.terms)

    def __add__(self, other: ExpMixture) -> ExpMixture:
        merged: dict[float, float] = {}
        for w, lam in (*self.terms, *other.terms):
            merged[lam] = merged.get(lam, 0.0) + w
        return ExpMixture(tuple((w, lam) for lam, w in sorted(merged.items())))

    def to_list(self) -> list[list[float]]:
        return [[w, lam] for w, lam in self.terms]


ZERO = ExpMixture.constant(0.0)


@dataclass(frozen=True)
class ValuationSpec:
    """Running payoff ``g``, penalty ``f_below`` at ruin and ``f_at_b`` at ``b``.

    ``query.lam`` is not used.
    """

    query: ParisianQuery
    g: ExpMixture = field(default=ZERO)
    f_below: ExpMixture = field(default=ZERO)
    f_at_b: float = 0.0


def _reweight(k: LambdaKernel, lam: float, r: float) -> float:
    # strip exp(q r - psi(lam) r) carried by the transforms
    return math.exp((float(k.model.psi(lam)) - k.q) * r)


def value(k: LambdaKernel, spec: ValuationSpec) -> float:
    """Value function of :class:`ValuationSpec` under the model of ``k``."""
    qy = spec.query
    finite = qy.finite_b
    if not finite:
        bad = [lam for w, lam in spec.g.terms if w != 0 and lam >= k.phi_q]
        if bad:
            raise MixtureDomainError(
                f"running payoff exponents {bad} >= Phi(q) = {k.phi_q:.6g} diverge with b = inf")
    total = 0.0
    for w, lam in spec.g.terms:
        if w == 0:
            continue
        sub = ParisianQuery(qy.x, qy.b, qy.q, lam, qy.r)
        pot = potential_laplace(k, sub) if finite else potential_laplace_inf_b(k, sub)
        total += w * pot * _reweight(k, lam, qy.r)
    for w, lam in spec.f_below.terms:
        if w == 0:
            continue
        sub = ParisianQuery(qy.x, qy.b, qy.q, lam, qy.r)
        jl = joint_laplace(k, sub) if finite else joint_laplace_inf_b(k, sub)
        total += w * jl * _reweight(k, lam, qy.r)
    if finite and spec.f_at_b != 0:
        total += spec.f_at_b * exit_laplace(k, qy)
    return total
