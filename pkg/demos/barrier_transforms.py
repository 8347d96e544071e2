"""Discounted exit and ruin transforms on a barrier grid for Brownian surplus.

Shows the exit transform tending to the classical ratio W(x)/W(b) as the
delay shrinks, and the joint transform settling as the barrier moves up.
"""

import math

from parisruin import (
    BM_DEFAULT,
    LambdaKernel,
    ParisianQuery,
    ScaleFunction,
    exit_laplace,
    joint_laplace,
    joint_laplace_inf_b,
)

q, x, b = 0.1, 1.0, 3.0
k = LambdaKernel(BM_DEFAULT, q)
sf = ScaleFunction(BM_DEFAULT, q)

print(f"W(x)/W(b) = {float(sf.w(x) / sf.w(b)):.6f}")
for r in (1e-4, 1e-2, 0.5, 2.0):
    print(f"r = {r:<7g} exit transform {exit_laplace(k, ParisianQuery(x, b, q, 0.0, r)):.6f}")

print()
for bb in (3.0, 6.0, 12.0, 24.0):
    print(f"b = {bb:<5g} joint transform {joint_laplace(k, ParisianQuery(x, bb, q, 0.3, 1.0)):.8f}")
print(f"b = inf   joint transform {joint_laplace_inf_b(k, ParisianQuery(x, math.inf, q, 0.3, 1.0)):.8f}")
