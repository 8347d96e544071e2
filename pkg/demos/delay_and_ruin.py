"""How the implementation delay changes ruin for a compound Poisson surplus.

Prints the Parisian ruin probability for a range of delays next to the
classical ruin probability, then checks one row against simulation.
"""

import math

from parisruin import CL_DEFAULT, LambdaKernel, ruin_probability
from parisruin.mc_oracle import Estimand, SimConfig, simulate_cl_exact

# premium 1.5, unit claim rate, Exp(1) claims
k = LambdaKernel(CL_DEFAULT, 0.0)
x = 1.0
classical = 1 / 1.5 * math.exp(-(1 - 1 / 1.5) * x)

print(f"start x = {x}, classical ruin {classical:.4f}")
print(" delay r   P(Parisian ruin)")
for r in (0.01, 0.1, 0.5, 1.0, 2.0, 5.0):
    print(f"{r:8.2f}   {ruin_probability(k, x, r):.6f}")

r = 1.0
est = simulate_cl_exact(SimConfig(CL_DEFAULT, x, math.inf, r, n_paths=200_000, seed=1), [Estimand("ruin")])["ruin"]
print(f"\nsimulated at r = {r}: {est.mean:.4f} +/- {est.std_error:.4f}")
