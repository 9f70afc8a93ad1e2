"""Two unit discs 2.5 apart approach each other and sharpen.

Prints the minimum distance, the largest curvature and the area drift every
25 steps. Pass a step count as the first argument (default 200).
"""
import sys

from alphapatch.evolution import RedistributionParams, StopConditions, simulate
from alphapatch.scenarios import two_circles

steps = int(sys.argv[1]) if len(sys.argv) > 1 else 200
redist = RedistributionParams(nu=0.05)
system = two_circles(0.7, redistribution=redist)
a0 = None
for state, rec in simulate(system, redistribution=redist, stop=StopConditions(max_steps=steps)):
    a0 = a0 or rec.areas[0]
    if rec.step % 25 == 0 or rec.status != "ok":
        print(f"step {rec.step:4d}  t={rec.t:.4f}  D={rec.min_distance:.5f}  "
              f"kmax={rec.max_curvature:7.2f}  nodes={rec.node_counts}  dA/A={rec.areas[0] / a0 - 1: .1e}")
print("final status:", rec.status)
