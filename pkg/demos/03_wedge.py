"""The wedge y = +-|x| is a fixed point of the rescaled equation.

First the normal rescaled velocity on the exact wedge, which should be close
to zero; then a few backward steps from a perturbed wedge, which should move
back toward it.
"""
import numpy as np

from alphapatch.evolution import RedistributionParams, redistribute_system
from alphapatch.selfsim import apex_deviation, backward_evolve, normal_speed, wedge_system

exact = wedge_system(20.0)
vn = normal_speed(exact)
y = exact.state()
on_graph = (np.abs(y[:, 0]) <= 16) & (np.abs(y[:, 1]) <= 16)
print(f"exact wedge: {exact.node_counts} nodes, max |F.n| on |x|<=16 = {vn[on_graph].max():.2e}")

# Backward evolution of a perturbed wedge
params = RedistributionParams(nu=0.05)
s = redistribute_system(wedge_system(20.0, perturbation=0.05, extension=5), params)
print(f"tau={s.time:+.2f}  apex deviation={apex_deviation(s, 1.0):.5f}")
backward_evolve(s, 8, 0.05, params,
                callback=lambda k, sy: print(f"tau={sy.time:+.2f}  apex deviation={apex_deviation(sy, 1.0):.5f}"))
