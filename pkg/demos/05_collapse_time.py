"""Collapse time of two ellipses, then the switch to self-similar variables.

Runs the ellipse pair (a=1.1, b=1) to t = 6.4, fits D = C (t* - t)**(1/alpha)
on t in [5.5, 6.2], and rescales the final state about the origin with the
fitted t*. At nu = 0.05 the late approach is under-resolved and t* comes out
about 1.7% early; nu = 0.03 lands within 0.1% and takes about 12 minutes.
Usage: python 05_collapse_time.py [nu]
"""
import sys

import numpy as np

from alphapatch.diagnostics import fit_collapse_time
from alphapatch.evolution import RedistributionParams, StopConditions, simulate
from alphapatch.scenarios import two_ellipses
from alphapatch.selfsim import RescaleMap, to_selfsimilar

nu = float(sys.argv[1]) if len(sys.argv) > 1 else 0.03
redist = RedistributionParams(nu=nu)
s = two_ellipses(0.7, redistribution=redist)
rows, last = [], s
for last, rec in simulate(s, redistribution=redist, stop=StopConditions(t_end=6.4, min_distance=1e-4)):
    rows.append((rec.t, rec.min_distance))
    if rec.step % 200 == 0:
        print(f"step {rec.step:5d}  t={rec.t:.4f}  D={rec.min_distance:.5f}  nodes={rec.node_counts}")
t, d = np.array(rows).T
fit = fit_collapse_time(t, d, 0.7, window=(5.5, 6.2))
print(f"t* = {fit.estimate:.6f}  (C = {fit.amplitude:.4f}, {fit.count} points)  reference 6.887794662")

ss = to_selfsimilar(last, RescaleMap(fit.estimate))
print(f"rescaled at tau = {ss.time:.4f}; patch extent grows by {np.exp(ss.time / 0.7):.1f}")
