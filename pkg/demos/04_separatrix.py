"""Slope of log D(tau) for two wedge-separated patch pairs.

Non-collapse is certified when D grows faster than exp(delta tau). The
repelling pair sits inside its wedge regions; the near-separatrix pair opens
slightly wider than the wedge. Each run to tau = 5.5 takes a minute or two.
Usage: python 04_separatrix.py [t_end]
"""
import sys

import numpy as np

from alphapatch.diagnostics import classify_collapse, fit_log_slope
from alphapatch.evolution import RedistributionParams, StopConditions, simulate
from alphapatch.scenarios import wedge_near_separatrix, wedge_repelling

t_end = float(sys.argv[1]) if len(sys.argv) > 1 else 5.5
delta = 1 / 0.7
redist = RedistributionParams(nu=0.05, physical_units=True)

for name, build in (("repelling", wedge_repelling), ("near separatrix", wedge_near_separatrix)):
    s = build(0.7, redistribution=redist)
    rows = np.array([(r.tau, r.min_distance, r.areas[0]) for _, r in
                     simulate(s, redistribution=redist, stop=StopConditions(t_end=t_end), dt_max=0.05)])
    tau, d, area = rows.T
    lo = min(1.5, 0.3 * t_end)
    grid = np.linspace(lo, t_end, 16)
    fit = fit_log_slope(grid, np.exp(np.interp(grid, tau, np.log(d))))
    growth = np.polyfit(tau, np.log(area), 1)[0]
    print(f"{name:16s} m={fit.estimate:.4f} on [{lo}, {t_end}]  delta={delta:.4f}  "
          f"-> {classify_collapse(fit.estimate, delta).value};  dlogA/dtau / 2delta = {growth / (2 * delta):.6f}")
