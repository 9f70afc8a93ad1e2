"""Initial configurations used in the experiments.

Every builder samples its curves densely and then applies one
redistribution pass, so the starting node counts follow the configured
resolution rather than the sampling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .evolution import PatchSystem, RedistributionParams, redistribute_system
from .geometry import circle, ellipse
from .kernel import KernelParams
from .selfsim import hyperbolic_profile, make_wedge

SCENARIOS = ("two_circles", "two_ellipses", "wedge", "wedge_repelling",
             "wedge_near_separatrix", "from_file")


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    params: dict = field(default_factory=dict)


def two_circles(alpha: float = 0.7, radius: float = 1.0, distance: float = 2.5,
                theta: float = -1.0, n: int = 400, kernel: KernelParams = KernelParams(),
                redistribution: RedistributionParams | None = RedistributionParams()) -> PatchSystem:
    """Equal circles centred at (0, 0) and (distance, 0)."""
    if distance <= 2.0 * radius:
        raise ValueError("circles overlap")
    # node 0 of each circle faces the other so the pinned node sits in the gap
    a = circle(n, radius, (0.0, 0.0), theta, 0)
    b = circle(n, radius, (distance, 0.0), theta, 1, phase=math.pi)
    return _finish(PatchSystem((a, b), alpha, "physical", 0.0, kernel), redistribution)


def two_ellipses(alpha: float = 0.7, a: float = 1.1, b: float = 1.0, distance: float = 2.5,
                 theta: float = -1.0, n: int = 400, kernel: KernelParams = KernelParams(),
                 redistribution: RedistributionParams | None = RedistributionParams()) -> PatchSystem:
    """Equal ellipses with semi-axis a along the line of centres."""
    if distance <= 2.0 * a:
        raise ValueError("ellipses overlap")
    e1 = ellipse(n, a, b, (0.0, 0.0), theta, 0)
    e2 = ellipse(n, a, b, (distance, 0.0), theta, 1).rotated(math.pi, about=(distance, 0.0))
    return _finish(PatchSystem((e1, e2), alpha, "physical", 0.0, kernel), redistribution)


def wedge(alpha: float = 0.7, x_max: float = 20.0, rotation: float = 0.0, perturbation=0.0,
          extension: float | None = None, kernel: KernelParams = KernelParams(),
          redistribution: RedistributionParams | None = RedistributionParams(),
          tau: float = 0.0, **kw) -> PatchSystem:
    """Wedge pair in self-similar variables.

    Without redistribution the construction keeps its fine apex grading and
    long extension (a stationarity probe); with it, the extension defaults
    to 5 x_max so that dynamical runs stay affordable.
    """
    if extension is None:
        extension = 1e4 if redistribution is None else 5.0
    up, lo, _ = make_wedge(x_max, rotation, perturbation, extension=extension, **kw)
    return _finish(PatchSystem((up, lo), alpha, "selfsimilar", tau, kernel), redistribution)


def random_bumps(rng: np.random.Generator, amplitude: float, count: int = 3,
                 width: tuple[float, float] = (0.2, 2.0)):
    """Sum of ``count`` Gaussian bumps of random height in [0, amplitude],
    centre in [-1, 1] and width in ``width``; nonnegative, so adding it to
    the upper profile can only widen the gap."""
    h = rng.uniform(0.0, amplitude, count)
    c = rng.uniform(-1.0, 1.0, count)
    w = rng.uniform(*width, count)
    return lambda x: np.sum(h[:, None] * np.exp(-((np.asarray(x)[None, :] - c[:, None]) / w[:, None]) ** 2),
                            axis=0)


def wedge_repelling(alpha: float = 0.7, gap: float = 0.05, noise: float = 0.0, seed: int = 0,
                    **kw) -> PatchSystem:
    """Both patches inside their own wedge regions, separated by ``2 gap`` at the apex.

    ``noise`` adds seeded random bumps (see ``random_bumps``) to both curves.
    """
    if noise == 0.0:
        return wedge(alpha, perturbation=gap, **kw)
    rng = np.random.default_rng(seed)
    base = hyperbolic_profile(gap)
    b1, b2 = random_bumps(rng, noise), random_bumps(rng, noise)
    return wedge(alpha, perturbation=(lambda x: base(x) + b1(x), lambda x: base(x) + b2(x)), **kw)


def wedge_near_separatrix(alpha: float = 0.7, gap: float = 0.05, slope: float = 0.97,
                          **kw) -> PatchSystem:
    """Like the repelling pair, but the flanks open at ``slope < 1`` so that
    each patch slightly crosses into the side regions away from the apex."""
    prof = hyperbolic_profile(gap, slope)
    return wedge(alpha, perturbation=prof, **kw)


def from_file(path, kernel: KernelParams | None = None,
              redistribution: RedistributionParams | None = None) -> PatchSystem:
    from .storage import read_snapshot
    system = read_snapshot(path)
    if kernel is not None:
        system = replace(system, kernel=kernel)
    return _finish(system, redistribution)


_BUILDERS = {
    "two_circles": two_circles,
    "two_ellipses": two_ellipses,
    "wedge": wedge,
    "wedge_repelling": wedge_repelling,
    "wedge_near_separatrix": wedge_near_separatrix,
}


def build_scenario(spec: ScenarioSpec, alpha: float = 0.7, kernel: KernelParams = KernelParams(),
                   redistribution: RedistributionParams | None = RedistributionParams(),
                   seed: int = 0) -> PatchSystem:
    if spec.name == "from_file":
        if "path" not in spec.params:
            raise ValueError("from_file needs a 'path' parameter")
        return from_file(spec.params["path"], kernel, redistribution)
    try:
        builder = _BUILDERS[spec.name]
    except KeyError:
        raise ValueError(f"unknown scenario {spec.name!r}; known: {', '.join(SCENARIOS)}") from None
    params = dict(spec.params)
    if spec.name == "wedge_repelling":
        params.setdefault("seed", seed)
    return builder(alpha=alpha, kernel=kernel, redistribution=redistribution, **params)


def _finish(system: PatchSystem, redistribution) -> PatchSystem:
    if redistribution is None:
        return system
    return redistribute_system(system, redistribution)
