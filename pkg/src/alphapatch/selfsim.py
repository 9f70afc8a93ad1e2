"""Self-similar variables.

With ``x - x*(t) = (t* - t)**delta y`` and ``tau = -log(t* - t)`` the nodes
obey ``dy/dtau = delta y + f(y) - f(0)``, with the collapse point pinned at
the origin. The wedge pair ``(x, |x|)``, ``(x, -|x|)`` and its rotations are
stationary for this field.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .evolution import PatchSystem, RedistributionParams, redistribute_system, rk4_step
from .geometry import Contour, sample
from .kernel import ContactError, KernelParams, all_node_normals, velocity_field


@dataclass(frozen=True)
class RescaleMap:
    t_star: float
    x_star: tuple[float, float] = (0.0, 0.0)
    delta: float = 1.0 / 0.7

    def __post_init__(self) -> None:
        if self.delta <= 0.0:
            raise ValueError("delta must be positive")

    def gap(self, t: float) -> float:
        if t >= self.t_star:
            raise ValueError(f"t={t} is not before the collapse time {self.t_star}")
        return self.t_star - t

    def tau(self, t: float) -> float:
        return -math.log(self.gap(t))

    def t(self, tau: float) -> float:
        return self.t_star - math.exp(-tau)


def rescale_physical_to_selfsim(contours, t: float, rmap: RescaleMap):
    """Physical contours at time t -> rescaled contours and tau."""
    gap = rmap.gap(t)
    shift = np.asarray(rmap.x_star, float)
    factor = gap ** (-rmap.delta)
    out = [c.with_nodes((c.nodes - shift) * factor) for c in contours]
    return out, -math.log(gap)


def rescale_selfsim_to_physical(contours, tau: float, rmap: RescaleMap):
    gap = math.exp(-tau)
    shift = np.asarray(rmap.x_star, float)
    out = [c.with_nodes(c.nodes * gap ** rmap.delta + shift) for c in contours]
    return out, rmap.t_star - gap


def to_selfsimilar(system: PatchSystem, rmap: RescaleMap) -> PatchSystem:
    contours, tau = rescale_physical_to_selfsim(system.contours, system.time, rmap)
    return replace(system, contours=tuple(contours), mode="selfsimilar", time=tau)


def to_physical(system: PatchSystem, rmap: RescaleMap) -> PatchSystem:
    contours, t = rescale_selfsim_to_physical(system.contours, system.time, rmap)
    return replace(system, contours=tuple(contours), mode="physical", time=t)


def rescaled_velocities(system: PatchSystem, workers: int | None = None) -> np.ndarray:
    """F_j = delta y_j + f(y_j) - f(0) at every node.

    f(0) is computed once, in the same call as the node targets. For
    alpha = 1 each node gets the normal projection of F.
    """
    y = system.state()
    targets = np.vstack((y, np.zeros((1, 2))))
    alpha = system.alpha
    try:
        f = velocity_field(system.contours, alpha, targets, system.kernel,
                           skip_self_i1=alpha >= 1.0, workers=workers)
    except ContactError as exc:
        if y.shape[0] in exc.targets:
            raise ContactError("the collapse point (origin) lies on a contour segment") from exc
        raise
    F = system.delta * y + f[:-1] - f[-1]
    if alpha >= 1.0:
        nrm = all_node_normals(system.contours)
        F = np.einsum("ij,ij->i", F, nrm)[:, None] * nrm
    return F


def rescaled_velocity(system: PatchSystem, target_location) -> np.ndarray:
    cid, j = target_location
    offset = 0
    for c in system.contours:
        if c.id == cid:
            return rescaled_velocities(system)[offset + j % len(c)]
        offset += len(c)
    raise KeyError(f"no contour with id {cid}")


def normal_speed(system: PatchSystem, F: np.ndarray | None = None) -> np.ndarray:
    """|F . n| at every node."""
    if F is None:
        F = rescaled_velocities(system)
    return np.abs(np.einsum("ij,ij->i", F, all_node_normals(system.contours)))


# --------------------------------------------------------------------------
# wedge configurations

Profile = Callable[[np.ndarray], np.ndarray]


def hyperbolic_profile(gap: float, slope: float = 1.0) -> Profile:
    """``y = sqrt(slope**2 x**2 + gap**2)``: a smooth apex at height ``gap``
    approaching the lines ``y = slope |x|``."""
    return lambda x: np.sqrt((slope * x) ** 2 + gap ** 2)


def _graded_abscissae(x_end: float, h_apex: float, ratio: float, h_max: float,
                      x_max: float) -> np.ndarray:
    xs = [0.0]
    h = h_apex
    while xs[-1] < x_end:
        xs.append(xs[-1] + h)
        h = min(h * ratio, h_max) if xs[-1] < x_max else h * ratio
    xs = np.array(xs)
    xs[-1] = x_end
    if xs[-1] - xs[-2] < 0.3 * (xs[-2] - xs[-3]):
        xs = np.delete(xs, -2)
    return xs


def _branch(profile: Profile, xs: np.ndarray, x_max: float, side: float) -> np.ndarray:
    """Profile at ``side * xs`` for ``xs`` in [0, x_max], continued by its
    tangent line beyond x_max. ``xs`` are nonnegative distances from the apex."""
    eps = 1e-6 * x_max
    y_max = float(profile(np.array([side * x_max]))[0])
    slope = float((y_max - profile(np.array([side * (x_max - eps)]))[0]) / eps)
    return np.where(xs <= x_max, profile(side * np.minimum(xs, x_max)), y_max + slope * (xs - x_max))


@dataclass(frozen=True)
class WedgeGeometry:
    """Construction record of a wedge pair."""

    x_max: float
    x_end: float
    closure_radius: float
    rotation: float
    apex_gap: float


def make_wedge(x_max: float = 20.0, rotation: float = 0.0,
               perturbation: float | Profile | tuple[Profile, Profile] | None = None,
               *, extension: float = 1e4, h_apex: float | None = None, ratio: float = 1.05,
               h_max: float = 0.5, strength: float = -1.0):
    """Two closed contours following the wedge ``y = +-|x|`` near the origin.

    Each branch follows its profile up to ``|x| = x_max``, continues along the
    tangent line up to ``|x| = extension * x_max`` and is closed by a circular
    arc about the origin, so every patch is a (curved) sector. Node spacing
    grows geometrically from ``h_apex`` at the apex. The defaults keep the
    truncation error in the normal rescaled velocity below 1e-3 on
    ``|y| <= 0.8 x_max``: it decays only like ``R**-alpha`` in the closure
    radius R, while the graded spacing makes a long extension cheap. The
    spline rounding of the exact apex corner contributes an error of order
    ``h_apex**(1 - alpha)``, hence the default of 1e-6 there; perturbed
    wedges use a twentieth of the apex gap.

    ``perturbation`` may be a gap amplitude (hyperbolic apex of that height on
    both curves), an upper-curve profile (mirrored for the lower curve) or a
    pair of profiles (upper, lower), each giving ``|y|`` as a function of x.
    Returns ``(upper, lower, WedgeGeometry)``.
    """
    if x_max <= 0.0:
        raise ValueError("x_max must be positive")
    if extension < 1.0:
        raise ValueError("extension must be at least 1")
    if perturbation is None or (np.isscalar(perturbation) and perturbation == 0.0):
        upper = lower = np.abs
    elif np.isscalar(perturbation):
        upper = lower = hyperbolic_profile(float(perturbation))
    elif callable(perturbation):
        upper = lower = perturbation
    else:
        upper, lower = perturbation

    probe = np.linspace(-x_max, x_max, 4001)
    if np.any(upper(probe) + lower(probe) < 0.0):
        raise ValueError("perturbation makes the two curves cross")
    gap = float(upper(np.zeros(1))[0] + lower(np.zeros(1))[0])
    if h_apex is None:
        h_apex = 1e-6 if gap == 0.0 else min(0.02, gap / 20.0)
    if not (h_apex > 0.0 and ratio >= 1.0 and h_max > 0.0):
        raise ValueError("need h_apex > 0, ratio >= 1 and h_max > 0")
    x_end = extension * x_max
    xs = _graded_abscissae(x_end, h_apex, ratio, h_max, x_max)

    def arc(start, stop, h):
        # counterclockwise from start to stop about the origin, radius interpolated
        r0, r1 = np.hypot(*start), np.hypot(*stop)
        a0 = math.atan2(start[1], start[0])
        sweep = (math.atan2(stop[1], stop[0]) - a0) % (2 * math.pi)
        n = max(4, int(math.ceil(max(r0, r1) * sweep / h)))
        s = np.arange(1, n) / n
        r = r0 + (r1 - r0) * s
        return r[:, None] * np.column_stack((np.cos(a0 + sweep * s), np.sin(a0 + sweep * s)))

    h_end = xs[-1] - xs[-2]

    def contour(profile, sign, cid):
        right = np.column_stack((xs, sign * _branch(profile, xs, x_max, 1.0)))
        left = np.column_stack((-xs, sign * _branch(profile, xs, x_max, -1.0)))
        if sign > 0:
            # apex -> right branch out -> arc over the top -> left branch in
            pts = np.vstack((right, arc(right[-1], left[-1], h_end), left[:0:-1]))
        else:
            # apex -> left branch out -> arc under the bottom -> right branch in
            pts = np.vstack((left, arc(left[-1], right[-1], h_end), right[:0:-1]))
        c = Contour(pts, strength, cid)
        return c.rotated(rotation) if rotation else c

    up = contour(upper, 1.0, 0)
    lo = contour(lower, -1.0, 1)
    geom = WedgeGeometry(x_max, x_end, float(np.hypot(x_end, _branch(upper, xs[-1:], x_max, 1.0)[0])),
                         rotation, gap)
    return up, lo, geom


def wedge_system(x_max: float = 20.0, rotation: float = 0.0, perturbation=None, alpha: float = 0.7,
                 kernel: KernelParams = KernelParams(), tau: float = 0.0, **kw) -> PatchSystem:
    up, lo, _ = make_wedge(x_max, rotation, perturbation, **kw)
    return PatchSystem((up, lo), alpha, "selfsimilar", tau, kernel)


def wedge_offset(points: np.ndarray, rotation: float = 0.0) -> np.ndarray:
    """Distance from each point to the (rotated) exact wedge lines y = +-|x|."""
    c, s = math.cos(-rotation), math.sin(-rotation)
    p = np.asarray(points, float) @ np.array([[c, -s], [s, c]]).T
    x, y = p[:, 0], p[:, 1]
    return np.abs(np.abs(y) - np.abs(x)) / math.sqrt(2.0)


def apex_deviation(system: PatchSystem, radius: float, rotation: float = 0.0,
                   per_segment: int = 32) -> float:
    """Largest distance to the exact wedge along the interpolated curves,
    within ``radius`` of the origin.

    Sampled on the curves rather than at the nodes: the nodes slide along the
    contour, so a node-based maximum would miss the tip.
    """
    y = np.vstack([sample(c, per_segment)[0] for c in system.contours])
    near = np.hypot(y[:, 0], y[:, 1]) <= radius
    return float(wedge_offset(y[near], rotation).max())


def backward_evolve(system: PatchSystem, steps: int, dt_mag: float,
                    redistribution: RedistributionParams | None = RedistributionParams(),
                    callback=None) -> PatchSystem:
    """``steps`` RK4 steps of size ``-dt_mag`` in tau, redistributing after each."""
    if system.mode != "selfsimilar":
        raise ValueError("backward evolution runs in self-similar variables")
    if dt_mag <= 0.0:
        raise ValueError("dt_mag must be positive")
    for k in range(steps):
        system = rk4_step(system, -dt_mag)
        if redistribution is not None:
            system = redistribute_system(system, redistribution)
        if callback is not None:
            callback(k + 1, system)
    return system
