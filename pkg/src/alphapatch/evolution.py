"""Time stepping of the discrete contour system and node redistribution."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Iterator

import numpy as np

from . import diagnostics
from .geometry import Contour, curvatures, min_chord, spline
from .kernel import ContactError, KernelParams, node_velocities, normal_velocities

log = logging.getLogger(__name__)

MODES = ("physical", "selfsimilar")


@dataclass(frozen=True, eq=False)
class PatchSystem:
    """Contours plus the equation parameter.

    ``time`` is physical time t in physical mode and pseudo-time tau in
    self-similar mode, where the collapse point is fixed at the origin.
    """

    contours: tuple[Contour, ...]
    alpha: float
    mode: str = "physical"
    time: float = 0.0
    kernel: KernelParams = field(default_factory=KernelParams)

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        object.__setattr__(self, "contours", tuple(self.contours))

    @property
    def delta(self) -> float:
        return 1.0 / self.alpha

    @property
    def node_counts(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.contours)

    def state(self) -> np.ndarray:
        return np.concatenate([c.nodes for c in self.contours])

    def with_state(self, x: np.ndarray, time: float | None = None) -> "PatchSystem":
        parts = np.split(x, np.cumsum(self.node_counts)[:-1])
        contours = tuple(c.with_nodes(p) for c, p in zip(self.contours, parts))
        return replace(self, contours=contours, time=self.time if time is None else time)

    def with_contours(self, contours, time: float | None = None) -> "PatchSystem":
        return replace(self, contours=tuple(contours), time=self.time if time is None else time)


def vector_field(system: PatchSystem, workers: int | None = None) -> np.ndarray:
    """Right-hand side at every node for the system's mode."""
    if system.mode == "selfsimilar":
        from .selfsim import rescaled_velocities
        return rescaled_velocities(system, workers=workers)
    if system.alpha < 1.0:
        return node_velocities(system, workers=workers)
    return normal_velocities(system, workers=workers)


def rk4_step(system: PatchSystem, dt: float, workers: int | None = None) -> PatchSystem:
    """Classical fourth-order Runge-Kutta step; dt may be negative."""
    if dt == 0.0:
        raise ValueError("dt must be nonzero")
    x = system.state()
    k1 = vector_field(system, workers)
    k2 = vector_field(system.with_state(x + 0.5 * dt * k1), workers)
    k3 = vector_field(system.with_state(x + 0.5 * dt * k2), workers)
    k4 = vector_field(system.with_state(x + dt * k3), workers)
    x_new = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return system.with_state(x_new, system.time + dt)


def default_B(alpha: float) -> float:
    return 0.5 if alpha <= 0.8 else 0.25


def adaptive_dt(system: PatchSystem, B: float, dt_max: float | None = None) -> float:
    """``B`` times the smallest chord of any contour, optionally capped."""
    if B <= 0.0:
        raise ValueError("B must be positive")
    dt = B * min_chord(system.contours)
    return dt if dt_max is None else min(dt, dt_max)


@dataclass(frozen=True)
class RedistributionParams:
    """Curvature-weighted node density controls.

    nu sets the accuracy (smaller means more nodes), delta_min the spacing
    floor, L a length scale and a an exponent.

    With ``physical_units`` set, a self-similar system is remeshed as its
    physical image would be: L and delta_min are multiplied by exp(delta tau)
    before use. The rescaled picture grows like exp(delta tau), so with fixed
    L the node count keeps climbing; this keeps it roughly constant.
    """

    nu: float = 0.05
    delta_min: float = 1e-6
    L: float = 3.0
    a: float = 2.0 / 3.0
    physical_units: bool = False

    def __post_init__(self) -> None:
        if self.nu <= 0.0 or self.delta_min <= 0.0 or self.L <= 0.0:
            raise ValueError("nu, delta_min and L must be positive")


def node_density(contour: Contour, params: RedistributionParams) -> tuple[np.ndarray, np.ndarray]:
    """Desired node density on each segment and the segment chords."""
    nodes = contour.nodes
    kappa = curvatures(nodes)
    kbar = 0.5 * (kappa + np.roll(kappa, -1))             # per segment
    nxt = np.roll(nodes, -1, axis=0)
    d = np.linalg.norm(nxt - nodes, axis=1)
    mid = 0.5 * (nodes + nxt)
    num = np.empty(len(nodes))
    den = np.empty(len(nodes))
    chunk = max(1, 4_000_000 // len(nodes))
    wk = d * np.abs(kbar)
    for lo in range(0, len(nodes), chunk):
        diff = nodes[lo:lo + chunk, None, :] - mid[None, :, :]
        inv_h2 = 1.0 / np.einsum("ijk,ijk->ij", diff, diff)
        num[lo:lo + chunk] = inv_h2 @ wk
        den[lo:lo + chunk] = inv_h2 @ d
    k_nonlocal = num / den
    k_tilde = (k_nonlocal * params.L) ** params.a / (params.nu * params.L) + math.sqrt(2.0) * k_nonlocal
    k_hat = 0.5 * (k_tilde + np.roll(k_tilde, -1))
    rho = k_hat / (1.0 + params.delta_min * k_hat / math.sqrt(2.0))
    return rho, d


def redistribute(contour: Contour, params: RedistributionParams) -> Contour:
    """Place a new set of nodes along the current interpolant.

    The fractional node count on segment i is ``rho_i d_i``; the total ``q``
    fixes the new count ``round(q) + 2``. Node 0 stays where it is.
    """
    rho, d = node_density(contour, params)
    sigma = rho * d
    q = float(sigma.sum())
    if not q >= 2.0:
        raise ValueError(f"contour {contour.id} too short or flat to resolve (q={q:.3g} < 2)")
    n_new = int(round(q)) + 2
    sigma = sigma * (n_new / q)
    cum = np.concatenate(([0.0], np.cumsum(sigma)))
    target = np.arange(1, n_new, dtype=float)
    idx = np.searchsorted(cum, target, side="right") - 1
    idx = np.clip(idx, 0, len(sigma) - 1)
    p = np.clip((target - cum[idx]) / sigma[idx], 0.0, 1.0)
    sp = spline(contour.nodes)
    new = np.empty((n_new, 2))
    new[0] = contour.nodes[0]
    new[1:] = sp.evaluate(idx, p)
    return contour.with_nodes(new)


def effective_params(system: PatchSystem, params: RedistributionParams) -> RedistributionParams:
    """Parameters in the system's own lengths (see ``physical_units``)."""
    if not params.physical_units or system.mode != "selfsimilar":
        return params
    scale = math.exp(system.delta * system.time)
    return replace(params, L=params.L * scale, delta_min=params.delta_min * scale)


def redistribute_system(system: PatchSystem, params: RedistributionParams) -> PatchSystem:
    params = effective_params(system, params)
    return system.with_contours([redistribute(c, params) for c in system.contours])


@dataclass(frozen=True)
class StopConditions:
    t_end: float | None = None
    max_steps: int | None = None
    min_distance: float | None = None
    max_nodes: int | None = None


def simulate(system: PatchSystem, *, B: float | None = None,
             redistribution: RedistributionParams | None = RedistributionParams(),
             stop: StopConditions = StopConditions(), dt_max: float | None = None,
             backward: bool = False, workers: int | None = None,
             step0: int = 0) -> Iterator[tuple[PatchSystem, diagnostics.DiagnosticsRecord]]:
    """Yield ``(system, record)`` for the initial state and after every step.

    ``stop.t_end`` applies to the system's own time variable (t or tau). A
    contact between contours ends the run with a record whose status is
    ``"contact"``; the system yielded with it is the last good state.
    """
    if B is None:
        B = default_B(system.alpha)
    if stop.t_end is None and stop.max_steps is None:
        raise ValueError("need t_end or max_steps")
    sign = -1.0 if backward else 1.0
    step = step0
    yield system, diagnostics.record(system, step, 0.0)
    while True:
        if stop.max_steps is not None and step - step0 >= stop.max_steps:
            return
        if stop.t_end is not None and sign * (stop.t_end - system.time) <= 0.0:
            return
        dt = adaptive_dt(system, B, dt_max)
        if stop.t_end is not None:
            dt = min(dt, abs(stop.t_end - system.time))
        try:
            nxt = rk4_step(system, sign * dt, workers)
            if redistribution is not None:
                nxt = redistribute_system(nxt, redistribution)
            rec = diagnostics.record(nxt, step + 1, sign * dt)
        except (ContactError, ValueError) as exc:
            log.warning("step %d aborted: %s", step + 1, exc)
            yield system, replace(diagnostics.record(system, step, sign * dt), status="contact")
            return
        system = nxt
        step += 1
        status = "ok"
        if stop.min_distance is not None and rec.min_distance <= stop.min_distance:
            status = "min_distance"
        if stop.max_nodes is not None and sum(rec.node_counts) > stop.max_nodes:
            status = "max_nodes"
        yield system, replace(rec, status=status)
        if status != "ok":
            return
