"""Contour-integral velocity of the alpha-patch equation.

The velocity of a point ``z`` is

    f(z) = sum_k theta_k / (2 pi) sum_i int_0^1 x_i'(p) / |z - x_i(p)|**alpha dp,

and each segment integral splits into ``I1 (t_i + mu_i n_i) + I2 n_i`` with

    I1 = int_0^1 dp / |x_i(p) - z|**alpha,
    I2 = int_0^1 (2 beta_i p + 3 gamma_i p**2) / |x_i(p) - z|**alpha dp.

Depending on where ``z`` sits relative to the segment, the pair is computed
from an endpoint series (``z`` is one of the segment's nodes), a far-field
series, or adaptive Runge-Kutta quadrature.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

from . import _jit
from .geometry import SegmentGeometry, node_normals, spline
from .series import binomial_compose

THREADS_ENV = "ALPHA_PATCH_THREADS"


class ContactError(RuntimeError):
    """A target touches a segment away from its nodes; the integrand is singular."""

    def __init__(self, message: str, targets=()):
        super().__init__(message)
        self.targets = tuple(int(t) for t in targets)


@dataclass(frozen=True)
class KernelParams:
    """Numerical settings of the velocity evaluation.

    far_threshold
        A segment is a far-field candidate when ``|x_i - z| >= far_threshold *
        d_i (1 + |mu_i|)``; it is then accepted only if the last series
        coefficient is below ``tail_tol`` relative to the sum.
    """

    far_threshold: float = 5.0
    series_order: int = 10
    near_quad_tol: float = 1e-9
    tail_tol: float = 1e-10
    min_step: float = 1e-14

    def __post_init__(self) -> None:
        if self.far_threshold <= 1.0:
            raise ValueError("far_threshold must exceed 1")
        if self.series_order < 2:
            raise ValueError("series_order must be at least 2")
        if not 0.0 < self.near_quad_tol < 1.0:
            raise ValueError("near_quad_tol must be in (0, 1)")


@dataclass(frozen=True)
class SeriesCoefficients:
    values: np.ndarray
    kind: str  # "endpoint" or "far"

    def __len__(self) -> int:
        return self.values.size


def _check_alpha(alpha: float, allow_one: bool = True) -> float:
    alpha = float(alpha)
    upper_ok = alpha <= 1.0 if allow_one else alpha < 1.0
    if not (0.0 < alpha and upper_ok):
        raise ValueError(f"alpha={alpha} outside {'(0, 1]' if allow_one else '(0, 1)'}")
    return alpha


def c_alpha(alpha: float) -> float:
    """Constant relating the scalar jump to the coefficient in the equation."""
    alpha = _check_alpha(alpha)
    return float(gamma_fn(alpha / 2.0) / (2.0 ** (1.0 - alpha) * gamma_fn((2.0 - alpha) / 2.0)))


def circle_velocity_exact(alpha: float) -> float:
    """y-velocity at (1, 0) of the unit-circle patch with theta = -1.

    Closed form of -(1/2pi) int_0^2pi cos(s) (2 sin(s/2))**-alpha ds.
    """
    alpha = _check_alpha(alpha, allow_one=False)
    a, b = (4.0 - alpha) / 2.0, -alpha / 2.0
    beta_ab = gamma_fn(a) * gamma_fn(b) / gamma_fn(a + b)
    return float(1.0 / ((1.0 - alpha) * beta_ab))


# --------------------------------------------------------------------------
# series

def _endpoint_u(seg: SegmentGeometry) -> np.ndarray:
    mu, be, ga = seg.mu, seg.beta, seg.gamma
    s = 1.0 + mu * mu
    return np.array([0.0, 2 * mu * be, be * be + 2 * mu * ga, 2 * be * ga, ga * ga]) / s


def singular_series(seg: SegmentGeometry, alpha: float, order: int = 10) -> SeriesCoefficients:
    """c_n of ``(1 + u(p))**(-alpha/2)`` for the endpoint-singular integrals."""
    alpha = _check_alpha(alpha)
    ser = binomial_compose(_endpoint_u(seg), -alpha / 2.0, order)
    return SeriesCoefficients(ser.coef, "endpoint")


def _distance_poly(seg: SegmentGeometry, base, target) -> np.ndarray:
    r = np.asarray(base, float) - np.asarray(target, float)
    out = np.empty(7)
    _jit.distance_poly(r[0], r[1], seg.t[0], seg.t[1], seg.d, seg.mu, seg.beta, seg.gamma, out)
    return out


def far_series(seg: SegmentGeometry, base, target, alpha: float, order: int = 10) -> SeriesCoefficients:
    """g_n: far-field Maclaurin coefficients integrated term by term over [0, 1].

    The squared distance is expanded exactly, cross terms included, so that
    ``I1 = d_x**-alpha * sum(g_n)``.
    """
    alpha = _check_alpha(alpha)
    poly = _distance_poly(seg, base, target)
    ser = binomial_compose(np.concatenate(([0.0], poly[1:] / poly[0])), -alpha / 2.0, order)
    n = np.arange(order + 1)
    return SeriesCoefficients(ser.coef / (n + 1.0), "far")


# --------------------------------------------------------------------------
# per-segment integrals

def segment_integral_case1(seg: SegmentGeometry, alpha: float, order: int = 10,
                           tail_tol: float = 1e-10) -> tuple[float, float]:
    """(I1, I2) for a target at the segment's first node."""
    alpha = _check_alpha(alpha, allow_one=False)
    return _jit.endpoint_integrals(seg.d, seg.mu, seg.beta, seg.gamma, alpha, order, tail_tol, True)


def segment_integral_case2(seg: SegmentGeometry, alpha: float, order: int = 10,
                           tail_tol: float = 1e-10) -> tuple[float, float]:
    """(I1, I2) for a target at the segment's second node.

    Computed in the reversed parameter ``1 - p`` and mapped back, so the result
    combines with ``t + mu n`` and ``n`` exactly like the other cases.
    """
    alpha = _check_alpha(alpha, allow_one=False)
    mur, ber, gar = _jit.reversed_coefficients(seg.mu, seg.beta, seg.gamma)
    i1, i2 = _jit.endpoint_integrals(seg.d, mur, ber, gar, alpha, order, tail_tol, True)
    return i1, (mur - seg.mu) * i1 + i2


def segment_integral_far(seg: SegmentGeometry, base, target, alpha: float,
                         params: KernelParams = KernelParams(),
                         require_converged: bool = False) -> tuple[float, float]:
    """Far-field series integrals.

    With ``require_converged`` a series that fails the tail guard raises
    ``ValueError``, which is when the velocity assembly falls back to the
    adaptive quadrature.
    """
    alpha = _check_alpha(alpha)
    dx = float(np.hypot(*(np.asarray(base, float) - np.asarray(target, float))))
    if dx < params.far_threshold * seg.d * (1.0 + abs(seg.mu)):
        raise ValueError("target too close for the far-field series; use the near-field path")
    i1, i2, converged = _jit.far_integrals(_distance_poly(seg, base, target), seg.beta, seg.gamma,
                                           alpha, params.series_order, params.tail_tol)
    if require_converged and not converged:
        raise ValueError("far-field series tail above tolerance")
    return i1, i2


def segment_integral_near(seg: SegmentGeometry, base, target, alpha: float,
                          params: KernelParams = KernelParams()) -> tuple[float, float]:
    alpha = _check_alpha(alpha)
    r = np.asarray(base, float) - np.asarray(target, float)
    i1, i2, status = _jit.near_integrals(r[0], r[1], seg.t[0], seg.t[1], seg.d, seg.mu,
                                         seg.beta, seg.gamma, alpha, params.near_quad_tol,
                                         params.min_step)
    if status != _jit.OK:
        raise ContactError("adaptive quadrature step underflow: target touches the segment")
    return i1, i2


def segment_integral(seg: SegmentGeometry, base, target, alpha: float,
                     params: KernelParams = KernelParams()) -> tuple[float, float, str]:
    """(I1, I2, method) with the same case selection as the velocity assembly:
    ``"case1"``, ``"case2"``, ``"far"`` or ``"near"``."""
    base = np.asarray(base, float)
    target = np.asarray(target, float)
    tol = _jit._COINCIDE * seg.d
    if np.hypot(*(base - target)) <= tol:
        return (*segment_integral_case1(seg, alpha, params.series_order, params.tail_tol), "case1")
    if np.hypot(*(base + seg.t - target)) <= tol:
        return (*segment_integral_case2(seg, alpha, params.series_order, params.tail_tol), "case2")
    try:
        return (*segment_integral_far(seg, base, target, alpha, params, require_converged=True), "far")
    except ValueError:
        return (*segment_integral_near(seg, base, target, alpha, params), "near")


# --------------------------------------------------------------------------
# assembly

def worker_count(workers: int | None = None) -> int:
    if workers is None:
        workers = int(os.environ.get(THREADS_ENV, "1") or 1)
    return max(1, int(workers))


def _segment_table(contours):
    parts = [spline(c.nodes) for c in contours]
    cat = lambda name: np.ascontiguousarray(np.concatenate([getattr(s, name) for s in parts]))
    x = cat("x")
    t = cat("t")
    w = np.concatenate([np.full(len(s), c.strength / (2.0 * math.pi)) for s, c in zip(parts, contours)])
    return (np.ascontiguousarray(x[:, 0]), np.ascontiguousarray(x[:, 1]),
            np.ascontiguousarray(t[:, 0]), np.ascontiguousarray(t[:, 1]),
            cat("d"), cat("mu"), cat("beta"), cat("gamma"), w)


def velocity_field(contours, alpha: float, targets, params: KernelParams = KernelParams(),
                   skip_self_i1: bool = False, workers: int | None = None) -> np.ndarray:
    """Velocity f(z) at every row of ``targets`` induced by all contours.

    Targets that coincide with a node are handled by the endpoint series for
    the two adjacent segments. Raises ``ContactError`` if any target touches
    a segment elsewhere.
    """
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    zx = np.ascontiguousarray(targets[:, 0])
    zy = np.ascontiguousarray(targets[:, 1])
    table = _segment_table(contours)
    m = targets.shape[0]
    out = np.zeros((m, 2))
    status = np.zeros(m, dtype=np.int64)
    args = (*table, float(alpha), float(params.far_threshold), int(params.series_order),
            float(params.tail_tol), float(params.near_quad_tol), float(params.min_step),
            bool(skip_self_i1), out, status)
    n_work = min(worker_count(workers), m)
    bounds = np.linspace(0, m, n_work + 1).astype(int)
    if n_work == 1:
        _jit.velocity_block(zx, zy, 0, m, *args)
    else:
        with ThreadPoolExecutor(max_workers=n_work) as pool:
            futures = [pool.submit(_jit.velocity_block, zx, zy, int(lo), int(hi), *args)
                       for lo, hi in zip(bounds[:-1], bounds[1:])]
            for f in futures:
                f.result()
    bad = np.flatnonzero(status != _jit.OK)
    if bad.size:
        raise ContactError(f"{bad.size} target(s) touch a contour away from its nodes", bad)
    return out


def _all_nodes(contours) -> np.ndarray:
    return np.concatenate([c.nodes for c in contours])


def node_velocities(system, workers: int | None = None) -> np.ndarray:
    """f_j at every node of the system, stacked contour after contour."""
    _check_alpha(system.alpha, allow_one=False)
    return velocity_field(system.contours, system.alpha, _all_nodes(system.contours),
                          system.kernel, workers=workers)


def all_node_normals(contours) -> np.ndarray:
    return np.concatenate([node_normals(c.nodes) for c in contours])


def normal_velocities(system, workers: int | None = None) -> np.ndarray:
    """Velocity projected on the unit node normal, at every node.

    For alpha = 1 the tangential self-terms (I1 on the two segments meeting
    at the target) diverge and are dropped; for alpha < 1 they are finite and
    kept, so the result is exactly the projection of ``node_velocities``.
    """
    alpha = _check_alpha(system.alpha)
    v = velocity_field(system.contours, alpha, _all_nodes(system.contours), system.kernel,
                       skip_self_i1=alpha >= 1.0, workers=workers)
    nrm = all_node_normals(system.contours)
    return np.einsum("ij,ij->i", v, nrm)[:, None] * nrm


def _locate(system, target, target_location):
    if target_location is None:
        return None
    cid, j = target_location
    contour = next(c for c in system.contours if c.id == cid)
    node = contour.nodes[j % len(contour)]
    if not np.allclose(node, target, rtol=0.0, atol=1e-12 * max(1.0, float(np.abs(node).max()))):
        raise ValueError(f"target {target} is not node {j} of contour {cid}")
    return contour, j % len(contour)


def node_velocity(system, target, target_location=None) -> np.ndarray:
    """f at a single point (a node of the system, or any point off the contours)."""
    _check_alpha(system.alpha, allow_one=False)
    _locate(system, target, target_location)
    return velocity_field(system.contours, system.alpha, [target], system.kernel)[0]


def normal_velocity(system, target, target_location) -> np.ndarray:
    alpha = _check_alpha(system.alpha)
    contour, j = _locate(system, target, target_location)
    v = velocity_field(system.contours, alpha, [target], system.kernel,
                       skip_self_i1=alpha >= 1.0)[0]
    nrm = node_normals(contour.nodes)[j]
    return float(v @ nrm) * nrm
