"""Discrete closed contours and their local cubic interpolant.

Each contour is a cyclic list of nodes. Between nodes ``x_j`` and ``x_{j+1}``
the curve is

    x_j(p) = x_j + p t_j + eta_j(p) n_j,   0 <= p <= 1,

with ``t_j = x_{j+1} - x_j``, ``n_j = (-b_j, a_j)`` and the cubic deflection
``eta_j(p) = mu_j p + beta_j p**2 + gamma_j p**3`` built from three-point
curvatures at both ends of the segment.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy.spatial import cKDTree

FloatArray = NDArray[np.float64]

# 4-point Gauss-Legendre on [0, 1]; exact for the degree-5 area integrand
_GL4_X, _GL4_W = np.polynomial.legendre.leggauss(4)
_GL4_X = 0.5 * (_GL4_X + 1.0)
_GL4_W = 0.5 * _GL4_W

_GOLDEN = 0.5 * (np.sqrt(5.0) - 1.0)


@dataclass(frozen=True, eq=False)
class Contour:
    """Closed, oriented node polyline carrying a constant strength."""

    nodes: FloatArray
    strength: float = -1.0
    id: int = 0

    def __post_init__(self) -> None:
        nodes = np.ascontiguousarray(self.nodes, dtype=np.float64)
        if nodes.ndim != 2 or nodes.shape[1] != 2:
            raise ValueError("nodes must have shape (N, 2)")
        if nodes.shape[0] < 4:
            raise ValueError(f"a contour needs at least 4 nodes, got {nodes.shape[0]}")
        if not np.isfinite(nodes).all():
            raise ValueError("nodes contain non-finite values")
        chords = np.linalg.norm(np.roll(nodes, -1, axis=0) - nodes, axis=1)
        if np.any(chords == 0.0):
            raise ValueError("consecutive nodes must be distinct")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "strength", float(self.strength))

    def __len__(self) -> int:
        return self.nodes.shape[0]

    def with_nodes(self, nodes: FloatArray) -> "Contour":
        return Contour(nodes, self.strength, self.id)

    def reversed(self) -> "Contour":
        return self.with_nodes(self.nodes[::-1].copy())

    def translated(self, shift) -> "Contour":
        return self.with_nodes(self.nodes + np.asarray(shift, dtype=float))

    def rotated(self, angle: float, about=(0.0, 0.0)) -> "Contour":
        c, s = np.cos(angle), np.sin(angle)
        rot = np.array([[c, -s], [s, c]])
        about = np.asarray(about, dtype=float)
        return self.with_nodes((self.nodes - about) @ rot.T + about)


@dataclass(frozen=True)
class SegmentGeometry:
    """Interpolation data of one segment (see the module docstring)."""

    t: FloatArray
    n: FloatArray
    d: float
    mu: float
    beta: float
    gamma: float
    kappa_j: float = 0.0
    kappa_j1: float = 0.0
    base: FloatArray = field(default_factory=lambda: np.zeros(2))

    def eta(self, p):
        return p * (self.mu + p * (self.beta + p * self.gamma))

    def reversed(self) -> "SegmentGeometry":
        """The same curve traversed from ``x_{j+1}`` back to ``x_j``."""
        mu_r = self.mu + 2.0 * self.beta + 3.0 * self.gamma
        return SegmentGeometry(
            t=-self.t,
            n=-self.n,
            d=self.d,
            mu=mu_r,
            beta=-self.beta - 3.0 * self.gamma,
            gamma=self.gamma,
            kappa_j=self.kappa_j1,
            kappa_j1=self.kappa_j,
            base=self.base + self.t,
        )


def local_curvature(x_prev, x, x_next) -> float:
    """Signed curvature of the circle through three points.

    Positive when the points turn counterclockwise. Collinear points give 0.
    """
    t0 = np.asarray(x, dtype=float) - np.asarray(x_prev, dtype=float)
    t1 = np.asarray(x_next, dtype=float) - np.asarray(x, dtype=float)
    cross = t0[0] * t1[1] - t0[1] * t1[0]
    if cross == 0.0:
        return 0.0
    d0sq = t0 @ t0
    d1sq = t1 @ t1
    return float(2.0 * cross / np.linalg.norm(d0sq * t1 + d1sq * t0))


def curvatures(nodes: FloatArray) -> FloatArray:
    """Three-point curvature at every node of a closed polyline."""
    t = np.roll(nodes, -1, axis=0) - nodes          # t_j
    t_prev = np.roll(t, 1, axis=0)                  # t_{j-1}
    cross = t_prev[:, 0] * t[:, 1] - t_prev[:, 1] * t[:, 0]
    dsq = np.einsum("ij,ij->i", t, t)
    dsq_prev = np.roll(dsq, 1)
    denom = np.linalg.norm(dsq_prev[:, None] * t + dsq[:, None] * t_prev, axis=1)
    out = np.zeros(len(nodes))
    nz = cross != 0.0
    out[nz] = 2.0 * cross[nz] / denom[nz]
    return out


@dataclass(frozen=True)
class SplineArrays:
    """Per-segment interpolation arrays for a whole contour (length N)."""

    x: FloatArray
    t: FloatArray
    n: FloatArray
    d: FloatArray
    mu: FloatArray
    beta: FloatArray
    gamma: FloatArray
    kappa: FloatArray

    def __len__(self) -> int:
        return self.x.shape[0]

    def evaluate(self, idx, p) -> FloatArray:
        idx = np.asarray(idx)
        p = np.asarray(p, dtype=float)
        eta = p * (self.mu[idx] + p * (self.beta[idx] + p * self.gamma[idx]))
        return self.x[idx] + p[..., None] * self.t[idx] + eta[..., None] * self.n[idx]

    def derivative(self, idx, p) -> FloatArray:
        idx = np.asarray(idx)
        p = np.asarray(p, dtype=float)
        deta = self.mu[idx] + p * (2.0 * self.beta[idx] + 3.0 * p * self.gamma[idx])
        return self.t[idx] + deta[..., None] * self.n[idx]


def spline(nodes: FloatArray) -> SplineArrays:
    """Cubic interpolation coefficients of every segment of a closed polyline."""
    nodes = np.asarray(nodes, dtype=np.float64)
    kappa = curvatures(nodes)
    kappa_next = np.roll(kappa, -1)
    t = np.roll(nodes, -1, axis=0) - nodes
    n = np.column_stack((-t[:, 1], t[:, 0]))
    d = np.hypot(t[:, 0], t[:, 1])
    mu = -d * (2.0 * kappa + kappa_next) / 6.0
    beta = 0.5 * d * kappa
    gamma = d * (kappa_next - kappa) / 6.0
    return SplineArrays(nodes, t, n, d, mu, beta, gamma, kappa)


def segment_geometry(contour: Contour, j: int) -> SegmentGeometry:
    nodes = contour.nodes
    n_nodes = len(nodes)
    j = j % n_nodes
    k0 = local_curvature(nodes[j - 1], nodes[j], nodes[(j + 1) % n_nodes])
    k1 = local_curvature(nodes[j], nodes[(j + 1) % n_nodes], nodes[(j + 2) % n_nodes])
    t = nodes[(j + 1) % n_nodes] - nodes[j]
    d = float(np.hypot(*t))
    return SegmentGeometry(
        t=t,
        n=np.array([-t[1], t[0]]),
        d=d,
        mu=-d * (2.0 * k0 + k1) / 6.0,
        beta=0.5 * d * k0,
        gamma=d * (k1 - k0) / 6.0,
        kappa_j=k0,
        kappa_j1=k1,
        base=nodes[j].copy(),
    )


def eval_segment(seg: SegmentGeometry, base, p: float) -> FloatArray:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    return np.asarray(base, dtype=float) + p * seg.t + seg.eta(p) * seg.n


def signed_area(contour: Contour) -> float:
    """Signed area enclosed by the interpolated curve (positive if CCW)."""
    sp = spline(contour.nodes)
    n_seg = len(sp)
    idx = np.repeat(np.arange(n_seg), 4)
    p = np.tile(_GL4_X, n_seg)
    pos = sp.evaluate(idx, p)
    vel = sp.derivative(idx, p)
    integrand = pos[:, 0] * vel[:, 1] - pos[:, 1] * vel[:, 0]
    return 0.5 * float(np.dot(np.tile(_GL4_W, n_seg), integrand))


def contour_area(contour: Contour) -> tuple[float, int]:
    """Enclosed area and orientation sign (+1 counterclockwise, -1 clockwise)."""
    a = signed_area(contour)
    return abs(a), (1 if a >= 0.0 else -1)


def sample(contour: Contour, per_segment: int = 8) -> tuple[FloatArray, FloatArray, FloatArray]:
    """Points on the interpolated curve, with their segment index and parameter."""
    sp = spline(contour.nodes)
    p = np.arange(per_segment) / per_segment
    idx = np.repeat(np.arange(len(sp)), per_segment)
    pp = np.tile(p, len(sp))
    return sp.evaluate(idx, pp), idx, pp


def golden_min(f, lo: float, hi: float, tol: float) -> tuple[float, float]:
    """Minimum of a unimodal ``f`` on [lo, hi] by golden-section search.

    Returns ``(x, f(x))``. Unlike scipy's golden it never evaluates outside
    [lo, hi], which matters where f is undefined beyond the interval.
    """
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


class _CurveParam:
    """Continuous parameter s on a closed spline: segment floor(s), p = frac(s)."""

    def __init__(self, sp: SplineArrays):
        self.sp = sp
        self.n = len(sp)

    def __call__(self, s: float) -> FloatArray:
        i = int(np.floor(s))
        p = s - i
        i %= self.n
        return self.sp.evaluate(i, p)


def min_distance(a: Contour, b: Contour, per_segment: int = 8,
                 rtol: float = 1e-10) -> tuple[float, FloatArray, FloatArray]:
    """Shortest distance between two interpolated contours and its witnesses.

    Coarse nearest-neighbour search over ``per_segment`` samples per segment,
    then alternating golden-section refinement of the two curve parameters
    around the best pair of samples.
    """
    pts_a, idx_a, p_a = sample(a, per_segment)
    pts_b, idx_b, p_b = sample(b, per_segment)
    dist, nearest = cKDTree(pts_b).query(pts_a)
    k = int(np.argmin(dist))
    best = float(dist[k])
    s_a = idx_a[k] + p_a[k]
    s_b = idx_b[nearest[k]] + p_b[nearest[k]]

    ca = _CurveParam(spline(a.nodes))
    cb = _CurveParam(spline(b.nodes))
    # the true minimum lies within one sample spacing of the best sample pair
    w = 1.0 / per_segment
    lo_a, hi_a = s_a - w, s_a + w
    lo_b, hi_b = s_b - w, s_b + w
    xtol = 1e-13
    for _ in range(200):
        s_a, _da = golden_min(lambda s: float(np.hypot(*(ca(s) - cb(s_b)))), lo_a, hi_a, xtol)
        s_b, db = golden_min(lambda s: float(np.hypot(*(ca(s_a) - cb(s)))), lo_b, hi_b, xtol)
        if abs(best - db) <= rtol * max(db, 1e-300):
            best = db
            break
        best = db
    pa, pb = ca(s_a), cb(s_b)
    return float(np.hypot(*(pa - pb))), pa, pb


def max_curvature(contours) -> float:
    return float(max(np.max(np.abs(curvatures(c.nodes))) for c in contours))


def min_chord(contours) -> float:
    return float(min(np.min(np.linalg.norm(np.roll(c.nodes, -1, axis=0) - c.nodes, axis=1))
                     for c in contours))


def distance_to_curve(points, contour: Contour, per_segment: int = 8) -> FloatArray:
    """Distance from each point to the interpolated contour.

    Nearest sample first, then a vectorised golden-section search of the
    curve parameter within one sample spacing on either side.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    sp = spline(contour.nodes)
    n_seg = len(sp)
    pts, idx, pp = sample(contour, per_segment)
    k = cKDTree(pts).query(points)[1]
    s0 = idx[k] + pp[k]
    w = 1.0 / per_segment

    def dist(s):
        i = np.floor(s).astype(int)
        return np.linalg.norm(sp.evaluate(i % n_seg, s - i) - points, axis=1)

    a, b = s0 - w, s0 + w
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = dist(c), dist(d)
    for _ in range(60):
        left = fc < fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        c_new = np.where(left, b - _GOLDEN * (b - a), d)
        d_new = np.where(left, c, a + _GOLDEN * (b - a))
        f_keep = np.where(left, fc, fd)
        c, d = c_new, d_new
        f_c_new = np.where(left, dist(c), f_keep)
        f_d_new = np.where(left, f_keep, dist(d))
        fc, fd = f_c_new, f_d_new
    return np.minimum(fc, fd)


def hausdorff(a: Contour, b: Contour, per_segment: int = 8) -> float:
    """Symmetric Hausdorff distance between two interpolated contours,
    measured from samples of each curve to the other curve."""
    d_ab = distance_to_curve(sample(a, per_segment)[0], b).max()
    d_ba = distance_to_curve(sample(b, per_segment)[0], a).max()
    return float(max(d_ab, d_ba))


def node_normals(nodes: FloatArray) -> FloatArray:
    """Unit normal at each node, perpendicular to the bisector of the two
    one-sided spline tangents; points to the left of the traversal."""
    sp = spline(nodes)
    right = sp.derivative(np.arange(len(sp)), np.zeros(len(sp)))
    left = np.roll(sp.derivative(np.arange(len(sp)), np.ones(len(sp))), 1, axis=0)
    tang = (right / np.linalg.norm(right, axis=1)[:, None]
            + left / np.linalg.norm(left, axis=1)[:, None])
    tang /= np.linalg.norm(tang, axis=1)[:, None]
    return np.column_stack((-tang[:, 1], tang[:, 0]))


def circle(n: int, radius: float = 1.0, center=(0.0, 0.0), strength: float = -1.0,
           id: int = 0, phase: float = 0.0) -> Contour:
    th = phase + 2.0 * np.pi * np.arange(n) / n
    pts = np.column_stack((radius * np.cos(th), radius * np.sin(th))) + np.asarray(center, float)
    return Contour(pts, strength, id)


def ellipse(n: int, a: float, b: float, center=(0.0, 0.0), strength: float = -1.0,
            id: int = 0) -> Contour:
    th = 2.0 * np.pi * np.arange(n) / n
    pts = np.column_stack((a * np.cos(th), b * np.sin(th))) + np.asarray(center, float)
    return Contour(pts, strength, id)
