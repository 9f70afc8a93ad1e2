"""Self-checks of the velocity evaluation against independent references.

``circle_check`` compares the discrete velocity on the unit circle with the
closed form. ``cross_method_check`` compares the far-field series with the
adaptive quadrature where both apply, and ``endpoint_check`` compares the
endpoint series with scipy's algebraic-weight quadrature.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate

from .geometry import SegmentGeometry, circle
from .kernel import (KernelParams, circle_velocity_exact, segment_integral_case1,
                     segment_integral, segment_integral_case2, segment_integral_near,
                     velocity_field)

PAPER_CIRCLE_VY = -0.8400066


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    reference: float
    error: float
    tolerance: float
    detail: str = ""

    def as_dict(self) -> dict:
        return asdict(self)


def circle_velocity(n: int = 200, alpha: float = 0.7, kernel: KernelParams = KernelParams()) -> np.ndarray:
    """Discrete velocity at (1, 0), a node of the unit circle with theta = -1."""
    return velocity_field([circle(n)], alpha, [[1.0, 0.0]], kernel)[0]


def circle_check(n: int = 200, alpha: float = 0.7, tol: float = 1e-3,
                 reference: float | None = None) -> list[CheckResult]:
    v = circle_velocity(n, alpha)
    ref = circle_velocity_exact(alpha) if reference is None else reference
    return [
        CheckResult("circle_vy", abs(v[1] - ref) <= tol, float(v[1]), ref, abs(v[1] - ref), tol,
                    f"n={n} alpha={alpha}"),
        CheckResult("circle_vx", abs(v[0]) <= tol, float(v[0]), 0.0, abs(v[0]), tol,
                    f"n={n} alpha={alpha}"),
    ]


def random_segment(rng: np.random.Generator, kappa_max: float = 2.0,
                   d_range=(0.05, 0.3)) -> SegmentGeometry:
    """A spline segment with random chord, orientation and end curvatures."""
    d = rng.uniform(*d_range)
    ang = rng.uniform(0.0, 2.0 * math.pi)
    t = d * np.array([math.cos(ang), math.sin(ang)])
    k0, k1 = rng.uniform(-kappa_max, kappa_max, 2)
    return SegmentGeometry(t=t, n=np.array([-t[1], t[0]]), d=d, mu=-d * (2 * k0 + k1) / 6.0,
                           beta=0.5 * d * k0, gamma=d * (k1 - k0) / 6.0, kappa_j=k0, kappa_j1=k1,
                           base=rng.uniform(-1.0, 1.0, 2))


def _rel(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def straddling_pair(rng: np.random.Generator, params: KernelParams = KernelParams(),
                    spread=(0.8, 2.5)):
    """Random segment and a target at ``spread`` times the far threshold from its first node."""
    seg = random_segment(rng)
    scale = params.far_threshold * seg.d * (1.0 + abs(seg.mu))
    ang = rng.uniform(0.0, 2.0 * math.pi)
    target = seg.base + rng.uniform(*spread) * scale * np.array([math.cos(ang), math.sin(ang)])
    return seg, target


def cross_method_check(count: int = 100, alpha: float = 0.7, seed: int = 1, tol: float = 1e-7,
                       params: KernelParams = KernelParams()) -> CheckResult:
    """Dispatched segment integrals vs the adaptive quadrature on targets on
    both sides of the far threshold.

    Pairs dispatched to the far series measure the series against the
    quadrature; the detail line reports how many there were.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    methods = {"far": 0, "near": 0}
    for _ in range(count):
        seg, target = straddling_pair(rng, params)
        i1, i2, method = segment_integral(seg, seg.base, target, alpha, params)
        methods[method] += 1
        if method == "far":
            worst = max(worst, _rel((i1, i2), segment_integral_near(seg, seg.base, target, alpha, params)))
    return CheckResult("far_vs_near", worst <= tol and methods["far"] > 0, worst, 0.0, worst, tol,
                       f"{count} pairs, alpha={alpha}, far={methods['far']}, near={methods['near']}")


def endpoint_reference(seg: SegmentGeometry, alpha: float, end: int = 0) -> tuple[float, float]:
    """(I1, I2) for a target at node ``end`` (0 or 1) of the segment, by
    QUADPACK with the algebraic weight ``p**-alpha`` or ``(1 - p)**-alpha``."""
    mu, be, ga, d = seg.mu, seg.beta, seg.gamma, seg.d
    if end == 0:
        def g(p):
            q = mu + p * (be + p * ga)                          # eta(p) / p
            return (d * d * (1.0 + q * q)) ** (-0.5 * alpha)
        wvar = (-alpha, 0.0)
    else:
        def g(p):
            q = mu + be * (p + 1.0) + ga * (p * p + p + 1.0)    # (eta(p) - eta(1)) / (p - 1)
            return (d * d * (1.0 + q * q)) ** (-0.5 * alpha)
        wvar = (0.0, -alpha)
    opts = dict(weight="alg", wvar=wvar, epsabs=0.0, epsrel=1e-13, limit=200)
    i1 = integrate.quad(g, 0.0, 1.0, **opts)[0]
    i2 = integrate.quad(lambda p: g(p) * p * (2 * be + 3 * ga * p), 0.0, 1.0, **opts)[0]
    return i1, i2


def endpoint_check(count: int = 50, alphas=(0.5, 0.7, 0.9), seed: int = 2,
                   tol: float = 1e-7) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for alpha in alphas:
        for _ in range(count):
            seg = random_segment(rng)
            worst = max(worst, _rel(segment_integral_case1(seg, alpha), endpoint_reference(seg, alpha, 0)))
            worst = max(worst, _rel(segment_integral_case2(seg, alpha), endpoint_reference(seg, alpha, 1)))
    return CheckResult("endpoint_series", worst <= tol, worst, 0.0, worst, tol,
                       f"{count} segments per alpha, alphas={list(alphas)}")


def run_all(n: int = 200, alpha: float = 0.7) -> list[CheckResult]:
    return [*circle_check(n, alpha, reference=PAPER_CIRCLE_VY),
            cross_method_check(alpha=alpha),
            endpoint_check()]
