"""Collapse diagnostics: per-step records, power-law and exponential fits,
and the slope test that separates collapsing from non-collapsing data."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .geometry import contour_area, golden_min, max_curvature, min_distance



@dataclass(frozen=True)
class DiagnosticsRecord:
    step: int
    t: float
    tau: float
    min_distance: float
    max_curvature: float
    areas: tuple[float, ...]
    node_counts: tuple[int, ...]
    dt: float
    status: str = "ok"


def record(system, step: int, dt: float, status: str = "ok") -> DiagnosticsRecord:
    contours = system.contours
    dist = min_distance(contours[0], contours[1])[0] if len(contours) >= 2 else math.nan
    physical = system.mode == "physical"
    return DiagnosticsRecord(
        step=step,
        t=system.time if physical else math.nan,
        tau=math.nan if physical else system.time,
        min_distance=dist,
        max_curvature=max_curvature(contours),
        areas=tuple(contour_area(c)[0] for c in contours),
        node_counts=tuple(len(c) for c in contours),
        dt=dt,
        status=status,
    )


@dataclass(frozen=True)
class FitResult:
    """estimate: t* or slope; amplitude: C or intercept (natural-log scale
    for the exponential fit)."""

    estimate: float
    amplitude: float
    residual: float
    window: tuple[float, float]
    count: int


class Collapse(str, Enum):
    NON_COLLAPSING = "non_collapsing"
    COLLAPSING = "collapsing"
    MARGINAL = "marginal"


def _window(x, y, window):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if window is None:
        mask = np.ones(x.shape, bool)
    else:
        lo, hi = window
        mask = (x >= lo) & (x <= hi)
    return x[mask], y[mask]


def fit_collapse_time(t, dist, alpha: float, window=None) -> FitResult:
    """Fit ``D(t) = C (t* - t)**(1/alpha)`` for t* and C.

    Golden-section search over t* in ``(t_last, t_last + 10 (t_last - t_first)]``,
    refined by Gauss-Newton; for each candidate, log C is the mean of ``log D - log(t* - t)/alpha``.
    Raises if the window is not decreasing or the optimum sits on the bracket.
    """
    t, dist = _window(t, dist, window)
    if t.size < 4:
        raise ValueError("need at least 4 points in the window")
    order = np.argsort(t)
    t, dist = t[order], dist[order]
    if np.any(np.diff(dist) >= 0.0) or np.any(dist <= 0.0):
        raise ValueError("distance must be positive and strictly decreasing over the window")
    logd = np.log(dist)
    k = 1.0 / alpha
    # search in s = t* - t_last so that shifting t shifts t* exactly
    rel = t - t[-1]

    def resid(s):
        r = logd - k * np.log(s - rel)
        return r - r.mean()

    def ssr(s):
        r = resid(s)
        return float(r @ r)

    span = t[-1] - t[0]
    lo, hi = 1e-12 * max(1.0, span), 10.0 * span
    s_star = golden_min(ssr, lo, hi, 1e-15 * span)[0]
    edge = 1e-9 * span
    if s_star - lo < edge or hi - s_star < edge:
        raise ValueError(f"collapse-time search hit the bracket boundary at t*={t[-1] + s_star}")
    # comparisons alone resolve a flat minimum only to ~sqrt(eps); finish with
    # Gauss-Newton on the exact derivative dr/ds
    for _ in range(20):
        j = -k / (s_star - rel)
        j -= j.mean()
        step = -float(j @ resid(s_star)) / float(j @ j)
        s_star = min(max(s_star + step, lo), hi)
        if abs(step) <= 1e-15 * s_star:
            break
    r = resid(s_star)
    logc = float(np.mean(logd - k * np.log(s_star - rel)))
    return FitResult(t[-1] + s_star, math.exp(logc), math.sqrt(float(r @ r)), (float(t[0]), float(t[-1])),
                     int(t.size))


def fit_log_slope(tau, dist, window=None) -> FitResult:
    """Least-squares line through ``(tau, log D)``."""
    tau, dist = _window(tau, dist, window)
    if tau.size < 3:
        raise ValueError("need at least 3 points in the window")
    if np.any(dist <= 0.0):
        raise ValueError("distance must be positive")
    y = np.log(dist)
    (m, b), res, *_ = np.polyfit(tau, y, 1, full=True)
    resid = math.sqrt(float(res[0])) if res.size else 0.0
    return FitResult(float(m), float(b), resid, (float(tau.min()), float(tau.max())), int(tau.size))


def classify_collapse(m: float, delta: float, tolerance: float = 0.02) -> Collapse:
    """m > delta certifies non-collapse; a band of +-tolerance is marginal."""
    if not (math.isfinite(m) and math.isfinite(delta)):
        raise ValueError("m and delta must be finite")
    if m > delta + tolerance:
        return Collapse.NON_COLLAPSING
    if m < delta - tolerance:
        return Collapse.COLLAPSING
    return Collapse.MARGINAL


def curvature_scaling_check(t, kappa, t_star: float, alpha: float, window=None) -> FitResult:
    """Exponent of ``kappa_max ~ C (t* - t)**e``; a self-similar collapse gives
    ``e = -1/alpha``. ``alpha`` is accepted for reporting symmetry only."""
    t, kappa = _window(t, kappa, window)
    if np.any(t >= t_star):
        raise ValueError("window must precede t_star")
    if t.size < 3 or np.any(kappa <= 0.0):
        raise ValueError("need at least 3 positive curvature samples")
    x = np.log(t_star - t)
    (e, b), res, *_ = np.polyfit(x, np.log(kappa), 1, full=True)
    resid = math.sqrt(float(res[0])) if res.size else 0.0
    return FitResult(float(e), math.exp(b), resid, (float(t.min()), float(t.max())), int(t.size))


@dataclass(frozen=True)
class OscillationSummary:
    slope: float
    extrema: int
    amplitude_mean: float
    amplitude_max: float
    residual_std: float


def oscillation_report(tau, dist) -> OscillationSummary:
    """Count the local extrema of log D after removing its linear trend.

    Amplitudes are half the jumps between consecutive extrema.
    """
    tau = np.asarray(tau, dtype=float)
    dist = np.asarray(dist, dtype=float)
    if tau.size < 10:
        raise ValueError("need at least 10 samples")
    fit = fit_log_slope(tau, dist)
    resid = np.log(dist) - (fit.estimate * tau + fit.amplitude)
    diff = np.diff(resid)
    # roundoff-level wiggles are not oscillations
    diff[np.abs(diff) <= 1e-10 * max(1.0, float(np.ptp(np.log(dist))))] = 0.0
    sign = np.sign(diff)
    sign = sign[sign != 0]
    turns = np.flatnonzero(sign[1:] != sign[:-1])
    # indices of the extrema in resid: sign change at diff k -> point k+1
    nz = np.flatnonzero(np.sign(diff) != 0)
    ext_idx = nz[turns] + 1
    vals = resid[ext_idx]
    amps = 0.5 * np.abs(np.diff(vals)) if vals.size > 1 else np.zeros(0)
    return OscillationSummary(
        slope=fit.estimate,
        extrema=int(ext_idx.size),
        amplitude_mean=float(amps.mean()) if amps.size else 0.0,
        amplitude_max=float(amps.max()) if amps.size else 0.0,
        residual_std=float(resid.std()),
    )
