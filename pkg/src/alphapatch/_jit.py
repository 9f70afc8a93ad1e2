"""Compiled inner loops of the velocity kernel.

Everything here works on plain floats and arrays so that numba can compile it
in nopython mode with the GIL released. The Python-facing API lives in
``alphapatch.kernel``.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

OK = 0
CONTACT = 1

# coincidence of a target with a segment endpoint, relative to the chord
_COINCIDE = 1e-12

# Gauss-Legendre rule on [0, 1] for the smooth remainder of the endpoint series
_GL_X, _GL_W = np.polynomial.legendre.leggauss(32)
GL_X = 0.5 * (_GL_X + 1.0)
GL_W = 0.5 * _GL_W

# Dormand-Prince 5(4)
_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1 = _B1 - 5179.0 / 57600.0
_E3 = _B3 - 7571.0 / 16695.0
_E4 = _B4 - 393.0 / 640.0
_E5 = _B5 - -92097.0 / 339200.0
_E6 = _B6 - 187.0 / 2100.0
_E7 = -1.0 / 40.0


@njit(cache=True, nogil=True)
def power_series(poly, deg, c, order, out):
    """Maclaurin coefficients of ``poly(p)**c`` with ``poly[0] == 1``."""
    out[0] = 1.0
    for n in range(1, order + 1):
        acc = 0.0
        kmax = n if n < deg else deg
        for k in range(1, kmax + 1):
            acc += ((c + 1.0) * k - n) * poly[k] * out[n - k]
        out[n] = acc / n


@njit(cache=True, nogil=True)
def endpoint_series(mu, beta, gamma, alpha, order, out):
    """Coefficients c_n of (1 + u(p))**(-alpha/2) for the endpoint expansion."""
    s = 1.0 + mu * mu
    poly = np.empty(5)
    poly[0] = 1.0
    poly[1] = 2.0 * mu * beta / s
    poly[2] = (beta * beta + 2.0 * mu * gamma) / s
    poly[3] = 2.0 * beta * gamma / s
    poly[4] = gamma * gamma / s
    power_series(poly, 4, -0.5 * alpha, order, out)
    return poly


@njit(cache=True, nogil=True)
def endpoint_integrals(d, mu, beta, gamma, alpha, order, tail_tol, want_i1):
    """Integrals from a segment's left endpoint: returns (I1, I2).

    I1 = int_0^1 dp / |p t + eta n|**alpha, I2 = int_0^1 eta''-type numerator
    (2 beta p + 3 gamma p**2) over the same denominator. When the truncated
    series has not converged, the smooth remainder ``g - S_order`` is added
    with a 32-point Gauss-Legendre rule.
    """
    c = np.empty(order + 1)
    poly = endpoint_series(mu, beta, gamma, alpha, order, c)
    pref = d ** (-alpha) * (1.0 + mu * mu) ** (-0.5 * alpha)
    s1 = 0.0
    s2 = 0.0
    norm = 0.0
    for n in range(order + 1):
        if want_i1:
            s1 += c[n] / (n - alpha + 1.0)
        s2 += c[n] * (2.0 * beta / (n - alpha + 2.0) + 3.0 * gamma / (n - alpha + 3.0))
        norm += abs(c[n])
    if abs(c[order]) > tail_tol * norm:
        for q in range(GL_X.shape[0]):
            p = GL_X[q]
            u = p * (poly[1] + p * (poly[2] + p * (poly[3] + p * poly[4])))
            g = (1.0 + u) ** (-0.5 * alpha)
            partial = 0.0
            for n in range(order, -1, -1):
                partial = partial * p + c[n]
            rem = (g - partial) * p ** (-alpha) * GL_W[q]
            if want_i1:
                s1 += rem
            s2 += rem * p * (2.0 * beta + 3.0 * gamma * p)
    return pref * s1, pref * s2


@njit(cache=True, nogil=True)
def reversed_coefficients(mu, beta, gamma):
    return mu + 2.0 * beta + 3.0 * gamma, -beta - 3.0 * gamma, gamma


@njit(cache=True, nogil=True)
def distance_poly(rx, ry, tx, ty, d, mu, beta, gamma, out):
    """Monomial coefficients of |r0 + p t + eta(p) n|**2, r0 = x_i - target."""
    rt = rx * tx + ry * ty
    rn = -rx * ty + ry * tx
    d2 = d * d
    out[0] = rx * rx + ry * ry
    out[1] = 2.0 * (rt + mu * rn)
    out[2] = 2.0 * beta * rn + d2 * (1.0 + mu * mu)
    out[3] = 2.0 * gamma * rn + 2.0 * d2 * mu * beta
    out[4] = d2 * (beta * beta + 2.0 * mu * gamma)
    out[5] = 2.0 * d2 * beta * gamma
    out[6] = d2 * gamma * gamma


@njit(cache=True, nogil=True)
def far_coefficients(dpoly, alpha, order, out):
    """Maclaurin coefficients a_n of (D2(p)/D2(0))**(-alpha/2)."""
    u = np.empty(7)
    u[0] = 1.0
    for k in range(1, 7):
        u[k] = dpoly[k] / dpoly[0]
    power_series(u, 6, -0.5 * alpha, order, out)


@njit(cache=True, nogil=True)
def far_integrals(dpoly, beta, gamma, alpha, order, tail_tol):
    """Series integrals for a distant target: returns (I1, I2, converged)."""
    a = np.empty(order + 1)
    far_coefficients(dpoly, alpha, order, a)
    s1 = 0.0
    s2 = 0.0
    norm = 0.0
    for n in range(order + 1):
        g = a[n] / (n + 1.0)
        s1 += g
        norm += abs(g)
        s2 += a[n] * (2.0 * beta / (n + 2.0) + 3.0 * gamma / (n + 3.0))
    converged = abs(a[order] / (order + 1.0)) <= tail_tol * norm
    scale = dpoly[0] ** (-0.5 * alpha)
    return scale * s1, scale * s2, converged


@njit(cache=True, nogil=True)
def _horner6(c, p):
    return c[0] + p * (c[1] + p * (c[2] + p * (c[3] + p * (c[4] + p * (c[5] + p * c[6])))))


@njit(cache=True, nogil=True)
def _w(c, beta, gamma, alpha, p):
    # nested evaluation of the expanded polynomial keeps cancellation benign
    d2 = _horner6(c, p)
    if d2 <= 0.0:
        return math.inf, math.inf
    w1 = d2 ** (-0.5 * alpha)
    return w1, w1 * p * (2.0 * beta + 3.0 * gamma * p)


@njit(cache=True, nogil=True)
def dp_quadrature(c, beta, gamma, alpha, p0, p1, h0, rtol, hmin):
    """Integrate dY/dp = w(p), Y(p0) = 0 up to p1 with Dormand-Prince 5(4).

    Returns (Y1, Y2, status, n_steps); status CONTACT if the step size falls
    below ``hmin`` (the integrand is effectively singular).
    """
    direction = 1.0 if p1 >= p0 else -1.0
    span = abs(p1 - p0)
    if span == 0.0:
        return 0.0, 0.0, OK, 0
    h = min(abs(h0), span)
    p = p0
    y1 = 0.0
    y2 = 0.0
    err_prev = 1e-4
    k11, k12 = _w(c, beta, gamma, alpha, p)
    steps = 0
    while direction * (p1 - p) > 0.0:
        remaining = abs(p1 - p)
        if h > remaining:
            h = remaining
        hs = direction * h
        k21, k22 = _w(c, beta, gamma, alpha, p + _C2 * hs)
        k31, k32 = _w(c, beta, gamma, alpha, p + _C3 * hs)
        k41, k42 = _w(c, beta, gamma, alpha, p + _C4 * hs)
        k51, k52 = _w(c, beta, gamma, alpha, p + _C5 * hs)
        k61, k62 = _w(c, beta, gamma, alpha, p + hs)
        k71, k72 = k61, k62
        inc1 = hs * (_B1 * k11 + _B3 * k31 + _B4 * k41 + _B5 * k51 + _B6 * k61)
        inc2 = hs * (_B1 * k12 + _B3 * k32 + _B4 * k42 + _B5 * k52 + _B6 * k62)
        e1 = hs * (_E1 * k11 + _E3 * k31 + _E4 * k41 + _E5 * k51 + _E6 * k61 + _E7 * k71)
        e2 = hs * (_E1 * k12 + _E3 * k32 + _E4 * k42 + _E5 * k52 + _E6 * k62 + _E7 * k72)
        scale = rtol * max(abs(y1), abs(y1 + inc1)) + 1e-300
        err = max(abs(e1), abs(e2)) / scale
        if not math.isfinite(err):
            err = 1e10
        if err <= 1.0:
            p = p + hs
            y1 += inc1
            y2 += inc2
            k11, k12 = k71, k72
            steps += 1
            err = max(err, 1e-10)
            fac = 0.9 * err ** (-0.7 / 5.0) * err_prev ** (0.4 / 5.0)
            fac = min(5.0, max(0.2, fac))
            err_prev = err
            h = h * fac
        else:
            h = h * max(0.2, 0.9 * err ** (-0.2))
            if h < hmin:
                return y1, y2, CONTACT, steps
    return y1, y2, OK, steps


@njit(cache=True, nogil=True)
def near_integrals(rx, ry, tx, ty, d, mu, beta, gamma, alpha, rtol, hmin):
    """Adaptive quadrature of (I1, I2) for a target close to a segment.

    The interval is split at the chord parameter closest to the target and
    integrated outward from there, starting with a step comparable to the
    target's distance so that a narrow peak cannot be stepped over.
    """
    c = np.empty(7)
    distance_poly(rx, ry, tx, ty, d, mu, beta, gamma, c)
    ps = -(rx * tx + ry * ty) / (d * d)
    if ps < 0.0:
        ps = 0.0
    elif ps > 1.0:
        ps = 1.0
    dist = math.sqrt(max(_horner6(c, ps), 0.0))
    h0 = 0.5 * dist / (d * math.sqrt(1.0 + mu * mu))
    h0 = min(0.25, max(h0, 1e-10))
    a1 = 0.0
    a2 = 0.0
    status = OK
    if ps > 0.0:
        l1, l2, st, _ = dp_quadrature(c, beta, gamma, alpha, ps, 0.0, h0, rtol, hmin)
        a1 -= l1
        a2 -= l2
        status = max(status, st)
    if ps < 1.0:
        r1, r2, st, _ = dp_quadrature(c, beta, gamma, alpha, ps, 1.0, h0, rtol, hmin)
        a1 += r1
        a2 += r2
        status = max(status, st)
    return a1, a2, status


@njit(cache=True, nogil=True)
def segment_contribution(zx, zy, sx, sy, tx, ty, d, mu, beta, gamma, alpha,
                         far_threshold, order, tail_tol, rtol, hmin, skip_self_i1):
    """Vector integral of x'(p)/|z - x(p)|**alpha over one segment.

    Returns (vx, vy, status, kind) with kind 1/2 = endpoint cases, 3 = far
    series, 4 = adaptive near-field quadrature.
    """
    nx = -ty
    ny = tx
    rx = sx - zx
    ry = sy - zy
    dx2 = rx * rx + ry * ry
    tol2 = (_COINCIDE * d) ** 2
    if dx2 <= tol2:
        i1, i2 = endpoint_integrals(d, mu, beta, gamma, alpha, order, tail_tol, not skip_self_i1)
        if skip_self_i1:
            i1 = 0.0
        ax = tx + mu * nx
        ay = ty + mu * ny
        return i1 * ax + i2 * nx, i1 * ay + i2 * ny, OK, 1
    ex = rx + tx
    ey = ry + ty
    if ex * ex + ey * ey <= tol2:
        mur, betar, gammar = reversed_coefficients(mu, beta, gamma)
        i1, i2 = endpoint_integrals(d, mur, betar, gammar, alpha, order, tail_tol, not skip_self_i1)
        if skip_self_i1:
            i1 = 0.0
        # in the reversed frame the tangent at the target is t + mu_r n
        ax = tx + mur * nx
        ay = ty + mur * ny
        return i1 * ax + i2 * nx, i1 * ay + i2 * ny, OK, 2
    c = np.empty(7)
    status = OK
    kind = 4
    converged = False
    if math.sqrt(dx2) >= far_threshold * d * (1.0 + abs(mu)):
        distance_poly(rx, ry, tx, ty, d, mu, beta, gamma, c)
        i1, i2, converged = far_integrals(c, beta, gamma, alpha, order, tail_tol)
        kind = 3
    if not converged:
        i1, i2, status = near_integrals(rx, ry, tx, ty, d, mu, beta, gamma, alpha, rtol, hmin)
        kind = 4
    ax = tx + mu * nx
    ay = ty + mu * ny
    return i1 * ax + i2 * nx, i1 * ay + i2 * ny, status, kind


@njit(cache=True, nogil=True)
def velocity_block(zx, zy, start, stop, sx, sy, stx, sty, sd, smu, sbeta, sgamma, sw,
                   alpha, far_threshold, order, tail_tol, rtol, hmin, skip_self_i1,
                   out, status):
    """Sum segment contributions for targets ``start:stop`` in segment order.

    ``sw`` holds theta_k / (2 pi) per segment. The fixed loop order makes each
    target's result independent of how targets are split among workers.
    """
    n_seg = sx.shape[0]
    for m in range(start, stop):
        vx = 0.0
        vy = 0.0
        st = OK
        for i in range(n_seg):
            cx, cy, s, _ = segment_contribution(
                zx[m], zy[m], sx[i], sy[i], stx[i], sty[i], sd[i], smu[i], sbeta[i],
                sgamma[i], alpha, far_threshold, order, tail_tol, rtol, hmin, skip_self_i1)
            vx += sw[i] * cx
            vy += sw[i] * cy
            if s > st:
                st = s
        out[m, 0] = vx
        out[m, 1] = vy
        status[m] = st
