"""Truncated power series in one variable.

Only what the kernel expansions need: products, the generalised binomial
series ``(1 + u)**c`` composed with a polynomial ``u`` without constant term,
and the equivalent J.C.P. Miller recurrence for powers of a series.
"""
from __future__ import annotations

import numpy as np
from scipy.special import binom


class TruncatedSeries:
    """Coefficients ``a_0 .. a_order`` of a power series modulo ``p**(order+1)``."""

    __slots__ = ("coef",)

    def __init__(self, coef, order: int | None = None):
        coef = np.asarray(coef, dtype=float)
        if order is not None:
            out = np.zeros(order + 1)
            k = min(order + 1, coef.size)
            out[:k] = coef[:k]
            coef = out
        self.coef = coef

    @property
    def order(self) -> int:
        return self.coef.size - 1

    def __repr__(self) -> str:
        return f"TruncatedSeries({self.coef.tolist()})"

    def __add__(self, other: "TruncatedSeries | float") -> "TruncatedSeries":
        if isinstance(other, TruncatedSeries):
            return TruncatedSeries(self.coef + other.coef)
        out = self.coef.copy()
        out[0] += other
        return TruncatedSeries(out)

    __radd__ = __add__

    def __mul__(self, other: "TruncatedSeries | float") -> "TruncatedSeries":
        if isinstance(other, TruncatedSeries):
            return TruncatedSeries(np.convolve(self.coef, other.coef)[: self.coef.size])
        return TruncatedSeries(self.coef * other)

    __rmul__ = __mul__

    def __call__(self, p: float) -> float:
        return float(np.polynomial.polynomial.polyval(p, self.coef))

    def integrate_unit(self, shift: float = 0.0) -> float:
        """Term-by-term ``integral_0^1 p**shift * series dp``."""
        n = np.arange(self.coef.size)
        return float(np.sum(self.coef / (n + shift + 1.0)))


def binomial_compose(u, c: float, order: int) -> TruncatedSeries:
    """``(1 + u(p))**c`` for a polynomial ``u`` with ``u(0) == 0``.

    Horner evaluation of the binomial series in ``u``; terms beyond ``u**order``
    vanish modulo ``p**(order+1)``.
    """
    u = TruncatedSeries(u, order)
    if u.coef[0] != 0.0:
        raise ValueError("u must have no constant term")
    acc = TruncatedSeries([binom(c, order)], order)
    for k in range(order - 1, -1, -1):
        acc = acc * u + binom(c, k)
    return acc


def power_recurrence(poly, c: float, order: int) -> np.ndarray:
    """Coefficients of ``poly(p)**c`` (``poly[0] != 0``) by Miller's recurrence.

    ``n a_n poly_0 = sum_k ((c + 1) k - n) poly_k a_{n-k}``. Works row-wise on a
    2-D array of polynomials, which is what the kernel uses.
    """
    poly = np.atleast_2d(np.asarray(poly, dtype=float))
    deg = poly.shape[1] - 1
    a = np.zeros((poly.shape[0], order + 1))
    a[:, 0] = poly[:, 0] ** c
    for n in range(1, order + 1):
        acc = np.zeros(poly.shape[0])
        for k in range(1, min(n, deg) + 1):
            acc += ((c + 1.0) * k - n) * poly[:, k] * a[:, n - k]
        a[:, n] = acc / (n * poly[:, 0])
    return a
