"""Truncated power series and exact polynomial ratios (ascending coefficients)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly


def trim(p: np.ndarray, tol: float = 0.0) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    n = len(p)
    while n > 1 and abs(p[n - 1]) <= tol:
        n -= 1
    return p[:n]


def series_div(num, den, order: int) -> np.ndarray:
    """Coefficients 0..order of num/den as a power series (den[0] != 0)."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    if den[0] == 0:
        raise ZeroDivisionError("series denominator has zero constant term")
    out = np.zeros(order + 1)
    a = np.zeros(order + 1)
    a[:min(len(num), order + 1)] = num[:order + 1]
    d = den[1:order + 1]
    for i in range(order + 1):
        j = min(i, len(d))
        acc = a[i] - np.dot(d[:j], out[i - 1::-1][:j]) if j else a[i]
        out[i] = acc / den[0]
    return out


def batch_series_div(num: np.ndarray, den: np.ndarray, order: int) -> np.ndarray:
    """Row-wise :func:`series_div` for 2-D coefficient arrays of equal width."""
    w = num.shape[0]
    out = np.zeros((w, order + 1))
    a = np.zeros((w, order + 1))
    cols = min(num.shape[1], order + 1)
    a[:, :cols] = num[:, :cols]
    deg = den.shape[1] - 1
    rev = den[:, 1:][:, :order][:, ::-1]  # den_j for j = J..1
    d0 = den[:, 0]
    for i in range(order + 1):
        j = min(i, deg)
        if j:
            acc = a[:, i] - np.einsum("ij,ij->i", rev[:, rev.shape[1] - j:], out[:, i - j:i])
        else:
            acc = a[:, i]
        out[:, i] = acc / d0
    return out


def batch_polymul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros((a.shape[0], a.shape[1] + b.shape[1] - 1))
    for j in range(b.shape[1]):
        out[:, j:j + a.shape[1]] += a * b[:, j:j + 1]
    return out


@dataclass(frozen=True, eq=False)
class SeriesRational:
    """Either ``numerator/denominator`` polynomials or a truncated series."""

    mode: str
    numerator: np.ndarray | None = None
    denominator: np.ndarray | None = None
    coefficients: np.ndarray | None = None

    @classmethod
    def exact(cls, num, den=(1.0,)) -> "SeriesRational":
        return cls("exact-rational", trim(num), trim(den))

    @classmethod
    def truncated(cls, coeffs) -> "SeriesRational":
        return cls("truncated-series", coefficients=np.asarray(coeffs, dtype=float))

    @property
    def is_exact(self) -> bool:
        return self.mode == "exact-rational"

    @property
    def n_max(self) -> int | None:
        return None if self.is_exact else len(self.coefficients) - 1

    def series(self, order: int) -> np.ndarray:
        if self.is_exact:
            return series_div(self.numerator, self.denominator, order)
        if order > self.n_max:
            raise ValueError(f"series known only to order {self.n_max}")
        return self.coefficients[:order + 1].copy()

    def __call__(self, z):
        if self.is_exact:
            return npoly.polyval(z, self.numerator) / npoly.polyval(z, self.denominator)
        return npoly.polyval(z, self.coefficients)

    def derivative(self, z):
        if self.is_exact:
            n, d = self.numerator, self.denominator
            nv, dv = npoly.polyval(z, n), npoly.polyval(z, d)
            return (npoly.polyval(z, npoly.polyder(n)) * dv
                    - nv * npoly.polyval(z, npoly.polyder(d))) / dv**2
        return npoly.polyval(z, npoly.polyder(self.coefficients))
