"""Exact Gaussian-rational scalars for the algebraic-identity backend.

A GaussianRational is a + bi with a, b in Q.  Matrices of these are stored
as numpy object arrays, so the same convolution/trace code paths serve both
the exact and the double-precision backends.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np


@dataclass(frozen=True)
class GaussianRational:
    re: Fraction
    im: Fraction = Fraction(0)

    @staticmethod
    def of(x) -> "GaussianRational":
        if isinstance(x, GaussianRational):
            return x
        if isinstance(x, complex):
            # only exact binary floats coerce losslessly; callers wanting true
            # rationals should pass Fractions
            return GaussianRational(Fraction(x.real), Fraction(x.imag))
        return GaussianRational(Fraction(x))

    def __add__(self, other):
        o = GaussianRational.of(other)
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = GaussianRational.of(other)
        return GaussianRational(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return GaussianRational.of(other) - self

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __mul__(self, other):
        o = GaussianRational.of(other)
        return GaussianRational(self.re * o.re - self.im * o.im,
                                self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = GaussianRational.of(other)
        d = o.re * o.re + o.im * o.im
        if d == 0:
            raise ZeroDivisionError("division by zero GaussianRational")
        return GaussianRational((self.re * o.re + self.im * o.im) / d,
                                (self.im * o.re - self.re * o.im) / d)

    def conjugate(self):
        return GaussianRational(self.re, -self.im)

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __abs__(self):
        return abs(complex(self))

    def __bool__(self):
        return not self.is_zero()

    def __repr__(self):
        return f"({self.re}{'+' if self.im >= 0 else ''}{self.im}i)"


GR_ZERO = GaussianRational(Fraction(0))
GR_ONE = GaussianRational(Fraction(1))


def gr(re, im=0) -> GaussianRational:
    return GaussianRational(Fraction(re), Fraction(im))


def exact_matrix(rows) -> np.ndarray:
    """Object-dtype matrix of GaussianRationals from nested scalars."""
    arr = np.empty((len(rows), len(rows[0])), dtype=object)
    for i, row in enumerate(rows):
        for j, x in enumerate(row):
            arr[i, j] = GaussianRational.of(x)
    return arr


def exact_zeros(n: int, m: int) -> np.ndarray:
    arr = np.empty((n, m), dtype=object)
    arr[:] = GR_ZERO
    return arr


def exact_eye(n: int, scale=GR_ONE) -> np.ndarray:
    arr = exact_zeros(n, n)
    for i in range(n):
        arr[i, i] = GaussianRational.of(scale)
    return arr


def exact_conj_transpose(m: np.ndarray) -> np.ndarray:
    out = np.empty((m.shape[1], m.shape[0]), dtype=object)
    for i in range(m.shape[0]):
        for j in range(m.shape[1]):
            out[j, i] = m[i, j].conjugate()
    return out


def to_complex_matrix(m: np.ndarray) -> np.ndarray:
    if m.dtype == object:
        return np.array([[complex(x) for x in row] for row in m], dtype=complex)
    return np.asarray(m, dtype=complex)
