"""Hamilton quaternions and the monogenic embedding into span{1, i, j}."""
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Quaternion:
    """q = a + b i + c j + d k."""

    a: float = 0.0
    b: float = 0.0
    c: float = 0.0
    d: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.a, self.b, self.c, self.d)):
            raise ValueError(f"non-finite quaternion component in {self}")

    def __add__(self, other):
        other = _coerce(other)
        return Quaternion(self.a + other.a, self.b + other.b, self.c + other.c, self.d + other.d)

    __radd__ = __add__

    def __neg__(self):
        return Quaternion(-self.a, -self.b, -self.c, -self.d)

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __mul__(self, other):
        return qmul(self, _coerce(other))

    def __rmul__(self, other):
        return qmul(_coerce(other), self)

    def __truediv__(self, other):
        return self * qinv(_coerce(other))

    def __abs__(self):
        return qmod(self)

    def conj(self):
        return qconj(self)

    @property
    def scalar(self):
        return self.a

    @property
    def vector(self):
        return Quaternion(0.0, self.b, self.c, self.d)

    def as_tuple(self):
        return (self.a, self.b, self.c, self.d)


def _coerce(x):
    if isinstance(x, Quaternion):
        return x
    if isinstance(x, (int, float, np.floating, np.integer)):
        return Quaternion(float(x))
    raise TypeError(f"cannot treat {type(x).__name__} as a quaternion")


ONE = Quaternion(1.0)
I = Quaternion(0.0, 1.0)
J = Quaternion(0.0, 0.0, 1.0)
K = Quaternion(0.0, 0.0, 0.0, 1.0)


def qmul(p, q):
    """Hamilton product (i^2 = j^2 = k^2 = ijk = -1)."""
    return Quaternion(
        p.a * q.a - p.b * q.b - p.c * q.c - p.d * q.d,
        p.a * q.b + p.b * q.a + p.c * q.d - p.d * q.c,
        p.a * q.c - p.b * q.d + p.c * q.a + p.d * q.b,
        p.a * q.d + p.b * q.c - p.c * q.b + p.d * q.a,
    )


def qconj(q):
    return Quaternion(q.a, -q.b, -q.c, -q.d)


def qmod(q):
    return math.sqrt(q.a * q.a + q.b * q.b + q.c * q.c + q.d * q.d)


def qinv(q):
    n2 = q.a * q.a + q.b * q.b + q.c * q.c + q.d * q.d
    if n2 == 0.0:
        raise ZeroDivisionError("the zero quaternion has no inverse")
    return Quaternion(q.a / n2, -q.b / n2, -q.c / n2, -q.d / n2)


def monogenic_quaternion(m, x, y):
    """Pixel (x=column, y=row) of a monogenic response as I' + I1 i + I2 j."""
    h, w = m.i_prime.shape[-2:]
    if not (0 <= x < w and 0 <= y < h):
        raise IndexError(f"pixel ({x}, {y}) outside a {w}x{h} response")
    return Quaternion(float(m.i_prime[..., y, x]), float(m.i1[..., y, x]), float(m.i2[..., y, x]), 0.0)

