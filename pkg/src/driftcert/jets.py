"""Forward-mode second-order jets in two variables.

A :class:`Jet2` carries the value, gradient and (symmetric) Hessian of a
scalar function at a point.  Arithmetic on jets applies the product/chain
rules exactly, so any function composed from the primitives below has
analytic first and second derivatives up to floating-point rounding.

Components may be Python floats or numpy arrays of a common shape; all
operations broadcast, which is what makes certificate sampling cheap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Jet2",
    "jet_xy",
    "jet_const",
    "chain",
    "abs_pow",
    "pos_pow",
    "expj",
    "SmoothStep",
]


@dataclass(frozen=True)
class Jet2:
    """Value, gradient and Hessian (dxx, dxy, dyy) of a scalar function."""

    v: object
    dx: object
    dy: object
    dxx: object
    dxy: object
    dyy: object

    def __add__(self, other):
        if isinstance(other, Jet2):
            return Jet2(self.v + other.v, self.dx + other.dx, self.dy + other.dy,
                        self.dxx + other.dxx, self.dxy + other.dxy, self.dyy + other.dyy)
        return Jet2(self.v + other, self.dx, self.dy, self.dxx, self.dxy, self.dyy)

    __radd__ = __add__

    def __neg__(self):
        return Jet2(-self.v, -self.dx, -self.dy, -self.dxx, -self.dxy, -self.dyy)

    def __sub__(self, other):
        return self + (-other if isinstance(other, Jet2) else -np.asarray(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet2):
            a, b = self, other
            return Jet2(
                a.v * b.v,
                a.dx * b.v + a.v * b.dx,
                a.dy * b.v + a.v * b.dy,
                a.dxx * b.v + 2.0 * a.dx * b.dx + a.v * b.dxx,
                a.dxy * b.v + a.dx * b.dy + a.dy * b.dx + a.v * b.dxy,
                a.dyy * b.v + 2.0 * a.dy * b.dy + a.v * b.dyy,
            )
        return Jet2(self.v * other, self.dx * other, self.dy * other,
                    self.dxx * other, self.dxy * other, self.dyy * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet2):
            return self * other.reciprocal()
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def reciprocal(self):
        u = self.v
        return chain(self, 1.0 / u, -1.0 / (u * u), 2.0 / (u * u * u))

    def __pow__(self, p):
        return pos_pow(self, p)


def jet_xy(x, y):
    """Seed jets for the coordinate functions at (possibly array) points."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    zero = np.zeros_like(x)
    one = np.ones_like(x)
    return (Jet2(x, one, zero, zero, zero, zero),
            Jet2(y, zero, one, zero, zero, zero))


def jet_const(c, like=None):
    z = 0.0 if like is None else np.zeros_like(like)
    v = c if like is None else c + z
    return Jet2(v, z, z, z, z, z)


def chain(u: Jet2, f0, f1, f2) -> Jet2:
    """Jet of f(u) given f, f', f'' evaluated at u.v."""
    return Jet2(
        f0,
        f1 * u.dx,
        f1 * u.dy,
        f2 * u.dx * u.dx + f1 * u.dxx,
        f2 * u.dx * u.dy + f1 * u.dxy,
        f2 * u.dy * u.dy + f1 * u.dyy,
    )


def abs_pow(u: Jet2, p: float) -> Jet2:
    """Jet of |u|^p, valid away from u = 0."""
    a = np.abs(u.v)
    s = np.sign(u.v)
    f0 = a ** p
    f1 = p * a ** (p - 1.0) * s
    f2 = p * (p - 1.0) * a ** (p - 2.0)
    return chain(u, f0, f1, f2)


def pos_pow(u: Jet2, p: float) -> Jet2:
    """Jet of u^p for strictly positive u."""
    v = u.v
    f0 = v ** p
    f1 = p * v ** (p - 1.0)
    f2 = p * (p - 1.0) * v ** (p - 2.0)
    return chain(u, f0, f1, f2)


def expj(u: Jet2) -> Jet2:
    e = np.exp(u.v)
    return chain(u, e, e, e)


def _leggauss01(n):
    """Gauss-Legendre nodes/weights transplanted to [0, 1]."""
    xg, wg = np.polynomial.legendre.leggauss(n)
    return 0.5 * (xg + 1.0), 0.5 * wg


class SmoothStep:
    """Smooth monotone step: 0 for t <= 0, 1 for t >= 1, C-infinity.

    Built as the normalized cumulative of the bump
    exp(-1 / (1 - (2t - 1)^2)) supported on [0, 1].  The same function
    serves as the blend g(q) of the first patch and as the step k of the
    remaining patches.
    """

    _NODES = 96

    def __init__(self):
        xg, wg = _leggauss01(self._NODES)
        self._xg = xg
        self._wg = wg
        self.norm = float(np.sum(wg * self._bump_raw(xg)))

    @staticmethod
    def _bump_raw(t):
        # caller guarantees t strictly inside (0, 1)
        s = 2.0 * t - 1.0
        return np.exp(-1.0 / (1.0 - s * s))

    def bump(self, t):
        """The un-normalized bump, zero outside (0, 1)."""
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        m = (t > 0.0) & (t < 1.0)
        if np.any(m):
            out[m] = self._bump_raw(t[m])
        return out

    def bump_d1(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        m = (t > 0.0) & (t < 1.0)
        if np.any(m):
            tm = t[m]
            s = 2.0 * tm - 1.0
            w = 1.0 - s * s
            out[m] = self._bump_raw(tm) * (-4.0 * s / (w * w))
        return out

    def val(self, t):
        """Cumulative value in [0, 1], via fixed Gauss-Legendre quadrature."""
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        out = np.zeros_like(t)
        out[t >= 1.0] = 1.0
        m = (t > 0.0) & (t < 1.0)
        if np.any(m):
            tm = t[m]
            # nodes for integral over [0, tm]: x = tm * xg, weight tm * wg
            nodes = tm[:, None] * self._xg[None, :]
            vals = self._bump_raw(np.clip(nodes, 1e-300, 1.0 - 1e-16))
            # clip keeps the raw bump's argument valid; nodes are interior anyway
            out[m] = (tm / self.norm) * np.sum(self._wg[None, :] * vals, axis=1)
        return float(out[0]) if scalar else out

    def d1(self, t):
        return self.bump(t) / self.norm

    def d2(self, t):
        return self.bump_d1(t) / self.norm

    def jet(self, u: Jet2) -> Jet2:
        return chain(u, self.val(u.v), self.d1(u.v), self.d2(u.v))


# module-level instance shared by the patching code
smoothstep = SmoothStep()
