"""Volume-preserving shear maps of the torus along a fixed stable direction.

The family translates each point along a fixed vector b_bar = (0, 1, b, ...)
by t * sin(2*pi*(x + phase)), where x is the first coordinate.  The first
coordinate never moves, so the family is invertible by flipping the sign of
the strength, and the derivative differs from the identity by a rank-one
shear block.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi

# floor residues this close to 1 are collapsed to 0 so coords stay in [0, 1)
_WRAP_EPS = 1e-15


def wrap01(coords):
    """Reduce coordinates mod 1 into [0, 1), collapsing the 1 - 1e-15 sliver."""
    out = np.asarray(coords, dtype=float)
    out = out - np.floor(out)
    out = np.where(out >= 1.0 - _WRAP_EPS, 0.0, out)
    return out


def wrap_delta(delta):
    """Minimal representative of a displacement on the torus, in [-1/2, 1/2)."""
    d = np.asarray(delta, dtype=float)
    return d - np.round(d)


@dataclass(frozen=True)
class TorusPoint:
    """Point of the d-torus; coordinates are reduced mod 1 on construction."""

    coords: np.ndarray

    def __init__(self, coords):
        object.__setattr__(self, "coords", wrap01(np.atleast_1d(coords)))

    @property
    def dim(self):
        return self.coords.shape[-1]


@dataclass(frozen=True)
class Jet:
    """Image point(s) and derivative matrix of a map at a point."""

    image: np.ndarray
    derivative: np.ndarray


@dataclass(frozen=True)
class ShearMap:
    """Torus shear f(p) = p + t * sin(2*pi*(x + phase)) * b_bar, mod 1.

    Parameters
    ----------
    t : float
        Shear strength, any real number, the inverse map uses -t.
    b_coeffs : tuple of float
        Trailing entries of the translation direction (0, 1, *b_coeffs);
        the torus dimension is 2 + len(b_coeffs).
    phase : float
        Offset added to the first coordinate inside the sine; 0 for the
        standard family.
    """

    t: float
    b_coeffs: tuple
    phase: float = 0.0
    direction: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        b = np.concatenate([[0.0, 1.0], np.asarray(self.b_coeffs, dtype=float)])
        object.__setattr__(self, "b_coeffs", tuple(float(c) for c in self.b_coeffs))
        object.__setattr__(self, "direction", b)

    @property
    def dim(self):
        return 2 + len(self.b_coeffs)

    def inverse(self):
        return ShearMap(-self.t, self.b_coeffs, self.phase)

    def apply(self, points):
        """Map points (shape (..., d)) forward; result wrapped into [0, 1)."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        s = np.sin(TWO_PI * (p[..., 0] + self.phase))
        out = p + (self.t * s)[..., None] * self.direction
        out = wrap01(out)
        return out.reshape(np.shape(points))

    def jet(self, points):
        """Image and derivative; derivative is I plus a rank-one shear block."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        image = self.apply(points)
        c = np.cos(TWO_PI * (p[..., 0] + self.phase))
        d = self.dim
        deriv = np.broadcast_to(np.eye(d), p.shape[:-1] + (d, d)).copy()
        deriv[..., :, 0] += (TWO_PI * self.t * c)[..., None] * self.direction
        if np.ndim(points) == 1:
            deriv = deriv[0]
        return Jet(image=image, derivative=deriv)

    def finite_difference_check(self, point, h=1e-6):
        """Max abs deviation between the analytic derivative and central differences.

        Differences are taken on minimal torus representatives so the check
        is insensitive to wrap-around.
        """
        p = wrap01(np.asarray(point, dtype=float))
        d = self.dim
        analytic = self.jet(p).derivative
        fd = np.empty((d, d))
        for j in range(d):
            e = np.zeros(d)
            e[j] = h
            plus = self.apply(p + e)
            minus = self.apply(p - e)
            fd[:, j] = wrap_delta(plus - minus) / (2 * h)
        return float(np.max(np.abs(fd - analytic)))
