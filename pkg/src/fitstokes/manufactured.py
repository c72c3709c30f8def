"""Exact solution, forcing term, and viscosity layout for the test case.

The velocity derives from the stream function ``theta = phi^2 (x-1)^2 (y-1)^2``
(phi the circle level-set polynomial), so that ``mu * u = curl theta`` is one
global polynomial: u is divergence-free in each subdomain, continuous across
the interface (grad theta vanishes on phi = 0), and the interface stress jump
vanishes.  The pressure is ``x`` shifted to zero mean.  Because ``mu * u`` is
global, the body force ``f = -lap(curl theta) + grad p`` does not depend on
the viscosity pair at all.

Polynomials are kept as dense coefficient arrays (``c[i, j] x^i y^j``),
expanded once; all derivatives are coefficient-exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly

from .levelset import CircleLevelSet


def poly_mul(a, b):
    """Product of two dense bivariate coefficient arrays."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    out = np.zeros((a.shape[0] + b.shape[0] - 1, a.shape[1] + b.shape[1] - 1))
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            if a[i, j] != 0.0:
                out[i:i + b.shape[0], j:j + b.shape[1]] += a[i, j] * b
    return out


def poly_diff(c, wrt: str):
    c = np.atleast_2d(np.asarray(c, dtype=float))
    axis = 0 if wrt == "x" else 1
    if c.shape[axis] == 1:
        return np.zeros((1, 1))
    return npoly.polyder(c, axis=axis)


def poly_degree(c) -> int:
    c = np.atleast_2d(np.asarray(c))
    nz = np.argwhere(c != 0.0)
    return int((nz.sum(axis=1)).max()) if len(nz) else 0


@dataclass
class ManufacturedCase:
    """Example 1 data: viscosities, interface, exact fields, forcing."""

    mu1: float
    mu2: float
    domain: tuple = ((-1.0, 1.0), (-1.0, 1.0))
    radius: float = math.pi / 7.0
    center: tuple = (0.0, 0.0)
    levelset: CircleLevelSet = field(init=False)
    theta: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.mu1 <= 0.0 or self.mu2 <= 0.0:
            raise ValueError(f"viscosities must be positive: mu=({self.mu1}, {self.mu2})")
        self.levelset = CircleLevelSet(center=self.center, radius=self.radius)
        cx, cy = self.center
        phi = np.zeros((3, 3))
        phi[2, 0] = 1.0
        phi[0, 2] = 1.0
        phi[1, 0] = -2.0 * cx
        phi[0, 1] = -2.0 * cy
        phi[0, 0] = cx**2 + cy**2 - self.radius**2
        gx = np.array([[1.0], [-2.0], [1.0]])     # (x-1)^2
        gy = np.array([[1.0, -2.0, 1.0]])         # (y-1)^2
        self.theta = poly_mul(poly_mul(phi, phi), poly_mul(gx, gy))

        tx = poly_diff(self.theta, "x")
        ty = poly_diff(self.theta, "y")
        self._tx, self._ty = tx, ty
        self._txx = poly_diff(tx, "x")
        self._txy = poly_diff(tx, "y")
        self._tyy = poly_diff(ty, "y")
        lap = np.zeros((max(self._txx.shape[0], self._tyy.shape[0]),
                        max(self._txx.shape[1], self._tyy.shape[1])))
        lap[:self._txx.shape[0], :self._txx.shape[1]] += self._txx
        lap[:self._tyy.shape[0], :self._tyy.shape[1]] += self._tyy
        self._lap = lap
        self._lap_x = poly_diff(lap, "x")
        self._lap_y = poly_diff(lap, "y")

    @property
    def pressure_shift(self) -> float:
        (x0, x1), _ = self.domain
        return 0.5 * (x0 + x1)

    def mu_at(self, x, y):
        """True (not mesh-discretized) viscosity from the sign of phi."""
        phi = self.levelset.value(x, y)
        return np.where(np.asarray(phi) > 0.0, self.mu1, self.mu2)

    def velocity(self, x, y):
        """Exact u = (1/mu) * (d theta/dy, -d theta/dx); shape (..., 2)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        mu = self.mu_at(x, y)
        ux = npoly.polyval2d(x, y, self._ty) / mu
        uy = -npoly.polyval2d(x, y, self._tx) / mu
        return np.stack([ux, uy], axis=-1)

    def velocity_gradient(self, x, y):
        """Exact grad u with rows = components; shape (..., 2, 2)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        mu = self.mu_at(x, y)
        dxy = npoly.polyval2d(x, y, self._txy)
        row0 = np.stack([dxy, npoly.polyval2d(x, y, self._tyy)], axis=-1)
        row1 = np.stack([-npoly.polyval2d(x, y, self._txx), -dxy], axis=-1)
        return np.stack([row0, row1], axis=-2) / mu[..., None, None]

    def pressure(self, x, y):
        return np.asarray(x, dtype=float) - self.pressure_shift

    def forcing(self, x, y):
        """f = (1 - d(lap theta)/dy, d(lap theta)/dx); independent of mu."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        f0 = 1.0 - npoly.polyval2d(x, y, self._lap_y)
        f1 = npoly.polyval2d(x, y, self._lap_x)
        return np.stack([f0, f1], axis=-1)

    def dirichlet(self, x, y):
        """Velocity edge data on the outer boundary (equals the exact u)."""
        return self.velocity(x, y)


@dataclass
class PatchCase:
    """Linear exact solution u = (y, x), p = 0 with unit viscosity.

    Both local spaces contain P1, so the discrete solution must reproduce
    this field to solver precision on cut and uncut meshes alike.
    """

    domain: tuple = ((-1.0, 1.0), (-1.0, 1.0))
    levelset: CircleLevelSet | None = None
    mu1: float = 1.0
    mu2: float = 1.0
    forcing = None

    def velocity(self, x, y):
        return np.stack([np.asarray(y, float), np.asarray(x, float)], axis=-1)

    def velocity_gradient(self, x, y):
        shape = np.broadcast(np.asarray(x), np.asarray(y)).shape
        g = np.zeros(shape + (2, 2))
        g[..., 0, 1] = 1.0
        g[..., 1, 0] = 1.0
        return g

    def pressure(self, x, y):
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)

    def dirichlet(self, x, y):
        return self.velocity(x, y)


def make_case(mu, domain=((-1.0, 1.0), (-1.0, 1.0)), radius=math.pi / 7.0,
              center=(0.0, 0.0)) -> ManufacturedCase:
    mu1, mu2 = mu
    return ManufacturedCase(mu1=float(mu1), mu2=float(mu2),
                            domain=tuple(map(tuple, domain)),
                            radius=float(radius), center=tuple(center))
