"""Implicit interface geometry.

The interface is the zero set of a scalar field ``phi``; the convention is
``phi > 0`` in the outer subdomain (region 1) and ``phi < 0`` in the enclosed
subdomain (region 2).  Two concrete fields are supported: circles, whose
segment intersections are solved analytically, and bivariate polynomials,
which fall back to sampling plus bracketed root finding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.optimize import brentq

from .errors import OnInterface, TangentialContact

#: |phi| below 1e-14 times the local scale counts as "on the interface".
ON_INTERFACE_REL = 1e-14


@dataclass(frozen=True)
class Segment:
    """Straight segment between two distinct points."""

    a: tuple[float, float]
    b: tuple[float, float]

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError("degenerate segment: endpoints coincide")

    def point(self, lam: float) -> tuple[float, float]:
        ax, ay = self.a
        bx, by = self.b
        return (ax + lam * (bx - ax), ay + lam * (by - ay))


class LevelSet:
    """Base class; concrete fields implement value/gradient/scale_at."""

    def value(self, x, y):
        raise NotImplementedError

    def gradient(self, x, y):
        raise NotImplementedError

    def scale_at(self, x, y) -> float:
        """Characteristic magnitude of phi near (x, y), for tolerances."""
        raise NotImplementedError

    def region_of(self, x: float, y: float) -> int:
        """Return 1 where phi > 0, 2 where phi < 0.

        Raises OnInterface when |phi| is at machine scale; callers near the
        interface should perturb the query point or decide combinatorially.
        """
        v = float(self.value(x, y))
        if abs(v) <= ON_INTERFACE_REL * max(1.0, self.scale_at(x, y)):
            raise OnInterface(f"point ({x}, {y}) lies on the interface (phi={v:.3e})")
        return 1 if v > 0.0 else 2

    def roots_on_segment(self, seg: Segment, tol: float = 1e-12):
        """Transversal roots of phi along the segment.

        Returns a list of (lambda, (x, y)) sorted by the segment parameter
        lambda in [0, 1].  A double root in the open segment interior means
        the interface is tangent to the edge and raises TangentialContact.
        """
        raise NotImplementedError


class CircleLevelSet(LevelSet):
    """phi(x, y) = (x - cx)^2 + (y - cy)^2 - r^2."""

    def __init__(self, center=(0.0, 0.0), radius: float = 1.0):
        if radius <= 0.0:
            raise ValueError(f"radius must be positive, got {radius}")
        self.center = (float(center[0]), float(center[1]))
        self.radius = float(radius)

    def __repr__(self):
        return f"CircleLevelSet(center={self.center}, radius={self.radius})"

    def value(self, x, y):
        cx, cy = self.center
        return (np.asarray(x) - cx) ** 2 + (np.asarray(y) - cy) ** 2 - self.radius**2

    def gradient(self, x, y):
        cx, cy = self.center
        return 2.0 * (np.asarray(x) - cx), 2.0 * (np.asarray(y) - cy)

    def scale_at(self, x, y):
        cx, cy = self.center
        return max(self.radius**2, float((x - cx) ** 2 + (y - cy) ** 2))

    def roots_on_segment(self, seg: Segment, tol: float = 1e-12):
        # phi restricted to the segment is an exact quadratic in lambda.
        ax, ay = seg.a
        bx, by = seg.b
        cx, cy = self.center
        dx, dy = bx - ax, by - ay
        ex, ey = ax - cx, ay - cy
        qa = dx * dx + dy * dy
        qb = 2.0 * (dx * ex + dy * ey)
        qc = ex * ex + ey * ey - self.radius**2

        disc = qb * qb - 4.0 * qa * qc
        scale = qb * qb + abs(4.0 * qa * qc)
        if disc <= 0.0:
            if disc > -1e-14 * max(scale, 1e-300):
                lam0 = -qb / (2.0 * qa)
                if tol < lam0 < 1.0 - tol:
                    raise TangentialContact(
                        f"interface tangent to segment {seg.a}-{seg.b} at lambda={lam0:.6g}; "
                        "refine the background mesh"
                    )
            return []
        # Citardauq-style split avoids cancellation for small roots.
        sq = math.sqrt(disc)
        q = -0.5 * (qb + math.copysign(sq, qb))
        lams = sorted((q / qa, qc / q) if q != 0.0 else (-qb / (2 * qa),))
        if len(lams) == 2 and abs(lams[1] - lams[0]) <= 1e-12:
            lam0 = 0.5 * (lams[0] + lams[1])
            if tol < lam0 < 1.0 - tol:
                raise TangentialContact(
                    f"near-tangential contact on segment {seg.a}-{seg.b} at lambda={lam0:.6g}; "
                    "refine the background mesh"
                )
        out = []
        for lam in lams:
            if -tol <= lam <= 1.0 + tol:
                lam = min(1.0, max(0.0, lam))
                out.append((lam, seg.point(lam)))
        return out


class PolynomialLevelSet(LevelSet):
    """phi given by a dense bivariate coefficient array c[i, j] * x^i * y^j."""

    def __init__(self, coeffs):
        c = np.atleast_2d(np.asarray(coeffs, dtype=float))
        if not np.any(c):
            raise ValueError("zero polynomial is not a valid level set")
        self.coeffs = c
        self._dx = npoly.polyder(c, axis=0) if c.shape[0] > 1 else np.zeros((1, 1))
        self._dy = npoly.polyder(c, axis=1) if c.shape[1] > 1 else np.zeros((1, 1))

    def value(self, x, y):
        return npoly.polyval2d(np.asarray(x), np.asarray(y), self.coeffs)

    def gradient(self, x, y):
        x = np.asarray(x)
        y = np.asarray(y)
        return npoly.polyval2d(x, y, self._dx), npoly.polyval2d(x, y, self._dy)

    def scale_at(self, x, y):
        r = max(1.0, abs(float(x)), abs(float(y)))
        i = np.arange(self.coeffs.shape[0])[:, None]
        j = np.arange(self.coeffs.shape[1])[None, :]
        return float(np.sum(np.abs(self.coeffs) * r ** (i + j)))

    def roots_on_segment(self, seg: Segment, tol: float = 1e-12):
        degree = sum(self.coeffs.shape) - 2
        nsample = max(64, 16 * degree)
        lams = np.linspace(0.0, 1.0, nsample + 1)
        ax, ay = seg.a
        bx, by = seg.b
        vals = np.asarray(self.value(ax + lams * (bx - ax), ay + lams * (by - ay)))

        def f(lam):
            return float(self.value(ax + lam * (bx - ax), ay + lam * (by - ay)))

        roots = []
        for k in range(nsample):
            va, vb = vals[k], vals[k + 1]
            if va == 0.0:
                roots.append(lams[k])
            elif va * vb < 0.0:
                roots.append(brentq(f, lams[k], lams[k + 1], xtol=tol))
        if vals[-1] == 0.0:
            roots.append(1.0)
        # Near-tangency: a local minimum of |phi| dipping to ~0 without a
        # sign change cannot be split into transversal roots.
        scale = max(np.max(np.abs(vals)), 1e-300)
        interior = (lams > tol) & (lams < 1.0 - tol)
        suspicious = interior & (np.abs(vals) <= 1e-13 * scale)
        for k in np.flatnonzero(suspicious):
            if not any(abs(lams[k] - r) < 2.0 / nsample for r in roots):
                raise TangentialContact(
                    f"interface tangent to segment {seg.a}-{seg.b} near lambda={lams[k]:.6g}"
                )
        roots = sorted(set(roots))
        return [(lam, seg.point(lam)) for lam in roots]


def parse_radius(value) -> float:
    """Parse a radius that may be given exactly, e.g. "pi/7" or "2*pi/7"."""
    if isinstance(value, (int, float)):
        return float(value)
    text = str(value).strip().replace(" ", "")
    if "pi" not in text:
        return float(text)
    num, _, den = text.partition("/")
    factor, _, _ = num.partition("*")
    mult = float(factor) if factor and factor != "pi" else 1.0
    out = mult * math.pi
    if den:
        out /= float(den)
    return out


def make_levelset(spec: dict) -> LevelSet:
    """Build a level set from its JSON-config description."""
    kind = spec.get("type")
    if kind == "circle":
        return CircleLevelSet(center=spec.get("center", (0.0, 0.0)),
                              radius=parse_radius(spec["radius"]))
    if kind == "polynomial":
        return PolynomialLevelSet(spec["coefficients"])
    raise ValueError(f"unknown level-set type: {kind!r}")
