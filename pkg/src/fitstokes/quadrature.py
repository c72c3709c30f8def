"""Quadrature rules on triangles, convex quadrilaterals, and edges.

Triangle rules are symmetric (Dunavant) tables for degrees up to 10; higher
degrees fall back to a collapsed Gauss-Legendre product rule.  Quadrilaterals
are integrated by splitting along the 0-2 diagonal, which is exact here
because every integrand produced by the element spaces is a polynomial on
the whole (affine-geometry) quad.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import UnsupportedDegree

MAX_DEGREE = 40

# Dunavant rules as (kind, weight, a, b) orbits in barycentric coordinates:
# kind 1 = centroid, kind 3 = (a, b, b) permutations, kind 6 = (a, b, c)
# permutations with c = 1 - a - b.  Weights sum to 1.
_DUNAVANT = {
    1: [(1, 1.0, None, None)],
    2: [(3, 1.0 / 3.0, 2.0 / 3.0, 1.0 / 6.0)],
    5: [
        (1, 0.225, None, None),
        (3, 0.132394152788506, 0.059715871789770, 0.470142064105115),
        (3, 0.125939180544827, 0.797426985353087, 0.101286507323456),
    ],
    8: [
        (1, 0.144315607677787, None, None),
        (3, 0.095091634413463, 0.081414823414554, 0.459292588292723),
        (3, 0.103217370534718, 0.658861384496480, 0.170569307751760),
        (3, 0.032458497623198, 0.898905543365938, 0.050547228317031),
        (6, 0.027230314174435, 0.008394777409958, 0.263112829634638),
    ],
    10: [
        (1, 0.090817990382754, None, None),
        (3, 0.036725957756467, 0.028844733232685, 0.485577633383657),
        (3, 0.045321059435528, 0.781036849029926, 0.109481575485037),
        (6, 0.072757916845420, 0.141707219414880, 0.307939838764121),
        (6, 0.028327242531057, 0.025003534762686, 0.246672560639903),
        (6, 0.009421666963733, 0.009540815400299, 0.066803251012200),
    ],
}


def _expand_orbits(orbits):
    pts, wts = [], []
    for kind, w, a, b in orbits:
        if kind == 1:
            bary = [(1 / 3, 1 / 3, 1 / 3)]
        elif kind == 3:
            bary = [(a, b, b), (b, a, b), (b, b, a)]
        else:
            c = 1.0 - a - b
            bary = [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]
        for lam in bary:
            pts.append((lam[1], lam[2]))  # reference coords: x=lam2, y=lam3
            wts.append(w)
    return np.array(pts), np.array(wts)


def _collapsed_rule(degree: int):
    """Gauss-Legendre product rule on the reference triangle (Duffy map)."""
    mu = (degree + 3) // 2 + 1
    mv = (degree + 2) // 2 + 1
    xu, wu = np.polynomial.legendre.leggauss(mu)
    xv, wv = np.polynomial.legendre.leggauss(mv)
    u = 0.5 * (xu + 1.0)
    v = 0.5 * (xv + 1.0)
    wu = 0.5 * wu
    wv = 0.5 * wv
    U, V = np.meshgrid(u, v, indexing="ij")
    W = np.outer(wu, wv) * (1.0 - U)
    pts = np.column_stack([U.ravel(), (V * (1.0 - U)).ravel()])
    return pts, 2.0 * W.ravel()  # normalize so weights sum to 1


@lru_cache(maxsize=None)
def triangle_rule(degree: int):
    """Reference-triangle rule (points, weights) with weights summing to 1.

    The rule is exact for all polynomials of total degree <= ``degree`` when
    applied as |T| * sum(w_i * f(p_i)).
    """
    if degree < 1 or degree > MAX_DEGREE:
        raise UnsupportedDegree(f"triangle quadrature degree {degree} not supported")
    for avail in (1, 2, 5, 8, 10):
        if degree <= avail:
            pts, wts = _expand_orbits(_DUNAVANT[avail])
            pts.setflags(write=False)
            wts.setflags(write=False)
            return pts, wts
    pts, wts = _collapsed_rule(degree)
    pts.setflags(write=False)
    wts.setflags(write=False)
    return pts, wts


def triangle_area(verts) -> float:
    (x0, y0), (x1, y1), (x2, y2) = verts
    return 0.5 * ((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0))


def polygon_area(verts) -> float:
    """Signed shoelace area; positive for counterclockwise order."""
    v = np.asarray(verts)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def map_to_triangle(verts, pts, wts):
    """Map a reference rule to the physical triangle; weights sum to |T|."""
    v = np.asarray(verts, dtype=float)
    phys = v[0] + np.outer(pts[:, 0], v[1] - v[0]) + np.outer(pts[:, 1], v[2] - v[0])
    return phys, wts * abs(triangle_area(v))


def cell_quadrature(verts, degree: int):
    """Physical quadrature for a triangle (3 vertices) or convex quad (4).

    Quads are split along the diagonal from vertex 0 to vertex 2 and the two
    triangle rules concatenated; weights sum to the cell area.
    """
    v = np.asarray(verts, dtype=float)
    pts, wts = triangle_rule(degree)
    if len(v) == 3:
        return map_to_triangle(v, pts, wts)
    if len(v) == 4:
        p1, w1 = map_to_triangle(v[[0, 1, 2]], pts, wts)
        p2, w2 = map_to_triangle(v[[0, 2, 3]], pts, wts)
        return np.vstack([p1, p2]), np.concatenate([w1, w2])
    raise ValueError(f"cell must have 3 or 4 vertices, got {len(v)}")


@lru_cache(maxsize=None)
def gauss_segment(npts: int):
    """Gauss-Legendre nodes/weights on [0, 1] with weights summing to 1."""
    x, w = np.polynomial.legendre.leggauss(npts)
    return 0.5 * (x + 1.0), 0.5 * w


def edge_mean(p, q, f, npts: int = 2):
    """Mean of f along the segment p-q using an npts Gauss rule."""
    lam, w = gauss_segment(npts)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    pts = p[None, :] + lam[:, None] * (q - p)[None, :]
    vals = f(pts[:, 0], pts[:, 1])
    return np.tensordot(w, np.asarray(vals, dtype=float), axes=(0, 0))
