"""Local shape functions on the hybrid mesh.

Triangles carry the classical Crouzeix-Raviart element (P1 with edge-mean
degrees of freedom).  Cut quadrilaterals carry a rotated-Q1-type element
whose shape space is P1 augmented with the square of the affine function L
vanishing on the line through the midpoints of the two "horizontal" edges
(the uncut background edge and the interface chord).  L is the pullback of
the reference midline coordinate, so the element reduces to the stable
reference construction regardless of how anisotropic the quad is.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateTriangle, IllConditionedBasis
from .quadrature import cell_quadrature, gauss_segment, polygon_area


@dataclass(frozen=True)
class AffineMap2:
    """x -> matrix @ x + offset with cached inverse data."""

    matrix: np.ndarray
    offset: np.ndarray
    det: float = field(init=False)
    inv_matrix: np.ndarray = field(init=False)

    def __post_init__(self):
        det = float(np.linalg.det(self.matrix))
        if det == 0.0:
            raise DegenerateTriangle("affine map is singular")
        object.__setattr__(self, "det", det)
        object.__setattr__(self, "inv_matrix", np.linalg.inv(self.matrix))

    def __call__(self, pts):
        return np.asarray(pts) @ self.matrix.T + self.offset

    def inverse(self, pts):
        return (np.asarray(pts) - self.offset) @ self.inv_matrix.T


def affine_to_reference(a1, a2, a4) -> AffineMap2:
    """Map the labeled physical triangle onto the reference triangle.

    A1 -> (0,0), A2 -> (1,0), A4 -> (0,1).  The interface cut points then
    land at (0, t) and (1-s, s) by affinity.
    """
    a1 = np.asarray(a1, dtype=float)
    cols = np.column_stack([np.asarray(a2, float) - a1, np.asarray(a4, float) - a1])
    det = cols[0, 0] * cols[1, 1] - cols[0, 1] * cols[1, 0]
    scale = max(np.abs(cols).max(), 1e-300) ** 2
    if abs(det) <= 1e-14 * scale:
        raise DegenerateTriangle(f"triangle with vertices {a1}, {a2}, {a4} is degenerate")
    inv = np.array([[cols[1, 1], -cols[0, 1]], [-cols[1, 0], cols[0, 0]]]) / det
    return AffineMap2(matrix=inv, offset=-inv @ a1)


@dataclass(frozen=True)
class QuadReferenceData:
    """Reference geometry of the cut quad for cut ratios (s, t)."""

    s: float
    t: float
    area_ref: float          # area of the quad in K-tilde coordinates
    c1: float
    c2: float
    l13: tuple[float, float, float]  # a*x + b*y + c
    l24: tuple[float, float, float]
    hat_vertices: np.ndarray  # image of A1, A2, A3, A5 under the midline map


def midline_map(s: float, t: float):
    """Midline coordinates on the reference cut quad.

    Returns the QuadReferenceData and the affine map from K-tilde
    coordinates to the reference-quad coordinates, which sends the four
    edge midpoints to (0,-1), (1,0), (0,1), (-1,0).
    """
    if not (0.0 < s <= t < 1.0):
        raise ValueError(f"cut ratios must satisfy 0 < s <= t < 1, got s={s}, t={t}")
    area = 0.5 * (s + t - s * t)
    l13 = ((s + t) / area, s / area, -0.5 * (s + t) / area)
    l24 = ((t - s) / area, (2.0 - s) / area, -0.5 * t * (2.0 - s) / area)
    c1 = (s + t) / (2.0 * area)
    c2 = (2.0 - s) * t / (2.0 * area)
    hat = np.array([
        [-c1, -c2],
        [c1, -2.0 + c2],
        [2.0 - c1, 2.0 - c2],
        [-2.0 + c1, c2],
    ])
    data = QuadReferenceData(s=s, t=t, area_ref=area, c1=c1, c2=c2,
                             l13=l13, l24=l24, hat_vertices=hat)
    fmap = AffineMap2(matrix=np.array([[l13[0], l13[1]], [l24[0], l24[1]]]),
                      offset=np.array([l13[2], l24[2]]))
    return data, fmap


def quad_vandermonde(c1: float) -> np.ndarray:
    """Edge means of (1, x, y, x^2) over the reference-quad edges.

    The determinant equals 8/3 for every admissible c1, which is what makes
    the edge-mean degrees of freedom unisolvent on arbitrarily distorted
    cut quads.
    """
    d = (c1 - 2.0) ** 2
    mixed = d / 6.0 + c1**2 / 6.0 + 2.0 / 3.0
    return np.array([
        [1.0, 0.0, -1.0, c1**2 / 3.0],
        [1.0, 1.0, 0.0, mixed],
        [1.0, 0.0, 1.0, d / 3.0],
        [1.0, -1.0, 0.0, mixed],
    ])


class ElementBasis:
    """Shape functions dual to edge-mean DOFs on one cell.

    Functions are stored as coefficients over the monomials
    ``(1, xi, eta)`` for triangles and ``(1, xi, eta, L^2)`` for quads,
    where ``xi = (x - xc)/d`` are centered-scaled coordinates and L is the
    physical midline function.  DOF i is the mean over local edge i
    (vertices i and i+1 of the cell).
    """

    def __init__(self, verts, coeffs, center, diam, lcoef=None):
        self.verts = np.asarray(verts, dtype=float)
        self.coeffs = coeffs          # (nmono, ndof)
        self.center = center
        self.diam = diam
        self.lcoef = lcoef            # (Lc, Lx, Ly) or None for triangles
        self.ndof = coeffs.shape[1]

    @property
    def kind(self) -> str:
        return "quad" if self.lcoef is not None else "tri"

    def _monomials(self, x, y):
        xi = (np.asarray(x, float) - self.center[0]) / self.diam
        eta = (np.asarray(y, float) - self.center[1]) / self.diam
        cols = [np.ones_like(xi), xi, eta]
        if self.lcoef is not None:
            lc, lx, ly = self.lcoef
            cols.append((lc + lx * np.asarray(x) + ly * np.asarray(y)) ** 2)
        return np.stack(cols, axis=-1)

    def values(self, x, y):
        """Basis values; shape (..., ndof)."""
        return self._monomials(x, y) @ self.coeffs

    def gradients(self, x, y):
        """Basis gradients; shape (..., ndof, 2)."""
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        zeros = np.zeros_like(x)
        ones = np.ones_like(x)
        gx = [zeros, ones / self.diam, zeros]
        gy = [zeros, zeros, ones / self.diam]
        if self.lcoef is not None:
            lc, lx, ly = self.lcoef
            lval = lc + lx * x + ly * y
            gx.append(2.0 * lval * lx)
            gy.append(2.0 * lval * ly)
        gx = np.stack(gx, axis=-1) @ self.coeffs
        gy = np.stack(gy, axis=-1) @ self.coeffs
        return np.stack([gx, gy], axis=-1)

    def edge_mean_table(self, npts: int = 2) -> np.ndarray:
        """N_i(phi_j) by Gauss quadrature; identity for an exact build."""
        lam, w = gauss_segment(npts)
        m = len(self.verts)
        table = np.empty((m, self.ndof))
        for i in range(m):
            p = self.verts[i]
            q = self.verts[(i + 1) % m]
            pts = p[None, :] + lam[:, None] * (q - p)[None, :]
            table[i] = w @ self.values(pts[:, 0], pts[:, 1])
        return table


def build_cr_basis(tri_verts) -> ElementBasis:
    """Crouzeix-Raviart basis: phi_i = 1 - 2*lambda_opposite(i)."""
    v = np.asarray(tri_verts, dtype=float)
    area2 = 2.0 * polygon_area(v)
    if abs(area2) <= 1e-14 * max(np.ptp(v[:, 0]), np.ptp(v[:, 1]), 1e-300) ** 2:
        raise DegenerateTriangle(f"triangle {v.tolist()} is degenerate")
    center = v.mean(axis=0)
    diam = max(np.linalg.norm(v[i] - v[(i + 1) % 3]) for i in range(3))
    # lambda_k is affine with lambda_k(v_j) = delta_kj; solve in (1, xi, eta).
    ones = np.ones(3)
    M = np.column_stack([ones, (v[:, 0] - center[0]) / diam, (v[:, 1] - center[1]) / diam])
    lam_coeffs = np.linalg.solve(M, np.eye(3))  # column k = coeffs of lambda_k
    coeffs = np.zeros((3, 3))
    for i in range(3):
        opp = (i + 2) % 3
        coeffs[:, i] = -2.0 * lam_coeffs[:, opp]
        coeffs[0, i] += 1.0
    return ElementBasis(v, coeffs, center, diam, lcoef=None)


def build_quad_basis(quad_verts, s: float, t: float, a1, a2, a4,
                     cond_limit: float = 1e12) -> ElementBasis:
    """Rotated-Q1-type basis on the physical cut quad.

    ``quad_verts`` is the cell's stored vertex cycle; ``a1, a2, a4`` are the
    physical positions of the labeled parent-triangle vertices from which
    the midline pullback L is built.  DOFs are edge means over the cell's
    local edges, computed with 2-point Gauss (exact for the quadratic L^2).
    """
    v = np.asarray(quad_verts, dtype=float)
    fk = affine_to_reference(a1, a2, a4)
    data, _ = midline_map(s, t)
    # L = l13 composed with the physical-to-reference map; affine in x.
    la, lb, lc = data.l13
    grad = la * fk.matrix[0] + lb * fk.matrix[1]
    const = la * fk.offset[0] + lb * fk.offset[1] + lc
    lcoef = (const, grad[0], grad[1])

    center = v.mean(axis=0)
    diam = max(np.linalg.norm(v[i] - v[(i + 1) % 4]) for i in range(4))
    lam, w = gauss_segment(2)
    vand = np.empty((4, 4))
    for i in range(4):
        p, q = v[i], v[(i + 1) % 4]
        pts = p[None, :] + lam[:, None] * (q - p)[None, :]
        xi = (pts[:, 0] - center[0]) / diam
        eta = (pts[:, 1] - center[1]) / diam
        lval = lcoef[0] + lcoef[1] * pts[:, 0] + lcoef[2] * pts[:, 1]
        vand[i] = w @ np.column_stack([np.ones(2), xi, eta, lval**2])
    cond = np.linalg.cond(vand)
    if not np.isfinite(cond) or cond > cond_limit:
        raise IllConditionedBasis(
            f"quad Vandermonde condition number {cond:.3e} exceeds {cond_limit:.1e} "
            f"(s={s}, t={t})"
        )
    coeffs = np.linalg.solve(vand, np.eye(4))
    return ElementBasis(v, coeffs, center, diam, lcoef=lcoef)


def reference_quad_basis(s: float, t: float):
    """Basis data on the reference quad for the given cut ratios.

    Returns (QuadReferenceData, coefficient matrix over (1, x, y, x^2) with
    column j holding the coefficients of phi_j).  Used by the stability
    property checks and the element debug dump.
    """
    data, _ = midline_map(s, t)
    vand = quad_vandermonde(data.c1)
    return data, np.linalg.solve(vand, np.eye(4))


def hat_quad_seminorms(s: float, t: float, degree: int = 5):
    """L2 norms and H1 seminorms of the four reference basis functions.

    Integrates over the reference quad by splitting it into two triangles;
    the integrands are polynomials of degree <= 4, so a degree-5 rule is
    exact.
    """
    data, coeffs = reference_quad_basis(s, t)
    hv = data.hat_vertices
    pts, wts = cell_quadrature(hv, degree)
    x, y = pts[:, 0], pts[:, 1]
    vals = np.stack([np.ones_like(x), x, y, x**2], axis=-1) @ coeffs
    gx = np.stack([np.zeros_like(x), np.ones_like(x), np.zeros_like(x), 2 * x], axis=-1) @ coeffs
    gy = np.stack([np.zeros_like(x), np.zeros_like(x), np.ones_like(x), np.zeros_like(x)], axis=-1) @ coeffs
    l2 = np.sqrt(wts @ vals**2)
    h1 = np.sqrt(wts @ (gx**2 + gy**2))
    return l2, h1, data
