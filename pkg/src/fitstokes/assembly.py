"""Global velocity/pressure DOFs and saddle-point assembly.

Velocity carries one DOF per mesh edge and component; sharing the edge-mean
DOF between the two incident cells is exactly the weak-continuity constraint
of the nonconforming space.  Pressure is piecewise constant on the fitted
mesh with a single Lagrange multiplier enforcing the zero weighted mean.

Gradients of all local shape functions are affine, so the viscosity form is
integrated exactly with a degree-2 rule and the divergence form with the
same points.  Triangles (the bulk of the mesh) are assembled in vectorized
batches; the few cut quads go through a per-element loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .elements import ElementBasis, build_cr_basis, build_quad_basis
from .errors import NonPositiveViscosity
from .mesh import BOUNDARY, FittedMesh
from .quadrature import cell_quadrature, gauss_segment, triangle_rule


@dataclass
class DofMap:
    """Edge-indexed velocity DOFs and cell-indexed pressure DOFs.

    Velocity DOF of edge e, component c is c * n_edges + e.  Boundary-edge
    DOFs are constrained (Dirichlet via prescribed edge means).
    """

    mesh: FittedMesh
    n_edges: int
    n_cells: int
    constrained_edges: np.ndarray
    free_edges: np.ndarray
    free_velocity: np.ndarray = field(init=False)
    constrained_velocity: np.ndarray = field(init=False)

    def __post_init__(self):
        E = self.n_edges
        self.free_velocity = np.concatenate([self.free_edges, self.free_edges + E])
        self.constrained_velocity = np.concatenate(
            [self.constrained_edges, self.constrained_edges + E])

    @property
    def n_velocity(self) -> int:
        return 2 * self.n_edges

    @property
    def n_free(self) -> int:
        return len(self.free_velocity)

    @property
    def n_pressure(self) -> int:
        return self.n_cells

    def cell_velocity_dofs(self, i: int) -> np.ndarray:
        """Global velocity DOFs of cell i: x-component block then y."""
        eids = np.asarray(self.mesh.cell_edges[i])
        return np.concatenate([eids, eids + self.n_edges])


def build_dofmap(mesh: FittedMesh) -> DofMap:
    boundary = np.flatnonzero(mesh.edge_class == BOUNDARY)
    free = np.flatnonzero(mesh.edge_class != BOUNDARY)
    return DofMap(mesh=mesh, n_edges=mesh.n_edges, n_cells=mesh.n_cells,
                  constrained_edges=boundary, free_edges=free)


def cell_basis(mesh: FittedMesh, i: int) -> ElementBasis:
    """Local edge-mean basis of cell i (CR triangle or rotated-Q1 quad)."""
    coords = mesh.cell_vertices(i)
    cell = mesh.cells[i]
    if len(cell) == 3:
        return build_cr_basis(coords)
    cut = mesh.quad_cut[i]
    v = mesh.vertices
    return build_quad_basis(coords, cut.s, cut.t, v[cut.a1], v[cut.a2], v[cut.a4])


def tri_edge_dofs(mesh: FittedMesh) -> np.ndarray:
    """Edge ids per triangle cell, aligned with mesh.tri_idx; shape (T, 3)."""
    return np.array([mesh.cell_edges[i] for i in mesh.tri_idx], dtype=np.int64)


def tri_cr_gradients(coords: np.ndarray):
    """Batched CR gradients per local edge DOF.

    coords has shape (T, 3, 2); returns (areas (T,), grads (T, 3, 2)) with
    grads[:, i] the constant gradient of the basis function of local edge i.
    """
    p0, p1, p2 = coords[:, 0], coords[:, 1], coords[:, 2]
    det = ((p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
           - (p2[:, 0] - p0[:, 0]) * (p1[:, 1] - p0[:, 1]))
    area = 0.5 * det
    grad_lam = np.empty((len(coords), 3, 2))
    grad_lam[:, 0, 0] = p1[:, 1] - p2[:, 1]
    grad_lam[:, 0, 1] = p2[:, 0] - p1[:, 0]
    grad_lam[:, 1, 0] = p2[:, 1] - p0[:, 1]
    grad_lam[:, 1, 1] = p0[:, 0] - p2[:, 0]
    grad_lam[:, 2, 0] = p0[:, 1] - p1[:, 1]
    grad_lam[:, 2, 1] = p1[:, 0] - p0[:, 0]
    grad_lam /= det[:, None, None]
    # basis of edge i is 1 - 2 lambda_{i+2}
    grads = -2.0 * grad_lam[:, [2, 0, 1], :]
    return area, grads


def cr_reference_values(degree: int):
    """CR basis values at the reference rule points; shape (nq, 3)."""
    pts, wts = triangle_rule(degree)
    lam = np.column_stack([1.0 - pts[:, 0] - pts[:, 1], pts[:, 0], pts[:, 1]])
    return pts, wts, 1.0 - 2.0 * lam[:, [2, 0, 1]]


@dataclass
class SaddleSystem:
    """Reduced saddle-point blocks plus the data to undo the reduction."""

    A: sp.csr_matrix          # free velocity x free velocity, mu-weighted
    B: sp.csr_matrix          # pressure rows x free velocity columns
    B_all: sp.csr_matrix      # pressure rows x all velocity columns
    areas: np.ndarray         # mean-constraint row (cell areas)
    rhs_u: np.ndarray
    rhs_p: np.ndarray
    boundary_values: np.ndarray  # full-length velocity vector, 0 on free DOFs
    dofmap: DofMap

    def expand_velocity(self, u_free: np.ndarray) -> np.ndarray:
        u = self.boundary_values.copy()
        u[self.dofmap.free_velocity] = u_free
        return u


def assemble(mesh: FittedMesh, dofmap: DofMap, mu1: float, mu2: float,
             f=None, g_dirichlet=None, quad_degree_rhs: int = 8) -> SaddleSystem:
    """Assemble viscosity block, divergence block, load, and boundary data.

    f and g_dirichlet are vector fields f(x, y) -> (..., 2); either may be
    None for zero data.
    """
    if mu1 <= 0.0 or mu2 <= 0.0:
        raise NonPositiveViscosity(f"viscosities must be positive, got ({mu1}, {mu2})")
    E = dofmap.n_edges
    C = dofmap.n_cells
    mu_cell = np.where(mesh.region == 1, float(mu1), float(mu2))

    rows_a, cols_a, vals_a = [], [], []
    rows_b, cols_b, vals_b = [], [], []
    load = np.zeros(2 * E)

    # --- all triangles in one batch ------------------------------------------
    if len(mesh.tri_idx):
        tcoords = mesh.vertices[mesh.tri_verts]
        tedges = tri_edge_dofs(mesh)
        area, grads = tri_cr_gradients(tcoords)
        mu_t = mu_cell[mesh.tri_idx]
        s_local = np.einsum("t,tid,tjd->tij", mu_t * area, grads, grads)
        ii = np.broadcast_to(tedges[:, :, None], s_local.shape)
        jj = np.broadcast_to(tedges[:, None, :], s_local.shape)
        for comp in range(2):
            rows_a.append((ii + comp * E).ravel())
            cols_a.append((jj + comp * E).ravel())
            vals_a.append(s_local.ravel())
        bx = -area[:, None] * grads[:, :, 0]
        by = -area[:, None] * grads[:, :, 1]
        cell_rows = np.broadcast_to(mesh.tri_idx[:, None], tedges.shape)
        rows_b.append(cell_rows.ravel())
        cols_b.append(tedges.ravel())
        vals_b.append(bx.ravel())
        rows_b.append(cell_rows.ravel())
        cols_b.append((tedges + E).ravel())
        vals_b.append(by.ravel())

        if f is not None:
            pts, wts, ref_vals = cr_reference_values(quad_degree_rhs)
            p0 = tcoords[:, 0]
            phys = (p0[:, None, :]
                    + pts[:, 0][None, :, None] * (tcoords[:, 1] - p0)[:, None, :]
                    + pts[:, 1][None, :, None] * (tcoords[:, 2] - p0)[:, None, :])
            fvals = np.asarray(f(phys[..., 0], phys[..., 1]))  # (T, nq, 2)
            w = wts[None, :] * area[:, None]
            lx = np.einsum("tq,qi->ti", w * fvals[..., 0], ref_vals)
            ly = np.einsum("tq,qi->ti", w * fvals[..., 1], ref_vals)
            np.add.at(load, tedges.ravel(), lx.ravel())
            np.add.at(load, (tedges + E).ravel(), ly.ravel())

    # --- cut quads, one at a time ---------------------------------------------
    for qi in mesh.quad_idx:
        qi = int(qi)
        basis = cell_basis(mesh, qi)
        eids = np.asarray(mesh.cell_edges[qi])
        verts = mesh.vertices[list(mesh.cells[qi])]
        pts, wts = cell_quadrature(verts, 2)
        g = basis.gradients(pts[:, 0], pts[:, 1])     # (nq, 4, 2)
        s_local = mu_cell[qi] * np.einsum("q,qid,qjd->ij", wts, g, g)
        ii = np.broadcast_to(eids[:, None], (4, 4))
        jj = np.broadcast_to(eids[None, :], (4, 4))
        for comp in range(2):
            rows_a.append((ii + comp * E).ravel())
            cols_a.append((jj + comp * E).ravel())
            vals_a.append(s_local.ravel())
        bx = -np.einsum("q,qi->i", wts, g[:, :, 0])
        by = -np.einsum("q,qi->i", wts, g[:, :, 1])
        rows_b.append(np.full(4, qi))
        cols_b.append(eids)
        vals_b.append(bx)
        rows_b.append(np.full(4, qi))
        cols_b.append(eids + E)
        vals_b.append(by)

        if f is not None:
            pts8, wts8 = cell_quadrature(verts, quad_degree_rhs)
            vals = basis.values(pts8[:, 0], pts8[:, 1])      # (nq, 4)
            fvals = np.asarray(f(pts8[:, 0], pts8[:, 1]))    # (nq, 2)
            load[eids] += (wts8[:, None] * vals).T @ fvals[:, 0]
            load[eids + E] += (wts8[:, None] * vals).T @ fvals[:, 1]

    A_full = sp.coo_matrix(
        (np.concatenate(vals_a), (np.concatenate(rows_a), np.concatenate(cols_a))),
        shape=(2 * E, 2 * E)).tocsr()
    B_full = sp.coo_matrix(
        (np.concatenate(vals_b), (np.concatenate(rows_b), np.concatenate(cols_b))),
        shape=(C, 2 * E)).tocsr()

    # --- Dirichlet data: prescribed edge means on boundary edges --------------
    gvals = np.zeros(2 * E)
    cons = dofmap.constrained_edges
    if g_dirichlet is not None and len(cons):
        lam, w = gauss_segment(4)
        pa = mesh.vertices[mesh.edges[cons, 0]]
        pb = mesh.vertices[mesh.edges[cons, 1]]
        pts = pa[:, None, :] + lam[None, :, None] * (pb - pa)[:, None, :]
        gv = np.asarray(g_dirichlet(pts[..., 0], pts[..., 1]))  # (nb, 4, 2)
        means = np.einsum("q,bqc->bc", w, gv)
        gvals[cons] = means[:, 0]
        gvals[cons + E] = means[:, 1]

    free = dofmap.free_velocity
    consv = dofmap.constrained_velocity
    A_ff = A_full[free][:, free].tocsr()
    rhs_u = load[free] - A_full[free][:, consv] @ gvals[consv]
    rhs_p = -(B_full[:, consv] @ gvals[consv])
    return SaddleSystem(A=A_ff, B=B_full[:, free].tocsr(), B_all=B_full,
                        areas=mesh.areas.copy(), rhs_u=rhs_u, rhs_p=rhs_p,
                        boundary_values=gvals, dofmap=dofmap)
