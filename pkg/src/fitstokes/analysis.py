"""Error norms, convergence tables, and the numerical inf-sup constant."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import (SaddleSystem, assemble, build_dofmap, cell_basis,
                       cr_reference_values, tri_cr_gradients, tri_edge_dofs)
from .errors import EigensolveFailure
from .mesh import BOUNDARY, build_background, build_fitted_mesh
from .quadrature import cell_quadrature, gauss_segment
from .solver import SolveReport, solve


@dataclass
class ErrorReport:
    one_over_h: float
    h: float
    n: int
    err_p: float
    err_u_l2: float
    err_u_h1: float
    n_velocity_free: int
    n_pressure: int
    solve: SolveReport | None = None

    def as_dict(self) -> dict:
        d = {
            "one_over_h": self.one_over_h, "h": self.h, "n": self.n,
            "err_p": self.err_p, "err_u_l2": self.err_u_l2,
            "err_u_h1": self.err_u_h1,
            "n_velocity_free": self.n_velocity_free,
            "n_pressure": self.n_pressure,
        }
        if self.solve is not None:
            d["solver"] = {"method": self.solve.method,
                           "iterations": self.solve.iterations,
                           "residual": self.solve.residual,
                           "wall_time": self.solve.wall_time}
        return d


def compute_errors(mesh, dofmap, u, p, case, quad_degree: int = 8):
    """Cellwise quadrature of the three error norms.

    Returns (err_p_L2, err_u_L2, err_u_brokenH1).  The exact fields come
    from the manufactured case with the true-subdomain viscosity; the broken
    H1 seminorm is viscosity-free.
    """
    E = dofmap.n_edges
    ux = u[:E]
    uy = u[E:]
    err_p2 = err_u2 = err_g2 = 0.0

    if len(mesh.tri_idx):
        pts, wts, ref_vals = cr_reference_values(quad_degree)
        tcoords = mesh.vertices[mesh.tri_verts]
        tedges = tri_edge_dofs(mesh)
        area, grads = tri_cr_gradients(tcoords)
        p0 = tcoords[:, 0]
        phys = (p0[:, None, :]
                + pts[:, 0][None, :, None] * (tcoords[:, 1] - p0)[:, None, :]
                + pts[:, 1][None, :, None] * (tcoords[:, 2] - p0)[:, None, :])
        w = wts[None, :] * area[:, None]

        uh = np.stack([np.einsum("ti,qi->tq", ux[tedges], ref_vals),
                       np.einsum("ti,qi->tq", uy[tedges], ref_vals)], axis=-1)
        uex = case.velocity(phys[..., 0], phys[..., 1])
        err_u2 += float(np.sum(w * np.sum((uh - uex) ** 2, axis=-1)))

        gh = np.stack([np.einsum("ti,tid->td", ux[tedges], grads),
                       np.einsum("ti,tid->td", uy[tedges], grads)], axis=-2)
        gex = case.velocity_gradient(phys[..., 0], phys[..., 1])
        diff = gh[:, None, :, :] - gex
        err_g2 += float(np.sum(w * np.sum(diff**2, axis=(-2, -1))))

        pex = case.pressure(phys[..., 0], phys[..., 1])
        err_p2 += float(np.sum(w * (p[mesh.tri_idx][:, None] - pex) ** 2))

    for qi in mesh.quad_idx:
        qi = int(qi)
        basis = cell_basis(mesh, qi)
        dofs = dofmap.cell_velocity_dofs(qi)
        uloc = u[dofs].reshape(2, -1)
        verts = mesh.vertices[list(mesh.cells[qi])]
        pts, wts = cell_quadrature(verts, quad_degree)
        vals = basis.values(pts[:, 0], pts[:, 1])
        gvals = basis.gradients(pts[:, 0], pts[:, 1])
        uh = vals @ uloc.T
        gh = np.einsum("ci,qid->qcd", uloc, gvals)
        uex = case.velocity(pts[:, 0], pts[:, 1])
        gex = case.velocity_gradient(pts[:, 0], pts[:, 1])
        pex = case.pressure(pts[:, 0], pts[:, 1])
        err_u2 += float(wts @ np.sum((uh - uex) ** 2, axis=-1))
        err_g2 += float(wts @ np.sum((gh - gex) ** 2, axis=(-2, -1)))
        err_p2 += float(wts @ (p[qi] - pex) ** 2)

    return np.sqrt(err_p2), np.sqrt(err_u2), np.sqrt(err_g2)


def run_case(case, one_over_h: float, solver: str = "direct", tol: float = 1e-10,
             quad_degree_rhs: int = 8, quad_degree_err: int = 8,
             snap_tol: float = 1e-8, mesh=None) -> ErrorReport:
    """Solve the manufactured problem at one resolution and report errors."""
    (x0, x1), _ = case.domain
    n = int(round(one_over_h * (x1 - x0)))
    if mesh is None:
        mesh = build_fitted_mesh(case.domain, n, case.levelset, snap_tol=snap_tol)
    dofmap = build_dofmap(mesh)
    system = assemble(mesh, dofmap, case.mu1, case.mu2,
                      f=case.forcing, g_dirichlet=case.dirichlet,
                      quad_degree_rhs=quad_degree_rhs)
    u, p, report = solve(system, tol=tol, method=solver)
    err_p, err_u, err_g = compute_errors(mesh, dofmap, u, p, case,
                                         quad_degree=quad_degree_err)
    return ErrorReport(one_over_h=one_over_h, h=1.0 / one_over_h, n=n,
                       err_p=err_p, err_u_l2=err_u, err_u_h1=err_g,
                       n_velocity_free=dofmap.n_free, n_pressure=dofmap.n_pressure,
                       solve=report)


@dataclass
class ConvergenceTable:
    """Per-level errors with pairwise log2 orders, in the usual table layout."""

    reports: list[ErrorReport]

    def orders(self):
        """Rows of (order_p, order_u_l2, order_u_h1); None on the first row."""
        out = [(None, None, None)]
        for prev, cur in zip(self.reports, self.reports[1:]):
            ratio = np.log2(cur.one_over_h / prev.one_over_h)
            out.append(tuple(
                float(np.log2(getattr(prev, k) / getattr(cur, k)) / ratio)
                for k in ("err_p", "err_u_l2", "err_u_h1")))
        return out

    def aggregate_slopes(self):
        """Least-squares slope of log2(err) vs log2(h) over all levels."""
        x = np.log2([r.h for r in self.reports])
        out = []
        for k in ("err_p", "err_u_l2", "err_u_h1"):
            y = np.log2([getattr(r, k) for r in self.reports])
            out.append(float(np.polyfit(x, y, 1)[0]))
        return tuple(out)

    def to_csv(self) -> str:
        lines = ["1/h,p_err,p_order,u_l2_err,u_l2_order,u_h1_err,u_h1_order"]
        for rep, (op, ou, og) in zip(self.reports, self.orders()):
            cells = [f"{rep.one_over_h:g}",
                     f"{rep.err_p:.5e}", "" if op is None else f"{op:.4f}",
                     f"{rep.err_u_l2:.5e}", "" if ou is None else f"{ou:.4f}",
                     f"{rep.err_u_h1:.5e}", "" if og is None else f"{og:.4f}"]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def to_loglog(self) -> str:
        lines = ["# h  p_err  u_l2_err  u_h1_err"]
        for rep in self.reports:
            lines.append(f"{rep.h:.16e} {rep.err_p:.16e} "
                         f"{rep.err_u_l2:.16e} {rep.err_u_h1:.16e}")
        return "\n".join(lines) + "\n"

    def as_dict(self) -> dict:
        return {"levels": [r.as_dict() for r in self.reports],
                "orders": self.orders(),
                "aggregate_slopes": self.aggregate_slopes()}


def convergence_study(case, levels, **kwargs) -> ConvergenceTable:
    """Run solve+errors over increasing 1/h levels."""
    levels = list(levels)
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError(f"levels must be strictly increasing, got {levels}")
    return ConvergenceTable([run_case(case, lvl, **kwargs) for lvl in levels])


# --- numerical inf-sup constant ------------------------------------------------

def _infsup_from_blocks(A_ff, B_f, areas) -> float:
    """sqrt of the smallest nonzero eigenvalue of B A^-1 B^T q = lam M q.

    The constant-pressure kernel (exactly one dimension on a connected mesh
    with enclosed-flow boundary conditions) is discarded.
    """
    try:
        lu = spla.splu(A_ff.tocsc())
        X = lu.solve(B_f.toarray().T)
        S = B_f @ X
        d = 1.0 / np.sqrt(areas)
        S = d[:, None] * S * d[None, :]
        lams = scipy.linalg.eigvalsh(0.5 * (S + S.T))
    except Exception as exc:
        raise EigensolveFailure(f"inf-sup eigensolve failed: {exc}") from exc
    lams = np.clip(lams, 0.0, None)
    return float(np.sqrt(lams[1]))


def estimate_infsup(mesh) -> float:
    """Inf-sup constant of the discrete pair on the given fitted mesh.

    Uses the viscosity-free energy norm (mu = 1) and homogeneous Dirichlet
    velocity, which is the setting of the stability statement.
    """
    dofmap = build_dofmap(mesh)
    system = assemble(mesh, dofmap, 1.0, 1.0)
    return _infsup_from_blocks(system.A, system.B, system.areas)


def infsup_negative_control(domain, n: int) -> float:
    """Inf-sup estimate for conforming P1 velocity x P0 pressure.

    This pair fails the LBB condition; its constant collapses under
    refinement and serves as the estimator's negative control.
    """
    bg = build_background(domain, n)
    coords = bg.vertices[bg.triangles]
    p0, p1, p2 = coords[:, 0], coords[:, 1], coords[:, 2]
    det = ((p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
           - (p2[:, 0] - p0[:, 0]) * (p1[:, 1] - p0[:, 1]))
    area = 0.5 * det
    grad = np.empty((len(coords), 3, 2))
    grad[:, 0, 0] = p1[:, 1] - p2[:, 1]
    grad[:, 0, 1] = p2[:, 0] - p1[:, 0]
    grad[:, 1, 0] = p2[:, 1] - p0[:, 1]
    grad[:, 1, 1] = p0[:, 0] - p2[:, 0]
    grad[:, 2, 0] = p0[:, 1] - p1[:, 1]
    grad[:, 2, 1] = p1[:, 0] - p0[:, 0]
    grad /= det[:, None, None]

    V = len(bg.vertices)
    T = len(bg.triangles)
    s_local = np.einsum("t,tid,tjd->tij", area, grad, grad)
    ii = np.broadcast_to(bg.triangles[:, :, None], s_local.shape)
    jj = np.broadcast_to(bg.triangles[:, None, :], s_local.shape)
    rows = np.concatenate([ii.ravel(), ii.ravel() + V])
    cols = np.concatenate([jj.ravel(), jj.ravel() + V])
    vals = np.concatenate([s_local.ravel(), s_local.ravel()])
    A = sp.coo_matrix((vals, (rows, cols)), shape=(2 * V, 2 * V)).tocsr()

    cell_rows = np.broadcast_to(np.arange(T)[:, None], bg.triangles.shape)
    bx = -area[:, None] * grad[:, :, 0]
    by = -area[:, None] * grad[:, :, 1]
    rows = np.concatenate([cell_rows.ravel(), cell_rows.ravel()])
    cols = np.concatenate([bg.triangles.ravel(), bg.triangles.ravel() + V])
    vals = np.concatenate([bx.ravel(), by.ravel()])
    B = sp.coo_matrix((vals, (rows, cols)), shape=(T, 2 * V)).tocsr()

    (x0, x1), (y0, y1) = bg.domain
    on_bd = (np.isclose(bg.vertices[:, 0], x0) | np.isclose(bg.vertices[:, 0], x1)
             | np.isclose(bg.vertices[:, 1], y0) | np.isclose(bg.vertices[:, 1], y1))
    free = np.flatnonzero(~on_bd)
    free = np.concatenate([free, free + V])
    return _infsup_from_blocks(A[free][:, free], B[:, free], area)


# --- structural diagnostics ----------------------------------------------------

def edge_jump_means(mesh, dofmap, u, npts: int = 4):
    """Max |mean of [u_h]| over interior edges, by independent quadrature."""
    E = dofmap.n_edges
    bases = {}
    worst = 0.0
    for e in range(E):
        if mesh.edge_class[e] == BOUNDARY:
            continue
        c0, c1 = mesh.edge_cells[e]
        if c1 < 0:
            continue
        pa = mesh.vertices[mesh.edges[e, 0]]
        pb = mesh.vertices[mesh.edges[e, 1]]
        lam, w = gauss_segment(npts)
        pts = pa[None, :] + lam[:, None] * (pb - pa)[None, :]
        means = []
        for ci in (int(c0), int(c1)):
            if ci not in bases:
                bases[ci] = cell_basis(mesh, ci)
            vals = bases[ci].values(pts[:, 0], pts[:, 1])
            dofs = dofmap.cell_velocity_dofs(ci).reshape(2, -1)
            means.append(np.array([w @ (vals @ u[dofs[0]]), w @ (vals @ u[dofs[1]])]))
        worst = max(worst, float(np.max(np.abs(means[0] - means[1]))))
    return worst


def cell_divergence(system: SaddleSystem, u) -> np.ndarray:
    """Per-cell integral of div(u_h); the negated B rows applied to u."""
    return -(system.B_all @ u)
