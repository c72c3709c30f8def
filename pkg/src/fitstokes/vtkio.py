"""Legacy-VTK ASCII output and MatrixMarket dumps."""

from __future__ import annotations

import datetime
import os

import numpy as np
import scipy.io

from .assembly import cell_basis

VTK_TRIANGLE, VTK_QUAD = 5, 9


def _header(title: str, deterministic: bool) -> str:
    if deterministic:
        stamp = title
    else:
        stamp = f"{title} ({datetime.datetime.now().isoformat(timespec='seconds')})"
    return f"# vtk DataFile Version 2.0\n{stamp}\nASCII\nDATASET UNSTRUCTURED_GRID\n"


def _grid_blocks(mesh) -> str:
    out = [f"POINTS {len(mesh.vertices)} double"]
    for x, y in mesh.vertices:
        out.append(f"{x:.16g} {y:.16g} 0")
    size = sum(len(c) + 1 for c in mesh.cells)
    out.append(f"CELLS {mesh.n_cells} {size}")
    for c in mesh.cells:
        out.append(f"{len(c)} " + " ".join(str(v) for v in c))
    out.append(f"CELL_TYPES {mesh.n_cells}")
    for c in mesh.cells:
        out.append(str(VTK_TRIANGLE if len(c) == 3 else VTK_QUAD))
    return "\n".join(out) + "\n"


def _cell_scalars(name: str, values, kind: str = "int") -> str:
    out = [f"SCALARS {name} {kind} 1", "LOOKUP_TABLE default"]
    fmt = (lambda v: str(int(v))) if kind == "int" else (lambda v: f"{v:.16g}")
    out.extend(fmt(v) for v in values)
    return "\n".join(out) + "\n"


def write_vtk_mesh(path, mesh, deterministic: bool = False):
    """Fitted mesh with region/parent/case cell data."""
    with open(path, "w") as fh:
        fh.write(_header("fitstokes fitted mesh", deterministic))
        fh.write(_grid_blocks(mesh))
        fh.write(f"CELL_DATA {mesh.n_cells}\n")
        fh.write(_cell_scalars("region", mesh.region))
        fh.write(_cell_scalars("parent", mesh.parent))
        fh.write(_cell_scalars("case", mesh.parent_case))


def vertex_velocity(mesh, dofmap, u) -> np.ndarray:
    """Average the per-cell nonconforming velocity at mesh vertices."""
    acc = np.zeros((len(mesh.vertices), 2))
    cnt = np.zeros(len(mesh.vertices))
    for i, cell in enumerate(mesh.cells):
        basis = cell_basis(mesh, i)
        verts = mesh.vertices[list(cell)]
        vals = basis.values(verts[:, 0], verts[:, 1])
        dofs = dofmap.cell_velocity_dofs(i).reshape(2, -1)
        acc[list(cell), 0] += vals @ u[dofs[0]]
        acc[list(cell), 1] += vals @ u[dofs[1]]
        cnt[list(cell)] += 1.0
    return acc / np.maximum(cnt, 1.0)[:, None]


def write_vtk_solution(path, mesh, dofmap, u, p, deterministic: bool = False):
    """Solution fields: vertex velocity (nonconforming reconstruction) and
    cellwise pressure."""
    uvtx = vertex_velocity(mesh, dofmap, u)
    with open(path, "w") as fh:
        fh.write(_header("fitstokes solution; velocity is a nonconforming "
                         "vertex reconstruction from edge means", deterministic))
        fh.write(_grid_blocks(mesh))
        fh.write(f"POINT_DATA {len(mesh.vertices)}\n")
        fh.write("VECTORS velocity double\n")
        for vx, vy in uvtx:
            fh.write(f"{vx:.16g} {vy:.16g} 0\n")
        fh.write(f"CELL_DATA {mesh.n_cells}\n")
        fh.write(_cell_scalars("pressure", p, kind="double"))
        fh.write(_cell_scalars("region", mesh.region))


def dump_system(outdir, system):
    """MatrixMarket coordinate dumps of the reduced blocks and right sides."""
    os.makedirs(outdir, exist_ok=True)
    scipy.io.mmwrite(os.path.join(outdir, "A.mtx"), system.A)
    scipy.io.mmwrite(os.path.join(outdir, "B.mtx"), system.B)
    scipy.io.mmwrite(os.path.join(outdir, "rhs_u.mtx"),
                     system.rhs_u[:, None])
    scipy.io.mmwrite(os.path.join(outdir, "rhs_p.mtx"),
                     system.rhs_p[:, None])
    scipy.io.mmwrite(os.path.join(outdir, "areas.mtx"),
                     system.areas[:, None])
