"""Command line interface: mesh | solve | convergence | infsup | element."""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import analysis, vtkio
from .assembly import assemble, build_dofmap
from .config import RunConfig, load_config
from .elements import hat_quad_seminorms, quad_vandermonde, reference_quad_basis
from .errors import (ConfigError, FitStokesError, MeshAssumptionError,
                     SolverError, TangentialContact)
from .mesh import build_fitted_mesh
from .solver import solve

EXIT_OK, EXIT_CONFIG, EXIT_MESH, EXIT_SOLVER = 0, 2, 3, 4


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fitstokes",
        description="Two-phase Stokes interface solver on fitted hybrid meshes")
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--deterministic", action="store_true",
                   help="suppress timestamps so outputs are byte-reproducible")
    p.add_argument("--solver", choices=["direct", "iterative"],
                   help="override the configured linear solver")
    p.add_argument("--tol", type=float, help="override the solver tolerance")
    p.add_argument("--dump-system", action="store_true",
                   help="write assembled blocks in MatrixMarket format")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("mesh", help="build the fitted mesh, write VTK and stats")
    sub.add_parser("solve", help="solve one level, write solution and errors")
    sub.add_parser("convergence", help="run a level sweep, write the table")
    sub.add_parser("infsup", help="estimate the inf-sup constant per level")
    el = sub.add_parser("element", help="dump reference-element diagnostics")
    el.add_argument("--s", type=float, required=True, help="cut ratio s")
    el.add_argument("--t", type=float, required=True, help="cut ratio t")
    return p


def _load(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.solver:
        cfg.solver = args.solver
    if args.tol is not None:
        if not (0.0 < args.tol <= 1e-6):
            raise ConfigError("--tol must lie in (0, 1e-6]")
        cfg.tol = args.tol
    return cfg


def _write_json(path: str, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_mesh(cfg: RunConfig, args) -> int:
    mesh = build_fitted_mesh(cfg.domain, cfg.resolve_n(), cfg.make_levelset(),
                             snap_tol=cfg.snap_tol)
    os.makedirs(args.out, exist_ok=True)
    vtkio.write_vtk_mesh(os.path.join(args.out, "mesh.vtk"), mesh,
                         deterministic=args.deterministic)
    stats = mesh.stats()
    _write_json(os.path.join(args.out, "mesh_stats.json"), stats)
    print(json.dumps(stats, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_solve(cfg: RunConfig, args) -> int:
    case = cfg.make_case()
    n = cfg.resolve_n()
    mesh = build_fitted_mesh(case.domain, n, case.levelset, snap_tol=cfg.snap_tol)
    dofmap = build_dofmap(mesh)
    system = assemble(mesh, dofmap, case.mu1, case.mu2,
                      f=case.forcing, g_dirichlet=case.dirichlet,
                      quad_degree_rhs=cfg.quad_degree_rhs)
    os.makedirs(args.out, exist_ok=True)
    if args.dump_system:
        vtkio.dump_system(os.path.join(args.out, "system"), system)
    u, p, rep = solve(system, tol=cfg.tol, method=cfg.solver)
    err_p, err_u, err_g = analysis.compute_errors(mesh, dofmap, u, p, case,
                                                  quad_degree=cfg.quad_degree_err)
    report = analysis.ErrorReport(
        one_over_h=cfg.n_to_one_over_h(n), h=1.0 / cfg.n_to_one_over_h(n), n=n,
        err_p=err_p, err_u_l2=err_u, err_u_h1=err_g,
        n_velocity_free=dofmap.n_free, n_pressure=dofmap.n_pressure, solve=rep)
    vtkio.write_vtk_solution(os.path.join(args.out, "solution.vtk"),
                             mesh, dofmap, u, p, deterministic=args.deterministic)
    _write_json(os.path.join(args.out, "errors.json"), report.as_dict())
    print(f"1/h={report.one_over_h:g}  err_p={err_p:.5e}  "
          f"err_u_L2={err_u:.5e}  err_u_H1={err_g:.5e}  "
          f"residual={rep.residual:.2e}")
    return EXIT_OK


def cmd_convergence(cfg: RunConfig, args) -> int:
    case = cfg.make_case()
    if not cfg.levels:
        raise ConfigError("config field 'levels' is required for convergence runs")
    table = analysis.convergence_study(
        case, cfg.levels, solver=cfg.solver, tol=cfg.tol,
        quad_degree_rhs=cfg.quad_degree_rhs, quad_degree_err=cfg.quad_degree_err,
        snap_tol=cfg.snap_tol)
    os.makedirs(args.out, exist_ok=True)
    csv = table.to_csv()
    with open(os.path.join(args.out, "convergence.csv"), "w") as fh:
        fh.write(csv)
    with open(os.path.join(args.out, "convergence_loglog.dat"), "w") as fh:
        fh.write(table.to_loglog())
    _write_json(os.path.join(args.out, "convergence.json"), table.as_dict())
    print(csv, end="")
    return EXIT_OK


def cmd_infsup(cfg: RunConfig, args) -> int:
    ls = cfg.make_levelset()
    rows = []
    for n in cfg.ns:
        mesh = build_fitted_mesh(cfg.domain, n, ls, snap_tol=cfg.snap_tol)
        beta = analysis.estimate_infsup(mesh)
        row = {"n": n, "beta": beta}
        if cfg.negative_control:
            row["beta_negative_control"] = analysis.infsup_negative_control(cfg.domain, n)
        rows.append(row)
    os.makedirs(args.out, exist_ok=True)
    header = "n,beta" + (",beta_negative_control" if cfg.negative_control else "")
    lines = [header]
    for row in rows:
        line = f"{row['n']},{row['beta']:.5e}"
        if cfg.negative_control:
            line += f",{row['beta_negative_control']:.5e}"
        lines.append(line)
    csv = "\n".join(lines) + "\n"
    with open(os.path.join(args.out, "infsup.csv"), "w") as fh:
        fh.write(csv)
    print(csv, end="")
    return EXIT_OK


def cmd_element(cfg: RunConfig, args) -> int:
    if not (0.0 < args.s <= args.t < 1.0):
        raise ConfigError(f"cut ratios must satisfy 0 < s <= t < 1, got s={args.s}, t={args.t}")
    data, coeffs = reference_quad_basis(args.s, args.t)
    l2, h1, _ = hat_quad_seminorms(args.s, args.t)
    vand = quad_vandermonde(data.c1)
    out = {
        "s": args.s, "t": args.t,
        "area_ref": data.area_ref, "c1": data.c1, "c2": data.c2,
        "hat_vertices": data.hat_vertices.tolist(),
        "vandermonde": vand.tolist(),
        "det": float(np.linalg.det(vand)),
        "basis_coefficients": coeffs.T.tolist(),
        "basis_l2_norms": l2.tolist(),
        "basis_h1_seminorms": h1.tolist(),
    }
    print(json.dumps(out, indent=2))
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _load(args)
        handler = {"mesh": cmd_mesh, "solve": cmd_solve,
                   "convergence": cmd_convergence, "infsup": cmd_infsup,
                   "element": cmd_element}[args.command]
        return handler(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MeshAssumptionError, TangentialContact) as exc:
        print(f"mesh assumption violated: {exc}", file=sys.stderr)
        return EXIT_MESH
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
