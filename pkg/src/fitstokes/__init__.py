"""fitstokes: two-phase Stokes solver on interface-fitted hybrid meshes.

Velocity uses Crouzeix-Raviart triangles plus a rotated-Q1-type element on
the cut quadrilaterals; pressure is piecewise constant.  The pair is
inf-sup stable without stabilization terms even on degenerate cut cells.
"""

from .analysis import (ConvergenceTable, ErrorReport, compute_errors,
                       convergence_study, estimate_infsup,
                       infsup_negative_control, run_case)
from .assembly import DofMap, SaddleSystem, assemble, build_dofmap, cell_basis
from .elements import (AffineMap2, ElementBasis, QuadReferenceData,
                       affine_to_reference, build_cr_basis, build_quad_basis,
                       midline_map, quad_vandermonde)
from .levelset import (CircleLevelSet, LevelSet, PolynomialLevelSet, Segment,
                       make_levelset)
from .manufactured import ManufacturedCase, PatchCase, make_case
from .mesh import (BackgroundMesh, CutElement, FittedMesh, build_background,
                   build_fitted, build_fitted_mesh, classify_and_cut)
from .quadrature import cell_quadrature, edge_mean, triangle_rule
from .solver import SolveReport, solve

__all__ = [
    "AffineMap2", "BackgroundMesh", "CircleLevelSet", "ConvergenceTable",
    "CutElement", "DofMap", "ElementBasis", "ErrorReport", "FittedMesh",
    "LevelSet", "ManufacturedCase", "PatchCase", "PolynomialLevelSet",
    "QuadReferenceData", "SaddleSystem", "Segment", "SolveReport",
    "affine_to_reference", "assemble", "build_background", "build_cr_basis",
    "build_dofmap", "build_fitted", "build_fitted_mesh", "build_quad_basis",
    "cell_basis", "cell_quadrature", "classify_and_cut", "compute_errors",
    "convergence_study", "edge_mean", "estimate_infsup",
    "infsup_negative_control", "make_case", "make_levelset", "midline_map",
    "quad_vandermonde", "run_case", "solve", "triangle_rule",
]

__version__ = "0.1.0"
