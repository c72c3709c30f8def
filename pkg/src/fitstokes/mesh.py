"""Background and interface-fitted hybrid meshes.

The background mesh is a uniform criss-cross-free triangulation of a
rectangle: each grid square is split by the diagonal from its lower-left to
its upper-right corner.  Cutting it against a level set produces a fitted
mesh in which every interface triangle is replaced either by two triangles
(interface through a vertex, Case I) or by a triangle plus a convex
quadrilateral (interface through two edge interiors, Case II).  The chords
between intersection points form a closed polygonal interface whose
segments are ordinary mesh edges.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    IsolatedVertexTouch,
    NonClosedInterfacePolyline,
    OnInterface,
    ThreeEdgeCut,
)
from .levelset import LevelSet, Segment
from .quadrature import polygon_area

NOT_CUT, CASE_I, CASE_II = 0, 1, 2
INTERIOR, INTERFACE, BOUNDARY = 0, 1, 2


@dataclass(frozen=True)
class BackgroundMesh:
    """Uniform triangulation of [x0,x1] x [y0,y1] with square cells."""

    domain: tuple[tuple[float, float], tuple[float, float]]
    n: int
    vertices: np.ndarray   # ((n+1)^2, 2)
    triangles: np.ndarray  # (2 n^2, 3) vertex indices, CCW

    @property
    def h(self) -> float:
        (x0, x1), _ = self.domain
        return (x1 - x0) / self.n


def build_background(domain, n: int) -> BackgroundMesh:
    """Row-major vertices; per cell: lower triangle then upper triangle."""
    if n < 1:
        raise ValueError(f"need at least one subdivision per axis, got n={n}")
    (x0, x1), (y0, y1) = domain
    hx = (x1 - x0) / n
    hy = (y1 - y0) / n
    if abs(hx - hy) > 1e-12 * max(abs(hx), abs(hy)):
        raise ValueError(f"cells must be square: hx={hx}, hy={hy}")
    xs = x0 + hx * np.arange(n + 1)
    ys = y0 + hy * np.arange(n + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (n + 1) + i

    tris = np.empty((2 * n * n, 3), dtype=np.int64)
    k = 0
    for j in range(n):
        for i in range(n):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v11, v01 = vid(i + 1, j + 1), vid(i, j + 1)
            tris[k] = (v00, v10, v11)      # below the lower-left/upper-right diagonal
            tris[k + 1] = (v00, v11, v01)  # above it
            k += 2
    vertices.setflags(write=False)
    tris.setflags(write=False)
    return BackgroundMesh(domain=tuple(map(tuple, domain)), n=n,
                          vertices=vertices, triangles=tris)


@dataclass
class CutElement:
    """Cut record for one background triangle.

    For Case II, a5 lies on edge a1-a4 at fraction t from a1 and a3 on
    edge a2-a4 at fraction s from a2, normalized so s <= t.  For Case I
    the interface passes through the vertex a2 (so a3 = a2, s = 0) and
    crosses the opposite edge a1-a4 at a5.  Cut points are stored as
    (vmin, vmax, lambda) along the sorted background edge so neighboring
    triangles share bitwise-identical locations.
    """

    background_tri: int
    case: int
    s: float = 0.0
    t: float = 0.0
    a1: int = -1
    a2: int = -1
    a4: int = -1
    cut13: tuple | None = None  # a5 on edge a1-a4
    cut24: tuple | None = None  # a3 on edge a2-a4 (None for Case I)


def _edge_point(vertices, cut):
    vmin, vmax, lam = cut
    return vertices[vmin] + lam * (vertices[vmax] - vertices[vmin])


def classify_and_cut(bg: BackgroundMesh, ls: LevelSet | None,
                     snap_tol: float = 1e-8) -> list[CutElement]:
    """Locate interface crossings and build one CutElement per triangle.

    Roots are computed once per background edge so that neighbors agree
    exactly.  Crossings within snap_tol*h of a vertex are snapped onto it,
    which converts near-degenerate quads into Case I splits.
    """
    if ls is None:
        return [CutElement(i, NOT_CUT) for i in range(len(bg.triangles))]

    verts = bg.vertices
    h = bg.h
    phi = np.asarray(ls.value(verts[:, 0], verts[:, 1]), dtype=float)
    gx, gy = ls.gradient(verts[:, 0], verts[:, 1])
    gnorm = np.hypot(np.asarray(gx, float), np.asarray(gy, float))
    touched = np.abs(phi) <= np.maximum(gnorm, 1e-30) * (snap_tol * h)

    edge_keys = set()
    for tri in bg.triangles:
        for k in range(3):
            a, b = tri[k], tri[(k + 1) % 3]
            edge_keys.add((min(a, b), max(a, b)))

    edge_roots: dict[tuple[int, int], list[float]] = {}
    for a, b in edge_keys:
        if touched[a] and touched[b]:
            continue  # edge lies along the interface near both ends
        seg = Segment(tuple(verts[a]), tuple(verts[b]))
        length = float(np.linalg.norm(verts[b] - verts[a]))
        lam_snap = snap_tol * h / length
        interior = []
        for lam, _ in ls.roots_on_segment(seg, tol=1e-14):
            if lam <= lam_snap:
                touched[a] = True
            elif lam >= 1.0 - lam_snap:
                touched[b] = True
            else:
                interior.append(lam)
        if len(interior) > 1:
            raise ThreeEdgeCut(
                f"interface crosses background edge {a}-{b} more than once; "
                "refine the background mesh (increase n)"
            )
        if interior:
            edge_roots[(a, b)] = interior

    cuts = []
    for itri, tri in enumerate(bg.triangles):
        local_edges = []
        for k in range(3):
            a, b = int(tri[k]), int(tri[(k + 1) % 3])
            local_edges.append((min(a, b), max(a, b)))
        hits = [(e, edge_roots[e][0]) for e in local_edges if e in edge_roots]
        tverts = [int(v) for v in tri if touched[v]]
        npts = len(hits) + len(tverts)

        if npts == 0:
            cuts.append(CutElement(itri, NOT_CUT))
        elif npts == 1:
            if tverts:
                cuts.append(CutElement(itri, NOT_CUT))  # grazing vertex only
            else:
                raise IsolatedVertexTouch(
                    f"triangle {itri} has a single interface crossing; "
                    "the interface geometry is inconsistent at this resolution, refine n"
                )
        elif npts == 2:
            if len(tverts) == 2:
                cuts.append(CutElement(itri, NOT_CUT))  # chord along an edge
            elif len(tverts) == 1:
                (ekey, lam) = hits[0]
                p = tverts[0]
                if p in ekey:
                    cuts.append(CutElement(itri, NOT_CUT))  # chord inside one edge
                else:
                    a1, a4 = ekey
                    cuts.append(CutElement(itri, CASE_I, s=0.0, t=lam,
                                           a1=a1, a2=p, a4=a4,
                                           cut13=(ekey[0], ekey[1], lam)))
            else:
                (e1, lam1), (e2, lam2) = hits
                shared = set(e1) & set(e2)
                if len(shared) != 1:
                    raise ThreeEdgeCut(
                        f"triangle {itri}: cut edges do not share an apex; refine n"
                    )
                apex = shared.pop()
                b1 = e1[0] if e1[1] == apex else e1[1]
                b2 = e2[0] if e2[1] == apex else e2[1]
                t1 = lam1 if e1[0] == b1 else 1.0 - lam1
                t2 = lam2 if e2[0] == b2 else 1.0 - lam2
                if t2 <= t1:  # reflection so that s <= t
                    a1, a2, s, t = b1, b2, t2, t1
                    cut13 = (e1[0], e1[1], lam1)
                    cut24 = (e2[0], e2[1], lam2)
                else:
                    a1, a2, s, t = b2, b1, t1, t2
                    cut13 = (e2[0], e2[1], lam2)
                    cut24 = (e1[0], e1[1], lam1)
                cuts.append(CutElement(itri, CASE_II, s=s, t=t,
                                       a1=a1, a2=a2, a4=apex,
                                       cut13=cut13, cut24=cut24))
        else:
            raise ThreeEdgeCut(
                f"triangle {itri} has {npts} interface crossings; refine n"
            )
    return cuts


@dataclass
class FittedMesh:
    """Hybrid triangle/quad mesh with region labels and an edge table.

    Cells are vertex tuples in counterclockwise order.  Edges are sorted
    vertex pairs; edge_cells holds the one or two incident cells (-1 for
    none).  quad_cut maps quad cell indices to their CutElement.
    """

    domain: tuple
    h: float
    vertices: np.ndarray
    cells: list[tuple[int, ...]]
    region: np.ndarray
    parent: np.ndarray
    parent_case: np.ndarray
    edges: np.ndarray
    edge_class: np.ndarray
    edge_cells: np.ndarray
    cell_edges: list[tuple[int, ...]]
    areas: np.ndarray
    quad_cut: dict[int, CutElement]
    background: BackgroundMesh
    tri_idx: np.ndarray = field(init=False)
    tri_verts: np.ndarray = field(init=False)
    quad_idx: np.ndarray = field(init=False)
    quad_verts: np.ndarray = field(init=False)

    def __post_init__(self):
        tri = [i for i, c in enumerate(self.cells) if len(c) == 3]
        quad = [i for i, c in enumerate(self.cells) if len(c) == 4]
        self.tri_idx = np.array(tri, dtype=np.int64)
        self.quad_idx = np.array(quad, dtype=np.int64)
        self.tri_verts = (np.array([self.cells[i] for i in tri], dtype=np.int64)
                          if tri else np.empty((0, 3), dtype=np.int64))
        self.quad_verts = (np.array([self.cells[i] for i in quad], dtype=np.int64)
                           if quad else np.empty((0, 4), dtype=np.int64))

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def cell_vertices(self, i: int) -> np.ndarray:
        return self.vertices[list(self.cells[i])]

    def cell_centroids(self) -> np.ndarray:
        out = np.empty((self.n_cells, 2))
        for i, c in enumerate(self.cells):
            out[i] = self.vertices[list(c)].mean(axis=0)
        return out

    def interface_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_class == INTERFACE)

    def boundary_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_class == BOUNDARY)

    def stats(self) -> dict:
        quads = self.quad_idx
        case2 = [self.quad_cut[int(i)] for i in quads]
        cut_parents = {int(p) for p, c in zip(self.parent, self.parent_case)
                       if c != NOT_CUT}
        return {
            "n_vertices": int(len(self.vertices)),
            "n_cells": int(self.n_cells),
            "n_triangles": int(len(self.tri_idx)),
            "n_quads": int(len(quads)),
            "n_edges": int(self.n_edges),
            "n_interface_edges": int(len(self.interface_edges())),
            "n_boundary_edges": int(len(self.boundary_edges())),
            "n_cut_parents": len(cut_parents),
            "min_s": float(min((c.s for c in case2), default=float("nan"))),
            "max_s": float(max((c.s for c in case2), default=float("nan"))),
            "min_t": float(min((c.t for c in case2), default=float("nan"))),
            "max_t": float(max((c.t for c in case2), default=float("nan"))),
            "min_quad_area": float(self.areas[quads].min()) if len(quads) else float("nan"),
            "total_area": float(self.areas.sum()),
            "region2_area": float(self.areas[self.region == 2].sum()),
        }


def _ccw(cell_verts, coords):
    if polygon_area(coords[list(cell_verts)]) < 0.0:
        return (cell_verts[0],) + tuple(reversed(cell_verts[1:]))
    return tuple(cell_verts)


def build_fitted(bg: BackgroundMesh, cuts: list[CutElement],
                 ls: LevelSet | None) -> FittedMesh:
    """Split cut triangles and assemble the fitted mesh with edge classes."""
    vertices = [tuple(v) for v in bg.vertices]
    new_vid: dict[tuple, int] = {}

    def vid_of(cut_key):
        if cut_key not in new_vid:
            new_vid[cut_key] = len(vertices)
            vertices.append(tuple(_edge_point(bg.vertices, cut_key)))
        return new_vid[cut_key]

    cells: list[tuple[int, ...]] = []
    parents: list[int] = []
    cases: list[int] = []
    anchors: list[int] = []    # vertex whose sign decides the cell's side
    chord_pairs: set[tuple[int, int]] = set()
    quad_cut: dict[int, CutElement] = {}

    for cut in cuts:
        tri = bg.triangles[cut.background_tri]
        if cut.case == NOT_CUT:
            cells.append(tuple(int(v) for v in tri))
            parents.append(cut.background_tri)
            cases.append(NOT_CUT)
            anchors.append(int(tri[0]))
        elif cut.case == CASE_I:
            a5 = vid_of(cut.cut13)
            for cell, anchor in (((cut.a1, cut.a2, a5), cut.a1),
                                 ((a5, cut.a2, cut.a4), cut.a4)):
                cells.append(cell)
                parents.append(cut.background_tri)
                cases.append(CASE_I)
                anchors.append(anchor)
            chord_pairs.add((min(a5, cut.a2), max(a5, cut.a2)))
        else:
            a5 = vid_of(cut.cut13)
            a3 = vid_of(cut.cut24)
            cells.append((a5, a3, cut.a4))
            parents.append(cut.background_tri)
            cases.append(CASE_II)
            anchors.append(cut.a4)
            quad_cut[len(cells)] = cut  # quad is appended next
            cells.append((cut.a1, cut.a2, a3, a5))
            parents.append(cut.background_tri)
            cases.append(CASE_II)
            anchors.append(cut.a1)
            chord_pairs.add((min(a5, a3), max(a5, a3)))

    coords = np.array(vertices)
    cells = [_ccw(c, coords) for c in cells]
    areas = np.array([polygon_area(coords[list(c)]) for c in cells])

    region = np.ones(len(cells), dtype=np.int8)
    if ls is not None:
        for i, c in enumerate(cells):
            cx, cy = coords[list(c)].mean(axis=0)
            try:
                region[i] = ls.region_of(cx, cy)
            except OnInterface:
                ax, ay = coords[anchors[i]]
                region[i] = 1 if float(ls.value(ax, ay)) > 0.0 else 2
        # A sliver centroid can land on the wrong side of the chord; the two
        # pieces of a cut parent must sit on opposite sides of the interface.
        for qi, cut in quad_cut.items():
            ti = qi - 1
            if region[qi] == region[ti]:
                region[ti] = 1 if float(ls.value(*coords[cut.a4])) > 0.0 else 2
                region[qi] = 1 if float(ls.value(*coords[cut.a1])) > 0.0 else 2

    edge_id: dict[tuple[int, int], int] = {}
    edge_cells_list: list[list[int]] = []
    cell_edges: list[tuple[int, ...]] = []
    for i, c in enumerate(cells):
        ids = []
        for k in range(len(c)):
            key = (min(c[k], c[(k + 1) % len(c)]), max(c[k], c[(k + 1) % len(c)]))
            e = edge_id.get(key)
            if e is None:
                e = len(edge_id)
                edge_id[key] = e
                edge_cells_list.append([])
            edge_cells_list[e].append(i)
            ids.append(e)
        cell_edges.append(tuple(ids))

    edges = np.array(sorted(edge_id, key=edge_id.get), dtype=np.int64).reshape(-1, 2)
    edge_cells = np.full((len(edges), 2), -1, dtype=np.int64)
    for e, incident in enumerate(edge_cells_list):
        if len(incident) > 2:
            raise IsolatedVertexTouch(f"edge {tuple(edges[e])} has {len(incident)} incident cells")
        edge_cells[e, :len(incident)] = incident

    edge_class = np.zeros(len(edges), dtype=np.int8)
    for key, e in edge_id.items():
        if key in chord_pairs:
            edge_class[e] = INTERFACE
        elif edge_cells[e, 1] < 0:
            edge_class[e] = BOUNDARY

    # The polygonal interface must form closed loops: every vertex on it has
    # exactly two incident interface edges.
    if chord_pairs:
        degree: dict[int, int] = {}
        for a, b in chord_pairs:
            degree[a] = degree.get(a, 0) + 1
            degree[b] = degree.get(b, 0) + 1
        bad = {v: d for v, d in degree.items() if d != 2}
        if bad:
            raise NonClosedInterfacePolyline(
                f"interface polyline is not closed (vertex degrees {bad}); "
                "the interface must be interior to the domain"
            )

    return FittedMesh(domain=bg.domain, h=bg.h, vertices=coords, cells=cells,
                      region=region, parent=np.array(parents, dtype=np.int64),
                      parent_case=np.array(cases, dtype=np.int8),
                      edges=edges, edge_class=edge_class, edge_cells=edge_cells,
                      cell_edges=cell_edges, areas=areas, quad_cut=quad_cut,
                      background=bg)


def build_fitted_mesh(domain, n: int, ls: LevelSet | None = None,
                      snap_tol: float = 1e-8) -> FittedMesh:
    """Convenience pipeline: background mesh, classification, fitted mesh."""
    bg = build_background(domain, n)
    cuts = classify_and_cut(bg, ls, snap_tol=snap_tol)
    return build_fitted(bg, cuts, ls)
