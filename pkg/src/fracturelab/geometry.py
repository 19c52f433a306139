"""Meshes, crack sets, regions, and admissible vector fields.

Domains are open intervals (1D) or polygonal open sets (2D) discretized by
simplicial meshes.  Cracks live on the mesh skeleton: a 2D crack is a union of
simple edge paths, a 1D crack is a finite set of interior break nodes.  Vector
fields over the domain drive both the configurational-force quadratures and
the flow maps used for difference quotients, so they carry enough structure to
be evaluated analytically at arbitrary points and sampled at mesh nodes.

Everything here is plain geometry; energies and elasticity live elsewhere.
All objects are immutable after construction (derived structures are cached,
never mutated), which keeps them safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np


class GeometryError(ValueError):
    """Raised for invalid meshes, crack paths, or region parameters."""


# ---------------------------------------------------------------------------
# Mesh
# ---------------------------------------------------------------------------


@dataclass
class Mesh:
    """Simplicial mesh of the reference domain.

    nodes:     (n_nodes, dim) float coordinates, dim in {1, 2}
    elements:  (n_elems, dim+1) int node ids, 2D triangles counterclockwise
    boundary:  (n_facets, dim) int node ids of boundary facets
    boundary_markers: (n_facets,) int labels (sides of the rectangle etc.)
    """

    nodes: np.ndarray
    elements: np.ndarray
    boundary: np.ndarray
    boundary_markers: np.ndarray

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        if self.nodes.ndim == 1:
            self.nodes = self.nodes[:, None]
        self.elements = np.asarray(self.elements, dtype=np.int64)
        self.boundary = np.asarray(self.boundary, dtype=np.int64)
        if self.boundary.ndim == 1:
            self.boundary = self.boundary[:, None]
        self.boundary_markers = np.asarray(self.boundary_markers, dtype=np.int64)
        if self.elements.shape[1] != self.dim + 1:
            raise GeometryError(
                f"elements have {self.elements.shape[1]} nodes each, "
                f"expected {self.dim + 1} for dim {self.dim}")
        for arr in (self.nodes, self.elements, self.boundary, self.boundary_markers):
            arr.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    @cached_property
    def element_volumes(self) -> np.ndarray:
        """Triangle areas (2D) or segment lengths (1D), all positive."""
        if self.dim == 1:
            a = self.nodes[self.elements[:, 0], 0]
            b = self.nodes[self.elements[:, 1], 0]
            vol = b - a
        else:
            p = self.nodes[self.elements]
            vol = 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                         - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))
        if np.any(vol <= 0):
            raise GeometryError("degenerate or misoriented element")
        vol.setflags(write=False)
        return vol

    @cached_property
    def shape_gradients(self) -> np.ndarray:
        """P1 basis gradients per element: (n_elems, dim+1, dim)."""
        if self.dim == 1:
            inv_l = 1.0 / self.element_volumes
            grad = np.stack([-inv_l, inv_l], axis=1)[:, :, None]
        else:
            p = self.nodes[self.elements]
            two_a = 2.0 * self.element_volumes
            gx = np.stack([p[:, 1, 1] - p[:, 2, 1],
                           p[:, 2, 1] - p[:, 0, 1],
                           p[:, 0, 1] - p[:, 1, 1]], axis=1)
            gy = np.stack([p[:, 2, 0] - p[:, 1, 0],
                           p[:, 0, 0] - p[:, 2, 0],
                           p[:, 1, 0] - p[:, 0, 0]], axis=1)
            grad = np.stack([gx, gy], axis=2) / two_a[:, None, None]
        grad.setflags(write=False)
        return grad

    @cached_property
    def barycenters(self) -> np.ndarray:
        bc = self.nodes[self.elements].mean(axis=1)
        bc.setflags(write=False)
        return bc

    @cached_property
    def edges(self) -> frozenset[tuple[int, int]]:
        """All element edges as sorted node pairs (2D); empty in 1D."""
        if self.dim == 1:
            return frozenset()
        out = set()
        for tri in self.elements:
            a, b, c = int(tri[0]), int(tri[1]), int(tri[2])
            out.add((min(a, b), max(a, b)))
            out.add((min(b, c), max(b, c)))
            out.add((min(a, c), max(a, c)))
        return frozenset(out)

    @cached_property
    def node_neighbors(self) -> dict[int, tuple[int, ...]]:
        """Adjacency over element edges (1D: over segments)."""
        adj: dict[int, set[int]] = {i: set() for i in range(self.n_nodes)}
        if self.dim == 1:
            for a, b in self.elements:
                adj[int(a)].add(int(b))
                adj[int(b)].add(int(a))
        else:
            for a, b in self.edges:
                adj[a].add(b)
                adj[b].add(a)
        return {k: tuple(sorted(v)) for k, v in adj.items()}

    @cached_property
    def edge_elements(self) -> dict[tuple[int, int], tuple[int, ...]]:
        """Map sorted edge -> ids of incident elements (2D only)."""
        out: dict[tuple[int, int], list[int]] = {}
        if self.dim == 1:
            return {}
        for t, tri in enumerate(self.elements):
            a, b, c = int(tri[0]), int(tri[1]), int(tri[2])
            for e in ((min(a, b), max(a, b)), (min(b, c), max(b, c)),
                      (min(a, c), max(a, c))):
                out.setdefault(e, []).append(t)
        return {k: tuple(v) for k, v in out.items()}

    @cached_property
    def node_elements(self) -> dict[int, tuple[int, ...]]:
        out: dict[int, list[int]] = {i: [] for i in range(self.n_nodes)}
        for t, el in enumerate(self.elements):
            for v in el:
                out[int(v)].append(t)
        return {k: tuple(v) for k, v in out.items()}

    @cached_property
    def boundary_nodes(self) -> frozenset[int]:
        return frozenset(int(v) for facet in self.boundary for v in facet)

    @cached_property
    def interior_nodes(self) -> frozenset[int]:
        return frozenset(range(self.n_nodes)) - self.boundary_nodes

    @cached_property
    def h(self) -> float:
        """Mesh size: largest element diameter."""
        if self.dim == 1:
            return float(self.element_volumes.max())
        p = self.nodes[self.elements]
        d01 = np.linalg.norm(p[:, 0] - p[:, 1], axis=1)
        d12 = np.linalg.norm(p[:, 1] - p[:, 2], axis=1)
        d02 = np.linalg.norm(p[:, 0] - p[:, 2], axis=1)
        return float(np.max(np.stack([d01, d12, d02])))

    @cached_property
    def _locator(self) -> "_CellLocator":
        return _CellLocator(self)

    def locate(self, points: np.ndarray) -> np.ndarray:
        """Element id containing each point, -1 if outside the mesh."""
        return self._locator.locate(np.atleast_2d(np.asarray(points, dtype=float)))

    def contains(self, points: np.ndarray) -> np.ndarray:
        return self.locate(points) >= 0


class _CellLocator:
    """Uniform-grid point location over mesh elements."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        pts = mesh.nodes
        self.lo = pts.min(axis=0)
        self.hi = pts.max(axis=0)
        span = np.maximum(self.hi - self.lo, 1e-300)
        n_cells = max(1, int(math.sqrt(mesh.n_elements)) if mesh.dim == 2
                      else mesh.n_elements)
        self.nbin = max(1, min(n_cells, 512))
        self.size = span / self.nbin
        self.bins: dict[tuple, list[int]] = {}
        elem_pts = pts[mesh.elements]
        lo_idx = self._idx(elem_pts.min(axis=1))
        hi_idx = self._idx(elem_pts.max(axis=1))
        for t in range(mesh.n_elements):
            ranges = [range(lo_idx[t, d], hi_idx[t, d] + 1)
                      for d in range(mesh.dim)]
            if mesh.dim == 1:
                for i in ranges[0]:
                    self.bins.setdefault((i,), []).append(t)
            else:
                for i in ranges[0]:
                    for j in ranges[1]:
                        self.bins.setdefault((i, j), []).append(t)

    def _idx(self, pts):
        idx = np.floor((pts - self.lo) / self.size).astype(int)
        return np.clip(idx, 0, self.nbin - 1)

    def locate(self, points: np.ndarray) -> np.ndarray:
        mesh = self.mesh
        out = np.full(points.shape[0], -1, dtype=np.int64)
        idx = self._idx(points)
        tol = -1e-12
        for p in range(points.shape[0]):
            key = tuple(idx[p])
            for t in self.bins.get(key, ()):
                lam = barycentric(mesh, t, points[p])
                if lam.min() >= tol:
                    out[p] = t
                    break
        return out


def barycentric(mesh: Mesh, elem: int, point: np.ndarray) -> np.ndarray:
    """Barycentric coordinates of a point in an element."""
    nodes = mesh.nodes[mesh.elements[elem]]
    if mesh.dim == 1:
        a, b = nodes[0, 0], nodes[1, 0]
        s = (point[0] - a) / (b - a)
        return np.array([1.0 - s, s])
    v0 = nodes[1] - nodes[0]
    v1 = nodes[2] - nodes[0]
    d = point - nodes[0]
    det = v0[0] * v1[1] - v0[1] * v1[0]
    l1 = (d[0] * v1[1] - d[1] * v1[0]) / det
    l2 = (v0[0] * d[1] - v0[1] * d[0]) / det
    return np.array([1.0 - l1 - l2, l1, l2])


# ---------------------------------------------------------------------------
# Mesh builders
# ---------------------------------------------------------------------------


def build_interval_mesh(length: float, resolution: int) -> Mesh:
    """Uniform mesh of the open interval (0, length).

    resolution = segments per unit length; needs at least one interior node.
    """
    if length <= 0:
        raise GeometryError("length must be positive")
    n = int(round(length * resolution))
    if n < 2:
        raise GeometryError(
            f"resolution {resolution} gives {n} segment(s); need an interior node")
    nodes = np.linspace(0.0, length, n + 1)[:, None]
    elements = np.stack([np.arange(n), np.arange(1, n + 1)], axis=1)
    boundary = np.array([[0], [n]])
    markers = np.array([1, 2])
    return Mesh(nodes, elements, boundary, markers)


def build_rect_mesh(width: float, height: float, resolution: int,
                    pattern: str = "alternate") -> Mesh:
    """Structured triangulation of (0,width) x (0,height).

    resolution = cells per unit length.  pattern "alternate" flips the cell
    diagonal per checkerboard parity so the mesh has no preferred direction
    and mirrors across grid midlines; "uniform" keeps every diagonal parallel,
    which deliberately breaks the mirror symmetry at the element level (the
    nodal stiffness is the same either way).  Boundary markers: bottom 1,
    right 2, top 3, left 4.
    """
    if width <= 0 or height <= 0:
        raise GeometryError("width and height must be positive")
    if pattern not in ("alternate", "uniform"):
        raise GeometryError(f"unknown diagonal pattern {pattern!r}")
    nx = int(round(width * resolution))
    ny = int(round(height * resolution))
    if nx < 2 or ny < 2:
        raise GeometryError(
            f"resolution {resolution} gives a {nx}x{ny} grid; "
            "need at least one interior node")
    xs = np.linspace(0.0, width, nx + 1)
    ys = np.linspace(0.0, height, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    nodes = np.stack([X.ravel(), Y.ravel()], axis=1)

    def nid(i, j):
        return i * (ny + 1) + j

    tris = []
    for i in range(nx):
        for j in range(ny):
            a, b = nid(i, j), nid(i + 1, j)
            c, d = nid(i + 1, j + 1), nid(i, j + 1)
            if pattern == "uniform" or (i + j) % 2 == 0:
                tris.append((a, b, c))
                tris.append((a, c, d))
            else:
                tris.append((a, b, d))
                tris.append((b, c, d))
    facets, markers = [], []
    for i in range(nx):
        facets.append((nid(i, 0), nid(i + 1, 0)))
        markers.append(1)
        facets.append((nid(i, ny), nid(i + 1, ny)))
        markers.append(3)
    for j in range(ny):
        facets.append((nid(nx, j), nid(nx, j + 1)))
        markers.append(2)
        facets.append((nid(0, j), nid(0, j + 1)))
        markers.append(4)
    return Mesh(nodes, np.array(tris), np.array(facets), np.array(markers))


def build_slit_disk_mesh(radius: float = 1.0, h: float = 1.0 / 64.0
                         ) -> tuple[Mesh, list[int]]:
    """Polar mesh of a disk with an edge path along the ray theta = pi.

    Returns (mesh, slit_path) where slit_path runs from the rim to the center
    node, ready for crack_from_path.  Ring spacing equals h; the angular count
    keeps arc length comparable to h in the midradius band.
    """
    if radius <= 0 or h <= 0:
        raise GeometryError("radius and h must be positive")
    n_r = int(round(radius / h))
    if n_r < 2:
        raise GeometryError("h too coarse for the disk radius")
    n_t = 2 * int(math.ceil(math.pi * n_r / 2))
    dr = radius / n_r
    dth = 2.0 * math.pi / n_t

    # node 0 at the center; ring i (1-based) has n_t nodes starting at theta=-pi
    def nid(i, j):
        return 1 + (i - 1) * n_t + (j % n_t)

    coords = [(0.0, 0.0)]
    for i in range(1, n_r + 1):
        r = i * dr
        for j in range(n_t):
            th = -math.pi + j * dth
            coords.append((r * math.cos(th), r * math.sin(th)))
    tris = []
    for j in range(n_t):
        tris.append((0, nid(1, j), nid(1, j + 1)))
    for i in range(1, n_r):
        for j in range(n_t):
            a, b = nid(i, j), nid(i + 1, j)
            c, d = nid(i + 1, j + 1), nid(i, j + 1)
            if (i + j) % 2 == 0:
                tris.extend([(a, b, c), (a, c, d)])
            else:
                tris.extend([(a, b, d), (b, c, d)])
    facets = [(nid(n_r, j), nid(n_r, j + 1)) for j in range(n_t)]
    markers = [1] * len(facets)
    mesh = Mesh(np.array(coords), np.array(tris), np.array(facets),
                np.array(markers))
    slit_path = [nid(i, 0) for i in range(n_r, 0, -1)] + [0]
    return mesh, slit_path


# ---------------------------------------------------------------------------
# Mesh text I/O (whitespace-delimited, sectioned)
# ---------------------------------------------------------------------------


def write_mesh(path: str, mesh: Mesh) -> None:
    lines = ["nodes"]
    for i, p in enumerate(mesh.nodes):
        lines.append(f"{i} " + " ".join(repr(float(c)) for c in p))
    lines.append("elements")
    for i, el in enumerate(mesh.elements):
        lines.append(f"{i} " + " ".join(str(int(v)) for v in el))
    lines.append("boundary")
    for i, (facet, m) in enumerate(zip(mesh.boundary, mesh.boundary_markers)):
        lines.append(f"{i} " + " ".join(str(int(v)) for v in facet)
                     + f" {int(m)}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def read_mesh(path: str) -> Mesh:
    sections: dict[str, list[list[str]]] = {"nodes": [], "elements": [],
                                            "boundary": []}
    current = None
    with open(path) as f:
        for raw in f:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line in sections:
                current = line
                continue
            if current is None:
                raise GeometryError(f"mesh file {path}: data before any section")
            sections[current].append(line.split())
    if not sections["nodes"] or not sections["elements"]:
        raise GeometryError(f"mesh file {path}: missing nodes or elements")
    nodes = np.array([[float(c) for c in row[1:]] for row in sections["nodes"]])
    elements = np.array([[int(c) for c in row[1:]]
                         for row in sections["elements"]])
    brows = sections["boundary"]
    if brows:
        boundary = np.array([[int(c) for c in row[1:-1]] for row in brows])
        markers = np.array([int(row[-1]) for row in brows])
    else:
        boundary = np.zeros((0, nodes.shape[1]), dtype=int)
        markers = np.zeros(0, dtype=int)
    return Mesh(nodes, elements, boundary, markers)


# ---------------------------------------------------------------------------
# Crack sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CrackSet:
    """Union of crack components on the mesh skeleton.

    2D components are simple node paths along mesh edges; 1D components are
    single interior break nodes.  `required` optionally points at a crack that
    must stay contained in this one (the initial crack of an evolution).
    """

    mesh: Mesh
    components: tuple[tuple[int, ...], ...]
    required: "CrackSet | None" = None

    @cached_property
    def nodes(self) -> frozenset[int]:
        return frozenset(v for comp in self.components for v in comp)

    @cached_property
    def edge_set(self) -> frozenset[tuple[int, int]]:
        out = set()
        for comp in self.components:
            for a, b in zip(comp[:-1], comp[1:]):
                out.add((min(a, b), max(a, b)))
        return frozenset(out)

    @cached_property
    def _degree(self) -> dict[int, int]:
        deg = {v: 0 for v in self.nodes}
        for a, b in self.edge_set:
            deg[a] += 1
            deg[b] += 1
        return deg

    @cached_property
    def tips(self) -> tuple[int, ...]:
        """Free endpoints dS: where the crack can grow.

        Degree rule: interior nodes of crack-graph degree 1 (2D) or isolated
        break nodes (1D).  Boundary nodes and junctions are excluded.
        """
        bnodes = self.mesh.boundary_nodes
        if self.mesh.dim == 1:
            found = [v for v in sorted(self.nodes)
                     if self._degree[v] == 0 and v not in bnodes]
        else:
            found = [v for v in sorted(self.nodes)
                     if self._degree[v] == 1 and v not in bnodes]
        return tuple(found)

    @cached_property
    def tips_by_path(self) -> tuple[int, ...]:
        """Same tip set computed from path endpoints; cross-checks `tips`."""
        bnodes = self.mesh.boundary_nodes
        ends: dict[int, int] = {}
        for comp in self.components:
            for v in {comp[0], comp[-1]}:
                ends[v] = ends.get(v, 0) + 1
        found = []
        for v in sorted(ends):
            if v in bnodes:
                continue
            if self._degree[v] > 1:
                continue  # junction or shared endpoint
            if ends[v] == 1 or self._degree[v] == 0:
                found.append(v)
        return tuple(found)

    def length(self) -> float:
        """Surface measure: total edge length (2D) or break count (1D)."""
        if self.mesh.dim == 1:
            return float(len(self.nodes))
        pts = self.mesh.nodes
        return float(sum(np.linalg.norm(pts[a] - pts[b])
                         for a, b in sorted(self.edge_set)))

    def issubset(self, other: "CrackSet") -> bool:
        if self.mesh.dim == 1:
            return self.nodes <= other.nodes
        return self.edge_set <= other.edge_set and self.nodes <= other.nodes

    def is_empty(self) -> bool:
        return not self.components

    def tip_tangent(self, tip: int) -> np.ndarray:
        """Unit outward direction at a tip: along its single crack edge."""
        if self.mesh.dim == 1:
            raise GeometryError("1D break nodes have no tangent direction")
        nbrs = [e for e in self.edge_set if tip in e]
        if len(nbrs) != 1:
            raise GeometryError(f"node {tip} is not a tip")
        a, b = nbrs[0]
        prev = b if a == tip else a
        d = self.mesh.nodes[tip] - self.mesh.nodes[prev]
        return d / np.linalg.norm(d)

    def slide_direction(self, v: int) -> np.ndarray | None:
        """Unit direction a tangential field may take at a crack node.

        Along straight runs this is the common edge direction (orientation
        fixed by sorted neighbors); at kinks and junctions a tangential
        field must vanish, so None is returned.
        """
        nbrs = sorted(w for e in self.edge_set for w in e if v in e and w != v)
        if not nbrs:
            return None
        pts = self.mesh.nodes
        dirs = []
        for w in nbrs:
            e = pts[w] - pts[v]
            dirs.append(e / np.linalg.norm(e))
        if len(dirs) == 1:
            return dirs[0]
        if len(dirs) == 2:
            cross = dirs[0][0] * dirs[1][1] - dirs[0][1] * dirs[1][0]
            if abs(cross) <= 1e-12:
                return dirs[0]
        return None

    def describe(self) -> str:
        return "crack[" + "; ".join(
            "-".join(str(v) for v in comp) for comp in self.components) + "]"


def _validate_path(mesh: Mesh, path: Sequence[int]) -> tuple[int, ...]:
    path = tuple(int(v) for v in path)
    if len(set(path)) != len(path):
        raise GeometryError(f"crack path repeats a node: {path}")
    for v in path:
        if not (0 <= v < mesh.n_nodes):
            raise GeometryError(f"crack path node {v} outside the mesh")
    if mesh.dim == 1:
        if len(path) != 1:
            raise GeometryError("1D crack components are single break nodes")
        if path[0] in mesh.boundary_nodes:
            raise GeometryError("1D break node must be interior")
        return path
    if len(path) < 2:
        raise GeometryError("2D crack components need at least one edge")
    for a, b in zip(path[:-1], path[1:]):
        if (min(a, b), max(a, b)) not in mesh.edges:
            raise GeometryError(f"crack path jumps a non-edge: {a}-{b}")
    return path


def crack_from_path(mesh: Mesh, path: Sequence[int],
                    required: CrackSet | None = None) -> CrackSet:
    """Single-component crack along a simple node path."""
    return CrackSet(mesh, (_validate_path(mesh, path),), required)


def crack_from_paths(mesh: Mesh, paths: Iterable[Sequence[int]],
                     required: CrackSet | None = None) -> CrackSet:
    """Multi-component crack.  Components may share endpoint nodes
    (junctions) but never edges."""
    comps = tuple(_validate_path(mesh, p) for p in paths)
    seen_edges: set[tuple[int, int]] = set()
    for comp in comps:
        for a, b in zip(comp[:-1], comp[1:]):
            e = (min(a, b), max(a, b))
            if e in seen_edges:
                raise GeometryError(f"components share edge {e}")
            seen_edges.add(e)
    if mesh.dim == 1 and len({c[0] for c in comps}) != len(comps):
        raise GeometryError("duplicate 1D break node")
    return CrackSet(mesh, comps, required)


def empty_crack(mesh: Mesh) -> CrackSet:
    return CrackSet(mesh, ())


def extend_crack(crack: CrackSet, tip: int, new_node: int) -> CrackSet:
    """Grow one component by an edge at a tip (2D)."""
    mesh = crack.mesh
    if mesh.dim == 1:
        raise GeometryError("1D cracks grow by adding break nodes, not edges")
    if tip not in crack.tips:
        raise GeometryError(f"node {tip} is not a tip of {crack.describe()}")
    e = (min(tip, new_node), max(tip, new_node))
    if e not in mesh.edges:
        raise GeometryError(f"{tip}-{new_node} is not a mesh edge")
    if new_node in crack.nodes:
        raise GeometryError("extension would self-intersect")
    comps = []
    for comp in crack.components:
        if comp[-1] == tip:
            comps.append(comp + (new_node,))
        elif comp[0] == tip:
            comps.append((new_node,) + comp)
        else:
            comps.append(comp)
    return CrackSet(mesh, tuple(comps), crack.required)


def add_break_node(crack: CrackSet, node: int) -> CrackSet:
    """Grow a 1D crack by one interior break node."""
    mesh = crack.mesh
    if mesh.dim != 1:
        raise GeometryError("add_break_node is 1D only")
    if node in crack.nodes:
        return crack
    comp = _validate_path(mesh, (node,))
    comps = tuple(sorted(crack.components + (comp,)))
    return CrackSet(mesh, comps, crack.required)


# ---------------------------------------------------------------------------
# Regions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Region:
    """Subset of the domain realized as a cell set plus a point predicate."""

    mesh: Mesh
    kind: str                      # whole | ball | cells | tubular
    cells: np.ndarray
    center: np.ndarray | None = None
    r: float = 0.0
    seeds: np.ndarray | None = None   # tubular: the tip points

    def __post_init__(self):
        object.__setattr__(self, "cells",
                           np.asarray(self.cells, dtype=np.int64))
        self.cells.setflags(write=False)

    def contains_points(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == "whole":
            return np.ones(pts.shape[0], dtype=bool)
        if self.kind == "ball":
            return np.linalg.norm(pts - self.center, axis=1) <= self.r
        if self.kind == "tubular":
            if self.seeds is None or len(self.seeds) == 0:
                return np.zeros(pts.shape[0], dtype=bool)
            d = np.min(np.linalg.norm(
                pts[:, None, :] - self.seeds[None, :, :], axis=2), axis=1)
            return d <= self.r
        elem = self.mesh.locate(pts)
        cellset = set(int(c) for c in self.cells)
        return np.array([e >= 0 and int(e) in cellset for e in elem])

    def volume(self) -> float:
        return float(self.mesh.element_volumes[self.cells].sum())


def whole_region(mesh: Mesh) -> Region:
    return Region(mesh, "whole", np.arange(mesh.n_elements))


def ball_region(mesh: Mesh, center: Sequence[float], r: float) -> Region:
    if r <= 0:
        raise GeometryError("ball radius must be positive")
    center = np.asarray(center, dtype=float)
    d = np.linalg.norm(mesh.barycenters - center, axis=1)
    return Region(mesh, "ball", np.nonzero(d <= r)[0], center=center, r=r)


def cells_region(mesh: Mesh, cells: Sequence[int]) -> Region:
    cells = np.unique(np.asarray(cells, dtype=np.int64))
    if len(cells) and (cells.min() < 0 or cells.max() >= mesh.n_elements):
        raise GeometryError("cell index out of range")
    return Region(mesh, "cells", cells)


def tubular_region(crack: CrackSet, restrict: Region, r: float) -> Region:
    """Cells whose barycenter lies within r of the crack tips inside a region."""
    if r <= 0:
        raise GeometryError("tube radius must be positive")
    mesh = crack.mesh
    tip_pts = [mesh.nodes[t] for t in crack.tips
               if restrict.contains_points(mesh.nodes[t][None, :])[0]]
    if not tip_pts:
        return Region(mesh, "tubular", np.zeros(0, dtype=np.int64),
                      r=r, seeds=np.zeros((0, mesh.dim)))
    seeds = np.stack(tip_pts)
    d = np.min(np.linalg.norm(
        mesh.barycenters[:, None, :] - seeds[None, :, :], axis=2), axis=1)
    return Region(mesh, "tubular", np.nonzero(d <= r)[0], r=r, seeds=seeds)


def dilate(crack: CrackSet, center: Sequence[float], factor: float
           ) -> list[np.ndarray]:
    """Scaled copy of the crack geometry about a point: x0 + factor*(p - x0).

    Returns raw polyline coordinate arrays (1D: single points), detached from
    the mesh; the surface-energy hypotheses consume these directly.
    """
    if factor <= 0:
        raise GeometryError("dilation factor must be positive")
    x0 = np.asarray(center, dtype=float)
    out = []
    for comp in crack.components:
        pts = crack.mesh.nodes[list(comp)]
        out.append(x0 + factor * (pts - x0))
    return out


# ---------------------------------------------------------------------------
# Vector fields
# ---------------------------------------------------------------------------


def _plateau(r: np.ndarray, a: float, b: float) -> np.ndarray:
    """C^1 radial bump: 1 on [0,a], cubic smoothstep down to 0 at b."""
    s = np.clip((b - r) / (b - a), 0.0, 1.0)
    return s * s * (3.0 - 2.0 * s)


@dataclass(frozen=True)
class VectorField:
    """Vector field on the domain with analytic evaluation.

    kind zero | tip | nodal | callable | sum.  `bound` is the claimed
    pointwise sup norm used to normalize admissibility tolerances and the
    total-variation families.  Nodal overrides let tip fields carry
    tangential corrections on crack nodes without losing the analytic form
    used by flow integration.
    """

    kind: str
    dim: int
    bound: float = 1.0
    label: str = ""
    center: np.ndarray | None = None
    direction: np.ndarray | None = None
    a: float = 0.0
    b: float = 0.0
    fn: Callable[[np.ndarray], np.ndarray] | None = None
    values: np.ndarray | None = None
    parts: tuple["VectorField", ...] = ()
    overrides: tuple[tuple[int, tuple[float, ...]], ...] = ()
    scale: float = 1.0

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == "zero":
            return np.zeros((pts.shape[0], self.dim))
        if self.kind == "tip":
            r = np.linalg.norm(pts - self.center, axis=1)
            out = _plateau(r, self.a, self.b)[:, None] * self.direction
        elif self.kind == "callable":
            out = np.asarray(self.fn(pts), dtype=float).reshape(
                pts.shape[0], self.dim)
        elif self.kind == "sum":
            out = sum(p.evaluate(pts) for p in self.parts)
        else:
            raise GeometryError(f"field kind {self.kind} has no analytic form")
        return self.scale * out if self.scale != 1.0 else out

    def nodal_values(self, mesh: Mesh) -> np.ndarray:
        """Samples at mesh nodes, with crack-node overrides applied."""
        if self.kind == "nodal":
            if self.values.shape[0] != mesh.n_nodes:
                raise GeometryError("nodal field size mismatch")
            return self.scale * self.values
        if self.kind == "sum":
            return self.scale * sum(p.nodal_values(mesh) for p in self.parts)
        vals = self.evaluate(mesh.nodes)
        for node, vec in self.overrides:
            vals[node] = self.scale * np.asarray(vec, dtype=float)
        return vals

    def describe(self) -> str:
        return self.label or self.kind


def zero_field(dim: int) -> VectorField:
    return VectorField("zero", dim, bound=0.0, label="zero")


def nodal_field(mesh: Mesh, values: np.ndarray, label: str = "nodal"
                ) -> VectorField:
    values = np.asarray(values, dtype=float).reshape(mesh.n_nodes, mesh.dim)
    bound = float(np.max(np.linalg.norm(values, axis=1))) if len(values) else 0.0
    return VectorField("nodal", mesh.dim, bound=bound, label=label,
                       values=values)


def callable_field(fn: Callable[[np.ndarray], np.ndarray], dim: int,
                   bound: float = 1.0, label: str = "callable") -> VectorField:
    return VectorField("callable", dim, bound=bound, label=label, fn=fn)


def sum_field(parts: Sequence[VectorField], bound: float | None = None,
              label: str = "") -> VectorField:
    parts = tuple(parts)
    if not parts:
        raise GeometryError("empty field sum")
    dim = parts[0].dim
    if bound is None:
        bound = float(sum(p.bound for p in parts))
    return VectorField("sum", dim, bound=bound,
                       label=label or "+".join(p.describe() for p in parts),
                       parts=parts)


def scale_field(field: VectorField, c: float, label: str = "") -> VectorField:
    """The field multiplied by a scalar, with the bound tracked."""
    c = float(c)
    return replace(field, scale=field.scale * c, bound=abs(c) * field.bound,
                   label=label or f"{c:g}*({field.describe()})")


def tip_extension_field(crack: CrackSet, tip: int,
                        direction: Sequence[float] | None = None,
                        a: float | None = None, b: float | None = None,
                        tangent_project: bool = True) -> VectorField:
    """Plateau field extending the crack at one tip.

    Constant `direction` inside radius a of the tip, smooth cutoff by b.
    By default the direction is the outward tip tangent and the sampled
    values on crack nodes behind the tip are projected onto the local path
    tangent, so the flow slides the crack along itself.
    """
    mesh = crack.mesh
    if mesh.dim != 2:
        raise GeometryError("tip extension fields are 2D")
    if tip not in crack.tips:
        raise GeometryError(f"node {tip} is not a tip")
    tau = crack.tip_tangent(tip)
    d = tau if direction is None else np.asarray(direction, dtype=float)
    nd = np.linalg.norm(d)
    if nd == 0:
        raise GeometryError("zero tip direction")
    d = d / nd
    h = mesh.h
    if a is None:
        a = 4.0 * h
    if b is None:
        b = 12.0 * h
    if not (0 < a < b):
        raise GeometryError("plateau radii need 0 < a < b")
    center = mesh.nodes[tip].copy()
    overrides: list[tuple[int, tuple[float, float]]] = []
    if tangent_project:
        pts = mesh.nodes
        for v in sorted(crack.nodes):
            if v == tip:
                continue
            r = float(np.linalg.norm(pts[v] - center))
            if r >= b:
                continue
            q = float(_plateau(np.array([r]), a, b)[0])
            t_hat = crack.slide_direction(v)
            if t_hat is None:
                overrides.append((v, (0.0, 0.0)))
                continue
            val = q * np.dot(d, t_hat) * t_hat
            overrides.append((v, (float(val[0]), float(val[1]))))
    angle = math.degrees(math.atan2(
        tau[0] * d[1] - tau[1] * d[0], float(np.dot(tau, d))))
    label = (f"tip{tip}@({center[0]:.4g},{center[1]:.4g})"
             f" ang{angle:+.1f} a={a:.4g} b={b:.4g}")
    return VectorField("tip", 2, bound=1.0, label=label, center=center,
                       direction=d, a=float(a), b=float(b),
                       overrides=tuple(overrides))


# ---------------------------------------------------------------------------
# Flows
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FlowMap:
    """Time-t flow of a vector field, realized on the mesh nodes."""

    mesh: Mesh
    field: VectorField
    t: float
    node_targets: np.ndarray
    steps: int

    def displaced(self) -> np.ndarray:
        return self.node_targets


def flow_points(field: VectorField, points: np.ndarray, t: float,
                steps: int = 16) -> np.ndarray:
    """RK4 integration of dx/ds = field(x) from 0 to t."""
    x = np.atleast_2d(np.asarray(points, dtype=float)).copy()
    if t == 0.0 or field.kind == "zero":
        return x
    dt = t / steps
    for _ in range(steps):
        k1 = field.evaluate(x)
        k2 = field.evaluate(x + 0.5 * dt * k1)
        k3 = field.evaluate(x + 0.5 * dt * k2)
        k4 = field.evaluate(x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return x


def integrate_flow(mesh: Mesh, field: VectorField, t: float,
                   steps: int = 16) -> FlowMap:
    """Flow map of the field at time t, sampled on all mesh nodes.

    Group property holds to RK4 accuracy; the identity at t=0 is exact.
    """
    targets = flow_points(field, mesh.nodes, t, steps=steps)
    return FlowMap(mesh, field, float(t), targets, steps)


# ---------------------------------------------------------------------------
# Admissibility of variations
# ---------------------------------------------------------------------------


def is_admissible_variation(field: VectorField, K: CrackSet | None,
                            S: CrackSet, tol: float = 1e-10
                            ) -> tuple[bool, list[str]]:
    """Check a field against the crack-variation cone for (K, S).

    Clauses: compact support inside the domain; support disjoint from the
    preserved crack K; tangential along S (sampled at crack-edge midpoints,
    tip-incident edges exempt since their motion is the extension itself);
    outward motion at every tip.  In 1D tangency degenerates to vanishing on
    the break set.  Returns (ok, list of failed-clause descriptions).
    """
    mesh = S.mesh
    vals = field.nodal_values(mesh)
    scale = max(field.bound, float(np.max(np.linalg.norm(vals, axis=1)))
                if len(vals) else 0.0, 1e-300)
    reasons: list[str] = []

    bmax = max((float(np.linalg.norm(vals[v])) for v in mesh.boundary_nodes),
               default=0.0)
    if bmax > tol * scale:
        reasons.append(f"support touches the outer boundary (|eta|={bmax:.3g})")

    if K is not None and not K.is_empty():
        kmax = max((float(np.linalg.norm(vals[v])) for v in K.nodes),
                   default=0.0)
        for a, b in sorted(K.edge_set):
            kmax = max(kmax, float(np.linalg.norm(0.5 * (vals[a] + vals[b]))))
        if kmax > tol * scale:
            reasons.append(
                f"support meets the preserved crack (|eta|={kmax:.3g})")

    if mesh.dim == 1:
        smax = max((abs(float(vals[v, 0])) for v in S.nodes), default=0.0)
        if smax > tol * scale:
            reasons.append(f"nonzero on the break set (|eta|={smax:.3g})")
    else:
        tip_edges = {e for e in S.edge_set for t in S.tips if t in e}
        worst = 0.0
        for a, b in sorted(S.edge_set):
            if (a, b) in tip_edges:
                continue
            e = mesh.nodes[b] - mesh.nodes[a]
            n = np.array([-e[1], e[0]]) / np.linalg.norm(e)
            mid = 0.5 * (vals[a] + vals[b])
            worst = max(worst, abs(float(np.dot(mid, n))))
        if worst > tol * scale:
            reasons.append(f"not tangential to the crack (|eta.n|={worst:.3g})")
        for t in S.tips:
            tau = S.tip_tangent(t)
            out = float(np.dot(vals[t], tau))
            if out < -tol * scale:
                reasons.append(
                    f"tip {t} moves inward (eta.tau={out:.3g})")
    return (not reasons, reasons)
