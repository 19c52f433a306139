"""Bulk energy densities, surface energies, and the structural hypotheses.

The total energy of a state is the elastic bulk integral of a convex density
w(grad u) plus a surface term charged to the crack.  The surface energy is a
Borel-type set function over crack geometry; the three structural hypotheses
it must satisfy (sub-additivity, dilation control, finite shell quotients at
admissible sets) each get an executable check that returns a report rather
than asserting, so callers can collect evidence across random batteries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
import shapely
from shapely.geometry import LineString, MultiPoint, Point, Polygon
from shapely.ops import unary_union

from .geometry import CrackSet, GeometryError, Mesh, dilate


class EnergeticsError(ValueError):
    """Raised for invalid material or surface-energy parameters."""


# ---------------------------------------------------------------------------
# Bulk density
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MaterialSpec:
    """Convex bulk energy density.

    kind 'antiplane': w(g) = 0.5 * mu * |g|^2 (scalar displacement).
    kind 'user': arbitrary smooth convex w; stress falls back to central
    differences when no gradient callable is supplied.
    """

    kind: str = "antiplane"
    mu: float = 1.0
    w: Callable[[np.ndarray], float] | None = None
    w_grad: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.kind == "antiplane":
            if self.mu <= 0:
                raise EnergeticsError("shear modulus must be positive")
        elif self.kind == "user":
            if self.w is None:
                raise EnergeticsError("user material needs a density callable")
        else:
            raise EnergeticsError(f"unknown material kind {self.kind!r}")


def density(material: MaterialSpec, grads: np.ndarray) -> np.ndarray:
    """w evaluated at an array of gradients (..., dim)."""
    g = np.asarray(grads, dtype=float)
    if material.kind == "antiplane":
        return 0.5 * material.mu * np.sum(g * g, axis=-1)
    flat = g.reshape(-1, g.shape[-1])
    out = np.array([float(material.w(row)) for row in flat])
    return out.reshape(g.shape[:-1])


def stress(material: MaterialSpec, grads: np.ndarray) -> np.ndarray:
    """dw/dg at an array of gradients; numeric for user densities."""
    g = np.asarray(grads, dtype=float)
    if material.kind == "antiplane":
        return material.mu * g
    if material.w_grad is not None:
        flat = g.reshape(-1, g.shape[-1])
        out = np.stack([np.asarray(material.w_grad(row), dtype=float)
                        for row in flat])
        return out.reshape(g.shape)
    flat = g.reshape(-1, g.shape[-1])
    out = np.zeros_like(flat)
    for i, row in enumerate(flat):
        step = 1e-6 * (1.0 + float(np.linalg.norm(row)))
        for k in range(row.shape[0]):
            hi = row.copy(); hi[k] += step
            lo = row.copy(); lo[k] -= step
            out[i, k] = (float(material.w(hi)) - float(material.w(lo))) / (2 * step)
    return out.reshape(g.shape)


def validate_density(material: MaterialSpec, dim: int, n_samples: int = 64,
                     seed: int = 0) -> dict:
    """Sampled convexity / smoothness sanity check for user densities."""
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n_samples, dim))
    b = rng.normal(size=(n_samples, dim))
    lam = rng.uniform(size=n_samples)
    mid = lam[:, None] * a + (1 - lam[:, None]) * b
    wa, wb, wm = density(material, a), density(material, b), density(material, mid)
    gap = lam * wa + (1 - lam) * wb - wm
    ok = bool(np.all(np.isfinite(wa)) and np.all(np.isfinite(wb))
              and gap.min() > -1e-9 * (1 + np.abs(wa).max()))
    return {"ok": ok, "min_convexity_gap": float(gap.min())}


# ---------------------------------------------------------------------------
# Surface energy
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SurfaceEnergySpec:
    """Surface energy over crack sets.

    kind 'griffith': toughness G times crack measure (length in 2D, break
    count in 1D).  kind 'weighted': position-dependent toughness g(x)
    integrated along the crack, midpoint quadrature per edge.
    """

    kind: str = "griffith"
    G: float = 1.0
    weight: Callable[[np.ndarray], np.ndarray] | None = None
    weight_bounds: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind == "griffith":
            if self.G <= 0:
                raise EnergeticsError("toughness must be positive")
        elif self.kind == "weighted":
            if self.weight is None:
                raise EnergeticsError("weighted surface energy needs g(x)")
        else:
            raise EnergeticsError(f"unknown surface kind {self.kind!r}")

    def weight_at(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        vals = np.asarray(self.weight(pts), dtype=float).reshape(pts.shape[0])
        if np.any(vals <= 0):
            raise EnergeticsError("surface weight must stay positive")
        return vals

    def h2_constant(self, mesh: Mesh | None = None) -> float:
        """Dilation-control constant: 1 for Griffith, sup g / inf g else."""
        if self.kind == "griffith":
            return 1.0
        if self.weight_bounds is not None:
            lo, hi = self.weight_bounds
            return hi / lo
        if mesh is None:
            raise EnergeticsError("need bounds or a mesh to estimate sup/inf g")
        vals = self.weight_at(mesh.nodes)
        return float(vals.max() / vals.min())


def surface_energy(F: SurfaceEnergySpec, S: CrackSet) -> float:
    """F(S) over a mesh-skeleton crack."""
    if S.mesh.dim == 1:
        if F.kind == "griffith":
            return F.G * len(S.nodes)
        pts = S.mesh.nodes[sorted(S.nodes)]
        return float(F.weight_at(pts).sum()) if len(S.nodes) else 0.0
    if F.kind == "griffith":
        return F.G * S.length()
    total = 0.0
    pts = S.mesh.nodes
    for a, b in sorted(S.edge_set):
        mid = 0.5 * (pts[a] + pts[b])
        total += float(np.linalg.norm(pts[b] - pts[a])) * float(F.weight_at(mid)[0])
    return total


def _segment_quadrature(F: SurfaceEnergySpec, polyline: np.ndarray,
                        ds: float) -> float:
    """Weighted length of a polyline, midpoint rule with subdivision."""
    total = 0.0
    for p, q in zip(polyline[:-1], polyline[1:]):
        seg = float(np.linalg.norm(q - p))
        if seg == 0.0:
            continue
        if F.kind == "griffith":
            total += F.G * seg
            continue
        n = max(1, int(math.ceil(seg / ds)))
        s = (np.arange(n) + 0.5) / n
        pts = p[None, :] + s[:, None] * (q - p)[None, :]
        total += float(F.weight_at(pts).sum()) * seg / n
    return total


def surface_energy_geometry(F: SurfaceEnergySpec, geoms, mesh: Mesh,
                            ds: float | None = None) -> float:
    """F over raw geometry detached from the mesh skeleton.

    2D: list of polyline coordinate arrays (single-point arrays count zero
    length).  1D: array of break positions, counting measure.
    """
    if mesh.dim == 1:
        pts = np.atleast_1d(np.asarray(geoms, dtype=float)).reshape(-1)
        if F.kind == "griffith":
            return F.G * len(pts)
        return float(F.weight_at(pts[:, None]).sum()) if len(pts) else 0.0
    if ds is None:
        ds = 0.5 * mesh.h
    total = 0.0
    for poly in geoms:
        arr = np.atleast_2d(np.asarray(poly, dtype=float))
        if arr.shape[0] >= 2:
            total += _segment_quadrature(F, arr, ds)
    return total


# ---------------------------------------------------------------------------
# Total energy
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnergyBreakdown:
    elastic: float
    surface: float

    @property
    def total(self) -> float:
        return self.elastic + self.surface


def elastic_energy(mesh: Mesh, grads: np.ndarray, material: MaterialSpec,
                   cells: np.ndarray | None = None) -> float:
    """Bulk integral of w over the mesh (or a cell subset).

    One-point quadrature at barycenters, exact for P1 states with quadratic w.
    """
    vols = mesh.element_volumes
    if cells is not None:
        vols = vols[cells]
        grads = grads[cells]
    return float(np.sum(vols * density(material, grads)))


def total_energy(state, material: MaterialSpec, F: SurfaceEnergySpec
                 ) -> EnergyBreakdown:
    """Elastic plus surface energy of a solved or constructed state."""
    mesh = state.space.mesh
    return EnergyBreakdown(
        elastic=elastic_energy(mesh, state.gradients(), material),
        surface=surface_energy(F, state.space.crack))


# ---------------------------------------------------------------------------
# Domain geometry helpers (shapely)
# ---------------------------------------------------------------------------


_DOMAIN_CACHE: dict[int, Polygon] = {}


def domain_polygon(mesh: Mesh) -> Polygon:
    """Closed polygon of the 2D domain, traced from boundary facets."""
    if mesh.dim != 2:
        raise EnergeticsError("domain polygon is 2D only")
    key = id(mesh)
    if key in _DOMAIN_CACHE:
        return _DOMAIN_CACHE[key]
    nbr: dict[int, list[int]] = {}
    for a, b in mesh.boundary:
        nbr.setdefault(int(a), []).append(int(b))
        nbr.setdefault(int(b), []).append(int(a))
    start = min(nbr)
    loop = [start]
    prev, cur = None, start
    while True:
        nxt = [v for v in nbr[cur] if v != prev]
        if not nxt:
            raise GeometryError("boundary facets do not close a loop")
        prev, cur = cur, nxt[0]
        if cur == start:
            break
        loop.append(cur)
    poly = Polygon(mesh.nodes[loop])
    if not poly.is_valid:
        poly = poly.buffer(0)
    _DOMAIN_CACHE[key] = poly
    return poly


def _geoms_to_shapely(geoms) -> shapely.Geometry:
    parts = []
    for g in geoms:
        arr = np.atleast_2d(np.asarray(g, dtype=float))
        if arr.shape[0] == 1:
            parts.append(Point(arr[0]))
        else:
            parts.append(LineString(arr))
    return unary_union(parts)


def _shapely_to_polylines(geom) -> list[np.ndarray]:
    out: list[np.ndarray] = []
    if geom.is_empty:
        return out
    gtype = geom.geom_type
    if gtype == "LineString":
        out.append(np.asarray(geom.coords, dtype=float))
    elif gtype == "Point":
        out.append(np.asarray(geom.coords, dtype=float))
    elif gtype in ("MultiLineString", "MultiPoint", "GeometryCollection"):
        for part in geom.geoms:
            out.extend(_shapely_to_polylines(part))
    elif gtype == "LinearRing":
        out.append(np.asarray(geom.coords, dtype=float))
    else:
        raise GeometryError(f"unexpected geometry {gtype}")
    return out


# ---------------------------------------------------------------------------
# Structural hypotheses
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HypothesisReport:
    name: str
    ok: bool
    values: dict
    note: str = ""


def check_h1(F: SurfaceEnergySpec, A: CrackSet, B: CrackSet
             ) -> HypothesisReport:
    """Sub-additivity: F(A u B) <= F(A) + F(B)."""
    if A.mesh is not B.mesh:
        raise EnergeticsError("cracks live on different meshes")
    mesh = A.mesh
    if mesh.dim == 1:
        union_nodes = sorted(A.nodes | B.nodes)
        if F.kind == "griffith":
            fu = F.G * len(union_nodes)
        else:
            fu = (float(F.weight_at(mesh.nodes[union_nodes]).sum())
                  if union_nodes else 0.0)
    else:
        union_edges = sorted(A.edge_set | B.edge_set)
        pts = mesh.nodes
        fu = 0.0
        for a, b in union_edges:
            seg = float(np.linalg.norm(pts[b] - pts[a]))
            if F.kind == "griffith":
                fu += F.G * seg
            else:
                fu += seg * float(F.weight_at(0.5 * (pts[a] + pts[b]))[0])
    fa, fb = surface_energy(F, A), surface_energy(F, B)
    slack = fa + fb - fu
    ok = slack >= -1e-12 * (1.0 + fa + fb)
    return HypothesisReport("h1", ok,
                            {"F_A": fa, "F_B": fb, "F_union": fu,
                             "slack": slack})


def check_h2(F: SurfaceEnergySpec, A: CrackSet, center: Sequence[float],
             factor: float) -> HypothesisReport:
    """Dilation control: F(scaled copy ^ domain) <= C * factor^(n-1) * F(A)."""
    mesh = A.mesh
    fa = surface_energy(F, A)
    geoms = dilate(A, center, factor)
    if mesh.dim == 1:
        lo = float(mesh.nodes.min())
        hi = float(mesh.nodes.max())
        pts = np.concatenate([g.reshape(-1) for g in geoms]) if geoms else \
            np.zeros(0)
        inside = pts[(pts > lo) & (pts < hi)]
        f_dil = surface_energy_geometry(F, inside, mesh)
        bound = F.h2_constant(mesh) * fa
    else:
        omega = domain_polygon(mesh)
        clipped = _geoms_to_shapely(geoms).intersection(omega)
        f_dil = surface_energy_geometry(F, _shapely_to_polylines(clipped), mesh)
        bound = F.h2_constant(mesh) * factor * fa
    slack = bound - f_dil
    ok = slack >= -1e-9 * (1.0 + bound)
    return HypothesisReport("h2", ok,
                            {"F_A": fa, "F_dilated": f_dil, "bound": bound,
                             "factor": factor, "slack": slack})


def check_h3(F: SurfaceEnergySpec, A, mesh: Mesh,
             radii: Sequence[float] | None = None) -> HypothesisReport:
    """Shell quotients F(dB(A,r) ^ domain) / r.

    A may be a CrackSet or raw geometry (points / polylines).  Finite limsup
    is expected for point-like sets; positive-length sets in 2D give a
    diverging 2*len/r term, reported via the `divergent` flag instead of a
    failure.
    """
    if radii is None:
        base = mesh.h * 4.0
        radii = [base * (2.0 / 3.0) ** k for k in range(6)]
    radii = sorted((float(r) for r in radii), reverse=True)
    if isinstance(A, CrackSet):
        geoms = ([mesh.nodes[list(c)] for c in A.components]
                 if mesh.dim == 2 else mesh.nodes[sorted(A.nodes)].reshape(-1))
    else:
        geoms = A
    samples = []
    if mesh.dim == 1:
        lo = float(mesh.nodes.min())
        hi = float(mesh.nodes.max())
        pts = np.atleast_1d(np.asarray(geoms, dtype=float)).reshape(-1)
        for r in radii:
            shell = np.concatenate([pts - r, pts + r])
            shell = np.unique(shell[(shell > lo) & (shell < hi)])
            samples.append(surface_energy_geometry(F, shell, mesh) / r)
    else:
        omega = domain_polygon(mesh)
        interior = omega.buffer(-1e-12)
        geom = _geoms_to_shapely(geoms)
        for r in radii:
            ring = geom.buffer(r, quad_segs=64).boundary
            clipped = ring.intersection(interior)
            f_shell = surface_energy_geometry(
                F, _shapely_to_polylines(clipped), mesh)
            samples.append(f_shell / r)
    tail = samples[-3:]
    increasing = all(b > a * 1.05 for a, b in zip(tail[:-1], tail[1:]))
    divergent = increasing and samples[-1] > 1.3 * samples[0]
    finite = not divergent
    return HypothesisReport(
        "h3", True,
        {"radii": list(radii), "quotients": [float(q) for q in samples],
         "limsup_estimate": float(max(tail)), "divergent": divergent,
         "finite": finite},
        note="quotients sampled at decreasing radii; divergence flagged, "
             "not asserted")
