"""Configurational force measures on cracked states.

The release rate ER pairs a state with a crack-preserving vector field; its
total variation over a region is estimated as a supremum over a recorded
family of unit tip-extension fields.  Concentration measures probe the same
singularity from the energy side: the elastic quotient integrates the bulk
density over shrinking tip neighborhoods, the surface quotient measures the
energy charged to shrinking shells.  A contour form of the release rate and
two variational identities (the tip-counting perimeter supremum and the
curvature/energy-jump balance along the crack) complete the toolbox.

All estimators return their raw samples next to the extracted value, and
quotient limits are reported as limsup estimates with explicit error bars;
nothing here asserts a theorem, the verification suites do the comparing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import energetics
from .elastostatics import State, pushforward_state
from .energetics import (MaterialSpec, SurfaceEnergySpec, density,
                         domain_polygon, stress, surface_energy_geometry)
from .geometry import (CrackSet, Mesh, Region, VectorField,
                       integrate_flow, is_admissible_variation,
                       tip_extension_field)


class MeasuresError(ValueError):
    """Raised for ill-posed measure requests (bad radii, inadmissible fields)."""


# ---------------------------------------------------------------------------
# Estimate containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MeasureEstimate:
    """A limit estimate with its raw quotient samples.

    samples are (parameter, quotient) pairs at decreasing parameter; the
    error bar always dominates half the gap between the reported value and
    the innermost sample.
    """

    value: float
    error: float
    samples: tuple[tuple[float, float], ...]
    method: str
    extras: dict = field(default_factory=dict)


def _limsup_estimate(samples: Sequence[tuple[float, float]], method: str,
                     extras: dict | None = None) -> MeasureEstimate:
    """Max-of-tail limsup estimate with a linear-in-r cross check."""
    if not samples:
        return MeasureEstimate(0.0, 0.0, (), method, extras or {})
    qs = np.array([q for _, q in samples], dtype=float)
    rs = np.array([r for r, _ in samples], dtype=float)
    tail = qs[-min(3, len(qs)):]
    value = float(tail.max())
    if len(qs) >= 2:
        coef = np.polyfit(rs, qs, 1)
        fit0 = float(coef[1])
    else:
        fit0 = float(qs[-1])
    error = max(abs(value - float(qs[-1])) / 2.0,
                (float(tail.max()) - float(tail.min())) / 2.0,
                abs(value - fit0) / 2.0)
    ex = dict(extras or {})
    ex["linear_fit_intercept"] = fit0
    return MeasureEstimate(value, float(error),
                           tuple((float(r), float(q)) for r, q in samples),
                           method, ex)


@dataclass(frozen=True)
class ReleaseRateValue:
    value: float
    field: str
    admissible: bool
    waived: bool = False
    reasons: tuple[str, ...] = ()


@dataclass(frozen=True)
class FamilySupEstimate:
    """Supremum over a recorded field family (a lower bound by nature)."""

    value: float
    table: tuple[ReleaseRateValue, ...]
    note: str = ""


# ---------------------------------------------------------------------------
# Geometric helpers
# ---------------------------------------------------------------------------


def _point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray
                            ) -> float:
    d = b - a
    L2 = float(d @ d)
    if L2 == 0.0:
        return float(np.linalg.norm(p - a))
    s = float(np.clip((p - a) @ d / L2, 0.0, 1.0))
    return float(np.linalg.norm(p - (a + s * d)))


def distance_to_boundary(mesh: Mesh, point: np.ndarray) -> float:
    p = np.asarray(point, dtype=float)
    if mesh.dim == 1:
        lo, hi = float(mesh.nodes.min()), float(mesh.nodes.max())
        return min(p[0] - lo, hi - p[0])
    return min(_point_segment_distance(p, mesh.nodes[int(a)],
                                       mesh.nodes[int(b)])
               for a, b in mesh.boundary)


def _distance_to_crack(point: np.ndarray, crack: CrackSet) -> float:
    if crack.is_empty():
        return math.inf
    pts = crack.mesh.nodes
    if crack.mesh.dim == 1 or not crack.edge_set:
        return min(float(np.linalg.norm(pts[v] - point))
                   for v in crack.nodes)
    return min(_point_segment_distance(point, pts[a], pts[b])
               for a, b in crack.edge_set)


def _region_clearance(D: Region, point: np.ndarray) -> float:
    """Distance from a point to the region's complement (conservative)."""
    if D.kind == "whole":
        return math.inf
    if D.kind == "ball":
        return max(0.0, D.r - float(np.linalg.norm(point - D.center)))
    if D.kind == "tubular":
        if D.seeds is None or not len(D.seeds):
            return 0.0
        return max(0.0, D.r - float(np.min(
            np.linalg.norm(D.seeds - point, axis=1))))
    mesh = D.mesh
    comp = np.setdiff1d(np.arange(mesh.n_elements), D.cells)
    if not len(comp):
        return math.inf
    d = float(np.min(np.linalg.norm(mesh.barycenters[comp] - point, axis=1)))
    return max(0.0, d - mesh.h)


def radius_ladder(r_max: float, r_min: float, n: int = 6,
                  ratio: float = 2.0 / 3.0) -> list[float]:
    """Decreasing geometric radii in [r_min, r_max]; at least three needed."""
    if r_max <= 0 or r_min <= 0 or r_max <= r_min:
        raise MeasuresError(
            f"empty radius ladder: r_max={r_max:.3g}, r_min={r_min:.3g}")
    out = []
    r = r_max
    for _ in range(n):
        if r < r_min:
            break
        out.append(r)
        r *= ratio
    if len(out) < 3:
        raise MeasuresError(
            f"only {len(out)} radii fit between {r_min:.3g} and {r_max:.3g}; "
            "the tip sits too close to the boundary for this mesh")
    return out


def _tips_in_region(crack: CrackSet, A: Region) -> list[int]:
    return [t for t in crack.tips
            if bool(A.contains_points(crack.mesh.nodes[t][None, :])[0])]


# ---------------------------------------------------------------------------
# Energy release rate
# ---------------------------------------------------------------------------


def energy_release_rate(state: State, material: MaterialSpec,
                        field: VectorField, K: CrackSet | None = None,
                        check: bool = True, waive: bool = False
                        ) -> ReleaseRateValue:
    """Release rate of the state along one crack-preserving field.

    Linear in the field; exactly the negative time derivative at zero of the
    pushforward energy (the mesh realization makes the identity exact, which
    the difference-quotient report exploits).  Inadmissible fields raise
    unless `waive` is set, in which case the verdict travels in the result.
    """
    space = state.space
    mesh = space.mesh
    admissible, reasons = True, ()
    if check:
        ok, why = is_admissible_variation(field, K, space.crack)
        admissible, reasons = ok, tuple(why)
        if not ok and not waive:
            raise MeasuresError("inadmissible variation: " + "; ".join(why))
    vals = field.nodal_values(mesh)
    deta = np.einsum("tik,tij->tkj", vals[mesh.elements],
                     mesh.shape_gradients)
    g = state.gradients()
    sig = stress(material, g)
    w = density(material, g)
    term = np.einsum("tj,tk,tkj->t", sig, g, deta) \
        - w * np.einsum("tkk->t", deta)
    value = float(np.sum(mesh.element_volumes * term))
    return ReleaseRateValue(value, field.describe(), admissible,
                            waived=(not admissible), reasons=reasons)


def _plateau_grid(h: float, b_max: float) -> list[tuple[float, float]]:
    grid = [(4.0 * h, 12.0 * h), (6.0 * h, 18.0 * h)]
    out = [(a, b) for a, b in grid if b <= b_max]
    if not out and b_max > 2.5 * h:
        out = [(b_max / 3.0, 0.98 * b_max)]
    return out


def default_tip_family(state: State, D: Region, K: CrackSet | None = None,
                       fan_count: int = 16) -> tuple[list[VectorField], list[str]]:
    """Unit tip-extension fields for every crack tip inside a region.

    Per tip: the exact tangential slide plus a fan of kinked extension
    directions across the outward half-cone, each over a plateau-radius
    grid sized to fit inside the region and away from the outer boundary.
    Returns (fields, notes on skipped tips).
    """
    crack = state.space.crack
    mesh = state.space.mesh
    if mesh.dim != 2:
        return [], ["tip-extension families are 2D"]
    fields: list[VectorField] = []
    notes: list[str] = []
    h = mesh.h
    for tip in _tips_in_region(crack, D):
        p = mesh.nodes[tip]
        b_max = 0.95 * min(distance_to_boundary(mesh, p),
                           _region_clearance(D, p))
        plateaus = _plateau_grid(h, b_max)
        if not plateaus:
            notes.append(f"tip {tip}: clearance {b_max:.3g} below 2.5h, skipped")
            continue
        tau = crack.tip_tangent(tip)
        for a, b in plateaus:
            fields.append(tip_extension_field(crack, tip, None, a, b))
            for theta in np.linspace(-math.pi / 2, math.pi / 2, fan_count):
                c, s = math.cos(theta), math.sin(theta)
                d = np.array([c * tau[0] - s * tau[1],
                              s * tau[0] + c * tau[1]])
                fields.append(tip_extension_field(crack, tip, d, a, b))
    return fields, notes


def er_total_variation(state: State, material: MaterialSpec, D: Region,
                       K: CrackSet | None = None,
                       family: Sequence[VectorField] | None = None,
                       fan_count: int = 16,
                       waive_crack_overlap: bool = True) -> FamilySupEstimate:
    """Total variation |ER|(D): sup of ER over unit fields supported in D.

    Estimated from below over a finite recorded family (the default one from
    default_tip_family unless supplied).  Fields whose only admissibility
    defect is overlapping the preserved crack K are kept with a waiver (the
    slide still maps K into itself along straight runs); otherwise
    inadmissible members are recorded but excluded from the supremum.
    In 1D every admissible field vanishes on the break set, so the total
    variation is exactly zero.
    """
    mesh = state.space.mesh
    if mesh.dim == 1:
        return FamilySupEstimate(
            0.0, (), note="1D: crack-preserving fields vanish on the break "
            "set, so ER is identically zero")
    notes: list[str] = []
    if family is None:
        family, notes = default_tip_family(state, D, K, fan_count)
    rows: list[ReleaseRateValue] = []
    best = 0.0
    for f in family:
        ok, why = is_admissible_variation(f, K, state.space.crack)
        waived = False
        if not ok:
            only_k = all("preserved crack" in r for r in why)
            if only_k and waive_crack_overlap:
                waived = True
            else:
                rows.append(ReleaseRateValue(
                    float("nan"), f.describe(), False, False, tuple(why)))
                continue
        rr = energy_release_rate(state, material, f, K=K, check=False)
        rows.append(ReleaseRateValue(rr.value, f.describe(), ok, waived,
                                     tuple(why)))
        best = max(best, rr.value)
    note = "family supremum (lower bound)"
    if notes:
        note += "; " + "; ".join(notes)
    return FamilySupEstimate(best, tuple(rows), note)


# ---------------------------------------------------------------------------
# Concentration measures
# ---------------------------------------------------------------------------


def elastic_concentration(state: State, material: MaterialSpec, A: Region,
                          radii: Sequence[float] | None = None
                          ) -> MeasureEstimate:
    """Bulk-energy quotient around the crack tips inside A.

    Integrates w over the cells whose barycenter lies within r of the tip
    set and divides by r; the limsup over shrinking r measures how much
    elastic energy concentrates at the tips.  Zero when A holds no tips.
    """
    mesh = state.space.mesh
    crack = state.space.crack
    tips = _tips_in_region(crack, A)
    if not tips:
        return MeasureEstimate(0.0, 0.0, (), "limsup-max-tail",
                               {"tips": 0})
    seeds = mesh.nodes[tips]
    if radii is None:
        r_max = 0.45 * min(distance_to_boundary(mesh, p) for p in seeds)
        r_min = (3.0 * mesh.h) if mesh.dim == 2 else 1.001 * mesh.h
        radii = radius_ladder(r_max, r_min)
    radii = sorted((float(r) for r in radii), reverse=True)
    dmin = np.min(np.linalg.norm(
        mesh.barycenters[:, None, :] - seeds[None, :, :], axis=2), axis=1)
    w_el = density(material, state.gradients()) * mesh.element_volumes
    samples = []
    for r in radii:
        samples.append((r, float(w_el[dmin <= r].sum()) / r))
    return _limsup_estimate(samples, "limsup-max-tail", {"tips": len(tips)})


def surface_concentration(F: SurfaceEnergySpec, crack: CrackSet, A: Region,
                          radii: Sequence[float] | None = None
                          ) -> MeasureEstimate:
    """Surface-energy shell quotient around the tips inside A.

    F(boundary of the r-neighborhood of the tip set, clipped to the open
    domain) / r.  For isolated interior tips with Griffith energy this is
    2*pi*G per tip at every r; the per-tip normalization (value / 2 pi) is
    reported in extras next to the raw quotient.  In 1D the shell is a point
    pair per tip and the quotient diverges like 1/r; samples are reported
    and the divergence flagged, never asserted away.
    """
    mesh = crack.mesh
    tips = _tips_in_region(crack, A)
    if not tips:
        return MeasureEstimate(0.0, 0.0, (), "limsup-max-tail",
                               {"tips": 0, "per_tip": 0.0})
    seeds = mesh.nodes[tips]
    if radii is None:
        r_max = 0.45 * min(distance_to_boundary(mesh, p) for p in seeds)
        if len(seeds) > 1:
            sep = min(float(np.linalg.norm(seeds[i] - seeds[j]))
                      for i in range(len(seeds))
                      for j in range(i + 1, len(seeds)))
            r_max = min(r_max, 0.45 * sep)
        r_min = (0.5 * mesh.h) if mesh.dim == 2 else 0.26 * mesh.h
        radii = radius_ladder(r_max, r_min)
    radii = sorted((float(r) for r in radii), reverse=True)
    samples = []
    if mesh.dim == 1:
        lo, hi = float(mesh.nodes.min()), float(mesh.nodes.max())
        pts = seeds.reshape(-1)
        for r in radii:
            shell = np.concatenate([pts - r, pts + r])
            shell = np.unique(shell[(shell > lo) & (shell < hi)])
            samples.append((r, surface_energy_geometry(F, shell, mesh) / r))
        est = _limsup_estimate(samples, "limsup-max-tail")
        qs = [q for _, q in samples]
        divergent = len(qs) >= 2 and qs[-1] > 1.3 * qs[0]
        extras = dict(est.extras)
        extras.update(tips=len(tips), divergent=divergent,
                      per_tip=est.value / 2.0)
        return MeasureEstimate(est.value, est.error, est.samples,
                               est.method, extras)

    from shapely.geometry import Point
    from shapely.ops import unary_union

    min_bdist = min(distance_to_boundary(mesh, p) for p in seeds)
    sep = math.inf
    if len(seeds) > 1:
        sep = min(float(np.linalg.norm(seeds[i] - seeds[j]))
                  for i in range(len(seeds))
                  for j in range(i + 1, len(seeds)))
    omega_interior = None
    for r in radii:
        if r < min_bdist and 2.0 * r < sep and F.kind == "griffith":
            # disjoint interior circles: exact shell length
            samples.append((r, F.G * 2.0 * math.pi * len(tips)))
            continue
        if omega_interior is None:
            omega_interior = domain_polygon(mesh).buffer(-1e-12)
        ring = unary_union([Point(p).buffer(r, quad_segs=128)
                            for p in seeds]).boundary
        clipped = ring.intersection(omega_interior)
        flen = surface_energy_geometry(
            F, energetics._shapely_to_polylines(clipped), mesh)
        samples.append((r, flen / r))
    est = _limsup_estimate(samples, "limsup-max-tail")
    extras = dict(est.extras)
    extras.update(tips=len(tips), divergent=False,
                  per_tip=est.value / (2.0 * math.pi))
    return MeasureEstimate(est.value, est.error, est.samples, est.method,
                           extras)


# ---------------------------------------------------------------------------
# Contour release rate
# ---------------------------------------------------------------------------


def j_contour(state: State, material: MaterialSpec, tip: int,
              radii: Sequence[float] | None = None,
              direction: Sequence[float] | None = None) -> MeasureEstimate:
    """Path-independent contour form of the tip release rate.

    Circular contours around the tip, traversed through element-constant
    gradients; sample angles are offset so no quadrature point touches the
    crack line.  The estimate is the mean over radii with the spread as the
    error bar.  Radii beyond the distance to the outer boundary are refused.
    """
    mesh = state.space.mesh
    if mesh.dim != 2:
        raise MeasuresError("contour release rate is 2D only")
    crack = state.space.crack
    p_tip = mesh.nodes[tip]
    if direction is None:
        d = crack.tip_tangent(tip)
    else:
        d = np.asarray(direction, dtype=float)
        d = d / np.linalg.norm(d)
    bdist = distance_to_boundary(mesh, p_tip)
    if radii is None:
        radii = radius_ladder(0.5 * bdist, max(4.0 * mesh.h, 0.02 * bdist),
                              n=5)
    radii = sorted((float(r) for r in radii), reverse=True)
    if radii[0] >= bdist:
        raise MeasuresError(
            f"contour radius {radii[0]:.3g} reaches the outer boundary "
            f"({bdist:.3g} away)")
    alpha = math.atan2(-d[1], -d[0])  # crack line leaves the tip backwards
    grads = state.gradients()
    samples = []
    for r in radii:
        m = max(64, 2 * int(math.ceil(2.0 * math.pi * r / mesh.h)))
        theta = alpha + (np.arange(m) + 0.5) * (2.0 * math.pi / m)
        pts = p_tip[None, :] + r * np.stack(
            [np.cos(theta), np.sin(theta)], axis=1)
        elems = mesh.locate(pts)
        if np.any(elems < 0):
            raise MeasuresError(f"contour r={r:.3g} leaves the mesh")
        g = grads[elems]
        w = density(material, g)
        sig = stress(material, g)
        n = (pts - p_tip) / r
        integrand = w * (n @ d) - np.einsum("mj,mj->m", sig, n) * (g @ d)
        samples.append((r, float(integrand.sum()) * 2.0 * math.pi * r / m))
    qs = [q for _, q in samples]
    value = float(np.mean(qs))
    error = (max(qs) - min(qs)) / 2.0
    return MeasureEstimate(value, error,
                           tuple((float(r), float(q)) for r, q in samples),
                           "contour-mean",
                           {"tip": int(tip), "direction": (float(d[0]),
                                                           float(d[1]))})


# ---------------------------------------------------------------------------
# Perimeter supremum and curvature balance
# ---------------------------------------------------------------------------


def perimeter_sup(S: CrackSet, K: CrackSet | None = None,
                  family: Sequence[VectorField] | None = None
                  ) -> FamilySupEstimate:
    """Tip count of S away from K as a tangential-divergence supremum.

    For each unit field the integral of the tangential divergence over S
    telescopes edge by edge (exact for nodal sampling); tangential tip
    fields with full plateau at an isolated tip contribute one each, so the
    supremum over the default family counts dS minus K's tips from below.
    """
    mesh = S.mesh
    if mesh.dim != 2:
        raise MeasuresError("perimeter supremum needs 1D crack fronts (2D)")
    notes: list[str] = []
    if family is None:
        fields: list[VectorField] = []
        excluded = set() if K is None else K.nodes
        for tip in S.tips:
            if tip in excluded:
                continue
            p = mesh.nodes[tip]
            b_max = 0.95 * distance_to_boundary(mesh, p)
            if K is not None and not K.is_empty():
                b_max = min(b_max, 0.95 * _distance_to_crack(p, K))
            plateaus = _plateau_grid(mesh.h, b_max)
            if not plateaus:
                notes.append(f"tip {tip}: no room for a plateau field")
                continue
            a, b = plateaus[0]
            fields.append(tip_extension_field(S, tip, None, a, b))
        if len(fields) > 1:
            from .geometry import sum_field
            combined = sum_field(fields, label="all-tips")
            vals = combined.nodal_values(mesh)
            norm = float(np.max(np.linalg.norm(vals, axis=1)))
            if norm > 1.0 + 1e-12:
                from .geometry import nodal_field
                combined = nodal_field(mesh, vals / norm,
                                       label="all-tips/normalized")
            fields = fields + [combined]
        family = fields
    rows = []
    best = 0.0
    pts = mesh.nodes
    for f in family:
        vals = f.nodal_values(mesh)
        total = 0.0
        for a, b in sorted(S.edge_set):
            e = pts[b] - pts[a]
            tau = e / np.linalg.norm(e)
            total += float((vals[b] - vals[a]) @ tau)
        rows.append(ReleaseRateValue(total, f.describe(), True))
        best = max(best, total)
    note = "family supremum (lower bound)"
    if notes:
        note += "; " + "; ".join(notes)
    return FamilySupEstimate(best, tuple(rows), note)


@dataclass(frozen=True)
class CurvatureRow:
    node: int
    turning_angle: float
    curvature: float
    w_plus: float
    w_minus: float
    jump: float
    residual: float


@dataclass(frozen=True)
class CurvatureReport:
    rows: tuple[CurvatureRow, ...]
    max_abs_residual: float
    note: str = ""


def mean_curvature_residual(state: State, material: MaterialSpec,
                            F: SurfaceEnergySpec) -> CurvatureReport:
    """Balance of the bulk-energy jump and weighted curvature along the crack.

    At each interior path vertex: discrete curvature H = turning angle over
    mean incident edge length (positive when the path turns toward the plus
    side), energy jump [w] = mean density on the plus wedge minus the minus
    wedge.  The residual G*H + [w] vanishes in the limit for smoothly curved
    minimal cracks; straight cracks isolate the jump term.
    """
    space = state.space
    mesh = space.mesh
    crack = space.crack
    if mesh.dim != 2:
        return CurvatureReport((), 0.0, "2D only")
    w_el = density(material, state.gradients())
    vols = mesh.element_volumes
    rows: list[CurvatureRow] = []
    for comp in crack.components:
        for i in range(1, len(comp) - 1):
            v = comp[i]
            if crack._degree[v] != 2 or v in mesh.boundary_nodes:
                continue
            dofs = space.node_dofs[v]
            if len(dofs) != 2:
                continue
            prev_p = mesh.nodes[comp[i - 1]]
            next_p = mesh.nodes[comp[i + 1]]
            x = mesh.nodes[v]
            e1 = x - prev_p
            e2 = next_p - x
            l1, l2 = np.linalg.norm(e1), np.linalg.norm(e2)
            e1, e2 = e1 / l1, e2 / l2
            turn = math.atan2(e1[0] * e2[1] - e1[1] * e2[0],
                              float(e1 @ e2))
            H = turn / (0.5 * (l1 + l2))
            t_hat = (e1 + e2)
            t_hat = t_hat / np.linalg.norm(t_hat)
            n_hat = np.array([-t_hat[1], t_hat[0]])
            wedge_w = []
            wedge_side = []
            for d in dofs:
                elems = [t for t in mesh.node_elements[v]
                         if d in space.dof_table[t]]
                wsum = float(np.sum(w_el[elems] * vols[elems]))
                vsum = float(np.sum(vols[elems]))
                wedge_w.append(wsum / vsum)
                side = float(np.mean(
                    [(mesh.barycenters[t] - x) @ n_hat for t in elems]))
                wedge_side.append(side)
            if wedge_side[0] >= wedge_side[1]:
                w_plus, w_minus = wedge_w[0], wedge_w[1]
            else:
                w_plus, w_minus = wedge_w[1], wedge_w[0]
            jump = w_plus - w_minus
            if F.kind == "griffith":
                g_loc = F.G
            else:
                g_loc = float(F.weight_at(x[None, :])[0])
            rows.append(CurvatureRow(int(v), float(turn), float(H),
                                     w_plus, w_minus, jump,
                                     float(jump + g_loc * H)))
    worst = max((abs(r.residual) for r in rows), default=0.0)
    return CurvatureReport(tuple(rows), worst)


# ---------------------------------------------------------------------------
# Difference quotients
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuotientReport:
    er_volume: float
    elastic: MeasureEstimate
    surface: MeasureEstimate
    slope: float
    samples: tuple[tuple[float, float, float], ...]   # (t, q_elastic, q_surface)


def difference_quotient_er(state: State, material: MaterialSpec,
                           F: SurfaceEnergySpec, field: VectorField,
                           ts: Sequence[float], steps: int = 16
                           ) -> QuotientReport:
    """Flow-transport energy quotients against the volume release rate.

    For each t the state is pushed along the field's flow and the elastic
    quotient -(E_el(t) - E_el(0))/t and surface quotient (F(t) - F(0))/t are
    recorded.  The elastic quotient converges first order in t to the volume
    release rate of the same field; the fitted slope of the mismatch is
    reported so convergence can be asserted by the caller.
    """
    ts = sorted(float(t) for t in ts)
    if not ts or ts[0] <= 0:
        raise MeasuresError("need positive quotient offsets t")
    mesh = state.space.mesh
    er = energy_release_rate(state, material, field, check=False)
    e0 = state.energy
    rows = []
    for t in ts:
        flow = integrate_flow(mesh, field, t, steps=steps)
        pushed = pushforward_state(state, flow, material, F)
        q_el = -(pushed.energy.elastic - e0.elastic) / t
        q_surf = (pushed.energy.surface - e0.surface) / t
        rows.append((t, float(q_el), float(q_surf)))
    tarr = np.array([r[0] for r in rows])
    qel = np.array([r[1] for r in rows])
    qsf = np.array([r[2] for r in rows])

    def _fit_origin(vals: np.ndarray) -> MeasureEstimate:
        if len(ts) >= 2:
            coef = np.polyfit(tarr, vals, 1)
            v0 = float(coef[1])
        else:
            v0 = float(vals[0])
        err = max(abs(v0 - float(vals[0])),
                  (float(vals.max()) - float(vals.min())) / 2.0)
        return MeasureEstimate(v0, float(err),
                               tuple(zip(map(float, tarr), map(float, vals))),
                               "linear-fit-to-zero")

    scale = 1.0 + abs(er.value)
    diffs = np.abs(qel - er.value)
    mask = diffs > 1e-13 * scale
    slope = float("nan")
    if mask.sum() >= 2:
        slope = float(np.polyfit(np.log(tarr[mask]),
                                 np.log(diffs[mask]), 1)[0])
    return QuotientReport(er.value, _fit_origin(qel), _fit_origin(qsf),
                          slope, tuple(rows))
