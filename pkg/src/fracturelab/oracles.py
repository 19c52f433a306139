"""Closed-form and brute-force reference solutions.

Everything here is deliberately independent of the production code paths it
checks: the bar threshold is pure algebra, the slit-disk state is built from
the analytic near-tip field by interpolation (no solve), and the brute-force
minimizer re-enumerates crack families recursively and solves each candidate
with dense linear algebra assembled by plain loops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .elastostatics import (BoundaryDisplacement, CrackedSpace, State,
                            interpolate_state)
from .energetics import MaterialSpec, SurfaceEnergySpec
from .geometry import (CrackSet, Mesh, build_slit_disk_mesh, crack_from_path,
                       empty_crack)


class OracleError(ValueError):
    pass


# ---------------------------------------------------------------------------
# 1D bar
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BarOracle:
    """Stretched bar of length L, stiffness k, toughness G at pull t.

    The uncracked bar stores k t^2 / (2 L); any break frees all of it (each
    piece keeps one free end), so m breaks cost exactly G m.  The threshold
    pull where one break becomes worthwhile is sqrt(2 G L / k).
    """

    k: float
    G: float
    L: float
    t: float

    @property
    def t_star(self) -> float:
        return math.sqrt(2.0 * self.G * self.L / self.k)

    @property
    def energy_unbroken(self) -> float:
        return 0.5 * self.k * self.t * self.t / self.L

    def energy_broken(self, m: int = 1) -> float:
        return self.G * m

    @property
    def minimal_kind(self) -> str:
        eu, eb = self.energy_unbroken, self.energy_broken(1)
        if abs(eu - eb) <= 1e-12 * (1.0 + eu + eb):
            return "tie"
        return "unbroken" if eu < eb else "broken"

    @property
    def minimal_energy(self) -> float:
        return min(self.energy_unbroken, self.energy_broken(1))


def oracle_1d(k: float, G: float, L: float, t: float) -> BarOracle:
    if min(k, G, L) <= 0:
        raise OracleError("k, G, L must be positive")
    return BarOracle(k, G, L, t)


# ---------------------------------------------------------------------------
# Manufactured slit-disk state
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SlitDiskExact:
    """Closed forms for the mode-III near-tip field A sqrt(r) sin(theta/2)."""

    amplitude: float
    mu: float
    radius: float

    @property
    def release_rate(self) -> float:
        return math.pi * self.mu * self.amplitude ** 2 / 4.0

    @property
    def concentration_quotient(self) -> float:
        # energy in B(0, r) is mu A^2 pi r / 4, so the quotient is flat in r
        return self.release_rate

    def energy_in_ball(self, r: float) -> float:
        return math.pi * self.mu * self.amplitude ** 2 * r / 4.0

    @property
    def total_energy(self) -> float:
        return self.energy_in_ball(self.radius)


def manufactured_slit_state(material: MaterialSpec, F: SurfaceEnergySpec,
                            radius: float = 1.0, h: float = 1.0 / 64.0,
                            amplitude: float = 1.0
                            ) -> tuple[State, CrackSet, SlitDiskExact]:
    """Interpolated singular state on the slit unit disk; no solve involved.

    The displacement is A sqrt(r) sin(theta/2) with the jump across the slit
    along theta = pi; slit wedges pick their branch by barycenter side.  The
    crack runs from the rim to the center, whose node is the single tip.
    """
    if material.kind != "antiplane":
        raise OracleError("the manufactured field is antiplane")
    mesh, slit_path = build_slit_disk_mesh(radius, h)
    crack = crack_from_path(mesh, slit_path)
    space = CrackedSpace(mesh, crack)
    A = float(amplitude)

    def base_values(pts: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(pts, axis=1)
        theta = np.arctan2(pts[:, 1], pts[:, 0])
        return A * np.sqrt(r) * np.sin(0.5 * theta)

    def side_hint(barycenter: np.ndarray, node: int) -> float:
        p = mesh.nodes[node]
        r = float(np.linalg.norm(p))
        sign = 1.0 if barycenter[1] > 0 else -1.0
        return sign * A * math.sqrt(r)

    state = interpolate_state(space, base_values, material, F,
                              side_hint=side_hint)
    exact = SlitDiskExact(A, material.mu, radius)
    return state, crack, exact


# ---------------------------------------------------------------------------
# Brute-force minimality
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BruteForceResult:
    best_crack: str
    best_energy: float
    table: tuple[tuple[str, float], ...]
    family_size: int


def _dense_solve_energy(mesh: Mesh, crack: CrackSet, mu: float,
                        u0: BoundaryDisplacement, F: SurfaceEnergySpec
                        ) -> float:
    """Total energy of the candidate by dense assembly, plain loops.

    Least squares handles severed floating pieces (consistent singular
    system) by the minimum-norm solution, which grounds them at zero.
    """
    space = CrackedSpace(mesh, crack)
    n = space.n_dofs
    A = np.zeros((n, n))
    for t in range(mesh.n_elements):
        gd = mesh.shape_gradients[t]
        vol = mesh.element_volumes[t]
        dofs = space.dof_table[t]
        for i in range(mesh.dim + 1):
            for j in range(mesh.dim + 1):
                A[dofs[i], dofs[j]] += mu * vol * float(gd[i] @ gd[j])
    u = np.zeros(n)
    fixed = np.zeros(n, dtype=bool)
    for v in sorted(mesh.boundary_nodes):
        if v in crack.nodes:
            continue
        d = space.node_dofs[v][0]
        fixed[d] = True
        u[d] = float(u0(mesh.nodes[v][None, :])[0])
    free = ~fixed
    if free.any():
        Aff = A[np.ix_(free, free)]
        b = -A[np.ix_(free, fixed)] @ u[fixed]
        u[free] = np.linalg.lstsq(Aff, b, rcond=None)[0]
    elastic = 0.0
    for t in range(mesh.n_elements):
        gd = mesh.shape_gradients[t]
        dofs = space.dof_table[t]
        g = np.zeros(mesh.dim)
        for i in range(mesh.dim + 1):
            g += u[dofs[i]] * gd[i]
        elastic += mesh.element_volumes[t] * 0.5 * mu * float(g @ g)
    from .energetics import surface_energy
    return elastic + surface_energy(F, crack)


def _enumerate_recursive(mesh: Mesh, crack: CrackSet, depth: int,
                         nucleation: bool, seen: set) -> list[CrackSet]:
    """Depth-first family enumeration (independent of the search module)."""
    out = []
    if depth == 0:
        return out
    moves: list[CrackSet] = []
    if mesh.dim == 1:
        free = sorted(set(range(mesh.n_nodes)) - mesh.boundary_nodes
                      - crack.nodes)
        from .geometry import add_break_node
        moves = [add_break_node(crack, v) for v in free]
    else:
        from .geometry import extend_crack
        for tip in crack.tips:
            for nbr in mesh.node_neighbors[tip]:
                if nbr not in crack.nodes:
                    moves.append(extend_crack(crack, tip, nbr))
        if nucleation and not crack.tips:
            bfacets = {(min(int(a), int(b)), max(int(a), int(b)))
                       for a, b in mesh.boundary}
            for a, b in sorted(mesh.edges - bfacets):
                if a not in crack.nodes and b not in crack.nodes:
                    moves.append(CrackSet(mesh, crack.components + ((a, b),)))
    for m in moves:
        key = (m.edge_set, frozenset(m.nodes))
        if key in seen:
            continue
        seen.add(key)
        out.append(m)
        out.extend(_enumerate_recursive(mesh, m, depth - 1, nucleation, seen))
    return out


def brute_force_absmin(mesh: Mesh, K: CrackSet | None,
                       u0: BoundaryDisplacement, material: MaterialSpec,
                       F: SurfaceEnergySpec, depth: int = 2,
                       nucleation: bool = False, cap: int = 10000
                       ) -> BruteForceResult:
    """Reference minimizer over the same family, by independent means."""
    if material.kind != "antiplane":
        raise OracleError("brute force covers the antiplane density only")
    if K is None:
        K = empty_crack(mesh)
    family = [K] + _enumerate_recursive(
        mesh, K, depth, nucleation, {(K.edge_set, frozenset(K.nodes))})
    if len(family) > cap:
        raise OracleError(f"family of {len(family)} exceeds the cap {cap}")
    rows = []
    for crack in family:
        e = _dense_solve_energy(mesh, crack, material.mu, u0, F)
        rows.append((crack, float(e)))
    lowest = min(e for _, e in rows)
    tie = 1e-12 * (1.0 + abs(lowest))
    contenders = [(c, e) for c, e in rows if e <= lowest + tie]
    # among near-ties mirror the search rule: smaller crack first
    contenders.sort(key=lambda row: (row[0].length(),
                                     sorted(row[0].edge_set),
                                     sorted(row[0].nodes), row[1]))
    best_crack, best_energy = contenders[0]
    return BruteForceResult(best_crack.describe(), float(best_energy),
                            tuple((c.describe(), e) for c, e in rows),
                            len(family))
