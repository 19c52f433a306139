"""Admissible states, the energy partial order, and minimality searches.

A state (u, S) is admissible for boundary data u0 and initial crack K when S
contains K and u matches u0 on the uncracked boundary.  States are compared
by the order "(v, L) below (u, S)": L contains S, the boundary traces agree
off L, and the total energy does not increase.  Equilibrium means no strictly
lower comparable state; absolute minimality means lowest energy among all
admissible states.

Numerically both notions are certified against a finite family: every crack
reachable from the reference by growing at tips (plus optional single-edge
nucleation) up to a fixed depth, each equipped with its own energy minimizer.
Certificates carry the full table and say exactly what was searched, so a
"yes" is always relative to the declared family.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .elastostatics import (BoundaryDisplacement, CrackedSpace, State,
                            solve_displacement)
from .energetics import MaterialSpec, SurfaceEnergySpec
from .geometry import (CrackSet, GeometryError, Mesh, add_break_node,
                       crack_from_path, empty_crack, extend_crack)


class StatesError(ValueError):
    """Raised for ill-posed admissibility or search requests."""


# ---------------------------------------------------------------------------
# Admissibility and order
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AdmissibilityReport:
    ok: bool
    crack_contains_required: bool
    boundary_match: bool
    max_boundary_mismatch: float


def is_admissible(state: State, K: CrackSet | None,
                  u0: BoundaryDisplacement, tol: float = 1e-9
                  ) -> AdmissibilityReport:
    """Check (u, S) against Adm(u0, K): K inside S, trace match off S."""
    S = state.space.crack
    contains = True if K is None or K.is_empty() else K.issubset(S)
    mesh = state.space.mesh
    ddofs = state.space.dirichlet_dofs
    if len(ddofs):
        want = u0(mesh.nodes[state.space.dof_node[ddofs]])
        scale = 1.0 + float(np.abs(want).max())
        mismatch = float(np.abs(state.u[ddofs] - want).max())
    else:
        scale, mismatch = 1.0, 0.0
    boundary_ok = mismatch <= tol * scale
    return AdmissibilityReport(contains and boundary_ok, contains,
                               boundary_ok, mismatch)


@dataclass(frozen=True)
class OrderWitness:
    holds: bool
    crack_contains: bool        # candidate crack contains the reference crack
    boundary_match: bool        # traces agree off the candidate crack
    energy_le: bool
    energy_gap: float           # E(reference) - E(candidate)
    max_boundary_mismatch: float


def leq(candidate: State, reference: State, tol: float = 1e-9
        ) -> OrderWitness:
    """Does `candidate` sit below `reference` in the state order?

    Below means: candidate crack contains the reference crack, boundary
    traces agree away from the candidate crack, and candidate energy is no
    larger (within tol, scaled by the energy magnitude).
    """
    L, S = candidate.space.crack, reference.space.crack
    mesh = candidate.space.mesh
    contains = S.issubset(L)
    mismatch = 0.0
    for v in sorted(mesh.boundary_nodes):
        if v in L.nodes:
            continue
        mismatch = max(mismatch, abs(candidate.node_value(v)
                                     - reference.node_value(v)))
    scale = 1.0 + max(abs(candidate.energy.total), abs(reference.energy.total))
    boundary_ok = mismatch <= tol * scale
    gap = reference.energy.total - candidate.energy.total
    energy_ok = gap >= -tol * scale
    return OrderWitness(contains and boundary_ok and energy_ok,
                        contains, boundary_ok, energy_ok, gap, mismatch)


# ---------------------------------------------------------------------------
# Candidate extension families
# ---------------------------------------------------------------------------


def candidate_extensions(mesh: Mesh, S: CrackSet, depth: int,
                         nucleation: bool = False) -> list[CrackSet]:
    """Proper extensions of S reachable within `depth` growth steps.

    2D cracks grow one edge at a time at their tips, never re-entering crack
    nodes; 1D cracks grow by new interior break nodes.  Nucleation (2D) adds
    single interior edges as fresh components when S has no tips to grow.
    The reference crack itself is not in the list.
    """
    if depth < 0:
        raise StatesError("depth must be nonnegative")
    if mesh.dim == 1:
        free = sorted(set(v for v in range(mesh.n_nodes))
                      - mesh.boundary_nodes - S.nodes)
        out = []
        for count in range(1, depth + 1):
            for combo in itertools.combinations(free, count):
                crack = S
                for v in combo:
                    crack = add_break_node(crack, v)
                out.append(crack)
        return out

    seen = {S.edge_set}
    frontier = [S]
    out: list[CrackSet] = []
    for _ in range(depth):
        nxt: list[CrackSet] = []
        for crack in frontier:
            grown = []
            for tip in crack.tips:
                for nbr in mesh.node_neighbors[tip]:
                    if nbr in crack.nodes:
                        continue
                    grown.append(extend_crack(crack, tip, nbr))
            if nucleation and not crack.tips:
                bfacets = {(min(int(a), int(b)), max(int(a), int(b)))
                           for a, b in mesh.boundary}
                for a, b in sorted(mesh.edges - bfacets):
                    if a in crack.nodes or b in crack.nodes:
                        continue
                    grown.append(CrackSet(mesh, crack.components + ((a, b),),
                                          crack.required))
            for g in grown:
                if g.edge_set not in seen:
                    seen.add(g.edge_set)
                    nxt.append(g)
                    out.append(g)
        frontier = nxt
    out.sort(key=lambda c: (len(c.edge_set), sorted(c.edge_set)))
    return out


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SearchCertificate:
    """Record of a finite minimality search.

    `table` lists (crack description, surface measure, total energy) for the
    reference and every candidate, in evaluation order.  A positive verdict
    is always relative to this family; `kind` says how it was generated.
    """

    kind: str
    family_size: int
    base_energy: float
    best_energy: float
    best_crack: str
    refuted: bool
    tolerance: float
    table: tuple[tuple[str, float, float], ...]
    note: str = ""

    @property
    def equilibrium(self) -> bool:
        return not self.refuted


def _solve_candidate(mesh: Mesh, crack: CrackSet, material: MaterialSpec,
                     F: SurfaceEnergySpec, u0: BoundaryDisplacement) -> State:
    return solve_displacement(CrackedSpace(mesh, crack), material, F, u0)


def is_equilibrium(state: State, K: CrackSet | None,
                   u0: BoundaryDisplacement, material: MaterialSpec,
                   F: SurfaceEnergySpec, depth: int = 1,
                   tol_rel: float = 1e-9, nucleation: bool = False
                   ) -> SearchCertificate:
    """Certify minimality of (u, S) against its depth-limited extensions.

    Refuted when some candidate's minimizer has strictly lower total energy
    (beyond the relative tolerance).  The displacement side needs no search:
    the solve is already the energy minimizer at fixed crack.
    """
    S = state.space.crack
    if K is not None and not K.is_empty() and not K.issubset(S):
        raise StatesError("state crack does not contain the required crack")
    mesh = state.space.mesh
    e0 = state.energy.total
    tol = tol_rel * (1.0 + abs(e0))
    table = [(S.describe(), S.length(), e0)]
    best_energy, best_crack, refuted = e0, S.describe(), False
    for crack in candidate_extensions(mesh, S, depth, nucleation):
        cand = _solve_candidate(mesh, crack, material, F, u0)
        e = cand.energy.total
        table.append((crack.describe(), crack.length(), e))
        if e < best_energy - (tol if not refuted else 0.0):
            best_energy, best_crack, refuted = e, crack.describe(), True
    return SearchCertificate(
        kind=f"exhaustive-to-depth-{depth}",
        family_size=len(table) - 1,
        base_energy=e0, best_energy=best_energy, best_crack=best_crack,
        refuted=refuted, tolerance=tol, table=tuple(table),
        note="minimality certified against tip-growth extensions only")


def find_absolute_minimum(mesh: Mesh, K: CrackSet | None,
                          u0: BoundaryDisplacement, material: MaterialSpec,
                          F: SurfaceEnergySpec, depth: int = 2,
                          budget: int = 10000, nucleation: bool = False,
                          mode: str = "exhaustive"
                          ) -> tuple[State, SearchCertificate]:
    """Lowest-energy state over K and its depth-limited extensions.

    Ties (within the tie tolerance) resolve to the smaller crack, then to
    the lexicographically smaller edge list; candidates are evaluated in
    that order and must beat the incumbent strictly.  mode='greedy' grows
    one best edge at a time instead (local search for oversized families).
    """
    if K is None:
        K = empty_crack(mesh)
    if mode == "greedy":
        return _greedy_minimum(mesh, K, u0, material, F, budget, nucleation)
    family = [K] + candidate_extensions(mesh, K, depth, nucleation)
    if len(family) > budget:
        raise StatesError(
            f"family of {len(family)} states exceeds budget {budget}; "
            "raise the budget or use mode='greedy'")
    best_state, best_cert_row = None, None
    table = []
    for crack in family:
        cand = _solve_candidate(mesh, crack, material, F, u0)
        e = cand.energy.total
        table.append((crack.describe(), crack.length(), e))
        tie = 1e-12 * (1.0 + abs(e) + abs(table[0][2]))
        if best_state is None or e < best_state.energy.total - tie:
            best_state, best_cert_row = cand, table[-1]
    cert = SearchCertificate(
        kind=f"exhaustive-to-depth-{depth}",
        family_size=len(family),
        base_energy=table[0][2], best_energy=best_state.energy.total,
        best_crack=best_cert_row[0], refuted=best_cert_row != table[0],
        tolerance=1e-12 * (1.0 + abs(table[0][2])),
        table=tuple(table),
        note="global only relative to the enumerated family")
    return best_state, cert


def _greedy_minimum(mesh: Mesh, K: CrackSet, u0: BoundaryDisplacement,
                    material: MaterialSpec, F: SurfaceEnergySpec,
                    budget: int, nucleation: bool
                    ) -> tuple[State, SearchCertificate]:
    current = K
    state = _solve_candidate(mesh, current, material, F, u0)
    table = [(current.describe(), current.length(), state.energy.total)]
    evaluations = 1
    while True:
        tol = 1e-12 * (1.0 + abs(state.energy.total))
        best, best_state = None, None
        for crack in candidate_extensions(mesh, current, 1, nucleation):
            cand = _solve_candidate(mesh, crack, material, F, u0)
            evaluations += 1
            table.append((crack.describe(), crack.length(),
                          cand.energy.total))
            if evaluations > budget:
                raise StatesError("greedy search exceeded its budget")
            if cand.energy.total < state.energy.total - tol and \
                    (best is None or cand.energy.total
                     < best_state.energy.total - tol):
                best, best_state = crack, cand
        if best is None:
            break
        current, state = best, best_state
    cert = SearchCertificate(
        kind="greedy", family_size=evaluations,
        base_energy=table[0][2], best_energy=state.energy.total,
        best_crack=current.describe(),
        refuted=current.describe() != table[0][0],
        tolerance=1e-12, table=tuple(table),
        note="greedy descent: local minimum of single-edge moves")
    return state, cert
