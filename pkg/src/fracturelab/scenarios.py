"""Canonical desk scenarios shared by the verify command and the test suite.

Each builder returns solved (or interpolated) states together with the
physics objects needed to re-derive them; standard_battery assembles the
certified-equilibrium collection that the concentration-inequality checks
sweep over.  Scenario tuning lives here so the CLI and the tests exercise
the same constructions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (CrackSet, Mesh, Region, ball_region,
                       build_interval_mesh, build_rect_mesh,
                       build_slit_disk_mesh, crack_from_path, empty_crack,
                       whole_region)
from .energetics import MaterialSpec, SurfaceEnergySpec
from .elastostatics import (BoundaryDisplacement, CrackedSpace, State,
                            solve_displacement)
from .states import SearchCertificate, is_equilibrium
from .quasistatic import LoadSchedule
from .oracles import manufactured_slit_state


def midline_path(mesh: Mesh, x_lo: float, x_hi: float,
                 y: float = 0.5) -> list[int]:
    """Node path along the horizontal line y, between two abscissas."""
    sel = [v for v in range(mesh.n_nodes)
           if abs(mesh.nodes[v, 1] - y) < 1e-12
           and x_lo - 1e-12 <= mesh.nodes[v, 0] <= x_hi + 1e-12]
    if len(sel) < 2:
        raise ValueError(f"no midline nodes in [{x_lo}, {x_hi}] at y={y}")
    return sorted(sel, key=lambda v: mesh.nodes[v, 0])


def tear_boundary(t: float, y_mid: float = 0.5) -> BoundaryDisplacement:
    """Antisymmetric tearing load +-t across the horizontal midline."""
    return BoundaryDisplacement(
        lambda p, t=float(t): t * np.sign(p[:, 1] - y_mid),
        label=f"tear t={t:g}", breaks=True)


def step_boundary(t: float, x_step: float = 0.5) -> BoundaryDisplacement:
    """1D bar load: 0 left of the step, t right of it."""
    return BoundaryDisplacement(
        lambda p, t=float(t): np.where(p[:, 0] > x_step, t, 0.0),
        label=f"step t={t:g}", breaks=True)


# ---------------------------------------------------------------------------
# Individual scenarios
# ---------------------------------------------------------------------------


def bar_state(t: float, G: float = 1.0, L: float = 1.0, mu: float = 1.0,
              segments: int = 8, broken: bool = False
              ) -> tuple[State, CrackSet, MaterialSpec, SurfaceEnergySpec,
                         BoundaryDisplacement]:
    """Clamped 1D bar under end displacement t, optionally broken mid-span."""
    mesh = build_interval_mesh(L, segments)
    mid = segments // 2
    crack = crack_from_path(mesh, [mid]) if broken else empty_crack(mesh)
    material = MaterialSpec("antiplane", mu=mu)
    F = SurfaceEnergySpec("griffith", G=G)
    u0 = step_boundary(t, x_step=mesh.nodes[mid, 0] - 1e-9)
    state = solve_displacement(CrackedSpace(mesh, crack), material, F, u0)
    return state, crack, material, F, u0


def tear_state(crack_to: float, t: float, G: float, resolution: int = 48,
               width: float = 2.0, height: float = 1.0
               ) -> tuple[State, CrackSet, MaterialSpec, SurfaceEnergySpec,
                          BoundaryDisplacement]:
    """Rect membrane torn across a straight edge crack from the left side."""
    mesh = build_rect_mesh(width, height, resolution)
    crack = crack_from_path(mesh, midline_path(mesh, 0.0, crack_to,
                                               height / 2.0))
    material = MaterialSpec("antiplane", mu=1.0)
    F = SurfaceEnergySpec("griffith", G=G)
    u0 = tear_boundary(t, height / 2.0)
    state = solve_displacement(CrackedSpace(mesh, crack), material, F, u0)
    return state, crack, material, F, u0


def disk_state(amplitude: float, G: float, h: float = 1.0 / 32.0,
               solve: bool = True
               ) -> tuple[State, CrackSet, MaterialSpec, SurfaceEnergySpec,
                          BoundaryDisplacement]:
    """Slit disk under the square-root tip trace; solved or interpolated."""
    material = MaterialSpec("antiplane", mu=1.0)
    F = SurfaceEnergySpec("griffith", G=G)
    if not solve:
        state, crack, _ = manufactured_slit_state(material, F, h=h,
                                                  amplitude=amplitude)
        return state, crack, material, F, state.boundary

    mesh, slit = build_slit_disk_mesh(1.0, h)
    crack = crack_from_path(mesh, slit)
    A = float(amplitude)

    def trace(p: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(p, axis=1)
        theta = np.arctan2(p[:, 1], p[:, 0])
        return A * np.sqrt(r) * np.sin(0.5 * theta)

    u0 = BoundaryDisplacement(trace, label=f"sqrt-tip A={A:g}", breaks=True)
    state = solve_displacement(CrackedSpace(mesh, crack), material, F, u0)
    return state, crack, material, F, u0


def barrier_scenario() -> dict:
    """Metastable two-well setup: a tough ring traps the depth-1 tip.

    The toughness is 5 within 0.3 of the initial tip and 0.2 beyond, so at
    t=1.5 every one-edge extension raises the total energy while the straight
    two-edge extension through the ring lowers it by about 1.0 - the depth-1
    equilibrium evolution and the depth-2 minimal evolution part ways there.
    """
    mesh = build_rect_mesh(2.0, 1.0, 4)
    K = crack_from_path(mesh, midline_path(mesh, 0.0, 0.5))
    material = MaterialSpec("antiplane", mu=1.0)
    tip0 = np.array([0.5, 0.5])

    def tough(p: np.ndarray) -> np.ndarray:
        d = np.linalg.norm(p - tip0, axis=1)
        return np.where(d < 0.3, 5.0, 0.2)

    F = SurfaceEnergySpec("weighted", weight=tough, weight_bounds=(0.2, 5.0))
    times = (0.6, 1.0, 1.5)
    schedule = LoadSchedule(times, tear_boundary)
    return {"mesh": mesh, "K": K, "material": material, "F": F,
            "schedule": schedule, "hop_depth": 1, "depth": 2}


def growth_scenario(resolution: int = 48) -> dict:
    """Tear ramp that advances the crack one edge and arrests it.

    The toughness staircase (2 up to x=0.77, then rising 200 per unit) lets
    the t=1.2 step grow exactly one edge in every search mode: the tear
    supplies about 2.9 per unit advance, above 2 but below the cost of any
    edge past the step.  One-pass minimal, greedy, and the hop-to-rest
    equilibrium evolution therefore land on the same trajectory, with the
    first two load steps holding still.
    """
    mesh = build_rect_mesh(2.0, 1.0, resolution)
    K = crack_from_path(mesh, midline_path(mesh, 0.0, 0.75))
    material = MaterialSpec("antiplane", mu=1.0)

    def tough(p: np.ndarray) -> np.ndarray:
        return 2.0 + 200.0 * np.maximum(p[:, 0] - 0.77, 0.0)

    F = SurfaceEnergySpec("weighted", weight=tough,
                          weight_bounds=(2.0, 2.0 + 200.0 * 1.23))
    schedule = LoadSchedule((0.5, 0.9, 1.2), tear_boundary)
    return {"mesh": mesh, "K": K, "material": material, "F": F,
            "schedule": schedule, "depth": 1}


def threshold_scenario(segments: int = 8) -> dict:
    """1D bar ramp through the closed-form critical load sqrt(2)."""
    mesh = build_interval_mesh(1.0, segments)
    K = empty_crack(mesh)
    material = MaterialSpec("antiplane", mu=1.0)
    F = SurfaceEnergySpec("griffith", G=1.0)
    schedule = LoadSchedule((0.5, 1.0, 1.3, 1.5, 1.8), step_boundary)
    return {"mesh": mesh, "K": K, "material": material, "F": F,
            "schedule": schedule, "depth": 1}


# ---------------------------------------------------------------------------
# The certified battery
# ---------------------------------------------------------------------------

# Shell ladder for the battery disks: their element diameter (about 0.068 at
# the resolution used here) leaves room for only two rungs of the default
# 2/3-ratio ladder, so the disks carry a denser one staying above 3 h.
_DISK_RADII = (0.45, 0.36, 0.288, 0.2304)


@dataclass(frozen=True)
class BatteryMember:
    """One state of the inequality battery with its stationarity evidence."""

    name: str
    state: State
    crack: CrackSet
    material: MaterialSpec
    F: SurfaceEnergySpec
    u0: BoundaryDisplacement
    region: Region
    certificate: SearchCertificate | None
    equilibrium: bool
    radii: tuple[float, ...] | None = None


def _certified(name: str, built, region: Region | None = None,
               depth: int = 1,
               radii: tuple[float, ...] | None = None) -> BatteryMember:
    state, crack, material, F, u0 = built
    cert = is_equilibrium(state, crack, u0, material, F, depth=depth)
    return BatteryMember(name, state, crack, material, F, u0,
                         region or whole_region(state.space.mesh),
                         cert, cert.equilibrium, radii)


def standard_battery(include_nonequilibrium: bool = False
                     ) -> list[BatteryMember]:
    """Certified equilibrium states across dimensions, toughness, and load.

    Four bars (two intact below their thresholds, two broken), two solved
    slit disks, and four torn membranes with different crack lengths; one
    membrane member measures in a ball region around its tip.  With
    include_nonequilibrium an over-driven membrane is appended whose
    certificate is refuted, for precondition-gating checks.
    """
    members = [
        _certified("bar-intact-G1", bar_state(1.0, G=1.0)),
        _certified("bar-intact-G2", bar_state(1.5, G=2.0)),
        _certified("bar-broken-G1",
                   bar_state(1.8, G=1.0, segments=16, broken=True)),
        _certified("bar-broken-G05",
                   bar_state(1.5, G=0.5, L=2.0, segments=20, broken=True)),
        _certified("disk-A1-G2", disk_state(1.0, G=2.0),
                   radii=_DISK_RADII),
        _certified("disk-A12-G5", disk_state(1.2, G=5.0),
                   radii=_DISK_RADII),
        _certified("tear-l075-t12-G4", tear_state(0.75, 1.2, G=4.0)),
        _certified("tear-l10-t15-G6", tear_state(1.0, 1.5, G=6.0)),
        _certified("tear-l125-t10-G3", tear_state(1.25, 1.0, G=3.0)),
    ]
    ball_member = tear_state(1.0, 1.2, G=5.0)
    mesh = ball_member[0].space.mesh
    tip = sorted(ball_member[1].tips)[0]
    members.append(_certified(
        "tear-l10-ball", ball_member,
        region=ball_region(mesh, mesh.nodes[tip], 0.4)))
    if include_nonequilibrium:
        members.append(_certified("tear-overdriven",
                                  tear_state(1.0, 3.0, G=1.0)))
    return members


# ---------------------------------------------------------------------------
# Random surface-functional sweeps
# ---------------------------------------------------------------------------


def random_crack(mesh: Mesh, rng: np.random.Generator,
                 max_edges: int = 6) -> CrackSet:
    """Random self-avoiding edge path on the mesh skeleton."""
    for _ in range(64):
        path = [int(rng.integers(mesh.n_nodes))]
        for _ in range(int(rng.integers(1, max_edges + 1))):
            nbrs = [n for n in mesh.node_neighbors[path[-1]]
                    if n not in path]
            if not nbrs:
                break
            path.append(int(nbrs[int(rng.integers(len(nbrs)))]))
        if len(path) >= 2:
            return crack_from_path(mesh, path)
    raise RuntimeError("could not draw a random crack path")


def hypothesis_sweep(F, mesh: Mesh, pairs: int,
                     rng: np.random.Generator) -> dict:
    """Random subadditivity and dilation checks plus the two shell probes.

    Draws `pairs` random crack pairs for the union inequality and as many
    random dilations (center anywhere in the bounding box, factor in
    [0.25, 2.5]); the shell probes run once, on a point set expected to
    stay finite and a segment expected to trip the divergence flag.
    """
    from .energetics import check_h1, check_h2, check_h3

    lo = mesh.nodes.min(axis=0)
    hi = mesh.nodes.max(axis=0)
    h1_fail = h2_fail = 0
    h1_slack = h2_slack = math.inf
    for _ in range(pairs):
        A = random_crack(mesh, rng)
        B = random_crack(mesh, rng)
        r1 = check_h1(F, A, B)
        h1_fail += 0 if r1.ok else 1
        h1_slack = min(h1_slack, float(r1.values["slack"]))
        center = lo + rng.random(mesh.dim) * (hi - lo)
        factor = float(0.25 + 2.25 * rng.random())
        r2 = check_h2(F, A, center, factor)
        h2_fail += 0 if r2.ok else 1
        h2_slack = min(h2_slack, float(r2.values["slack"]))
    mid = 0.5 * (lo + hi)
    point_probe = check_h3(F, mid.reshape(1, -1), mesh)
    if mesh.dim == 2:
        seg = np.array([[mid[0] - 0.2 * (hi[0] - lo[0]), mid[1]],
                        [mid[0] + 0.2 * (hi[0] - lo[0]), mid[1]]])
        segment_probe = check_h3(F, [seg], mesh)
    else:
        segment_probe = None
    return {"pairs": pairs, "h1_failures": h1_fail, "h2_failures": h2_fail,
            "h1_worst_slack": h1_slack, "h2_worst_slack": h2_slack,
            "point_probe": point_probe, "segment_probe": segment_probe}
