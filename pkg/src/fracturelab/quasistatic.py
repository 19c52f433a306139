"""Rate-independent crack evolution under a loading program.

Two drivers share the same skeleton.  The minimal driver picks, at every
load step, the lowest-energy state among all depth-limited extensions of the
current crack (global selection).  The equilibrium driver only hops when the
current crack stops being a local minimum against its short-range
extensions, then follows best single hops until it settles (local
selection).  Both enforce irreversibility by construction; the audit
re-checks every axiom after the fact, including the cross-step comparison
that earlier cracks cost no less at later loads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .elastostatics import (BoundaryDisplacement, CrackedSpace, State,
                            solve_displacement)
from .energetics import MaterialSpec, SurfaceEnergySpec
from .geometry import CrackSet, Mesh, Region, empty_crack, whole_region
from .measures import (MeasureEstimate, elastic_concentration,
                       er_total_variation, surface_concentration)
from .states import (SearchCertificate, candidate_extensions,
                     find_absolute_minimum, is_equilibrium)


class QuasistaticError(RuntimeError):
    """Raised when an evolution or bisection cannot proceed."""


# ---------------------------------------------------------------------------
# Load schedules and trajectories
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LoadSchedule:
    """Monotone load program: times plus boundary data per time."""

    times: tuple[float, ...]
    u0_at: Callable[[float], BoundaryDisplacement]

    def __post_init__(self):
        ts = tuple(float(t) for t in self.times)
        if len(ts) < 1 or any(b <= a for a, b in zip(ts[:-1], ts[1:])):
            raise QuasistaticError("schedule times must strictly increase")
        object.__setattr__(self, "times", ts)


@dataclass
class TrajectoryStep:
    t: float
    state: State
    certificate: SearchCertificate
    hops: tuple[str, ...] = ()


@dataclass
class Trajectory:
    mode: str                      # minimal | equilibrium
    K: CrackSet
    steps: list[TrajectoryStep]
    material: MaterialSpec
    F: SurfaceEnergySpec
    schedule: LoadSchedule

    def cracks(self) -> list[CrackSet]:
        return [s.state.space.crack for s in self.steps]

    def energy_rows(self) -> list[tuple[float, float, float, float, float]]:
        """(t, elastic, surface, total, crack measure) per step."""
        out = []
        for s in self.steps:
            e = s.state.energy
            out.append((s.t, e.elastic, e.surface, e.total,
                        s.state.space.crack.length()))
        return out


def evolve_minimal(mesh: Mesh, K: CrackSet | None, material: MaterialSpec,
                   F: SurfaceEnergySpec, schedule: LoadSchedule,
                   depth: int = 2, budget: int = 10000,
                   nucleation: bool = False,
                   mode: str = "exhaustive") -> Trajectory:
    """Globally minimal evolution: each step minimizes over extensions of
    the previous crack, so irreversibility and minimality hold by
    construction."""
    if K is None:
        K = empty_crack(mesh)
    current = K
    steps: list[TrajectoryStep] = []
    for t in schedule.times:
        u0 = schedule.u0_at(t)
        state, cert = find_absolute_minimum(
            mesh, current, u0, material, F, depth=depth, budget=budget,
            nucleation=nucleation, mode=mode)
        current = state.space.crack
        steps.append(TrajectoryStep(t, state, cert))
    return Trajectory("minimal", K, steps, material, F, schedule)


def evolve_equilibrium(mesh: Mesh, K: CrackSet | None,
                       material: MaterialSpec, F: SurfaceEnergySpec,
                       schedule: LoadSchedule, hop_depth: int = 1,
                       tol_rel: float = 1e-9, nucleation: bool = False,
                       max_hops: int = 10000) -> Trajectory:
    """Locally stable evolution: hold the crack while it remains a local
    minimum against hop_depth extensions; otherwise hop to the best
    improving candidate and re-test, landing on the first equilibrium."""
    if K is None:
        K = empty_crack(mesh)
    current = K
    steps: list[TrajectoryStep] = []
    for t in schedule.times:
        u0 = schedule.u0_at(t)
        state = solve_displacement(CrackedSpace(mesh, current), material, F,
                                   u0)
        hops: list[str] = []
        while True:
            cert = is_equilibrium(state, K, u0, material, F,
                                  depth=hop_depth, tol_rel=tol_rel,
                                  nucleation=nucleation)
            if cert.equilibrium:
                break
            if len(hops) >= max_hops:
                raise QuasistaticError(f"hop limit hit at t={t:g}")
            target = None
            for crack in candidate_extensions(mesh, state.space.crack,
                                              hop_depth, nucleation):
                if crack.describe() == cert.best_crack:
                    target = crack
                    break
            if target is None:
                raise QuasistaticError(
                    f"no admissible extension lowers the energy at t={t:g} "
                    "yet the state is not an equilibrium")
            hops.append(target.describe())
            current = target
            state = solve_displacement(CrackedSpace(mesh, current), material,
                                       F, u0)
        current = state.space.crack
        steps.append(TrajectoryStep(t, state, cert, tuple(hops)))
    return Trajectory("equilibrium", K, steps, material, F, schedule)


# ---------------------------------------------------------------------------
# Axiom audit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AuditReport:
    ok: bool
    checks: dict
    violations: tuple[str, ...]


def audit_axioms(trajectory: Trajectory, tol_rel: float = 1e-9
                 ) -> AuditReport:
    """Re-verify the evolution axioms on a computed trajectory.

    Initial containment and monotonicity are exact set inclusions; boundary
    compliance and the cross-step selection test (earlier cracks, resolved
    at later loads, cost at least the trajectory energy) use a relative
    tolerance scaled by the energy.
    """
    steps = trajectory.steps
    mat, F = trajectory.material, trajectory.F
    violations: list[str] = []
    checks: dict = {}

    k_in_s0 = trajectory.K.issubset(steps[0].state.space.crack) \
        if steps else True
    checks["initial_contains_K"] = k_in_s0
    if not k_in_s0:
        violations.append("first crack does not contain the initial crack")

    dirichlet_ok = True
    for s in steps:
        space = s.state.space
        u0 = trajectory.schedule.u0_at(s.t)
        dd = space.dirichlet_dofs
        if not len(dd):
            continue
        want = u0(space.mesh.nodes[space.dof_node[dd]])
        scale = 1.0 + float(np.abs(want).max())
        gap = float(np.abs(s.state.u[dd] - want).max())
        if gap > tol_rel * scale:
            dirichlet_ok = False
            violations.append(f"boundary data mismatch {gap:.3g} at t={s.t:g}")
    checks["boundary_compliance"] = dirichlet_ok

    certs_ok = all(s.certificate.equilibrium or
                   s.certificate.best_crack == s.state.space.crack.describe()
                   for s in steps)
    checks["stationarity_certificates"] = certs_ok
    if not certs_ok:
        violations.append("a step carries a refuting certificate")

    mono_ok = True
    for a, b in zip(steps[:-1], steps[1:]):
        if not a.state.space.crack.issubset(b.state.space.crack):
            mono_ok = False
            violations.append(
                f"crack not monotone between t={a.t:g} and t={b.t:g}")
    checks["irreversibility"] = mono_ok

    selection_ok = True
    mesh = steps[0].state.space.mesh if steps else None
    for j, sj in enumerate(steps):
        u0 = trajectory.schedule.u0_at(sj.t)
        ej = sj.state.energy.total
        tol = tol_rel * (1.0 + abs(ej))
        for i in range(j):
            si = steps[i]
            rival = solve_displacement(
                CrackedSpace(mesh, si.state.space.crack), mat, F, u0)
            if rival.energy.total < ej - tol:
                selection_ok = False
                violations.append(
                    f"crack from t={si.t:g} beats the t={sj.t:g} state by "
                    f"{ej - rival.energy.total:.3g}")
    checks["selection"] = selection_ok

    return AuditReport(not violations, checks, tuple(violations))


# ---------------------------------------------------------------------------
# Critical load
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CriticalLoadReport:
    t_star: float
    bracket: tuple[float, float]
    iterations: int
    evaluations: int
    pre_crack: str
    post_crack: str
    threshold: dict


def critical_load_bisection(mesh: Mesh, K: CrackSet | None,
                            material: MaterialSpec, F: SurfaceEnergySpec,
                            u0_at: Callable[[float], BoundaryDisplacement],
                            bracket: tuple[float, float],
                            tol: float = 1e-6, depth: int = 1,
                            budget: int = 10000, nucleation: bool = False
                            ) -> CriticalLoadReport:
    """Bisect the load at which the minimal state first grows the crack.

    The bracket must straddle the transition (still-K below, grown above),
    otherwise this raises.  The report compares the elastic energy drop
    against the surface cost at the located threshold.
    """
    if K is None:
        K = empty_crack(mesh)
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise QuasistaticError("bisection bracket is empty")
    evaluations = 0

    def grown(t: float) -> tuple[bool, State]:
        nonlocal evaluations
        state, _ = find_absolute_minimum(mesh, K, u0_at(t), material, F,
                                         depth=depth, budget=budget,
                                         nucleation=nucleation)
        evaluations += 1
        S = state.space.crack
        is_grown = not (S.edge_set == K.edge_set and S.nodes == K.nodes)
        return is_grown, state

    g_lo, state_lo = grown(lo)
    g_hi, state_hi = grown(hi)
    if g_lo or not g_hi:
        raise QuasistaticError(
            f"bracket ({lo:g}, {hi:g}) does not straddle the critical load: "
            f"grown(lo)={g_lo}, grown(hi)={g_hi}")
    iterations = 0
    pre_state, post_state = state_lo, state_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        g_mid, state_mid = grown(mid)
        if g_mid:
            hi, post_state = mid, state_mid
        else:
            lo, pre_state = mid, state_mid
        iterations += 1
    t_star = 0.5 * (lo + hi)
    threshold = {
        "elastic_pre": pre_state.energy.total,
        "surface_pre": pre_state.energy.surface,
        "energy_post": post_state.energy.total,
        "surface_post": post_state.energy.surface,
        "surface_increment": post_state.energy.surface
        - pre_state.energy.surface,
        "elastic_release": pre_state.energy.elastic
        - post_state.energy.elastic,
    }
    return CriticalLoadReport(t_star, (lo, hi), iterations, evaluations,
                              pre_state.space.crack.describe(),
                              post_state.space.crack.describe(), threshold)


# ---------------------------------------------------------------------------
# Propagation-step measure comparison
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PropagationStepReport:
    t: float
    region: str
    er_tv: float
    ce: MeasureEstimate
    cf: MeasureEstimate
    er_le_ce: bool
    ce_le_cf: bool
    eq_residual_er_ce: float
    eq_residual_ce_cf_raw: float
    eq_residual_ce_cf_per_tip: float


@dataclass(frozen=True)
class ChainReport:
    ok: bool
    steps: tuple[PropagationStepReport, ...]
    note: str


def verify_measure_chain(trajectory: Trajectory,
                         regions: Sequence[Region] | None = None,
                         radii: Sequence[float] | None = None
                         ) -> ChainReport:
    """Inequality chain |ER| <= CE <= CF at every propagation step.

    Inequalities are asserted up to combined error bars; equality residuals
    are reported in both shell normalizations (raw quotient and per-tip) and
    never asserted, since the shell quotient carries a 2*pi factor per
    isolated planar tip that the equality statement does not.
    """
    mat, F = trajectory.material, trajectory.F
    rows: list[PropagationStepReport] = []
    ok = True
    prev = trajectory.K
    for step in trajectory.steps:
        S = step.state.space.crack
        grew = not (S.edge_set == prev.edge_set and S.nodes == prev.nodes)
        prev = S
        if not grew:
            continue
        mesh = step.state.space.mesh
        step_regions = list(regions) if regions is not None \
            else [whole_region(mesh)]
        for D in step_regions:
            er = er_total_variation(step.state, mat, D, K=trajectory.K)
            ce = elastic_concentration(step.state, mat, D, radii=radii)
            cf = surface_concentration(F, S, D, radii=radii)
            er_le = er.value <= ce.value + ce.error \
                + 1e-9 * (1.0 + abs(er.value))
            ce_le = bool(cf.extras.get("divergent")) or \
                ce.value <= cf.value + ce.error + cf.error \
                + 1e-9 * (1.0 + abs(ce.value))
            ok = ok and er_le and ce_le
            per_tip = cf.extras.get("per_tip", cf.value)
            rows.append(PropagationStepReport(
                step.t, D.kind, er.value, ce, cf, er_le, ce_le,
                ce.value - er.value, cf.value - ce.value,
                per_tip - ce.value))
    return ChainReport(ok, tuple(rows),
                       "equalities reported as residuals only; shell "
                       "normalization differs by 2*pi per isolated tip")
