"""Cracked P1 spaces, solves, interpolation, and residual diagnostics."""

import math

import numpy as np
import pytest

from fracturelab.elastostatics import (
    BoundaryDisplacement,
    CrackedSpace,
    ElastostaticsError,
    State,
    constant_boundary,
    interpolate_state,
    pushforward_state,
    read_state,
    residual_report,
    solve_displacement,
    write_state,
)
from fracturelab.energetics import EnergyBreakdown, MaterialSpec, SurfaceEnergySpec
from fracturelab.geometry import (
    add_break_node,
    build_interval_mesh,
    build_rect_mesh,
    crack_from_path,
    empty_crack,
    integrate_flow,
    tip_extension_field,
    zero_field,
)
from fracturelab.oracles import oracle_1d
from fracturelab.scenarios import midline_path, step_boundary, tear_boundary, tear_state


class TestCrackedSpace:
    def test_uncracked_space_has_one_dof_per_node(self):
        mesh = build_rect_mesh(1.0, 1.0, 4)
        space = CrackedSpace(mesh, empty_crack(mesh))
        assert space.n_dofs == mesh.n_nodes

    def test_crack_duplicates_interior_path_nodes(self):
        """Each interior vertex strictly inside the crack path splits in two;
        the tip keeps one dof."""
        mesh = build_rect_mesh(2.0, 1.0, 8)
        path = midline_path(mesh, 0.0, 0.5)
        crack = crack_from_path(mesh, path)
        space = CrackedSpace(mesh, crack)
        # path nodes: boundary end, interior run, tip
        interior_run = len(path) - 2
        assert space.n_dofs == mesh.n_nodes + interior_run + 1  # +1: the
        # boundary endpoint also splits (two wedges meet the boundary there)
        tip = crack.tips[0]
        assert len(space.node_dofs[tip]) == 1

    def test_1d_break_splits_node(self):
        mesh = build_interval_mesh(1.0, 8)
        crack = add_break_node(empty_crack(mesh), 4)
        space = CrackedSpace(mesh, crack)
        assert space.n_dofs == mesh.n_nodes + 1
        assert len(space.node_dofs[4]) == 2


class TestSolve:
    def test_uncracked_bar_matches_closed_form(self):
        """Linear ramp between the clamped ends; energy k t^2 / (2 L)."""
        mesh = build_interval_mesh(1.0, 8)
        material = MaterialSpec("antiplane", mu=2.0)
        F = SurfaceEnergySpec("griffith", G=1.0)
        t = 1.3
        state = solve_displacement(CrackedSpace(mesh, empty_crack(mesh)),
                                   material, F, step_boundary(t))
        oracle = oracle_1d(k=2.0, G=1.0, L=1.0, t=t)
        assert abs(state.energy.elastic - oracle.energy_unbroken) \
            < 1e-10 * oracle.energy_unbroken
        assert state.energy.surface == 0.0
        # against the hand solution u(x) = t x
        for v in range(mesh.n_nodes):
            assert abs(state.node_value(v) - t * mesh.nodes[v, 0]) < 1e-9

    def test_broken_bar_relaxes_completely(self):
        """One break frees the bar: both halves ride rigidly with the ends."""
        mesh = build_interval_mesh(1.0, 8)
        crack = add_break_node(empty_crack(mesh), 4)
        material = MaterialSpec("antiplane", mu=1.0)
        F = SurfaceEnergySpec("griffith", G=0.8)
        state = solve_displacement(CrackedSpace(mesh, crack), material, F,
                                   step_boundary(1.7, x_step=0.5 - 1e-9))
        assert abs(state.energy.elastic) < 1e-20
        assert abs(state.energy.surface - 0.8) < 1e-14
        assert abs(state.node_value(2) - 0.0) < 1e-12
        assert abs(state.node_value(6) - 1.7) < 1e-12

    def test_tear_energy_scales_quadratically(self):
        """Elastic energy of the torn membrane is quadratic in the load."""
        e1 = tear_state(1.0, 1.0, G=1.0, resolution=12)[0].energy.elastic
        e2 = tear_state(1.0, 2.0, G=1.0, resolution=12)[0].energy.elastic
        assert abs(e2 - 4.0 * e1) < 1e-8 * e2

    def test_diagonal_pattern_insensitivity(self):
        """The two rect triangulations agree on the torn-state energy to
        discretization accuracy."""
        ea = tear_state(1.0, 1.5, G=1.0, resolution=24)[0].energy.elastic
        mesh = build_rect_mesh(2.0, 1.0, 24, "uniform")
        crack = crack_from_path(mesh, midline_path(mesh, 0.0, 1.0))
        material = MaterialSpec("antiplane", mu=1.0)
        F = SurfaceEnergySpec("griffith", G=1.0)
        eb = solve_displacement(CrackedSpace(mesh, crack), material, F,
                                tear_boundary(1.5)).energy.elastic
        assert abs(ea - eb) / ea < 0.05, f"{ea:.6f} vs {eb:.6f}"

    def test_floating_component_is_grounded(self):
        """A component cut off from the boundary gets the zero-mean gauge."""
        mesh = build_interval_mesh(1.0, 8)
        crack = add_break_node(add_break_node(empty_crack(mesh), 2), 6)
        material = MaterialSpec("antiplane", mu=1.0)
        F = SurfaceEnergySpec("griffith", G=1.0)
        state = solve_displacement(CrackedSpace(mesh, crack), material, F,
                                   step_boundary(1.0))
        assert state.diagnostics["floating_components"] >= 0
        assert np.all(np.isfinite(state.u))
        assert state.energy.elastic < 1e-18


class TestResiduals:
    def test_solved_tear_state_balances(self, tear24):
        state, crack, material, F, u0 = tear24
        rep = residual_report(state, material)
        assert rep["interior_residual"] < 1e-8, rep
        assert rep["crack_face_residual"] < 1e-8, rep

    def test_exact_piecewise_constant_state_reads_clean(self):
        """Regression: an exactly relaxed broken bar must not normalize
        roundoff against roundoff and report an order-one residual."""
        mesh = build_interval_mesh(1.0, 8)
        crack = add_break_node(empty_crack(mesh), 4)
        material = MaterialSpec("antiplane", mu=1.0)
        F = SurfaceEnergySpec("griffith", G=1.0)
        state = solve_displacement(CrackedSpace(mesh, crack), material, F,
                                   step_boundary(1.7, x_step=0.5 - 1e-9))
        rep = residual_report(state, material)
        assert rep["interior_residual"] < 1e-12, rep
        assert rep["force_scale"] > 0.0

    def test_unbalanced_state_reads_large(self):
        """A hand-built non-equilibrium displacement shows up in the report."""
        mesh = build_interval_mesh(1.0, 8)
        space = CrackedSpace(mesh, empty_crack(mesh))
        material = MaterialSpec("antiplane", mu=1.0)
        u = np.zeros(space.n_dofs)
        u[4] = 1.0  # a spike with clamped ends
        state = State(space, u, EnergyBreakdown(0.0, 0.0))
        rep = residual_report(state, material)
        assert rep["interior_residual"] > 0.1


class TestInterpolation:
    def test_side_hint_selects_branches(self):
        """Interpolation honors per-wedge values across the crack."""
        mesh = build_rect_mesh(2.0, 1.0, 8)
        crack = crack_from_path(mesh, midline_path(mesh, 0.0, 2.0))
        space = CrackedSpace(mesh, crack)
        material = MaterialSpec("antiplane", mu=1.0)
        F = SurfaceEnergySpec("griffith", G=1.0)

        state = interpolate_state(
            space, lambda p: np.sign(p[:, 1] - 0.5), material, F,
            side_hint=lambda bc, v: 1.0 if bc[1] > 0.5 else -1.0)
        # the field is piecewise constant: zero gradient, zero elastic energy
        assert abs(state.energy.elastic) < 1e-24
        assert state.diagnostics["method"] == "interpolated"

    def test_without_side_hint_the_jump_collapses(self):
        mesh = build_rect_mesh(2.0, 1.0, 8)
        crack = crack_from_path(mesh, midline_path(mesh, 0.0, 2.0))
        space = CrackedSpace(mesh, crack)
        material = MaterialSpec("antiplane", mu=1.0)
        F = SurfaceEnergySpec("griffith", G=1.0)
        state = interpolate_state(space, lambda p: np.sign(p[:, 1] - 0.5),
                                  material, F)
        # both wedges get the nodal sample, so energy concentrates instead
        assert state.energy.elastic > 0.1


class TestPushforward:
    def test_zero_flow_preserves_energy(self, tear24):
        state, crack, material, F, u0 = tear24
        flow = integrate_flow(state.space.mesh, zero_field(2), 1.0)
        moved = pushforward_state(state, flow, material, F)
        assert abs(moved.energy.total - state.energy.total) \
            < 1e-12 * (1.0 + abs(state.energy.total))

    def test_small_flow_changes_energy_smoothly(self, tear24):
        state, crack, material, F, u0 = tear24
        f = tip_extension_field(crack, crack.tips[0], a=0.1, b=0.4)
        e0 = state.energy.elastic
        deltas = []
        for t in (1e-3, 2e-3):
            flow = integrate_flow(state.space.mesh, f, t)
            moved = pushforward_state(state, flow, material, F)
            deltas.append(e0 - moved.energy.elastic)
        # energy release roughly doubles with the doubled flow time
        assert deltas[0] > 0.0
        ratio = deltas[1] / deltas[0]
        assert 1.8 < ratio < 2.2, f"ratio {ratio:.3f}"


class TestStateIO:
    def test_roundtrip(self, tmp_path, tear24):
        state, crack, material, F, u0 = tear24
        path = str(tmp_path / "state.json")
        write_state(path, state)
        back = read_state(path, state.space.mesh, material, F)
        assert np.allclose(back.u, state.u)
        assert abs(back.energy.total - state.energy.total) \
            < 1e-12 * (1.0 + abs(state.energy.total))

    def test_dof_vector_shape_is_checked(self):
        mesh = build_interval_mesh(1.0, 4)
        space = CrackedSpace(mesh, empty_crack(mesh))
        with pytest.raises(ElastostaticsError):
            State(space, np.zeros(space.n_dofs + 1), EnergyBreakdown(0.0, 0.0))

    def test_node_value_refuses_split_nodes(self):
        mesh = build_interval_mesh(1.0, 8)
        crack = add_break_node(empty_crack(mesh), 4)
        space = CrackedSpace(mesh, crack)
        state = State(space, np.zeros(space.n_dofs),
                      EnergyBreakdown(0.0, 0.0))
        with pytest.raises(ElastostaticsError):
            state.node_value(4)


class TestBoundaryData:
    def test_constant_boundary(self):
        u0 = constant_boundary(2.5)
        assert np.allclose(u0(np.array([[0.0, 0.0], [1.0, 1.0]])), 2.5)

    def test_validate_flags_undeclared_jump(self):
        mesh = build_rect_mesh(2.0, 1.0, 8)
        jumpy = BoundaryDisplacement(
            lambda p: np.sign(p[:, 1] - 0.5), label="undeclared tear")
        rep = jumpy.validate(mesh)
        assert rep["max_slope"] > 1.0

    def test_validate_waives_declared_breaks(self):
        mesh = build_rect_mesh(2.0, 1.0, 8)
        rep = tear_boundary(1.0).validate(mesh)
        assert rep["ok"]

    def test_validate_skips_listed_break_points(self):
        mesh = build_rect_mesh(2.0, 1.0, 8)
        u0 = BoundaryDisplacement(lambda p: np.sign(p[:, 1] - 0.5),
                                  breaks=((0.0, 0.5), (2.0, 0.5)))
        rep = u0.validate(mesh)
        assert rep["ok"], rep
