"""Admissibility, the state order, and minimality certificates."""

import itertools
import math

import numpy as np
import pytest

from fracturelab.elastostatics import BoundaryDisplacement, CrackedSpace, solve_displacement
from fracturelab.energetics import MaterialSpec, SurfaceEnergySpec
from fracturelab.geometry import (
    add_break_node,
    build_interval_mesh,
    build_rect_mesh,
    crack_from_path,
    empty_crack,
)
from fracturelab.oracles import brute_force_absmin, oracle_1d
from fracturelab.scenarios import bar_state, midline_path, random_crack, step_boundary, tear_boundary
from fracturelab.states import (
    StatesError,
    candidate_extensions,
    find_absolute_minimum,
    is_admissible,
    is_equilibrium,
    leq,
)


class TestAdmissibility:
    def test_solved_state_is_admissible(self, bar_below):
        state, crack, material, F, u0 = bar_below
        rep = is_admissible(state, crack, u0)
        assert rep.ok
        assert rep.max_boundary_mismatch < 1e-10

    def test_wrong_boundary_data_is_flagged(self, bar_below):
        state, crack, material, F, u0 = bar_below
        other = step_boundary(2.0)
        rep = is_admissible(state, crack, other)
        assert not rep.ok
        assert not rep.boundary_match
        assert rep.max_boundary_mismatch > 0.5

    def test_missing_required_crack_is_flagged(self):
        state, crack, material, F, u0 = bar_state(1.0, broken=False)
        mesh = state.space.mesh
        required = add_break_node(empty_crack(mesh), 4)
        rep = is_admissible(state, required, u0)
        assert not rep.ok
        assert not rep.crack_contains_required


class TestStateOrder:
    def test_reflexive(self, bar_below):
        state = bar_below[0]
        w = leq(state, state)
        assert w.holds
        assert w.energy_gap == 0.0

    def test_broken_sits_below_unbroken_past_the_threshold(self):
        """Above t* = sqrt(2GL/k) the broken bar is lower in the order."""
        t = 1.8
        unbroken = bar_state(t, broken=False)[0]
        broken = bar_state(t, broken=True)[0]
        w = leq(broken, unbroken)
        assert w.holds
        oracle = oracle_1d(1.0, 1.0, 1.0, t)
        want_gap = oracle.energy_unbroken - oracle.energy_broken(1)
        assert abs(w.energy_gap - want_gap) < 1e-9

    def test_order_respects_crack_containment(self):
        """The unbroken state never sits below the broken one."""
        t = 1.8
        unbroken = bar_state(t, broken=False)[0]
        broken = bar_state(t, broken=True)[0]
        w = leq(unbroken, broken)
        assert not w.holds
        assert not w.crack_contains

    def test_energy_clause_blocks_below_threshold(self):
        """Below t* breaking costs energy, so the order does not hold."""
        t = 1.0
        unbroken = bar_state(t, broken=False)[0]
        broken = bar_state(t, broken=True)[0]
        w = leq(broken, unbroken)
        assert not w.holds
        assert w.crack_contains and w.boundary_match
        assert not w.energy_le

    def test_transitive_on_a_chain(self):
        """leq is transitive along a 2D growth chain at fixed load."""
        mesh = build_rect_mesh(2.0, 1.0, 8)
        material = MaterialSpec("antiplane", mu=1.0)
        F = SurfaceEnergySpec("griffith", G=0.05)
        u0 = tear_boundary(2.0)
        cracks = [crack_from_path(mesh, midline_path(mesh, 0.0, x))
                  for x in (0.25, 0.5, 0.75)]
        states = [solve_displacement(CrackedSpace(mesh, c), material, F, u0)
                  for c in cracks]
        w10 = leq(states[1], states[0])
        w21 = leq(states[2], states[1])
        w20 = leq(states[2], states[0])
        assert w10.holds and w21.holds
        assert w20.holds, "chain composition should hold"


class TestCandidateExtensions:
    def test_1d_counts_follow_combinations(self):
        mesh = build_interval_mesh(1.0, 6)
        crack = empty_crack(mesh)
        free = mesh.n_nodes - 2  # clamped ends stay whole
        d1 = candidate_extensions(mesh, crack, 1)
        d2 = candidate_extensions(mesh, crack, 2)
        assert len(d1) == free
        assert len(d2) == free + math.comb(free, 2)

    def test_2d_depth_one_grows_each_tip_edge(self):
        mesh = build_rect_mesh(2.0, 1.0, 8)
        crack = crack_from_path(mesh, midline_path(mesh, 0.0, 0.5))
        tip = crack.tips[0]
        fresh = [n for n in mesh.node_neighbors[tip] if n not in crack.nodes]
        d1 = candidate_extensions(mesh, crack, 1)
        assert len(d1) == len(fresh)
        for cand in d1:
            assert crack.issubset(cand)
            assert len(cand.edge_set) == len(crack.edge_set) + 1

    def test_depth_two_nests_depth_one(self):
        mesh = build_rect_mesh(2.0, 1.0, 8)
        crack = crack_from_path(mesh, midline_path(mesh, 0.0, 0.5))
        d1 = {c.describe() for c in candidate_extensions(mesh, crack, 1)}
        d2 = {c.describe() for c in candidate_extensions(mesh, crack, 2)}
        assert d1 < d2

    def test_reference_crack_is_never_listed(self):
        mesh = build_interval_mesh(1.0, 6)
        crack = add_break_node(empty_crack(mesh), 3)
        for cand in candidate_extensions(mesh, crack, 2):
            assert cand.describe() != crack.describe()

    def test_negative_depth_rejected(self):
        mesh = build_interval_mesh(1.0, 6)
        with pytest.raises(StatesError):
            candidate_extensions(mesh, empty_crack(mesh), -1)


class TestEquilibriumCertificates:
    def test_below_threshold_certified(self, bar_below):
        state, crack, material, F, u0 = bar_below
        cert = is_equilibrium(state, crack, u0, material, F)
        assert cert.equilibrium
        assert not cert.refuted
        assert cert.family_size >= 1
        assert cert.kind == "exhaustive-to-depth-1"

    def test_above_threshold_refuted(self, bar_above):
        state, crack, material, F, u0 = bar_above
        cert = is_equilibrium(state, crack, u0, material, F)
        assert cert.refuted
        assert not cert.equilibrium
        assert cert.best_energy < cert.base_energy
        # the winning candidate costs exactly G
        assert abs(cert.best_energy - 1.0) < 1e-9

    def test_required_crack_must_be_contained(self, bar_below):
        state, crack, material, F, u0 = bar_below
        mesh = state.space.mesh
        required = add_break_node(empty_crack(mesh), 4)
        with pytest.raises(StatesError):
            is_equilibrium(state, required, u0, material, F)

    def test_certificate_table_covers_the_family(self, bar_below):
        state, crack, material, F, u0 = bar_below
        cert = is_equilibrium(state, crack, u0, material, F, depth=2)
        assert len(cert.table) == cert.family_size + 1
        base_descr, base_len, base_e = cert.table[0]
        assert abs(base_e - state.energy.total) < 1e-12


class TestAbsoluteMinimum:
    def test_threshold_crossing_1d(self):
        """The minimizer switches from unbroken to broken across t*."""
        mesh = build_interval_mesh(1.0, 8)
        material = MaterialSpec("antiplane", mu=1.0)
        F = SurfaceEnergySpec("griffith", G=1.0)
        t_star = math.sqrt(2.0)
        below, _ = find_absolute_minimum(mesh, None, step_boundary(1.40),
                                         material, F, depth=1)
        above, _ = find_absolute_minimum(mesh, None, step_boundary(1.43),
                                         material, F, depth=1)
        assert below.space.crack.is_empty()
        assert not above.space.crack.is_empty()
        assert abs(above.energy.total - 1.0) < 1e-9

    def test_tie_prefers_the_smaller_crack(self):
        """Exactly at the crossover the unbroken state wins the tie."""
        mesh = build_interval_mesh(1.0, 8)
        material = MaterialSpec("antiplane", mu=1.0)
        F = SurfaceEnergySpec("griffith", G=1.0)
        state, cert = find_absolute_minimum(
            mesh, None, step_boundary(math.sqrt(2.0)), material, F, depth=1)
        assert state.space.crack.is_empty()
        assert not cert.refuted

    def test_budget_is_enforced(self):
        mesh = build_interval_mesh(1.0, 8)
        material = MaterialSpec("antiplane", mu=1.0)
        F = SurfaceEnergySpec("griffith", G=1.0)
        with pytest.raises(StatesError):
            find_absolute_minimum(mesh, None, step_boundary(1.0), material,
                                  F, depth=3, budget=10)

    def test_matches_brute_force_1d(self):
        """Independent dense enumeration agrees on crack and energy."""
        mesh = build_interval_mesh(1.0, 6)
        material = MaterialSpec("antiplane", mu=1.0)
        rng = np.random.default_rng(11)
        for trial in range(8):
            G = float(rng.uniform(0.3, 2.0))
            t = float(rng.uniform(0.5, 2.5))
            F = SurfaceEnergySpec("griffith", G=G)
            u0 = step_boundary(t)
            state, cert = find_absolute_minimum(mesh, None, u0, material, F,
                                                depth=2)
            ref = brute_force_absmin(mesh, None, u0, material, F, depth=2)
            assert cert.best_crack == ref.best_crack, \
                f"trial {trial}: G={G:.3f} t={t:.3f}"
            assert abs(state.energy.total - ref.best_energy) \
                < 1e-9 * (1.0 + abs(ref.best_energy))

    def test_matches_brute_force_2d(self):
        """Same cross-check on a small membrane with random start cracks."""
        mesh = build_rect_mesh(1.0, 1.0, 3)
        material = MaterialSpec("antiplane", mu=1.0)
        rng = np.random.default_rng(23)
        for trial in range(6):
            G = float(rng.uniform(0.2, 1.0))
            t = float(rng.uniform(0.8, 2.0))
            F = SurfaceEnergySpec("griffith", G=G)
            u0 = BoundaryDisplacement(
                lambda p, t=t: t * np.sign(p[:, 1] - 0.5 + 1e-12),
                breaks=True)
            K = random_crack(mesh, rng, max_edges=2)
            state, cert = find_absolute_minimum(mesh, K, u0, material, F,
                                                depth=1)
            ref = brute_force_absmin(mesh, K, u0, material, F, depth=1)
            assert cert.best_crack == ref.best_crack, \
                f"trial {trial}: K={K.describe()}"
            assert abs(state.energy.total - ref.best_energy) \
                < 1e-9 * (1.0 + abs(ref.best_energy))

    def test_nucleation_searches_fresh_edges(self):
        """With nucleation on, an empty crack can open mid-domain."""
        mesh = build_rect_mesh(1.0, 1.0, 3)
        material = MaterialSpec("antiplane", mu=1.0)
        F = SurfaceEnergySpec("griffith", G=0.4)
        u0 = BoundaryDisplacement(
            lambda p: 1.3 * np.sign(p[:, 1] - 0.5 + 1e-12), breaks=True)
        state, cert = find_absolute_minimum(mesh, None, u0, material, F,
                                            depth=2, nucleation=True)
        ref = brute_force_absmin(mesh, None, u0, material, F, depth=2,
                                 nucleation=True)
        assert cert.best_crack == ref.best_crack
        assert not state.space.crack.is_empty()

    def test_greedy_agrees_on_single_step_growth(self):
        """Greedy local search lands on the exhaustive answer when one
        edge of growth is all the energy budget affords."""
        mesh = build_interval_mesh(1.0, 8)
        material = MaterialSpec("antiplane", mu=1.0)
        F = SurfaceEnergySpec("griffith", G=1.0)
        u0 = step_boundary(1.8)
        ex_state, _ = find_absolute_minimum(mesh, None, u0, material, F,
                                            depth=2, mode="exhaustive")
        gr_state, gr_cert = find_absolute_minimum(mesh, None, u0, material,
                                                  F, mode="greedy")
        assert abs(ex_state.energy.total - gr_state.energy.total) < 1e-9
        assert gr_state.space.crack.length() == 1.0
        assert "greedy" in gr_cert.kind
