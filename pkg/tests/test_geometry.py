"""Meshes, crack sets, regions, vector fields, and flows."""

import math

import numpy as np
import pytest

from fracturelab.geometry import (
    GeometryError,
    add_break_node,
    ball_region,
    barycentric,
    build_interval_mesh,
    build_rect_mesh,
    build_slit_disk_mesh,
    callable_field,
    cells_region,
    crack_from_path,
    crack_from_paths,
    dilate,
    empty_crack,
    extend_crack,
    flow_points,
    integrate_flow,
    is_admissible_variation,
    nodal_field,
    read_mesh,
    scale_field,
    sum_field,
    tip_extension_field,
    tubular_region,
    whole_region,
    write_mesh,
    zero_field,
)
from fracturelab.scenarios import midline_path, random_crack


class TestMeshes:
    def test_interval_mesh_layout(self):
        """Resolution counts segments per unit length; volumes tile it."""
        mesh = build_interval_mesh(2.0, 8)
        assert mesh.dim == 1
        assert mesh.n_nodes == 17
        assert mesh.n_elements == 16
        assert abs(mesh.element_volumes.sum() - 2.0) < 1e-14
        assert mesh.boundary_nodes == frozenset({0, 16})
        assert mesh.interior_nodes == frozenset(range(1, 16))
        assert abs(mesh.h - 0.125) < 1e-14

    def test_rect_mesh_layout(self):
        """Column-major grid: node id = column * (ny) + row."""
        mesh = build_rect_mesh(2.0, 1.0, 4)
        nx, ny = 9, 5
        assert mesh.n_nodes == nx * ny
        assert abs(mesh.element_volumes.sum() - 2.0) < 1e-12
        # spot-check the numbering convention used by the config examples
        assert np.allclose(mesh.nodes[2], [0.0, 0.5])
        assert np.allclose(mesh.nodes[1 * ny + 2], [0.25, 0.5])
        corners = {(0.0, 0.0), (2.0, 0.0), (0.0, 1.0), (2.0, 1.0)}
        got = {tuple(mesh.nodes[v]) for v in mesh.boundary_nodes}
        assert corners <= got

    def test_rect_patterns_share_nodes(self):
        """The two diagonal patterns triangulate the same node set."""
        alt = build_rect_mesh(1.0, 1.0, 6, "alternate")
        uni = build_rect_mesh(1.0, 1.0, 6, "uniform")
        assert np.array_equal(alt.nodes, uni.nodes)
        assert abs(alt.element_volumes.sum()
                   - uni.element_volumes.sum()) < 1e-12
        assert alt.edges != uni.edges  # the diagonals differ

    def test_slit_disk_mesh(self):
        """Disk area, rim radius, and the returned slit path."""
        mesh, slit = build_slit_disk_mesh(1.0, 1.0 / 8.0)
        area = mesh.element_volumes.sum()
        assert abs(area - math.pi) / math.pi < 0.05, f"area {area:.4f}"
        rim = np.linalg.norm(mesh.nodes[sorted(mesh.boundary_nodes)], axis=1)
        assert np.all(np.abs(rim - 1.0) < 1e-9)
        # slit runs from the rim to the center node
        assert len(slit) >= 3
        assert np.linalg.norm(mesh.nodes[slit[-1]]) < 1e-12 \
            or np.linalg.norm(mesh.nodes[slit[0]]) < 1e-12

    def test_mesh_roundtrip(self, tmp_path):
        mesh = build_rect_mesh(1.0, 1.0, 3)
        path = str(tmp_path / "mesh.json")
        write_mesh(path, mesh)
        back = read_mesh(path)
        assert np.array_equal(back.nodes, mesh.nodes)
        assert np.array_equal(back.elements, mesh.elements)

    def test_locate_and_barycentric(self):
        """Located element really contains the point (convex coordinates)."""
        mesh = build_rect_mesh(1.0, 1.0, 5)
        rng = np.random.default_rng(42)
        pts = rng.uniform(0.02, 0.98, size=(50, 2))
        elems = mesh.locate(pts)
        assert np.all(elems >= 0)
        for p, e in zip(pts, elems):
            lam = barycentric(mesh, int(e), p)
            assert abs(lam.sum() - 1.0) < 1e-12
            assert np.all(lam > -1e-10)
            rebuilt = lam @ mesh.nodes[mesh.elements[int(e)]]
            assert np.linalg.norm(rebuilt - p) < 1e-12

    def test_locate_rejects_outside_points(self):
        mesh = build_rect_mesh(1.0, 1.0, 4)
        elems = mesh.locate(np.array([[2.0, 2.0], [-0.5, 0.5]]))
        assert np.all(elems < 0)


class TestCrackSets:
    def test_midline_crack_length_and_tips(self):
        mesh = build_rect_mesh(1.0, 1.0, 8)
        crack = crack_from_path(mesh, midline_path(mesh, 0.25, 0.75))
        assert abs(crack.length() - 0.5) < 1e-12
        tips = crack.tips
        assert len(tips) == 2
        xs = sorted(mesh.nodes[t, 0] for t in tips)
        assert abs(xs[0] - 0.25) < 1e-12 and abs(xs[1] - 0.75) < 1e-12

    def test_boundary_endpoint_is_not_a_tip(self):
        """An edge crack growing from the boundary has a single tip."""
        mesh = build_rect_mesh(2.0, 1.0, 8)
        crack = crack_from_path(mesh, midline_path(mesh, 0.0, 0.5))
        assert len(crack.tips) == 1
        assert abs(mesh.nodes[crack.tips[0], 0] - 0.5) < 1e-12

    def test_tips_match_path_endpoint_count(self):
        """Degree rule and path-endpoint rule agree on random cracks."""
        mesh = build_rect_mesh(1.0, 1.0, 6)
        rng = np.random.default_rng(7)
        for _ in range(25):
            crack = random_crack(mesh, rng)
            assert set(crack.tips) == set(crack.tips_by_path), \
                f"{crack.describe()}: {crack.tips} vs {crack.tips_by_path}"

    def test_nonadjacent_path_rejected(self):
        mesh = build_rect_mesh(1.0, 1.0, 4)
        with pytest.raises(GeometryError):
            crack_from_path(mesh, [0, 24])

    def test_extend_crack_monotone(self):
        mesh = build_rect_mesh(2.0, 1.0, 8)
        crack = crack_from_path(mesh, midline_path(mesh, 0.0, 0.5))
        tip = crack.tips[0]
        nbr = next(n for n in mesh.node_neighbors[tip]
                   if n not in crack.nodes)
        grown = extend_crack(crack, tip, nbr)
        assert crack.issubset(grown)
        assert not grown.issubset(crack)
        assert grown.length() > crack.length()

    def test_break_nodes_1d(self):
        mesh = build_interval_mesh(1.0, 8)
        crack = empty_crack(mesh)
        assert crack.is_empty()
        broken = add_break_node(crack, 4)
        assert broken.length() == 1.0
        assert add_break_node(broken, 6).length() == 2.0
        assert broken.tips == (4,)

    def test_multi_component_cracks(self):
        mesh = build_rect_mesh(1.0, 1.0, 8)
        crack = crack_from_paths(mesh, [midline_path(mesh, 0.125, 0.375),
                                        midline_path(mesh, 0.625, 0.875)])
        assert len(crack.components) == 2
        assert len(crack.tips) == 4
        assert abs(crack.length() - 0.5) < 1e-12

    def test_tip_tangent_points_outward(self):
        mesh = build_rect_mesh(2.0, 1.0, 8)
        crack = crack_from_path(mesh, midline_path(mesh, 0.0, 0.5))
        tau = crack.tip_tangent(crack.tips[0])
        assert np.allclose(tau, [1.0, 0.0])

    def test_dilate_scales_about_center(self):
        mesh = build_rect_mesh(1.0, 1.0, 8)
        crack = crack_from_path(mesh, midline_path(mesh, 0.25, 0.75))
        polys = dilate(crack, (0.5, 0.5), 2.0)
        assert len(polys) == 1
        base = mesh.nodes[list(crack.components[0])]
        expect = np.array([0.5, 0.5]) + 2.0 * (base - np.array([0.5, 0.5]))
        assert np.allclose(polys[0], expect)
        with pytest.raises(GeometryError):
            dilate(crack, (0.5, 0.5), 0.0)


class TestRegions:
    def test_whole_region_volume(self):
        mesh = build_rect_mesh(2.0, 1.0, 6)
        D = whole_region(mesh)
        assert abs(D.volume() - 2.0) < 1e-12
        assert D.contains_points(np.array([[1.0, 0.5]]))[0]

    def test_ball_region_membership(self):
        mesh = build_rect_mesh(1.0, 1.0, 8)
        D = ball_region(mesh, (0.5, 0.5), 0.25)
        inside, outside = np.array([[0.5, 0.55]]), np.array([[0.9, 0.9]])
        assert D.contains_points(inside)[0]
        assert not D.contains_points(outside)[0]
        assert 0.0 < D.volume() < 1.0

    def test_tubular_region_hugs_tips(self):
        mesh = build_rect_mesh(1.0, 1.0, 8)
        crack = crack_from_path(mesh, midline_path(mesh, 0.25, 0.75))
        tube = tubular_region(crack, whole_region(mesh), 0.2)
        assert len(tube.cells) > 0
        tips = mesh.nodes[list(crack.tips)]
        for bc in mesh.barycenters[tube.cells]:
            assert np.min(np.linalg.norm(tips - bc, axis=1)) <= 0.2 + 1e-12

    def test_cells_region(self):
        mesh = build_rect_mesh(1.0, 1.0, 4)
        D = cells_region(mesh, [0, 1, 2])
        assert abs(D.volume() - mesh.element_volumes[:3].sum()) < 1e-14


class TestVectorFields:
    def test_plateau_profile(self):
        """Unit direction inside the inner radius, zero beyond the outer."""
        mesh = build_rect_mesh(2.0, 1.0, 16)
        crack = crack_from_path(mesh, midline_path(mesh, 0.0, 0.5))
        tip = crack.tips[0]
        f = tip_extension_field(crack, tip, a=0.1, b=0.3)
        p = mesh.nodes[tip]
        near = f.evaluate(p[None, :] + np.array([[0.0, 0.05]]))
        far = f.evaluate(p[None, :] + np.array([[0.0, 0.35]]))
        assert abs(np.linalg.norm(near[0]) - 1.0) < 1e-12
        assert np.linalg.norm(far[0]) == 0.0

    def test_tip_field_requires_a_tip(self):
        mesh = build_rect_mesh(2.0, 1.0, 8)
        crack = crack_from_path(mesh, midline_path(mesh, 0.0, 0.5))
        with pytest.raises(GeometryError):
            tip_extension_field(crack, 0)

    def test_field_algebra_is_pointwise(self):
        """scale/sum compose linearly at sampled points."""
        mesh = build_rect_mesh(2.0, 1.0, 16)
        crack = crack_from_path(mesh, midline_path(mesh, 0.0, 0.5))
        f1 = tip_extension_field(crack, crack.tips[0], a=0.1, b=0.3)
        f2 = tip_extension_field(crack, crack.tips[0],
                                 direction=(0.0, 1.0), a=0.08, b=0.25)
        combo = sum_field([scale_field(f1, 0.3), scale_field(f2, -1.7)])
        pts = np.array([[0.52, 0.5], [0.6, 0.58], [0.45, 0.4]])
        want = 0.3 * f1.evaluate(pts) - 1.7 * f2.evaluate(pts)
        assert np.allclose(combo.evaluate(pts), want, atol=1e-14)
        assert combo.bound >= 0.3 * f1.bound  # bounds accumulate

    def test_zero_and_nodal_fields(self):
        mesh = build_rect_mesh(1.0, 1.0, 4)
        z = zero_field(2)
        assert np.all(z.nodal_values(mesh) == 0.0)
        vals = np.zeros((mesh.n_nodes, 2))
        vals[12] = (0.5, -0.5)
        f = nodal_field(mesh, vals)
        assert np.allclose(f.nodal_values(mesh), vals)
        assert abs(f.bound - math.hypot(0.5, 0.5)) < 1e-14


class TestFlows:
    def test_zero_time_is_identity(self):
        mesh = build_rect_mesh(1.0, 1.0, 6)
        f = callable_field(lambda p: np.stack([p[:, 1], -p[:, 0]], axis=1),
                           dim=2, bound=2.0)
        flow = integrate_flow(mesh, f, 0.0)
        assert np.array_equal(flow.displaced(), mesh.nodes)

    def test_constant_field_translates(self):
        f = callable_field(lambda p: np.tile([0.3, -0.1], (p.shape[0], 1)),
                           dim=2, bound=1.0)
        pts = np.array([[0.1, 0.2], [0.7, 0.9]])
        moved = flow_points(f, pts, 2.0)
        assert np.allclose(moved, pts + 2.0 * np.array([0.3, -0.1]),
                           atol=1e-13)

    def test_flow_group_property(self):
        """flow(s+t) matches flow(t) after flow(s) to integrator accuracy."""
        mesh = build_rect_mesh(2.0, 1.0, 16)
        crack = crack_from_path(mesh, midline_path(mesh, 0.0, 0.5))
        f = tip_extension_field(crack, crack.tips[0], a=0.1, b=0.3)
        pts = mesh.nodes[mesh.locate(np.array([[0.55, 0.52]]))]
        pts = np.array([[0.55, 0.52], [0.48, 0.45]])
        one = flow_points(f, pts, 0.02)
        two = flow_points(f, flow_points(f, pts, 0.012), 0.008)
        assert np.allclose(one, two, atol=1e-10)


class TestAdmissibleVariations:
    def test_tip_extension_is_admissible(self, tear24):
        state, crack, material, F, u0 = tear24
        f = tip_extension_field(crack, crack.tips[0], a=0.12, b=0.45)
        ok, reasons = is_admissible_variation(f, None, crack)
        assert ok, reasons

    def test_preserved_crack_blocks_overlap(self, tear24):
        state, crack, material, F, u0 = tear24
        f = tip_extension_field(crack, crack.tips[0], a=0.12, b=0.45)
        ok, reasons = is_admissible_variation(f, crack, crack)
        assert not ok
        assert any("preserved crack" in r for r in reasons)

    def test_boundary_support_is_rejected(self, tear24):
        state, crack, material, F, u0 = tear24
        f = callable_field(lambda p: np.tile([1.0, 0.0], (p.shape[0], 1)),
                           dim=2, bound=1.0, label="uniform shift")
        ok, reasons = is_admissible_variation(f, None, crack)
        assert not ok
        assert any("boundary" in r for r in reasons)

    def test_break_set_must_be_fixed_in_1d(self):
        mesh = build_interval_mesh(1.0, 8)
        crack = add_break_node(empty_crack(mesh), 4)
        bad = nodal_field(mesh, np.ones((mesh.n_nodes, 1)))
        ok, reasons = is_admissible_variation(bad, None, crack)
        assert not ok
        assert any("break set" in r for r in reasons)
