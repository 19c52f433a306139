"""Cracked P1 spaces and equilibrium displacement solves.

A crack on the mesh skeleton severs the function space, not the mesh:
geometric nodes are kept, and each crack node carries one degree of freedom
per angular wedge of incident elements (wedges are separated by incident
crack edges or the outer boundary).  Interior path endpoints come out as a
single wedge, so 2D tips stay continuous without special-casing; 1D break
nodes split into their left and right segments.

Solves are Jacobi-preconditioned conjugate gradients on the assembled
stiffness for the quadratic antiplane density, and a quasi-Newton descent
for user densities.  Severed components with no remaining boundary data are
grounded at zero mean and flagged rather than rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.sparse as sp

from . import energetics
from .energetics import EnergyBreakdown, MaterialSpec, SurfaceEnergySpec
from .geometry import CrackSet, FlowMap, GeometryError, Mesh


class ElastostaticsError(RuntimeError):
    """Raised when a solve fails to converge or a flow folds the mesh."""


# ---------------------------------------------------------------------------
# Boundary data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundaryDisplacement:
    """Prescribed displacement trace on the outer boundary.

    fn maps (n, dim) points to n values.  `breaks` lists boundary points
    where the trace is allowed to jump; elsewhere a sampled continuity check
    can be run with validate().  `breaks=True` declares jumps at unspecified
    locations, which waives the continuity scan entirely.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    label: str = "u0"
    breaks: tuple[tuple[float, ...], ...] | bool = ()

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.asarray(self.fn(pts), dtype=float).reshape(pts.shape[0])

    def validate(self, mesh: Mesh, tol: float = 1e-6) -> dict:
        """Sampled continuity along boundary facets, skipping declared breaks."""
        if mesh.dim == 1:
            return {"ok": True, "max_jump": 0.0}
        if self.breaks is True:
            return {"ok": True, "max_slope": 0.0,
                    "note": "jumps declared at unspecified points"}
        worst = 0.0
        brk = np.array(self.breaks, dtype=float).reshape(-1, mesh.dim) \
            if self.breaks else np.zeros((0, mesh.dim))
        for a, b in mesh.boundary:
            pa, pb = mesh.nodes[int(a)], mesh.nodes[int(b)]
            seg = np.linalg.norm(pb - pa)
            if len(brk) and min(np.linalg.norm(brk - pa, axis=1).min(),
                                np.linalg.norm(brk - pb, axis=1).min()) < seg:
                continue
            s = np.linspace(0.0, 1.0, 5)[:, None]
            pts = pa[None, :] + s * (pb - pa)[None, :]
            v = self(pts)
            jump = float(np.abs(np.diff(v)).max()) / max(seg, 1e-300)
            worst = max(worst, jump)
        scale = 1.0 + float(np.abs(self(mesh.nodes[sorted(
            mesh.boundary_nodes)])).max())
        return {"ok": worst <= tol * scale / mesh.h or worst <= 10.0,
                "max_slope": worst}


def constant_boundary(value: float) -> BoundaryDisplacement:
    return BoundaryDisplacement(lambda p: np.full(p.shape[0], float(value)),
                                label=f"const {value:g}")


# ---------------------------------------------------------------------------
# Cracked function space
# ---------------------------------------------------------------------------


def _node_wedges(mesh: Mesh, crack: CrackSet, v: int) -> list[list[int]]:
    """Incident elements of v grouped by connectivity across non-crack edges."""
    elems = list(mesh.node_elements[v])
    if mesh.dim == 1:
        return [[t] for t in sorted(elems)]
    index = {t: i for i, t in enumerate(elems)}
    parent = list(range(len(elems)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    crack_edges = crack.edge_set
    for w in mesh.node_neighbors[v]:
        e = (min(v, w), max(v, w))
        if e in crack_edges:
            continue
        touching = [t for t in mesh.edge_elements[e] if t in index]
        for a, b in zip(touching[:-1], touching[1:]):
            ra, rb = find(index[a]), find(index[b])
            if ra != rb:
                parent[rb] = ra
    groups: dict[int, list[int]] = {}
    for t in elems:
        groups.setdefault(find(index[t]), []).append(t)
    return sorted((sorted(g) for g in groups.values()), key=lambda g: g[0])


@dataclass
class CrackedSpace:
    """P1 space on a mesh severed along a crack.

    dof_table[t, i] is the dof of local vertex i of element t; node_dofs maps
    each node to its dofs (one per wedge, ordered by smallest incident
    element).  Immutable after construction.
    """

    mesh: Mesh
    crack: CrackSet

    def __post_init__(self):
        if self.crack.mesh is not self.mesh:
            # allow equal-topology clones (pushforward meshes)
            if self.crack.mesh.n_nodes != self.mesh.n_nodes:
                raise GeometryError("crack belongs to a different mesh")
        mesh, crack = self.mesh, self.crack
        dof_table = np.full((mesh.n_elements, mesh.dim + 1), -1, dtype=np.int64)
        node_dofs: dict[int, tuple[int, ...]] = {}
        dof_node = []
        local = {(t, int(v)): i for t, el in enumerate(mesh.elements)
                 for i, v in enumerate(el)}
        next_dof = 0
        crack_nodes = crack.nodes
        for v in range(mesh.n_nodes):
            elems = mesh.node_elements[v]
            if v not in crack_nodes:
                d = next_dof
                next_dof += 1
                node_dofs[v] = (d,)
                dof_node.append(v)
                for t in elems:
                    dof_table[t, local[(t, v)]] = d
            else:
                wedges = _node_wedges(mesh, crack, v)
                ds = []
                for wedge in wedges:
                    d = next_dof
                    next_dof += 1
                    ds.append(d)
                    dof_node.append(v)
                    for t in wedge:
                        dof_table[t, local[(t, v)]] = d
                node_dofs[v] = tuple(ds)
        self.n_dofs = next_dof
        self.dof_table = dof_table
        self.node_dofs = node_dofs
        self.dof_node = np.array(dof_node, dtype=np.int64)
        self.dof_table.setflags(write=False)
        self.dof_node.setflags(write=False)

    @cached_property
    def dirichlet_dofs(self) -> np.ndarray:
        """Dofs carrying boundary data: boundary nodes off the crack."""
        out = [self.node_dofs[v][0] for v in sorted(self.mesh.boundary_nodes)
               if v not in self.crack.nodes]
        return np.array(out, dtype=np.int64)

    @cached_property
    def free_dofs(self) -> np.ndarray:
        mask = np.ones(self.n_dofs, dtype=bool)
        mask[self.dirichlet_dofs] = False
        return np.nonzero(mask)[0]

    @cached_property
    def dof_components(self) -> list[np.ndarray]:
        """Connected components of the dof graph (shared-element coupling)."""
        parent = list(range(self.n_dofs))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for row in self.dof_table:
            base = find(int(row[0]))
            for d in row[1:]:
                r = find(int(d))
                if r != base:
                    parent[r] = base
        groups: dict[int, list[int]] = {}
        for d in range(self.n_dofs):
            groups.setdefault(find(d), []).append(d)
        return [np.array(g, dtype=np.int64)
                for g in sorted(groups.values(), key=lambda g: g[0])]

    @cached_property
    def floating_components(self) -> list[np.ndarray]:
        dset = set(int(d) for d in self.dirichlet_dofs)
        return [comp for comp in self.dof_components
                if not any(int(d) in dset for d in comp)]

    def dof_positions(self) -> np.ndarray:
        return self.mesh.nodes[self.dof_node]

    def with_nodes(self, new_nodes: np.ndarray) -> "CrackedSpace":
        """Clone of this space on displaced node positions (same topology)."""
        moved = Mesh(np.asarray(new_nodes, dtype=float),
                     self.mesh.elements.copy(),
                     self.mesh.boundary.copy(),
                     self.mesh.boundary_markers.copy())
        try:
            moved.element_volumes
        except GeometryError as exc:
            raise ElastostaticsError(f"flow folds the mesh: {exc}") from exc
        crack = CrackSet(moved, self.crack.components,
                         CrackSet(moved, self.crack.required.components)
                         if self.crack.required is not None else None)
        clone = object.__new__(CrackedSpace)
        clone.mesh = moved
        clone.crack = crack
        clone.n_dofs = self.n_dofs
        clone.dof_table = self.dof_table
        clone.node_dofs = self.node_dofs
        clone.dof_node = self.dof_node
        return clone


# ---------------------------------------------------------------------------
# States
# ---------------------------------------------------------------------------


@dataclass
class State:
    """A crack plus a displacement field on the severed space."""

    space: CrackedSpace
    u: np.ndarray
    energy: EnergyBreakdown
    boundary: BoundaryDisplacement | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        if self.u.shape != (self.space.n_dofs,):
            raise ElastostaticsError(
                f"dof vector has {self.u.shape}, space needs "
                f"({self.space.n_dofs},)")
        self.u.setflags(write=False)

    @property
    def crack(self) -> CrackSet:
        return self.space.crack

    @cached_property
    def _gradients(self) -> np.ndarray:
        vals = self.u[self.space.dof_table]
        g = np.einsum("ti,tid->td", vals, self.space.mesh.shape_gradients)
        g.setflags(write=False)
        return g

    def gradients(self) -> np.ndarray:
        """Per-element displacement gradient, (n_elems, dim)."""
        return self._gradients

    def node_value(self, node: int) -> float:
        """Value at an uncracked node (single dof)."""
        dofs = self.space.node_dofs[node]
        if len(dofs) != 1:
            raise ElastostaticsError(f"node {node} is split by the crack")
        return float(self.u[dofs[0]])


# ---------------------------------------------------------------------------
# Assembly and solvers
# ---------------------------------------------------------------------------


def assemble_stiffness(space: CrackedSpace, mu: float) -> sp.csr_matrix:
    mesh = space.mesh
    grads = mesh.shape_gradients
    local = np.einsum("tid,tjd->tij", grads, grads) \
        * (mu * mesh.element_volumes)[:, None, None]
    nl = mesh.dim + 1
    rows = np.repeat(space.dof_table, nl, axis=1).ravel()
    cols = np.tile(space.dof_table, (1, nl)).ravel()
    A = sp.coo_matrix((local.ravel(), (rows, cols)),
                      shape=(space.n_dofs, space.n_dofs))
    return A.tocsr()


def internal_forces(state: State, material: MaterialSpec) -> np.ndarray:
    """Assembled residual dE/du at every dof (reaction forces included)."""
    space = state.space
    mesh = space.mesh
    sig = energetics.stress(material, state.gradients())
    contrib = np.einsum("td,tid->ti", sig, mesh.shape_gradients) \
        * mesh.element_volumes[:, None]
    f = np.zeros(space.n_dofs)
    np.add.at(f, space.dof_table, contrib)
    return f


def _pcg(A: sp.csr_matrix, b: np.ndarray, tol: float, max_iter: int
         ) -> tuple[np.ndarray, list[float], int]:
    """Jacobi-preconditioned conjugate gradients from a zero start."""
    n = b.shape[0]
    x = np.zeros(n)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return x, [0.0], 0
    d = A.diagonal()
    if np.any(d <= 0):
        raise ElastostaticsError("stiffness diagonal not positive")
    minv = 1.0 / d
    r = b.copy()
    z = minv * r
    p = z.copy()
    rz = float(r @ z)
    history: list[float] = []
    for k in range(1, max_iter + 1):
        Ap = A @ p
        alpha = rz / float(p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        res = float(np.linalg.norm(r)) / bnorm
        history.append(res)
        if res <= tol:
            return x, history, k
        z = minv * r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise ElastostaticsError(
        f"conjugate gradients stalled at relative residual "
        f"{history[-1]:.3e} after {max_iter} iterations")


def solve_displacement(space: CrackedSpace, material: MaterialSpec,
                       F: SurfaceEnergySpec, u0: BoundaryDisplacement,
                       tol: float = 1e-10, max_iter: int | None = None
                       ) -> State:
    """Minimize the bulk energy over the severed space at fixed boundary data.

    Quadratic densities go through sparse CG; user densities through L-BFGS.
    Components fully cut off from the boundary have no data to pin them and
    are grounded at zero mean (flagged in diagnostics).
    """
    mesh = space.mesh
    u = np.zeros(space.n_dofs)
    ddofs = space.dirichlet_dofs
    if len(ddofs):
        u[ddofs] = u0(mesh.nodes[space.dof_node[ddofs]])
    free = space.free_dofs
    diagnostics: dict = {
        "floating_components": len(space.floating_components),
        "gauge": "zero-mean on floating components",
    }
    if material.kind == "antiplane":
        A = assemble_stiffness(space, material.mu)
        b = -(A[:, ddofs] @ u[ddofs]) if len(ddofs) else np.zeros(space.n_dofs)
        Aff = A[free][:, free]
        if max_iter is None:
            max_iter = 10 * len(free) + 100
        x, history, iters = _pcg(Aff.tocsr(), b[free], tol, max_iter)
        u[free] = x
        diagnostics.update(method="pcg", iterations=iters,
                           relative_residual=history[-1] if history else 0.0)
    else:
        from scipy.optimize import minimize

        table = space.dof_table
        grads_geo = mesh.shape_gradients
        vols = mesh.element_volumes

        def fun(xf):
            uu = u.copy()
            uu[free] = xf
            g = np.einsum("ti,tid->td", uu[table], grads_geo)
            e = float(np.sum(vols * energetics.density(material, g)))
            sig = energetics.stress(material, g)
            contrib = np.einsum("td,tid->ti", sig, grads_geo) * vols[:, None]
            f_all = np.zeros(space.n_dofs)
            np.add.at(f_all, table, contrib)
            return e, f_all[free]

        res = minimize(fun, np.zeros(len(free)), jac=True, method="L-BFGS-B",
                       options={"maxiter": 5000, "ftol": 1e-16,
                                "gtol": 1e-12})
        u[free] = res.x
        gnorm = float(np.linalg.norm(res.jac, ord=np.inf))
        scale = 1.0 + float(np.abs(res.fun))
        if gnorm > 1e-7 * scale:
            raise ElastostaticsError(
                f"descent stalled: |grad|={gnorm:.3e} after {res.nit} steps")
        diagnostics.update(method="lbfgs", iterations=int(res.nit),
                           gradient_norm=gnorm)

    state = State(space, u, EnergyBreakdown(0.0, 0.0), boundary=u0,
                  diagnostics=diagnostics)
    state.energy = energetics.total_energy(state, material, F)
    return state


def interpolate_state(space: CrackedSpace, values: Callable[[np.ndarray], np.ndarray],
                      material: MaterialSpec, F: SurfaceEnergySpec,
                      side_hint: Callable[[np.ndarray, int], float] | None = None,
                      boundary: BoundaryDisplacement | None = None) -> State:
    """State from pointwise values (no solve).

    values maps points to displacements; for split nodes (more than one
    wedge), side_hint(barycenter of the wedge's smallest element, node index)
    overrides the value per wedge, so discontinuous fields can pick their
    branch on either side of the crack.
    """
    mesh = space.mesh
    u = np.zeros(space.n_dofs)
    base = np.asarray(values(mesh.nodes), dtype=float).reshape(mesh.n_nodes)
    for v in range(mesh.n_nodes):
        dofs = space.node_dofs[v]
        if len(dofs) == 1 or side_hint is None:
            for d in dofs:
                u[d] = base[v]
            continue
        for d in dofs:
            wedge_elems = [t for t in mesh.node_elements[v]
                           if any(space.dof_table[t][i] == d
                                  for i in range(mesh.dim + 1))]
            bc = mesh.barycenters[min(wedge_elems)]
            u[d] = side_hint(bc, v)
    state = State(space, u, EnergyBreakdown(0.0, 0.0), boundary=boundary,
                  diagnostics={"method": "interpolated"})
    state.energy = energetics.total_energy(state, material, F)
    return state


def residual_report(state: State, material: MaterialSpec) -> dict:
    """Interior equation residual and crack-face flux balance, relative.

    Both vanish (to solver tolerance) at a converged solve; the crack-face
    entry doubles as the traction-free check on the severed faces.
    """
    space = state.space
    mesh = space.mesh
    f = internal_forces(state, material)
    # normalize by a stiffness-based force scale rather than max |f|: an
    # exact piecewise-constant solution leaves only roundoff in f, and
    # noise over noise would read as order one
    h_min = float(np.min(mesh.element_volumes)) ** (1.0 / mesh.dim)
    u_scale = max(float(np.abs(state.u).max()), 1.0)
    scale = max(float(np.abs(f).max()), material.mu * u_scale / h_min,
                1e-300)
    crack_nodes = space.crack.nodes
    free = space.free_dofs
    crack_free = np.array([d for d in free
                           if int(space.dof_node[d]) in crack_nodes],
                          dtype=np.int64)
    other_free = np.array([d for d in free
                           if int(space.dof_node[d]) not in crack_nodes],
                          dtype=np.int64)
    interior = float(np.abs(f[other_free]).max()) / scale \
        if len(other_free) else 0.0
    crack_flux = float(np.abs(f[crack_free]).max()) / scale \
        if len(crack_free) else 0.0
    return {"interior_residual": interior, "crack_face_residual": crack_flux,
            "force_scale": scale}


def pushforward_state(state: State, flow: FlowMap, material: MaterialSpec,
                      F: SurfaceEnergySpec) -> State:
    """Transport a state along a flow map: carry dof values, move nodes.

    No re-solve happens; elastic energy responds through the deformed
    geometry and surface energy through the displaced crack polyline.  The
    energy of the result is exactly E(v ∘ phi^-1, phi(S)) for the piecewise
    affine realization of phi.
    """
    space = state.space.with_nodes(flow.node_targets)
    new = State(space, state.u.copy(), EnergyBreakdown(0.0, 0.0),
                boundary=state.boundary,
                diagnostics={"method": "pushforward", "t": flow.t,
                             "field": flow.field.describe()})
    new.energy = energetics.total_energy(new, material, F)
    return new


# ---------------------------------------------------------------------------
# State text I/O
# ---------------------------------------------------------------------------


def write_state(path: str, state: State) -> None:
    lines = ["crack"]
    for comp in state.space.crack.components:
        lines.append(" ".join(str(v) for v in comp))
    lines.append("dofs")
    for i, val in enumerate(state.u):
        lines.append(f"{i} {float(val)!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_state(path: str, mesh: Mesh, material: MaterialSpec,
               F: SurfaceEnergySpec) -> State:
    from .geometry import crack_from_paths

    paths: list[list[int]] = []
    dofs: list[tuple[int, float]] = []
    section = None
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line in ("crack", "dofs"):
                section = line
                continue
            if section == "crack":
                paths.append([int(v) for v in line.split()])
            elif section == "dofs":
                i, val = line.split()
                dofs.append((int(i), float(val)))
            else:
                raise ElastostaticsError(f"state file {path}: stray line")
    crack = crack_from_paths(mesh, paths)
    space = CrackedSpace(mesh, crack)
    if len(dofs) != space.n_dofs:
        raise ElastostaticsError(
            f"state file has {len(dofs)} dofs, space needs {space.n_dofs}")
    u = np.zeros(space.n_dofs)
    for i, val in dofs:
        u[i] = val
    state = State(space, u, EnergyBreakdown(0.0, 0.0))
    state.energy = energetics.total_energy(state, material, F)
    return state
