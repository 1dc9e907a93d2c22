"""Global numbering of P_k degrees of freedom.

Numbering: vertices first (same index as the mesh vertex), then k-1 nodes
per edge, then (k-1)(k-2)/2 nodes per triangle. Edge nodes run from the
lower-indexed vertex to the higher one, so both triangles sharing an edge
agree on them.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .reference import LOCAL_EDGES, check_degree, reference_element


@dataclass(frozen=True, eq=False)
class DofMap:
    degree: int
    cell_dofs: np.ndarray  # (nt, nloc)
    n_dofs: int
    boundary_dofs: np.ndarray  # sorted
    coords: np.ndarray  # (n_dofs, 2) physical node positions

    @cached_property
    def is_boundary(self):
        mask = np.zeros(self.n_dofs, dtype=bool)
        mask[self.boundary_dofs] = True
        return mask

    @cached_property
    def interior_dofs(self):
        return np.flatnonzero(~self.is_boundary)

    @cached_property
    def free_index(self):
        """Position of each DOF in the reduced system, -1 on the boundary."""
        idx = np.full(self.n_dofs, -1, dtype=np.int64)
        idx[self.interior_dofs] = np.arange(self.interior_dofs.size)
        return idx


def expected_dof_count(n_vertices, n_edges, n_triangles, k):
    return n_vertices + n_edges * (k - 1) + n_triangles * (k - 1) * (k - 2) // 2


def build_dof_map(mesh, k: int) -> DofMap:
    k = check_degree(k)
    ref = reference_element(k)
    tris = mesh.triangles
    nt = tris.shape[0]
    nv = mesh.n_vertices
    edges, tri_edges, edge_count = mesh.edges
    ne = edges.shape[0]
    ne_int = k - 1
    ni = ref.n_interior

    cell = np.empty((nt, ref.n_local), dtype=np.int64)
    cell[:, :3] = tris
    col = 3
    t = np.arange(1, k)
    for e, (a, b) in enumerate(LOCAL_EDGES):
        forward = (tris[:, a] < tris[:, b])[:, None]
        pos = np.where(forward, t - 1, k - 1 - t)
        cell[:, col : col + ne_int] = nv + tri_edges[:, e, None] * ne_int + pos
        col += ne_int
    if ni:
        cell[:, col:] = nv + ne * ne_int + np.arange(nt)[:, None] * ni + np.arange(ni)
    n_dofs = nv + ne * ne_int + nt * ni

    p0 = mesh.vertices[tris[:, 0]]
    jac = np.stack([mesh.vertices[tris[:, 1]] - p0, mesh.vertices[tris[:, 2]] - p0], axis=2)
    phys = p0[:, None, :] + np.einsum("tij,nj->tni", jac, ref.nodes)
    coords = np.empty((n_dofs, 2))
    coords[cell.ravel()] = phys.reshape(-1, 2)
    # vertices keep their exact mesh coordinates
    coords[:nv] = mesh.vertices

    bnd_edges = np.flatnonzero(edge_count == 1)
    bnd = [mesh.boundary_vertices]
    if ne_int:
        bnd.append((nv + bnd_edges[:, None] * ne_int + np.arange(ne_int)).ravel())
    boundary = np.unique(np.concatenate(bnd))
    dm = DofMap(k, cell, n_dofs, boundary, coords)
    for arr in (dm.cell_dofs, dm.boundary_dofs, dm.coords):
        arr.setflags(write=False)
    return dm
