"""Randomized conforming triangulations of the unit square.

A uniform grid whose cell diagonal fits under ``h_max`` with a margin for
the jitter is perturbed vertex by vertex and each quad cell is split along its shorter diagonal. Cells
whose triangles break the angle floor or the size bound get their vertices
redrawn from the same seeded stream with a shrinking amplitude, for a
bounded number of rounds.
"""

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

SQRT2 = math.sqrt(2.0)
MAX_REPAIR_ROUNDS = 50


class MeshQualityError(RuntimeError):
    """Raised when the repair loop cannot lift every angle above the floor."""


@dataclass(frozen=True)
class MeshParams:
    h_max: float
    seed: int = 0
    jitter: float = 0.0
    min_angle_deg: float = 20.0

    def __post_init__(self):
        if not self.h_max > 0:
            raise ValueError(f"h_max must be positive, got {self.h_max}")
        if not 0 <= self.jitter <= 0.45:
            raise ValueError(f"jitter must lie in [0, 0.45], got {self.jitter}")
        if not 0 < self.min_angle_deg < 60:
            raise ValueError(f"min_angle_deg must lie in (0, 60), got {self.min_angle_deg}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray  # (nv, 2)
    triangles: np.ndarray  # (nt, 3), counterclockwise
    boundary_vertices: np.ndarray  # sorted indices
    h_actual: float
    seed: int

    def __post_init__(self):
        for arr in (self.vertices, self.triangles, self.boundary_vertices):
            arr.setflags(write=False)

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_triangles(self):
        return self.triangles.shape[0]

    @cached_property
    def edges(self):
        """``(edges, tri_edges, edge_count)``.

        ``edges`` holds each undirected edge once as (low, high) vertex
        indices; ``tri_edges[t, e]`` is the global edge id of local edge e,
        where local edges are (v0, v1), (v1, v2), (v2, v0).
        """
        t = self.triangles
        pairs = np.stack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]], axis=1).reshape(-1, 2)
        lo_hi = np.sort(pairs, axis=1)
        edges, inverse, counts = np.unique(lo_hi, axis=0, return_inverse=True, return_counts=True)
        return edges, inverse.reshape(-1, 3), counts

    @property
    def n_edges(self):
        return self.edges[0].shape[0]

    def signed_areas(self):
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


@dataclass(frozen=True)
class MeshStats:
    num_triangles: int
    h_actual: float
    min_angle: float
    max_aspect_ratio: float


# ---------------------------------------------------------------------------
# counter-based randomness: uniform(seed, vertex, attempt, component)
# ---------------------------------------------------------------------------

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _splitmix64(x):
    x = (x + _GOLDEN).astype(np.uint64)
    x = (x ^ (x >> np.uint64(30))) * _M1
    x = (x ^ (x >> np.uint64(27))) * _M2
    return x ^ (x >> np.uint64(31))


def _uniforms(seed, vertex_ids, attempts, component):
    """Uniform [0, 1) draws that depend only on their key, never on call order."""
    with np.errstate(over="ignore"):
        key = _splitmix64(np.full(vertex_ids.shape, seed, dtype=np.uint64))
        key = _splitmix64(key ^ vertex_ids.astype(np.uint64))
        key = _splitmix64(key ^ (attempts.astype(np.uint64) * np.uint64(2) + np.uint64(component)))
    return (key >> np.uint64(11)).astype(np.float64) * (1.0 / 2**53)


# ---------------------------------------------------------------------------
# geometry helpers
# ---------------------------------------------------------------------------


def triangle_angles(points):
    """Interior angles in degrees, shape (nt, 3), for points of shape (nt, 3, 2)."""
    out = np.empty(points.shape[:2])
    for i in range(3):
        a = points[:, (i + 1) % 3] - points[:, i]
        b = points[:, (i + 2) % 3] - points[:, i]
        cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
        dot = np.einsum("ij,ij->i", a, b)
        out[:, i] = np.degrees(np.arctan2(np.abs(cross), dot))
    return out


def edge_lengths(points):
    return np.stack(
        [np.linalg.norm(points[:, (i + 1) % 3] - points[:, i], axis=1) for i in range(3)], axis=1
    )


def _triangulate(verts, m):
    """Split every cell along its shorter diagonal; ties go to the (a, c) one."""
    i, j = np.meshgrid(np.arange(m), np.arange(m), indexing="xy")
    i, j = i.ravel(), j.ravel()
    a = j * (m + 1) + i
    b = a + 1
    c = a + m + 2
    d = a + m + 1
    ac = np.sum((verts[c] - verts[a]) ** 2, axis=1)
    bd = np.sum((verts[d] - verts[b]) ** 2, axis=1)
    use_ac = (ac <= bd)[:, None]
    t1 = np.where(use_ac, np.stack([a, b, c], 1), np.stack([a, b, d], 1))
    t2 = np.where(use_ac, np.stack([a, c, d], 1), np.stack([b, c, d], 1))
    tris = np.empty((2 * m * m, 3), dtype=np.int64)
    tris[0::2] = t1
    tris[1::2] = t2
    return tris


def _jittered_vertices(m, seed, jitter, attempts, scale):
    """Grid vertices moved by the draw ``attempts`` with amplitude ``scale * jitter * s``."""
    n = m + 1
    s = 1.0 / m
    jj, ii = np.divmod(np.arange(n * n), n)
    x = ii / m
    y = jj / m
    if jitter > 0:
        ids = np.arange(n * n)
        amp = jitter * s * scale
        dx = (2.0 * _uniforms(seed, ids, attempts, 0) - 1.0) * amp
        dy = (2.0 * _uniforms(seed, ids, attempts, 1) - 1.0) * amp
        # boundary vertices slide along their side only; corners stay put
        move_x = (ii > 0) & (ii < m)
        move_y = (jj > 0) & (jj < m)
        x = np.where(move_x, x + dx, x)
        y = np.where(move_y, y + dy, y)
    return np.column_stack([x, y])


def _bad_triangles(verts, tris, min_angle, h_max):
    pts = verts[tris]
    d1 = pts[:, 1] - pts[:, 0]
    d2 = pts[:, 2] - pts[:, 0]
    area2 = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    angles = triangle_angles(pts)
    too_long = edge_lengths(pts).max(axis=1) > h_max
    return (area2 <= 0) | (angles.min(axis=1) < min_angle) | too_long


def _structured(m, params, seed):
    n = m + 1
    # an unjittered grid meets the size bound by construction, up to rounding
    size_cap = params.h_max if params.jitter > 0 else math.inf
    attempts = np.zeros(n * n, dtype=np.int64)
    scale = np.ones(n * n)
    verts = _jittered_vertices(m, seed, params.jitter, attempts, scale)
    tris = _triangulate(verts, m)
    for rnd in range(1, MAX_REPAIR_ROUNDS + 1):
        bad = _bad_triangles(verts, tris, params.min_angle_deg, size_cap)
        if not bad.any() or params.jitter == 0:
            break
        # two triangles per cell: redraw all four vertices of each offending
        # cell, with an amplitude that reaches zero on the last round
        cells = np.unique(np.flatnonzero(bad) // 2)
        cj, ci = np.divmod(cells, m)
        corner = cj * n + ci
        touched = np.unique(np.concatenate([corner, corner + 1, corner + n, corner + n + 1]))
        attempts[touched] += 1
        scale[touched] = np.minimum(scale[touched], 1.0 - rnd / MAX_REPAIR_ROUNDS)
        verts = _jittered_vertices(m, seed, params.jitter, attempts, scale)
        tris = _triangulate(verts, m)
    bad = _bad_triangles(verts, tris, params.min_angle_deg, size_cap)
    if bad.any():
        raise MeshQualityError(
            f"{int(bad.sum())} triangle(s) below {params.min_angle_deg} deg or above h_max "
            f"after {MAX_REPAIR_ROUNDS} repair rounds (h_max={params.h_max}, seed={seed})"
        )
    jj, ii = np.divmod(np.arange(n * n), n)
    boundary = np.flatnonzero((ii == 0) | (ii == m) | (jj == 0) | (jj == m))
    h_actual = float(edge_lengths(verts[tris]).max())
    return Mesh(verts, tris, boundary, h_actual, seed)


def cells_per_side(params: MeshParams) -> int:
    """Grid resolution: the cell diagonal, stretched by the jitter, fits ``h_max``.

    At zero jitter this is the coarsest grid whose diagonal is at most
    ``h_max``. The ``1 + jitter`` margin leaves every h the same relative
    room for perturbation; the rare worse draws go through the repair loop.
    """
    if params.h_max >= SQRT2:
        return 1
    return math.ceil(SQRT2 * (1.0 + params.jitter) / params.h_max)


def generate_mesh(params: MeshParams) -> Mesh:
    """Seeded randomized triangulation with diameter at most ``params.h_max``."""
    seed = int(params.seed)
    m = cells_per_side(params)
    mesh = _structured(m, params, seed)
    if m == 1:
        return mesh
    while mesh.h_actual > params.h_max:
        # only reachable through rounding at the ceil boundary
        m += 1
        mesh = _structured(m, params, seed)
    return mesh


def mesh_statistics(mesh: Mesh) -> MeshStats:
    pts = mesh.vertices[mesh.triangles]
    lengths = edge_lengths(pts)
    area = np.abs(mesh.signed_areas())
    inradius = 2.0 * area / lengths.sum(axis=1)
    aspect = lengths.max(axis=1) / (2.0 * inradius)
    return MeshStats(
        num_triangles=mesh.n_triangles,
        h_actual=float(lengths.max()),
        min_angle=float(triangle_angles(pts).min()),
        max_aspect_ratio=float(aspect.max()),
    )


def write_mesh(mesh: Mesh, path):
    lines = [f"mesh h_actual={mesh.h_actual:.17g} seed={mesh.seed}"]
    lines += [f"v {x:.17g} {y:.17g}" for x, y in mesh.vertices]
    lines += [f"t {i} {j} {k}" for i, j, k in mesh.triangles]
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path) -> Mesh:
    verts, tris = [], []
    h_actual, seed = None, None
    for line in Path(path).read_text().splitlines():
        tag, *rest = line.split()
        if tag == "mesh":
            fields = dict(item.split("=", 1) for item in rest)
            h_actual, seed = float(fields["h_actual"]), int(fields["seed"])
        elif tag == "v":
            verts.append([float(rest[0]), float(rest[1])])
        elif tag == "t":
            tris.append([int(r) for r in rest])
        else:
            raise ValueError(f"unrecognised mesh line: {line!r}")
    verts = np.array(verts)
    on_side = (verts == 0.0) | (verts == 1.0)
    boundary = np.flatnonzero(on_side.any(axis=1))
    return Mesh(verts, np.array(tris, dtype=np.int64), boundary, h_actual, seed)
