"""Lagrange P_k shape functions on the reference triangle, k = 1..4.

Local node order: the three vertices (0,0), (1,0), (0,1); then the k-1
interior nodes of each edge 0->1, 1->2, 2->0 walking from the first vertex to
the second; then the cell-interior lattice points.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_DEGREE = 4
LOCAL_EDGES = ((0, 1), (1, 2), (2, 0))
_VERTS = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def check_degree(k):
    if not isinstance(k, (int, np.integer)) or not 1 <= k <= MAX_DEGREE:
        raise ValueError(f"degree must be an integer in 1..{MAX_DEGREE}, got {k!r}")
    return int(k)


def _lattice_nodes(k):
    nodes = [v for v in _VERTS]
    for a, b in LOCAL_EDGES:
        for t in range(1, k):
            nodes.append(_VERTS[a] + (t / k) * (_VERTS[b] - _VERTS[a]))
    for j in range(1, k):
        for i in range(1, k - j):
            nodes.append(np.array([i / k, j / k]))
    return np.array(nodes)


def _exponents(k):
    return [(p, d - p) for d in range(k + 1) for p in range(d, -1, -1)]


@dataclass(frozen=True, eq=False)
class ReferenceElement:
    degree: int
    nodes: np.ndarray  # (nloc, 2)
    coeffs: np.ndarray  # (nmono, nloc): phi_j = sum_m coeffs[m, j] * mono_m

    @property
    def n_local(self):
        return self.nodes.shape[0]

    @property
    def n_edge(self):
        return self.degree - 1

    @property
    def n_interior(self):
        return (self.degree - 1) * (self.degree - 2) // 2

    def _monomials(self, pts):
        x, y = pts[:, 0], pts[:, 1]
        return np.column_stack([x**p * y**q for p, q in _exponents(self.degree)])

    def _monomial_grads(self, pts):
        x, y = pts[:, 0], pts[:, 1]
        dx, dy = [], []
        for p, q in _exponents(self.degree):
            dx.append(p * x ** max(p - 1, 0) * y**q if p else np.zeros_like(x))
            dy.append(q * x**p * y ** max(q - 1, 0) if q else np.zeros_like(y))
        return np.column_stack(dx), np.column_stack(dy)

    def eval_basis(self, pts):
        """Shape function values, shape (npts, nloc)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return self._monomials(pts) @ self.coeffs

    def eval_grads(self, pts):
        """Reference gradients, shape (npts, nloc, 2)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        mx, my = self._monomial_grads(pts)
        return np.stack([mx @ self.coeffs, my @ self.coeffs], axis=-1)


@lru_cache(maxsize=None)
def reference_element(k: int) -> ReferenceElement:
    k = check_degree(k)
    nodes = _lattice_nodes(k)
    el = ReferenceElement(k, nodes, np.empty(0))
    vander = el._monomials(nodes)  # rows: nodes, cols: monomials
    coeffs = np.linalg.solve(vander, np.eye(nodes.shape[0]))
    el = ReferenceElement(k, nodes, coeffs)
    el.nodes.setflags(write=False)
    el.coeffs.setflags(write=False)
    return el
