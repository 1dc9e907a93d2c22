"""Stiffness/load assembly for -Laplace(u) = q with Dirichlet elimination."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .._accel import njit, pick
from ..linalg import DEFAULT_TOL, SolveReport, SparseSymMatrix, cg_solve
from .dofmap import DofMap, build_dof_map
from .quadrature import triangle_rule
from .reference import check_degree, reference_element


class SolverError(RuntimeError):
    """The linear solver did not reach its tolerance."""


def assembly_quad_degree(k: int) -> int:
    return max(2 * k - 2, k + 6)


@dataclass(frozen=True)
class Geometry:
    origin: np.ndarray  # (nt, 2) first vertex
    jac: np.ndarray  # (nt, 2, 2) columns p1 - p0, p2 - p0
    det: np.ndarray  # (nt,)
    jinv_t: np.ndarray  # (nt, 2, 2) inverse-transpose Jacobian

    def map_points(self, ref_pts):
        """Physical coordinates of reference points, shape (nt, npts, 2)."""
        return self.origin[:, None, :] + np.einsum("tij,nj->tni", self.jac, ref_pts)


def element_geometry(mesh) -> Geometry:
    v = mesh.vertices[mesh.triangles]
    jac = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]], axis=2)
    det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
    inv = np.empty_like(jac)
    inv[:, 0, 0] = jac[:, 1, 1]
    inv[:, 1, 1] = jac[:, 0, 0]
    inv[:, 0, 1] = -jac[:, 0, 1]
    inv[:, 1, 0] = -jac[:, 1, 0]
    inv /= det[:, None, None]
    return Geometry(v[:, 0], jac, det, np.transpose(inv, (0, 2, 1)))


@lru_cache(maxsize=None)
def reference_stiffness(k: int):
    """(S_xx, S_xy + S_yx, S_yy) with S_ab[i, j] = int d_a phi_i d_b phi_j.

    The three tensors are exactly symmetric so every element matrix built
    from them is bitwise symmetric too.
    """
    ref = reference_element(k)
    rule = triangle_rule(max(2 * k - 2, 0))
    d = ref.eval_grads(rule.points)  # (nq, nloc, 2)
    w = rule.weights
    s = np.einsum("q,qia,qjb->abij", w, d, d)
    sxx = 0.5 * (s[0, 0] + s[0, 0].T)
    syy = 0.5 * (s[1, 1] + s[1, 1].T)
    sxy = s[0, 1] + s[0, 1].T
    for arr in (sxx, sxy, syy):
        arr.setflags(write=False)
    return sxx, sxy, syy


def element_stiffness(geom: Geometry, k: int) -> np.ndarray:
    sxx, sxy, syy = reference_stiffness(k)
    jit = geom.jinv_t
    # metric G = |det| * Jinv Jinv^T; grad_phys = Jinv^T grad_ref
    g = np.abs(geom.det)[:, None, None] * np.einsum("tji,tjk->tik", jit, jit)
    return (
        g[:, 0, 0, None, None] * sxx
        + g[:, 0, 1, None, None] * sxy
        + g[:, 1, 1, None, None] * syy
    )


def element_load(geom: Geometry, k: int, q, quad_degree: int | None = None) -> np.ndarray:
    rule = triangle_rule(quad_degree if quad_degree is not None else assembly_quad_degree(k))
    phi = reference_element(k).eval_basis(rule.points)  # (nq, nloc)
    xq = geom.map_points(rule.points)
    qv = np.asarray(q(xq[..., 0], xq[..., 1]), dtype=float) * rule.weights
    return np.abs(geom.det)[:, None] * (qv @ phi)


# ---------------------------------------------------------------------------
# scatter kernels
# ---------------------------------------------------------------------------


@njit
def _scatter_reduced_numba(cell_dofs, free, ke, fe, gvals, n_free):
    nt, nloc = cell_dofs.shape
    cap = nt * nloc * nloc
    rows = np.empty(cap, dtype=np.int64)
    cols = np.empty(cap, dtype=np.int64)
    vals = np.empty(cap)
    rhs = np.zeros(n_free)
    nnz = 0
    for t in range(nt):
        for i in range(nloc):
            fi = free[cell_dofs[t, i]]
            if fi < 0:
                continue
            rhs[fi] += fe[t, i]
            for j in range(nloc):
                gj = cell_dofs[t, j]
                fj = free[gj]
                if fj < 0:
                    rhs[fi] -= ke[t, i, j] * gvals[gj]
                else:
                    rows[nnz] = fi
                    cols[nnz] = fj
                    vals[nnz] = ke[t, i, j]
                    nnz += 1
    return rows[:nnz], cols[:nnz], vals[:nnz], rhs


def _scatter_reduced_numpy(cell_dofs, free, ke, fe, gvals, n_free):
    nt, nloc = cell_dofs.shape
    fr = free[cell_dofs]  # (nt, nloc)
    ri = np.broadcast_to(fr[:, :, None], ke.shape)
    rj = np.broadcast_to(fr[:, None, :], ke.shape)
    keep = (ri >= 0) & (rj >= 0)
    lift = (ri >= 0) & (rj < 0)
    rhs = np.zeros(n_free)
    ok = fr >= 0
    np.add.at(rhs, fr[ok], fe[ok])
    gj = np.broadcast_to(gvals[cell_dofs][:, None, :], ke.shape)
    np.add.at(rhs, ri[lift], -ke[lift] * gj[lift])
    return ri[keep].astype(np.int64), rj[keep].astype(np.int64), ke[keep], rhs


_scatter_reduced = pick(_scatter_reduced_numba, _scatter_reduced_numpy)


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def assemble_full(mesh, k: int, case, quad_degree=None, dofmap: DofMap | None = None):
    """Unreduced stiffness matrix and load vector over all DOFs."""
    k = check_degree(k)
    dm = dofmap if dofmap is not None else build_dof_map(mesh, k)
    geom = element_geometry(mesh)
    ke = element_stiffness(geom, k)
    fe = element_load(geom, k, case.q, quad_degree)
    rows = np.repeat(dm.cell_dofs, dm.cell_dofs.shape[1], axis=1).ravel()
    cols = np.tile(dm.cell_dofs, (1, dm.cell_dofs.shape[1])).ravel()
    a = SparseSymMatrix.from_coo(dm.n_dofs, rows, cols, ke.ravel())
    f = np.zeros(dm.n_dofs)
    np.add.at(f, dm.cell_dofs.ravel(), fe.ravel())
    return a, f, dm


def boundary_values(dm: DofMap, case) -> np.ndarray:
    """Interpolated Dirichlet datum: g at boundary nodes, zero elsewhere."""
    gvals = np.zeros(dm.n_dofs)
    xb = dm.coords[dm.boundary_dofs]
    gvals[dm.boundary_dofs] = case.g(xb[:, 0], xb[:, 1])
    return gvals


def assemble(mesh, k: int, case, quad_degree=None):
    """Reduced system over interior DOFs after eliminating boundary nodes.

    Returns ``(matrix, rhs, dofmap)``; the rhs already carries the lifted
    boundary contribution ``-a(g_h, v_h)``.
    """
    k = check_degree(k)
    dm = build_dof_map(mesh, k)
    geom = element_geometry(mesh)
    ke = element_stiffness(geom, k)
    fe = element_load(geom, k, case.q, quad_degree)
    gvals = boundary_values(dm, case)
    n_free = dm.interior_dofs.size
    rows, cols, vals, rhs = _scatter_reduced(
        dm.cell_dofs, dm.free_index, ke, fe, gvals, n_free
    )
    return SparseSymMatrix.from_coo(n_free, rows, cols, vals), rhs, dm


@dataclass(frozen=True, eq=False)
class FemSolution:
    degree: int
    mesh: object
    dofmap: DofMap
    coeffs: np.ndarray
    report: SolveReport | None = None


def solve_poisson(mesh, k: int, case, tol: float = DEFAULT_TOL, quad_degree=None,
                  max_iter=None) -> FemSolution:
    a, rhs, dm = assemble(mesh, k, case, quad_degree)
    coeffs = boundary_values(dm, case)
    if a.n:
        x, report = cg_solve(a, rhs, tol=tol, max_iter=max_iter)
        if not report.converged:
            raise SolverError(
                f"CG stopped after {report.iterations} iterations at relative "
                f"residual {report.relative_residual:.3e} (tol {tol:g})"
            )
        coeffs[dm.interior_dofs] = x
    else:
        report = SolveReport(0, 0.0, True)
    coeffs.setflags(write=False)
    return FemSolution(k, mesh, dm, coeffs, report)


def write_solution(sol: FemSolution, path):
    with open(path, "w") as fh:
        for i, v in enumerate(sol.coeffs):
            fh.write(f"{i} {v:.17g}\n")
