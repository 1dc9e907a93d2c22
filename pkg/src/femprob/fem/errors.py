"""H1 error of a finite element solution against the exact solution."""

import numpy as np

from .._accel import njit, pick
from .assembly import element_geometry
from .quadrature import triangle_rule
from .reference import reference_element


ERROR_QUAD_FLOOR = 12


def error_quad_degree(k: int) -> int:
    # exact to 2k + 4; the floor keeps coarse-mesh errors accurate to ~1e-10
    return max(2 * k + 4, ERROR_QUAD_FLOOR)


@njit
def _h1_sum_numba(local, phi, dphi, jinv_t, absdet, w, uq, gxq, gyq, with_l2):
    nt, nloc = local.shape
    nq = w.shape[0]
    total = 0.0
    for t in range(nt):
        acc = 0.0
        for q in range(nq):
            uh = 0.0
            rx = 0.0
            ry = 0.0
            for i in range(nloc):
                c = local[t, i]
                uh += c * phi[q, i]
                rx += c * dphi[q, i, 0]
                ry += c * dphi[q, i, 1]
            gx = jinv_t[t, 0, 0] * rx + jinv_t[t, 0, 1] * ry
            gy = jinv_t[t, 1, 0] * rx + jinv_t[t, 1, 1] * ry
            ex = gx - gxq[t, q]
            ey = gy - gyq[t, q]
            val = ex * ex + ey * ey
            if with_l2:
                eu = uh - uq[t, q]
                val += eu * eu
            acc += w[q] * val
        total += absdet[t] * acc
    return total


def _h1_sum_numpy(local, phi, dphi, jinv_t, absdet, w, uq, gxq, gyq, with_l2):
    uh = local @ phi.T  # (nt, nq)
    gref = np.einsum("ti,qia->tqa", local, dphi)
    g = np.einsum("tab,tqb->tqa", jinv_t, gref)
    val = (g[..., 0] - gxq) ** 2 + (g[..., 1] - gyq) ** 2
    if with_l2:
        val = val + (uh - uq) ** 2
    return float(absdet @ (val @ w))


_h1_sum = pick(_h1_sum_numba, _h1_sum_numpy)


def h1_error(sol, case, seminorm: bool = False, quad_degree: int | None = None) -> float:
    """Full H1 norm of u_h - u (or the H1 seminorm when ``seminorm``)."""
    k = sol.degree
    rule = triangle_rule(quad_degree if quad_degree is not None else error_quad_degree(k))
    ref = reference_element(k)
    phi = ref.eval_basis(rule.points)
    dphi = np.ascontiguousarray(ref.eval_grads(rule.points))
    geom = element_geometry(sol.mesh)
    xq = geom.map_points(rule.points)
    x, y = xq[..., 0], xq[..., 1]
    uq = np.asarray(case.u(x, y), dtype=float) * np.ones_like(x)
    gx, gy = case.grad_u(x, y)
    gx = np.asarray(gx, dtype=float) * np.ones_like(x)
    gy = np.asarray(gy, dtype=float) * np.ones_like(x)
    local = np.ascontiguousarray(sol.coeffs[sol.dofmap.cell_dofs])
    total = _h1_sum(
        local, phi, dphi, np.ascontiguousarray(geom.jinv_t), np.abs(geom.det),
        np.ascontiguousarray(rule.weights), uq, gx, gy, not seminorm,
    )
    return float(np.sqrt(max(total, 0.0)))
