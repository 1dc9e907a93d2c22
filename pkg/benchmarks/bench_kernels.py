"""Time the numba kernels against their numpy twins.

Both versions of every kernel are called in-process on the same P_k system,
checked for agreement, and timed. A full solve is then timed once per
backend in a subprocess, since the backend is fixed at import.

    python3 benchmarks/bench_kernels.py --h 0.05 --k 3
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from femprob import linalg
from femprob._accel import HAS_NUMBA
from femprob.fem import assembly, errors
from femprob.fem.assembly import boundary_values, element_geometry, element_load, element_stiffness
from femprob.fem.dofmap import build_dof_map
from femprob.fem.quadrature import triangle_rule
from femprob.fem.reference import reference_element
from femprob.meshgen import MeshParams, generate_mesh
from femprob.problems import runge_case


def best_of(fn, repeat):
    fn()  # warm-up, includes JIT compilation on first call
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def kernel_inputs(h, k, seed):
    case = runge_case(500.0)
    mesh = generate_mesh(MeshParams(h, seed=seed, jitter=0.3))
    dm = build_dof_map(mesh, k)
    geom = element_geometry(mesh)
    ke = element_stiffness(geom, k)
    fe = element_load(geom, k, case.q)
    gvals = boundary_values(dm, case)
    scatter = (dm.cell_dofs, dm.free_index, ke, fe, gvals, dm.interior_dofs.size)

    rows, cols, vals, rhs = assembly._scatter_reduced_numpy(*scatter)
    a = linalg.SparseSymMatrix.from_coo(dm.interior_dofs.size, rows, cols, vals)
    csr = (a.n, rows, cols, vals)
    x = np.random.default_rng(0).standard_normal(a.n)

    coeffs = gvals.copy()
    coeffs[dm.interior_dofs], _ = linalg.cg_solve(a, rhs)
    rule = triangle_rule(errors.error_quad_degree(k))
    ref = reference_element(k)
    xq = geom.map_points(rule.points)
    gx, gy = case.grad_u(xq[..., 0], xq[..., 1])
    h1 = (
        np.ascontiguousarray(coeffs[dm.cell_dofs]), ref.eval_basis(rule.points),
        np.ascontiguousarray(ref.eval_grads(rule.points)), np.ascontiguousarray(geom.jinv_t),
        np.abs(geom.det), np.ascontiguousarray(rule.weights), case.u(xq[..., 0], xq[..., 1]),
        gx, gy, True,
    )
    return mesh, dm, a, x, rhs, scatter, csr, h1


def compare(name, fast, slow, check, repeat):
    out_fast, out_slow = fast(), slow()
    check(out_fast, out_slow)
    t_fast = best_of(fast, repeat)
    t_slow = best_of(slow, repeat)
    print(f"{name:<14} numba {t_fast * 1e3:9.3f} ms   numpy {t_slow * 1e3:9.3f} ms   "
          f"speedup {t_slow / t_fast:6.2f}x")


def close(tol):
    def check(a, b):
        a = a if isinstance(a, tuple) else (a,)
        b = b if isinstance(b, tuple) else (b,)
        for u, v in zip(a, b):
            np.testing.assert_allclose(u, v, rtol=tol, atol=tol)
    return check


def solve_time(backend, h, k, seed):
    code = (
        "import time; from femprob.meshgen import MeshParams, generate_mesh;"
        "from femprob.fem import solve_poisson, h1_error; from femprob.problems import runge_case;"
        f"c = runge_case(500.0); m = generate_mesh(MeshParams({h}, seed={seed}, jitter=0.3));"
        f"solve_poisson(m, {k}, c);"
        "t = time.perf_counter();"
        f"s = solve_poisson(m, {k}, c); e = h1_error(s, c);"
        "print(time.perf_counter() - t, repr(e))"
    )
    env = dict(os.environ, FEMPROB_BACKEND=backend)
    res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    t, e = res.stdout.split()
    return float(t), float(e)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--h", type=float, default=0.05)
    ap.add_argument("--k", type=int, default=3)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not HAS_NUMBA:
        sys.exit("numba is not installed; nothing to compare")

    mesh, dm, a, x, rhs, scatter, csr, h1 = kernel_inputs(args.h, args.k, args.seed)
    print(f"P{args.k}, h={args.h}: {mesh.n_triangles} triangles, {dm.n_dofs} dofs, "
          f"{a.n} unknowns, {a.nnz} nonzeros")
    mat = (a.indptr, a.indices, a.data)
    r = args.repeat
    compare("spmv", lambda: linalg._spmv_numba(*mat, x), lambda: linalg._spmv_numpy(*mat, x), close(1e-12), r)
    compare("coo_to_csr", lambda: linalg._coo_to_csr_numba(*csr), lambda: linalg._coo_to_csr_numpy(*csr),
            close(1e-12), r)
    compare("scatter", lambda: assembly._scatter_reduced_numba(*scatter),
            lambda: assembly._scatter_reduced_numpy(*scatter), close(1e-9), r)
    compare("pcg", lambda: linalg._pcg_numba(*mat, rhs, 1e-12, 20 * a.n)[0],
            lambda: linalg._pcg_numpy(*mat, rhs, 1e-12, 20 * a.n)[0], close(1e-9), max(1, r // 2))
    compare("h1_sum", lambda: errors._h1_sum_numba(*h1), lambda: errors._h1_sum_numpy(*h1), close(1e-10), r)

    t_nb, e_nb = solve_time("numba", args.h, args.k, args.seed)
    t_np, e_np = solve_time("numpy", args.h, args.k, args.seed)
    print(f"{'solve+error':<14} numba {t_nb * 1e3:9.3f} ms   numpy {t_np * 1e3:9.3f} ms   "
          f"speedup {t_np / t_nb:6.2f}x   (H1 error {e_nb:.12e} vs {e_np:.12e})")


if __name__ == "__main__":
    main()
