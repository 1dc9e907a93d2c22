import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from femprob.fem import (
    assemble,
    assemble_full,
    build_dof_map,
    h1_error,
    reference_element,
    solve_poisson,
    triangle_rule,
    write_solution,
)
from femprob.fem.assembly import FemSolution, element_geometry, element_stiffness
from femprob.fem.dofmap import expected_dof_count
from femprob.fem.quadrature import monomial_integral
from femprob.meshgen import MeshParams, generate_mesh
from femprob.problems import ProblemCase, polynomial_patch_case, smooth_case

from conftest import make_mesh

DEGREES = [1, 2, 3, 4]


# -- quadrature ---------------------------------------------------------------


@pytest.mark.parametrize("degree", range(0, 21))
def test_rule_integrates_monomials_exactly(degree):
    rule = triangle_rule(degree)
    x, y = rule.points[:, 0], rule.points[:, 1]
    assert math.isclose(rule.weights.sum(), 0.5, rel_tol=0, abs_tol=1e-15)
    for p in range(degree + 1):
        for q in range(degree + 1 - p):
            got = float(np.sum(rule.weights * x**p * y**q))
            assert math.isclose(got, monomial_integral(p, q), rel_tol=1e-13, abs_tol=1e-16)


def test_monomial_integral_closed_form():
    assert monomial_integral(0, 0) == 0.5
    assert monomial_integral(1, 0) == pytest.approx(1 / 6)
    assert monomial_integral(1, 1) == pytest.approx(1 / 24)


def test_rule_points_inside_reference_triangle():
    for d in (1, 8, 20):
        bary = triangle_rule(d).barycentric
        assert np.all(bary > 0)
        np.testing.assert_allclose(bary.sum(axis=1), 1.0, atol=1e-15)


# -- reference element --------------------------------------------------------


@pytest.mark.parametrize("k", DEGREES)
def test_nodal_property(k):
    ref = reference_element(k)
    assert ref.n_local == (k + 1) * (k + 2) // 2
    np.testing.assert_allclose(ref.eval_basis(ref.nodes), np.eye(ref.n_local), atol=1e-12)


@pytest.mark.parametrize("k", DEGREES)
def test_partition_of_unity(k):
    ref = reference_element(k)
    pts = triangle_rule(2 * k + 4).points
    np.testing.assert_allclose(ref.eval_basis(pts).sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(ref.eval_grads(pts).sum(axis=1), 0.0, atol=1e-12)


@pytest.mark.parametrize("k", DEGREES)
def test_gradients_match_finite_differences(k):
    ref = reference_element(k)
    pts = np.array([[0.2, 0.3], [0.1, 0.1], [0.6, 0.25]])
    eps = 1e-6
    g = ref.eval_grads(pts)
    for axis in (0, 1):
        step = np.zeros(2)
        step[axis] = eps
        fd = (ref.eval_basis(pts + step) - ref.eval_basis(pts - step)) / (2 * eps)
        np.testing.assert_allclose(g[..., axis], fd, atol=1e-6)


def test_node_layout():
    ref = reference_element(3)
    np.testing.assert_allclose(ref.nodes[:3], [[0, 0], [1, 0], [0, 1]])
    # edge 0->1, then 1->2, then 2->0, walking from the first vertex
    np.testing.assert_allclose(ref.nodes[3:5], [[1 / 3, 0], [2 / 3, 0]])
    np.testing.assert_allclose(ref.nodes[5:7], [[2 / 3, 1 / 3], [1 / 3, 2 / 3]])
    np.testing.assert_allclose(ref.nodes[7:9], [[0, 2 / 3], [0, 1 / 3]])
    np.testing.assert_allclose(ref.nodes[9], [1 / 3, 1 / 3])


@pytest.mark.parametrize("bad", [0, 5, 2.0, "3"])
def test_invalid_degree(bad):
    with pytest.raises(ValueError, match="1..4"):
        reference_element(bad)


# -- dof map ------------------------------------------------------------------


def lattice_dofs_by_coordinate(mesh, k):
    """Independent count: every lattice point of every triangle, deduplicated."""
    seen = set()
    for tri in mesh.triangles:
        p = mesh.vertices[tri]
        for i in range(k + 1):
            for j in range(k + 1 - i):
                x = p[0] + (i / k) * (p[1] - p[0]) + (j / k) * (p[2] - p[0])
                seen.add((round(x[0], 9), round(x[1], 9)))
    return len(seen)


@pytest.mark.parametrize("k, expected", [(1, 4), (2, 9), (3, 16), (4, 25)])
def test_dof_count_on_diagonal_mesh(diagonal_mesh, k, expected):
    dm = build_dof_map(diagonal_mesh, k)
    assert dm.n_dofs == expected
    assert lattice_dofs_by_coordinate(diagonal_mesh, k) == expected


@pytest.mark.parametrize("k", DEGREES)
@pytest.mark.parametrize("seed", [0, 5])
def test_dof_map_conformity(k, seed):
    mesh = generate_mesh(MeshParams(0.3, seed=seed, jitter=0.3))
    dm = build_dof_map(mesh, k)
    assert dm.n_dofs == expected_dof_count(mesh.n_vertices, mesh.n_edges, mesh.n_triangles, k)
    assert dm.n_dofs == lattice_dofs_by_coordinate(mesh, k)
    # every local node, mapped through its own triangle, sits on its global coordinate
    ref = reference_element(k)
    for t, tri in enumerate(mesh.triangles):
        p = mesh.vertices[tri]
        phys = p[0] + ref.nodes @ np.stack([p[1] - p[0], p[2] - p[0]])
        np.testing.assert_allclose(dm.coords[dm.cell_dofs[t]], phys, atol=1e-12)
    # boundary DOFs are exactly those on the square's sides
    xb = dm.coords
    on_side = np.any((np.abs(xb) < 1e-12) | (np.abs(xb - 1) < 1e-12), axis=1)
    np.testing.assert_array_equal(np.flatnonzero(on_side), dm.boundary_dofs)


# -- assembly -----------------------------------------------------------------


def test_p1_stiffness_on_unit_right_triangle():
    mesh = make_mesh([(0, 0), (1, 0), (0, 1)], [(0, 1, 2)])
    ke = element_stiffness(element_geometry(mesh), 1)[0]
    # constant gradients (-1,-1), (1,0), (0,1) times area 1/2
    grads = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    np.testing.assert_allclose(ke, 0.5 * grads @ grads.T, atol=1e-15)
    np.testing.assert_allclose(ke, 0.5 * np.array([[2, -1, -1], [-1, 1, 0], [-1, 0, 1]]), atol=1e-15)


@pytest.mark.parametrize("k", DEGREES)
def test_stiffness_symmetric_and_semidefinite(k):
    mesh = generate_mesh(MeshParams(0.35, seed=11, jitter=0.3))
    a, _, _ = assemble_full(mesh, k, smooth_case())
    assert a.is_structurally_valid()
    assert a.is_symmetric()
    dense = a.to_dense()
    rng = np.random.default_rng(k)
    for _ in range(100):
        x = rng.standard_normal(a.n)
        assert x @ dense @ x >= -1e-12 * (x @ x)
    # constants lie in the kernel before elimination
    np.testing.assert_allclose(dense @ np.ones(a.n), 0.0, atol=1e-11)

    red, _, _ = assemble(mesh, k, smooth_case())
    assert red.is_symmetric()
    assert np.linalg.eigvalsh(red.to_dense()).min() > 0


def zero_case():
    z = lambda x, y: np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)
    return ProblemCase("zero", z, lambda x, y: (z(x, y), z(x, y)), z, z)


@pytest.mark.parametrize("k", DEGREES)
def test_homogeneous_problem(k):
    mesh = generate_mesh(MeshParams(0.4, seed=2, jitter=0.2))
    _, rhs, _ = assemble(mesh, k, zero_case())
    assert not rhs.any()
    sol = solve_poisson(mesh, k, zero_case())
    assert not sol.coeffs.any()
    assert h1_error(sol, zero_case()) == 0.0


def x_squared_case():
    return ProblemCase(
        "x2",
        lambda x, y: x * x + 0.0 * y,
        lambda x, y: (2.0 * x + 0.0 * y, 0.0 * x + 0.0 * y),
        lambda x, y: -2.0 + 0.0 * x * y,
        lambda x, y: x * x + 0.0 * y,
    )


@pytest.mark.parametrize("k", [2, 3, 4])
def test_x_squared_reproduced(k):
    mesh = generate_mesh(MeshParams(0.25, seed=4, jitter=0.3))
    assert h1_error(solve_poisson(mesh, k, x_squared_case()), x_squared_case()) <= 1e-9


@pytest.mark.parametrize("k", DEGREES)
def test_patch_test_on_jittered_mesh(k):
    for d in range(1, k + 1):
        case = polynomial_patch_case(d)
        for seed in (1, 2):
            mesh = generate_mesh(MeshParams(0.2, seed=seed, jitter=0.3))
            sol = solve_poisson(mesh, k, case)
            assert h1_error(sol, case) <= 1e-9
            np.testing.assert_allclose(sol.coeffs, case.u(*sol.dofmap.coords.T), atol=1e-10)


@pytest.mark.parametrize("k", DEGREES)
def test_boundary_coefficients_equal_trace(k):
    case = smooth_case()
    mesh = generate_mesh(MeshParams(0.3, seed=8, jitter=0.3))
    sol = solve_poisson(mesh, k, case)
    xb = sol.dofmap.coords[sol.dofmap.boundary_dofs]
    np.testing.assert_array_equal(sol.coeffs[sol.dofmap.boundary_dofs], case.g(xb[:, 0], xb[:, 1]))


@pytest.mark.parametrize("k", DEGREES)
def test_galerkin_residual(k):
    case = smooth_case()
    mesh = generate_mesh(MeshParams(0.25, seed=6, jitter=0.3))
    sol = solve_poisson(mesh, k, case)
    a, f, dm = assemble_full(mesh, k, case)
    dense = a.to_dense()
    resid = dense @ sol.coeffs - f
    assert np.abs(resid[dm.interior_dofs]).max() <= 1e-9


def test_solution_dump(tmp_path, diagonal_mesh):
    sol = solve_poisson(diagonal_mesh, 2, smooth_case())
    path = tmp_path / "sol.txt"
    write_solution(sol, path)
    lines = path.read_text().splitlines()
    assert len(lines) == 9
    idx, val = lines[4].split()
    assert int(idx) == 4 and float(val) == sol.coeffs[4]


def test_smooth_p2_beats_p1_on_same_mesh():
    case = smooth_case()
    wins = 0
    for seed in range(100):
        mesh = generate_mesh(MeshParams(0.1, seed=seed, jitter=0.3))
        e1 = h1_error(solve_poisson(mesh, 1, case), case)
        e2 = h1_error(solve_poisson(mesh, 2, case), case)
        assert e2 > 0
        wins += e2 < e1
    assert wins >= 95


# -- H1 error -----------------------------------------------------------------


def duffy_rule(n):
    """Collapsed Gauss-Legendre rule on the reference triangle, exact to degree 2n-2."""
    t, w = np.polynomial.legendre.leggauss(n)
    t = (t + 1) / 2
    w = w / 2
    a, b = np.meshgrid(t, t, indexing="ij")
    wa, wb = np.meshgrid(w, w, indexing="ij")
    x = a
    y = (1 - a) * b
    return np.column_stack([x.ravel(), y.ravel()]), (wa * wb * (1 - a)).ravel()


def p1_error_oracle(mesh, coeffs, case, sub=8, npts=11):
    """H1 error of a P1 field by subdividing every triangle and a high-order rule."""
    pts, wts = duffy_rule(npts)
    total = 0.0
    for tri in mesh.triangles:
        p = mesh.vertices[tri]
        c = coeffs[tri]
        jac = np.column_stack([p[1] - p[0], p[2] - p[0]])
        grad_h = np.linalg.solve(jac.T, np.array([c[1] - c[0], c[2] - c[0]]))
        for i in range(sub):
            for j in range(sub - i):
                cells = [((i, j), (i + 1, j), (i, j + 1))]
                if i + j < sub - 1:
                    cells.append(((i + 1, j), (i + 1, j + 1), (i, j + 1)))
                for cell in cells:
                    r = np.array(cell, dtype=float) / sub  # reference sub-triangle
                    rj = np.column_stack([r[1] - r[0], r[2] - r[0]])
                    ref_pts = r[0] + pts @ rj.T
                    area = abs(np.linalg.det(rj))
                    lam = np.column_stack([1 - ref_pts.sum(axis=1), ref_pts])
                    uh = lam @ c
                    xy = p[0] + ref_pts @ jac.T
                    u = case.u(xy[:, 0], xy[:, 1])
                    gx, gy = case.grad_u(xy[:, 0], xy[:, 1])
                    integrand = (uh - u) ** 2 + (grad_h[0] - gx) ** 2 + (grad_h[1] - gy) ** 2
                    total += abs(np.linalg.det(jac)) * area * np.sum(wts * integrand)
    return math.sqrt(total)


def test_h1_error_against_subdivision_oracle(eight_triangle_mesh):
    case = smooth_case()
    sol = solve_poisson(eight_triangle_mesh, 1, case)
    expected = p1_error_oracle(eight_triangle_mesh, sol.coeffs, case)
    assert h1_error(sol, case) == pytest.approx(expected, rel=1e-8)


def test_h1_seminorm_below_full_norm(eight_triangle_mesh):
    case = smooth_case()
    sol = solve_poisson(eight_triangle_mesh, 2, case)
    assert 0 < h1_error(sol, case, seminorm=True) < h1_error(sol, case)


@settings(max_examples=20, deadline=None)
@given(k=st.sampled_from(DEGREES), d=st.integers(1, 4), seed=st.integers(0, 10**6))
def test_interpolant_error_vanishes_for_polynomials(k, d, seed):
    d = min(d, k)
    case = polynomial_patch_case(d)
    mesh = generate_mesh(MeshParams(0.4, seed=seed, jitter=0.4))
    dm = build_dof_map(mesh, k)
    coeffs = case.u(dm.coords[:, 0], dm.coords[:, 1])
    sol = FemSolution(k, mesh, dm, coeffs)
    assert h1_error(sol, case) <= 1e-12
