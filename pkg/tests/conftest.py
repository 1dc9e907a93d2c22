import math
import re

import numpy as np
import pytest

from femprob.meshgen import Mesh, MeshParams, generate_mesh


def make_mesh(vertices, triangles, h_actual=None, seed=0):
    v = np.asarray(vertices, dtype=float)
    t = np.asarray(triangles, dtype=np.int64)
    on_side = (v == 0.0) | (v == 1.0)
    boundary = np.flatnonzero(on_side.any(axis=1))
    if h_actual is None:
        p = v[t]
        h_actual = max(
            float(np.linalg.norm(p[:, (i + 1) % 3] - p[:, i], axis=1).max()) for i in range(3)
        )
    return Mesh(v, t, boundary, h_actual, seed)


@pytest.fixture
def diagonal_mesh():
    return generate_mesh(MeshParams(1.5, seed=0))


@pytest.fixture
def eight_triangle_mesh():
    # 3x3 vertex grid, each cell cut along the (a, c) diagonal
    verts = [(i / 2, j / 2) for j in range(3) for i in range(3)]
    tris = []
    for j in range(2):
        for i in range(2):
            a = 3 * j + i
            b, c, d = a + 1, a + 4, a + 3
            tris += [(a, b, c), (a, c, d)]
    return make_mesh(verts, tris)


def validate_mesh(mesh, h_max, min_angle):
    """Brute-force check of every mesh invariant, written without the generator's helpers."""
    v, t = mesh.vertices, mesh.triangles
    problems = []
    for tri in t:
        p = v[tri]
        area2 = (p[1, 0] - p[0, 0]) * (p[2, 1] - p[0, 1]) - (p[1, 1] - p[0, 1]) * (p[2, 0] - p[0, 0])
        if not area2 > 0:
            problems.append(f"non-positive area {tri}")
        for i in range(3):
            a = p[(i + 1) % 3] - p[i]
            b = p[(i + 2) % 3] - p[i]
            cosang = np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b))
            ang = math.degrees(math.acos(max(-1.0, min(1.0, cosang))))
            if ang < min_angle - 1e-9:
                problems.append(f"angle {ang} in {tri}")
            if np.linalg.norm(a) > h_max:
                problems.append(f"edge longer than h_max in {tri}")
    # directed edge multiset: interior edges once in each direction, boundary edges on the square
    directed = {}
    for tri in t:
        for i in range(3):
            e = (int(tri[i]), int(tri[(i + 1) % 3]))
            directed[e] = directed.get(e, 0) + 1
    for (a, b), n in directed.items():
        if n != 1:
            problems.append(f"directed edge {(a, b)} used {n} times")
        if (b, a) not in directed:
            pa, pb = v[a], v[b]
            on_same_side = any(
                (pa[c] == s and pb[c] == s) for c in (0, 1) for s in (0.0, 1.0)
            )
            if not on_same_side:
                problems.append(f"unmatched edge {(a, b)} off the boundary")
    area = 0.0
    for tri in t:
        p = v[tri]
        d1, d2 = p[1] - p[0], p[2] - p[0]
        area += 0.5 * abs(d1[0] * d2[1] - d1[1] * d2[0])
    if abs(area - 1.0) > 1e-12:
        problems.append(f"total area {area}")
    for corner in ((0, 0), (1, 0), (0, 1), (1, 1)):
        if not np.any(np.all(v == corner, axis=1)):
            problems.append(f"missing corner {corner}")
    return problems


# -- acceptance report ----------------------------------------------------------

_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_report():
    """Record one result line for the end-of-session acceptance summary."""

    def record(criterion, status, detail):
        line = f"[{status}] criterion {criterion}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")

    def order(line):
        tag = re.match(r"(\d+)(\w*)", line.split("criterion ")[1])
        return int(tag.group(1)), tag.group(2)

    for line in sorted(_ACCEPTANCE_LINES, key=order):
        terminalreporter.write_line(line)
