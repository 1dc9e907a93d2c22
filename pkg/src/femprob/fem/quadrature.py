"""Quadrature on the reference triangle (0,0), (1,0), (0,1).

Rules are conical (collapsed) products of a Gauss-Jacobi rule with weight
``(1 - a)`` and a Gauss-Legendre rule, mapped by ``x = a, y = (1 - a) b``.
With ``n`` points per direction the rule integrates every polynomial of total
degree ``2n - 1`` exactly.
"""

from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    degree: int
    points: np.ndarray  # (nq, 2) reference coordinates
    weights: np.ndarray  # (nq,), sums to 1/2

    @property
    def barycentric(self):
        x, y = self.points[:, 0], self.points[:, 1]
        return np.column_stack([1.0 - x - y, x, y])

    def __len__(self):
        return self.weights.size


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> QuadratureRule:
    """Smallest conical-product rule exact up to total ``degree``."""
    if degree < 0:
        raise ValueError("degree must be non-negative")
    n = max(1, (degree + 2) // 2)
    ta, wa = roots_jacobi(n, 1.0, 0.0)
    tb, wb = roots_legendre(n)
    a = (1.0 + ta) / 2.0
    b = (1.0 + tb) / 2.0
    wa = wa / 4.0
    wb = wb / 2.0
    A, B = np.meshgrid(a, b, indexing="ij")
    W = np.outer(wa, wb)
    pts = np.column_stack([A.ravel(), ((1.0 - A) * B).ravel()])
    rule = QuadratureRule(degree, pts, W.ravel())
    rule.points.setflags(write=False)
    rule.weights.setflags(write=False)
    return rule


def monomial_integral(p: int, q: int) -> float:
    """Exact integral of x**p * y**q over the reference triangle."""
    return factorial(p) * factorial(q) / factorial(p + q + 2)
