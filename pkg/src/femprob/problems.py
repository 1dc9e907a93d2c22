"""Manufactured solutions for -Laplace(u) = q on the unit square.

Every evaluator takes coordinate arrays ``x, y`` and is a plain vectorized
function. ``grad_u`` returns the pair ``(du/dx, du/dy)``. The Dirichlet
datum is called ``g`` so it never collides with the mesh size ``h``.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

PI = np.pi


@dataclass(frozen=True)
class ProblemCase:
    name: str
    u: Callable
    grad_u: Callable
    q: Callable
    g: Callable
    alpha: float = 0.0
    degree: int | None = None  # polynomial degree of u, when u is a polynomial


def runge_case(alpha: float) -> ProblemCase:
    """u(x, y) = f(x) f(y) with the Runge function f(t) = 1 / (1 + alpha t^2)."""
    alpha = float(alpha)
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")

    def f(t):
        return 1.0 / (1.0 + alpha * t * t)

    def df(t):
        return -2.0 * alpha * t / (1.0 + alpha * t * t) ** 2

    def d2f(t):
        return 2.0 * alpha * (3.0 * alpha * t * t - 1.0) / (1.0 + alpha * t * t) ** 3

    def u(x, y):
        return f(x) * f(y)

    def grad_u(x, y):
        return df(x) * f(y), f(x) * df(y)

    def q(x, y):
        return -(d2f(x) * f(y) + f(x) * d2f(y))

    return ProblemCase("runge", u, grad_u, q, u, alpha=alpha)


def smooth_case() -> ProblemCase:
    """u(x, y) = sin(pi x) cos(pi y), q = 2 pi^2 u."""

    def u(x, y):
        return np.sin(PI * x) * np.cos(PI * y)

    def grad_u(x, y):
        return PI * np.cos(PI * x) * np.cos(PI * y), -PI * np.sin(PI * x) * np.sin(PI * y)

    def q(x, y):
        return 2.0 * PI**2 * np.sin(PI * x) * np.cos(PI * y)

    return ProblemCase("smooth", u, grad_u, q, u)


# harmonic polynomials of total degree 1..4: (u, du/dx, du/dy)
_PATCH = {
    1: (lambda x, y: x + y, lambda x, y: np.ones_like(x), lambda x, y: np.ones_like(y)),
    2: (lambda x, y: x * x - y * y, lambda x, y: 2.0 * x, lambda x, y: -2.0 * y),
    3: (
        lambda x, y: x**3 - 3.0 * x * y * y,
        lambda x, y: 3.0 * x * x - 3.0 * y * y,
        lambda x, y: -6.0 * x * y,
    ),
    4: (
        lambda x, y: x**4 - 6.0 * x * x * y * y + y**4,
        lambda x, y: 4.0 * x**3 - 12.0 * x * y * y,
        lambda x, y: -12.0 * x * x * y + 4.0 * y**3,
    ),
}


def polynomial_patch_case(d: int) -> ProblemCase:
    """Harmonic polynomial of total degree ``d`` (so q = 0)."""
    if d not in _PATCH:
        raise ValueError(f"patch degree must be in 1..4, got {d!r}")
    u, ux, uy = _PATCH[d]

    def grad_u(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return ux(x, y), uy(x, y)

    def q(x, y):
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)

    return ProblemCase(f"patch{d}", u, grad_u, q, u, degree=d)


def make_case(name: str, alpha: float | None = None, patch_degree: int = 1) -> ProblemCase:
    """Resolve a case from its command-line name."""
    if name == "runge":
        if alpha is None:
            raise ValueError("the runge case needs --alpha")
        return runge_case(alpha)
    if name == "smooth":
        return smooth_case()
    if name == "patch":
        return polynomial_patch_case(patch_degree)
    raise ValueError(f"unknown case {name!r}; expected runge, smooth or patch")
