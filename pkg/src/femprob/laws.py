"""Probabilistic laws for the event {error of P_m <= error of P_k}.

The error of P_i on a mesh of size h is modelled as a random variable on
[0, C_i h^i]. The support endpoints C_i are estimated by the maximum of
error / h^i over a campaign (the MLE of a uniform support endpoint), and the
critical mesh size is h* = (C_k / C_m)^(1 / (m - k)).
"""

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class ErrorSample:
    h: float
    seed: int
    degree: int
    error: float

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"mesh size must be positive, got {self.h}")
        if not self.error >= 0:
            raise ValueError(f"error must be non-negative, got {self.error}")


@dataclass(frozen=True)
class BoundCoefficient:
    degree: int
    value: float
    sample_count: int


def estimate_coefficient(samples: Iterable[ErrorSample], k: int) -> BoundCoefficient:
    """MLE of C_k |u|_{k+1}: max of error / h^k pooled over every sample."""
    samples = list(samples)
    if not samples:
        raise ValueError("cannot estimate a bound coefficient from no samples")
    wrong = [s for s in samples if s.degree != k]
    if wrong:
        raise ValueError(f"{len(wrong)} sample(s) are not of degree {k}")
    h = np.array([s.h for s in samples])
    err = np.array([s.error for s in samples])
    return BoundCoefficient(k, float(np.max(err / h**k)), len(samples))


def estimate_h_star(coef_k: BoundCoefficient, coef_m: BoundCoefficient) -> float:
    k, m = coef_k.degree, coef_m.degree
    if not k < m:
        raise ValueError(f"need k < m, got k={k}, m={m}")
    if not (coef_k.value > 0 and coef_m.value > 0):
        raise ValueError("bound coefficients must be positive")
    return float((coef_k.value / coef_m.value) ** (1.0 / (m - k)))


def _check_positive(h, h_star):
    h = np.asarray(h, dtype=float)
    if np.any(~(h > 0)) or not h_star > 0:
        raise ValueError("h and h_star must be positive")
    return h


def _scalar_or_array(out, like):
    return float(out) if np.ndim(like) == 0 else out


def two_steps_law(h, h_star: float):
    """1 below h*, 0 above, 1/2 exactly at h*."""
    hh = _check_positive(h, h_star)
    out = np.where(hh < h_star, 1.0, np.where(hh > h_star, 0.0, 0.5))
    return _scalar_or_array(out, h)


def sigmoid_law(h, h_star: float, k: int, m: int):
    """P(A) when both errors are independent and uniform on their supports."""
    if not k < m:
        raise ValueError(f"need k < m, got k={k}, m={m}")
    hh = _check_positive(h, h_star)
    p = m - k
    ratio = hh / h_star
    with np.errstate(divide="ignore", over="ignore"):
        below = 1.0 - 0.5 * ratio**p
        above = 0.5 * (1.0 / ratio) ** p
    out = np.where(hh <= h_star, below, above)
    return _scalar_or_array(out, h)


def empirical_frequency(paired: Sequence[tuple[float, float]]) -> float:
    """Fraction of pairs (err_m, err_k) with err_m <= err_k; ties favour P_m."""
    arr = np.asarray(paired, dtype=float).reshape(-1, 2)
    if arr.shape[0] == 0:
        raise ValueError("empirical frequency of an empty sample")
    return float(np.count_nonzero(arr[:, 0] <= arr[:, 1]) / arr.shape[0])


@dataclass(frozen=True)
class AccuracyModel:
    k: int
    m: int
    h_star: float
    coef_k: BoundCoefficient | None = None
    coef_m: BoundCoefficient | None = None

    def __post_init__(self):
        if not self.k < self.m:
            raise ValueError(f"need k < m, got k={self.k}, m={self.m}")
        if not self.h_star > 0:
            raise ValueError("h_star must be positive")

    @classmethod
    def from_estimates(cls, coef_k: BoundCoefficient, coef_m: BoundCoefficient):
        return cls(coef_k.degree, coef_m.degree, estimate_h_star(coef_k, coef_m), coef_k, coef_m)

    def two_steps(self, h):
        return two_steps_law(h, self.h_star)

    def sigmoid(self, h):
        return sigmoid_law(h, self.h_star, self.k, self.m)
