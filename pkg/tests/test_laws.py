import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from femprob.laws import (
    AccuracyModel,
    BoundCoefficient,
    ErrorSample,
    empirical_frequency,
    estimate_coefficient,
    estimate_h_star,
    sigmoid_law,
    two_steps_law,
)

pos = st.floats(1e-3, 1e3, allow_nan=False)
pairs = st.tuples(st.integers(1, 3), st.integers(1, 20)).map(lambda t: (t[0], t[0] + t[1]))


def samples(hs, errs, k):
    return [ErrorSample(h, i, k, e) for i, (h, e) in enumerate(zip(hs, errs))]


def test_coefficient_two_samples():
    c = estimate_coefficient(samples([0.1, 0.2], [0.004, 0.02], 2), 2)
    assert c.value == pytest.approx(0.5)
    assert c.sample_count == 2 and c.degree == 2


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_coefficient_single_sample(k):
    assert estimate_coefficient(samples([1.0], [0.37], k), k).value == 0.37


def test_coefficient_errors():
    with pytest.raises(ValueError):
        estimate_coefficient([], 2)
    with pytest.raises(ValueError):
        estimate_coefficient(samples([0.1], [0.1], 3), 2)
    with pytest.raises(ValueError):
        ErrorSample(0.0, 0, 1, 0.1)
    with pytest.raises(ValueError):
        ErrorSample(0.1, 0, 1, -1e-3)


def test_mle_on_uniform_model():
    theta, k = 2.5, 3
    rng = np.random.default_rng(2024)
    close = 0
    for _ in range(100):
        h = rng.uniform(0.05, 0.2, 1000)
        err = rng.uniform(0.0, theta, 1000) * h**k
        est = estimate_coefficient(samples(h, err, k), k).value
        assert est <= theta
        close += est >= 0.99 * theta
    assert close >= 95


def test_h_star_examples():
    assert estimate_h_star(BoundCoefficient(2, 0.9, 1), BoundCoefficient(3, 0.3, 1)) == pytest.approx(3.0)
    assert estimate_h_star(BoundCoefficient(2, 8.0, 1), BoundCoefficient(4, 2.0, 1)) == pytest.approx(2.0)


def test_h_star_errors():
    with pytest.raises(ValueError):
        estimate_h_star(BoundCoefficient(3, 1.0, 1), BoundCoefficient(2, 1.0, 1))
    with pytest.raises(ValueError):
        estimate_h_star(BoundCoefficient(2, 0.0, 1), BoundCoefficient(3, 1.0, 1))


@given(ck=pos, cm=pos, c=pos, km=pairs)
def test_h_star_scale_equivariance(ck, cm, c, km):
    k, m = km
    a = estimate_h_star(BoundCoefficient(k, ck, 1), BoundCoefficient(m, cm, 1))
    b = estimate_h_star(BoundCoefficient(k, c * ck, 1), BoundCoefficient(m, c * cm, 1))
    assert b == pytest.approx(a, rel=1e-12)


def test_two_steps_values():
    assert two_steps_law(0.05, 0.12) == 1.0
    assert two_steps_law(0.18, 0.12) == 0.0
    assert two_steps_law(0.12, 0.12) == 0.5
    with pytest.raises(ValueError):
        two_steps_law(0.0, 0.12)
    with pytest.raises(ValueError):
        two_steps_law(0.1, -1.0)


def test_sigmoid_values():
    for k, m in [(1, 2), (2, 3), (1, 4), (2, 4)]:
        assert sigmoid_law(0.3, 0.3, k, m) == 0.5
    assert sigmoid_law(0.5, 1.0, 2, 3) == pytest.approx(0.75)
    assert sigmoid_law(2.0, 1.0, 2, 4) == pytest.approx(0.125)
    assert sigmoid_law(0.5, 1.0, 2, 4) == pytest.approx(0.875)
    with pytest.raises(ValueError):
        sigmoid_law(0.1, 0.1, 3, 3)
    with pytest.raises(ValueError):
        sigmoid_law(-0.1, 0.1, 1, 2)


def test_laws_accept_arrays():
    h = np.array([0.5, 1.0, 2.0])
    np.testing.assert_array_equal(two_steps_law(h, 1.0), [1.0, 0.5, 0.0])
    np.testing.assert_allclose(sigmoid_law(h, 1.0, 2, 4), [0.875, 0.5, 0.125])


@given(h_star=pos, km=pairs)
def test_sigmoid_shape(h_star, km):
    k, m = km
    h = h_star * np.geomspace(0.05, 20, 200)
    s = sigmoid_law(h, h_star, k, m)
    assert np.all((s > 0) & (s <= 1))
    assert np.all(np.diff(s) <= 0)
    # strict where 1 - s and s stay representable
    near = sigmoid_law(h_star * np.geomspace(0.5, 2.0, 50), h_star, k, m)
    assert np.all(np.diff(near) < 0)
    eps = h_star * 1e-15
    left = sigmoid_law(h_star - eps, h_star, k, m)
    right = sigmoid_law(h_star + eps, h_star, k, m)
    assert abs(left - right) <= 1e-13


@pytest.mark.parametrize("p", range(1, 21))
def test_sigmoid_tends_to_two_steps(p):
    h = np.concatenate([np.linspace(0.1, 0.95, 10), np.linspace(1.05, 3.0, 10)])
    ratio = np.minimum(h, 1 / h)
    gap = np.abs(sigmoid_law(h, 1.0, 1, 1 + p) - two_steps_law(h, 1.0))
    assert np.all(gap <= 0.5 * ratio**p + 1e-15)


def test_empirical_frequency():
    assert empirical_frequency([(0.1, 0.2), (0.3, 0.2)]) == 0.5
    assert empirical_frequency([(0.2, 0.2)] * 5) == 1.0
    with pytest.raises(ValueError):
        empirical_frequency([])


@given(st.lists(st.tuples(pos, pos), min_size=1, max_size=50))
def test_empirical_frequency_in_unit_interval(p):
    f = empirical_frequency(p)
    assert 0.0 <= f <= 1.0


def test_frequency_at_h_star_is_one_half():
    ck, cm, k, m = 3.0, 5.0, 2, 3
    h = estimate_h_star(BoundCoefficient(k, ck, 1), BoundCoefficient(m, cm, 1))
    rng = np.random.default_rng(7)
    ek = rng.uniform(0, ck * h**k, 10_000)
    em = rng.uniform(0, cm * h**m, 10_000)
    assert 0.48 <= empirical_frequency(np.column_stack([em, ek])) <= 0.52


def test_accuracy_model():
    model = AccuracyModel.from_estimates(BoundCoefficient(2, 8.0, 10), BoundCoefficient(4, 2.0, 10))
    assert model.h_star == pytest.approx(2.0)
    assert model.two_steps(1.0) == 1.0
    assert model.sigmoid(4.0) == pytest.approx(0.125)
    with pytest.raises(ValueError):
        AccuracyModel(3, 2, 1.0)
    with pytest.raises(ValueError):
        AccuracyModel(1, 2, 0.0)
    assert math.isclose(model.sigmoid(2.0), 0.5)
