import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import cn_direct
from porous_soc.hspace import Field, Grid, dst_forward
from porous_soc.noise import (NoiseModel, RngStream, cn_constant, hs_condition_partial,
                              noise_field, sample_increment, sigma_apply)

GRID = Grid(64)


def test_cn_examples():
    assert cn_constant(NoiseModel(GRID, (1.0,))) == pytest.approx(math.pi, abs=1e-12)
    assert cn_constant(NoiseModel(GRID, (1.0, 1.0))) == pytest.approx(13 * math.pi / 4, abs=1e-12)
    assert cn_constant(NoiseModel(GRID, ())) == 0.0


@given(st.lists(st.floats(0, 10), max_size=20))
def test_cn_matches_direct_sum(mu):
    assert cn_constant(NoiseModel(GRID, tuple(mu))) == pytest.approx(cn_direct(mu), rel=1e-12,
                                                                     abs=1e-12)


def test_hs_partial():
    assert hs_condition_partial([1.0], 1) == 1.0
    assert hs_condition_partial([1.0, 0.25], 2) == pytest.approx(2.0)
    assert hs_condition_partial([], 0) == 0.0
    with pytest.raises(ValueError):
        hs_condition_partial([1.0], 2)


def test_model_validation():
    with pytest.raises(ValueError):
        NoiseModel(GRID, (-1.0,))
    with pytest.raises(ValueError):
        NoiseModel(GRID, (math.inf,))
    assert NoiseModel(GRID, ()).is_deterministic
    assert NoiseModel(GRID, (0.0, 0.0)).is_deterministic
    assert NoiseModel(GRID, (1.0,)).scaled(0.0).is_deterministic


def test_sigma_examples():
    m = NoiseModel(GRID, (1.0,))
    X = Field(GRID, np.random.default_rng(0).normal(size=GRID.n))
    assert np.all(sigma_apply(m, GRID.zeros(), [1.0]).values == 0)
    expected = X.values * math.sqrt(2 / math.pi) * np.sin(GRID.nodes)
    np.testing.assert_allclose(sigma_apply(m, X, [1.0]).values, expected, rtol=1e-14)
    assert np.all(sigma_apply(m, X, [0.0]).values == 0)
    with pytest.raises(ValueError):
        sigma_apply(m, X, [1.0, 2.0])


@given(st.integers(0, 2**31))
def test_sigma_bilinear_and_local(seed):
    rng = np.random.default_rng(seed)
    m = NoiseModel(GRID, (0.5, 1.0, 0.2))
    X, Y = (Field(GRID, rng.normal(size=GRID.n)) for _ in range(2))
    h1, h2 = rng.normal(size=3), rng.normal(size=3)
    a, b = rng.normal(size=2)
    lhs = sigma_apply(m, X, a * h1 + b * h2).values
    rhs = a * sigma_apply(m, X, h1).values + b * sigma_apply(m, X, h2).values
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)
    lhs = sigma_apply(m, X * a + Y * b, h1).values
    rhs = a * sigma_apply(m, X, h1).values + b * sigma_apply(m, Y, h1).values
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)
    vals = X.values.copy()
    vals[::3] = 0.0
    assert np.all(sigma_apply(m, Field(GRID, vals), h1).values[::3] == 0)


def test_reproducible_streams():
    m = NoiseModel(GRID, (1.0, 0.5))
    X = Field(GRID, np.ones(GRID.n))
    a = sample_increment(m, X, 1e-3, RngStream(1, 0))
    b = sample_increment(m, X, 1e-3, RngStream(1, 0))
    c = sample_increment(m, X, 1e-3, RngStream(1, 1))
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)
    assert np.all(sample_increment(m, GRID.zeros(), 1e-3, RngStream(5)).values == 0)


def test_stream_is_random_access():
    r = RngStream(7, 3)
    seq = [r.normals(2) for _ in range(5)]
    assert np.array_equal(RngStream(7, 3).normals_at(3, 2), seq[3])
    assert r.step == 5


def test_increment_rejects_bad_dt():
    with pytest.raises(ValueError):
        sample_increment(NoiseModel(GRID, (1.0,)), GRID.zeros(), 0.0, RngStream(0))


def test_increment_statistics():
    # projection of X e_1 dbeta_1 onto the discrete first mode, X = 1
    M, dt = 100_000, 1e-3
    m = NoiseModel(GRID, (1.0,))
    e1 = m.modes[0]
    proj = GRID.h * e1 @ e1  # <e_1, e_1>_2 on the grid
    r = RngStream(11, 0)
    samples = np.array([GRID.h * noise_field(m, dt, r) @ e1 for _ in range(M)])
    mean, var = samples.mean(), samples.var(ddof=1)
    target = dt * proj**2
    assert abs(mean) <= 3 * math.sqrt(var / M)
    # standard error of a Gaussian sample variance
    assert abs(var - target) <= 3 * target * math.sqrt(2 / (M - 1))


def test_per_mode_increment_statistics():
    M, dt = 100_000, 2e-3
    draws = math.sqrt(dt) * RngStream(3, 9).normals_at(0, 3 * M).reshape(M, 3)
    for k in range(3):
        x = draws[:, k]
        assert abs(x.mean()) <= 3 * x.std(ddof=1) / math.sqrt(M)
        assert abs(x.var(ddof=1) - dt) <= 3 * dt * math.sqrt(2 / (M - 1))


def test_modes_match_dst_basis():
    # sampled e_k are orthogonal in the discrete inner product
    m = NoiseModel(GRID, (1.0, 1.0, 1.0))
    gram = GRID.h * m.modes @ m.modes.T
    np.testing.assert_allclose(gram, np.eye(3), atol=1e-12)
    c = dst_forward(Field(GRID, m.modes[1])).coeffs
    assert np.argmax(np.abs(c)) == 1
