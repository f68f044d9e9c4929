import numpy as np
import pytest
from scipy import stats

from radarsense import rng


def test_draws_depend_only_on_key_and_ray():
    full = rng.ray_uniforms(7, rng.STREAM_RUN, 3, 11, np.arange(50))
    subset = rng.ray_uniforms(7, rng.STREAM_RUN, 3, 11, np.array([49, 5, 17]))
    assert np.array_equal(subset, full[[49, 5, 17]])


def test_streams_are_disjoint():
    idx = np.arange(20)
    ref = rng.ray_uniforms(7, rng.STREAM_REFERENCE, 0, 0, idx)
    run = rng.ray_uniforms(7, rng.STREAM_RUN, 0, 0, idx)
    other_run = rng.ray_uniforms(7, rng.STREAM_RUN, 1, 0, idx)
    assert not np.allclose(ref, run)
    assert not np.allclose(run, other_run)


def test_open_unit_interval_and_normals():
    u = rng.ray_uniforms(1, 1, 1, 1, np.arange(5000))
    assert np.all((u > 0) & (u < 1))
    z, v = rng.ray_normals_and_uniforms(1, 1, 1, 1, np.arange(5000))
    assert np.all(np.isfinite(z))
    assert stats.kstest(z, "norm").pvalue > 0.001
    assert stats.kstest(v, "uniform").pvalue > 0.001


def test_key_validation():
    with pytest.raises(ValueError):
        rng.key_words(-1, 0, 0, 0)
    with pytest.raises(ValueError):
        rng.key_words(1 << 64, 0, 0, 0)
    assert rng.key_words((1 << 64) - 1, 0, 0, 0)[:2] == [0xFFFFFFFF, 0xFFFFFFFF]


def test_empty_ray_index():
    assert rng.ray_uniforms(0, 0, 0, 0, np.array([], dtype=int)).shape == (0, 2)
