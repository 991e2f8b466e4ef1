import numpy as np
import pytest

from discrete_copula import _rng


def draws(n, threads, chunk):
    parts = _rng.chunked_draws(lambda g, m: g.random(m), n, 5, 1, threads=threads, chunk=chunk)
    return np.concatenate(parts)


def test_partition_invariance():
    a = draws(10_000, 1, 1000)
    np.testing.assert_array_equal(a, draws(10_000, 4, 1000))
    assert a.size == 10_000


def test_streams_differ_by_key_and_seed():
    a = _rng.generator(1, 0).random(5)
    assert not np.array_equal(a, _rng.generator(1, 1).random(5))
    assert not np.array_equal(a, _rng.generator(2, 0).random(5))
    np.testing.assert_array_equal(a, _rng.generator(1, 0).random(5))


def test_chunk_sizes():
    assert _rng.chunk_sizes(0) == []
    assert _rng.chunk_sizes(5, 2) == [2, 2, 1]
    with pytest.raises(ValueError):
        _rng.chunk_sizes(-1)


def test_thread_env(monkeypatch):
    monkeypatch.setenv(_rng.THREADS_ENV, "3")
    assert _rng.default_threads() == 3
    monkeypatch.setenv(_rng.THREADS_ENV, "many")
    assert _rng.default_threads() == 1
    assert _rng.parallel_map(lambda i: i * i, range(6), threads=3) == [0, 1, 4, 9, 16, 25]
