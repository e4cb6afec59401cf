import numpy as np
import pytest

from lrpkit import rng
from lrpkit.unionfind import WeightedQuickUnion


def test_pair_keys_are_symmetric():
    a, b = np.array([3, 7, 1]), np.array([7, 3, 9])
    np.testing.assert_array_equal(rng.pair_keys(a, b, 10), rng.pair_keys(b, a, 10))


def test_replica_keys_differ_by_seed_replica_and_tag():
    keys = {int(rng.replica_key(s, r, t)) for s in (0, 1) for r in (0, 1) for t in (0, 1, 2)}
    assert len(keys) == 12


def test_pair_uniforms_are_deterministic_and_in_unit_interval():
    key = rng.replica_key(5, 11)
    pairs = np.arange(10_000, dtype=np.uint64)
    u = rng.pair_uniforms(key, pairs)
    np.testing.assert_array_equal(u, rng.pair_uniforms(key, pairs))
    assert np.all((u > 0) & (u < 1))
    assert u.mean() == pytest.approx(0.5, abs=0.02)


def test_pair_exponentials_have_unit_mean():
    e = rng.pair_exponentials(rng.replica_key(1, 2), np.arange(200_000, dtype=np.uint64))
    assert e.mean() == pytest.approx(1.0, abs=0.01)


def test_philox_streams_are_reproducible():
    a = rng.philox_generator(3, 4, stream=5).random(8)
    b = rng.philox_generator(3, 4, stream=5).random(8)
    c = rng.philox_generator(3, 4, stream=6).random(8)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_union_find_sizes_and_labels():
    uf = WeightedQuickUnion(6)
    uf.union_edges([0, 1, 4], [1, 2, 5])
    assert uf.find(2) == uf.find(0)
    assert uf.find(3) != uf.find(0)
    np.testing.assert_array_equal(uf.sizes(), [3, 3, 3, 1, 2, 2])
    np.testing.assert_array_equal(uf.labels(), [0, 0, 0, 1, 2, 2])


def test_union_is_idempotent():
    uf = WeightedQuickUnion(3)
    uf.union(0, 1)
    uf.union(1, 0)
    np.testing.assert_array_equal(uf.sizes(), [2, 2, 1])
