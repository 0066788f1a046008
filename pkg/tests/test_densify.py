import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conceptvec.boc import SparseBoc, sparse_cosine
from conceptvec.densify import (AlignmentConfig, dense_cosine, densify, densify_counts,
                                hungarian_match, many_to_many_score, matrix_densify,
                                max_align_score, sim_hungarian, sim_many_to_many,
                                sim_max_align)
from conceptvec.embeddings import EmbeddingStore
from conceptvec.errors import EmptyBocError, NoEmbeddableConceptsError


def _angle_store(angles):
    keys = [f"c:{k}" for k in angles]
    mat = np.array([[math.cos(a), math.sin(a)] for a in angles.values()])
    return EmbeddingStore(keys, mat)


def test_densify_example():
    store = EmbeddingStore(["c:C1", "c:C2"], np.array([[1.0, 0.0], [0.0, 1.0]]))
    out = densify(SparseBoc([("C1", 1.0), ("C2", 3.0)]), store)
    np.testing.assert_array_equal(out, [0.25, 0.75])


def test_densify_single_concept_is_its_embedding():
    store = EmbeddingStore(["c:A", "c:B"], np.array([[0.3, -2.0], [1.0, 1.0]], dtype=np.float32))
    np.testing.assert_array_equal(densify(SparseBoc([("A", 7.5)]), store),
                                  store.input[0].astype(np.float64))


def test_densify_skips_missing_and_renormalizes():
    store = EmbeddingStore(["c:A", "c:B"], np.array([[1.0, 0.0], [0.0, 1.0]]))
    vec, skipped = densify_counts(SparseBoc([("A", 1.0), ("Z", 5.0), ("B", 1.0)]), store)
    np.testing.assert_allclose(vec, [0.5, 0.5], rtol=0, atol=0)
    assert skipped == 1


def test_densify_errors():
    store = EmbeddingStore(["c:A"], np.ones((1, 2)))
    with pytest.raises(EmptyBocError):
        densify(SparseBoc(), store)
    with pytest.raises(NoEmbeddableConceptsError) as exc:
        densify(SparseBoc([("X", 1.0), ("Y", 1.0)]), store)
    assert exc.value.skipped == 2


def test_matrix_densify_collects_errors():
    store = EmbeddingStore(["c:A", "c:B"], np.eye(2))
    batch = matrix_densify([SparseBoc([("A", 1.0)]), SparseBoc([("Q", 1.0)]), SparseBoc(),
                            SparseBoc([("A", 1.0), ("Q", 2.0)])], store)
    assert batch.ok() == [0, 3]
    assert batch.skipped == [0, 1, 0, 1]
    assert set(batch.errors) == {1, 2}


def test_dense_cosine_values():
    assert dense_cosine([1, 1], [1, 0]) == pytest.approx(1 / math.sqrt(2), abs=1e-15)
    assert dense_cosine([1, 0], [0, 1]) == 0.0
    with pytest.raises(ValueError):
        dense_cosine([0, 0], [1, 0])


_ids = [f"C{i}" for i in range(25)]


def _random_case(rng, dim=6):
    store = EmbeddingStore([f"c:{c}" for c in _ids], rng.normal(size=(len(_ids), dim)))
    n = int(rng.integers(1, 12))
    ids = rng.choice(_ids, n, replace=False)
    return store, ids, rng.lognormal(0, 1, n)


@settings(max_examples=200)
@given(st.integers(0, 2**32 - 1))
def test_densify_hull_and_permutation(seed):
    rng = np.random.default_rng(seed)
    store, ids, w = _random_case(rng)
    boc = SparseBoc(zip(ids, w))
    out = densify(boc, store)
    rows = store.input[[store.index["c:" + c] for c in ids]]
    assert (out >= rows.min(axis=0)).all() and (out <= rows.max(axis=0)).all()
    perm = rng.permutation(len(ids))
    assert densify(SparseBoc(zip(ids[perm], w[perm])), store).tobytes() == out.tobytes()


@settings(max_examples=200)
@given(st.integers(0, 2**32 - 1), st.sampled_from([3.0, 1e6]))
def test_densify_scale_invariance_exact_for_representable_weights(seed, lam):
    rng = np.random.default_rng(seed)
    store, ids, _ = _random_case(rng)
    w = rng.integers(1, 1000, len(ids)).astype(float)
    boc = SparseBoc(zip(ids, w))
    assert densify(boc.scaled(lam), store).tobytes() == densify(boc, store).tobytes()


@settings(max_examples=200)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.1, 3.0, 1e6]))
def test_densify_scale_invariance_rounding_bound(seed, lam):
    rng = np.random.default_rng(seed)
    store, ids, w = _random_case(rng)
    boc = SparseBoc(zip(ids, w))
    a, b = densify(boc.scaled(lam), store), densify(boc, store)
    assert np.max(np.abs(a - b)) <= 1e-14 * np.max(np.abs(store.input))


# -- alignment baselines -------------------------------------------------------------


def test_many_to_many_hand_average():
    sims = np.array([[1.0, 0.9], [0.9, 1.0]])
    assert many_to_many_score(np.ones(2), np.ones(2), sims, 0.85) == pytest.approx(0.95, abs=1e-15)
    assert many_to_many_score(np.ones(2), np.ones(2), sims * 0.8, 0.85) == 0.0


def test_many_to_many_self_pair():
    store = _angle_store({"c": 0.3})
    assert sim_many_to_many(SparseBoc([("c", 1.0)]), SparseBoc([("c", 1.0)]), store) == \
        pytest.approx(1.0, abs=1e-15)


def test_max_align_example():
    store = _angle_store({"a": 0.0, "b": math.acos(0.9), "c": -math.acos(0.95)})
    u = SparseBoc([("a", 1.0)])
    v = SparseBoc([("b", 1.0), ("c", 1.0)])
    assert sim_max_align(u, v, store) == pytest.approx(0.95 / math.sqrt(2), abs=1e-12)
    assert sim_max_align(u, v, store, AlignmentConfig(0.99)) == 0.0


def test_max_align_ties_take_lowest_index():
    sims = np.array([[0.9, 0.9]])
    # with ties the first column's weight is used
    assert max_align_score(np.ones(1), np.array([2.0, 1.0]), sims, 0.85) == pytest.approx(
        0.9 * 2.0 / math.sqrt(5), abs=1e-15)


def test_hungarian_two_by_two():
    rows, cols, total = hungarian_match([[0.9, 0.2], [0.3, 0.8]])
    assert list(zip(rows, cols)) == [(0, 0), (1, 1)]
    assert total == pytest.approx(1.7, abs=1e-15)


def _brute_force(sims):
    n, m = sims.shape
    best = -math.inf
    if n <= m:
        for cols in itertools.permutations(range(m), n):
            best = max(best, sum(sims[i, c] for i, c in enumerate(cols)))
    else:
        for rows in itertools.permutations(range(n), m):
            best = max(best, sum(sims[r, j] for j, r in enumerate(rows)))
    return best


def test_hungarian_brute_force_square_and_rectangular():
    rng = np.random.default_rng(1)
    for n in range(1, 6):
        for m in range(1, 6):
            for _ in range(10):
                sims = rng.uniform(-1, 1, (n, m))
                rows, cols, total = hungarian_match(sims)
                assert len(set(rows)) == len(rows) and len(set(cols)) == len(cols)
                assert total == pytest.approx(_brute_force(sims), abs=1e-12)


def test_hungarian_identity_reduces_to_cosine():
    rng = np.random.default_rng(7)
    store = EmbeddingStore([f"c:{c}" for c in _ids], np.eye(len(_ids)))
    for _ in range(50):
        u = SparseBoc(zip(rng.choice(_ids, 5, replace=False), rng.uniform(0.1, 2, 5)))
        v = SparseBoc(zip(rng.choice(_ids, 7, replace=False), rng.uniform(0.1, 2, 7)))
        assert sim_hungarian(u, v, store) == pytest.approx(sparse_cosine(u, v), abs=1e-12)
        assert sim_max_align(u, v, store) == pytest.approx(sparse_cosine(u, v), abs=1e-12)


def test_hungarian_example_with_threshold():
    store = _angle_store({"a": 0.0, "b": math.acos(0.95), "c": 2.0})
    u = SparseBoc([("a", 1.0), ("c", 1.0)])
    v = SparseBoc([("b", 1.0)])
    assert sim_hungarian(u, v, store) == pytest.approx(0.95 / math.sqrt(2), abs=1e-12)


def test_alignment_config_validation():
    with pytest.raises(ValueError):
        AlignmentConfig(threshold=1.5)
    with pytest.raises(ValueError):
        AlignmentConfig(mechanism="greedy")
