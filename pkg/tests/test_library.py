import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prompt_retrieval import (
    PromptEmbedding,
    ValidationError,
    build_library,
    sample_clustering,
    sample_distributed,
    sample_random,
)


def make_embedding(eid, prefix_len=4, model_dim=3, seed=0):
    rng = np.random.default_rng(seed)
    return PromptEmbedding(
        id=eid,
        matrix=rng.normal(size=(prefix_len, model_dim)),
        metadata={"source_dataset": eid.split("/")[0], "prompt_name": eid.split("/")[-1]},
    )


def make_instances(count, dim=5, seed=0):
    return np.random.default_rng(seed).normal(size=(count, dim))


# --- sample_random -----------------------------------------------------------


def test_sample_random_exhaustive_case():
    assert set(sample_random(5, 5, seed=0)) == {0, 1, 2, 3, 4}


def test_sample_random_determinism():
    a = sample_random(1000, 100, seed=3)
    b = sample_random(1000, 100, seed=3)
    assert list(a) == list(b)
    assert len(set(a)) == 100


def test_sample_random_clamps_at_count():
    assert set(sample_random(3, 100, seed=1)) == {0, 1, 2}


def test_sample_random_rejects_bad_inputs():
    with pytest.raises(ValidationError):
        sample_random(0, 5, seed=0)
    with pytest.raises(ValidationError):
        sample_random(5, 0, seed=0)


# --- sample_clustering -------------------------------------------------------


def test_sample_clustering_hand_computed():
    keys = np.array([[0.0], [1.0], [2.0], [3.0], [10.0]])
    # centroid 3.2; distances 3.2, 2.2, 1.2, 0.2, 6.8
    assert list(sample_clustering(keys, 2)) == [3, 2]


def test_sample_clustering_degenerate_tie():
    keys = np.ones((4, 3))
    assert list(sample_clustering(keys, 2)) == [0, 1]


def test_sample_clustering_clamps():
    keys = np.arange(6.0).reshape(3, 2)
    assert set(sample_clustering(keys, 10)) == {0, 1, 2}


def brute_force_clustering(keys, n):
    # independent route: python loop, exact (fsum) squared-distance accumulation
    keys = np.asarray(keys, dtype=np.float64)
    centroid = keys.mean(axis=0)
    dists = [math.fsum((x - c) * (x - c) for x, c in zip(k, centroid)) for k in keys]
    ranked = sorted(range(len(keys)), key=lambda i: (dists[i], i))
    return ranked[: min(n, len(keys))]


@settings(max_examples=200, deadline=None)
@given(
    keys=st.lists(
        st.lists(st.floats(-50, 50, allow_nan=False, width=32), min_size=2, max_size=2),
        min_size=1,
        max_size=12,
    ),
    n=st.integers(1, 12),
)
def test_sample_clustering_matches_brute_force(keys, n):
    assert list(sample_clustering(keys, n)) == brute_force_clustering(keys, n)


# --- sample_distributed ------------------------------------------------------


def centroid_ranking(keys):
    keys = np.asarray(keys, dtype=np.float64)
    centroid = keys.mean(axis=0)
    dists = [math.fsum((x - c) * (x - c) for x, c in zip(k, centroid)) for k in keys]
    return sorted(range(len(keys)), key=lambda i: (dists[i], i))


def test_sample_distributed_stride_over_1000():
    keys = np.random.default_rng(11).normal(size=(1000, 4))
    picked = list(sample_distributed(keys, 100))
    order = centroid_ranking(keys)
    assert picked == [order[p] for p in range(0, 1000, 10)]


def test_sample_distributed_full_count_is_sorted_order():
    keys = np.random.default_rng(5).normal(size=(17, 3))
    assert list(sample_distributed(keys, 17)) == centroid_ranking(keys)


def test_sample_distributed_hand_computed():
    keys = np.array([[0.0], [4.0], [8.0], [12.0]])
    # centroid 6; distances 6, 2, 2, 6 -> ranking [1, 2, 0, 3]; positions 0 and 2
    assert list(sample_distributed(keys, 2)) == [1, 0]


@settings(max_examples=100, deadline=None)
@given(
    count=st.integers(1, 40),
    n=st.integers(1, 40),
    seed=st.integers(0, 1000),
)
def test_sample_distributed_distinct_indices(count, n, seed):
    keys = np.random.default_rng(seed).normal(size=(count, 3))
    picked = list(sample_distributed(keys, n))
    assert len(picked) == len(set(picked)) == min(n, count)


# --- build_library -----------------------------------------------------------


def test_build_library_cardinality():
    embs = [make_embedding("ds_a/p1", seed=1), make_embedding("ds_b/p2", seed=2)]
    keyed = {"ds_a/p1": make_instances(150, seed=3), "ds_b/p2": make_instances(150, seed=4)}
    lib = build_library(embs, keyed, n=100, method="random", seed=7)
    assert len(lib) == 200
    per = {}
    for entry in lib.entries:
        per[entry.embedding_id] = per.get(entry.embedding_id, 0) + 1
    assert per == {"ds_a/p1": 100, "ds_b/p2": 100}


def test_build_library_clamps_at_availability():
    embs = [make_embedding("ds/p")]
    lib = build_library(embs, {"ds/p": make_instances(40)}, n=100)
    assert len(lib) == 40


def test_build_library_deterministic_for_seed():
    embs = [make_embedding("ds_a/p1"), make_embedding("ds_b/p2")]
    keyed = {"ds_a/p1": make_instances(60, seed=5), "ds_b/p2": make_instances(60, seed=6)}
    lib1 = build_library(embs, keyed, n=20, method="random", seed=7)
    lib2 = build_library(embs, keyed, n=20, method="random", seed=7)
    assert [(e.ordinal, e.embedding_id) for e in lib1.entries] == [
        (e.ordinal, e.embedding_id) for e in lib2.entries
    ]
    assert all(np.array_equal(a.key, b.key) for a, b in zip(lib1.entries, lib2.entries))


def test_build_library_ordinals_follow_id_order():
    embs = [make_embedding("zz/p"), make_embedding("aa/p")]
    keyed = {"zz/p": make_instances(5, seed=1), "aa/p": make_instances(5, seed=2)}
    lib = build_library(embs, keyed, n=5)
    assert [e.embedding_id for e in lib.entries] == ["aa/p"] * 5 + ["zz/p"] * 5
    assert [e.ordinal for e in lib.entries] == list(range(10))


def test_build_library_selected_indices_are_valid_for_all_methods():
    embs = [make_embedding("ds/p")]
    keys = make_instances(30, seed=9)
    for method in ("random", "clustering", "distributed"):
        lib = build_library(embs, {"ds/p": keys}, n=10, method=method, seed=3)
        stored = {e.key.tobytes() for e in lib.entries}
        available = {k.tobytes() for k in keys.astype(np.float32)}
        assert stored <= available
        assert len(lib) == 10


def test_build_library_rejects_dimension_mismatch_naming_embedding():
    embs = [make_embedding("ds_a/p1"), make_embedding("ds_b/p2")]
    keyed = {"ds_a/p1": make_instances(10, dim=5), "ds_b/p2": make_instances(10, dim=6)}
    with pytest.raises(ValidationError, match="ds_b/p2"):
        build_library(embs, keyed, n=5)


def test_build_library_rejects_empty_embedding_set():
    with pytest.raises(ValidationError):
        build_library([], {}, n=5)


def test_build_library_rejects_missing_instances():
    embs = [make_embedding("ds/p")]
    with pytest.raises(ValidationError, match="ds/p"):
        build_library(embs, {}, n=5)


def test_build_library_rejects_unknown_method():
    embs = [make_embedding("ds/p")]
    with pytest.raises(ValidationError, match="stratified"):
        build_library(embs, {"ds/p": make_instances(5)}, n=5, method="stratified")


def test_embedding_rejects_non_finite_matrix():
    with pytest.raises(ValidationError):
        PromptEmbedding(id="ds/p", matrix=np.array([[1.0, np.nan]]))
