import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prompt_retrieval import ValidationError, build_index
from prompt_retrieval.mips import MipsIndex

from test_storage import random_library


def make_index(keys, ids=None, **kwargs):
    keys = np.asarray(keys, dtype=np.float64)
    ids = ids or [f"emb_{i}" for i in range(keys.shape[0])]
    return MipsIndex(keys=keys, embedding_ids=ids, **kwargs)


def exhaustive_top_n(keys, query, n):
    """Independent full-scan oracle: float64 dots, (score desc, ordinal asc)."""
    keys = np.asarray(keys, dtype=np.float64)
    query = np.asarray(query, dtype=np.float64)
    scored = [(float(np.dot(k, query)), i) for i, k in enumerate(keys)]
    ranked = sorted(range(len(scored)), key=lambda i: (-scored[i][0], i))
    return [(i, scored[i][0]) for i in ranked[: min(n, len(keys))]]


def test_orthonormal_identity_case():
    index = make_index([[1.0, 0.0], [0.0, 1.0]])
    hits = index.search([1.0, 0.0], 1)
    assert len(hits) == 1
    assert hits[0].ordinal == 0
    assert hits[0].score == 1.0


def test_zero_query_total_tie_breaks_by_ordinal():
    index = make_index([[3.0, 1.0], [2.0, -5.0], [0.5, 0.5]])
    hits = index.search([0.0, 0.0], 2)
    assert [h.ordinal for h in hits] == [0, 1]
    assert all(h.score == 0.0 for h in hits)


def test_matches_exhaustive_oracle_on_random_data():
    rng = np.random.default_rng(42)
    keys = rng.normal(size=(50, 8))
    index = make_index(keys)
    for _ in range(10):
        query = rng.normal(size=8)
        hits = index.search(query, 5)
        oracle = exhaustive_top_n(keys, query, 5)
        assert [h.ordinal for h in hits] == [o for o, _ in oracle]
        for hit, (_, score) in zip(hits, oracle):
            assert hit.score == pytest.approx(score, rel=1e-12)


def test_double_build_gives_identical_results():
    lib = random_library(seed=9)
    rng = np.random.default_rng(1)
    queries = rng.normal(size=(6, lib.key_dim))
    a = build_index(lib).batch_search(queries, 4)
    b = build_index(lib).batch_search(queries, 4)
    assert [[(h.ordinal, h.score) for h in hits] for hits in a] == [
        [(h.ordinal, h.score) for h in hits] for hits in b
    ]


def test_hit_count_clamped_to_entry_count():
    index = make_index([[1.0], [2.0]])
    assert len(index.search([1.0], 10)) == 2


def test_batch_search_equals_repeated_search_and_preserves_order():
    rng = np.random.default_rng(3)
    keys = rng.normal(size=(30, 5))
    queries = rng.normal(size=(7, 5))
    index = make_index(keys)
    batch = index.batch_search(queries, 3)
    single = [index.search(q, 3) for q in queries]
    assert batch == single
    # permuting queries permutes outputs identically
    perm = [3, 0, 6, 1, 5, 2, 4]
    permuted = index.batch_search(queries[perm], 3)
    assert permuted == [batch[i] for i in perm]


def test_q32_n10_over_200_entries_yields_320_hits():
    lib = random_library(seed=5, n_embeddings=4, instances=80, n=50)
    assert len(lib) == 200
    rng = np.random.default_rng(0)
    queries = rng.normal(size=(32, lib.key_dim))
    hit_lists = build_index(lib).batch_search(queries, 10)
    assert len(hit_lists) == 32
    assert all(len(hits) == 10 for hits in hit_lists)
    assert sum(len(h) for h in hit_lists) == 320


def test_dimension_mismatch_names_both_dims():
    index = make_index(np.zeros((3, 4)))
    with pytest.raises(ValidationError, match=r"got 6.*key_dim is 4"):
        index.search(np.zeros(6), 1)


def test_batch_dimension_mismatch_names_query_index():
    index = make_index(np.zeros((3, 4)))
    queries = [np.zeros(4), np.zeros(5)]
    with pytest.raises(ValidationError, match=r"query 1"):
        index.batch_search(queries, 1)


def test_empty_library_rejected():
    lib = random_library(seed=1)
    lib.entries = []
    with pytest.raises(ValidationError):
        build_index(lib)


def test_search_does_not_mutate_library():
    lib = random_library(seed=8)
    before = lib.key_matrix().tobytes()
    index = build_index(lib)
    index.batch_search(np.random.default_rng(2).normal(size=(4, lib.key_dim)), 3)
    assert lib.key_matrix().tobytes() == before


def test_query_scaling_preserves_ordering():
    rng = np.random.default_rng(7)
    keys = rng.normal(size=(40, 6))
    index = make_index(keys)
    query = rng.normal(size=6)
    base = [h.ordinal for h in index.search(query, 10)]
    for c in (0.5, 2.0, 17.0):
        scaled = [h.ordinal for h in index.search(c * query, 10)]
        assert scaled == base


def test_cosine_flag_normalizes_scores():
    index = make_index([[10.0, 0.0], [0.0, 1.0]], cosine=True)
    hits = index.search([0.0, 0.2], 2)
    assert hits[0].ordinal == 1
    assert hits[0].score == pytest.approx(1.0)


@settings(max_examples=60, deadline=None)
@given(
    n_keys=st.integers(1, 40),
    dim=st.integers(1, 16),
    n=st.integers(1, 12),
    seed=st.integers(0, 10_000),
)
def test_property_matches_exhaustive_oracle(n_keys, dim, n, seed):
    rng = np.random.default_rng(seed)
    keys = rng.normal(size=(n_keys, dim))
    query = rng.normal(size=dim)
    hits = make_index(keys).search(query, n)
    oracle = exhaustive_top_n(keys, query, n)
    assert [h.ordinal for h in hits] == [o for o, _ in oracle]
    for hit, (_, score) in zip(hits, oracle):
        assert hit.score == pytest.approx(score, rel=1e-9, abs=1e-12)
