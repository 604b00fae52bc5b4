"""Exact top-N maximum inner-product search over library keys.

Brute force by design: library sizes are small (tens of thousands of keys),
and exactness keeps every downstream selection reproducible. Scores are
accumulated in float64 with a fixed sequential order over the dimension, so
equal inputs give bit-equal scores regardless of thread count or BLAS build.
Ties break by ascending entry ordinal.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .library import SourcePromptLibrary


@dataclass(frozen=True)
class SearchHit:
    ordinal: int
    embedding_id: str
    score: float


class MipsIndex:
    """Read-only view over a library's keys; searching never mutates it."""

    def __init__(self, keys: np.ndarray, embedding_ids: list[str], *, cosine: bool = False):
        self._keys = keys.astype(np.float64, copy=True)
        self._ids = list(embedding_ids)
        self.cosine = cosine
        if cosine:
            norms = np.linalg.norm(self._keys, axis=1, keepdims=True)
            norms[norms == 0.0] = 1.0
            self._keys = self._keys / norms
        self._keys.setflags(write=False)

    def __len__(self) -> int:
        return self._keys.shape[0]

    @property
    def key_dim(self) -> int:
        return self._keys.shape[1]

    def _prepare_query(self, query, *, index: int | None = None) -> np.ndarray:
        q = np.asarray(query, dtype=np.float64)
        if q.ndim != 1 or q.shape[0] != self.key_dim:
            where = "" if index is None else f" (query {index})"
            got = q.shape[0] if q.ndim == 1 else q.shape
            raise ValidationError(
                f"query dimension mismatch{where}: got {got}, index key_dim is {self.key_dim}"
            )
        if self.cosine:
            norm = np.linalg.norm(q)
            if norm > 0.0:
                q = q / norm
        return q

    def search(self, query, n: int) -> list[SearchHit]:
        """Top-n hits ordered by (score descending, ordinal ascending)."""
        if n < 1:
            raise ValidationError(f"N must be >= 1, got {n}")
        q = self._prepare_query(query)
        # einsum (optimize off) keeps a fixed, single-threaded accumulation order.
        scores = np.einsum("nd,d->n", self._keys, q)
        order = np.argsort(-scores, kind="stable")[: min(n, len(self))]
        return [SearchHit(ordinal=int(i), embedding_id=self._ids[i], score=float(scores[i])) for i in order]

    def batch_search(self, queries: Sequence, n: int) -> list[list[SearchHit]]:
        """Elementwise equal to repeated search(); output order matches query order."""
        for i, q in enumerate(queries):
            self._prepare_query(q, index=i)  # dimension check names the offending query
        return [self.search(q, n) for q in queries]


def build_index(library: SourcePromptLibrary, *, cosine: bool = False) -> MipsIndex:
    """Index a library's entry keys for exact inner-product retrieval."""
    if len(library.entries) == 0:
        raise ValidationError("cannot index a library with no entries")
    return MipsIndex(
        keys=library.key_matrix().astype(np.float64),
        embedding_ids=[e.embedding_id for e in library.entries],
        cosine=cosine,
    )
