"""Instance-keyed store of soft-prompt embeddings.

A library maps training-instance key vectors (sentence-level encodings) to
the soft-prompt embedding trained on the same hard prompt. Each embedding
contributes up to ``n`` keys, chosen by one of three sampling methods:

* random        -- uniform without replacement, seed-deterministic
* clustering    -- the n keys closest (Euclidean) to the centroid of all keys
* distributed   -- evenly strided positions over the centroid-distance ranking

Keys and prompt matrices are stored as little-endian float32 so that
persistence round-trips are bit-exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import ValidationError

DEFAULT_PREFIX_LEN = 100
DEFAULT_N_PER_PROMPT = 100

SAMPLING_METHODS = ("random", "clustering", "distributed")


def _as_readonly_f32(values, *, ndim: int, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float32)
    if arr.ndim != ndim:
        raise ValidationError(f"{what} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{what} contains non-finite values")
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PromptEmbedding:
    """A soft prompt: a prefix_len x model_dim matrix plus provenance metadata.

    ``id`` follows the "dataset/prompt_name" convention and must be unique
    within a library. ``metadata`` carries free-form string tags
    (source_dataset, prompt_name, task_cluster, answer_choice_format).
    """

    id: str
    matrix: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.id:
            raise ValidationError("embedding id must be a non-empty string")
        object.__setattr__(self, "matrix", _as_readonly_f32(self.matrix, ndim=2, what=f"matrix of {self.id!r}"))

    @property
    def prefix_len(self) -> int:
        return self.matrix.shape[0]

    @property
    def model_dim(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class LibraryEntry:
    """One stored instance key bound to an embedding id."""

    key: np.ndarray
    embedding_id: str
    ordinal: int

    def __post_init__(self):
        object.__setattr__(self, "key", _as_readonly_f32(self.key, ndim=1, what="entry key"))
        if self.ordinal < 0:
            raise ValidationError(f"ordinal must be non-negative, got {self.ordinal}")


@dataclass(frozen=True)
class LibraryConfig:
    n_per_prompt: int = DEFAULT_N_PER_PROMPT
    sampling_method: str = "random"
    seed: int = 0


@dataclass
class SourcePromptLibrary:
    """Immutable key -> prompt-embedding store with dense, unique ordinals."""

    key_dim: int
    embeddings: dict[str, PromptEmbedding]
    entries: list[LibraryEntry]
    config: LibraryConfig = field(default_factory=LibraryConfig)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.key_dim <= 0:
            raise ValidationError(f"key_dim must be positive, got {self.key_dim}")
        if not self.embeddings:
            raise ValidationError("library must hold at least one embedding")
        shapes = {e.matrix.shape for e in self.embeddings.values()}
        if len(shapes) != 1:
            raise ValidationError(f"embeddings disagree on matrix shape: {sorted(shapes)}")
        for eid, emb in self.embeddings.items():
            if eid != emb.id:
                raise ValidationError(f"embedding keyed as {eid!r} has id {emb.id!r}")
        limit = self.config.n_per_prompt * len(self.embeddings)
        if len(self.entries) > limit:
            raise ValidationError(f"{len(self.entries)} entries exceed n_per_prompt x embeddings = {limit}")
        for pos, entry in enumerate(self.entries):
            if entry.ordinal != pos:
                raise ValidationError(f"ordinals must be dense 0..count-1; position {pos} holds {entry.ordinal}")
            if entry.key.shape[0] != self.key_dim:
                raise ValidationError(
                    f"entry {pos} key has dimension {entry.key.shape[0]}, library key_dim is {self.key_dim}"
                )
            if entry.embedding_id not in self.embeddings:
                raise ValidationError(f"entry {pos} references unknown embedding {entry.embedding_id!r}")

    @property
    def prefix_len(self) -> int:
        return next(iter(self.embeddings.values())).prefix_len

    @property
    def model_dim(self) -> int:
        return next(iter(self.embeddings.values())).model_dim

    def __len__(self) -> int:
        return len(self.entries)

    def key_matrix(self) -> np.ndarray:
        """All entry keys stacked as an (entry_count, key_dim) float32 matrix."""
        if not self.entries:
            return np.zeros((0, self.key_dim), dtype=np.float32)
        return np.stack([e.key for e in self.entries])

    def embedding_ids(self) -> list[str]:
        return sorted(self.embeddings)


def sample_random(count: int, n: int, seed: int) -> np.ndarray:
    """min(n, count) distinct indices, uniform without replacement."""
    if count < 1:
        raise ValidationError(f"count must be >= 1, got {count}")
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    return rng.choice(count, size=min(n, count), replace=False)


def _centroid_order(keys: np.ndarray) -> np.ndarray:
    # Rank by squared distance to the arithmetic-mean vector: sqrt is monotone,
    # and skipping it avoids the scaled-BLAS rounding path that can reorder
    # sub-ulp near-ties. Stable sort breaks exact ties by index.
    centroid = keys.mean(axis=0)
    diff = keys - centroid
    d2 = (diff * diff).sum(axis=1)
    return np.argsort(d2, kind="stable")


def _check_keys(keys) -> np.ndarray:
    arr = np.asarray(keys, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValidationError(f"keys must be a non-empty 2-d array, got shape {arr.shape}")
    return arr


def sample_clustering(keys: Sequence, n: int) -> np.ndarray:
    """Indices of the min(n, count) keys nearest the centroid of all keys."""
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    arr = _check_keys(keys)
    return _centroid_order(arr)[: min(n, arr.shape[0])]


def sample_distributed(keys: Sequence, n: int) -> np.ndarray:
    """Evenly strided indices over the centroid-distance ranking.

    With count keys sorted by ascending centroid distance, picks sorted
    positions floor(k * count / n_eff) for k = 0..n_eff-1 where
    n_eff = min(n, count); n_eff == count reduces to the full ranking.
    """
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    arr = _check_keys(keys)
    count = arr.shape[0]
    order = _centroid_order(arr)
    n_eff = min(n, count)
    positions = (np.arange(n_eff) * count) // n_eff
    return order[positions]


def _select_indices(keys: np.ndarray, n: int, method: str, rng: np.random.Generator) -> np.ndarray:
    if method == "random":
        return rng.choice(keys.shape[0], size=min(n, keys.shape[0]), replace=False)
    if method == "clustering":
        return sample_clustering(keys, n)
    if method == "distributed":
        return sample_distributed(keys, n)
    raise ValidationError(f"unknown sampling method {method!r}; expected one of {SAMPLING_METHODS}")


def build_library(
    embeddings: Sequence[PromptEmbedding],
    keyed_instances: Mapping[str, Sequence],
    n: int = DEFAULT_N_PER_PROMPT,
    method: str = "random",
    seed: int = 0,
) -> SourcePromptLibrary:
    """Build a library by sampling up to ``n`` instance keys per embedding.

    ``keyed_instances`` maps each embedding id to its candidate key vectors.
    Entry ordinals run over embeddings in ascending id order, then in
    within-embedding selection order. Deterministic for a fixed seed.
    """
    if not embeddings:
        raise ValidationError("embedding set must be non-empty")
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    if method not in SAMPLING_METHODS:
        raise ValidationError(f"unknown sampling method {method!r}; expected one of {SAMPLING_METHODS}")

    by_id: dict[str, PromptEmbedding] = {}
    for emb in embeddings:
        if emb.id in by_id:
            raise ValidationError(f"duplicate embedding id {emb.id!r}")
        by_id[emb.id] = emb

    key_dim: int | None = None
    rng = np.random.default_rng(seed)
    entries: list[LibraryEntry] = []
    for eid in sorted(by_id):
        raw = keyed_instances.get(eid)
        if raw is None or len(raw) == 0:
            raise ValidationError(f"embedding {eid!r} has no keyed instances")
        keys = np.asarray(raw, dtype=np.float32)
        if keys.ndim != 2:
            raise ValidationError(f"keyed instances of {eid!r} must be 2-d, got shape {keys.shape}")
        if not np.all(np.isfinite(keys)):
            raise ValidationError(f"keyed instances of {eid!r} contain non-finite values")
        if key_dim is None:
            key_dim = keys.shape[1]
        elif keys.shape[1] != key_dim:
            raise ValidationError(
                f"key dimension mismatch for embedding {eid!r}: got {keys.shape[1]}, expected {key_dim}"
            )
        for idx in _select_indices(keys.astype(np.float64), n, method, rng):
            entries.append(LibraryEntry(key=keys[idx], embedding_id=eid, ordinal=len(entries)))

    return SourcePromptLibrary(
        key_dim=int(key_dim),
        embeddings={eid: by_id[eid] for eid in sorted(by_id)},
        entries=entries,
        config=LibraryConfig(n_per_prompt=n, sampling_method=method, seed=seed),
    )
