"""Turn retrieved candidates into one target soft prompt.

Four strategies over the Q x N retrieved hits:

* frequency                -- the most frequently retrieved embedding wins
* interpolation            -- frequency-proportional blend of the top n' ids
* variance                 -- rank by freq / sqrt(Var of the option probabilities
                              the candidate induces without input context);
                              lower variance ranks higher
* variance_interpolation   -- blend of the top n' ids, weighted by that score

All ties break by lexicographically smallest embedding id, and every weight
vector is normalized to sum to 1.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .errors import ValidationError
from .library import PromptEmbedding, SourcePromptLibrary
from .mips import SearchHit

DEFAULT_N_PRIME = 3
VARIANCE_FLOOR = 1e-12
PROB_SUM_TOL = 1e-6


class Strategy(str, Enum):
    FREQUENCY = "frequency"
    INTERPOLATION = "interpolation"
    VARIANCE = "variance"
    VARIANCE_INTERPOLATION = "variance_interpolation"


@dataclass
class CandidateTally:
    """Per-embedding retrieval frequencies, optionally annotated with scores."""

    counts: dict[str, int]
    total: int
    scores: dict[str, float] | None = None

    def __post_init__(self):
        if self.total != sum(self.counts.values()):
            raise ValidationError(f"tally total {self.total} != sum of counts {sum(self.counts.values())}")
        for eid, count in self.counts.items():
            if count < 1:
                raise ValidationError(f"count for {eid!r} must be positive, got {count}")


@dataclass(frozen=True)
class SelectionResult:
    strategy: Strategy
    chosen: tuple[tuple[str, float], ...]  # (embedding_id, weight), weights sum to 1
    prompt: np.ndarray | None = None

    @property
    def chosen_ids(self) -> tuple[str, ...]:
        return tuple(eid for eid, _ in self.chosen)

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(w for _, w in self.chosen)


def _resolve(embeddings, eid: str) -> PromptEmbedding:
    if isinstance(embeddings, SourcePromptLibrary):
        embeddings = embeddings.embeddings
    emb = embeddings.get(eid) if isinstance(embeddings, Mapping) else None
    if emb is None:
        raise ValidationError(f"embedding {eid!r} cannot be resolved")
    return emb


def _blend(chosen: Sequence[tuple[str, float]], embeddings) -> np.ndarray | None:
    if embeddings is None:
        return None
    out = None
    for eid, weight in chosen:
        matrix = _resolve(embeddings, eid).matrix.astype(np.float64)
        out = weight * matrix if out is None else out + weight * matrix
    return out


def aggregate_frequency(hit_lists: Sequence[Sequence[SearchHit]]) -> CandidateTally:
    """Count embedding ids over all hits of all queries."""
    if not hit_lists:
        raise ValidationError("hit lists must be non-empty")
    counts: Counter[str] = Counter()
    total = 0
    for hits in hit_lists:
        for hit in hits:
            counts[hit.embedding_id] += 1
            total += 1
    return CandidateTally(counts=dict(counts), total=total)


def _top_by(tally: CandidateTally, values: Mapping[str, float], n_prime: int) -> list[str]:
    # (value descending, id ascending); clamp n_prime to the distinct ids.
    ranked = sorted(tally.counts, key=lambda eid: (-values[eid], eid))
    return ranked[: min(n_prime, len(ranked))]


def select_top_frequency(tally: CandidateTally, embeddings=None) -> SelectionResult:
    """Single most frequent embedding, weight 1."""
    if not tally.counts:
        raise ValidationError("cannot select from an empty tally")
    winner = _top_by(tally, tally.counts, 1)[0]
    chosen = ((winner, 1.0),)
    return SelectionResult(strategy=Strategy.FREQUENCY, chosen=chosen, prompt=_blend(chosen, embeddings))


def interpolate(tally: CandidateTally, n_prime: int = DEFAULT_N_PRIME, embeddings=None) -> SelectionResult:
    """Frequency-proportional blend of the top-n' candidates."""
    if n_prime < 1:
        raise ValidationError(f"n_prime must be >= 1, got {n_prime}")
    if not tally.counts:
        raise ValidationError("cannot interpolate from an empty tally")
    top = _top_by(tally, tally.counts, n_prime)
    denom = sum(tally.counts[eid] for eid in top)
    chosen = tuple((eid, tally.counts[eid] / denom) for eid in top)
    return SelectionResult(strategy=Strategy.INTERPOLATION, chosen=chosen, prompt=_blend(chosen, embeddings))


def variance_score(freq: int, option_probs: Sequence[float], *, floor: float = VARIANCE_FLOOR) -> float:
    """freq / sqrt(population variance of the option probabilities).

    A perfectly uniform distribution has zero variance; the variance is
    floored at ``floor`` so scores stay finite and frequency still orders
    zero-variance candidates.
    """
    if freq < 1:
        raise ValidationError(f"freq must be a positive integer, got {freq}")
    probs = np.asarray(option_probs, dtype=np.float64)
    if probs.ndim != 1 or probs.shape[0] < 1:
        raise ValidationError(f"option_probs must be a 1-d vector, got shape {probs.shape}")
    if np.any(probs < 0) or not np.all(np.isfinite(probs)):
        raise ValidationError("option_probs must be finite and non-negative")
    total = float(probs.sum())
    if abs(total - 1.0) > PROB_SUM_TOL:
        raise ValidationError(f"option_probs sum to {total!r}, not 1 within {PROB_SUM_TOL}")
    var = float(np.var(probs))
    return freq / math.sqrt(max(var, floor))


def select_variance(
    tally: CandidateTally,
    probs_provider,
    hard_prompt_id: str,
    embeddings=None,
) -> SelectionResult:
    """Single candidate with the highest variance-based score.

    Scores every tallied candidate via ``probs_provider.probe_options`` and
    records the scores into ``tally.scores``.
    """
    if not tally.counts:
        raise ValidationError("cannot select from an empty tally")
    scores: dict[str, float] = {}
    for eid in sorted(tally.counts):
        try:
            probe = probs_provider.probe_options(eid, hard_prompt_id)
        except Exception as exc:
            raise ValidationError(f"probe provider failed for embedding {eid!r}: {exc}") from exc
        scores[eid] = variance_score(tally.counts[eid], probe.option_probs)
    tally.scores = scores
    winner = _top_by(tally, scores, 1)[0]
    chosen = ((winner, 1.0),)
    return SelectionResult(strategy=Strategy.VARIANCE, chosen=chosen, prompt=_blend(chosen, embeddings))


def interpolate_by_score(tally: CandidateTally, n_prime: int = DEFAULT_N_PRIME, embeddings=None) -> SelectionResult:
    """Score-proportional blend of the top-n' candidates by variance score."""
    if n_prime < 1:
        raise ValidationError(f"n_prime must be >= 1, got {n_prime}")
    if not tally.counts:
        raise ValidationError("cannot interpolate from an empty tally")
    if tally.scores is None or any(eid not in tally.scores for eid in tally.counts):
        missing = sorted(set(tally.counts) - set(tally.scores or {}))
        raise ValidationError(f"tally is missing variance scores for {missing}")
    top = _top_by(tally, tally.scores, n_prime)
    denom = sum(tally.scores[eid] for eid in top)
    chosen = tuple((eid, tally.scores[eid] / denom) for eid in top)
    return SelectionResult(
        strategy=Strategy.VARIANCE_INTERPOLATION, chosen=chosen, prompt=_blend(chosen, embeddings)
    )
