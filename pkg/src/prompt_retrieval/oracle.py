"""Backbone-LM abstraction: option probes and rank classification.

The harness never runs a transformer. Two provider implementations cover
its needs:

* ``SyntheticProvider`` -- seeded, deterministic. Each embedding carries an
  affinity in [0, 1]; higher affinity flattens the option distribution the
  embedding induces without input context (lower variance) and raises the
  evaluation accuracy of selections that include it. Evaluation correctness
  is a threshold on per-instance uniforms drawn independently of the
  selection, so a better selection can never score worse.
* ``FileProvider`` -- replays precomputed probe/record tables produced by an
  external encoder (see ``formats``).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ValidationError
from .formats import load_probe_table, load_record_table

PROB_SUM_TOL = 1e-6


@dataclass(frozen=True)
class OptionProbeResult:
    """Normalized option distribution induced by (embedding, hard prompt)."""

    embedding_id: str
    hard_prompt_id: str
    option_probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.option_probs, dtype=np.float64)
        if probs.ndim != 1 or probs.shape[0] < 1:
            raise ValidationError(f"option_probs must be a 1-d vector, got shape {probs.shape}")
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise ValidationError("option_probs must be finite and non-negative")
        if abs(float(probs.sum()) - 1.0) > PROB_SUM_TOL:
            raise ValidationError(f"option_probs sum to {float(probs.sum())!r}, not 1 within {PROB_SUM_TOL}")
        probs.setflags(write=False)
        object.__setattr__(self, "option_probs", probs)


@dataclass(frozen=True)
class RankClassificationRecord:
    """Per-option log-likelihoods for one instance, with the gold index."""

    instance_id: str
    option_loglikelihoods: np.ndarray
    gold_index: int

    def __post_init__(self):
        lls = np.asarray(self.option_loglikelihoods, dtype=np.float64)
        if lls.ndim != 1 or lls.shape[0] < 1:
            raise ValidationError(f"option_loglikelihoods must be 1-d, got shape {lls.shape}")
        if not np.all(np.isfinite(lls)):
            raise ValidationError(f"record {self.instance_id!r} holds non-finite log-likelihoods")
        if not 0 <= self.gold_index < lls.shape[0]:
            raise ValidationError(
                f"record {self.instance_id!r} gold_index {self.gold_index} outside 0..{lls.shape[0] - 1}"
            )
        lls.setflags(write=False)
        object.__setattr__(self, "option_loglikelihoods", lls)


def loglikelihoods_to_probs(values: Sequence[float]) -> np.ndarray:
    """Exponentiate and normalize raw per-option log-likelihoods."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] < 1:
        raise ValidationError(f"log-likelihoods must be 1-d, got shape {arr.shape}")
    if np.any(np.isnan(arr)) or np.any(arr == np.inf):
        raise ValidationError("log-likelihoods must be < +inf and not NaN")
    finite = arr[np.isfinite(arr)]
    if finite.size == 0:
        raise ValidationError("cannot normalize: all option log-likelihoods are -inf")
    shifted = np.exp(arr - finite.max())
    return shifted / shifted.sum()


def probe_options(provider, embedding_id: str, hard_prompt_id: str) -> OptionProbeResult:
    """Query a provider and validate the returned distribution."""
    result = provider.probe_options(embedding_id, hard_prompt_id)
    if not isinstance(result, OptionProbeResult):
        result = OptionProbeResult(
            embedding_id=embedding_id, hard_prompt_id=hard_prompt_id, option_probs=np.asarray(result)
        )
    return result


def rank_classify(record: RankClassificationRecord) -> int:
    """Index of the highest log-likelihood option; ties go to the lowest index."""
    lls = record.option_loglikelihoods
    if lls.shape[0] < 2:
        raise ValidationError("rank classification needs at least 2 options")
    return int(np.argmax(lls))


def accuracy(records: Sequence[RankClassificationRecord], predictions: Sequence[int]) -> float:
    """Fraction of predictions matching the gold index."""
    if len(records) != len(predictions):
        raise ValidationError(f"{len(records)} records vs {len(predictions)} predictions")
    if not records:
        raise ValidationError("cannot compute accuracy over zero records")
    hits = sum(1 for rec, pred in zip(records, predictions) if pred == rec.gold_index)
    return hits / len(records)


def _stable_u64(*parts) -> int:
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(str(part).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little")


def _rng(*parts) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(_stable_u64(*parts)))


class UniformProvider:
    """Probe provider returning the uniform distribution for every pair."""

    def __init__(self, option_count: int):
        if option_count < 2:
            raise ValidationError(f"option_count must be >= 2, got {option_count}")
        self.option_count = option_count

    def probe_options(self, embedding_id: str, hard_prompt_id: str) -> OptionProbeResult:
        probs = np.full(self.option_count, 1.0 / self.option_count)
        return OptionProbeResult(embedding_id=embedding_id, hard_prompt_id=hard_prompt_id, option_probs=probs)


class SyntheticProvider:
    """Deterministic stand-in for the backbone LM.

    ``affinities`` maps embedding ids to values in [0, 1]. Probe
    distributions are a convex mix of uniform and a peaked distribution,
    weighted by affinity, so variance shrinks as affinity grows. Evaluation
    accuracy of a selection is base_accuracy + accuracy_gain * blended
    affinity (clipped), realized by thresholding per-instance uniforms.
    """

    def __init__(
        self,
        affinities: Mapping[str, float],
        option_count: int,
        *,
        seed: int = 0,
        base_accuracy: float = 0.3,
        accuracy_gain: float = 0.6,
        n_eval_instances: int = 64,
        peak_mass: float = 0.9,
        probe_jitter: float = 0.1,
    ):
        if option_count < 2:
            raise ValidationError(f"option_count must be >= 2, got {option_count}")
        for eid, aff in affinities.items():
            if not 0.0 <= aff <= 1.0:
                raise ValidationError(f"affinity of {eid!r} must lie in [0, 1], got {aff}")
        if n_eval_instances < 1:
            raise ValidationError(f"n_eval_instances must be >= 1, got {n_eval_instances}")
        self.affinities = dict(affinities)
        self.option_count = option_count
        self.seed = seed
        self.base_accuracy = base_accuracy
        self.accuracy_gain = accuracy_gain
        self.n_eval_instances = n_eval_instances
        self.peak_mass = peak_mass
        self.probe_jitter = probe_jitter

    def _affinity(self, embedding_id: str) -> float:
        if embedding_id not in self.affinities:
            raise ValidationError(f"unknown embedding {embedding_id!r}")
        return self.affinities[embedding_id]

    def probe_options(self, embedding_id: str, hard_prompt_id: str) -> OptionProbeResult:
        aff = self._affinity(embedding_id)
        k = self.option_count
        rng = _rng(self.seed, "probe", embedding_id, hard_prompt_id)
        peak_option = int(rng.integers(k))
        mass = self.peak_mass * (1.0 - self.probe_jitter * rng.random())
        peaked = np.full(k, (1.0 - mass) / (k - 1))
        peaked[peak_option] = mass
        probs = aff / k + (1.0 - aff) * peaked
        return OptionProbeResult(embedding_id=embedding_id, hard_prompt_id=hard_prompt_id, option_probs=probs)

    def selection_accuracy_target(self, selection: Sequence[tuple[str, float]], hard_prompt_id: str) -> float:
        """Deterministic accuracy level of a (possibly blended) selection."""
        blended = sum(weight * self._affinity(eid) for eid, weight in selection)
        target = self.base_accuracy + self.accuracy_gain * blended
        return min(max(target, 0.02), 0.98)

    def rank_records(
        self, hard_prompt_id: str, selection: Sequence[tuple[str, float]]
    ) -> list[RankClassificationRecord]:
        """Records whose rank-classification accuracy tracks the selection.

        Instance uniforms and gold indices depend only on (seed, prompt,
        instance); the selection moves the correctness threshold. Evaluating
        a strictly better selection on the same prompt can therefore never
        produce a lower accuracy.
        """
        target = self.selection_accuracy_target(selection, hard_prompt_id)
        k = self.option_count
        records = []
        for i in range(self.n_eval_instances):
            rng = _rng(self.seed, "eval", hard_prompt_id, i)
            threshold = rng.random()
            gold = int(rng.integers(k))
            wrong = (gold + 1 + int(rng.integers(k - 1))) % k
            correct = threshold < target
            winner = gold if correct else wrong
            lls = -2.0 - 0.4 * rng.permutation(k).astype(np.float64)
            lls[winner] = -0.5
            records.append(
                RankClassificationRecord(
                    instance_id=f"{hard_prompt_id}/{i}", option_loglikelihoods=lls, gold_index=gold
                )
            )
        return records


class FileProvider:
    """Replays probe and record tables from disk (see ``formats``).

    ``length_normalize`` is reserved: the table format does not carry
    per-option lengths, so enabling it here is rejected; normalization, when
    wanted, happens in the exporter that produced the tables.
    """

    def __init__(self, probe_path=None, record_path=None, *, length_normalize: bool = False):
        if length_normalize:
            raise ValidationError("probe/record tables carry no option lengths; length_normalize is unsupported")
        self._probes = load_probe_table(probe_path) if probe_path is not None else {}
        self._records = (
            [
                RankClassificationRecord(
                    instance_id=str(row["instance_id"]),
                    option_loglikelihoods=row["option_loglikelihoods"],
                    gold_index=row["gold_index"],
                )
                for row in load_record_table(record_path)
            ]
            if record_path is not None
            else []
        )

    def probe_options(self, embedding_id: str, hard_prompt_id: str) -> OptionProbeResult:
        key = (embedding_id, hard_prompt_id)
        if key not in self._probes:
            raise ValidationError(f"no probe row for embedding {embedding_id!r}, hard prompt {hard_prompt_id!r}")
        return OptionProbeResult(
            embedding_id=embedding_id, hard_prompt_id=hard_prompt_id, option_probs=self._probes[key]
        )

    @property
    def records(self) -> list[RankClassificationRecord]:
        return list(self._records)
