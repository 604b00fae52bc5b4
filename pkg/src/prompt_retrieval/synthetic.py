"""Planted-optimum synthetic worlds for controlled retrieval experiments.

Key vectors form one Gaussian cluster per embedding; cluster centers sit on
scaled coordinate axes so every pair is exactly ``separation * noise_sigma``
apart. The target task draws its instances from the planted embedding's
cluster, and the synthetic provider gives the planted embedding the highest
affinity, making it optimal by construction. Retrieval behavior (more
queries help, variance ranking prefers the planted prompt, oracle dominance)
then becomes a testable statistical property with no LM in the loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ValidationError
from .evaluation import EvalTask
from .library import PromptEmbedding, SourcePromptLibrary, build_library
from .oracle import SyntheticProvider


@dataclass(frozen=True)
class WorldConfig:
    n_embeddings: int = 10
    n_datasets: int = 1
    n_per_prompt: int = 50          # instances stored per embedding
    sampling_method: str = "random"
    key_dim: int = 16
    separation: float = 4.0         # pairwise center distance, in noise_sigma units
    noise_sigma: float = 1.0
    n_task_instances: int = 128     # target-task retrieval pool
    n_hard_prompts: int = 5
    option_count: int = 3
    n_eval_instances: int = 64
    planted_index: int = 0
    prefix_len: int = 4
    model_dim: int = 6
    base_accuracy: float = 0.3
    accuracy_gain: float = 0.6
    planted_affinity: float = 1.0
    max_other_affinity: float = 0.6
    seed: int = 0

    def validate(self) -> None:
        if self.n_embeddings < 2:
            raise ValidationError("a planted world needs at least 2 embeddings")
        if not 0 <= self.planted_index < self.n_embeddings:
            raise ValidationError(f"planted_index {self.planted_index} outside 0..{self.n_embeddings - 1}")
        if self.key_dim < self.n_embeddings:
            raise ValidationError("key_dim must be >= n_embeddings so centers can sit on distinct axes")
        if self.separation <= 0 or self.noise_sigma <= 0:
            raise ValidationError("separation and noise_sigma must be positive")
        if self.n_datasets < 1 or self.n_embeddings % self.n_datasets:
            raise ValidationError("n_datasets must divide n_embeddings")


@dataclass
class SyntheticWorld:
    config: WorldConfig
    library: SourcePromptLibrary
    task: EvalTask
    provider: SyntheticProvider
    planted_id: str
    embedding_ids: list[str] = field(default_factory=list)


def _embedding_id(config: WorldConfig, index: int) -> str:
    dataset = index % config.n_datasets
    return f"dataset_{dataset:02d}/prompt_{index:03d}"


def make_world(config: WorldConfig = WorldConfig()) -> SyntheticWorld:
    """Build library, target task, and provider for one planted world."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    sigma = config.noise_sigma

    # Centers on coordinate axes scaled so pairwise distance is separation*sigma.
    scale = config.separation * sigma / np.sqrt(2.0)
    centers = np.zeros((config.n_embeddings, config.key_dim))
    for j in range(config.n_embeddings):
        centers[j, j] = scale

    ids = [_embedding_id(config, j) for j in range(config.n_embeddings)]
    embeddings = []
    keyed_instances = {}
    affinities = {}
    for j, eid in enumerate(ids):
        matrix = rng.normal(size=(config.prefix_len, config.model_dim))
        embeddings.append(
            PromptEmbedding(
                id=eid,
                matrix=matrix,
                metadata={
                    "source_dataset": eid.split("/")[0],
                    "prompt_name": eid.split("/")[1],
                    "task_cluster": f"cluster_{j % config.n_datasets}",
                    "answer_choice_format": "",
                },
            )
        )
        keyed_instances[eid] = centers[j] + sigma * rng.normal(size=(config.n_per_prompt, config.key_dim))
        if j == config.planted_index:
            affinities[eid] = config.planted_affinity
        else:
            # Deterministic spread below the planted affinity.
            affinities[eid] = config.max_other_affinity * (j + 1) / (config.n_embeddings + 1)

    library = build_library(
        embeddings, keyed_instances, n=config.n_per_prompt, method=config.sampling_method, seed=config.seed
    )

    planted_id = ids[config.planted_index]
    task_keys = centers[config.planted_index] + sigma * rng.normal(
        size=(config.n_task_instances, config.key_dim)
    )
    provider = SyntheticProvider(
        affinities,
        config.option_count,
        seed=config.seed,
        base_accuracy=config.base_accuracy,
        accuracy_gain=config.accuracy_gain,
        n_eval_instances=config.n_eval_instances,
    )
    task = EvalTask(
        task_id=f"planted_{config.planted_index}_seed_{config.seed}",
        instance_keys=task_keys,
        hard_prompt_ids=[f"eval_prompt_{i}" for i in range(config.n_hard_prompts)],
        option_count=config.option_count,
        provider=provider,
    )
    return SyntheticWorld(
        config=config, library=library, task=task, provider=provider, planted_id=planted_id, embedding_ids=ids
    )


def reseed(config: WorldConfig, seed: int) -> WorldConfig:
    return replace(config, seed=seed)
