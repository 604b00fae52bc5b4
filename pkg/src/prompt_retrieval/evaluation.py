"""End-to-end pipeline: query sampling -> retrieval -> selection -> scoring.

Selection happens once per evaluation prompt (query encodings differ per
prompt, and the variance score depends on the prompt), so a report carries a
per-prompt map of accuracy + selection and the mean / population-std across
prompts as the robustness summary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import ValidationError
from .library import SourcePromptLibrary
from .mips import MipsIndex, build_index
from .oracle import RankClassificationRecord, accuracy, rank_classify, _stable_u64
from .selection import (
    CandidateTally,
    SelectionResult,
    Strategy,
    aggregate_frequency,
    interpolate,
    interpolate_by_score,
    select_top_frequency,
    select_variance,
)

REPORT_VERSION = 1


@dataclass(frozen=True)
class PipelineConfig:
    """Retrieval/selection knobs; defaults follow the deployed configuration."""

    Q: int = 32
    N: int = 10
    n_prime: int = 3
    seed: int = 0

    def as_dict(self) -> dict:
        return {"Q": self.Q, "N": self.N, "n_prime": self.n_prime, "seed": self.seed}


@dataclass
class EvalTask:
    """A target task: instance key vectors plus a way to score selections.

    Either ``provider`` (object with rank_records/probe_options, e.g.
    SyntheticProvider) or ``records`` (hard_prompt_id -> embedding_id ->
    record list) must be present. With records, a blended selection scores
    as the weight-average of its members' accuracies.
    """

    task_id: str
    instance_keys: np.ndarray
    hard_prompt_ids: list[str]
    option_count: int
    provider: object | None = None
    records: dict[str, dict[str, list[RankClassificationRecord]]] | None = None

    def __post_init__(self):
        keys = np.asarray(self.instance_keys, dtype=np.float64)
        if keys.ndim != 2 or keys.shape[0] == 0:
            raise ValidationError(f"instance keys must be a non-empty 2-d array, got shape {keys.shape}")
        if not np.all(np.isfinite(keys)):
            raise ValidationError("instance keys contain non-finite values")
        self.instance_keys = keys
        if not self.hard_prompt_ids:
            raise ValidationError("task needs at least one hard prompt")
        if len(set(self.hard_prompt_ids)) != len(self.hard_prompt_ids):
            raise ValidationError("hard prompt ids must be unique")
        if self.option_count < 2:
            raise ValidationError(f"option_count must be >= 2, got {self.option_count}")
        if self.provider is None and self.records is None:
            raise ValidationError("task needs a provider or precomputed records")
        if self.records is not None:
            for hp in self.hard_prompt_ids:
                per_embedding = self.records.get(hp)
                if not per_embedding or any(len(v) == 0 for v in per_embedding.values()):
                    raise ValidationError(f"hard prompt {hp!r} has no scored instances")

    @property
    def key_dim(self) -> int:
        return self.instance_keys.shape[1]


@dataclass(frozen=True)
class PromptOutcome:
    accuracy: float
    selected: tuple[tuple[str, float], ...]
    strategy: str


@dataclass
class EvalReport:
    """Per-prompt accuracies with mean / population-std aggregation."""

    task_id: str
    per_prompt: dict[str, PromptOutcome]
    mean: float
    std: float
    seeds: list[int]
    config: dict = field(default_factory=dict)

    @classmethod
    def build(cls, task_id: str, per_prompt: Mapping[str, PromptOutcome], seeds: Sequence[int], config: dict):
        mean, std = aggregate_report([p.accuracy for p in per_prompt.values()])
        return cls(
            task_id=task_id, per_prompt=dict(per_prompt), mean=mean, std=std, seeds=list(seeds), config=dict(config)
        )

    def to_dict(self) -> dict:
        return {
            "version": REPORT_VERSION,
            "task_id": self.task_id,
            "per_prompt": {
                hp: {
                    "accuracy": outcome.accuracy,
                    "selected": [{"embedding_id": eid, "weight": w} for eid, w in outcome.selected],
                    "strategy": outcome.strategy,
                }
                for hp, outcome in self.per_prompt.items()
            },
            "mean": self.mean,
            "std": self.std,
            "seeds": self.seeds,
            "config": self.config,
        }


def aggregate_report(per_prompt_accuracies: Sequence[float]) -> tuple[float, float]:
    """Arithmetic mean and population standard deviation."""
    if len(per_prompt_accuracies) == 0:
        raise ValidationError("cannot aggregate zero accuracies")
    arr = np.asarray(per_prompt_accuracies, dtype=np.float64)
    return float(arr.mean()), float(arr.std())


def sample_queries(task: EvalTask, q: int, seed: int) -> np.ndarray:
    """min(Q, instance count) distinct query vectors, uniform, seed-deterministic."""
    if q < 1:
        raise ValidationError(f"Q must be >= 1, got {q}")
    count = task.instance_keys.shape[0]
    rng = np.random.default_rng(seed)
    picked = rng.choice(count, size=min(q, count), replace=False)
    return task.instance_keys[picked]


def prompt_query_seed(seed: int, task_id: str, hard_prompt_id: str) -> int:
    """The seed run_prompt uses to sample queries for one evaluation prompt.

    Exposed so callers can rebuild a prompt's exact query set (e.g. to form
    the candidate pool for an oracle comparison).
    """
    return _stable_u64(seed, "queries", task_id, hard_prompt_id)


def _selection_accuracy(task: EvalTask, hard_prompt_id: str, selection: Sequence[tuple[str, float]]) -> float:
    if task.provider is not None:
        records = task.provider.rank_records(hard_prompt_id, selection)
        return accuracy(records, [rank_classify(r) for r in records])
    per_embedding = task.records[hard_prompt_id]
    total = 0.0
    for eid, weight in selection:
        if eid not in per_embedding:
            raise ValidationError(f"no records for embedding {eid!r} under hard prompt {hard_prompt_id!r}")
        records = per_embedding[eid]
        total += weight * accuracy(records, [rank_classify(r) for r in records])
    return total


def _staged(stage: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ValidationError as exc:
        raise ValidationError(f"{stage}: {exc}") from exc


def select_with_strategy(
    tally: CandidateTally,
    strategy: Strategy,
    *,
    library: SourcePromptLibrary,
    provider=None,
    hard_prompt_id: str | None = None,
    n_prime: int = 3,
) -> SelectionResult:
    """Dispatch one strategy over a tally."""
    strategy = Strategy(strategy)
    if strategy is Strategy.FREQUENCY:
        return select_top_frequency(tally, library)
    if strategy is Strategy.INTERPOLATION:
        return interpolate(tally, n_prime, library)
    if provider is None:
        raise ValidationError(f"strategy {strategy.value} needs an option-probe provider")
    if hard_prompt_id is None:
        raise ValidationError(f"strategy {strategy.value} needs a hard prompt id")
    result = select_variance(tally, provider, hard_prompt_id, library)
    if strategy is Strategy.VARIANCE:
        return result
    return interpolate_by_score(tally, n_prime, library)


def run_prompt(
    task: EvalTask,
    library: SourcePromptLibrary,
    strategy: Strategy,
    config: PipelineConfig,
    hard_prompt_id: str,
    *,
    index: MipsIndex | None = None,
) -> tuple[SelectionResult, float]:
    """Full pipeline for one evaluation prompt: returns (selection, accuracy)."""
    if hard_prompt_id not in task.hard_prompt_ids:
        raise ValidationError(f"unknown hard prompt {hard_prompt_id!r}")
    if task.key_dim != library.key_dim:
        raise ValidationError(f"task key_dim {task.key_dim} != library key_dim {library.key_dim}")
    if index is None:
        index = _staged("retrieval", build_index, library)
    query_seed = prompt_query_seed(config.seed, task.task_id, hard_prompt_id)
    queries = _staged("query-sampling", sample_queries, task, config.Q, query_seed)
    hit_lists = _staged("retrieval", index.batch_search, queries, config.N)
    tally = _staged("selection", aggregate_frequency, hit_lists)
    selection = _staged(
        "selection",
        select_with_strategy,
        tally,
        strategy,
        library=library,
        provider=task.provider,
        hard_prompt_id=hard_prompt_id,
        n_prime=config.n_prime,
    )
    acc = _staged("evaluation", _selection_accuracy, task, hard_prompt_id, selection.chosen)
    return selection, acc


def run_pipeline(
    task: EvalTask,
    library: SourcePromptLibrary,
    strategy: Strategy,
    config: PipelineConfig = PipelineConfig(),
) -> EvalReport:
    """Run every evaluation prompt and aggregate mean/std across prompts.

    Queries are re-sampled per prompt (prompted inputs encode differently per
    prompt); the per-prompt seed is derived from (config.seed, prompt id), so
    the whole run is a pure function of its arguments.
    """
    index = _staged("retrieval", build_index, library)
    per_prompt: dict[str, PromptOutcome] = {}
    for hp in task.hard_prompt_ids:
        selection, acc = run_prompt(task, library, strategy, config, hp, index=index)
        per_prompt[hp] = PromptOutcome(accuracy=acc, selected=selection.chosen, strategy=Strategy(strategy).value)
    snapshot = {"strategy": Strategy(strategy).value, **config.as_dict()}
    return EvalReport.build(task.task_id, per_prompt, seeds=[config.seed], config=snapshot)


def combine_reports(reports: Sequence[EvalReport], *, require_same_task: bool = True) -> EvalReport:
    """Average per-prompt accuracies across same-shape reports (one per seed).

    Selections can differ between seeds; the combined report keeps the first
    seed's selection for each prompt and lists every contributing seed. With
    ``require_same_task=False`` only the prompt sets must match (reseeded
    synthetic worlds carry the seed in their task id).
    """
    if not reports:
        raise ValidationError("cannot combine zero reports")
    first = reports[0]
    prompts = list(first.per_prompt)
    for rep in reports[1:]:
        if list(rep.per_prompt) != prompts:
            raise ValidationError("reports disagree on the prompt set")
        if require_same_task and rep.task_id != first.task_id:
            raise ValidationError("reports disagree on the task")
    per_prompt = {
        hp: PromptOutcome(
            accuracy=float(np.mean([rep.per_prompt[hp].accuracy for rep in reports])),
            selected=first.per_prompt[hp].selected,
            strategy=first.per_prompt[hp].strategy,
        )
        for hp in prompts
    }
    seeds = [seed for rep in reports for seed in rep.seeds]
    return EvalReport.build(first.task_id, per_prompt, seeds=seeds, config=first.config)


def oracle_selection(
    task: EvalTask,
    library: SourcePromptLibrary,
    candidate_ids: Sequence[str],
    hard_prompt_id: str,
) -> tuple[str, float]:
    """Best single candidate for one prompt (ties: lexicographic id).

    Evaluates every candidate and keeps the maximum, so it upper-bounds any
    strategy choosing from the same candidates on the same prompt.
    """
    if not candidate_ids:
        raise ValidationError("candidate set must be non-empty")
    accs = {cid: _selection_accuracy(task, hard_prompt_id, ((cid, 1.0),)) for cid in candidate_ids}
    best = min(accs, key=lambda cid: (-accs[cid], cid))
    return best, accs[best]


def oracle_report(task: EvalTask, library: SourcePromptLibrary, candidate_ids: Sequence[str]) -> EvalReport:
    """Per-prompt oracle picks aggregated like a strategy report."""
    per_prompt = {}
    for hp in task.hard_prompt_ids:
        best, acc = oracle_selection(task, library, candidate_ids, hp)
        per_prompt[hp] = PromptOutcome(accuracy=acc, selected=((best, 1.0),), strategy="oracle")
    return EvalReport.build(task.task_id, per_prompt, seeds=[], config={"strategy": "oracle"})


# ---------------------------------------------------------------------------
# replay fixtures: transcribed per-prompt result tables for regression checks


def _fixture_text(source) -> str:
    path = Path(str(source))
    if path.exists():
        return path.read_text(encoding="utf-8")
    name = str(source) if str(source).endswith(".json") else f"{source}.json"
    return resources.files("prompt_retrieval").joinpath("fixtures", name).read_text(encoding="utf-8")


def load_fixture(source) -> dict:
    """Load a bundled fixture by name ("rte_replay") or any JSON path."""
    return json.loads(_fixture_text(source))


def replay_fixture(source) -> EvalReport:
    """Rebuild an EvalReport from a transcribed per-prompt fixture table."""
    payload = load_fixture(source)
    per_prompt = {
        row["name"]: PromptOutcome(
            accuracy=row["retrieval_accuracy"],
            selected=((row["retrieved_embedding"], 1.0),),
            strategy=Strategy.FREQUENCY.value,
        )
        for row in payload["prompts"]
    }
    return EvalReport.build(
        payload["task_id"], per_prompt, seeds=payload.get("seeds", []), config={"replay": str(source)}
    )
