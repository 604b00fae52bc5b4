"""Command-line front end.

Subcommands mirror the pipeline stages:

    build-library   keys + embeddings files -> binary library
    retrieve        library + queries -> candidate tally JSON
    select          tally -> selection JSON (one of the four strategies)
    evaluate        library + task file -> report JSON (multi-seed averaged)
    ablate          grid + base JSON -> CSV of per-cell reports

Exit codes: 0 success, 2 validation error, 3 I/O or format error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .ablation import AblationBase, run_ablation, write_ablation_csv
from .errors import FormatError, ValidationError
from .evaluation import EvalTask, PipelineConfig, combine_reports, run_pipeline
from .formats import load_embeddings_file, load_keys_file, load_probe_table
from .library import build_library
from .mips import build_index
from .oracle import FileProvider, RankClassificationRecord, SyntheticProvider
from .selection import (
    CandidateTally,
    Strategy,
    interpolate,
    interpolate_by_score,
    select_top_frequency,
    select_variance,
)
from .storage import load_library, save_library
from .synthetic import WorldConfig

STRATEGY_FLAGS = {
    "freq": Strategy.FREQUENCY,
    "inter": Strategy.INTERPOLATION,
    "var": Strategy.VARIANCE,
    "var-inter": Strategy.VARIANCE_INTERPOLATION,
}

TALLY_VERSION = 1
SELECTION_VERSION = 1
QUERIES_VERSION = 1


def _read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}", code="io") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path} is not valid JSON: {exc}", code="bad_json") from exc


def _write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _load_queries(path) -> np.ndarray:
    payload = _read_json(path)
    if payload.get("version") != QUERIES_VERSION:
        raise FormatError(
            f"queries file version is {payload.get('version')!r}, expected {QUERIES_VERSION}",
            code="version_mismatch",
        )
    queries = np.asarray(payload.get("queries"), dtype=np.float64)
    if queries.ndim != 2 or queries.shape[0] == 0:
        raise ValidationError(f"queries must be a non-empty 2-d array, got shape {queries.shape}")
    if not np.all(np.isfinite(queries)):
        raise ValidationError("queries contain non-finite values")
    return queries


def _cmd_build_library(args) -> None:
    embeddings = load_embeddings_file(args.embeddings)
    keyed = load_keys_file(args.keys)
    library = build_library(embeddings, keyed, n=args.n, method=args.method, seed=args.seed)
    save_library(library, args.out)
    print(f"wrote {args.out}: {len(library)} entries over {len(library.embeddings)} embeddings")


def _cmd_retrieve(args) -> None:
    library = load_library(args.library)
    index = build_index(library, cosine=args.cosine)
    queries = _load_queries(args.queries)
    if queries.shape[1] != library.key_dim:
        raise ValidationError(f"query dimension {queries.shape[1]} != library key_dim {library.key_dim}")
    rng = np.random.default_rng(args.seed)
    picked = rng.choice(queries.shape[0], size=min(args.q, queries.shape[0]), replace=False)
    hit_lists = index.batch_search(queries[picked], args.top_n)
    counts: dict[str, int] = {}
    total = 0
    for hits in hit_lists:
        for hit in hits:
            counts[hit.embedding_id] = counts.get(hit.embedding_id, 0) + 1
            total += 1
    payload = {
        "version": TALLY_VERSION,
        "config": {
            "library": str(args.library),
            "queries": str(args.queries),
            "q": args.q,
            "top_n": args.top_n,
            "seed": args.seed,
            "cosine": args.cosine,
        },
        "total": total,
        "counts": {eid: counts[eid] for eid in sorted(counts)},
    }
    _write_json(args.out, payload)
    print(f"wrote {args.out}: {total} hits over {len(counts)} candidate embeddings")


def _load_tally(path) -> CandidateTally:
    payload = _read_json(path)
    if payload.get("version") != TALLY_VERSION:
        raise FormatError(
            f"tally version is {payload.get('version')!r}, expected {TALLY_VERSION}", code="version_mismatch"
        )
    counts = payload.get("counts")
    if not isinstance(counts, dict) or not counts:
        raise ValidationError("tally counts must be a non-empty mapping")
    return CandidateTally(counts={str(k): int(v) for k, v in counts.items()}, total=int(payload["total"]))


def _cmd_select(args) -> None:
    strategy = STRATEGY_FLAGS[args.strategy]
    tally = _load_tally(args.tally)
    embeddings = load_library(args.library) if args.library else None

    if strategy in (Strategy.VARIANCE, Strategy.VARIANCE_INTERPOLATION):
        if not args.probes:
            raise ValidationError(f"strategy {args.strategy} requires --probes")
        table = load_probe_table(args.probes)
        hard_prompts = sorted({hp for _, hp in table})
        if args.hard_prompt:
            hard_prompt = args.hard_prompt
        elif len(hard_prompts) == 1:
            hard_prompt = hard_prompts[0]
        else:
            raise ValidationError(f"probe table holds {len(hard_prompts)} hard prompts; pass --hard-prompt")
        provider = FileProvider(probe_path=args.probes)
        result = select_variance(tally, provider, hard_prompt, embeddings)
        if strategy is Strategy.VARIANCE_INTERPOLATION:
            result = interpolate_by_score(tally, args.n_prime, embeddings)
    elif strategy is Strategy.FREQUENCY:
        result = select_top_frequency(tally, embeddings)
    else:
        result = interpolate(tally, args.n_prime, embeddings)

    payload = {
        "version": SELECTION_VERSION,
        "config": {
            "tally": str(args.tally),
            "strategy": args.strategy,
            "n_prime": args.n_prime,
            "probes": str(args.probes) if args.probes else None,
            "hard_prompt": args.hard_prompt,
            "library": str(args.library) if args.library else None,
        },
        "strategy": result.strategy.value,
        "chosen": [{"embedding_id": eid, "weight": w} for eid, w in result.chosen],
    }
    if tally.scores is not None:
        payload["scores"] = {eid: tally.scores[eid] for eid in sorted(tally.scores)}
    if result.prompt is not None:
        payload["prompt_matrix"] = [[float(v) for v in row] for row in result.prompt]
    _write_json(args.out, payload)
    print(f"wrote {args.out}: {result.strategy.value} -> {', '.join(result.chosen_ids)}")


def _task_from_file(path) -> EvalTask:
    payload = _read_json(path)
    if payload.get("version") != 1:
        raise FormatError(f"task file version is {payload.get('version')!r}, expected 1", code="version_mismatch")
    provider = None
    records = None
    if "provider" in payload:
        spec = payload["provider"]
        if spec.get("type") != "synthetic":
            raise ValidationError(f"unknown provider type {spec.get('type')!r}")
        provider = SyntheticProvider(
            spec["affinities"],
            int(payload["option_count"]),
            seed=int(spec.get("seed", 0)),
            base_accuracy=float(spec.get("base_accuracy", 0.3)),
            accuracy_gain=float(spec.get("accuracy_gain", 0.6)),
            n_eval_instances=int(spec.get("n_eval_instances", 64)),
        )
    elif "records" in payload or "record_files" in payload:
        records = {}
        base_dir = Path(path).parent
        for hp, per_embedding in payload.get("records", {}).items():
            records[hp] = {
                eid: [
                    RankClassificationRecord(
                        instance_id=str(row["instance_id"]),
                        option_loglikelihoods=np.asarray(row["option_loglikelihoods"], dtype=np.float64),
                        gold_index=int(row["gold_index"]),
                    )
                    for row in rows
                ]
                for eid, rows in per_embedding.items()
            }
        for hp, per_embedding in payload.get("record_files", {}).items():
            records.setdefault(hp, {})
            for eid, rel in per_embedding.items():
                records[hp][eid] = FileProvider(record_path=base_dir / rel).records
    else:
        raise ValidationError("task file needs a provider or records/record_files")
    return EvalTask(
        task_id=str(payload["task_id"]),
        instance_keys=np.asarray(payload["instance_keys"], dtype=np.float64),
        hard_prompt_ids=[str(h) for h in payload["hard_prompt_ids"]],
        option_count=int(payload["option_count"]),
        provider=provider,
        records=records,
    )


def _cmd_evaluate(args) -> None:
    library = load_library(args.library)
    task = _task_from_file(args.task)
    strategy = STRATEGY_FLAGS[args.strategy]
    config = PipelineConfig(Q=args.q, N=args.top_n, n_prime=args.n_prime, seed=args.seed)
    reports = [
        run_pipeline(task, library, strategy, replace(config, seed=seed))
        for seed in range(args.seed, args.seed + args.seeds)
    ]
    combined = combine_reports(reports)
    payload = combined.to_dict()
    payload["config"] = {
        **payload["config"],
        "library": str(args.library),
        "task": str(args.task),
        "seeds": combined.seeds,
    }
    _write_json(args.report, payload)
    print(f"wrote {args.report}: mean {combined.mean:.4f} std {combined.std:.4f} over {len(combined.per_prompt)} prompts")


def _cmd_ablate(args) -> None:
    grid = _read_json(args.grid)
    base_payload = _read_json(args.base) if args.base else {}
    world = WorldConfig(**base_payload.get("world", {}))
    pipeline = PipelineConfig(**base_payload.get("pipeline", {}))
    strategy = Strategy(base_payload.get("strategy", "frequency"))
    base = AblationBase(
        world=world,
        pipeline=pipeline,
        strategy=strategy,
        seeds_per_cell=int(base_payload.get("seeds_per_cell", 3)),
        base_seed=int(base_payload.get("base_seed", 0)),
    )
    cells = run_ablation(grid, base)
    write_ablation_csv(cells, args.out)
    print(f"wrote {args.out}: {len(cells)} cells")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prompt-retrieval", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-library", help="build a binary library from keys + embeddings files")
    p.add_argument("--keys", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--method", choices=["random", "clustering", "distributed"], default="random")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_build_library)

    p = sub.add_parser("retrieve", help="sample queries, search the library, tally candidates")
    p.add_argument("--library", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--q", type=int, default=32)
    p.add_argument("--top-n", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cosine", action="store_true", help="normalize keys and queries before scoring")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_retrieve)

    p = sub.add_parser("select", help="pick or blend a target prompt from a tally")
    p.add_argument("--tally", required=True)
    p.add_argument("--strategy", choices=sorted(STRATEGY_FLAGS), required=True)
    p.add_argument("--n-prime", type=int, default=3)
    p.add_argument("--probes", help="probe table (JSON lines), required for var strategies")
    p.add_argument("--hard-prompt", help="hard prompt id when the probe table holds several")
    p.add_argument("--library", help="resolve matrices and emit the blended prompt")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_select)

    p = sub.add_parser("evaluate", help="run the full pipeline over a task file")
    p.add_argument("--library", required=True)
    p.add_argument("--task", required=True)
    p.add_argument("--strategy", choices=sorted(STRATEGY_FLAGS), required=True)
    p.add_argument("--q", type=int, default=32)
    p.add_argument("--top-n", type=int, default=10)
    p.add_argument("--n-prime", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--seeds", type=int, default=3, help="number of seeds to average")
    p.add_argument("--report", required=True)
    p.set_defaults(fn=_cmd_evaluate)

    p = sub.add_parser("ablate", help="run an ablation grid over synthetic worlds")
    p.add_argument("--grid", required=True, help="JSON file: {axis: [values, ...]}")
    p.add_argument("--base", help="JSON file with world/pipeline/strategy overrides")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_ablate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.fn(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
