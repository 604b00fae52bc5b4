"""Text wire formats: key files, embedding files, probe/record tables.

These are the interchange surfaces between the core, the CLI, and external
encoders. Every reader doubles as a validator; ``validate_*`` helpers return
a list of problems (empty = clean) so conformance checks can assert
"zero warnings" without try/except plumbing.

Probe and record tables are JSON lines, one object per line, fixed field
order, floats written with 17 significant digits (exact double round-trip):

    {"embedding_id": ..., "hard_prompt_id": ..., "option_probs": [...]}
    {"instance_id": ..., "option_loglikelihoods": [...], "gold_index": ...}
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import FormatError
from .library import PromptEmbedding

KEYS_FILE_VERSION = 1
EMBEDDINGS_FILE_VERSION = 1


def _fmt_float(x: float) -> str:
    return format(float(x), ".16e")


def _float_list(values: Iterable[float]) -> str:
    return "[" + ", ".join(_fmt_float(v) for v in values) + "]"


# ---------------------------------------------------------------------------
# key files: instance key vectors grouped by embedding id


def write_keys_file(path, keyed_instances: dict[str, Sequence], key_dim: int) -> None:
    instances = []
    for eid in sorted(keyed_instances):
        for vec in keyed_instances[eid]:
            arr = np.asarray(vec, dtype=np.float64)
            if arr.shape != (key_dim,):
                raise FormatError(
                    f"key for {eid!r} has shape {arr.shape}, expected ({key_dim},)", code="bad_field"
                )
            instances.append({"embedding_id": eid, "key": [float(v) for v in arr]})
    payload = {"version": KEYS_FILE_VERSION, "key_dim": key_dim, "instances": instances}
    Path(path).write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")


def load_keys_file(path) -> dict[str, np.ndarray]:
    """Returns {embedding_id: (count, key_dim) float32 array}."""
    problems = validate_keys_file(path)
    if problems:
        raise FormatError(f"invalid keys file {path}: {problems[0]}", code="bad_field")
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    grouped: dict[str, list] = {}
    for row in payload["instances"]:
        grouped.setdefault(row["embedding_id"], []).append(row["key"])
    return {eid: np.asarray(rows, dtype=np.float32) for eid, rows in grouped.items()}


def validate_keys_file(path) -> list[str]:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        return [f"unreadable: {exc}"]
    problems = []
    if payload.get("version") != KEYS_FILE_VERSION:
        problems.append(f"version is {payload.get('version')!r}, expected {KEYS_FILE_VERSION}")
    key_dim = payload.get("key_dim")
    if not isinstance(key_dim, int) or key_dim < 1:
        problems.append(f"key_dim must be a positive integer, got {key_dim!r}")
        return problems
    rows = payload.get("instances")
    if not isinstance(rows, list) or not rows:
        problems.append("instances must be a non-empty list")
        return problems
    for i, row in enumerate(rows):
        if not isinstance(row.get("embedding_id"), str) or not row.get("embedding_id"):
            problems.append(f"instance {i}: embedding_id missing or empty")
        key = row.get("key")
        if not isinstance(key, list) or len(key) != key_dim:
            problems.append(f"instance {i}: key length {len(key) if isinstance(key, list) else '?'} != key_dim {key_dim}")
        elif not all(isinstance(v, (int, float)) and math.isfinite(v) for v in key):
            problems.append(f"instance {i}: key holds non-finite or non-numeric values")
    return problems


# ---------------------------------------------------------------------------
# embedding files: soft-prompt matrices with metadata


def write_embeddings_file(path, embeddings: Sequence[PromptEmbedding]) -> None:
    if not embeddings:
        raise FormatError("cannot write an empty embeddings file", code="bad_field")
    prefix_len = embeddings[0].prefix_len
    model_dim = embeddings[0].model_dim
    payload = {
        "version": EMBEDDINGS_FILE_VERSION,
        "prefix_len": prefix_len,
        "model_dim": model_dim,
        "embeddings": [
            {
                "id": emb.id,
                "metadata": emb.metadata,
                "matrix": [[float(v) for v in row] for row in emb.matrix],
            }
            for emb in sorted(embeddings, key=lambda e: e.id)
        ],
    }
    Path(path).write_text(json.dumps(payload) + "\n", encoding="utf-8")


def load_embeddings_file(path) -> list[PromptEmbedding]:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid embeddings file {path}: {exc}", code="bad_json") from exc
    if payload.get("version") != EMBEDDINGS_FILE_VERSION:
        raise FormatError(
            f"embeddings file version is {payload.get('version')!r}, expected {EMBEDDINGS_FILE_VERSION}",
            code="version_mismatch",
        )
    prefix_len, model_dim = payload["prefix_len"], payload["model_dim"]
    out = []
    for row in payload["embeddings"]:
        matrix = np.asarray(row["matrix"], dtype=np.float32)
        if matrix.shape != (prefix_len, model_dim):
            raise FormatError(
                f"embedding {row.get('id')!r} matrix has shape {matrix.shape}, "
                f"expected ({prefix_len}, {model_dim})",
                code="bad_field",
            )
        out.append(PromptEmbedding(id=row["id"], matrix=matrix, metadata=row.get("metadata", {})))
    return out


# ---------------------------------------------------------------------------
# probe tables (JSON lines)


def write_probe_table(path, rows: Iterable) -> None:
    """rows: iterables of (embedding_id, hard_prompt_id, option_probs)."""
    lines = []
    for embedding_id, hard_prompt_id, option_probs in rows:
        lines.append(
            '{"embedding_id": %s, "hard_prompt_id": %s, "option_probs": %s}'
            % (json.dumps(embedding_id), json.dumps(hard_prompt_id), _float_list(option_probs))
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_probe_table(path) -> dict[tuple[str, str], np.ndarray]:
    problems = validate_probe_table(path)
    if problems:
        raise FormatError(f"invalid probe table {path}: {problems[0]}", code="bad_field")
    table = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        row = json.loads(line)
        table[(row["embedding_id"], row["hard_prompt_id"])] = np.asarray(row["option_probs"], dtype=np.float64)
    return table


def validate_probe_table(path, *, tol: float = 1e-6) -> list[str]:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        return [f"unreadable: {exc}"]
    problems = []
    seen = 0
    for i, line in enumerate(lines):
        if not line.strip():
            continue
        seen += 1
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            problems.append(f"line {i + 1}: invalid JSON ({exc})")
            continue
        if list(row) != ["embedding_id", "hard_prompt_id", "option_probs"]:
            problems.append(f"line {i + 1}: fields must be embedding_id, hard_prompt_id, option_probs in order")
            continue
        probs = row["option_probs"]
        if not isinstance(probs, list) or len(probs) < 2:
            problems.append(f"line {i + 1}: option_probs must list >= 2 probabilities")
            continue
        if any(not isinstance(p, (int, float)) or not math.isfinite(p) or p < 0 for p in probs):
            problems.append(f"line {i + 1}: option_probs must be finite and non-negative")
            continue
        if abs(sum(probs) - 1.0) > tol:
            problems.append(f"line {i + 1}: option_probs sum to {sum(probs)!r}, not 1 within {tol}")
    if seen == 0:
        problems.append("no probe rows present")
    return problems


# ---------------------------------------------------------------------------
# rank-classification record tables (JSON lines)


def write_record_table(path, rows: Iterable) -> None:
    """rows: iterables of (instance_id, option_loglikelihoods, gold_index)."""
    lines = []
    for instance_id, loglikelihoods, gold_index in rows:
        lines.append(
            '{"instance_id": %s, "option_loglikelihoods": %s, "gold_index": %d}'
            % (json.dumps(instance_id), _float_list(loglikelihoods), int(gold_index))
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_record_table(path) -> list[dict]:
    problems = validate_record_table(path)
    if problems:
        raise FormatError(f"invalid record table {path}: {problems[0]}", code="bad_field")
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        row = json.loads(line)
        out.append(
            {
                "instance_id": row["instance_id"],
                "option_loglikelihoods": np.asarray(row["option_loglikelihoods"], dtype=np.float64),
                "gold_index": int(row["gold_index"]),
            }
        )
    return out


def validate_record_table(path) -> list[str]:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        return [f"unreadable: {exc}"]
    problems = []
    seen = 0
    for i, line in enumerate(lines):
        if not line.strip():
            continue
        seen += 1
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            problems.append(f"line {i + 1}: invalid JSON ({exc})")
            continue
        if list(row) != ["instance_id", "option_loglikelihoods", "gold_index"]:
            problems.append(f"line {i + 1}: fields must be instance_id, option_loglikelihoods, gold_index in order")
            continue
        lls = row["option_loglikelihoods"]
        if not isinstance(lls, list) or len(lls) < 2:
            problems.append(f"line {i + 1}: option_loglikelihoods must list >= 2 values")
            continue
        if any(not isinstance(v, (int, float)) or not math.isfinite(v) for v in lls):
            problems.append(f"line {i + 1}: option_loglikelihoods must be finite")
            continue
        gold = row["gold_index"]
        if not isinstance(gold, int) or not 0 <= gold < len(lls):
            problems.append(f"line {i + 1}: gold_index {gold!r} outside option range 0..{len(lls) - 1}")
    if seen == 0:
        problems.append("no records present")
    return problems
