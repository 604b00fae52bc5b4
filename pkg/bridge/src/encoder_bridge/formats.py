"""Writers for the core's wire formats.

The bridge owns its serialization so that conformance is an observable
property of the emitted files (checked against the core's validators in
tests), not an import-time assumption. Field order and float precision
follow the core's contracts: probe rows are
{"embedding_id", "hard_prompt_id", "option_probs"}, record rows are
{"instance_id", "option_loglikelihoods", "gold_index"}, floats carry full
round-trip precision.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

KEYS_FILE_VERSION = 1


def _fmt_float(x: float) -> str:
    return format(float(x), ".16e")


def _float_list(values: Iterable[float]) -> str:
    return "[" + ", ".join(_fmt_float(v) for v in values) + "]"


def write_keys_file(path, keyed_vectors: Mapping[str, np.ndarray], key_dim: int) -> None:
    instances = []
    for eid in sorted(keyed_vectors):
        for vec in np.asarray(keyed_vectors[eid], dtype=np.float64):
            instances.append({"embedding_id": eid, "key": [float(v) for v in vec]})
    payload = {"version": KEYS_FILE_VERSION, "key_dim": int(key_dim), "instances": instances}
    Path(path).write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")


def write_probe_rows(path, rows: Sequence[tuple[str, str, Sequence[float]]]) -> None:
    lines = [
        '{"embedding_id": %s, "hard_prompt_id": %s, "option_probs": %s}'
        % (json.dumps(eid), json.dumps(hp), _float_list(probs))
        for eid, hp, probs in rows
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_record_rows(path, rows: Sequence[tuple[str, Sequence[float], int]]) -> None:
    lines = [
        '{"instance_id": %s, "option_loglikelihoods": %s, "gold_index": %d}'
        % (json.dumps(iid), _float_list(lls), int(gold))
        for iid, lls, gold in rows
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
