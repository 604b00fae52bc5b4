"""Bridge CLI: emit core-format files from transformer checkpoints.

    encode         texts.jsonl -> keys file (one {"embedding_id","text"} per line)
    probe-export   embeddings file + hard prompts + options -> probe table
    record-export  instances.jsonl (+ optional selection.json) -> record table

Flag names mirror the core CLI. Exit codes: 0 success, 2 validation error,
3 I/O or format error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import BridgeConfig, BridgeError
from .encode import InstanceEncoder
from .formats import write_keys_file
from .scoring import TaskInstance, probe_export, record_export


def _read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise SystemExit(f"error: cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SystemExit(f"error: {path} is not valid JSON: {exc}") from exc


def _read_jsonl(path):
    rows = []
    for i, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines()):
        if line.strip():
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise BridgeError(f"{path} line {i + 1}: invalid JSON ({exc})") from exc
    if not rows:
        raise BridgeError(f"{path} holds no rows")
    return rows


def _cmd_encode(args):
    grouped: dict[str, list[str]] = {}
    for row in _read_jsonl(args.texts):
        grouped.setdefault(str(row["embedding_id"]), []).append(str(row["text"]))
    config = BridgeConfig(
        retriever_checkpoint=args.checkpoint,
        batch_size=args.batch_size,
        max_input_length=args.max_length,
    )
    encoder = InstanceEncoder(config)
    keyed = {eid: encoder.encode(texts) for eid, texts in grouped.items()}
    write_keys_file(args.out, keyed, key_dim=encoder.hidden_size)
    total = sum(len(v) for v in keyed.values())
    print(f"wrote {args.out}: {total} keys of dimension {encoder.hidden_size}")


def _load_embedding_matrices(path):
    payload = _read_json(path)
    if payload.get("version") != 1:
        raise BridgeError(f"embeddings file version is {payload.get('version')!r}, expected 1")
    return {row["id"]: np.asarray(row["matrix"], dtype=np.float32) for row in payload["embeddings"]}


def _cmd_probe_export(args):
    matrices = _load_embedding_matrices(args.embeddings)
    hard_prompts = _read_json(args.hard_prompts)
    options = _read_json(args.options)
    if not isinstance(options, list) or len(options) < 2:
        raise BridgeError("options file must hold a JSON list of >= 2 option strings")
    config = BridgeConfig(
        lm_checkpoint=args.lm, max_input_length=args.max_length, length_normalize=args.length_normalize
    )
    probe_export(matrices, hard_prompts, options, config, args.out)
    print(f"wrote {args.out}: {len(matrices) * len(hard_prompts)} probe rows")


def _cmd_record_export(args):
    instances = [
        TaskInstance(
            instance_id=str(row["instance_id"]),
            text=str(row["text"]),
            options=tuple(row["options"]),
            gold_index=int(row["gold_index"]),
        )
        for row in _read_jsonl(args.instances)
    ]
    prompt_matrix = None
    if args.selection:
        selection = _read_json(args.selection)
        if "prompt_matrix" not in selection:
            raise BridgeError(f"{args.selection} carries no prompt_matrix (re-run select with --library)")
        prompt_matrix = np.asarray(selection["prompt_matrix"], dtype=np.float32)
    config = BridgeConfig(
        lm_checkpoint=args.lm, max_input_length=args.max_length, length_normalize=args.length_normalize
    )
    record_export(instances, prompt_matrix, config, args.out)
    print(f"wrote {args.out}: {len(instances)} records")


def build_parser():
    parser = argparse.ArgumentParser(prog="encoder-bridge", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="encode instance texts into a core keys file")
    p.add_argument("--texts", required=True, help="JSON lines: {embedding_id, text}")
    p.add_argument("--checkpoint", required=True, help="retriever checkpoint directory")
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--max-length", type=int, default=512)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_encode)

    p = sub.add_parser("probe-export", help="option distributions per (embedding, hard prompt)")
    p.add_argument("--embeddings", required=True, help="core embeddings file (JSON)")
    p.add_argument("--hard-prompts", required=True, help='JSON: {"prompt_id": "prompt text"}')
    p.add_argument("--options", required=True, help="JSON list of option strings")
    p.add_argument("--lm", required=True, help="LM checkpoint directory")
    p.add_argument("--max-length", type=int, default=512)
    p.add_argument("--length-normalize", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_probe_export)

    p = sub.add_parser("record-export", help="rank-classification records for task instances")
    p.add_argument("--instances", required=True, help="JSON lines: {instance_id, text, options, gold_index}")
    p.add_argument("--lm", required=True, help="LM checkpoint directory")
    p.add_argument("--selection", help="core select output carrying prompt_matrix")
    p.add_argument("--max-length", type=int, default=512)
    p.add_argument("--length-normalize", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_record_export)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.fn(args)
    except BridgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
