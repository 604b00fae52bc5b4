"""Instance encoding: mean last-layer hidden states of a dense retriever.

One key vector per text, mean-pooled over non-padding positions only, so a
short input is not dragged toward the padding embedding. Batched inference
in eval mode keeps the output deterministic for a fixed checkpoint.
"""

from __future__ import annotations

import warnings
from typing import Mapping, Sequence

import numpy as np
import torch

from .config import BridgeConfig, BridgeError
from .formats import write_keys_file


class InstanceEncoder:
    """Wraps an encoder checkpoint for sentence-level key extraction."""

    def __init__(self, config: BridgeConfig):
        if config.retriever_checkpoint is None:
            raise BridgeError("config.retriever_checkpoint is required for encoding")
        from transformers import AutoTokenizer, T5EncoderModel

        try:
            self.tokenizer = AutoTokenizer.from_pretrained(str(config.retriever_checkpoint))
            self.model = T5EncoderModel.from_pretrained(str(config.retriever_checkpoint))
        except (OSError, ValueError) as exc:
            raise BridgeError(f"cannot load retriever checkpoint {config.retriever_checkpoint}: {exc}") from exc
        self.model.eval()
        self.config = config

    @property
    def hidden_size(self) -> int:
        return int(self.model.config.d_model)

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        """(len(texts), hidden_size) float32 array of mean-pooled states."""
        if not texts:
            raise BridgeError("texts must be non-empty")
        out = np.empty((len(texts), self.hidden_size), dtype=np.float32)
        for start in range(0, len(texts), self.config.batch_size):
            chunk = list(texts[start : start + self.config.batch_size])
            enc = self.tokenizer(
                chunk,
                padding=True,
                truncation=True,
                max_length=self.config.max_input_length,
                return_tensors="pt",
            )
            if any(len(self.tokenizer(t).input_ids) > self.config.max_input_length for t in chunk):
                warnings.warn(
                    f"inputs longer than {self.config.max_input_length} tokens were truncated",
                    stacklevel=2,
                )
            with torch.no_grad():
                hidden = self.model(
                    input_ids=enc.input_ids, attention_mask=enc.attention_mask
                ).last_hidden_state
            mask = enc.attention_mask.unsqueeze(-1).to(hidden.dtype)
            pooled = (hidden * mask).sum(dim=1) / mask.sum(dim=1)
            out[start : start + len(chunk)] = pooled.numpy().astype(np.float32)
        return out


def encode_instances(texts: Sequence[str], config: BridgeConfig) -> np.ndarray:
    """One mean-pooled key vector per text."""
    return InstanceEncoder(config).encode(texts)


def export_keys(grouped_texts: Mapping[str, Sequence[str]], config: BridgeConfig, out_path) -> None:
    """Encode per-embedding instance texts and write the core's keys file."""
    if not grouped_texts:
        raise BridgeError("grouped_texts must be non-empty")
    encoder = InstanceEncoder(config)
    keyed = {eid: encoder.encode(list(texts)) for eid, texts in grouped_texts.items()}
    write_keys_file(out_path, keyed, key_dim=encoder.hidden_size)
