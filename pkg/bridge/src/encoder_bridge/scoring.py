"""Option scoring under a frozen seq2seq LM, with optional soft-prompt prefix.

A soft prompt is a (prefix_len x d_model) matrix prepended to the encoder's
input embeddings; the backbone stays frozen, so the prefix acts as a
task-conditioning adapter. Per-option log-likelihoods are exact sums of
target-token log-softmax scores in float64.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
import torch
import torch.nn.functional as F

from .config import BridgeConfig, BridgeError
from .formats import write_probe_rows, write_record_rows


@dataclass(frozen=True)
class TaskInstance:
    instance_id: str
    text: str
    options: tuple[str, ...]
    gold_index: int

    def __post_init__(self):
        if len(self.options) < 2:
            raise BridgeError(f"instance {self.instance_id!r} needs >= 2 options")
        if not 0 <= self.gold_index < len(self.options):
            raise BridgeError(f"instance {self.instance_id!r} gold_index {self.gold_index} out of range")


class OptionScorer:
    """Scores answer options with a frozen LM checkpoint."""

    def __init__(self, config: BridgeConfig):
        if config.lm_checkpoint is None:
            raise BridgeError("config.lm_checkpoint is required for option scoring")
        from transformers import AutoTokenizer, T5ForConditionalGeneration

        try:
            self.tokenizer = AutoTokenizer.from_pretrained(str(config.lm_checkpoint))
            self.model = T5ForConditionalGeneration.from_pretrained(str(config.lm_checkpoint))
        except (OSError, ValueError) as exc:
            raise BridgeError(f"cannot load LM checkpoint {config.lm_checkpoint}: {exc}") from exc
        self.model.eval()
        self.config = config

    @property
    def model_dim(self) -> int:
        return int(self.model.config.d_model)

    def _encoder_inputs(self, text: str, prompt_matrix: np.ndarray | None):
        enc = self.tokenizer(
            [text], truncation=True, max_length=self.config.max_input_length, return_tensors="pt"
        )
        embeds = self.model.get_input_embeddings()(enc.input_ids)
        mask = enc.attention_mask
        if prompt_matrix is not None:
            matrix = np.asarray(prompt_matrix, dtype=np.float32)
            if matrix.ndim != 2 or matrix.shape[1] != self.model_dim:
                raise BridgeError(
                    f"prompt matrix has width {matrix.shape[-1] if matrix.ndim == 2 else '?'}, "
                    f"LM embedding width is {self.model_dim}"
                )
            prefix = torch.from_numpy(matrix.copy()).to(embeds.dtype).unsqueeze(0)
            embeds = torch.cat([prefix, embeds], dim=1)
            mask = torch.cat([torch.ones(1, matrix.shape[0], dtype=mask.dtype), mask], dim=1)
        return embeds, mask

    def option_loglikelihoods(
        self, text: str, options: Sequence[str], prompt_matrix: np.ndarray | None = None
    ) -> np.ndarray:
        """float64 total log-likelihood per option (length-normalized if configured)."""
        if len(options) < 2:
            raise BridgeError("need at least 2 options to score")
        embeds, mask = self._encoder_inputs(text, prompt_matrix)
        out = np.empty(len(options), dtype=np.float64)
        for i, option in enumerate(options):
            labels = self.tokenizer([option], return_tensors="pt").input_ids
            with torch.no_grad():
                logits = self.model(inputs_embeds=embeds, attention_mask=mask, labels=labels).logits
            logprobs = F.log_softmax(logits.double(), dim=-1)
            total = float(logprobs[0].gather(1, labels[0].unsqueeze(1)).sum())
            out[i] = total / labels.shape[1] if self.config.length_normalize else total
        return out


def _normalize(loglikelihoods: np.ndarray) -> np.ndarray:
    shifted = np.exp(loglikelihoods - loglikelihoods.max())
    return shifted / shifted.sum()


def probe_export(
    embedding_matrices: Mapping[str, np.ndarray],
    hard_prompts: Mapping[str, str],
    options: Sequence[str],
    config: BridgeConfig,
    out_path,
) -> None:
    """Per-(embedding, hard prompt) option distributions, without instances.

    The hard prompt text alone is the model input; the candidate soft prompt
    is prepended. Likelihoods are normalized to a distribution per row.
    """
    if not embedding_matrices or not hard_prompts:
        raise BridgeError("need at least one embedding matrix and one hard prompt")
    scorer = OptionScorer(config)
    rows = []
    for eid in sorted(embedding_matrices):
        for hp_id in sorted(hard_prompts):
            lls = scorer.option_loglikelihoods(hard_prompts[hp_id], options, embedding_matrices[eid])
            rows.append((eid, hp_id, _normalize(lls)))
    write_probe_rows(out_path, rows)


def record_export(
    instances: Sequence[TaskInstance],
    prompt_matrix: np.ndarray | None,
    config: BridgeConfig,
    out_path,
) -> None:
    """Per-instance option log-likelihoods + gold index, under one prompt."""
    if not instances:
        raise BridgeError("instances must be non-empty")
    scorer = OptionScorer(config)
    rows = []
    for inst in instances:
        lls = scorer.option_loglikelihoods(inst.text, inst.options, prompt_matrix)
        rows.append((inst.instance_id, lls, inst.gold_index))
    write_record_rows(out_path, rows)
