"""Tiny local checkpoints for smoke tests and offline development.

Byte-level tokenization needs no vocabulary files, so these checkpoints are
fully self-contained directories. Weights are randomly initialized; callers
that need task behavior train on top (see the bridge test suite).
"""

from __future__ import annotations

from pathlib import Path

import torch


def _tiny_config(d_model: int, vocab_size: int = 384):
    from transformers import T5Config

    return T5Config(
        vocab_size=vocab_size,
        d_model=d_model,
        d_ff=2 * d_model,
        d_kv=max(4, d_model // 4),
        num_heads=4,
        num_layers=2,
        num_decoder_layers=2,
        decoder_start_token_id=0,
        pad_token_id=0,
        eos_token_id=1,
        dropout_rate=0.0,
        feed_forward_proj="relu",
    )


def save_tiny_retriever(path, hidden_size: int = 32, seed: int = 0) -> Path:
    """Randomly initialized byte-level encoder checkpoint."""
    from transformers import ByT5Tokenizer, T5EncoderModel

    torch.manual_seed(seed)
    path = Path(path)
    T5EncoderModel(_tiny_config(hidden_size)).save_pretrained(path)
    ByT5Tokenizer().save_pretrained(path)
    return path


def save_tiny_lm(path, d_model: int = 64, seed: int = 0) -> Path:
    """Randomly initialized byte-level seq2seq checkpoint."""
    from transformers import ByT5Tokenizer, T5ForConditionalGeneration

    torch.manual_seed(seed)
    path = Path(path)
    T5ForConditionalGeneration(_tiny_config(d_model)).save_pretrained(path)
    ByT5Tokenizer().save_pretrained(path)
    return path
