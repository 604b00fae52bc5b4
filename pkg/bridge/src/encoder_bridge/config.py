"""Bridge configuration: checkpoint references and batching knobs."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path


class BridgeError(Exception):
    """Invalid configuration or inputs for an export job."""


@dataclass(frozen=True)
class BridgeConfig:
    """Checkpoints and limits shared by all export jobs.

    ``retriever_checkpoint`` feeds instance encoding; ``lm_checkpoint`` is
    only needed for probe/record export. Inputs longer than
    ``max_input_length`` tokens are truncated with a warning.
    """

    retriever_checkpoint: str | Path | None = None
    lm_checkpoint: str | Path | None = None
    batch_size: int = 16
    max_input_length: int = 512
    length_normalize: bool = False

    def __post_init__(self):
        if self.batch_size < 1:
            raise BridgeError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_input_length < 1:
            raise BridgeError(f"max_input_length must be >= 1, got {self.max_input_length}")
