"""Bridge between transformer checkpoints and the prompt-retrieval core:
instance-key files from a dense retriever, probe and record tables from a
frozen backbone LM. Emits only the core's documented wire formats.
"""

from .config import BridgeConfig, BridgeError
from .encode import InstanceEncoder, encode_instances, export_keys
from .scoring import OptionScorer, TaskInstance, probe_export, record_export
from .tinylm import save_tiny_lm, save_tiny_retriever

__version__ = "0.1.0"

__all__ = [
    "BridgeConfig",
    "BridgeError",
    "InstanceEncoder",
    "OptionScorer",
    "TaskInstance",
    "encode_instances",
    "export_keys",
    "probe_export",
    "record_export",
    "save_tiny_lm",
    "save_tiny_retriever",
]
