"""Instance-keyed soft-prompt library with exact MIPS retrieval,
frequency/interpolation/variance selection strategies, and an evaluation
harness with synthetic planted-optimum worlds and replay fixtures.
"""

from .ablation import AblationBase, AblationCell, run_ablation, run_cell, write_ablation_csv
from .errors import FormatError, PromptRetrievalError, ValidationError
from .evaluation import (
    EvalReport,
    EvalTask,
    PipelineConfig,
    PromptOutcome,
    aggregate_report,
    combine_reports,
    load_fixture,
    oracle_report,
    oracle_selection,
    prompt_query_seed,
    replay_fixture,
    run_pipeline,
    run_prompt,
    sample_queries,
    select_with_strategy,
)
from .formats import (
    load_embeddings_file,
    load_keys_file,
    load_probe_table,
    load_record_table,
    validate_keys_file,
    validate_probe_table,
    validate_record_table,
    write_embeddings_file,
    write_keys_file,
    write_probe_table,
    write_record_table,
)
from .library import (
    LibraryConfig,
    LibraryEntry,
    PromptEmbedding,
    SourcePromptLibrary,
    build_library,
    sample_clustering,
    sample_distributed,
    sample_random,
)
from .mips import MipsIndex, SearchHit, build_index
from .oracle import (
    FileProvider,
    OptionProbeResult,
    RankClassificationRecord,
    SyntheticProvider,
    UniformProvider,
    accuracy,
    loglikelihoods_to_probs,
    probe_options,
    rank_classify,
)
from .selection import (
    CandidateTally,
    SelectionResult,
    Strategy,
    aggregate_frequency,
    interpolate,
    interpolate_by_score,
    select_top_frequency,
    select_variance,
    variance_score,
)
from .storage import load_library, save_library
from .synthetic import SyntheticWorld, WorldConfig, make_world, reseed

__version__ = "0.1.0"

__all__ = [
    "AblationBase",
    "AblationCell",
    "CandidateTally",
    "EvalReport",
    "EvalTask",
    "FileProvider",
    "FormatError",
    "LibraryConfig",
    "LibraryEntry",
    "MipsIndex",
    "OptionProbeResult",
    "PipelineConfig",
    "PromptEmbedding",
    "PromptOutcome",
    "PromptRetrievalError",
    "RankClassificationRecord",
    "SearchHit",
    "SelectionResult",
    "SourcePromptLibrary",
    "Strategy",
    "SyntheticProvider",
    "SyntheticWorld",
    "UniformProvider",
    "ValidationError",
    "WorldConfig",
    "accuracy",
    "aggregate_frequency",
    "aggregate_report",
    "build_index",
    "build_library",
    "combine_reports",
    "interpolate",
    "interpolate_by_score",
    "load_embeddings_file",
    "load_fixture",
    "load_keys_file",
    "load_library",
    "load_probe_table",
    "load_record_table",
    "loglikelihoods_to_probs",
    "make_world",
    "oracle_report",
    "oracle_selection",
    "probe_options",
    "prompt_query_seed",
    "rank_classify",
    "replay_fixture",
    "reseed",
    "run_ablation",
    "run_cell",
    "run_pipeline",
    "run_prompt",
    "sample_clustering",
    "sample_distributed",
    "sample_queries",
    "sample_random",
    "save_library",
    "select_top_frequency",
    "select_variance",
    "select_with_strategy",
    "validate_keys_file",
    "validate_probe_table",
    "validate_record_table",
    "variance_score",
    "write_ablation_csv",
    "write_embeddings_file",
    "write_keys_file",
    "write_probe_table",
    "write_record_table",
]
