"""Benchmark harness: prompt suites, distractors, judge/embedder seams,
win-ratio aggregation, correlation, radar normalization, and clustering."""

from .aggregate import (
    BenchError,
    PairwiseComparison,
    WinRatioTable,
    correlate,
    make_pairings,
    radar_normalize,
    read_pairwise_csv,
    read_singles_csv,
    reconcile_single_scores,
    scores_to_comparisons,
    win_ratio,
)
from .clients import (
    ClientError,
    EmbeddingProvider,
    HashEmbedder,
    HttpEmbedder,
    HttpJudge,
    JudgeClient,
    JudgeResult,
    RecordingEmbedder,
    RecordingJudge,
    ReplayEmbedder,
    ReplayJudge,
)
from .cluster import ClusterResult, dedup_and_cluster, dedup_embeddings, kmeans
from .distractors import select_distractors
from .suite import (
    DIMENSIONS,
    ConsistencyResult,
    Prompt,
    PromptSuite,
    RenderEntry,
    load_prompt_suite,
    read_renders_manifest,
    run_consistency_eval,
)

__all__ = [
    "BenchError",
    "ClientError",
    "ClusterResult",
    "ConsistencyResult",
    "DIMENSIONS",
    "EmbeddingProvider",
    "HashEmbedder",
    "HttpEmbedder",
    "HttpJudge",
    "JudgeClient",
    "JudgeResult",
    "PairwiseComparison",
    "Prompt",
    "PromptSuite",
    "RecordingEmbedder",
    "RecordingJudge",
    "RenderEntry",
    "ReplayEmbedder",
    "ReplayJudge",
    "WinRatioTable",
    "correlate",
    "dedup_and_cluster",
    "dedup_embeddings",
    "kmeans",
    "load_prompt_suite",
    "make_pairings",
    "radar_normalize",
    "read_pairwise_csv",
    "read_renders_manifest",
    "read_singles_csv",
    "reconcile_single_scores",
    "run_consistency_eval",
    "scores_to_comparisons",
    "select_distractors",
    "win_ratio",
]
