"""Tournament-style listwise reranking.

Thin wrapper over the C++ core: adaptive grouping, listwise prompt building,
ranking-output parsing, bracket elimination and nDCG evaluation.
"""

from bracketrank._core import (
    BracketRankError,
    Candidate,
    GroupPlan,
    ParsedRanking,
    RerankResult,
    UnparseableError,
    build_prompt,
    derive_g_max,
    estimate_cost,
    estimate_tokens,
    ndcg_at_k,
    parse_ranking,
    plan_groups,
    rerank,
    serialize_ranking,
)

__all__ = [
    "BracketRankError",
    "Candidate",
    "GroupPlan",
    "ParsedRanking",
    "RerankResult",
    "UnparseableError",
    "build_prompt",
    "derive_g_max",
    "estimate_cost",
    "estimate_tokens",
    "ndcg_at_k",
    "parse_ranking",
    "plan_groups",
    "rerank",
    "serialize_ranking",
]

__version__ = "0.1.0"
