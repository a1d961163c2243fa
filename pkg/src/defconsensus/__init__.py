"""Corpus-consensus analysis of definition texts via sentence embeddings
and cosine similarity."""

from .corpus import Corpus, Definition, load_corpus, load_fixture, parse_corpus
from .embedding import (
    EmbeddingSet,
    EmbeddingVector,
    ProviderConfig,
    embed_corpus,
    load_embeddings,
    local_deterministic_embed,
    save_embeddings,
)
from .similarity import SimilarityMatrix, cosine, matrix
from .consensus import (
    ConsensusReport,
    EvaluationResult,
    average_similarity,
    evaluate_new,
    pairwise_table,
    rank,
)
from .generation import GenerationConfig, PromptBundle, generate_composites, mock_generate

__all__ = [
    "Corpus",
    "Definition",
    "parse_corpus",
    "load_corpus",
    "load_fixture",
    "EmbeddingVector",
    "EmbeddingSet",
    "ProviderConfig",
    "embed_corpus",
    "local_deterministic_embed",
    "load_embeddings",
    "save_embeddings",
    "cosine",
    "matrix",
    "SimilarityMatrix",
    "ConsensusReport",
    "EvaluationResult",
    "average_similarity",
    "rank",
    "pairwise_table",
    "evaluate_new",
    "GenerationConfig",
    "PromptBundle",
    "generate_composites",
    "mock_generate",
]
