from .embedding import EmbeddingRelevance, embedding_relevance
from .synthetic import SynthConfig, generate_synthetic
from .temporal import (
    ContrastiveProfile,
    aggregate_categories,
    contrastive_profile,
    dtw_align,
    overlay_alignment,
)

__all__ = [
    "EmbeddingRelevance",
    "embedding_relevance",
    "SynthConfig",
    "generate_synthetic",
    "ContrastiveProfile",
    "aggregate_categories",
    "contrastive_profile",
    "dtw_align",
    "overlay_alignment",
]
