from divergence_module.models import CompoundDistribution, CompoundKey
from divergence_module.utils import CompoundIndex, chernoff_similarity, compound_divergence, compound_frequency

__all__ = [
    "CompoundDistribution",
    "CompoundKey",
    "CompoundIndex",
    "chernoff_similarity",
    "compound_divergence",
    "compound_frequency",
]
