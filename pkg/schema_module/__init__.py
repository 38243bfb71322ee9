from schema_module.models import AspectDef, AttributeSchema, Combination, CombinationSet, Protocol, Split
from schema_module.utils import (
    EligibilityReport,
    covered_attributes,
    full_product,
    is_eligible_split,
    original_split,
)

__all__ = [
    "AspectDef",
    "AttributeSchema",
    "Combination",
    "CombinationSet",
    "Protocol",
    "Split",
    "EligibilityReport",
    "covered_attributes",
    "full_product",
    "is_eligible_split",
    "original_split",
]
