import itertools
from typing import List, Set, Tuple

from pydantic import BaseModel

from errors import SchemaError
from schema_module.models import AttributeSchema, CombinationSet, Protocol, Split


class Violation(BaseModel):
    """Cláusula incumplida de la condición de elegibilidad y sus elementos"""
    clause: str
    message: str
    elements: List[list]


class EligibilityReport(BaseModel):
    """Resultado de is_eligible_split"""
    eligible: bool
    violations: List[Violation] = []

    def __bool__(self) -> bool:
        return self.eligible

    @property
    def clauses(self) -> List[str]:
        return [violation.clause for violation in self.violations]

    def summary(self) -> str:
        if self.eligible:
            return "elegible"
        return "; ".join(f"({v.clause}) {v.message}: {v.elements}" for v in self.violations)


def full_product(schema: AttributeSchema) -> CombinationSet:
    """
    Producto cartesiano completo C de los valores de todos los aspectos.

    Args:
        schema: Esquema de atributos

    Returns:
        CombinationSet con ∏ a_i combinaciones (orden lexicográfico)
    """
    members = itertools.product(*(range(size) for size in schema.sizes))
    return CombinationSet(schema, members, validate=False)


def covered_attributes(combinations: CombinationSet) -> Tuple[Set[int], ...]:
    """
    Valores presentes por aspecto en al menos un miembro del conjunto.

    Args:
        combinations: Conjunto de combinaciones

    Returns:
        Tupla con un set de índices por aspecto
    """
    covered = tuple(set() for _ in range(combinations.schema.m))
    for combination in combinations.members:
        for i, t in enumerate(combination):
            covered[i].add(t)
    return covered


def is_eligible_split(full: CombinationSet, id_set: CombinationSet, comp_set: CombinationSet) -> EligibilityReport:
    """
    Condición de elegibilidad de una división (C_id, C_comp) de C:
    (a) C_id ∪ C_comp = C, (b) C_id ∩ C_comp = ∅ y
    (c) todo atributo presente en C_comp aparece en C_id.

    Args:
        full: Conjunto C
        id_set: Conjunto en distribución
        comp_set: Conjunto composicional

    Returns:
        EligibilityReport con las cláusulas incumplidas

    Raises:
        SchemaError: Si los conjuntos no comparten esquema
    """
    if not (full.schema == id_set.schema == comp_set.schema):
        raise SchemaError("los tres conjuntos deben compartir el mismo esquema")

    schema = full.schema
    violations = []

    union = id_set.members | comp_set.members
    if union != full.members:
        missing = sorted(full.members - union)
        extra = sorted(union - full.members)
        violations.append(Violation(
            clause="a",
            message="C_id ∪ C_comp ≠ C",
            elements=[schema.decode(c) for c in missing + extra],
        ))

    overlap = sorted(id_set.members & comp_set.members)
    if overlap:
        violations.append(Violation(
            clause="b",
            message="C_id ∩ C_comp ≠ ∅",
            elements=[schema.decode(c) for c in overlap],
        ))

    id_covered = covered_attributes(id_set)
    comp_covered = covered_attributes(comp_set)
    uncovered = []
    for i, aspect in enumerate(schema.aspects):
        for t in sorted(comp_covered[i] - id_covered[i]):
            uncovered.append([aspect.name, aspect.values[t]])
    if uncovered:
        violations.append(Violation(
            clause="c",
            message="atributos de C_comp ausentes en C_id",
            elements=uncovered,
        ))

    return EligibilityReport(eligible=not violations, violations=violations)


def original_split(full: CombinationSet, seed: int = 0) -> Split:
    """División del protocolo Original: todo en distribución, sin conjunto composicional"""
    return Split(
        protocol=Protocol.ORIGINAL,
        id_set=full,
        comp_set=full.with_members(()),
        divergence=None,
        seed=seed,
    )


def combination_sets(full: CombinationSet, id_members) -> Tuple[CombinationSet, CombinationSet]:
    """Parte C en (C_id, C \\ C_id) a partir de los miembros de C_id"""
    id_members = frozenset(id_members)
    return full.with_members(id_members), full.with_members(full.members - id_members)
