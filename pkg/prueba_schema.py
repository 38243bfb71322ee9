#!/usr/bin/env python3
"""
Pruebas del álgebra de atributos: esquemas, combinaciones, conjuntos y
la condición de elegibilidad de una división.
"""

import numpy as np
import pytest
from pydantic import ValidationError

from errors import SchemaError
from schema_module import (
    AspectDef,
    AttributeSchema,
    CombinationSet,
    Protocol,
    Split,
    covered_attributes,
    full_product,
    is_eligible_split,
    original_split,
)


def _gender_sentiment() -> AttributeSchema:
    return AttributeSchema(aspects=[
        AspectDef(name="sentiment", values=["pos", "neg"]),
        AspectDef(name="gender", values=["male", "female"]),
    ])


def test_full_product_sizes():
    """El producto cartesiano tiene ∏ a_i combinaciones en orden lexicográfico."""
    print("🧪 Probando full_product...")

    assert len(full_product(AttributeSchema.from_sizes([2, 2, 5, 2]))) == 40
    assert len(full_product(AttributeSchema.from_sizes([2, 6]))) == 12

    square = full_product(AttributeSchema.from_sizes([2, 2]))
    assert square.sorted() == ((0, 0), (0, 1), (1, 0), (1, 1))
    assert list(square) == [(0, 0), (0, 1), (1, 0), (1, 1)]

    rng = np.random.default_rng(7)
    for _ in range(50):
        sizes = rng.integers(2, 7, size=rng.integers(2, 5)).tolist()
        assert len(full_product(AttributeSchema.from_sizes(sizes))) == int(np.prod(sizes))

    print("✅ full_product funciona correctamente")


def test_schema_validation():
    """Esquemas con un solo aspecto, un solo valor o nombres repetidos se rechazan."""
    print("\n🧪 Probando validación del esquema...")

    with pytest.raises(ValidationError):
        AspectDef(name="sentiment", values=["pos"])
    with pytest.raises(ValidationError):
        AspectDef(name="sentiment", values=["pos", "pos"])
    with pytest.raises(ValidationError):
        AttributeSchema(aspects=[AspectDef(name="sentiment", values=["pos", "neg"])])
    with pytest.raises(ValidationError):
        AttributeSchema(aspects=[
            AspectDef(name="x", values=["a", "b"]),
            AspectDef(name="x", values=["c", "d"]),
        ])

    schema = _gender_sentiment()
    assert schema.m == 2
    assert schema.sizes == (2, 2)
    assert schema.encode(["neg", "male"]) == (1, 0)
    assert schema.decode((0, 1)) == ["pos", "female"]
    assert schema.label((1, 1)) == "neg-female"
    with pytest.raises(SchemaError):
        schema.validate_combination((2, 0))
    with pytest.raises(SchemaError):
        schema.validate_combination((0, 0, 0))

    print("✅ Validación del esquema funciona correctamente")


def test_combination_set_is_immutable():
    """Los conjuntos no admiten duplicados ni reasignación."""
    print("\n🧪 Probando CombinationSet...")

    schema = AttributeSchema.from_sizes([2, 3])
    combos = CombinationSet(schema, [(1, 2), (0, 0), (1, 2)])
    assert len(combos) == 2
    assert combos.sorted() == ((0, 0), (1, 2))
    assert (1, 2) in combos
    with pytest.raises(AttributeError):
        combos.schema = AttributeSchema.from_sizes([2, 2])
    with pytest.raises(SchemaError):
        CombinationSet(schema, [(0, 3)])
    assert CombinationSet(schema, [(0, 0), (1, 2)]) == CombinationSet(schema, [(1, 2), (0, 0)])

    print("✅ CombinationSet funciona correctamente")


def test_covered_attributes():
    print("\n🧪 Probando covered_attributes...")

    schema = _gender_sentiment()
    diagonal = CombinationSet(schema, [schema.encode(["pos", "male"]), schema.encode(["neg", "female"])])
    assert covered_attributes(diagonal) == ({0, 1}, {0, 1})
    assert covered_attributes(CombinationSet(schema)) == (set(), set())
    assert covered_attributes(full_product(schema)) == ({0, 1}, {0, 1})

    print("✅ covered_attributes funciona correctamente")


def test_eligibility_examples():
    """Las tres cláusulas se informan con sus elementos."""
    print("\n🧪 Probando is_eligible_split...")

    schema = _gender_sentiment()
    full = full_product(schema)
    pos_male, pos_female = schema.encode(["pos", "male"]), schema.encode(["pos", "female"])
    neg_male, neg_female = schema.encode(["neg", "male"]), schema.encode(["neg", "female"])

    report = is_eligible_split(full, CombinationSet(schema, [pos_male, neg_female]),
                               CombinationSet(schema, [neg_male, pos_female]))
    assert report.eligible
    assert report.violations == []

    assert is_eligible_split(full, full, CombinationSet(schema)).eligible

    report = is_eligible_split(full, CombinationSet(schema, [pos_male]), CombinationSet(schema, [neg_female]))
    assert not report.eligible
    assert report.clauses == ["a", "c"]
    assert ["sentiment", "neg"] in report.violations[1].elements
    assert ["gender", "female"] in report.violations[1].elements

    report = is_eligible_split(full, full, CombinationSet(schema, [pos_male]))
    assert report.clauses == ["b"]

    # Clausula (c) sola: misma fila de sentimiento en todo C_id
    report = is_eligible_split(full, CombinationSet(schema, [pos_male, pos_female]),
                               CombinationSet(schema, [neg_male, neg_female]))
    assert report.clauses == ["c"]
    assert report.violations[0].elements == [["sentiment", "neg"]]

    with pytest.raises(SchemaError):
        is_eligible_split(full, CombinationSet(AttributeSchema.from_sizes([2, 3])), CombinationSet(schema))

    print("✅ is_eligible_split funciona correctamente")


def test_eligibility_order_insensitive():
    """Reordenar los miembros no cambia el veredicto."""
    print("\n🧪 Probando invariancia al orden...")

    rng = np.random.default_rng(11)
    for _ in range(200):
        schema = AttributeSchema.from_sizes(rng.integers(2, 4, size=rng.integers(2, 4)).tolist())
        full = full_product(schema)
        members = list(full.sorted())
        picked = rng.random(len(members)) < 0.5
        id_members = [c for c, keep in zip(members, picked) if keep]
        comp_members = [c for c, keep in zip(members, picked) if not keep]
        expected = is_eligible_split(full, CombinationSet(schema, id_members), CombinationSet(schema, comp_members))

        shuffled_id = [id_members[i] for i in rng.permutation(len(id_members))]
        shuffled_comp = [comp_members[i] for i in rng.permutation(len(comp_members))]
        again = is_eligible_split(full, CombinationSet(schema, shuffled_id), CombinationSet(schema, shuffled_comp))
        assert again.eligible == expected.eligible
        assert again.clauses == expected.clauses

    print("✅ El veredicto no depende del orden")


def test_split_validates_on_construction():
    print("\n🧪 Probando Split...")

    schema = AttributeSchema.from_sizes([2, 2])
    full = full_product(schema)

    split = Split(
        protocol=Protocol.ACD,
        id_set=CombinationSet(schema, [(0, 0), (1, 1)]),
        comp_set=CombinationSet(schema, [(0, 1), (1, 0)]),
        divergence=1.0,
    )
    assert split.is_balanced
    assert split.attribute_schema == schema
    assert split.canonical_key() == ((0, 0), (1, 1))

    with pytest.raises(ValidationError):
        Split(
            protocol=Protocol.ACD,
            id_set=CombinationSet(schema, [(0, 0), (0, 1)]),
            comp_set=CombinationSet(schema, [(1, 0), (1, 1)]),
        )
    with pytest.raises(ValidationError):
        Split(protocol=Protocol.ORIGINAL, id_set=full, comp_set=CombinationSet(schema, [(0, 0)]))
    with pytest.raises(ValidationError):
        Split(protocol=Protocol.HOLDOUT, id_set=CombinationSet(schema, [(0, 0), (1, 1), (0, 1)]),
              comp_set=CombinationSet(schema, [(1, 0)]), divergence=1.5)

    original = original_split(full, seed=3)
    assert original.protocol == Protocol.ORIGINAL
    assert len(original.comp_set) == 0
    assert original.id_set == full
    assert original.divergence is None

    print("✅ Split funciona correctamente")


if __name__ == "__main__":
    print("🚀 Iniciando pruebas del esquema de atributos\n")
    test_full_product_sizes()
    test_schema_validation()
    test_combination_set_is_immutable()
    test_covered_attributes()
    test_eligibility_examples()
    test_eligibility_order_insensitive()
    test_split_validates_on_construction()
    print("\n🎉 Todas las pruebas pasaron")
