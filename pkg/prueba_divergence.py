#!/usr/bin/env python3
"""
Pruebas de las frecuencias de compuestos, el coeficiente de Chernoff y
la divergencia de compuestos de atributos.
"""

import itertools
import math

import numpy as np
import pytest

from divergence_module import (
    CompoundDistribution,
    CompoundIndex,
    CompoundKey,
    chernoff_similarity,
    compound_divergence,
    compound_frequency,
)
from errors import CompSplitError, SchemaError, UndefinedDistributionError
from schema_module import AttributeSchema, CombinationSet, full_product


def _random_set(rng: np.random.Generator, schema: AttributeSchema) -> CombinationSet:
    members = list(full_product(schema).sorted())
    count = int(rng.integers(1, len(members) + 1))
    picked = rng.choice(len(members), size=count, replace=False)
    return CombinationSet(schema, [members[i] for i in picked])


def _random_schema(rng: np.random.Generator) -> AttributeSchema:
    m = int(rng.integers(2, 5))
    return AttributeSchema.from_sizes(rng.integers(2, 5, size=m).tolist())


def _dense_divergence(id_set: CombinationSet, comp_set: CombinationSet, alpha: float) -> float:
    """Oráculo ingenuo: vector denso sobre todo el espacio de compuestos"""
    schema = id_set.schema
    space = [
        (i, ti, j, tj)
        for i, j in itertools.combinations(range(schema.m), 2)
        for ti in range(schema.sizes[i])
        for tj in range(schema.sizes[j])
    ]
    pairs = schema.m * (schema.m - 1) / 2

    def vector(combos):
        return np.array([
            sum(1 for c in combos if c[i] == ti and c[j] == tj) / (pairs * len(combos))
            for i, ti, j, tj in space
        ])

    p, q = vector(id_set.sorted()), vector(comp_set.sorted())
    shared = (p > 0) & (q > 0)
    return 1.0 - float(np.sum(p[shared] ** alpha * q[shared] ** (1 - alpha)))


def test_compound_key_is_canonical():
    print("🧪 Probando CompoundKey...")

    assert CompoundKey(2, 1, 0, 3) == CompoundKey(0, 3, 2, 1)
    assert CompoundKey(2, 1, 0, 3).aspect_i == 0
    with pytest.raises(SchemaError):
        CompoundKey(1, 0, 1, 1)

    print("✅ CompoundKey funciona correctamente")


def test_compound_frequency_examples():
    """Casos de la definición con uno y dos miembros."""
    print("\n🧪 Probando compound_frequency...")

    two = AttributeSchema.from_sizes([2, 2])
    single = compound_frequency(CombinationSet(two, [(0, 0)]))
    assert single.weights == {CompoundKey(0, 0, 1, 0): pytest.approx(1.0)}

    three = AttributeSchema.from_sizes([2, 2, 2])
    triple = compound_frequency(CombinationSet(three, [(0, 0, 0)]))
    assert len(triple) == 3
    for _, weight in triple.items():
        assert weight == pytest.approx(1 / 3)

    shared_sentiment = compound_frequency(CombinationSet(two, [(0, 0), (0, 1)]))
    assert shared_sentiment.get(CompoundKey(0, 0, 1, 0)) == pytest.approx(0.5)
    assert shared_sentiment.get(CompoundKey(0, 0, 1, 1)) == pytest.approx(0.5)
    assert shared_sentiment.get(CompoundKey(0, 1, 1, 1)) == 0.0

    with pytest.raises(UndefinedDistributionError):
        compound_frequency(CombinationSet(two))

    print("✅ compound_frequency funciona correctamente")


def test_chernoff_examples():
    print("\n🧪 Probando chernoff_similarity...")

    schema = AttributeSchema.from_sizes([2, 2])
    first, second = CompoundKey(0, 0, 1, 0), CompoundKey(0, 0, 1, 1)
    p = CompoundDistribution(schema, {first: 1.0})
    q = CompoundDistribution(schema, {first: 0.5, second: 0.5})
    assert chernoff_similarity(p, q, 0.5) == pytest.approx(math.sqrt(0.5), abs=1e-10)
    assert chernoff_similarity(q, q, 0.5) == pytest.approx(1.0, abs=1e-12)

    disjoint = CompoundDistribution(schema, {CompoundKey(0, 1, 1, 1): 1.0})
    assert chernoff_similarity(p, disjoint) == 0.0

    # Extremos: masa de un lado sobre el soporte del otro
    assert chernoff_similarity(p, q, 0.0) == pytest.approx(0.5)
    assert chernoff_similarity(p, q, 1.0) == pytest.approx(1.0)

    with pytest.raises(CompSplitError):
        chernoff_similarity(p, q, 1.5)
    with pytest.raises(SchemaError):
        chernoff_similarity(p, CompoundDistribution(AttributeSchema.from_sizes([2, 3]), {first: 1.0}))

    print("✅ chernoff_similarity funciona correctamente")


def test_compound_divergence_examples():
    print("\n🧪 Probando compound_divergence...")

    schema = AttributeSchema.from_sizes([2, 2])
    diagonal = CombinationSet(schema, [(0, 0), (1, 1)])
    anti = CombinationSet(schema, [(0, 1), (1, 0)])
    assert compound_divergence(diagonal, anti) == pytest.approx(1.0)
    assert compound_divergence(diagonal, diagonal) == pytest.approx(0.0, abs=1e-12)

    top = CombinationSet(schema, [(0, 0), (0, 1)])
    bottom = CombinationSet(schema, [(1, 0), (1, 1)])
    assert compound_divergence(top, bottom, 0.5) == pytest.approx(1.0)

    with pytest.raises(UndefinedDistributionError):
        compound_divergence(diagonal, CombinationSet(schema))

    print("✅ compound_divergence funciona correctamente")


def test_randomized_invariants():
    """Normalización, cotas, simetría en α=0.5 y acuerdo con el oráculo denso."""
    print("\n🧪 Probando invariantes sobre 1000 conjuntos aleatorios...")

    rng = np.random.default_rng(2024)
    for _ in range(1000):
        schema = _random_schema(rng)
        first, second = _random_set(rng, schema), _random_set(rng, schema)

        p, q = compound_frequency(first), compound_frequency(second)
        assert abs(p.total_mass() - 1.0) <= 1e-12
        assert all(weight > 0 for _, weight in p.items())

        alpha = float(rng.choice([0.0, 0.25, 0.5, 0.75, 1.0]))
        similarity = chernoff_similarity(p, q, alpha)
        assert 0.0 <= similarity <= 1.0
        divergence = compound_divergence(first, second, alpha)
        assert 0.0 <= divergence <= 1.0
        assert abs(chernoff_similarity(p, q, 0.5) - chernoff_similarity(q, p, 0.5)) <= 1e-12
        assert abs(chernoff_similarity(p, p, 0.5) - 1.0) <= 1e-12

        assert divergence == pytest.approx(_dense_divergence(first, second, alpha), abs=1e-10)

    print("✅ Invariantes verificados")


def test_relabeling_invariance():
    """Permutar los valores de un aspecto en ambos conjuntos no cambia D."""
    print("\n🧪 Probando invariancia al reetiquetado...")

    rng = np.random.default_rng(5)
    for _ in range(200):
        schema = _random_schema(rng)
        first, second = _random_set(rng, schema), _random_set(rng, schema)
        permutations = [rng.permutation(size) for size in schema.sizes]

        def relabel(combos):
            return CombinationSet(schema, [tuple(int(permutations[i][t]) for i, t in enumerate(c)) for c in combos])

        assert compound_divergence(relabel(first), relabel(second)) == pytest.approx(
            compound_divergence(first, second), abs=1e-12)

    print("✅ D es invariante al reetiquetado")


def test_compound_index_matches_sparse_path():
    """Los conteos densos por lotes reproducen la divergencia dispersa."""
    print("\n🧪 Probando CompoundIndex...")

    rng = np.random.default_rng(9)
    for _ in range(100):
        schema = _random_schema(rng)
        index = CompoundIndex(schema)
        members = np.array(full_product(schema).sorted())
        order = rng.permutation(len(members))
        half = len(members) // 2
        id_rows, comp_rows = members[order[:half]], members[order[half:]]
        if half == 0:
            continue

        id_counts = index.batch_counts(id_rows[None])[0]
        comp_counts = index.batch_counts(comp_rows[None])[0]
        assert np.array_equal(id_counts, index.counts(tuple(int(t) for t in row) for row in id_rows))

        expected = compound_divergence(
            CombinationSet(schema, [tuple(row) for row in id_rows.tolist()]),
            CombinationSet(schema, [tuple(row) for row in comp_rows.tolist()]),
        )
        assert index.divergence_from_counts(id_counts, len(id_rows), comp_counts, len(comp_rows)) == pytest.approx(
            expected, abs=1e-12)

    print("✅ CompoundIndex coincide con el cálculo disperso")


if __name__ == "__main__":
    print("🚀 Iniciando pruebas de divergencia\n")
    test_compound_key_is_canonical()
    test_compound_frequency_examples()
    test_chernoff_examples()
    test_compound_divergence_examples()
    test_randomized_invariants()
    test_relabeling_invariance()
    test_compound_index_matches_sparse_path()
    print("\n🎉 Todas las pruebas pasaron")
