#!/usr/bin/env python3
"""
Pruebas del muestreo pseudo-composicional y del reparto de registros.
"""

import itertools
from collections import Counter

import numpy as np
import pytest

from errors import NoPseudoCompCandidates, PoolExhausted, SchemaError
from protocols.models import AcdSearchConfig
from protocols.utils import acd_splits, fewshot_splits, holdout_splits
from sampler.models import Batch, LabeledRecord
from sampler.utils import allocate_records, pseudo_comp_candidates, recombination_closure, sample_pcomp_batch
from schema_module import AttributeSchema, full_product

# sentiment x topic x tense
POS_SPORT_PAST = (0, 0, 0)
NEG_MOVIE_PRESENT = (1, 1, 1)
POS_MOVIE_PAST = (0, 1, 0)
NEG_SPORT_PRESENT = (1, 0, 1)


def _records(combination, count, prefix="texto"):
    return [LabeledRecord(combination=combination, text=f"{prefix} {i}") for i in range(count)]


def test_recombination_closure():
    print("🧪 Probando recombination_closure...")

    closure = recombination_closure([POS_SPORT_PAST, NEG_MOVIE_PRESENT])
    assert len(closure) == 8
    assert POS_MOVIE_PAST in closure
    assert NEG_SPORT_PRESENT in closure

    assert recombination_closure([POS_SPORT_PAST]) == frozenset({POS_SPORT_PAST})

    full = full_product(AttributeSchema.from_sizes([2, 3, 2])).members
    assert recombination_closure(full) == full

    with pytest.raises(SchemaError):
        recombination_closure([])

    print("✅ recombination_closure funciona correctamente")


def test_sample_pcomp_batch_example():
    """El lote pseudo-composicional sólo trae recombinaciones nuevas."""
    print("\n🧪 Probando sample_pcomp_batch...")

    train = Batch(records=_records(POS_SPORT_PAST, 2) + _records(NEG_MOVIE_PRESENT, 2))
    pool = train.records + _records(POS_MOVIE_PAST, 3, "pm") + _records(NEG_SPORT_PRESENT, 3, "ns")

    pcomp = sample_pcomp_batch(train, pool, size=4, seed=1)
    assert pcomp.size == 4
    assert pcomp.combinations() <= {POS_MOVIE_PAST, NEG_SPORT_PRESENT}
    assert len({record.text for record in pcomp.records}) == 4

    again = sample_pcomp_batch(train, pool, size=4, seed=1)
    assert again.records == pcomp.records

    # Menos registros admisibles que los pedidos: se devuelven todos
    short = sample_pcomp_batch(train, pool, size=10, seed=0)
    assert short.size == 6

    print("✅ sample_pcomp_batch funciona correctamente")


def test_sample_pcomp_batch_errors():
    print("\n🧪 Probando errores de sample_pcomp_batch...")

    single = Batch(records=_records(POS_SPORT_PAST, 3))
    with pytest.raises(NoPseudoCompCandidates):
        sample_pcomp_batch(single, single.records, size=2, seed=0)

    train = Batch(records=_records(POS_SPORT_PAST, 1) + _records(NEG_MOVIE_PRESENT, 1))
    with pytest.raises(PoolExhausted):
        sample_pcomp_batch(train, train.records, size=2, seed=0)

    print("✅ Errores señalados correctamente")


def test_pcomp_soundness_over_many_seeds():
    """10.000 lotes: nunca intersectan el lote de entrenamiento y siempre están en la clausura."""
    print("\n🧪 Probando 10.000 lotes pseudo-composicionales...")

    schema = AttributeSchema.from_sizes([2, 3, 2])
    pool = [record for combination in full_product(schema) for record in _records(combination, 3)]
    rng = np.random.default_rng(123)
    sampled = 0
    for _ in range(10_000):
        picked = rng.choice(len(pool), size=4, replace=False)
        train = Batch(records=[pool[i] for i in picked])
        train_combos = train.combinations()

        # Oráculo: recombinaciones por aspecto enumeradas a mano
        per_aspect = [{c[i] for c in train_combos} for i in range(schema.m)]
        expected = set(itertools.product(*per_aspect)) - train_combos
        assert pseudo_comp_candidates(train_combos) == expected
        if not expected:
            with pytest.raises(NoPseudoCompCandidates):
                sample_pcomp_batch(train, pool, size=4, seed=rng)
            continue

        pcomp = sample_pcomp_batch(train, pool, size=4, seed=rng)
        assert pcomp.combinations().isdisjoint(train_combos)
        assert pcomp.combinations() <= expected
        sampled += 1

    assert sampled > 0
    print("✅ Disjunción y clausura verificadas")


def test_allocation_sizes_on_fyelp_shape():
    """70.000 registros balanceados sobre 40 combinaciones."""
    print("\n🧪 Probando allocate_records...")

    schema = AttributeSchema.from_sizes([2, 2, 5, 2])
    full = full_product(schema)
    dataset = [LabeledRecord(combination=c) for c in full for _ in range(1750)]
    assert len(dataset) == 70000

    fewshot = fewshot_splits(full, AcdSearchConfig()).splits[0]
    holdout = holdout_splits(full).splits[0]
    acd = acd_splits(full, AcdSearchConfig(t1_restarts=2, t2_steps=5, eta_threshold=0.01)).splits[0]

    for split, expected in ((fewshot, 8750), (holdout, 68250), (acd, 35000)):
        allocation = allocate_records(dataset, split)
        train, id_test, comp_test = allocation.sizes
        assert train == expected
        assert id_test == 0
        assert train + comp_test == len(dataset)
        assert set(allocation.counts["train"]) == split.id_set.members
        assert set(allocation.counts["comp_test"]) == split.comp_set.members

    print("✅ Tamaños de entrenamiento correctos")


def test_allocation_partitions_dataset():
    print("\n🧪 Probando que el reparto es una partición...")

    schema = AttributeSchema.from_sizes([2, 2, 2])
    full = full_product(schema)
    dataset = [record for c in full for record in _records(c, 10, schema.label(c))]
    split = holdout_splits(full).splits[3]

    allocation = allocate_records(dataset, split, id_test_fraction=0.2, seed=5)
    combined = allocation.train_records + allocation.id_test_records + allocation.comp_test_records
    assert Counter(r.text for r in combined) == Counter(r.text for r in dataset)
    assert allocation.sizes == (56, 14, 10)
    assert all(r.combination in split.comp_set for r in allocation.comp_test_records)
    assert all(r.combination in split.id_set for r in allocation.id_test_records)

    with pytest.raises(SchemaError):
        allocate_records([LabeledRecord(combination=(0, 0, 2))], holdout_splits(full_product(schema)).splits[0])

    print("✅ El reparto es una partición exacta")


if __name__ == "__main__":
    print("🚀 Iniciando pruebas del muestreador\n")
    test_recombination_closure()
    test_sample_pcomp_batch_example()
    test_sample_pcomp_batch_errors()
    test_pcomp_soundness_over_many_seeds()
    test_allocation_sizes_on_fyelp_shape()
    test_allocation_partitions_dataset()
    print("\n🎉 Todas las pruebas pasaron")
