#!/usr/bin/env python3
"""
Pruebas de los protocolos de división: Hold-Out, Few-Shot, ACD y las
líneas base aleatoria y de mínima divergencia.
"""

import itertools
import math
import time

import numpy as np
import pytest
from pydantic import ValidationError

from divergence_module import CompoundIndex, compound_divergence
from errors import SplitConstructionError
from protocols.models import AcdSearchConfig, Objective, SplitBundle
from protocols.utils import (
    acd_splits,
    balanced_split_count,
    expected_id_size,
    fewshot_splits,
    holdout_splits,
    mindiv_splits,
    minimal_cover_count,
    random_splits,
)
from schema_module import AttributeSchema, Protocol, covered_attributes, full_product, is_eligible_split

FYELP = AttributeSchema.from_sizes([2, 2, 5, 2], names=["sentiment", "gender", "cuisine", "tense"])
YELP = AttributeSchema.from_sizes([2, 2, 2], names=["sentiment", "gender", "tense"])
AMAZON = AttributeSchema.from_sizes([2, 6], names=["sentiment", "topic"])

# Todas las formas (con permutaciones) de 2 a 4 aspectos con |C| par y ≤ 16
SMALL_SHAPES = [
    list(sizes)
    for m in (2, 3, 4)
    for sizes in itertools.product(range(2, 9), repeat=m)
    if math.prod(sizes) <= 16 and math.prod(sizes) % 2 == 0
]


def _balanced_extremes(schema: AttributeSchema, alpha: float = 0.5):
    """Oráculo por fuerza bruta: (mín, máx) de D sobre divisiones balanceadas elegibles"""
    members = np.array(full_product(schema).sorted())
    n = len(members)
    offsets = np.array(schema.offsets)
    value_rows = np.zeros((n, schema.total_values), dtype=np.int64)
    for r, combination in enumerate(members):
        value_rows[r, combination + offsets] = 1

    subsets = np.array(list(itertools.combinations(range(n), n // 2)))
    complements = np.array([sorted(set(range(n)) - set(s)) for s in subsets.tolist()])
    # Cláusula (c): C_id cubre todos los valores (C_id ∪ C_comp = C)
    eligible = np.all(value_rows[subsets].sum(axis=1) > 0, axis=1)

    index = CompoundIndex(schema)
    divergences = index.batch_divergence(
        index.batch_counts(members[subsets[eligible]]), n // 2,
        index.batch_counts(members[complements[eligible]]), n - n // 2,
        alpha,
    )
    return float(divergences.min()), float(divergences.max())


def _assert_valid(bundle: SplitBundle, balanced: bool):
    full = full_product(bundle.attribute_schema)
    for split in bundle.splits:
        assert split.protocol == bundle.protocol
        assert is_eligible_split(full, split.id_set, split.comp_set).eligible
        if balanced:
            assert len(split.id_set) == len(split.comp_set)


def test_holdout_count_law():
    """k=1 sobre el producto completo deja |C| divisiones."""
    print("🧪 Probando Hold-Out...")

    for sizes, expected in (([2, 2, 5, 2], 40), ([2, 6], 12), ([2, 2, 2], 8), ([2, 4], 8)):
        bundle = holdout_splits(full_product(AttributeSchema.from_sizes(sizes)))
        assert len(bundle) == expected
        assert all(len(split.comp_set) == 1 for split in bundle.splits)
        _assert_valid(bundle, balanced=False)

    with pytest.raises(SplitConstructionError):
        holdout_splits(full_product(YELP), k=0)
    with pytest.raises(SplitConstructionError):
        holdout_splits(full_product(YELP), k=8)

    # Con k=2 en 2x2 sólo quedan las dos diagonales
    assert len(holdout_splits(full_product(AttributeSchema.from_sizes([2, 2])), k=2)) == 2

    print("✅ Hold-Out funciona correctamente")


def test_fewshot_minimal_covers():
    print("\n🧪 Probando Few-Shot...")

    square = AttributeSchema.from_sizes([2, 2])
    bundle = fewshot_splits(full_product(square), AcdSearchConfig())
    assert sorted(split.id_set.sorted() for split in bundle.splits) == [((0, 0), (1, 1)), ((0, 1), (1, 0))]
    assert all(split.divergence == pytest.approx(1.0) for split in bundle.splits)

    for schema, size in ((FYELP, 5), (AMAZON, 6)):
        bundle = fewshot_splits(full_product(schema), AcdSearchConfig())
        assert len(bundle) >= 1
        _assert_valid(bundle, balanced=False)
        for split in bundle.splits:
            assert len(split.id_set) == size
            assert all(len(values) == a for values, a in zip(covered_attributes(split.id_set), schema.sizes))
            assert split.divergence == pytest.approx(bundle.best_divergence, abs=1e-12)

    assert minimal_cover_count(FYELP) == 27000
    assert minimal_cover_count(square) == 2
    assert expected_id_size(70000, FYELP, Protocol.FEWSHOT) == pytest.approx(8750)

    print("✅ Few-Shot funciona correctamente")


def test_fewshot_hill_climbing_reaches_enumerated_optimum():
    """Con presupuesto 1 se usa hill climbing; debe alcanzar el óptimo enumerado."""
    print("\n🧪 Probando Few-Shot por hill climbing...")

    schema = AttributeSchema.from_sizes([2, 2, 3])
    enumerated = fewshot_splits(full_product(schema), AcdSearchConfig())
    climbed = fewshot_splits(full_product(schema), AcdSearchConfig(enumeration_budget=1, t1_restarts=50))
    assert climbed.best_divergence == pytest.approx(enumerated.best_divergence, abs=1e-12)
    _assert_valid(climbed, balanced=False)

    print("✅ El hill climbing alcanza el óptimo")


def test_acd_square_schema():
    print("\n🧪 Probando ACD en 2x2...")

    bundle = acd_splits(full_product(AttributeSchema.from_sizes([2, 2])), AcdSearchConfig(eta_threshold=0.9, t1_restarts=10))
    assert len(bundle) >= 1
    assert bundle.protocol == Protocol.ACD
    for split in bundle.splits:
        assert split.divergence == pytest.approx(1.0)
        assert split.id_set.sorted() in (((0, 0), (1, 1)), ((0, 1), (1, 0)))

    print("✅ ACD en 2x2 funciona correctamente")


@pytest.mark.parametrize("sizes", SMALL_SHAPES, ids=lambda sizes: "x".join(map(str, sizes)))
def test_acd_matches_brute_force(sizes):
    """Con T1=50 la búsqueda alcanza el máximo global en todo esquema con |C| ≤ 16."""
    print(f"\n🧪 Probando ACD contra fuerza bruta en {sizes}...")

    schema = AttributeSchema.from_sizes(sizes)
    _, best = _balanced_extremes(schema)
    bundle = acd_splits(full_product(schema), AcdSearchConfig(t1_restarts=50, eta_threshold=0.01, rng_seed=1))
    assert bundle.best_divergence == pytest.approx(best, abs=1e-9)
    _assert_valid(bundle, balanced=True)

    print("✅ Óptimo global alcanzado")


def test_acd_yelp_and_baselines():
    """MinDiv < media aleatoria < mejor ACD en YELP, para cada semilla."""
    print("\n🧪 Probando ACD, MinDiv y Random en YELP...")

    full = full_product(YELP)
    lowest, highest = _balanced_extremes(YELP)
    # p. ej. C_id = {011, 101, 110, 111}
    assert highest == pytest.approx(0.5)
    assert lowest == pytest.approx(0.0, abs=1e-12)

    for seed in range(20):
        acd = acd_splits(full, AcdSearchConfig(t1_restarts=50, eta_threshold=0.3, rng_seed=seed))
        assert len(acd) >= 1
        assert acd.best_divergence == pytest.approx(highest, abs=1e-9)
        assert all(split.divergence >= 0.3 for split in acd.splits)
        _assert_valid(acd, balanced=True)

        mindiv = mindiv_splits(full, AcdSearchConfig(t1_restarts=50, only_optimal=True, rng_seed=seed))
        assert mindiv.protocol == Protocol.MINDIV
        assert mindiv.best_divergence == pytest.approx(lowest, abs=1e-9)
        _assert_valid(mindiv, balanced=True)

        random = random_splits(full, 100, seed=seed)
        assert len(random) == 100
        _assert_valid(random, balanced=True)
        random_mean = random.mean_divergence()
        assert max(mindiv.divergences()) < random_mean < acd.best_divergence, seed

    # Ninguna división de YELP llega a η=0.6: bundle vacío con diagnóstico
    empty = acd_splits(full, AcdSearchConfig(t1_restarts=50, eta_threshold=0.6))
    assert len(empty) == 0
    assert empty.diagnostic is not None
    assert empty.best_divergence == pytest.approx(highest, abs=1e-9)

    print("✅ El orden de divergencias se cumple")


def test_every_protocol_returns_eligible_splits():
    """1000 esquemas aleatorios (m ∈ {2,3,4}, a_i ∈ {2..6}): toda división devuelta es elegible."""
    print("\n🧪 Probando elegibilidad en esquemas aleatorios...")

    rng = np.random.default_rng(2024)
    balanced_protocols = (Protocol.ACD, Protocol.RANDOM)
    protocols = (Protocol.HOLDOUT, Protocol.FEWSHOT, Protocol.ACD, Protocol.RANDOM)
    checked = 0
    for run in range(1000):
        # |C| ≤ 216 para que las pasadas de intercambio quepan en memoria
        while True:
            sizes = rng.integers(2, 7, size=int(rng.integers(2, 5))).tolist()
            if math.prod(sizes) <= 216:
                break
        full = full_product(AttributeSchema.from_sizes(sizes))
        protocol = protocols[run % len(protocols)]
        config = AcdSearchConfig(t1_restarts=2, t2_steps=5, eta_threshold=0.01, rng_seed=run, enumeration_budget=2000)

        if protocol in balanced_protocols and len(full) % 2:
            with pytest.raises(SplitConstructionError):
                acd_splits(full, config) if protocol == Protocol.ACD else random_splits(full, 3, seed=run)
            continue

        if protocol == Protocol.HOLDOUT:
            bundle = holdout_splits(full)
        elif protocol == Protocol.FEWSHOT:
            bundle = fewshot_splits(full, config)
        elif protocol == Protocol.ACD:
            bundle = acd_splits(full, config)
        else:
            bundle = random_splits(full, 3, seed=run)
        _assert_valid(bundle, balanced=protocol in balanced_protocols)
        checked += len(bundle)

    assert checked > 1000
    print(f"✅ {checked} divisiones elegibles")


def test_restart_time_scales_with_product_size():
    """Duplicar |C| multiplica por menos de 4 el tiempo de una pasada de un reinicio."""
    print("\n🧪 Probando el coste de un reinicio...")

    def per_pass_time(sizes):
        full = full_product(AttributeSchema.from_sizes(sizes))
        acd_splits(full, AcdSearchConfig(t1_restarts=1, t2_steps=5, eta_threshold=0.01, threads=1))
        timings = []
        for seed in range(21):
            config = AcdSearchConfig(t1_restarts=1, t2_steps=5, eta_threshold=0.01, threads=1, rng_seed=seed)
            start = time.perf_counter()
            bundle = acd_splits(full, config)
            elapsed = time.perf_counter() - start
            timings.append(elapsed / len(bundle.trajectories[0]))
        return float(np.median(timings))

    small = per_pass_time([2, 2, 2, 2])
    large = per_pass_time([2, 2, 2, 2, 2])
    assert large < 4 * small, (small, large)

    print(f"✅ Razón {large / small:.2f}")


def test_acd_trajectories_are_monotone():
    print("\n🧪 Probando monotonía de las trayectorias...")

    for sizes in ([2, 2, 2], [2, 2, 5, 2], [3, 4]):
        config = AcdSearchConfig(t1_restarts=10, eta_threshold=0.01)
        for bundle, sign in ((acd_splits(full_product(AttributeSchema.from_sizes(sizes)), config), 1),
                             (mindiv_splits(full_product(AttributeSchema.from_sizes(sizes)), config), -1)):
            assert len(bundle.trajectories) == 10
            for trajectory in bundle.trajectories:
                assert 1 <= len(trajectory) <= config.t2_steps + 1
                steps = np.diff(sign * np.array(trajectory))
                assert np.all(steps >= -1e-12)

    print("✅ Las trayectorias son monótonas")


def test_acd_threads_are_deterministic():
    """El resultado no depende del número de hilos."""
    print("\n🧪 Probando determinismo con hilos...")

    full = full_product(AttributeSchema.from_sizes([2, 2, 5, 2]))
    sequential = acd_splits(full, AcdSearchConfig(t1_restarts=8, t2_steps=10, eta_threshold=0.01, threads=1))
    parallel = acd_splits(full, AcdSearchConfig(t1_restarts=8, t2_steps=10, eta_threshold=0.01, threads=4))
    assert [s.canonical_key() for s in sequential.splits] == [s.canonical_key() for s in parallel.splits]
    assert sequential.trajectories == parallel.trajectories
    assert sequential.divergences() == parallel.divergences()

    print("✅ Resultados idénticos")


def test_only_optimal_keeps_ties():
    print("\n🧪 Probando only_optimal...")

    full = full_product(AttributeSchema.from_sizes([2, 2, 5, 2]))
    bundle = acd_splits(full, AcdSearchConfig(t1_restarts=20, eta_threshold=0.01, only_optimal=True))
    assert len(bundle) >= 1
    for split in bundle.splits:
        assert split.divergence == pytest.approx(bundle.best_divergence, abs=1e-12)
        assert split.divergence == pytest.approx(compound_divergence(split.id_set, split.comp_set), abs=1e-12)

    print("✅ only_optimal funciona correctamente")


def test_random_splits():
    print("\n🧪 Probando Random...")

    full = full_product(AttributeSchema.from_sizes([2, 2]))
    bundle = random_splits(full, 1, seed=4)
    assert bundle.splits[0].id_set.sorted() in (((0, 0), (1, 1)), ((0, 1), (1, 0)))
    assert bundle.splits[0].divergence == pytest.approx(1.0)

    first = random_splits(full_product(YELP), 20, seed=3)
    second = random_splits(full_product(YELP), 20, seed=3)
    assert [s.canonical_key() for s in first.splits] == [s.canonical_key() for s in second.splits]

    with pytest.raises(SplitConstructionError):
        random_splits(full_product(AttributeSchema.from_sizes([3, 3])), 5)
    with pytest.raises(SplitConstructionError):
        random_splits(full_product(YELP), 0)

    print("✅ Random funciona correctamente")


def test_odd_product_rejected():
    print("\n🧪 Probando |C| impar...")

    with pytest.raises(SplitConstructionError):
        acd_splits(full_product(AttributeSchema.from_sizes([3, 3])), AcdSearchConfig())
    assert balanced_split_count(9) == 0
    assert balanced_split_count(8) == 70

    print("✅ |C| impar rechazado")


def test_config_and_bundle_validation():
    print("\n🧪 Probando validación de configuración y bundles...")

    for bad in ({"t1_restarts": 0}, {"t2_steps": 0}, {"eta_threshold": 0.0}, {"eta_threshold": 1.0}, {"alpha": 1.5}):
        with pytest.raises(ValidationError):
            AcdSearchConfig(**bad)
    assert AcdSearchConfig().objective == Objective.MAXIMIZE

    bundle = holdout_splits(full_product(YELP))
    with pytest.raises(ValidationError):
        SplitBundle(splits=[bundle.splits[0], bundle.splits[0]], protocol=Protocol.HOLDOUT, attribute_schema=YELP)
    with pytest.raises(ValidationError):
        SplitBundle(splits=bundle.splits, protocol=Protocol.ACD, attribute_schema=YELP)

    assert expected_id_size(70000, FYELP, Protocol.HOLDOUT) == pytest.approx(68250)
    assert expected_id_size(70000, FYELP, Protocol.ACD) == pytest.approx(35000)
    assert expected_id_size(70000, FYELP, Protocol.ORIGINAL) == pytest.approx(70000)

    print("✅ Validación funciona correctamente")


if __name__ == "__main__":
    print("🚀 Iniciando pruebas de protocolos\n")
    test_holdout_count_law()
    test_fewshot_minimal_covers()
    test_fewshot_hill_climbing_reaches_enumerated_optimum()
    test_acd_square_schema()
    for sizes in SMALL_SHAPES:
        test_acd_matches_brute_force(sizes)
    test_acd_yelp_and_baselines()
    test_every_protocol_returns_eligible_splits()
    test_restart_time_scales_with_product_size()
    test_acd_trajectories_are_monotone()
    test_acd_threads_are_deterministic()
    test_only_optimal_keeps_ties()
    test_random_splits()
    test_odd_product_rejected()
    test_config_and_bundle_validation()
    print("\n🎉 Todas las pruebas pasaron")
