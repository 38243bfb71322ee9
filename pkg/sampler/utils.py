import itertools
from collections import Counter, defaultdict
from typing import Iterable, Sequence

import numpy as np

from config import DEFAULT_SEED
from errors import CompSplitError, NoPseudoCompCandidates, PoolExhausted, SchemaError
from sampler.models import Allocation, Batch, LabeledRecord
from schema_module.models import Combination, Split
from utils import get_logger

logger = get_logger(__name__)


def recombination_closure(combos: Iterable[Combination]) -> frozenset:
    """
    Clausura de recombinación: producto cartesiano de los valores que cada
    aspecto toma en alguna de las combinaciones.

    Args:
        combos: Combinaciones (no vacío)

    Returns:
        frozenset con todas las recombinaciones posibles

    Raises:
        SchemaError: Si la entrada está vacía o las longitudes no coinciden
    """
    combos = [tuple(c) for c in combos]
    if not combos:
        raise SchemaError("la clausura de recombinación necesita al menos una combinación")
    length = len(combos[0])
    if any(len(c) != length for c in combos):
        raise SchemaError("combinaciones con distinto número de aspectos")

    per_aspect = [sorted({c[i] for c in combos}) for i in range(length)]
    return frozenset(itertools.product(*per_aspect))


def pseudo_comp_candidates(train_combos: Iterable[Combination]) -> frozenset:
    """Combinaciones admisibles para el lote pseudo-composicional: clausura menos las del lote"""
    train_combos = frozenset(tuple(c) for c in train_combos)
    return recombination_closure(train_combos) - train_combos


def sample_pcomp_batch(train_batch: Batch, pool: Sequence[LabeledRecord], size: int,
                       seed=DEFAULT_SEED) -> Batch:
    """
    Construye el lote pseudo-composicional a partir de un lote de entrenamiento.

    Sus combinaciones son recombinaciones de atributos vistos en el lote pero
    nunca combinaciones del propio lote. Los registros se muestrean del pool
    uniformemente y sin reemplazo.

    Args:
        train_batch: Lote de entrenamiento
        pool: Registros en distribución disponibles
        size: Tamaño pedido (≥ 1)
        seed: Semilla o numpy.random.Generator

    Returns:
        Batch con hasta `size` registros admisibles

    Raises:
        NoPseudoCompCandidates: Si la clausura no aporta combinaciones nuevas
        PoolExhausted: Si ningún registro del pool es admisible
    """
    if size < 1:
        raise CompSplitError(f"size debe ser ≥ 1, se recibió {size}")

    admissible = pseudo_comp_candidates(train_batch.combinations())
    if not admissible:
        raise NoPseudoCompCandidates()

    eligible = [record for record in pool if record.combination in admissible]
    if not eligible:
        raise PoolExhausted()

    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if len(eligible) < size:
        logger.warning(f"⚠️ Sólo {len(eligible)} registros admisibles en el pool (se pidieron {size})")
        picked = rng.permutation(len(eligible))
    else:
        picked = rng.choice(len(eligible), size=size, replace=False)
    return Batch(records=[eligible[i] for i in picked])


def allocate_records(dataset: Sequence[LabeledRecord], split: Split, id_test_fraction: float = 0.0,
                     seed: int = DEFAULT_SEED) -> Allocation:
    """
    Reparte los registros según la división: combinaciones de C_id a
    entrenamiento (y una fracción opcional a test en distribución),
    combinaciones de C_comp sólo a test composicional.

    Args:
        dataset: Registros etiquetados
        split: División (C_id, C_comp)
        id_test_fraction: Fracción de cada combinación en distribución reservada a test
        seed: Semilla para elegir los registros de test en distribución

    Returns:
        Allocation con las tres particiones y los conteos por combinación

    Raises:
        SchemaError: Si algún registro tiene una combinación fuera de la división
    """
    if not 0.0 <= id_test_fraction < 1.0:
        raise CompSplitError(f"id_test_fraction debe estar en [0, 1), se recibió {id_test_fraction}")

    by_combination = defaultdict(list)
    comp_test = []
    for position, record in enumerate(dataset):
        if record.combination in split.id_set:
            by_combination[record.combination].append(record)
        elif record.combination in split.comp_set:
            comp_test.append(record)
        else:
            raise SchemaError(f"registro {position}: combinación desconocida {record.combination}")

    rng = np.random.default_rng(seed)
    train, id_test = [], []
    for combination in sorted(by_combination):
        records = by_combination[combination]
        n_test = int(round(len(records) * id_test_fraction))
        held = set(rng.choice(len(records), size=n_test, replace=False).tolist()) if n_test else set()
        for i, record in enumerate(records):
            (id_test if i in held else train).append(record)

    counts = {
        "train": dict(Counter(record.combination for record in train)),
        "id_test": dict(Counter(record.combination for record in id_test)),
        "comp_test": dict(Counter(record.combination for record in comp_test)),
    }
    logger.info(f"✅ Reparto: {len(train)} train, {len(id_test)} id-test, {len(comp_test)} comp-test")
    return Allocation(train_records=train, id_test_records=id_test, comp_test_records=comp_test, counts=counts)
