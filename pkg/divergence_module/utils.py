import itertools
import math
from collections import Counter
from typing import Dict, Iterable

import numpy as np

from errors import CompSplitError, SchemaError, UndefinedDistributionError
from config import DEFAULT_ALPHA
from divergence_module.models import CompoundDistribution, CompoundKey
from schema_module.models import AttributeSchema, Combination, CombinationSet


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise CompSplitError(f"alpha debe estar en [0, 1], se recibió {alpha}")
    return alpha


def compound_frequency(combinations: CombinationSet) -> CompoundDistribution:
    """
    Frecuencia de cada compuesto de atributos en un conjunto de combinaciones:
    f(k) = 2·n(k) / (m·(m−1)·|C|), donde n(k) es el número de miembros que
    contienen el par k.

    Args:
        combinations: Conjunto no vacío de combinaciones

    Returns:
        CompoundDistribution con masa total 1

    Raises:
        UndefinedDistributionError: Si el conjunto está vacío
        SchemaError: Si el esquema tiene menos de dos aspectos
    """
    schema = combinations.schema
    m = schema.m
    if m < 2:
        raise SchemaError("se necesitan al menos dos aspectos para formar compuestos")
    if len(combinations) == 0:
        raise UndefinedDistributionError("undefined distribution: el conjunto de combinaciones está vacío")

    counts = Counter()
    for combination in combinations.members:
        for i, j in itertools.combinations(range(m), 2):
            counts[CompoundKey(i, combination[i], j, combination[j])] += 1

    denominator = m * (m - 1) * len(combinations)
    return CompoundDistribution(schema, {key: 2 * n / denominator for key, n in counts.items()})


def chernoff_similarity(p: CompoundDistribution, q: CompoundDistribution, alpha: float = DEFAULT_ALPHA) -> float:
    """
    Coeficiente de Chernoff S(P, Q) = Σ p_k^α · q_k^(1−α).

    Un término sólo cuenta cuando ambos lados son positivos; así, en α=0
    (resp. α=1) S es la masa de Q sobre el soporte de P (resp. de P sobre Q).

    Args:
        p: Distribución P
        q: Distribución Q
        alpha: Exponente en [0, 1]

    Returns:
        Similitud en [0, 1]

    Raises:
        SchemaError: Si las distribuciones tienen esquemas distintos
    """
    alpha = _check_alpha(alpha)
    if p.schema != q.schema:
        raise SchemaError("las distribuciones pertenecen a esquemas distintos")

    shared = p.support & q.support
    total = math.fsum(p.get(key) ** alpha * q.get(key) ** (1.0 - alpha) for key in shared)
    return min(1.0, max(0.0, total))


def compound_divergence(id_set: CombinationSet, comp_set: CombinationSet, alpha: float = DEFAULT_ALPHA) -> float:
    """
    Divergencia de compuestos de atributos D = 1 − S(P_id, P_comp).

    Args:
        id_set: Conjunto en distribución (no vacío)
        comp_set: Conjunto composicional (no vacío)
        alpha: Exponente de Chernoff

    Returns:
        Divergencia en [0, 1]
    """
    similarity = chernoff_similarity(compound_frequency(id_set), compound_frequency(comp_set), alpha)
    return min(1.0, max(0.0, 1.0 - similarity))


class CompoundIndex:
    """
    Índice denso del espacio de compuestos de un esquema.

    Cada combinación se traduce a los m(m−1)/2 índices densos de sus pares,
    lo que permite actualizar conteos al mover una combinación entre conjuntos
    sin recalcular las frecuencias desde cero.
    """

    def __init__(self, schema: AttributeSchema):
        self.schema = schema
        self.pairs = list(itertools.combinations(range(schema.m), 2))
        self.pair_count = len(self.pairs)
        self.keys = []
        self._positions: Dict[CompoundKey, int] = {}
        for i, j in self.pairs:
            for ti in range(schema.sizes[i]):
                for tj in range(schema.sizes[j]):
                    key = CompoundKey(i, ti, j, tj)
                    self._positions[key] = len(self.keys)
                    self.keys.append(key)
        self.size = len(self.keys)
        self._cache: Dict[Combination, np.ndarray] = {}

        sizes = np.array(schema.sizes, dtype=np.int64)
        self._pair_i = np.array([i for i, _ in self.pairs], dtype=np.int64)
        self._pair_j = np.array([j for _, j in self.pairs], dtype=np.int64)
        self._stride = sizes[self._pair_j]
        self._bases = np.concatenate([[0], np.cumsum(sizes[self._pair_i] * sizes[self._pair_j])[:-1]]).astype(np.int64)

    def pair_positions(self, combination: Combination) -> np.ndarray:
        """Índices densos de los pares de una combinación"""
        cached = self._cache.get(combination)
        if cached is None:
            cached = np.array(
                [self._positions[CompoundKey(i, combination[i], j, combination[j])] for i, j in self.pairs],
                dtype=np.int64,
            )
            self._cache[combination] = cached
        return cached

    def counts(self, combinations: Iterable[Combination]) -> np.ndarray:
        """Vector denso de conteos de pares"""
        counts = np.zeros(self.size, dtype=np.int64)
        for combination in combinations:
            counts[self.pair_positions(combination)] += 1
        return counts

    def batch_positions(self, combinations: np.ndarray) -> np.ndarray:
        """
        Índices densos de los pares para un arreglo de combinaciones.

        Args:
            combinations: Arreglo (..., m) de índices de valor

        Returns:
            Arreglo (..., m(m−1)/2) de posiciones en el índice
        """
        combinations = np.asarray(combinations, dtype=np.int64)
        return self._bases + combinations[..., self._pair_i] * self._stride + combinations[..., self._pair_j]

    def batch_counts(self, members: np.ndarray) -> np.ndarray:
        """
        Conteos densos de pares para un lote de conjuntos del mismo tamaño.

        Args:
            members: Arreglo (B, n, m), B conjuntos de n combinaciones cada uno

        Returns:
            Arreglo (B, size) con los conteos de cada conjunto
        """
        members = np.asarray(members, dtype=np.int64)
        batch = members.shape[0]
        positions = self.batch_positions(members).reshape(batch, -1)
        flat = positions + (np.arange(batch, dtype=np.int64) * self.size)[:, None]
        return np.bincount(flat.ravel(), minlength=batch * self.size).reshape(batch, self.size)

    def batch_divergence(self, id_counts: np.ndarray, n_id: int, comp_counts: np.ndarray, n_comp: int,
                         alpha: float = DEFAULT_ALPHA) -> np.ndarray:
        """
        D = 1 − Σ p^α q^(1−α) sobre el último eje, sólo donde ambos conteos son positivos.

        Args:
            id_counts: Conteos (..., size) del conjunto en distribución
            n_id: Número de combinaciones en distribución
            comp_counts: Conteos (..., size) del conjunto composicional
            n_comp: Número de combinaciones composicionales
            alpha: Exponente de Chernoff

        Returns:
            Arreglo (...) de divergencias en [0, 1]
        """
        alpha = _check_alpha(alpha)
        if n_id == 0 or n_comp == 0:
            raise UndefinedDistributionError("undefined distribution: conjunto vacío")
        shared = (id_counts > 0) & (comp_counts > 0)
        p = np.where(shared, id_counts, 0) / (self.pair_count * n_id)
        q = np.where(shared, comp_counts, 0) / (self.pair_count * n_comp)
        terms = np.where(shared, np.power(p, alpha) * np.power(q, 1.0 - alpha), 0.0)
        similarity = np.clip(terms.sum(axis=-1), 0.0, 1.0)
        return np.clip(1.0 - similarity, 0.0, 1.0)

    def divergence_from_counts(self, id_counts: np.ndarray, n_id: int, comp_counts: np.ndarray, n_comp: int,
                               alpha: float = DEFAULT_ALPHA) -> float:
        """D de un único par de vectores de conteos"""
        return float(self.batch_divergence(id_counts, n_id, comp_counts, n_comp, alpha))
