import math
from typing import Dict, Iterator, Tuple

from errors import SchemaError
from schema_module.models import AttributeSchema


class CompoundKey(tuple):
    """
    Compuesto de atributos: par no ordenado de valores de dos aspectos distintos.

    Se guarda siempre como (aspect_i, value_i, aspect_j, value_j) con aspect_i < aspect_j.
    """

    __slots__ = ()

    def __new__(cls, aspect_i: int, value_i: int, aspect_j: int, value_j: int):
        if aspect_i == aspect_j:
            raise SchemaError(f"un compuesto necesita dos aspectos distintos (aspecto {aspect_i} repetido)")
        if aspect_i > aspect_j:
            aspect_i, value_i, aspect_j, value_j = aspect_j, value_j, aspect_i, value_i
        return tuple.__new__(cls, (int(aspect_i), int(value_i), int(aspect_j), int(value_j)))

    def __getnewargs__(self):
        return tuple(self)

    @property
    def aspect_i(self) -> int:
        return self[0]

    @property
    def value_i(self) -> int:
        return self[1]

    @property
    def aspect_j(self) -> int:
        return self[2]

    @property
    def value_j(self) -> int:
        return self[3]

    def label(self, schema: AttributeSchema) -> str:
        a, b = schema.aspects[self.aspect_i], schema.aspects[self.aspect_j]
        return f"({a.values[self.value_i]}, {b.values[self.value_j]})"


class CompoundDistribution:
    """
    Distribución de frecuencias sobre compuestos (mapa disperso, sin ceros).
    """

    __slots__ = ("schema", "_weights")

    def __init__(self, schema: AttributeSchema, weights: Dict[CompoundKey, float]):
        self.schema = schema
        self._weights = {key: float(w) for key, w in weights.items() if w > 0}

    @property
    def weights(self) -> Dict[CompoundKey, float]:
        return dict(self._weights)

    @property
    def support(self) -> frozenset:
        return frozenset(self._weights)

    def get(self, key: CompoundKey) -> float:
        return self._weights.get(key, 0.0)

    def items(self) -> Iterator[Tuple[CompoundKey, float]]:
        return iter(sorted(self._weights.items()))

    def total_mass(self) -> float:
        return math.fsum(self._weights.values())

    def __len__(self) -> int:
        return len(self._weights)

    def __repr__(self) -> str:
        return f"<CompoundDistribution(support={len(self)}, mass={self.total_mass():.6f})>"
