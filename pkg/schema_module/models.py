import enum
import math
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from errors import SchemaError


# Una combinación es un vector de índices, uno por aspecto.
# La conversión a strings sólo ocurre en la frontera de E/S.
Combination = Tuple[int, ...]


class Protocol(enum.Enum):
    """Protocolos de división soportados"""
    ORIGINAL = "original"
    HOLDOUT = "holdout"
    ACD = "acd"
    FEWSHOT = "fewshot"
    RANDOM = "random"
    MINDIV = "mindiv"


class AspectDef(BaseModel):
    """Un aspecto controlable (p. ej. sentimiento) y sus valores de atributo"""
    model_config = ConfigDict(frozen=True)

    name: str
    values: Tuple[str, ...]

    @model_validator(mode="after")
    def _check_values(self):
        if len(self.values) < 2:
            raise ValueError(f"el aspecto '{self.name}' necesita al menos 2 valores, tiene {len(self.values)}")
        if len(set(self.values)) != len(self.values):
            raise ValueError(f"valores repetidos en el aspecto '{self.name}'")
        return self


class AttributeSchema(BaseModel):
    """
    Esquema de atributos: m aspectos ordenados, cada uno con sus valores.

    Las combinaciones se validan siempre contra un esquema concreto.
    """
    model_config = ConfigDict(frozen=True)

    aspects: Tuple[AspectDef, ...] = Field(..., min_length=2)

    @model_validator(mode="after")
    def _check_aspects(self):
        names = [aspect.name for aspect in self.aspects]
        if len(set(names)) != len(names):
            raise ValueError("nombres de aspecto repetidos")
        return self

    @classmethod
    def from_sizes(cls, sizes: Sequence[int], names: Optional[Sequence[str]] = None) -> "AttributeSchema":
        """
        Construye un esquema sintético a partir de los tamaños a_i.

        Los aspectos se llaman a0, a1, ... y sus valores a0_v0, a0_v1, ...
        salvo que se pasen nombres explícitos.
        """
        names = list(names) if names is not None else [f"a{i}" for i in range(len(sizes))]
        return cls(aspects=tuple(
            AspectDef(name=name, values=tuple(f"{name}_v{t}" for t in range(size)))
            for name, size in zip(names, sizes)
        ))

    @property
    def m(self) -> int:
        return len(self.aspects)

    @property
    def sizes(self) -> Tuple[int, ...]:
        return tuple(len(aspect.values) for aspect in self.aspects)

    @property
    def offsets(self) -> Tuple[int, ...]:
        """Fila inicial de cada aspecto en una tabla de Σa_i filas"""
        offsets, acc = [], 0
        for size in self.sizes:
            offsets.append(acc)
            acc += size
        return tuple(offsets)

    @property
    def total_values(self) -> int:
        return sum(self.sizes)

    @property
    def product_size(self) -> int:
        return math.prod(self.sizes)

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(aspect.name for aspect in self.aspects)

    def validate_combination(self, combination: Sequence[int]) -> Combination:
        """
        Verifica longitud y rangos de una combinación.

        Raises:
            SchemaError: Si la combinación no pertenece al esquema
        """
        combination = tuple(int(t) for t in combination)
        if len(combination) != self.m:
            raise SchemaError(f"combinación {combination} tiene {len(combination)} índices, el esquema tiene {self.m} aspectos")
        for i, (t, size) in enumerate(zip(combination, self.sizes)):
            if not 0 <= t < size:
                raise SchemaError(f"índice {t} fuera de rango para el aspecto '{self.aspects[i].name}' ({size} valores)")
        return combination

    def encode(self, values: Sequence[str]) -> Combination:
        """Valores string (en orden de aspectos) -> vector de índices"""
        if len(values) != self.m:
            raise SchemaError(f"se esperaban {self.m} valores, llegaron {len(values)}")
        combination = []
        for aspect, value in zip(self.aspects, values):
            try:
                combination.append(aspect.values.index(value))
            except ValueError:
                raise SchemaError(f"valor desconocido '{value}' para el aspecto '{aspect.name}'")
        return tuple(combination)

    def encode_mapping(self, attributes: Dict[str, str]) -> Combination:
        """Mapa aspecto -> valor -> vector de índices"""
        if set(attributes) != set(self.names):
            missing = sorted(set(self.names) - set(attributes))
            extra = sorted(set(attributes) - set(self.names))
            raise SchemaError(f"aspectos no coinciden con el esquema (faltan {missing}, sobran {extra})")
        return self.encode([attributes[name] for name in self.names])

    def decode(self, combination: Combination) -> List[str]:
        """Vector de índices -> valores string"""
        return [aspect.values[t] for aspect, t in zip(self.aspects, combination)]

    def label(self, combination: Combination) -> str:
        return "-".join(self.decode(combination))


class CombinationSet:
    """
    Conjunto inmutable de combinaciones validadas contra un mismo esquema.

    La iteración sigue siempre el orden lexicográfico de los vectores de índices.
    """

    __slots__ = ("_members", "_sorted", "schema")

    def __init__(self, schema: AttributeSchema, members: Iterable[Sequence[int]] = (), validate: bool = True):
        if validate:
            frozen = frozenset(schema.validate_combination(c) for c in members)
        else:
            frozen = frozenset(members)
        object.__setattr__(self, "schema", schema)
        object.__setattr__(self, "_members", frozen)
        object.__setattr__(self, "_sorted", None)

    def __setattr__(self, key, value):
        raise AttributeError("CombinationSet es inmutable")

    @property
    def members(self) -> frozenset:
        return self._members

    def sorted(self) -> Tuple[Combination, ...]:
        if self._sorted is None:
            object.__setattr__(self, "_sorted", tuple(sorted(self._members)))
        return self._sorted

    def __iter__(self) -> Iterator[Combination]:
        return iter(self.sorted())

    def __len__(self) -> int:
        return len(self._members)

    def __contains__(self, combination) -> bool:
        return tuple(combination) in self._members

    def __eq__(self, other) -> bool:
        if not isinstance(other, CombinationSet):
            return NotImplemented
        return self.schema == other.schema and self._members == other._members

    def __hash__(self) -> int:
        return hash(self._members)

    def __repr__(self) -> str:
        return f"<CombinationSet(size={len(self)}, m={self.schema.m})>"

    def _same_schema(self, other: "CombinationSet") -> None:
        if self.schema != other.schema:
            raise SchemaError("los conjuntos de combinaciones pertenecen a esquemas distintos")

    def union(self, other: "CombinationSet") -> "CombinationSet":
        self._same_schema(other)
        return CombinationSet(self.schema, self._members | other._members, validate=False)

    def difference(self, other: "CombinationSet") -> "CombinationSet":
        self._same_schema(other)
        return CombinationSet(self.schema, self._members - other._members, validate=False)

    def with_members(self, members: Iterable[Combination]) -> "CombinationSet":
        """Nuevo conjunto sobre el mismo esquema (miembros ya validados)"""
        return CombinationSet(self.schema, members, validate=False)


class Split(BaseModel):
    """
    División etiquetada con su protocolo: (C_id, C_comp) y su divergencia.

    Se valida la elegibilidad al construirla.
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    protocol: Protocol
    id_set: CombinationSet
    comp_set: CombinationSet
    divergence: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    seed: int = 0

    @model_validator(mode="after")
    def _check_split(self):
        from schema_module.utils import is_eligible_split

        if self.id_set.schema != self.comp_set.schema:
            raise ValueError("id_set y comp_set pertenecen a esquemas distintos")
        if self.protocol == Protocol.ORIGINAL and len(self.comp_set) > 0:
            raise ValueError("el protocolo original no tiene conjunto composicional")
        full = self.id_set.union(self.comp_set)
        report = is_eligible_split(full, self.id_set, self.comp_set)
        if not report.eligible:
            raise ValueError(f"división no elegible: {report.summary()}")
        return self

    @property
    def attribute_schema(self) -> AttributeSchema:
        return self.id_set.schema

    def canonical_key(self) -> Tuple[Combination, ...]:
        """Clave de deduplicación: id_set ordenado"""
        return self.id_set.sorted()

    @property
    def is_balanced(self) -> bool:
        return len(self.id_set) == len(self.comp_set)
