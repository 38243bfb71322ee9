from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, RootModel, field_validator, model_validator

from schema_module.models import AttributeSchema, Combination, Protocol


class DatasetRecord(BaseModel):
    """Una línea del dataset: mapa aspecto -> valor y el texto"""
    attributes: Dict[str, str] = Field(..., min_length=1)
    text: str


class SchemaReport(BaseModel):
    """Esquema inferido de un dataset y registros por combinación"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    attribute_schema: AttributeSchema
    counts: Dict[Combination, int]
    n_records: int

    def labelled_counts(self) -> Dict[str, int]:
        return {self.attribute_schema.label(c): n for c, n in sorted(self.counts.items())}


class SplitManifest(BaseModel):
    """
    Documento que describe una división: esquema, protocolo, configuración,
    divergencia y las combinaciones de cada lado en forma de strings.
    """
    model_config = ConfigDict(populate_by_name=True)

    schema_block: AttributeSchema = Field(..., alias="schema")
    protocol: Protocol
    config: Dict[str, Any] = {}
    divergence: Optional[float] = None
    seed: int = 0
    id_combinations: List[List[str]]
    comp_combinations: List[List[str]] = []


class CellScores(BaseModel):
    """Puntuaciones de una celda (id o comp) de una división"""
    accuracy: Dict[str, float] = Field(..., min_length=1)
    perplexity: Optional[float] = Field(default=None, gt=0.0)

    @field_validator("accuracy")
    @classmethod
    def _check_accuracy(cls, value: Dict[str, float]) -> Dict[str, float]:
        for aspect, accuracy in value.items():
            if not 0.0 <= accuracy <= 100.0:
                raise ValueError(f"precisión fuera de [0, 100] para '{aspect}': {accuracy}")
        return value

    @property
    def mean_accuracy(self) -> float:
        return sum(self.accuracy.values()) / len(self.accuracy)


class ScoreFile(RootModel[Dict[Protocol, Dict[str, Dict[str, CellScores]]]]):
    """
    Puntuaciones externas: protocolo -> división -> celda {id, comp} -> puntuaciones.
    """

    @model_validator(mode="after")
    def _check_cells(self):
        for protocol, splits in self.root.items():
            if not splits:
                raise ValueError(f"el protocolo '{protocol.value}' no tiene divisiones")
            for split_id, cells in splits.items():
                unknown = set(cells) - {"id", "comp"}
                if unknown:
                    raise ValueError(f"{protocol.value}/{split_id}: celdas desconocidas {sorted(unknown)}")
                if "id" not in cells:
                    raise ValueError(f"{protocol.value}/{split_id}: falta la celda 'id'")
                if protocol == Protocol.ORIGINAL and "comp" in cells:
                    raise ValueError(f"{protocol.value}/{split_id}: el protocolo original sólo tiene celda 'id'")
        return self
