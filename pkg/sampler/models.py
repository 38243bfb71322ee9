from typing import Dict, List, Tuple

from pydantic import BaseModel, ConfigDict, Field

from schema_module.models import Combination


class LabeledRecord(BaseModel):
    """
    Dato etiquetado: parte de condición (combinación) y parte de texto.
    El texto es opaco en esta capa.
    """
    model_config = ConfigDict(frozen=True)

    combination: Combination
    text: str = ""


class Batch(BaseModel):
    """Lote no vacío de registros etiquetados"""
    model_config = ConfigDict(frozen=True)

    records: List[LabeledRecord] = Field(..., min_length=1)

    @property
    def size(self) -> int:
        return len(self.records)

    def combinations(self) -> frozenset:
        return frozenset(record.combination for record in self.records)


class Allocation(BaseModel):
    """Reparto de un dataset entre entrenamiento, test en distribución y test composicional"""
    model_config = ConfigDict(frozen=True)

    train_records: List[LabeledRecord] = []
    id_test_records: List[LabeledRecord] = []
    comp_test_records: List[LabeledRecord] = []
    # Registros por combinación, separados por destino
    counts: Dict[str, Dict[Tuple[int, ...], int]] = {}

    @property
    def sizes(self) -> Tuple[int, int, int]:
        return len(self.train_records), len(self.id_test_records), len(self.comp_test_records)
