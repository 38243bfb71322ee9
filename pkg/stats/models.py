from typing import Dict, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from schema_module.models import Protocol


class ProtocolScores(BaseModel):
    """
    Celdas de un protocolo: precisión (%) y perplejidad en distribución y composicional.
    El protocolo original sólo tiene la celda en distribución.
    """
    model_config = ConfigDict(frozen=True)

    protocol: Protocol
    a_id: float = Field(..., ge=0.0, le=100.0)
    a_comp: Optional[float] = Field(default=None, ge=0.0, le=100.0)
    p_id: Optional[float] = Field(default=None, gt=0.0)
    p_comp: Optional[float] = Field(default=None, gt=0.0)

    @model_validator(mode="after")
    def _check_cells(self):
        if self.protocol == Protocol.ORIGINAL:
            if self.a_comp is not None or self.p_comp is not None:
                raise ValueError("el protocolo original sólo tiene la celda en distribución")
        elif self.a_comp is None:
            raise ValueError(f"falta a_comp para el protocolo {self.protocol.value}")
        return self


class BenchmarkSummary(BaseModel):
    """Promedios del benchmark: A_avg, P_avg y G_avg (media de las brechas Hold-Out y ACD)"""
    model_config = ConfigDict(frozen=True)

    a_avg: float
    p_avg: Optional[float] = None
    g_avg: float
    gaps: Dict[Protocol, float]
