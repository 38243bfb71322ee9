import enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from config import DEFAULT_ALPHA, DEFAULT_ETA, DEFAULT_SEED, DEFAULT_T1, DEFAULT_T2, ENUMERATION_BUDGET
from schema_module.models import AttributeSchema, Protocol, Split


class Objective(enum.Enum):
    """Sentido de la búsqueda sobre la divergencia"""
    MAXIMIZE = "maximize"
    MINIMIZE = "minimize"


class AcdSearchConfig(BaseModel):
    """
    Parámetros de la búsqueda por hill climbing con reinicios.

    T1 reinicios, hasta T2 pasadas de mejora por reinicio y umbral η.
    """
    model_config = ConfigDict(frozen=True)

    t1_restarts: int = Field(default=DEFAULT_T1, ge=1)
    t2_steps: int = Field(default=DEFAULT_T2, ge=1)
    eta_threshold: float = Field(default=DEFAULT_ETA, gt=0.0, lt=1.0)
    alpha: float = Field(default=DEFAULT_ALPHA, ge=0.0, le=1.0)
    rng_seed: int = DEFAULT_SEED
    objective: Objective = Objective.MAXIMIZE
    # Conservar sólo las divisiones que empatan con la mejor divergencia
    only_optimal: bool = False
    enumeration_budget: int = Field(default=ENUMERATION_BUDGET, ge=1)
    threads: Optional[int] = Field(default=None, ge=1)

    def snapshot(self) -> Dict[str, Any]:
        return {
            "alpha": self.alpha,
            "eta": self.eta_threshold,
            "t1": self.t1_restarts,
            "t2": self.t2_steps,
            "seed": self.rng_seed,
            "objective": self.objective.value,
            "only_optimal": self.only_optimal,
        }


class SplitBundle(BaseModel):
    """
    Conjunto de divisiones de un mismo protocolo sobre un esquema.

    Los resultados del benchmark se promedian sobre todas las divisiones del bundle.
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    splits: List[Split]
    protocol: Protocol
    attribute_schema: AttributeSchema
    config: Dict[str, Any] = {}
    best_divergence: Optional[float] = None
    diagnostic: Optional[str] = None
    # Secuencia de d_m registrada en cada reinicio (ACD / MinDiv)
    trajectories: List[List[float]] = []

    @model_validator(mode="after")
    def _check_bundle(self):
        for split in self.splits:
            if split.protocol != self.protocol:
                raise ValueError(f"división con protocolo {split.protocol.value} en un bundle {self.protocol.value}")
            if split.attribute_schema != self.attribute_schema:
                raise ValueError("división con un esquema distinto al del bundle")
        # Las muestras aleatorias se conservan con repetición
        if self.protocol != Protocol.RANDOM:
            keys = [split.canonical_key() for split in self.splits]
            if len(set(keys)) != len(keys):
                raise ValueError("divisiones duplicadas en el bundle")
        return self

    def __len__(self) -> int:
        return len(self.splits)

    def divergences(self) -> List[float]:
        return [split.divergence for split in self.splits if split.divergence is not None]

    def mean_divergence(self) -> Optional[float]:
        values = self.divergences()
        if not values:
            return None
        return sum(values) / len(values)
