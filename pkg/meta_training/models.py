from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.special import logsumexp, softmax

from config import DEFAULT_ALPHA_LR, DEFAULT_LAMBDA, DEFAULT_SEED
from errors import CompSplitError
from sampler.models import LabeledRecord
from schema_module.models import AttributeSchema, Split


class TokenBatch:
    """
    Lote de secuencias para el generador de juguete: combinaciones (B, m)
    y conteos de tokens (B, V). El orden de los tokens no importa.
    """

    __slots__ = ("combinations", "counts")

    def __init__(self, combinations: np.ndarray, counts: np.ndarray):
        combinations = np.asarray(combinations, dtype=np.int64)
        counts = np.asarray(counts, dtype=np.float64)
        if combinations.ndim != 2 or len(combinations) == 0:
            raise CompSplitError("lote vacío")
        if counts.shape[0] != combinations.shape[0]:
            raise CompSplitError("combinaciones y conteos con distinto número de filas")
        self.combinations = combinations
        self.counts = counts

    @classmethod
    def from_records(cls, records: Sequence[LabeledRecord], vocab_size: int) -> "TokenBatch":
        """Los textos son tokens 'w<id>' separados por espacios"""
        if not records:
            raise CompSplitError("lote vacío")
        counts = np.zeros((len(records), vocab_size))
        for row, record in enumerate(records):
            for token in record.text.split():
                index = int(token[1:])
                if not 0 <= index < vocab_size:
                    raise CompSplitError(f"token {token} fuera del vocabulario de tamaño {vocab_size}")
                counts[row, index] += 1
        return cls([record.combination for record in records], counts)

    def __len__(self) -> int:
        return len(self.combinations)

    @property
    def lengths(self) -> np.ndarray:
        return self.counts.sum(axis=1)


class ToyGenModel:
    """
    Generador condicional lineal-softmax.

    Los logits de una combinación son la suma de las filas de θ de sus atributos
    más el sesgo congelado φ; cada token de la secuencia se emite de forma
    independiente con softmax(logits). La pérdida es la NLL por secuencia
    promediada sobre el lote, más aux_weight · (coseno medio entre filas de un
    mismo aspecto).
    """

    def __init__(self, schema: AttributeSchema, theta: np.ndarray, phi: Optional[np.ndarray] = None,
                 aux_weight: float = 0.0, aux_eps: float = 1e-8):
        theta = np.array(theta, dtype=np.float64)
        if theta.ndim != 2 or theta.shape[0] != schema.total_values:
            raise CompSplitError(f"θ debe tener forma ({schema.total_values}, V), tiene {theta.shape}")
        if theta.shape[1] < 2:
            raise CompSplitError("el vocabulario necesita al menos 2 tokens")
        phi = np.zeros(theta.shape[1]) if phi is None else np.array(phi, dtype=np.float64)
        if phi.shape != (theta.shape[1],):
            raise CompSplitError(f"φ debe tener longitud {theta.shape[1]}")
        if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(phi))):
            raise CompSplitError("parámetros no finitos")

        self.schema = schema
        self.theta = theta
        self.phi = phi
        self.aux_weight = aux_weight
        self.aux_eps = aux_eps
        self._offsets = np.array(schema.offsets, dtype=np.int64)

    @classmethod
    def zeros(cls, schema: AttributeSchema, vocab_size: int, **kwargs) -> "ToyGenModel":
        return cls(schema, np.zeros((schema.total_values, vocab_size)), **kwargs)

    @property
    def vocab_size(self) -> int:
        return self.theta.shape[1]

    def with_theta(self, theta: np.ndarray) -> "ToyGenModel":
        """Copia con otros θ (φ y configuración compartidos)"""
        return ToyGenModel(self.schema, theta, self.phi, self.aux_weight, self.aux_eps)

    def design(self, combinations: np.ndarray) -> np.ndarray:
        """Matriz indicadora (B, Σa_i) de los atributos de cada combinación"""
        combinations = np.asarray(combinations, dtype=np.int64)
        design = np.zeros((len(combinations), self.schema.total_values))
        np.put_along_axis(design, combinations + self._offsets, 1.0, axis=1)
        return design

    def logits(self, combinations: np.ndarray) -> np.ndarray:
        return self.design(combinations) @ self.theta + self.phi

    def probabilities(self, combinations: np.ndarray) -> np.ndarray:
        return softmax(self.logits(combinations), axis=1)

    # ------------------------------------------------------------------
    # Término auxiliar: coseno medio entre filas de un mismo aspecto
    # ------------------------------------------------------------------

    def _row_pairs(self) -> List[Tuple[int, int]]:
        pairs = []
        for offset, size in zip(self.schema.offsets, self.schema.sizes):
            pairs.extend((offset + s, offset + t) for s in range(size) for t in range(s + 1, size))
        return pairs

    def aux_loss_and_grad(self, theta: Optional[np.ndarray] = None) -> Tuple[float, np.ndarray]:
        theta = self.theta if theta is None else theta
        pairs = self._row_pairs()
        norms = np.sqrt(np.sum(theta * theta, axis=1) + self.aux_eps)
        total, grad = 0.0, np.zeros_like(theta)
        for s, t in pairs:
            dot = float(theta[s] @ theta[t])
            denom = norms[s] * norms[t]
            total += dot / denom
            grad[s] += theta[t] / denom - dot * theta[s] / (norms[s] ** 3 * norms[t])
            grad[t] += theta[s] / denom - dot * theta[t] / (norms[t] ** 3 * norms[s])
        return total / len(pairs), grad / len(pairs)

    @staticmethod
    def _cosine_grad_derivative(x, y, nx, ny, ux, uy) -> np.ndarray:
        """Derivada direccional de ∂cos(x, y)/∂x a lo largo de (ux, uy)"""
        dot = float(x @ y)
        ddot = float(ux @ y + x @ uy)
        dnx = float(x @ ux) / nx
        dny = float(y @ uy) / ny
        inv = 1.0 / (nx * ny)
        inv3 = 1.0 / (nx ** 3 * ny)
        dinv = -inv * (dnx / nx + dny / ny)
        dinv3 = -inv3 * (3.0 * dnx / nx + dny / ny)
        return uy * inv + y * dinv - (ddot * x + dot * ux) * inv3 - dot * x * dinv3

    def aux_hvp(self, vector: np.ndarray, theta: Optional[np.ndarray] = None) -> np.ndarray:
        """Producto Hessiano-vector exacto del término auxiliar"""
        theta = self.theta if theta is None else theta
        pairs = self._row_pairs()
        norms = np.sqrt(np.sum(theta * theta, axis=1) + self.aux_eps)
        result = np.zeros_like(theta)
        for s, t in pairs:
            result[s] += self._cosine_grad_derivative(theta[s], theta[t], norms[s], norms[t], vector[s], vector[t])
            result[t] += self._cosine_grad_derivative(theta[t], theta[s], norms[t], norms[s], vector[t], vector[s])
        return result / len(pairs)

    # ------------------------------------------------------------------
    # Pérdida, gradiente y producto Hessiano-vector
    # ------------------------------------------------------------------

    def loss_and_grad(self, batch: TokenBatch) -> Tuple[float, np.ndarray]:
        """
        NLL media por secuencia y su gradiente exacto respecto a θ.

        Para una secuencia con conteos n y longitud L:
        NLL = −n·z + L·logsumexp(z), ∂NLL/∂z = L·p − n.
        """
        design = self.design(batch.combinations)
        z = design @ self.theta + self.phi
        lengths = batch.lengths
        nll = -np.sum(batch.counts * z, axis=1) + lengths * logsumexp(z, axis=1)
        residual = lengths[:, None] * softmax(z, axis=1) - batch.counts
        loss = float(np.mean(nll))
        grad = design.T @ residual / len(batch)
        if self.aux_weight:
            aux, aux_grad = self.aux_loss_and_grad()
            loss += self.aux_weight * aux
            grad = grad + self.aux_weight * aux_grad
        return loss, grad

    def loss(self, batch: TokenBatch) -> float:
        return self.loss_and_grad(batch)[0]

    def hvp(self, batch: TokenBatch, vector: np.ndarray) -> np.ndarray:
        """
        Producto Hessiano-vector H·u exacto.

        Con DZ = A·u: H·u = (1/B) Aᵀ [L (p⊙DZ − p·Σ(p⊙DZ))], más el término
        auxiliar ponderado (aux_hvp).
        """
        design = self.design(batch.combinations)
        p = softmax(design @ self.theta + self.phi, axis=1)
        dz = design @ vector
        pdz = p * dz
        dresidual = batch.lengths[:, None] * (pdz - p * pdz.sum(axis=1, keepdims=True))
        result = design.T @ dresidual / len(batch)
        if self.aux_weight:
            result = result + self.aux_weight * self.aux_hvp(vector)
        return result


class QuadraticModel:
    """
    Sustituto escalar L(θ) = ½·Σθ², independiente del lote.
    Cumple la misma interfaz que ToyGenModel para los pasos de entrenamiento.
    """

    def __init__(self, theta):
        self.theta = np.array(theta, dtype=np.float64)

    def with_theta(self, theta: np.ndarray) -> "QuadraticModel":
        return QuadraticModel(theta)

    def loss_and_grad(self, batch=None) -> Tuple[float, np.ndarray]:
        return 0.5 * float(np.sum(self.theta ** 2)), self.theta.copy()

    def loss(self, batch=None) -> float:
        return self.loss_and_grad(batch)[0]

    def hvp(self, batch, vector: np.ndarray) -> np.ndarray:
        return np.array(vector, dtype=np.float64)


class TrainConfig(BaseModel):
    """
    Hiperparámetros de entrenamiento. Si no se indica beta_lr se usa alpha_lr.
    """
    model_config = ConfigDict(frozen=True)

    alpha_lr: float = Field(default=DEFAULT_ALPHA_LR, gt=0.0)
    beta_lr: Optional[float] = Field(default=None, gt=0.0)
    lambda_weight: float = Field(default=DEFAULT_LAMBDA, ge=0.0)
    batch_size: int = Field(default=16, ge=1)
    pcomp_size: Optional[int] = Field(default=None, ge=1)
    steps: int = Field(default=300, ge=0)
    seed: int = DEFAULT_SEED
    aux_loss_weight: float = Field(default=0.0, ge=0.0)
    second_order: bool = True
    log_every: int = Field(default=50, ge=1)

    @model_validator(mode="before")
    @classmethod
    def _defaults(cls, data):
        if isinstance(data, dict):
            data = dict(data)
            if data.get("beta_lr") is None:
                data["beta_lr"] = data.get("alpha_lr", DEFAULT_ALPHA_LR)
            if data.get("pcomp_size") is None:
                data["pcomp_size"] = data.get("batch_size", 16)
        return data


class ScenarioConfig(BaseModel):
    """Escenario sintético: tokens plantados por atributo más tokens de relleno"""
    model_config = ConfigDict(frozen=True)

    sizes: Tuple[int, ...] = (2, 2, 2)
    tokens_per_value: int = Field(default=1, ge=1)
    filler_tokens: int = Field(default=4, ge=0)
    sequence_length: int = Field(default=16, ge=1)
    noise: float = Field(default=0.1, ge=0.0, lt=1.0)
    records_per_combination: int = Field(default=50, ge=1)
    seed: int = DEFAULT_SEED

    @model_validator(mode="after")
    def _check_sizes(self):
        if len(self.sizes) < 2 or any(size < 2 for size in self.sizes):
            raise ValueError(f"se necesitan al menos 2 aspectos de tamaño ≥ 2, se recibió {self.sizes}")
        return self


class SyntheticScenario:
    """
    Corpus sintético: cada valor de atributo tiene sus propios tokens plantados
    y cada secuencia mezcla los tokens de los atributos de su combinación con
    ruido uniforme sobre todo el vocabulario.
    """

    def __init__(self, config: ScenarioConfig, split: Split, planted: Dict[Tuple[int, int], np.ndarray],
                 vocab_size: int, records: List[LabeledRecord]):
        self.config = config
        self.split = split
        self.planted = planted
        self.vocab_size = vocab_size
        self.records = records

    @property
    def schema(self) -> AttributeSchema:
        return self.split.attribute_schema

    def emission(self, combination: Sequence[int]) -> np.ndarray:
        """Distribución de tokens de una combinación"""
        m = len(combination)
        distribution = np.full(self.vocab_size, self.config.noise / self.vocab_size)
        for aspect, value in enumerate(combination):
            tokens = self.planted[(aspect, value)]
            distribution[tokens] += (1.0 - self.config.noise) / (m * len(tokens))
        return distribution


class StepReport(BaseModel):
    """Métricas de un paso de entrenamiento"""
    step: int
    loss_train: float
    loss_pcomp: Optional[float] = None
    pcomp_size: int = 0
    id_accuracy: Optional[float] = None
    comp_accuracy: Optional[float] = None


class TrainerReport(BaseModel):
    id_accuracy: float
    comp_accuracy: float
    gap: Optional[float] = None
    final_loss: float
    fallback_steps: int = 0


class ExperimentReport(BaseModel):
    """Resultado de entrenar ambos entrenadores sobre el mismo escenario"""
    meta: TrainerReport
    baseline: TrainerReport
    train_config: TrainConfig
    scenario_config: ScenarioConfig
    id_combinations: List[List[str]]
    comp_combinations: List[List[str]]
