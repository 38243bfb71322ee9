import json
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from errors import CompSplitError, NoPseudoCompCandidates, PoolExhausted
from meta_training.models import (
    ExperimentReport,
    ScenarioConfig,
    StepReport,
    SyntheticScenario,
    TokenBatch,
    ToyGenModel,
    TrainConfig,
    TrainerReport,
)
from protocols.models import AcdSearchConfig
from protocols.utils import acd_splits
from sampler.models import Batch, LabeledRecord
from sampler.utils import recombination_closure, sample_pcomp_batch
from schema_module.models import AttributeSchema, CombinationSet, Split
from schema_module.utils import full_product
from stats.utils import protocol_gap
from utils import get_logger, progress

logger = get_logger(__name__)


# ============================================================================
# PÉRDIDAS Y PASOS
# ============================================================================

def train_loss(model, batch: TokenBatch) -> Tuple[float, np.ndarray]:
    """
    Pérdida de entrenamiento L_train(θ; B) y su gradiente respecto a θ.

    Args:
        model: ToyGenModel (o cualquier modelo con loss_and_grad)
        batch: Lote de secuencias

    Returns:
        (pérdida, gradiente)
    """
    return model.loss_and_grad(batch)


def inner_update(model, batch: TokenBatch, alpha_lr: float):
    """θ1 = θ − α∇L_train(θ; B) en una copia; θ no se modifica"""
    _, grad = model.loss_and_grad(batch)
    return model.with_theta(model.theta - alpha_lr * grad)


def pseudo_comp_loss(model, train_batch: TokenBatch, pcomp_batch: TokenBatch, alpha_lr: float) -> float:
    """
    Pérdida pseudo-composicional: L_train(θ1; B_pcomp) con θ1 tras un paso
    de descenso sobre B_train.
    """
    return inner_update(model, train_batch, alpha_lr).loss(pcomp_batch)


def meta_objective(model, train_batch: TokenBatch, pcomp_batch: TokenBatch, config: TrainConfig) -> float:
    """L_train(θ; B_train) + λ·L_train(θ1(θ); B_pcomp)"""
    return model.loss(train_batch) + config.lambda_weight * pseudo_comp_loss(
        model, train_batch, pcomp_batch, config.alpha_lr
    )


def meta_gradient(model, train_batch: TokenBatch, pcomp_batch: TokenBatch,
                  config: TrainConfig) -> Tuple[np.ndarray, float, float]:
    """
    Gradiente del objetivo meta respecto a θ, derivando a través de θ1:
    ∇L_train(θ) + λ(I − α·H_train(θ))·∇L_train(θ1; B_pcomp).
    Con second_order=False se omite el término del Hessiano.

    Returns:
        (gradiente, L_train, L_pcomp)
    """
    loss_train, grad_train = model.loss_and_grad(train_batch)
    inner = model.with_theta(model.theta - config.alpha_lr * grad_train)
    loss_pcomp, grad_pcomp = inner.loss_and_grad(pcomp_batch)

    outer = grad_pcomp
    if config.second_order:
        outer = grad_pcomp - config.alpha_lr * model.hvp(train_batch, grad_pcomp)
    return grad_train + config.lambda_weight * outer, loss_train, loss_pcomp


def meta_step(model, train_batch: TokenBatch, pcomp_batch: TokenBatch, config: TrainConfig,
              step: int = 0):
    """
    Un paso Meta-MCTG: θ′ = θ − β·∇θ[L_train(θ) + λ·L_train(θ1(θ); B_pcomp)].

    Returns:
        (modelo actualizado, StepReport)
    """
    grad, loss_train, loss_pcomp = meta_gradient(model, train_batch, pcomp_batch, config)
    report = StepReport(step=step, loss_train=loss_train, loss_pcomp=loss_pcomp, pcomp_size=len(pcomp_batch))
    return model.with_theta(model.theta - config.beta_lr * grad), report


def baseline_step(model, train_batch: TokenBatch, config: TrainConfig, step: int = 0):
    """Paso de descenso simple θ′ = θ − β·∇L_train(θ)"""
    loss_train, grad = model.loss_and_grad(train_batch)
    return model.with_theta(model.theta - config.beta_lr * grad), StepReport(step=step, loss_train=loss_train)


def finite_difference_gradient(fn: Callable[[np.ndarray], float], theta: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """
    Gradiente por diferencias centradas de fn en θ, coordenada a coordenada.

    Args:
        fn: Función θ -> escalar
        theta: Punto de evaluación (no se modifica)
        eps: Paso

    Returns:
        Arreglo con la forma de θ
    """
    theta = np.array(theta, dtype=np.float64)
    grad = np.zeros_like(theta)
    for index in np.ndindex(theta.shape):
        shifted = theta.copy()
        shifted[index] = theta[index] + eps
        plus = fn(shifted)
        shifted[index] = theta[index] - eps
        minus = fn(shifted)
        grad[index] = (plus - minus) / (2 * eps)
    return grad


def relative_error(actual: np.ndarray, expected: np.ndarray) -> float:
    scale = max(np.linalg.norm(expected), np.linalg.norm(actual), 1e-12)
    return float(np.linalg.norm(actual - expected) / scale)


def check_meta_gradient(model, train_batch: TokenBatch, pcomp_batch: TokenBatch, config: TrainConfig,
                        eps: float = 1e-6) -> float:
    """Error relativo entre meta_gradient y las diferencias finitas del objetivo meta"""
    analytic, _, _ = meta_gradient(model, train_batch, pcomp_batch, config)
    numeric = finite_difference_gradient(
        lambda theta: meta_objective(model.with_theta(theta), train_batch, pcomp_batch, config),
        model.theta,
        eps,
    )
    return relative_error(analytic, numeric)


def attribute_row_distances(model: ToyGenModel) -> Dict[str, np.ndarray]:
    """
    Distancias coseno (1 − cos) entre las filas de θ de los valores de cada aspecto.

    Returns:
        Mapa nombre de aspecto -> matriz (a_i, a_i)
    """
    result = {}
    for aspect, offset, size in zip(model.schema.aspects, model.schema.offsets, model.schema.sizes):
        rows = model.theta[offset:offset + size]
        norms = np.linalg.norm(rows, axis=1)
        norms = np.where(norms > 0, norms, 1.0)
        cosine = (rows @ rows.T) / np.outer(norms, norms)
        distances = 1.0 - cosine
        np.fill_diagonal(distances, 0.0)
        result[aspect.name] = distances
    return result


# ============================================================================
# ESCENARIO SINTÉTICO
# ============================================================================

def default_split(schema: AttributeSchema, seed: int) -> Split:
    """Primera división de máxima divergencia encontrada para el esquema"""
    config = AcdSearchConfig(eta_threshold=1e-9, rng_seed=seed, only_optimal=True, t1_restarts=50)
    bundle = acd_splits(full_product(schema), config)
    if not bundle.splits:
        raise CompSplitError(bundle.diagnostic or "no se encontró una división para el escenario")
    return bundle.splits[0]


def build_scenario(config: ScenarioConfig, split: Optional[Split] = None) -> SyntheticScenario:
    """
    Genera el escenario: tokens plantados por valor de atributo y un pool de
    registros sólo para las combinaciones en distribución.

    Args:
        config: Parámetros del escenario
        split: División a usar (por defecto, una de máxima divergencia)

    Returns:
        SyntheticScenario
    """
    schema = AttributeSchema.from_sizes(config.sizes)
    if split is None:
        split = default_split(schema, config.seed)
    elif split.attribute_schema.sizes != schema.sizes:
        raise CompSplitError(f"la división tiene forma {split.attribute_schema.sizes}, el escenario {schema.sizes}")

    planted, next_token = {}, 0
    for aspect, size in enumerate(schema.sizes):
        for value in range(size):
            planted[(aspect, value)] = np.arange(next_token, next_token + config.tokens_per_value)
            next_token += config.tokens_per_value
    vocab_size = next_token + config.filler_tokens

    scenario = SyntheticScenario(config, split, planted, vocab_size, records=[])
    rng = np.random.default_rng(config.seed)
    for combination in split.id_set:
        distribution = scenario.emission(combination)
        for _ in range(config.records_per_combination):
            tokens = rng.choice(vocab_size, size=config.sequence_length, p=distribution)
            scenario.records.append(LabeledRecord(combination=combination, text=" ".join(f"w{t}" for t in tokens)))
    return scenario


def attribute_accuracy(model: ToyGenModel, scenario: SyntheticScenario, combinations: CombinationSet) -> float:
    """
    Precisión de decodificación de atributos (%): para cada aspecto se predice
    el valor cuyos tokens plantados acumulan más probabilidad (empates al primero).
    """
    members = np.array(combinations.sorted(), dtype=np.int64)
    probabilities = model.probabilities(members)
    correct, total = 0, 0
    for aspect, size in enumerate(scenario.schema.sizes):
        mass = np.stack([probabilities[:, scenario.planted[(aspect, value)]].sum(axis=1) for value in range(size)], axis=1)
        correct += int(np.sum(np.argmax(mass, axis=1) == members[:, aspect]))
        total += len(members)
    return 100.0 * correct / total


def admits_pseudo_comp(split: Split) -> bool:
    """
    True si algún lote de combinaciones en distribución tiene candidatos
    pseudo-composicionales presentes en el pool: alguna c ∈ C_id está en la
    clausura de C_id \\ {c}.
    """
    members = split.id_set.members
    for combination in members:
        rest = members - {combination}
        if rest and combination in recombination_closure(rest):
            return True
    return False


# ============================================================================
# ENTRENAMIENTO
# ============================================================================

def _sample_train(pool: Sequence[LabeledRecord], size: int, rng: np.random.Generator) -> List[LabeledRecord]:
    if size >= len(pool):
        return list(pool)
    return [pool[i] for i in rng.choice(len(pool), size=size, replace=False)]


def train(scenario: SyntheticScenario, config: TrainConfig, meta: bool,
          log: Optional[List[StepReport]] = None) -> Tuple[ToyGenModel, TrainerReport]:
    """
    Entrena desde θ = 0 con el entrenador meta o el de referencia.

    Los lotes de entrenamiento y los pseudo-composicionales usan generadores
    separados, de modo que ambos entrenadores ven la misma secuencia de lotes.
    Si en un paso no hay candidatos pseudo-composicionales, el entrenador meta
    da un paso simple.

    Args:
        scenario: Escenario sintético
        config: Hiperparámetros
        meta: True para Meta-MCTG, False para el entrenador de referencia
        log: Lista donde acumular los StepReport (opcional)

    Returns:
        (modelo final, TrainerReport)
    """
    model = ToyGenModel.zeros(scenario.schema, scenario.vocab_size, aux_weight=config.aux_loss_weight)
    batch_rng = np.random.default_rng([config.seed, 0])
    pcomp_rng = np.random.default_rng([config.seed, 1])
    pool = scenario.records
    fallback_steps = 0
    loss = float("nan")

    label = "meta" if meta else "baseline"
    for step in progress(range(config.steps), total=config.steps, desc=label):
        records = _sample_train(pool, config.batch_size, batch_rng)
        train_batch = TokenBatch.from_records(records, scenario.vocab_size)

        report = None
        if meta:
            try:
                pcomp = sample_pcomp_batch(Batch(records=records), pool, config.pcomp_size, pcomp_rng)
            except (NoPseudoCompCandidates, PoolExhausted):
                fallback_steps += 1
            else:
                pcomp_batch = TokenBatch.from_records(pcomp.records, scenario.vocab_size)
                model, report = meta_step(model, train_batch, pcomp_batch, config, step)
        if report is None:
            model, report = baseline_step(model, train_batch, config, step)
        loss = report.loss_train

        if log is not None:
            if (step + 1) % config.log_every == 0 or step + 1 == config.steps:
                report = report.model_copy(update={
                    "id_accuracy": attribute_accuracy(model, scenario, scenario.split.id_set),
                    "comp_accuracy": attribute_accuracy(model, scenario, scenario.split.comp_set),
                })
            log.append(report)

    id_accuracy = attribute_accuracy(model, scenario, scenario.split.id_set)
    comp_accuracy = attribute_accuracy(model, scenario, scenario.split.comp_set)
    if fallback_steps:
        logger.warning(f"⚠️ {label}: {fallback_steps} pasos sin lote pseudo-composicional")
    return model, TrainerReport(
        id_accuracy=id_accuracy,
        comp_accuracy=comp_accuracy,
        gap=protocol_gap(id_accuracy, comp_accuracy) if id_accuracy > 0 else None,
        final_loss=loss,
        fallback_steps=fallback_steps,
    )


def run_experiment(scenario: SyntheticScenario, config: TrainConfig,
                   logs: Optional[Dict[str, List[StepReport]]] = None) -> ExperimentReport:
    """
    Entrena el entrenador meta y el de referencia desde la misma inicialización
    y compara precisión en distribución, composicional y brecha.

    Raises:
        NoPseudoCompCandidates: Si la división no admite lotes pseudo-composicionales
    """
    if not admits_pseudo_comp(scenario.split):
        raise NoPseudoCompCandidates(
            "no pseudo-comp candidates: la división no admite lotes pseudo-composicionales (p. ej. Few-Shot)"
        )

    logger.info(f"🚀 Experimento: {config.steps} pasos, λ={config.lambda_weight}, α={config.alpha_lr}, β={config.beta_lr}")
    meta_log = logs.setdefault("meta", []) if logs is not None else None
    baseline_log = logs.setdefault("baseline", []) if logs is not None else None
    _, meta_report = train(scenario, config, meta=True, log=meta_log)
    _, baseline_report = train(scenario, config, meta=False, log=baseline_log)
    logger.info(
        f"✅ comp: meta {meta_report.comp_accuracy:.2f}% vs baseline {baseline_report.comp_accuracy:.2f}%"
    )

    schema = scenario.schema
    return ExperimentReport(
        meta=meta_report,
        baseline=baseline_report,
        train_config=config,
        scenario_config=scenario.config,
        id_combinations=[schema.decode(c) for c in scenario.split.id_set],
        comp_combinations=[schema.decode(c) for c in scenario.split.comp_set],
    )


def write_step_log(logs: Dict[str, List[StepReport]], path) -> None:
    """Un registro JSON por línea: trainer, step, loss_train, loss_pcomp, id/comp accuracy"""
    with open(path, "w", encoding="utf-8") as handle:
        for trainer, reports in logs.items():
            for report in reports:
                handle.write(json.dumps({"trainer": trainer, **report.model_dump()}, ensure_ascii=False) + "\n")


def write_summary(report: ExperimentReport, path) -> None:
    Path(path).write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
