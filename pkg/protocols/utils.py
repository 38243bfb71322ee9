import itertools
import math
from typing import Dict, List, Optional, Tuple

import numpy as np

from config import DEFAULT_ALPHA, DEFAULT_SEED, REJECTION_BUDGET
from divergence_module.utils import CompoundIndex, compound_divergence
from errors import SplitConstructionError, RejectionBudgetExhausted
from protocols.models import AcdSearchConfig, Objective, SplitBundle
from schema_module.models import AttributeSchema, Combination, CombinationSet, Protocol, Split
from schema_module.utils import combination_sets, is_eligible_split
from utils import get_logger, run_in_pool, spawn_rngs

logger = get_logger(__name__)

# Tolerancia para comparar divergencias (mejoras estrictas y empates)
TOLERANCE = 1e-12

# Elementos máximos de los arreglos temporales al evaluar intercambios
_CHUNK_ELEMENTS = 2_000_000


def expected_id_size(n_records: int, schema: AttributeSchema, protocol: Protocol) -> float:
    """
    Número esperado de registros de entrenamiento (en distribución) cuando
    cada combinación aporta la misma cantidad de datos.

    Args:
        n_records: Tamaño del corpus
        schema: Esquema de atributos
        protocol: Protocolo de división

    Returns:
        N·(|C|−1)/|C| para Hold-Out, N/2 para ACD / Random / MinDiv,
        N·M/|C| para Few-Shot y N para Original
    """
    total = schema.product_size
    if protocol == Protocol.HOLDOUT:
        return n_records * (total - 1) / total
    if protocol in (Protocol.ACD, Protocol.RANDOM, Protocol.MINDIV):
        return n_records / 2
    if protocol == Protocol.FEWSHOT:
        return n_records * max(schema.sizes) / total
    return float(n_records)


def balanced_split_count(n_combinations: int) -> int:
    """Particiones balanceadas (ordenadas) de un conjunto de n combinaciones; 0 si n es impar"""
    if n_combinations % 2:
        return 0
    return math.comb(n_combinations, n_combinations // 2)


def _require_full_product(full: CombinationSet) -> None:
    if len(full) != full.schema.product_size:
        raise SplitConstructionError(
            f"se esperaba el producto cartesiano completo ({full.schema.product_size} combinaciones), "
            f"se recibieron {len(full)}"
        )


def _make_split(full: CombinationSet, id_members, protocol: Protocol, alpha: float, seed: int) -> Split:
    id_set, comp_set = combination_sets(full, id_members)
    return Split(
        protocol=protocol,
        id_set=id_set,
        comp_set=comp_set,
        divergence=compound_divergence(id_set, comp_set, alpha),
        seed=seed,
    )


# ============================================================================
# HOLD-OUT
# ============================================================================

def holdout_splits(full: CombinationSet, k: int = 1, alpha: float = DEFAULT_ALPHA, seed: int = DEFAULT_SEED) -> SplitBundle:
    """
    Protocolo Hold-Out: cada k-subconjunto elegible de C se reserva como C_comp.

    Args:
        full: Conjunto C
        k: Combinaciones reservadas por división
        alpha: Exponente de Chernoff para la divergencia reportada
        seed: Semilla registrada en cada división

    Returns:
        SplitBundle con una división por subconjunto elegible

    Raises:
        SplitConstructionError: Si k < 1, k ≥ |C| o ningún subconjunto es elegible
    """
    if k < 1:
        raise SplitConstructionError(f"--k debe ser ≥ 1 (k={k}); para no reservar nada use el protocolo original")
    if k >= len(full):
        raise SplitConstructionError(f"--k={k} debe ser menor que |C|={len(full)}")

    splits = []
    for held_out in itertools.combinations(full.sorted(), k):
        comp_set = full.with_members(held_out)
        id_set = full.difference(comp_set)
        if not is_eligible_split(full, id_set, comp_set).eligible:
            continue
        splits.append(Split(
            protocol=Protocol.HOLDOUT,
            id_set=id_set,
            comp_set=comp_set,
            divergence=compound_divergence(id_set, comp_set, alpha),
            seed=seed,
        ))

    if not splits:
        raise SplitConstructionError(f"ningún subconjunto de tamaño {k} deja una división elegible")

    logger.info(f"✅ Hold-Out: {len(splits)} divisiones (k={k})")
    return SplitBundle(
        splits=splits,
        protocol=Protocol.HOLDOUT,
        attribute_schema=full.schema,
        config={"k": k, "alpha": alpha, "seed": seed},
    )


# ============================================================================
# BÚSQUEDA POR INTERCAMBIOS (ACD / MINDIV)
# ============================================================================

class _SwapSearch:
    """
    Estado compartido por los reinicios de la búsqueda por intercambios.

    Cada combinación de C se representa por su fila en dos matrices one-hot:
    pares de atributos (para los conteos de compuestos) y valores de atributo
    (para la cláusula de cobertura). Un intercambio id<->comp se evalúa con
    sumas y restas de filas.
    """

    def __init__(self, full: CombinationSet, config: AcdSearchConfig):
        self.full = full
        self.config = config
        self.members: Tuple[Combination, ...] = full.sorted()
        self.n = len(self.members)
        self.half = self.n // 2
        self.index = CompoundIndex(full.schema)

        array = np.array(self.members, dtype=np.int64)
        self.pair_rows = self.index.batch_counts(array[:, None, :])
        offsets = np.array(full.schema.offsets, dtype=np.int64)
        self.value_rows = np.zeros((self.n, full.schema.total_values), dtype=np.int64)
        np.put_along_axis(self.value_rows, array + offsets, 1, axis=1)

        self.sign = 1.0 if config.objective == Objective.MAXIMIZE else -1.0

    def _eligible(self, id_values: np.ndarray, comp_values: np.ndarray) -> np.ndarray:
        return np.all((comp_values == 0) | (id_values > 0), axis=-1)

    def random_start(self, rng: np.random.Generator) -> np.ndarray:
        """Máscara de una división balanceada y elegible, por rechazo"""
        for _ in range(REJECTION_BUDGET):
            mask = np.zeros(self.n, dtype=bool)
            mask[rng.permutation(self.n)[: self.half]] = True
            if self._eligible(self.value_rows[mask].sum(axis=0), self.value_rows[~mask].sum(axis=0)):
                return mask
        raise RejectionBudgetExhausted(
            f"no se encontró una división balanceada elegible en {REJECTION_BUDGET} intentos"
        )

    def divergence(self, mask: np.ndarray) -> float:
        return self.index.divergence_from_counts(
            self.pair_rows[mask].sum(axis=0), self.half,
            self.pair_rows[~mask].sum(axis=0), self.n - self.half,
            self.config.alpha,
        )

    def best_swap(self, mask: np.ndarray, current: float, rng: np.random.Generator) -> Optional[Tuple[int, int, float]]:
        """
        Mejor intercambio (c ∈ id, d ∈ comp) que mejora estrictamente el objetivo
        y deja una división elegible. None si no existe.
        """
        id_rows = np.flatnonzero(mask)
        comp_rows = np.flatnonzero(~mask)
        id_counts = self.pair_rows[id_rows].sum(axis=0)
        comp_counts = self.pair_rows[comp_rows].sum(axis=0)
        id_values = self.value_rows[id_rows].sum(axis=0)
        comp_values = self.value_rows[comp_rows].sum(axis=0)

        width = len(comp_rows) * max(self.index.size, self.value_rows.shape[1])
        chunk = max(1, _CHUNK_ELEMENTS // max(1, width))

        target = self.sign * current + TOLERANCE
        best_score = -np.inf
        candidates: List[Tuple[int, int]] = []
        for start in range(0, len(id_rows), chunk):
            block = id_rows[start:start + chunk]
            out_pairs = self.pair_rows[block][:, None, :]
            in_pairs = self.pair_rows[comp_rows][None, :, :]
            scores = self.sign * self.index.batch_divergence(
                id_counts - out_pairs + in_pairs, self.half,
                comp_counts + out_pairs - in_pairs, self.n - self.half,
                self.config.alpha,
            )
            out_values = self.value_rows[block][:, None, :]
            in_values = self.value_rows[comp_rows][None, :, :]
            eligible = self._eligible(id_values - out_values + in_values, comp_values + out_values - in_values)
            scores = np.where(eligible & (scores > target), scores, -np.inf)

            block_best = scores.max()
            if not np.isfinite(block_best):
                continue
            if block_best > best_score + TOLERANCE:
                best_score, candidates = block_best, []
            if block_best >= best_score - TOLERANCE:
                rows, cols = np.nonzero(scores >= best_score - TOLERANCE)
                candidates.extend((int(block[r]), int(comp_rows[c])) for r, c in zip(rows, cols))

        if not candidates:
            return None
        out_row, in_row = candidates[int(rng.integers(len(candidates)))]
        return out_row, in_row, float(self.sign * best_score)

    def restart(self, rng: np.random.Generator) -> Tuple[frozenset, List[float]]:
        """Un reinicio: inicio aleatorio y hasta T2 pasadas de mejora"""
        mask = self.random_start(rng)
        current = self.divergence(mask)
        trajectory = [current]
        for _ in range(self.config.t2_steps):
            move = self.best_swap(mask, current, rng)
            if move is None:
                break
            out_row, in_row, _ = move
            mask[out_row], mask[in_row] = False, True
            current = self.divergence(mask)
            trajectory.append(current)
        return frozenset(self.members[r] for r in np.flatnonzero(mask)), trajectory


def acd_splits(full: CombinationSet, config: AcdSearchConfig) -> SplitBundle:
    """
    Divisiones de máxima divergencia de compuestos (ACD) por hill climbing con reinicios.

    Cada reinicio parte de una división balanceada y elegible al azar y aplica
    el mejor intercambio id<->comp mientras mejore estrictamente la divergencia,
    hasta T2 pasadas. Con objective=minimize se obtiene la línea base de mínima
    divergencia (protocolo mindiv).

    Args:
        full: Conjunto C (|C| par)
        config: Parámetros de la búsqueda

    Returns:
        SplitBundle con las divisiones que superan η, sin duplicados. Si ninguna
        lo supera, el bundle va vacío y con diagnostic.

    Raises:
        SplitConstructionError: Si |C| es impar o no hay divisiones balanceadas elegibles
    """
    protocol = Protocol.ACD if config.objective == Objective.MAXIMIZE else Protocol.MINDIV
    if len(full) % 2:
        raise SplitConstructionError(f"|C|={len(full)} es impar: no existe una división balanceada")
    if full.schema.m == 2 and protocol == Protocol.ACD:
        logger.warning("⚠️ Con dos aspectos la divergencia apenas se puede optimizar; el benchmark usa Few-Shot en su lugar")

    logger.info(f"🚀 Búsqueda {protocol.value}: T1={config.t1_restarts}, T2={config.t2_steps}, η={config.eta_threshold}")
    search = _SwapSearch(full, config)
    rngs = spawn_rngs(config.rng_seed, config.t1_restarts)
    results = run_in_pool(search.restart, rngs, config.threads)

    finals: Dict[frozenset, float] = {}
    for id_members, _ in results:
        if id_members not in finals:
            id_set, comp_set = combination_sets(full, id_members)
            finals[id_members] = compound_divergence(id_set, comp_set, config.alpha)

    sign = search.sign
    best = max(finals.values(), key=lambda d: sign * d)
    if config.objective == Objective.MAXIMIZE:
        kept = {key: d for key, d in finals.items() if d >= config.eta_threshold}
    else:
        kept = {key: d for key, d in finals.items() if d <= config.eta_threshold}
    if config.only_optimal:
        kept = {key: d for key, d in kept.items() if abs(d - best) <= TOLERANCE}

    ordered = sorted(kept.items(), key=lambda item: (-sign * item[1], sorted(item[0])))
    splits = [
        Split(
            protocol=protocol,
            id_set=full.with_members(id_members),
            comp_set=full.with_members(full.members - id_members),
            divergence=divergence,
            seed=config.rng_seed,
        )
        for id_members, divergence in ordered
    ]

    diagnostic = None
    if not splits:
        bound = "≥" if config.objective == Objective.MAXIMIZE else "≤"
        diagnostic = f"ninguna división con D {bound} η={config.eta_threshold}; mejor divergencia encontrada {best:.6f}"
        logger.warning(f"⚠️ {diagnostic}")
    else:
        logger.info(f"✅ {len(splits)} divisiones {protocol.value}, mejor D={best:.6f}")

    return SplitBundle(
        splits=splits,
        protocol=protocol,
        attribute_schema=full.schema,
        config=config.snapshot(),
        best_divergence=best,
        diagnostic=diagnostic,
        trajectories=[trajectory for _, trajectory in results],
    )


def mindiv_splits(full: CombinationSet, config: AcdSearchConfig) -> SplitBundle:
    """Línea base de mínima divergencia: la misma búsqueda que ACD minimizando D"""
    return acd_splits(full, config.model_copy(update={"objective": Objective.MINIMIZE}))


# ============================================================================
# FEW-SHOT
# ============================================================================

def _surjections(n_slots: int, n_values: int) -> np.ndarray:
    """Todas las asignaciones sobreyectivas {0..n_slots−1} -> {0..n_values−1}"""
    rows = [row for row in itertools.product(range(n_values), repeat=n_slots) if len(set(row)) == n_values]
    return np.array(rows, dtype=np.int64).reshape(len(rows), n_slots)


def _surjection_count(n_slots: int, n_values: int) -> int:
    # Inclusión-exclusión
    return sum((-1) ** j * math.comb(n_values, j) * (n_values - j) ** n_slots for j in range(n_values + 1))


def minimal_cover_count(schema: AttributeSchema) -> int:
    """Número de coberturas mínimas (|C_id| = M) del producto completo"""
    size = max(schema.sizes)
    anchor = schema.sizes.index(size)
    return math.prod(_surjection_count(size, a) for i, a in enumerate(schema.sizes) if i != anchor)


class _CoverSearch:
    """
    Coberturas mínimas del producto completo.

    Con M = max a_i, una cobertura tiene exactamente M miembros y el aspecto
    ancla (el primero de tamaño M) toma un valor distinto en cada uno; el resto
    de aspectos queda descrito por una sobreyección miembro -> valor.
    """

    def __init__(self, full: CombinationSet, config: AcdSearchConfig):
        schema = full.schema
        self.full = full
        self.config = config
        self.size = max(schema.sizes)
        self.anchor = schema.sizes.index(self.size)
        self.free = [i for i in range(schema.m) if i != self.anchor]
        self.index = CompoundIndex(schema)
        self.total_counts = self.index.counts(full.members)
        self.n_comp = len(full) - self.size

    def assemble(self, assignments: np.ndarray) -> np.ndarray:
        """(B, len(free), M) asignaciones -> (B, M, m) combinaciones"""
        batch = assignments.shape[0]
        members = np.empty((batch, self.size, self.full.schema.m), dtype=np.int64)
        members[:, :, self.anchor] = np.arange(self.size)
        for slot, aspect in enumerate(self.free):
            members[:, :, aspect] = assignments[:, slot, :]
        return members

    def divergences(self, assignments: np.ndarray) -> np.ndarray:
        id_counts = self.index.batch_counts(self.assemble(assignments))
        return self.index.batch_divergence(
            id_counts, self.size, self.total_counts[None, :] - id_counts, self.n_comp, self.config.alpha
        )

    def enumerate(self) -> List[Tuple[np.ndarray, float]]:
        options = [_surjections(self.size, self.full.schema.sizes[aspect]) for aspect in self.free]
        grids = np.meshgrid(*[np.arange(len(o)) for o in options], indexing="ij")
        picks = np.stack([g.ravel() for g in grids], axis=1)

        best, found = -np.inf, []
        chunk = max(1, _CHUNK_ELEMENTS // max(1, self.size * self.index.size))
        for start in range(0, len(picks), chunk):
            block = picks[start:start + chunk]
            assignments = np.stack([options[s][block[:, s]] for s in range(len(options))], axis=1)
            scores = self.divergences(assignments)
            block_best = scores.max()
            if block_best > best + TOLERANCE:
                best, found = block_best, []
            if block_best >= best - TOLERANCE:
                for r in np.flatnonzero(scores >= best - TOLERANCE):
                    found.append((assignments[r], float(scores[r])))
        return [(a, d) for a, d in found if d >= best - TOLERANCE]

    def _random_assignment(self, rng: np.random.Generator) -> np.ndarray:
        rows = []
        for aspect in self.free:
            n_values = self.full.schema.sizes[aspect]
            row = np.concatenate([np.arange(n_values), rng.integers(0, n_values, self.size - n_values)])
            rows.append(rng.permutation(row))
        return np.array(rows, dtype=np.int64)

    def _neighbours(self, assignment: np.ndarray) -> np.ndarray:
        """Cambia el valor de un miembro en un aspecto libre sin perder la sobreyección"""
        neighbours = []
        for slot, aspect in enumerate(self.free):
            counts = np.bincount(assignment[slot], minlength=self.full.schema.sizes[aspect])
            for member in range(self.size):
                if counts[assignment[slot, member]] < 2:
                    continue
                for value in range(self.full.schema.sizes[aspect]):
                    if value == assignment[slot, member]:
                        continue
                    candidate = assignment.copy()
                    candidate[slot, member] = value
                    neighbours.append(candidate)
            # Intercambiar valores entre dos miembros conserva la sobreyección
            for first, second in itertools.combinations(range(self.size), 2):
                if assignment[slot, first] == assignment[slot, second]:
                    continue
                candidate = assignment.copy()
                candidate[slot, first], candidate[slot, second] = assignment[slot, second], assignment[slot, first]
                neighbours.append(candidate)
        return np.array(neighbours, dtype=np.int64).reshape(len(neighbours), *assignment.shape)

    def climb(self, rng: np.random.Generator) -> Tuple[np.ndarray, float]:
        assignment = self._random_assignment(rng)
        current = float(self.divergences(assignment[None])[0])
        for _ in range(self.config.t2_steps):
            neighbours = self._neighbours(assignment)
            if len(neighbours) == 0:
                break
            scores = self.divergences(neighbours)
            top = scores.max()
            if top <= current + TOLERANCE:
                break
            ties = np.flatnonzero(scores >= top - TOLERANCE)
            assignment = neighbours[ties[int(rng.integers(len(ties)))]]
            current = float(top)
        return assignment, current

    def id_members(self, assignment: np.ndarray) -> frozenset:
        return frozenset(tuple(int(t) for t in row) for row in self.assemble(assignment[None])[0])


def fewshot_splits(full: CombinationSet, config: AcdSearchConfig) -> SplitBundle:
    """
    Protocolo Few-Shot: C_id mínimo (M = max a_i combinaciones) que cubre todos
    los atributos, eligiendo las coberturas de máxima divergencia.

    Se enumeran todas las coberturas mínimas si su número no supera
    config.enumeration_budget; si no, hill climbing con T1 reinicios.

    Args:
        full: Producto cartesiano completo C
        config: Parámetros (alpha, presupuesto, reinicios, semilla)

    Returns:
        SplitBundle con todas las coberturas que empatan con la mejor divergencia

    Raises:
        SplitConstructionError: Si C no es el producto completo
    """
    _require_full_product(full)
    search = _CoverSearch(full, config)
    total = minimal_cover_count(full.schema)

    if total <= config.enumeration_budget:
        logger.info(f"🚀 Few-Shot: enumerando {total} coberturas mínimas")
        found = search.enumerate()
    else:
        logger.info(f"🚀 Few-Shot: {total} coberturas superan el presupuesto, hill climbing con {config.t1_restarts} reinicios")
        climbed = run_in_pool(search.climb, spawn_rngs(config.rng_seed, config.t1_restarts), config.threads)
        best = max(d for _, d in climbed)
        found = [(a, d) for a, d in climbed if d >= best - TOLERANCE]

    unique: Dict[frozenset, float] = {}
    for assignment, _ in found:
        key = search.id_members(assignment)
        if key not in unique:
            id_set, comp_set = combination_sets(full, key)
            unique[key] = compound_divergence(id_set, comp_set, config.alpha)

    splits = [
        _make_split(full, key, Protocol.FEWSHOT, config.alpha, config.rng_seed)
        for key in sorted(unique, key=sorted)
    ]
    best = max(unique.values())
    logger.info(f"✅ Few-Shot: {len(splits)} coberturas con D={best:.6f}")
    return SplitBundle(
        splits=splits,
        protocol=Protocol.FEWSHOT,
        attribute_schema=full.schema,
        config={**config.snapshot(), "minimal_covers": total},
        best_divergence=best,
    )


# ============================================================================
# RANDOM SAMPLING
# ============================================================================

def random_splits(full: CombinationSet, n: int, seed: int = DEFAULT_SEED, alpha: float = DEFAULT_ALPHA,
                  budget: int = REJECTION_BUDGET) -> SplitBundle:
    """
    Línea base de divergencia aleatoria: n divisiones balanceadas y elegibles
    muestreadas uniformemente por rechazo (con reemplazo).

    Args:
        full: Conjunto C (|C| par)
        n: Número de divisiones
        seed: Semilla del generador
        alpha: Exponente de Chernoff
        budget: Intentos de rechazo por división

    Returns:
        SplitBundle con n divisiones (pueden repetirse)

    Raises:
        SplitConstructionError: Si |C| es impar o n < 1
        RejectionBudgetExhausted: Si se agotan los intentos para alguna división
    """
    if n < 1:
        raise SplitConstructionError(f"--n debe ser ≥ 1 (n={n})")
    if len(full) % 2:
        raise SplitConstructionError(f"|C|={len(full)} es impar: no existe una división balanceada")

    rng = np.random.default_rng(seed)
    members = full.sorted()
    half = len(members) // 2
    splits = []
    for number in range(n):
        for _ in range(budget):
            picked = rng.permutation(len(members))[:half]
            id_set, comp_set = combination_sets(full, (members[r] for r in picked))
            if is_eligible_split(full, id_set, comp_set).eligible:
                break
        else:
            raise RejectionBudgetExhausted(
                f"división aleatoria {number + 1}/{n}: {budget} intentos sin una división elegible"
            )
        splits.append(Split(
            protocol=Protocol.RANDOM,
            id_set=id_set,
            comp_set=comp_set,
            divergence=compound_divergence(id_set, comp_set, alpha),
            seed=seed,
        ))

    logger.info(f"✅ Random: {len(splits)} divisiones muestreadas (seed={seed})")
    return SplitBundle(
        splits=splits,
        protocol=Protocol.RANDOM,
        attribute_schema=full.schema,
        config={"n": n, "seed": seed, "alpha": alpha},
    )
