from collections import Counter
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from nltk import ngrams

from errors import CompSplitError, MissingCellError
from schema_module.models import Protocol
from stats.models import BenchmarkSummary, ProtocolScores
from storage.models import ScoreFile

Tokenizer = Callable[[str], List[str]]

# Orden de columnas de la fila resumen
SUMMARY_COLUMNS = (
    "original_a", "original_p",
    "holdout_a_id", "holdout_p_id", "holdout_a_comp", "holdout_p_comp",
    "acd_a_id", "acd_p_id", "acd_a_comp", "acd_p_comp",
    "a_avg", "p_avg", "g_avg",
)


def protocol_gap(a_id: float, a_comp: float) -> float:
    """
    Brecha composicional G = (A_id − A_comp) / A_id, en porcentaje.
    Puede ser negativa si el test composicional supera al de distribución.

    Raises:
        CompSplitError: Si a_id es 0
    """
    if a_id == 0:
        raise CompSplitError("brecha indefinida: a_id = 0")
    return 100.0 * (a_id - a_comp) / a_id


def aggregate(original: Optional[ProtocolScores], holdout: Optional[ProtocolScores],
              acd: Optional[ProtocolScores]) -> BenchmarkSummary:
    """
    Promedios del benchmark sobre las cinco celdas (original id, Hold-Out id/comp,
    ACD id/comp). Few-Shot queda fuera del promedio.

    Args:
        original: Celdas del protocolo original
        holdout: Celdas Hold-Out (ya promediadas sobre el bundle)
        acd: Celdas ACD (ya promediadas sobre el bundle)

    Returns:
        BenchmarkSummary; p_avg es None si falta alguna perplejidad

    Raises:
        MissingCellError: Si falta un protocolo o viene con otra etiqueta
    """
    expected = ((original, Protocol.ORIGINAL), (holdout, Protocol.HOLDOUT), (acd, Protocol.ACD))
    for scores, protocol in expected:
        if scores is None:
            raise MissingCellError(f"faltan las celdas del protocolo {protocol.value}")
        if scores.protocol != protocol:
            raise MissingCellError(f"se esperaban celdas {protocol.value}, llegaron {scores.protocol.value}")

    accuracies = [original.a_id, holdout.a_id, holdout.a_comp, acd.a_id, acd.a_comp]
    perplexities = [original.p_id, holdout.p_id, holdout.p_comp, acd.p_id, acd.p_comp]
    gaps = {
        Protocol.HOLDOUT: protocol_gap(holdout.a_id, holdout.a_comp),
        Protocol.ACD: protocol_gap(acd.a_id, acd.a_comp),
    }
    return BenchmarkSummary(
        a_avg=float(np.mean(accuracies)),
        p_avg=None if any(p is None for p in perplexities) else float(np.mean(perplexities)),
        g_avg=(gaps[Protocol.HOLDOUT] + gaps[Protocol.ACD]) / 2,
        gaps=gaps,
    )


def _mean_or_none(values: Sequence[Optional[float]]) -> Optional[float]:
    if any(v is None for v in values):
        return None
    return float(np.mean(values))


def mean_over_bundle(per_split_scores: Sequence[ProtocolScores]) -> ProtocolScores:
    """
    Media celda a celda sobre las divisiones de un bundle.

    Raises:
        CompSplitError: Lista vacía o protocolos mezclados
    """
    if not per_split_scores:
        raise CompSplitError("no hay puntuaciones que promediar")
    protocols = {scores.protocol for scores in per_split_scores}
    if len(protocols) > 1:
        raise CompSplitError(f"protocolos mezclados en el bundle: {sorted(p.value for p in protocols)}")

    return ProtocolScores(
        protocol=per_split_scores[0].protocol,
        a_id=float(np.mean([s.a_id for s in per_split_scores])),
        a_comp=_mean_or_none([s.a_comp for s in per_split_scores]),
        p_id=_mean_or_none([s.p_id for s in per_split_scores]),
        p_comp=_mean_or_none([s.p_comp for s in per_split_scores]),
    )


def protocol_scores_from_file(score_file: ScoreFile) -> Dict[Protocol, ProtocolScores]:
    """
    Promedia las precisiones por aspecto de cada celda y luego las celdas
    sobre todas las divisiones de cada protocolo.
    """
    result = {}
    for protocol, splits in score_file.root.items():
        per_split = []
        for split_id in sorted(splits):
            cells = splits[split_id]
            comp = cells.get("comp")
            per_split.append(ProtocolScores(
                protocol=protocol,
                a_id=cells["id"].mean_accuracy,
                a_comp=comp.mean_accuracy if comp is not None else None,
                p_id=cells["id"].perplexity,
                p_comp=comp.perplexity if comp is not None else None,
            ))
        result[protocol] = mean_over_bundle(per_split)
    return result


def summarize_score_file(score_file: ScoreFile) -> Tuple[Dict[Protocol, ProtocolScores], BenchmarkSummary]:
    """Celdas promediadas por protocolo y su resumen A_avg / P_avg / G_avg"""
    cells = protocol_scores_from_file(score_file)
    return cells, aggregate(cells.get(Protocol.ORIGINAL), cells.get(Protocol.HOLDOUT), cells.get(Protocol.ACD))


def summary_row(summary: BenchmarkSummary, cells: Mapping[Protocol, ProtocolScores]) -> str:
    """Fila separada por tabuladores con las 13 columnas numéricas de la tabla resumen"""
    def fmt(value: Optional[float]) -> str:
        return "-" if value is None else f"{value:.2f}"

    original, holdout, acd = cells[Protocol.ORIGINAL], cells[Protocol.HOLDOUT], cells[Protocol.ACD]
    values = [
        original.a_id, original.p_id,
        holdout.a_id, holdout.p_id, holdout.a_comp, holdout.p_comp,
        acd.a_id, acd.p_id, acd.a_comp, acd.p_comp,
        summary.a_avg, summary.p_avg, summary.g_avg,
    ]
    return "\t".join(fmt(v) for v in values)


# ============================================================================
# DIST-N
# ============================================================================

def whitespace_tokenizer(text: str) -> List[str]:
    return text.lower().split()


def dist_n(texts: Sequence[str], n: int = 3, tokenizer: Tokenizer = whitespace_tokenizer,
           per_text: bool = False) -> float:
    """
    Distinción de n-gramas: n-gramas distintos / n-gramas totales.

    Args:
        texts: Textos a evaluar
        n: Orden del n-grama
        tokenizer: Función texto -> tokens (por defecto minúsculas y espacios)
        per_text: Si True, promedia la razón de cada texto con al menos n tokens;
            si False, cuenta sobre todo el corpus

    Returns:
        Valor en (0, 1]

    Raises:
        CompSplitError: Si ningún texto tiene al menos n tokens
    """
    if n < 1:
        raise CompSplitError(f"n debe ser ≥ 1, se recibió {n}")

    per_text_grams = [list(ngrams(tokenizer(text), n)) for text in texts]
    per_text_grams = [grams for grams in per_text_grams if grams]
    if not per_text_grams:
        raise CompSplitError(f"ningún texto tiene al menos {n} tokens")

    if per_text:
        return float(np.mean([len(set(grams)) / len(grams) for grams in per_text_grams]))

    pooled = Counter(gram for grams in per_text_grams for gram in grams)
    return len(pooled) / sum(pooled.values())


def dist_3(texts: Sequence[str], tokenizer: Tokenizer = whitespace_tokenizer, per_text: bool = False) -> float:
    """Dist-3 sobre un corpus de textos"""
    return dist_n(texts, 3, tokenizer, per_text)
