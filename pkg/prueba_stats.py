#!/usr/bin/env python3
"""
Pruebas de las métricas agregadas del benchmark y de Dist-3.
"""

import numpy as np
import pytest
from pydantic import ValidationError

from errors import CompSplitError, MissingCellError
from schema_module import Protocol
from stats.models import ProtocolScores
from stats.utils import aggregate, dist_3, dist_n, mean_over_bundle, protocol_gap, summarize_score_file, summary_row
from storage.utils import read_score_file

# (original, holdout id/comp, acd id/comp) -> (A_avg publicado o None, G_avg publicado)
BASELINE_ROWS = {
    "CTRL": ((79.10, 78.89, 75.09, 77.83, 69.96), 76.17, 7.46),
    "Con.Prefix": ((83.99, 83.75, 80.36, 81.15, 69.84), 79.82, 8.99),
    "DCG": ((79.93, 79.72, 76.66, 78.43, 67.7), 76.49, 8.76),
    "CatPrompt": ((63.91, 63.95, 60.32, 60.53, 48.25), 59.39, 12.98),
    "PPLM": ((40.91, 41.05, 40.62, 42.25, 39.60), 40.89, 3.66),
    "LLaMA-2": ((61.53, 62.61, 40.82, 62.98, 42.11), 54.01, 33.97),
    "Prior": ((73.85, 73.64, 49.93, 78.24, 50.05), None, 34.11),
    "Fudge": ((60.12, 59.35, 42.10, 57.17, 41.49), None, 28.25),
    "ChatGPT": ((57.51, 56.62, 49.21, 57.13, 49.75), 54.04, 13.00),
}


def _cells(values, perplexities=(None,) * 5):
    original, holdout_id, holdout_comp, acd_id, acd_comp = values
    p = perplexities
    return (
        ProtocolScores(protocol=Protocol.ORIGINAL, a_id=original, p_id=p[0]),
        ProtocolScores(protocol=Protocol.HOLDOUT, a_id=holdout_id, a_comp=holdout_comp, p_id=p[1], p_comp=p[2]),
        ProtocolScores(protocol=Protocol.ACD, a_id=acd_id, a_comp=acd_comp, p_id=p[3], p_comp=p[4]),
    )


def test_protocol_gap():
    print("🧪 Probando protocol_gap...")

    assert protocol_gap(78.89, 75.09) == pytest.approx(4.8168, abs=1e-4)
    assert protocol_gap(81.15, 69.84) == pytest.approx(13.937, abs=1e-3)
    assert protocol_gap(55.0, 55.0) == 0.0
    assert protocol_gap(50.0, 60.0) < 0
    with pytest.raises(CompSplitError):
        protocol_gap(0.0, 10.0)

    print("✅ protocol_gap funciona correctamente")


def test_published_rows():
    """A_avg y G_avg reproducen las filas publicadas con error < 0.01."""
    print("\n🧪 Probando las filas de referencia...")

    for name, (values, a_avg, g_avg) in BASELINE_ROWS.items():
        summary = aggregate(*_cells(values))
        assert abs(summary.g_avg - g_avg) < 0.01, name
        if a_avg is not None:
            assert abs(summary.a_avg - a_avg) < 0.01, name
        assert summary.g_avg == pytest.approx(
            (summary.gaps[Protocol.HOLDOUT] + summary.gaps[Protocol.ACD]) / 2, abs=1e-12)
        assert summary.p_avg is None

    print("✅ Filas reproducidas")


def test_aggregate_perplexity_and_row():
    print("\n🧪 Probando P_avg y la fila resumen...")

    cells = _cells(BASELINE_ROWS["CTRL"][0], (54.17, 51.20, 51.22, 51.71, 51.28))
    summary = aggregate(*cells)
    assert summary.p_avg == pytest.approx(51.916)

    row = summary_row(summary, dict(zip((Protocol.ORIGINAL, Protocol.HOLDOUT, Protocol.ACD), cells))).split("\t")
    assert len(row) == 13
    assert row[0] == "79.10"
    assert row[-3:] == ["76.17", "51.92", "7.46"]

    flat = aggregate(*_cells((62.0,) * 5))
    assert flat.a_avg == pytest.approx(62.0)
    assert flat.g_avg == 0.0

    with pytest.raises(MissingCellError):
        aggregate(cells[0], None, cells[2])
    with pytest.raises(MissingCellError):
        aggregate(cells[0], cells[2], cells[1])

    print("✅ Agregación completa")


def test_summarize_score_file(tmp_path):
    """Varias divisiones por protocolo se promedian antes de agregar."""
    print("\n🧪 Probando summarize_score_file...")

    path = tmp_path / "scores.yaml"
    path.write_text(
        "original:\n"
        "  0: {id: {accuracy: {sentiment: 80.0}}}\n"
        "holdout:\n"
        "  0: {id: {accuracy: {sentiment: 90.0}}, comp: {accuracy: {sentiment: 60.0}}}\n"
        "  1: {id: {accuracy: {sentiment: 70.0}}, comp: {accuracy: {sentiment: 80.0}}}\n"
        "acd:\n"
        "  0: {id: {accuracy: {sentiment: 80.0, topic: 80.0}}, comp: {accuracy: {sentiment: 50.0, topic: 70.0}}}\n",
        encoding="utf-8",
    )
    cells, summary = summarize_score_file(read_score_file(path))
    assert (cells[Protocol.HOLDOUT].a_id, cells[Protocol.HOLDOUT].a_comp) == (80.0, 70.0)
    assert cells[Protocol.ACD].a_comp == pytest.approx(60.0)
    assert summary.gaps[Protocol.HOLDOUT] == pytest.approx(12.5)
    assert summary.g_avg == pytest.approx(18.75)
    assert summary.a_avg == pytest.approx(74.0)

    print("✅ summarize_score_file funciona correctamente")


def test_protocol_scores_validation():
    print("\n🧪 Probando ProtocolScores...")

    with pytest.raises(ValidationError):
        ProtocolScores(protocol=Protocol.ORIGINAL, a_id=70.0, a_comp=60.0)
    with pytest.raises(ValidationError):
        ProtocolScores(protocol=Protocol.ACD, a_id=70.0)
    with pytest.raises(ValidationError):
        ProtocolScores(protocol=Protocol.ACD, a_id=170.0, a_comp=10.0)
    with pytest.raises(ValidationError):
        ProtocolScores(protocol=Protocol.ACD, a_id=70.0, a_comp=10.0, p_id=0.0)

    print("✅ ProtocolScores validado")


def test_mean_over_bundle():
    print("\n🧪 Probando mean_over_bundle...")

    single = ProtocolScores(protocol=Protocol.HOLDOUT, a_id=80.0, a_comp=70.0)
    assert mean_over_bundle([single]) == single

    mirrored = mean_over_bundle([single, ProtocolScores(protocol=Protocol.HOLDOUT, a_id=70.0, a_comp=80.0)])
    assert (mirrored.a_id, mirrored.a_comp) == (75.0, 75.0)

    rng = np.random.default_rng(0)
    cells = [ProtocolScores(protocol=Protocol.HOLDOUT, a_id=a, a_comp=c)
             for a, c in rng.uniform(40, 90, size=(40, 2))]
    mean = mean_over_bundle(cells)
    assert mean.a_id == pytest.approx(np.mean([c.a_id for c in cells]))

    with pytest.raises(CompSplitError):
        mean_over_bundle([single, ProtocolScores(protocol=Protocol.ACD, a_id=70.0, a_comp=60.0)])
    with pytest.raises(CompSplitError):
        mean_over_bundle([])

    print("✅ mean_over_bundle funciona correctamente")


def test_dist_3():
    print("\n🧪 Probando Dist-3...")

    assert dist_3(["a b c d"]) == 1.0
    assert dist_3(["a a a a a"]) == pytest.approx(1 / 3)

    text = "el servicio fue lento pero la comida estaba rica"
    assert dist_3([text, text]) == pytest.approx(dist_3([text]) / 2)

    corpus = ["uno dos tres cuatro", "dos tres cuatro cinco", "a a a a"]
    assert dist_3(corpus) == pytest.approx(dist_3(list(reversed(corpus))))
    assert dist_3(corpus + ["uno dos tres"]) <= dist_3(corpus)

    assert dist_3(["A B C", "a b c"]) == pytest.approx(0.5)
    assert dist_3(["a a a a a", "x y z"], per_text=True) == pytest.approx((1 / 3 + 1) / 2)
    assert dist_n(["a b a b"], n=2) == pytest.approx(2 / 3)

    with pytest.raises(CompSplitError):
        dist_3(["muy corto", ""])

    print("✅ Dist-3 funciona correctamente")


if __name__ == "__main__":
    import pathlib
    import tempfile

    print("🚀 Iniciando pruebas de métricas\n")
    test_protocol_gap()
    test_published_rows()
    test_aggregate_perplexity_and_row()
    with tempfile.TemporaryDirectory() as folder:
        test_summarize_score_file(pathlib.Path(folder))
    test_protocol_scores_validation()
    test_mean_over_bundle()
    test_dist_3()
    print("\n🎉 Todas las pruebas pasaron")
