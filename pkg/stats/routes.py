from pathlib import Path

import typer

from errors import MalformedRecordError
from schema_module.models import Protocol
from stats.utils import SUMMARY_COLUMNS, dist_n, protocol_gap, summarize_score_file, summary_row
from storage.utils import iter_dataset, read_score_file
from utils import console, handle_errors

router = typer.Typer()


@router.command("metrics")
@handle_errors
def metrics_command(
    scores: Path = typer.Argument(..., help="Archivo de puntuaciones (JSON o YAML)"),
    header: bool = typer.Option(True, "--header/--no-header", help="Imprimir la cabecera de columnas"),
):
    """
    Agrega las puntuaciones por protocolo e imprime la fila resumen
    (A_avg, P_avg, G_avg) separada por tabuladores.
    """
    cells, summary = summarize_score_file(read_score_file(scores))

    if header:
        typer.echo("\t".join(SUMMARY_COLUMNS))
    typer.echo(summary_row(summary, cells))

    console.print(f"✅ A_avg {summary.a_avg:.2f}  G_avg {summary.g_avg:.2f}", markup=False)
    # Protocolos fuera del promedio (Few-Shot, Random, MinDiv)
    for protocol, scores_ in cells.items():
        if protocol in (Protocol.ORIGINAL, Protocol.HOLDOUT, Protocol.ACD) or scores_.a_comp is None:
            continue
        console.print(f"   G_{protocol.value} {protocol_gap(scores_.a_id, scores_.a_comp):.2f}", markup=False)


@router.command("dist3")
@handle_errors
def dist3_command(
    texts: Path = typer.Argument(..., help="Un texto por línea, o un dataset .jsonl"),
    n: int = typer.Option(3, "--n", help="Orden del n-grama"),
    per_text: bool = typer.Option(False, "--per-text", help="Promediar por texto en lugar de contar sobre el corpus"),
):
    """Distinción de n-gramas (Dist-3 por defecto) de un archivo de textos"""
    if texts.suffix == ".jsonl":
        corpus = [record.text for _, record in iter_dataset(texts)]
    else:
        try:
            corpus = [line.rstrip("\n") for line in texts.read_text(encoding="utf-8").splitlines()]
        except OSError as e:
            raise MalformedRecordError(f"no se pudo leer el archivo: {e}", path=str(texts))
    typer.echo(f"{dist_n(corpus, n, per_text=per_text):.6f}")
