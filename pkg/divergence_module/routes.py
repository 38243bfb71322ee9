from pathlib import Path
from typing import List

import typer

from config import DEFAULT_ALPHA
from divergence_module.utils import compound_divergence
from storage.utils import manifest_sets, read_manifest
from utils import format_number, handle_errors

router = typer.Typer()


@router.command("divergence")
@handle_errors
def divergence_command(
    manifests: List[Path] = typer.Argument(..., help="Manifests de división"),
    alpha: float = typer.Option(DEFAULT_ALPHA, "--alpha", help="Exponente de Chernoff"),
):
    """Imprime la divergencia de compuestos de cada manifest (ruta<TAB>D)"""
    for path in manifests:
        id_set, comp_set = manifest_sets(read_manifest(path))
        typer.echo(f"{path}\t{format_number(compound_divergence(id_set, comp_set, alpha))}")
