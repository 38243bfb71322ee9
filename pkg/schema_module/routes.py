from pathlib import Path
from typing import List, Optional

import typer
from rich.table import Table

from storage.utils import check_manifest, infer_schema, read_dataset, read_manifest
from utils import console, error_console, handle_errors

router = typer.Typer()


@router.command("check")
@handle_errors
def check_command(
    manifests: Optional[List[Path]] = typer.Argument(None, help="Manifests a validar"),
    data: Optional[Path] = typer.Option(None, "--data", help="Dataset JSONL cuyo esquema se muestra"),
):
    """
    Valida la condición de elegibilidad de cada manifest y, con --data,
    muestra el esquema inferido y los registros por combinación.
    Sale con 1 si algún manifest no es elegible.
    """
    if not manifests and data is None:
        raise typer.BadParameter("indique al menos un manifest o --data")

    if data is not None:
        report = infer_schema(read_dataset(data))
        schema = report.attribute_schema
        table = Table(title=f"Esquema de {data}")
        table.add_column("Aspecto")
        table.add_column("Valores")
        for aspect in schema.aspects:
            table.add_row(aspect.name, ", ".join(aspect.values))
        console.print(table)
        for label, count in report.labelled_counts().items():
            typer.echo(f"{label}\t{count}")

    failed = 0
    for path in manifests or []:
        report = check_manifest(read_manifest(path))
        if report.eligible:
            typer.echo(f"{path}\telegible")
            continue
        failed += 1
        typer.echo(f"{path}\tno elegible")
        for violation in report.violations:
            error_console.print(f"❌ {path}: cláusula ({violation.clause}) {violation.message}: {violation.elements}", markup=False)

    if failed:
        raise typer.Exit(code=1)
