from pathlib import Path
from typing import Optional

import typer
from rich.table import Table

from config import DEFAULT_ALPHA, DEFAULT_ETA, DEFAULT_SEED, DEFAULT_T1, DEFAULT_T2, ENUMERATION_BUDGET
from errors import SplitConstructionError
from protocols.models import AcdSearchConfig, Objective, SplitBundle
from protocols.utils import (
    acd_splits,
    balanced_split_count,
    expected_id_size,
    fewshot_splits,
    holdout_splits,
    mindiv_splits,
    random_splits,
)
from schema_module.models import Protocol
from schema_module.utils import full_product, original_split
from storage.utils import load_inputs, write_bundle
from utils import console, handle_errors

router = typer.Typer()


@router.command("split")
@handle_errors
def split_command(
    protocol: Protocol = typer.Option(..., "--protocol", help="original, holdout, acd, fewshot, random o mindiv"),
    out: Path = typer.Option(..., "--out", help="Directorio donde escribir los manifests"),
    data: Optional[Path] = typer.Option(None, "--data", help="Dataset JSONL del que inferir el esquema"),
    shape: Optional[str] = typer.Option(None, "--shape", help="Esquema sintético, p. ej. 2x2x5x2"),
    k: int = typer.Option(1, "--k", help="Combinaciones reservadas por división (Hold-Out)"),
    alpha: float = typer.Option(DEFAULT_ALPHA, "--alpha", help="Exponente de Chernoff"),
    eta: float = typer.Option(DEFAULT_ETA, "--eta", help="Umbral de divergencia"),
    t1: int = typer.Option(DEFAULT_T1, "--t1", help="Reinicios"),
    t2: int = typer.Option(DEFAULT_T2, "--t2", help="Pasadas de mejora por reinicio"),
    seed: int = typer.Option(DEFAULT_SEED, "--seed"),
    n: int = typer.Option(10, "--n", help="Divisiones aleatorias (protocolo random)"),
    only_optimal: bool = typer.Option(False, "--only-optimal", help="Sólo las divisiones de mejor divergencia"),
    objective: Objective = typer.Option(Objective.MAXIMIZE, "--objective", help="maximize (acd) o minimize (mindiv)"),
    enumeration_budget: int = typer.Option(ENUMERATION_BUDGET, "--enum-budget"),
):
    """
    Construye las divisiones de un protocolo y escribe un manifest por división.
    """
    schema, report, _ = load_inputs(data, shape)
    full = full_product(schema)
    config = AcdSearchConfig(
        t1_restarts=t1,
        t2_steps=t2,
        eta_threshold=eta,
        alpha=alpha,
        rng_seed=seed,
        objective=objective,
        only_optimal=only_optimal,
        enumeration_budget=enumeration_budget,
    )

    if protocol == Protocol.ORIGINAL:
        bundle = SplitBundle(
            splits=[original_split(full, seed)],
            protocol=Protocol.ORIGINAL,
            attribute_schema=schema,
            config={"seed": seed},
        )
    elif protocol == Protocol.HOLDOUT:
        bundle = holdout_splits(full, k, alpha, seed)
    elif protocol == Protocol.FEWSHOT:
        bundle = fewshot_splits(full, config)
    elif protocol == Protocol.ACD:
        if objective == Objective.MINIMIZE:
            raise SplitConstructionError("--protocol acd maximiza la divergencia; use --protocol mindiv")
        bundle = acd_splits(full, config)
    elif protocol == Protocol.MINDIV:
        bundle = mindiv_splits(full, config)
    else:
        bundle = random_splits(full, n, seed, alpha)

    paths = write_bundle(bundle, out)

    table = Table(title=f"Protocolo {protocol.value}")
    table.add_column("Métrica")
    table.add_column("Valor", justify="right")
    table.add_row("|C|", str(len(full)))
    table.add_row("divisiones", str(len(bundle)))
    if bundle.mean_divergence() is not None:
        table.add_row("D media", f"{bundle.mean_divergence():.6f}")
    if bundle.best_divergence is not None:
        table.add_row("mejor D", f"{bundle.best_divergence:.6f}")
    if protocol in (Protocol.ACD, Protocol.MINDIV, Protocol.RANDOM):
        table.add_row("particiones balanceadas", str(balanced_split_count(len(full))))
    if report is not None:
        table.add_row("registros", str(report.n_records))
        table.add_row("registros de entrenamiento esperados", f"{expected_id_size(report.n_records, schema, protocol):.1f}")
    console.print(table)

    if bundle.diagnostic:
        console.print(f"⚠️ {bundle.diagnostic}", markup=False)
    typer.echo(f"{len(paths)} manifests -> {out}")
