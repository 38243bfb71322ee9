import json
from pathlib import Path
from typing import Optional

import numpy as np
import typer

from config import DEFAULT_SEED
from errors import CompSplitError
from sampler.models import Batch
from sampler.utils import sample_pcomp_batch
from storage.utils import infer_schema, manifest_to_split, read_dataset, read_manifest, to_labeled_records
from utils import get_logger, handle_errors

logger = get_logger(__name__)

router = typer.Typer()


@router.command("sample-pcomp")
@handle_errors
def sample_pcomp_command(
    data: Path = typer.Option(..., "--data", help="Dataset JSONL"),
    manifest: Optional[Path] = typer.Option(None, "--manifest", help="Restringe el pool a C_id de esta división"),
    batch_size: int = typer.Option(16, "--batch-size", help="Tamaño del lote de entrenamiento"),
    size: Optional[int] = typer.Option(None, "--size", help="Tamaño del lote pseudo-composicional (por defecto el del lote)"),
    seed: int = typer.Option(DEFAULT_SEED, "--seed"),
):
    """
    Muestrea un lote de entrenamiento y su lote pseudo-composicional.
    Imprime los registros del lote pseudo-composicional como JSON por línea.
    """
    records = read_dataset(data)
    schema = infer_schema(records).attribute_schema
    pool = to_labeled_records(records, schema)

    if manifest is not None:
        split = manifest_to_split(read_manifest(manifest))
        if split.attribute_schema != schema:
            raise CompSplitError(f"{manifest}: el esquema no coincide con el de {data}")
        pool = [record for record in pool if record.combination in split.id_set]
    if not pool:
        raise CompSplitError(f"{data}: no hay registros en distribución")

    rng = np.random.default_rng(seed)
    picked = rng.choice(len(pool), size=min(batch_size, len(pool)), replace=False)
    train_batch = Batch(records=[pool[i] for i in picked])
    logger.info(f"🚀 Lote de entrenamiento con {len(train_batch.combinations())} combinaciones distintas")

    pcomp = sample_pcomp_batch(train_batch, pool, size or batch_size, rng)
    for record in pcomp.records:
        attributes = dict(zip(schema.names, schema.decode(record.combination)))
        typer.echo(json.dumps({"attributes": attributes, "text": record.text}, ensure_ascii=False))
