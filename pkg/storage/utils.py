import json
from collections import Counter
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Optional, Tuple, Union

import yaml
from pydantic import ValidationError

from errors import EligibilityError, MalformedRecordError, SchemaError, ScoreFileError
from protocols.models import SplitBundle
from sampler.models import LabeledRecord
from schema_module.models import AspectDef, AttributeSchema, CombinationSet, Split
from schema_module.utils import EligibilityReport, full_product, is_eligible_split
from storage.models import DatasetRecord, SchemaReport, ScoreFile, SplitManifest
from utils import format_number, get_logger

logger = get_logger(__name__)

PathLike = Union[str, Path]


# ============================================================================
# DATASETS (JSON Lines)
# ============================================================================

def iter_dataset(path: PathLike) -> Iterator[Tuple[int, DatasetRecord]]:
    """
    Lee un dataset JSONL línea a línea.

    Todas las líneas deben tener el mismo conjunto de aspectos que la primera.
    Las líneas vacías se ignoran.

    Args:
        path: Ruta del archivo

    Yields:
        (número de línea, DatasetRecord)

    Raises:
        MalformedRecordError: JSON inválido, campos faltantes o aspectos inconsistentes
    """
    path = str(path)
    expected = None
    try:
        handle = open(path, encoding="utf-8")
    except OSError as e:
        raise MalformedRecordError(f"no se pudo abrir el dataset: {e}", path=path)

    with handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = DatasetRecord.model_validate_json(line)
            except ValidationError as e:
                raise MalformedRecordError(f"registro inválido ({e.errors()[0]['msg']})", path, line_number)

            keys = frozenset(record.attributes)
            if expected is None:
                expected = keys
            elif keys != expected:
                missing = sorted(expected - keys)
                extra = sorted(keys - expected)
                raise MalformedRecordError(
                    f"aspectos inconsistentes (faltan {missing}, sobran {extra})", path, line_number
                )
            yield line_number, record


def read_dataset(path: PathLike) -> List[DatasetRecord]:
    records = [record for _, record in iter_dataset(path)]
    if not records:
        raise MalformedRecordError("dataset vacío", path=str(path))
    return records


def write_dataset(records: Iterable[DatasetRecord], path: PathLike) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record.model_dump(), ensure_ascii=False) + "\n")


def infer_schema(records: List[DatasetRecord]) -> SchemaReport:
    """
    Infiere el esquema de atributos de un dataset.

    Los aspectos se ordenan por nombre y sus valores lexicográficamente, por lo
    que el resultado no depende del orden de las líneas.

    Args:
        records: Registros del dataset (no vacío)

    Returns:
        SchemaReport con el esquema y los registros por combinación

    Raises:
        SchemaError: Si algún aspecto tiene menos de dos valores o hay menos de dos aspectos
    """
    if not records:
        raise SchemaError("no se puede inferir un esquema de un dataset vacío")

    names = sorted(records[0].attributes)
    values = {name: sorted({record.attributes[name] for record in records}) for name in names}

    degenerate = [f"{name}={values[name]}" for name in names if len(values[name]) < 2]
    if degenerate:
        raise SchemaError(f"cada aspecto necesita al menos 2 valores; con uno solo: {', '.join(degenerate)}")
    if len(names) < 2:
        raise SchemaError(f"se necesitan al menos 2 aspectos, el dataset tiene {names}")

    schema = AttributeSchema(aspects=tuple(AspectDef(name=name, values=tuple(values[name])) for name in names))
    counts = Counter(schema.encode_mapping(record.attributes) for record in records)
    return SchemaReport(attribute_schema=schema, counts=dict(counts), n_records=len(records))


def to_labeled_records(records: Iterable[DatasetRecord], schema: AttributeSchema) -> List[LabeledRecord]:
    return [
        LabeledRecord(combination=schema.encode_mapping(record.attributes), text=record.text)
        for record in records
    ]


# ============================================================================
# MANIFESTS
# ============================================================================

def split_to_manifest(split: Split, config: Optional[Dict[str, Any]] = None) -> SplitManifest:
    """Serializa una división; las combinaciones se ordenan por vector de índices"""
    schema = split.attribute_schema
    return SplitManifest(
        schema_block=schema,
        protocol=split.protocol,
        config=dict(config or {}),
        divergence=format_number(split.divergence) if split.divergence is not None else None,
        seed=split.seed,
        id_combinations=[schema.decode(c) for c in split.id_set.sorted()],
        comp_combinations=[schema.decode(c) for c in split.comp_set.sorted()],
    )


def manifest_sets(manifest: SplitManifest) -> Tuple[CombinationSet, CombinationSet]:
    schema = manifest.schema_block
    id_set = CombinationSet(schema, (schema.encode(values) for values in manifest.id_combinations))
    comp_set = CombinationSet(schema, (schema.encode(values) for values in manifest.comp_combinations))
    return id_set, comp_set


def check_manifest(manifest: SplitManifest) -> EligibilityReport:
    """
    Valida la condición de elegibilidad de un manifest contra el producto completo
    del esquema, sin construir la división (que rechazaría casos inválidos).
    """
    id_set, comp_set = manifest_sets(manifest)
    return is_eligible_split(full_product(manifest.schema_block), id_set, comp_set)


def manifest_to_split(manifest: SplitManifest) -> Split:
    """
    Raises:
        EligibilityError: Si la división del manifest no es elegible
    """
    report = check_manifest(manifest)
    if not report.eligible:
        raise EligibilityError(f"división no elegible: {report.summary()}", report=report.model_dump())
    id_set, comp_set = manifest_sets(manifest)
    return Split(
        protocol=manifest.protocol,
        id_set=id_set,
        comp_set=comp_set,
        divergence=manifest.divergence,
        seed=manifest.seed,
    )


def dump_manifest(manifest: SplitManifest) -> str:
    return json.dumps(manifest.model_dump(mode="json", by_alias=True), indent=2, ensure_ascii=False) + "\n"


def write_manifest(manifest: SplitManifest, path: PathLike) -> None:
    Path(path).write_text(dump_manifest(manifest), encoding="utf-8")


def read_manifest(path: PathLike) -> SplitManifest:
    """
    Raises:
        MalformedRecordError: Si el archivo no existe o no es un manifest válido
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise MalformedRecordError(f"no se pudo leer el manifest: {e}", path=str(path))
    try:
        return SplitManifest.model_validate_json(text)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"])
        raise MalformedRecordError(f"manifest inválido en '{location}': {first['msg']}", path=str(path))


def write_bundle(bundle: SplitBundle, out_dir: PathLike) -> List[Path]:
    """
    Escribe un manifest por división como <protocolo>_<NNN>.json.

    Returns:
        Rutas escritas, en el orden del bundle
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for number, split in enumerate(bundle.splits):
        path = out / f"{bundle.protocol.value}_{number:03d}.json"
        write_manifest(split_to_manifest(split, bundle.config), path)
        paths.append(path)
    logger.info(f"✅ {len(paths)} manifests escritos en {out}")
    return paths


# ============================================================================
# SCORE FILES
# ============================================================================

def _string_keys(data: Any, depth: int) -> Any:
    # YAML admite claves numéricas (p. ej. divisiones 0, 1, ...)
    if depth == 0 or not isinstance(data, dict):
        return data
    return {str(key): _string_keys(value, depth - 1) for key, value in data.items()}


def read_score_file(path: PathLike) -> ScoreFile:
    """
    Lee un archivo de puntuaciones en JSON o YAML.

    Raises:
        ScoreFileError: Si no se puede leer o no respeta la estructura
            protocolo -> división -> celda -> {accuracy, perplexity}
    """
    try:
        with open(path, encoding="utf-8") as handle:
            data = yaml.safe_load(handle)
    except OSError as e:
        raise ScoreFileError(f"{path}: no se pudo leer ({e})")
    except yaml.YAMLError as e:
        raise ScoreFileError(f"{path}: formato inválido ({e})")

    if not isinstance(data, dict):
        raise ScoreFileError(f"{path}: se esperaba un mapa protocolo -> divisiones")
    try:
        return ScoreFile.model_validate(_string_keys(data, depth=3))
    except ValidationError as e:
        first = e.errors()[0]
        location = "/".join(str(part) for part in first["loc"])
        raise ScoreFileError(f"{path}: {location}: {first['msg']}")


# ============================================================================
# ENTRADAS DE LA CLI
# ============================================================================

def parse_shape(shape: str) -> AttributeSchema:
    """'2x2x5x2' -> esquema sintético con esos tamaños"""
    try:
        sizes = [int(part) for part in shape.lower().split("x")]
    except ValueError:
        raise SchemaError(f"--shape inválido '{shape}': se esperaba algo como 2x2x2")
    try:
        return AttributeSchema.from_sizes(sizes)
    except ValidationError as e:
        raise SchemaError(f"--shape inválido '{shape}': {e.errors()[0]['msg']}")


def load_inputs(data: Optional[PathLike], shape: Optional[str]) -> Tuple[AttributeSchema, Optional[SchemaReport], List[DatasetRecord]]:
    """
    Esquema a partir de un dataset (--data) o de una forma sintética (--shape).

    Raises:
        SchemaError: Si no se indica ninguno o se indican ambos
    """
    if (data is None) == (shape is None):
        raise SchemaError("indique exactamente uno de --data o --shape")
    if shape is not None:
        return parse_shape(shape), None, []
    records = read_dataset(data)
    report = infer_schema(records)
    return report.attribute_schema, report, records
