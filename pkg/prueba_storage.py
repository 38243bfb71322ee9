#!/usr/bin/env python3
"""
Pruebas de E/S: datasets JSONL, inferencia del esquema, manifests de
división y archivos de puntuaciones.
"""

import json

import pytest

from errors import EligibilityError, MalformedRecordError, SchemaError, ScoreFileError
from protocols.utils import holdout_splits
from schema_module import Protocol, full_product
from storage.models import DatasetRecord, SplitManifest
from storage.utils import (
    check_manifest,
    dump_manifest,
    infer_schema,
    load_inputs,
    manifest_to_split,
    parse_shape,
    read_dataset,
    read_manifest,
    read_score_file,
    write_bundle,
    write_dataset,
)


def _fyelp_records():
    records = []
    for sentiment in ("pos", "neg"):
        for gender in ("male", "female"):
            for cuisine in ("american", "asian", "bar", "dessert", "mexican"):
                for tense in ("past", "present"):
                    attributes = {"sentiment": sentiment, "gender": gender, "cuisine": cuisine, "tense": tense}
                    records.append(DatasetRecord(attributes=attributes, text=f"{sentiment} {cuisine}"))
    return records


def test_infer_schema_fyelp_shape(tmp_path):
    print("🧪 Probando infer_schema...")

    path = tmp_path / "fyelp.jsonl"
    write_dataset(_fyelp_records() * 3, path)
    report = infer_schema(read_dataset(path))

    # Aspectos por nombre: cuisine, gender, sentiment, tense
    assert report.attribute_schema.names == ("cuisine", "gender", "sentiment", "tense")
    assert report.attribute_schema.sizes == (5, 2, 2, 2)
    assert report.attribute_schema.product_size == 40
    assert report.n_records == 120
    assert set(report.counts.values()) == {3}
    assert report.attribute_schema.aspects[2].values == ("neg", "pos")

    print("✅ infer_schema funciona correctamente")


def test_infer_schema_is_order_insensitive():
    print("\n🧪 Probando invariancia al orden de las líneas...")

    records = _fyelp_records()
    forward = infer_schema(records)
    backward = infer_schema(list(reversed(records)))
    assert forward.attribute_schema == backward.attribute_schema
    assert forward.counts == backward.counts

    print("✅ El esquema no depende del orden")


def test_infer_schema_rejects_degenerate_input():
    print("\n🧪 Probando esquemas degenerados...")

    single = [DatasetRecord(attributes={"sentiment": "pos", "topic": "sport"}, text="hola")]
    with pytest.raises(SchemaError) as error:
        infer_schema(single)
    assert "sentiment" in error.value.detail

    one_aspect = [DatasetRecord(attributes={"sentiment": v}, text="") for v in ("pos", "neg")]
    with pytest.raises(SchemaError):
        infer_schema(one_aspect)

    print("✅ Esquemas degenerados rechazados")


def test_malformed_lines_are_reported(tmp_path):
    """Los errores nombran archivo y línea."""
    print("\n🧪 Probando líneas mal formadas...")

    path = tmp_path / "roto.jsonl"
    lines = [
        {"attributes": {"sentiment": "pos", "topic": "sport"}, "text": "a"},
        {"attributes": {"sentiment": "neg", "topic": "movie"}, "text": "b"},
        {"attributes": {"sentiment": "neg"}, "text": "c"},
    ]
    path.write_text("\n".join(json.dumps(line) for line in lines) + "\n", encoding="utf-8")
    with pytest.raises(MalformedRecordError) as error:
        read_dataset(path)
    assert error.value.line_number == 3
    assert f"{path}:3:" in error.value.detail
    assert "topic" in error.value.detail

    path.write_text('{"attributes": {"a": "x"}, "text": "ok"}\n{no es json\n', encoding="utf-8")
    with pytest.raises(MalformedRecordError) as error:
        read_dataset(path)
    assert error.value.line_number == 2

    empty = tmp_path / "vacio.jsonl"
    empty.write_text("\n", encoding="utf-8")
    with pytest.raises(MalformedRecordError):
        read_dataset(empty)
    with pytest.raises(MalformedRecordError):
        read_dataset(tmp_path / "no_existe.jsonl")

    print("✅ Errores con número de línea")


def test_manifest_round_trip_is_byte_identical(tmp_path):
    print("\n🧪 Probando round-trip de manifests...")

    bundle = holdout_splits(full_product(parse_shape("2x2x2")))
    paths = write_bundle(bundle, tmp_path / "holdout")
    assert [p.name for p in paths][:2] == ["holdout_000.json", "holdout_001.json"]
    assert len(paths) == 8

    for path in paths:
        original = path.read_text(encoding="utf-8")
        manifest = read_manifest(path)
        assert dump_manifest(manifest) == original
        document = json.loads(original)
        assert set(document) == {"schema", "protocol", "config", "divergence", "seed",
                                 "id_combinations", "comp_combinations"}
        assert document["id_combinations"] == sorted(document["id_combinations"])

        split = manifest_to_split(manifest)
        assert split.protocol == Protocol.HOLDOUT
        assert len(split.comp_set) == 1

    print("✅ Round-trip byte a byte")


def test_manifest_eligibility_check(tmp_path):
    print("\n🧪 Probando check_manifest...")

    schema = parse_shape("2x2")
    manifest = SplitManifest(
        schema_block=schema,
        protocol=Protocol.ACD,
        id_combinations=[["a0_v0", "a1_v0"], ["a0_v0", "a1_v1"]],
        comp_combinations=[["a0_v1", "a1_v0"], ["a0_v1", "a1_v1"]],
    )
    report = check_manifest(manifest)
    assert not report.eligible
    assert report.clauses == ["c"]
    with pytest.raises(EligibilityError) as error:
        manifest_to_split(manifest)
    assert error.value.report["violations"][0]["clause"] == "c"

    broken = tmp_path / "roto.json"
    broken.write_text('{"schema": {"aspects": []}, "protocol": "acd"}', encoding="utf-8")
    with pytest.raises(MalformedRecordError):
        read_manifest(broken)

    print("✅ check_manifest funciona correctamente")


def test_score_files(tmp_path):
    print("\n🧪 Probando archivos de puntuaciones...")

    path = tmp_path / "scores.yaml"
    path.write_text(
        "original:\n"
        "  0:\n"
        "    id: {accuracy: {sentiment: 80.0, topic: 70.0}, perplexity: 40.0}\n"
        "holdout:\n"
        "  0:\n"
        "    id: {accuracy: {sentiment: 90.0}}\n"
        "    comp: {accuracy: {sentiment: 60.0}}\n",
        encoding="utf-8",
    )
    scores = read_score_file(path)
    assert scores.root[Protocol.ORIGINAL]["0"]["id"].mean_accuracy == pytest.approx(75.0)
    assert scores.root[Protocol.HOLDOUT]["0"]["comp"].perplexity is None

    bad_cell = tmp_path / "bad.json"
    bad_cell.write_text(json.dumps({"original": {"0": {"id": {"accuracy": {"s": 1}}, "comp": {"accuracy": {"s": 1}}}}}))
    with pytest.raises(ScoreFileError):
        read_score_file(bad_cell)

    out_of_range = tmp_path / "range.json"
    out_of_range.write_text(json.dumps({"acd": {"0": {"id": {"accuracy": {"s": 120}}}}}))
    with pytest.raises(ScoreFileError):
        read_score_file(out_of_range)

    with pytest.raises(ScoreFileError):
        read_score_file(tmp_path / "no_existe.yaml")

    print("✅ Archivos de puntuaciones validados")


def test_cli_inputs():
    print("\n🧪 Probando parse_shape y load_inputs...")

    assert parse_shape("2x2x5x2").sizes == (2, 2, 5, 2)
    for bad in ("2", "2xa", "1x2"):
        with pytest.raises(SchemaError):
            parse_shape(bad)
    with pytest.raises(SchemaError):
        load_inputs(None, None)
    with pytest.raises(SchemaError):
        load_inputs("datos.jsonl", "2x2")
    schema, report, records = load_inputs(None, "2x3")
    assert schema.sizes == (2, 3)
    assert report is None and records == []

    print("✅ Entradas de la CLI validadas")


if __name__ == "__main__":
    import pathlib
    import tempfile

    print("🚀 Iniciando pruebas de almacenamiento\n")
    with tempfile.TemporaryDirectory() as folder:
        test_infer_schema_fyelp_shape(pathlib.Path(folder))
        test_infer_schema_is_order_insensitive()
        test_infer_schema_rejects_degenerate_input()
        test_malformed_lines_are_reported(pathlib.Path(folder))
        test_manifest_round_trip_is_byte_identical(pathlib.Path(folder))
        test_manifest_eligibility_check(pathlib.Path(folder))
        test_score_files(pathlib.Path(folder))
        test_cli_inputs()
    print("\n🎉 Todas las pruebas pasaron")
