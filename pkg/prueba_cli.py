#!/usr/bin/env python3
"""
Pruebas de la CLI: cada subcomando sobre archivos temporales y los
códigos de salida (0 éxito, 1 validación, 2 uso).
"""

import itertools
import json

from typer.testing import CliRunner

from main import app, cli_dispatch
from schema_module import CombinationSet, Protocol, Split, full_product
from storage.models import DatasetRecord
from storage.utils import parse_shape, split_to_manifest, write_dataset, write_manifest
from utils import cli_flag

runner = CliRunner()

YELP_VALUES = {"sentiment": ("neg", "pos"), "gender": ("female", "male"), "tense": ("past", "present")}


def _write_yelp_dataset(path, per_combination=3):
    records = []
    names = sorted(YELP_VALUES)
    for values in itertools.product(*(YELP_VALUES[name] for name in names)):
        attributes = dict(zip(names, values))
        for i in range(per_combination):
            records.append(DatasetRecord(attributes=attributes, text=f"{' '.join(values)} reseña {i}"))
    write_dataset(records, path)
    return path


def _experiment_manifest(path):
    schema = parse_shape("2x2x2")
    id_set = CombinationSet(schema, [(0, 0, 0), (0, 0, 1), (0, 1, 0), (1, 1, 1)])
    split = Split(protocol=Protocol.ACD, id_set=id_set, comp_set=full_product(schema).difference(id_set))
    write_manifest(split_to_manifest(split), path)
    return path


def test_split_holdout_writes_bundle(tmp_path):
    print("🧪 Probando split --protocol holdout...")

    data = _write_yelp_dataset(tmp_path / "yelp.jsonl")
    out = tmp_path / "holdout"
    result = runner.invoke(app, ["split", "--protocol", "holdout", "--k", "1", "--data", str(data), "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert len(list(out.glob("holdout_*.json"))) == 8
    assert "8 manifests" in result.output

    shape_out = tmp_path / "fewshot"
    result = runner.invoke(app, ["split", "--protocol", "fewshot", "--shape", "2x2", "--out", str(shape_out)])
    assert result.exit_code == 0, result.output
    assert len(list(shape_out.glob("fewshot_*.json"))) == 2

    print("✅ Bundle Hold-Out escrito")


def test_split_acd_and_random_are_reproducible(tmp_path):
    print("\n🧪 Probando reproducibilidad con --seed...")

    for protocol, extra in (("acd", ["--eta", "0.01", "--t1", "10"]), ("random", ["--n", "5"])):
        outputs = []
        for attempt in ("a", "b"):
            out = tmp_path / f"{protocol}_{attempt}"
            result = runner.invoke(app, ["split", "--protocol", protocol, "--shape", "2x2x2", "--seed", "7",
                                         "--out", str(out), *extra])
            assert result.exit_code == 0, result.output
            outputs.append([p.read_bytes() for p in sorted(out.glob("*.json"))])
        assert outputs[0] == outputs[1]
        assert outputs[0]

    print("✅ Mismos bytes con la misma semilla")


def test_split_usage_and_validation_errors(tmp_path):
    print("\n🧪 Probando errores de split...")

    result = runner.invoke(app, ["split", "--shape", "2x2x2", "--out", str(tmp_path / "x")])
    assert result.exit_code == 2

    result = runner.invoke(app, ["split", "--protocol", "acd", "--shape", "3x3", "--out", str(tmp_path / "x")])
    assert result.exit_code == 1

    result = runner.invoke(app, ["split", "--protocol", "holdout", "--out", str(tmp_path / "x")])
    assert result.exit_code == 1

    result = runner.invoke(app, ["split", "--protocol", "acd", "--shape", "2x2x2", "--eta", "1.5",
                                 "--out", str(tmp_path / "x")])
    assert result.exit_code == 1
    assert "--eta" in result.output
    assert "eta_threshold" not in result.output

    result = runner.invoke(app, ["meta-train", "--out", str(tmp_path / "m"), "--lambda", "-1"])
    assert result.exit_code == 1
    assert "--lambda" in result.output

    print("✅ Códigos de salida correctos")


def test_check_reports_uncovered_attribute(tmp_path):
    print("\n🧪 Probando check...")

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({
        "schema": {"aspects": [{"name": "sentiment", "values": ["neg", "pos"]},
                               {"name": "topic", "values": ["movie", "sport"]}]},
        "protocol": "acd",
        "id_combinations": [["neg", "movie"], ["neg", "sport"]],
        "comp_combinations": [["pos", "movie"], ["pos", "sport"]],
    }), encoding="utf-8")
    good = _experiment_manifest(tmp_path / "good.json")

    result = runner.invoke(app, ["check", str(good)])
    assert result.exit_code == 0, result.output
    assert f"{good}\telegible" in result.output

    result = runner.invoke(app, ["check", str(good), str(bad)])
    assert result.exit_code == 1
    assert f"{bad}\tno elegible" in result.output

    data = _write_yelp_dataset(tmp_path / "yelp.jsonl", per_combination=2)
    result = runner.invoke(app, ["check", "--data", str(data)])
    assert result.exit_code == 0, result.output
    assert "female-neg-past\t2" in result.output

    assert runner.invoke(app, ["check"]).exit_code == 2

    print("✅ check funciona correctamente")


def test_divergence_command(tmp_path):
    print("\n🧪 Probando divergence...")

    manifest = _experiment_manifest(tmp_path / "split.json")
    result = runner.invoke(app, ["divergence", str(manifest)])
    assert result.exit_code == 0, result.output
    path, value = result.output.strip().splitlines()[-1].split("\t")
    assert path == str(manifest)
    assert abs(float(value) - 1 / 3) < 1e-9

    print("✅ divergence funciona correctamente")


def test_metrics_command(tmp_path):
    print("\n🧪 Probando metrics...")

    scores = tmp_path / "ctrl.yaml"
    scores.write_text(
        "original:\n"
        "  0: {id: {accuracy: {sentiment: 79.10}}}\n"
        "holdout:\n"
        "  0:\n"
        "    id: {accuracy: {sentiment: 78.89}}\n"
        "    comp: {accuracy: {sentiment: 75.09}}\n"
        "acd:\n"
        "  0:\n"
        "    id: {accuracy: {sentiment: 77.83}}\n"
        "    comp: {accuracy: {sentiment: 69.96}}\n",
        encoding="utf-8",
    )
    result = runner.invoke(app, ["metrics", str(scores)])
    assert result.exit_code == 0, result.output
    assert "a_avg\tp_avg\tg_avg" in result.output
    assert "76.17\t-\t7.46" in result.output

    partial = tmp_path / "partial.yaml"
    partial.write_text("original:\n  0: {id: {accuracy: {sentiment: 79.10}}}\n", encoding="utf-8")
    assert runner.invoke(app, ["metrics", str(partial)]).exit_code == 1

    print("✅ metrics funciona correctamente")


def test_dist3_command(tmp_path):
    print("\n🧪 Probando dist3...")

    texts = tmp_path / "textos.txt"
    texts.write_text("a b c d\n", encoding="utf-8")
    result = runner.invoke(app, ["dist3", str(texts)])
    assert result.exit_code == 0, result.output
    assert result.output.strip().splitlines()[-1] == "1.000000"

    short = tmp_path / "corto.txt"
    short.write_text("a b\n", encoding="utf-8")
    assert runner.invoke(app, ["dist3", str(short)]).exit_code == 1

    print("✅ dist3 funciona correctamente")


def test_sample_pcomp_command(tmp_path):
    """Las líneas emitidas son registros JSON del dataset."""
    print("\n🧪 Probando sample-pcomp...")

    data = _write_yelp_dataset(tmp_path / "yelp.jsonl")
    successes = 0
    for seed in range(10):
        result = runner.invoke(app, ["sample-pcomp", "--data", str(data), "--batch-size", "4", "--seed", str(seed)])
        assert result.exit_code in (0, 1), result.output
        if result.exit_code:
            continue
        successes += 1
        lines = [line for line in result.output.splitlines() if line.startswith("{")]
        assert lines
        for line in lines:
            record = json.loads(line)
            assert set(record["attributes"]) == set(YELP_VALUES)

    assert successes > 0
    print("✅ sample-pcomp funciona correctamente")


def test_meta_train_command(tmp_path):
    print("\n🧪 Probando meta-train...")

    manifest = _experiment_manifest(tmp_path / "split.json")
    out = tmp_path / "meta"
    result = runner.invoke(app, ["meta-train", "--out", str(out), "--manifest", str(manifest),
                                 "--steps", "20", "--batch-size", "2", "--lambda", "0.5"])
    assert result.exit_code == 0, result.output

    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert set(summary) >= {"meta", "baseline", "train_config"}
    steps = [json.loads(line) for line in (out / "steps.jsonl").read_text(encoding="utf-8").splitlines()]
    assert len(steps) == 40
    assert {step["trainer"] for step in steps} == {"meta", "baseline"}

    wrong_shape = runner.invoke(app, ["meta-train", "--out", str(out), "--manifest", str(manifest), "--shape", "2x3"])
    assert wrong_shape.exit_code == 1

    print("✅ meta-train funciona correctamente")


def test_cli_dispatch_exit_codes(tmp_path):
    print("\n🧪 Probando cli_dispatch...")

    assert cli_flag(("eta_threshold",)) == "--eta"
    assert cli_flag(("lambda_weight",)) == "--lambda"
    assert cli_flag(("otro",)) == "otro"

    texts = tmp_path / "textos.txt"
    texts.write_text("a a a a a\n", encoding="utf-8")
    assert cli_dispatch(["dist3", str(texts)]) == 0
    assert cli_dispatch(["split"]) == 2
    assert cli_dispatch(["no-existe"]) == 2
    assert cli_dispatch(["check"]) == 2
    assert cli_dispatch(["split", "--protocol", "acd", "--shape", "2x2x2", "--eta", "1.5",
                         "--out", str(tmp_path / "x")]) == 1
    assert cli_dispatch(["split", "--protocol", "holdout", "--shape", "2x2", "--out", str(tmp_path / "h")]) == 0
    assert len(list((tmp_path / "h").glob("holdout_*.json"))) == 4
    assert cli_dispatch(["dist3", str(tmp_path / "falta.jsonl")]) == 1

    print("✅ Códigos de salida correctos")


if __name__ == "__main__":
    import pathlib
    import tempfile

    print("🚀 Iniciando pruebas de la CLI\n")
    tests = (
        test_split_holdout_writes_bundle,
        test_split_acd_and_random_are_reproducible,
        test_split_usage_and_validation_errors,
        test_check_reports_uncovered_attribute,
        test_divergence_command,
        test_metrics_command,
        test_dist3_command,
        test_sample_pcomp_command,
        test_meta_train_command,
        test_cli_dispatch_exit_codes,
    )
    for test in tests:
        with tempfile.TemporaryDirectory() as folder:
            test(pathlib.Path(folder))
    print("\n🎉 Todas las pruebas pasaron")
