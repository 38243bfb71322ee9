#!/usr/bin/env python3
"""
Pruebas del entrenamiento Meta-MCTG sobre el generador de juguete:
pérdida y gradientes exactos, paso meta de segundo orden y experimento.
"""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from divergence_module import compound_divergence
from errors import CompSplitError, NoPseudoCompCandidates
from meta_training.models import QuadraticModel, ScenarioConfig, TokenBatch, ToyGenModel, TrainConfig
from meta_training.utils import (
    attribute_accuracy,
    attribute_row_distances,
    baseline_step,
    build_scenario,
    check_meta_gradient,
    finite_difference_gradient,
    meta_step,
    pseudo_comp_loss,
    relative_error,
    run_experiment,
    train,
    train_loss,
)
from protocols.models import AcdSearchConfig
from protocols.utils import fewshot_splits
from schema_module import AttributeSchema, CombinationSet, Protocol, Split, full_product

SCHEMA = AttributeSchema.from_sizes([2, 2, 2])


def _experiment_split() -> Split:
    """C_id = {000, 001, 010, 111}: balanceada, elegible y con D = 1/3"""
    id_set = CombinationSet(SCHEMA, [(0, 0, 0), (0, 0, 1), (0, 1, 0), (1, 1, 1)])
    return Split(
        protocol=Protocol.ACD,
        id_set=id_set,
        comp_set=full_product(SCHEMA).difference(id_set),
    )


def _random_model(rng: np.random.Generator, schema: AttributeSchema, vocab_size: int, **kwargs) -> ToyGenModel:
    theta = rng.normal(scale=0.5, size=(schema.total_values, vocab_size))
    phi = rng.normal(scale=0.3, size=vocab_size)
    return ToyGenModel(schema, theta, phi, **kwargs)


def _random_batch(rng: np.random.Generator, schema: AttributeSchema, vocab_size: int, size: int = 4) -> TokenBatch:
    combinations = np.stack([rng.integers(0, a, size=size) for a in schema.sizes], axis=1)
    counts = rng.integers(0, 4, size=(size, vocab_size)).astype(float)
    return TokenBatch(combinations, counts)


def test_uniform_loss_at_zero():
    """Con θ = 0 y φ = 0 la NLL por secuencia es L·ln V."""
    print("🧪 Probando la pérdida del modelo uniforme...")

    model = ToyGenModel.zeros(SCHEMA, 10)
    counts = np.zeros((3, 10))
    counts[:, 0] = 16
    batch = TokenBatch([(0, 0, 0), (1, 0, 1), (0, 1, 1)], counts)
    loss, grad = train_loss(model, batch)
    assert loss == pytest.approx(16 * math.log(10), rel=1e-12)
    assert grad.shape == (SCHEMA.total_values, 10)

    with pytest.raises(CompSplitError):
        TokenBatch(np.zeros((0, 3)), np.zeros((0, 10)))
    with pytest.raises(CompSplitError):
        ToyGenModel.zeros(SCHEMA, 1)

    print("✅ Pérdida uniforme correcta")


def test_loss_decreases_with_scale_on_separable_data():
    print("\n🧪 Probando la pérdida al escalar el θ óptimo...")

    vocab_size = SCHEMA.total_values + 2
    one_hot = np.zeros((SCHEMA.total_values, vocab_size))
    one_hot[np.arange(SCHEMA.total_values), np.arange(SCHEMA.total_values)] = 1.0

    combinations = np.array(full_product(SCHEMA).sorted())
    counts = np.zeros((len(combinations), vocab_size))
    offsets = np.array(SCHEMA.offsets)
    for row, combination in enumerate(combinations):
        counts[row, combination + offsets] = 2
    batch = TokenBatch(combinations, counts)

    losses = [ToyGenModel(SCHEMA, scale * one_hot).loss(batch) for scale in (1, 2, 4)]
    assert losses[0] > losses[1] > losses[2]

    print("✅ La pérdida decrece con la escala")


def test_gradient_matches_finite_differences():
    """20 puntos aleatorios, error relativo < 1e-6."""
    print("\n🧪 Probando el gradiente contra diferencias finitas...")

    schema = AttributeSchema.from_sizes([2, 3])
    rng = np.random.default_rng(42)
    for _ in range(20):
        model = _random_model(rng, schema, 5)
        batch = _random_batch(rng, schema, 5)
        _, analytic = train_loss(model, batch)
        numeric = finite_difference_gradient(lambda theta: model.with_theta(theta).loss(batch), model.theta)
        assert relative_error(analytic, numeric) < 1e-6

    print("✅ Gradiente exacto")


def test_aux_gradient_matches_finite_differences():
    print("\n🧪 Probando el término auxiliar...")

    schema = AttributeSchema.from_sizes([3, 2])
    rng = np.random.default_rng(8)
    for _ in range(10):
        model = _random_model(rng, schema, 4, aux_weight=0.2)
        batch = _random_batch(rng, schema, 4)
        _, analytic = train_loss(model, batch)
        numeric = finite_difference_gradient(lambda theta: model.with_theta(theta).loss(batch), model.theta)
        assert relative_error(analytic, numeric) < 1e-6

        value, _ = model.aux_loss_and_grad()
        assert -1.0 <= value <= 1.0

        # Producto Hessiano-vector contra diferencias centradas del gradiente
        vector = rng.normal(size=model.theta.shape)
        eps = 1e-6
        _, aux_plus = model.aux_loss_and_grad(model.theta + eps * vector)
        _, aux_minus = model.aux_loss_and_grad(model.theta - eps * vector)
        assert relative_error(model.aux_hvp(vector), (aux_plus - aux_minus) / (2 * eps)) < 1e-6
        _, plus = model.with_theta(model.theta + eps * vector).loss_and_grad(batch)
        _, minus = model.with_theta(model.theta - eps * vector).loss_and_grad(batch)
        assert relative_error(model.hvp(batch, vector), (plus - minus) / (2 * eps)) < 1e-6

    print("✅ Gradiente y Hessiano del término auxiliar exactos")


def test_meta_gradient_matches_finite_differences():
    """El gradiente de segundo orden coincide con las diferencias finitas del objetivo meta."""
    print("\n🧪 Probando el gradiente meta contra diferencias finitas...")

    schema = AttributeSchema.from_sizes([2, 3])
    rng = np.random.default_rng(17)
    config = TrainConfig(alpha_lr=0.1, lambda_weight=0.5)
    first_order = config.model_copy(update={"second_order": False})
    for _ in range(20):
        model = _random_model(rng, schema, 5)
        train_batch = _random_batch(rng, schema, 5)
        pcomp_batch = _random_batch(rng, schema, 5)
        assert check_meta_gradient(model, train_batch, pcomp_batch, config) < 1e-5
        assert check_meta_gradient(model, train_batch, pcomp_batch, first_order) > 1e-4

    print("✅ Gradiente meta exacto")


def test_pseudo_comp_loss_cases():
    print("\n🧪 Probando pseudo_comp_loss...")

    rng = np.random.default_rng(3)
    model = _random_model(rng, SCHEMA, 6)
    train_batch = _random_batch(rng, SCHEMA, 6)
    pcomp_batch = _random_batch(rng, SCHEMA, 6)
    before = model.theta.copy()

    assert pseudo_comp_loss(model, train_batch, pcomp_batch, 0.0) == pytest.approx(model.loss(pcomp_batch), rel=1e-12)

    _, grad = train_loss(model, train_batch)
    descended = model.with_theta(model.theta - 0.05 * grad)
    assert pseudo_comp_loss(model, train_batch, train_batch, 0.05) == pytest.approx(descended.loss(train_batch), rel=1e-12)

    # θ queda intacto tras el paso interno
    assert np.array_equal(model.theta, before)

    quadratic = QuadraticModel([1.5, -2.0])
    assert pseudo_comp_loss(quadratic, None, None, 0.1) == pytest.approx(0.5 * 0.9 ** 2 * (1.5 ** 2 + 2.0 ** 2))

    print("✅ pseudo_comp_loss funciona correctamente")


def test_quadratic_meta_step_closed_form():
    """θ′ = θ − β(1 + λ(1−α)²)θ para L = ½θ²."""
    print("\n🧪 Probando el paso meta sobre la cuadrática...")

    dummy = TokenBatch(np.zeros((1, 2)), np.zeros((1, 3)))
    theta = np.array([1.5, -0.7, 3.0])
    alpha, beta, lam = 0.1, 0.05, 0.3
    config = TrainConfig(alpha_lr=alpha, beta_lr=beta, lambda_weight=lam)

    updated, report = meta_step(QuadraticModel(theta), dummy, dummy, config)
    expected = theta - beta * (1 + lam * (1 - alpha) ** 2) * theta
    assert np.max(np.abs(updated.theta - expected)) <= 1e-12
    assert report.loss_pcomp == pytest.approx(0.5 * (1 - alpha) ** 2 * np.sum(theta ** 2))

    print("✅ Forma cerrada reproducida")


def test_lambda_zero_matches_plain_step():
    print("\n🧪 Probando λ = 0 en un paso...")

    rng = np.random.default_rng(21)
    model = _random_model(rng, SCHEMA, 6)
    train_batch = _random_batch(rng, SCHEMA, 6)
    pcomp_batch = _random_batch(rng, SCHEMA, 6)
    config = TrainConfig(alpha_lr=0.1, lambda_weight=0.0)

    meta_model, _ = meta_step(model, train_batch, pcomp_batch, config)
    plain_model, _ = baseline_step(model, train_batch, config)
    assert np.max(np.abs(meta_model.theta - plain_model.theta)) <= 1e-12

    print("✅ λ = 0 equivale al paso simple")


def test_train_config_defaults():
    print("\n🧪 Probando TrainConfig...")

    config = TrainConfig(alpha_lr=0.05, batch_size=8)
    assert config.beta_lr == pytest.approx(0.05)
    assert config.pcomp_size == 8
    assert TrainConfig().lambda_weight == pytest.approx(0.01)
    for bad in ({"alpha_lr": 0.0}, {"beta_lr": -1.0}, {"lambda_weight": -0.1}):
        with pytest.raises(ValidationError):
            TrainConfig(**bad)

    print("✅ TrainConfig funciona correctamente")


def test_lambda_zero_training_matches_baseline():
    """100 pasos con λ = 0: mismos parámetros que el entrenador de referencia."""
    print("\n🧪 Probando 100 pasos con λ = 0...")

    scenario = build_scenario(ScenarioConfig(seed=2, records_per_combination=20), _experiment_split())
    config = TrainConfig(lambda_weight=0.0, steps=100, batch_size=2, seed=2)
    meta_model, meta_report = train(scenario, config, meta=True)
    plain_model, plain_report = train(scenario, config, meta=False)
    assert np.max(np.abs(meta_model.theta - plain_model.theta)) <= 1e-12
    assert meta_report.id_accuracy == plain_report.id_accuracy
    assert meta_report.comp_accuracy == plain_report.comp_accuracy
    assert meta_report.fallback_steps < config.steps

    again, _ = train(scenario, config, meta=True)
    assert np.array_equal(again.theta, meta_model.theta)

    print("✅ Entrenamiento idéntico")


def test_full_batch_loss_is_monotone():
    """Con el pool completo como lote y β pequeño, L_train no crece en 50 pasos."""
    print("\n🧪 Probando la monotonía de la pérdida...")

    scenario = build_scenario(ScenarioConfig(records_per_combination=20), _experiment_split())
    config = TrainConfig(alpha_lr=0.01, steps=50, batch_size=len(scenario.records))
    for meta in (True, False):
        log = []
        train(scenario, config, meta=meta, log=log)
        losses = np.array([report.loss_train for report in log])
        assert len(losses) == 50
        assert np.all(np.diff(losses) <= 1e-9)

    print("✅ La pérdida es monótona")


def test_experiment_reaches_high_id_accuracy():
    print("\n🧪 Probando el experimento en varias semillas...")

    for seed in range(5):
        scenario = build_scenario(ScenarioConfig(seed=seed), _experiment_split())
        report = run_experiment(scenario, TrainConfig(steps=300, batch_size=2, lambda_weight=0.5, seed=seed))
        assert report.meta.id_accuracy > 95.0
        assert report.baseline.id_accuracy > 95.0
        assert report.meta.fallback_steps < 300
        assert 0.0 <= report.meta.comp_accuracy <= 100.0
        assert len(report.comp_combinations) == 4

    print("✅ Precisión en distribución > 95%")


def test_meta_matches_or_beats_baseline_over_twenty_seeds():
    """Configuración por defecto sobre una división de máxima divergencia de 2x2x2."""
    print("\n🧪 Probando Meta-MCTG contra la referencia en 20 semillas...")

    meta_comp, baseline_comp = [], []
    for seed in range(20):
        scenario = build_scenario(ScenarioConfig(seed=seed))
        assert compound_divergence(scenario.split.id_set, scenario.split.comp_set) == pytest.approx(0.5)
        report = run_experiment(scenario, TrainConfig(seed=seed))
        assert report.meta.id_accuracy > 95.0, seed
        assert report.baseline.id_accuracy > 95.0, seed
        meta_comp.append(report.meta.comp_accuracy)
        baseline_comp.append(report.baseline.comp_accuracy)

    assert np.median(meta_comp) >= np.median(baseline_comp)
    print(f"✅ Mediana comp: meta {np.median(meta_comp):.2f} vs referencia {np.median(baseline_comp):.2f}")


def test_zero_steps_stays_uniform():
    """Sin pasos el modelo sigue uniforme y los empates eligen el primer valor."""
    print("\n🧪 Probando cero pasos...")

    scenario = build_scenario(ScenarioConfig(), _experiment_split())
    logs = {}
    report = run_experiment(scenario, TrainConfig(steps=0), logs)
    assert report.meta.id_accuracy == report.baseline.id_accuracy
    assert report.meta.id_accuracy == pytest.approx(100.0 * 7 / 12)
    assert report.meta.comp_accuracy == pytest.approx(100.0 * 5 / 12)
    assert logs == {"meta": [], "baseline": []}

    untouched = ToyGenModel.zeros(SCHEMA, scenario.vocab_size)
    assert attribute_accuracy(untouched, scenario, scenario.split.id_set) == pytest.approx(100.0 * 7 / 12)
    assert {name: d.shape for name, d in attribute_row_distances(untouched).items()} == {"a0": (2, 2), "a1": (2, 2), "a2": (2, 2)}

    print("✅ Modelo uniforme sin entrenar")


def test_fewshot_split_has_no_pseudo_comp():
    print("\n🧪 Probando una división Few-Shot...")

    split = fewshot_splits(full_product(SCHEMA), AcdSearchConfig()).splits[0]
    scenario = build_scenario(ScenarioConfig(), split)
    with pytest.raises(NoPseudoCompCandidates):
        run_experiment(scenario, TrainConfig(steps=5))

    print("✅ Few-Shot señalado correctamente")


if __name__ == "__main__":
    print("🚀 Iniciando pruebas de Meta-MCTG\n")
    test_uniform_loss_at_zero()
    test_loss_decreases_with_scale_on_separable_data()
    test_gradient_matches_finite_differences()
    test_aux_gradient_matches_finite_differences()
    test_meta_gradient_matches_finite_differences()
    test_pseudo_comp_loss_cases()
    test_quadratic_meta_step_closed_form()
    test_lambda_zero_matches_plain_step()
    test_train_config_defaults()
    test_lambda_zero_training_matches_baseline()
    test_full_batch_loss_is_monotone()
    test_experiment_reaches_high_id_accuracy()
    test_meta_matches_or_beats_baseline_over_twenty_seeds()
    test_zero_steps_stays_uniform()
    test_fewshot_split_has_no_pseudo_comp()
    print("\n🎉 Todas las pruebas pasaron")
