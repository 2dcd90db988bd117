import numpy as np
import pytest

from biae.core import forward, init_parameters, parameter_count
from biae.encoder import ToyEncoder
from biae.errors import ValidationError
from biae.training import (Adam, TrainConfig, config_hash, linear_warmup_schedule,
                           load_checkpoint, prepare_examples, save_checkpoint,
                           train_decision)
from biae.weak_labels import HashEmbeddingOracle, cache_record, labels_from_record

from synth import synthetic_corpus


@pytest.fixture(scope="module")
def small_setup():
    corpus = synthetic_corpus(12, seed=4)
    encoder = ToyEncoder(seed=5, dim=12)
    oracle = HashEmbeddingOracle(seed=5, dimension=32)
    examples = prepare_examples(corpus, encoder, oracle)
    return corpus, encoder, oracle, examples


class TestTrainConfig:
    def test_defaults_follow_reported_recipe(self):
        config = TrainConfig()
        assert config.decision_weight == 2.0
        assert config.learning_rate == 5e-5
        assert config.epochs == 5
        assert config.batch_size == 20
        assert config.dropout == 0.3

    def test_validation(self):
        with pytest.raises(ValidationError):
            TrainConfig(dropout=1.0)
        with pytest.raises(ValidationError):
            TrainConfig(epochs=0)


class TestSchedule:
    def test_warmup_then_linear_decay(self):
        lr_at = linear_warmup_schedule(1.0, total_steps=100, warmup_fraction=0.1)
        assert lr_at(0) == pytest.approx(0.1)
        assert lr_at(9) == pytest.approx(1.0)
        assert lr_at(10) == pytest.approx(1.0)
        assert lr_at(55) == pytest.approx(0.5)
        assert lr_at(100) == pytest.approx(0.0)

    def test_monotone_after_warmup(self):
        lr_at = linear_warmup_schedule(0.01, 50, 0.2)
        values = [lr_at(s) for s in range(50)]
        peak = int(np.argmax(values))
        assert all(a >= b for a, b in zip(values[peak:], values[peak + 1:]))


class TestAdam:
    def test_minimizes_quadratic(self):
        x = {"x": np.array([5.0, -3.0])}
        optimizer = Adam(x)
        for _ in range(500):
            optimizer.step({"x": 2 * x["x"]}, lr=0.05)
        np.testing.assert_allclose(x["x"], 0.0, atol=1e-3)


class TestPrepareExamples:
    def test_shapes_and_labels(self, small_setup):
        corpus, encoder, _, examples = small_setup
        for instance, example in zip(corpus, examples):
            m = len(example.marked.hypothesis_marker_positions)
            n = len(example.marked.premise_marker_positions)
            assert example.raw_hyp.shape == (m, encoder.dim)
            assert example.raw_prem.shape == (n, encoder.dim)
            assert example.entailment.m == m
            assert example.entailment.n == n
            assert example.gold is instance.gold_decision

    def test_cache_miss_names_instance(self, small_setup):
        corpus, encoder, oracle, _ = small_setup
        with pytest.raises(ValidationError, match=corpus[0].utterance_id):
            prepare_examples(corpus, encoder, label_cache={})

    def test_cache_is_used(self, small_setup):
        corpus, encoder, oracle, examples = small_setup
        cache = {}
        for instance, example in zip(corpus, examples):
            record = cache_record(instance.utterance_id, oracle.name,
                                  example.alignment, example.entailment)
            cache[instance.utterance_id] = record
        from_cache = prepare_examples(corpus, encoder, label_cache=cache)
        for a, b in zip(examples, from_cache):
            assert a.alignment.premise_to_hypothesis == \
                b.alignment.premise_to_hypothesis
            assert a.entailment.pair_labels == b.entailment.pair_labels


class TestTrainDecision:
    def _config(self, **overrides):
        defaults = dict(decision_weight=2.0, learning_rate=0.02, epochs=30,
                        batch_size=6, dropout=0.0, warmup_fraction=0.1,
                        seed=11, encoder_name="toy:5:12")
        defaults.update(overrides)
        return TrainConfig(**defaults)

    def test_same_seed_identical_runs(self, small_setup):
        corpus, _, oracle, _ = small_setup

        def run():
            encoder = ToyEncoder(seed=5, dim=12)
            examples = prepare_examples(corpus, encoder, oracle)
            return train_decision(examples, encoder, self._config(dropout=0.3))

        first, second = run(), run()
        assert first.loss_curve == second.loss_curve
        assert first.loss_curve[-1] == second.loss_curve[-1]
        for name, array in first.parameters.as_dict().items():
            np.testing.assert_array_equal(array,
                                          second.parameters.as_dict()[name])

    def test_loss_decreases(self, small_setup):
        corpus, _, oracle, _ = small_setup
        encoder = ToyEncoder(seed=5, dim=12)
        examples = prepare_examples(corpus, encoder, oracle)
        result = train_decision(examples, encoder, self._config())
        assert np.mean(result.loss_curve[-10:]) < np.mean(result.loss_curve[:10])

    def test_encoder_affine_receives_updates(self, small_setup):
        corpus, _, oracle, _ = small_setup
        encoder = ToyEncoder(seed=5, dim=12)
        examples = prepare_examples(corpus, encoder, oracle)
        train_decision(examples, encoder, self._config(epochs=5))
        assert np.abs(encoder.scale - 1.0).max() > 1e-8
        assert np.abs(encoder.shift).max() > 1e-8

    def test_empty_examples_rejected(self):
        encoder = ToyEncoder(seed=5, dim=12)
        with pytest.raises(ValidationError):
            train_decision([], encoder, self._config())


class TestCheckpoint:
    def test_round_trip(self, tmp_path, small_setup):
        corpus, _, oracle, _ = small_setup
        encoder = ToyEncoder(seed=5, dim=12)
        examples = prepare_examples(corpus, encoder, oracle)
        config = TrainConfig(decision_weight=2.0, learning_rate=0.02, epochs=3,
                             batch_size=6, dropout=0.0, warmup_fraction=0.1,
                             seed=11, encoder_name=encoder.name)
        result = train_decision(examples, encoder, config)
        path = tmp_path / "model.npz"
        save_checkpoint(path, result.parameters, encoder, config)

        params, restored_encoder, meta = load_checkpoint(path)
        assert meta["dim"] == 12
        assert meta["seed"] == 11
        assert meta["encoder"] == encoder.name
        assert meta["config_hash"] == config_hash(config)
        for name, array in result.parameters.as_dict().items():
            np.testing.assert_array_equal(array, params.as_dict()[name])
        assert isinstance(restored_encoder, ToyEncoder)
        np.testing.assert_array_equal(restored_encoder.scale, encoder.scale)
        np.testing.assert_array_equal(restored_encoder.shift, encoder.shift)

    def test_restored_model_predicts_identically(self, tmp_path, small_setup):
        corpus, _, oracle, _ = small_setup
        encoder = ToyEncoder(seed=5, dim=12)
        examples = prepare_examples(corpus, encoder, oracle)
        config = TrainConfig(learning_rate=0.02, epochs=3, batch_size=6,
                             dropout=0.0, seed=11, encoder_name=encoder.name)
        result = train_decision(examples, encoder, config)
        path = tmp_path / "model.npz"
        save_checkpoint(path, result.parameters, encoder, config)
        params, restored_encoder, _ = load_checkpoint(path)

        example = examples[0]
        original = forward(encoder.apply_affine(example.raw_hyp),
                           encoder.apply_affine(example.raw_q),
                           encoder.apply_affine(example.raw_prem)
                           if example.raw_prem.size else example.raw_prem,
                           result.parameters)
        restored = forward(restored_encoder.apply_affine(example.raw_hyp),
                           restored_encoder.apply_affine(example.raw_q),
                           restored_encoder.apply_affine(example.raw_prem)
                           if example.raw_prem.size else example.raw_prem,
                           params)
        np.testing.assert_array_equal(original.outcome.probabilities,
                                      restored.outcome.probabilities)

    def test_parameter_count_of_trained_model(self, small_setup):
        _, encoder, _, examples = small_setup
        params = init_parameters(encoder.dim, seed=0)
        total = sum(a.size for a in params.as_dict().values())
        assert total == parameter_count(encoder.dim)
