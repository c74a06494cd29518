import json

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sysnoise.errors import ConfigError
from sysnoise.fixtures import toy_corpus
from sysnoise.mixtrain import (DEFAULT_RESIZES, FeatureBank, Strategy, ToyModel, TrainConfig, VariantId,
                               accuracy, eval_variants_for, evaluate_matrix, forward, history_json,
                               load_model, loss_and_grad, model_bytes, model_from_bytes, predict,
                               run_experiment, sample_variant, save_model, softmax, train)


def random_model(rng, c=3, f=5, scale=1.0):
    return ToyModel(rng.normal(0, scale, (c, f)), rng.normal(0, scale, c))


@pytest.fixture(scope="module")
def small_bank():
    jpegs, labels = toy_corpus(200, n_classes=2, seed=11)
    return FeatureBank(jpegs, labels, side=16)


@pytest.fixture(scope="module")
def separable_bank():
    # low jitter keeps the class color clusters well apart
    jpegs, labels = toy_corpus(200, n_classes=2, seed=11, color_jitter=8, noise=6)
    return FeatureBank(jpegs, labels, side=16)


class TestVariants:
    def test_parse(self):
        assert VariantId.parse("opencv-bicubic") == VariantId("preset-pil", "opencv-bicubic")
        v = VariantId.parse("preset-ffmpeg/pil-nearest")
        assert v.label == "preset-ffmpeg/pil-nearest"

    def test_decoder_alias_canonical(self):
        assert VariantId("pil", "pil-bilinear") == VariantId("preset-pil", "pil-bilinear")

    def test_bad_variant(self):
        with pytest.raises(ConfigError):
            VariantId.parse("pil-area")
        with pytest.raises(ConfigError):
            VariantId.parse("nope/pil-bilinear")

    def test_strategy_parse(self):
        assert Strategy.parse("fixed:pil-bilinear").name == "fixed:preset-pil/pil-bilinear"
        assert Strategy.parse("mix-both").mode == "mix-both"

    @pytest.mark.parametrize("text", ["", "mix", "fixed:", "fixed:pil-area", "random", "mix-everything"])
    def test_strategy_parse_errors(self, text):
        with pytest.raises(ConfigError):
            Strategy.parse(text)

    def test_empty_sets(self):
        with pytest.raises(ConfigError):
            Strategy("mix-resize", resizes=())
        with pytest.raises(ConfigError):
            Strategy("mix-decoder", decoders=())

    def test_eval_axis(self):
        assert len(eval_variants_for("resize")) == len(DEFAULT_RESIZES)
        assert len(eval_variants_for("decoder")) == 3
        assert len(eval_variants_for("both")) == 3 * len(DEFAULT_RESIZES)
        with pytest.raises(ConfigError):
            eval_variants_for("color")


class TestSampling:
    def test_fixed_always_same(self):
        s = Strategy.parse("fixed:opencv-nearest")
        assert {sample_variant(s, i, 3) for i in range(200)} == {s.variant}

    def test_deterministic(self):
        s = Strategy("mix-both")
        a = [sample_variant(s, i, 9) for i in range(100)]
        assert a == [sample_variant(s, i, 9) for i in range(100)]
        assert a != [sample_variant(s, i, 10) for i in range(100)]

    def test_order_independent(self):
        s = Strategy("mix-resize")
        forward_order = [sample_variant(s, i, 1) for i in range(50)]
        backward = [sample_variant(s, i, 1) for i in reversed(range(50))][::-1]
        assert forward_order == backward

    def test_mix_resize_keeps_default_decoder(self):
        s = Strategy("mix-resize")
        assert {sample_variant(s, i, 0).decoder for i in range(100)} == {"preset-pil"}

    def test_uniform(self):
        s = Strategy("mix-resize")
        n = 30000
        counts = {}
        for i in range(n):
            r = sample_variant(s, i, 5).resize
            counts[r] = counts.get(r, 0) + 1
        k = len(DEFAULT_RESIZES)
        p = 1 / k
        sigma = np.sqrt(n * p * (1 - p))
        assert set(counts) == set(DEFAULT_RESIZES)
        for c in counts.values():
            assert abs(c - n * p) < 3 * sigma

    def test_mix_both_covers_grid(self):
        s = Strategy("mix-both")
        seen = {sample_variant(s, i, 2) for i in range(3000)}
        assert len(seen) == 3 * len(DEFAULT_RESIZES)


class TestForward:
    def test_zero_model_uniform(self, rng):
        p = forward(ToyModel.zeros(4, 6), rng.normal(size=(5, 6)))
        np.testing.assert_allclose(p, 0.25)

    def test_shift_invariance(self, rng):
        s = rng.normal(size=(4, 3))
        np.testing.assert_allclose(softmax(s), softmax(s + 1000.0), atol=1e-12)

    def test_large_scores_stable(self):
        p = softmax(np.array([[1e4, 0.0, -1e4]]))
        assert np.all(np.isfinite(p)) and p[0, 0] == pytest.approx(1.0)

    def test_mpmath_oracle(self, rng):
        mpmath.mp.dps = 50
        m = random_model(rng, 3, 4, 2.0)
        x = rng.normal(size=(6, 4))
        p = forward(m, x)
        for i in range(6):
            s = [mpmath.fsum(mpmath.mpf(m.weights[k, j]) * mpmath.mpf(x[i, j]) for j in range(4)) + mpmath.mpf(m.bias[k])
                 for k in range(3)]
            e = [mpmath.exp(v) for v in s]
            z = mpmath.fsum(e)
            for k in range(3):
                assert abs(p[i, k] - float(e[k] / z)) < 1e-12

    @given(st.integers(0, 2**31))
    @settings(max_examples=30)
    def test_rows_sum_to_one(self, seed):
        rng = np.random.default_rng(seed)
        p = forward(random_model(rng, 5, 3, 5.0), rng.normal(size=(4, 3)))
        np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(p >= 0)

    def test_single_vector(self, rng):
        assert forward(random_model(rng), rng.normal(size=5)).shape == (1, 3)

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ConfigError):
            forward(random_model(rng), np.zeros((2, 4)))

    def test_predict_argmax(self):
        m = ToyModel(np.array([[1.0], [-1.0]]), np.zeros(2))
        assert predict(m, np.array([[2.0], [-2.0]])).tolist() == [0, 1]


class TestLossGrad:
    def test_finite_differences(self, rng):
        m = random_model(rng, 3, 5, 0.5)
        x = rng.normal(size=(7, 5))
        y = rng.integers(0, 3, 7)
        _, gw, gb = loss_and_grad(m, x, y)
        eps = 1e-5
        for k in range(3):
            for j in range(5):
                hi, lo = m.copy(), m.copy()
                hi.weights[k, j] += eps
                lo.weights[k, j] -= eps
                num = (loss_and_grad(hi, x, y)[0] - loss_and_grad(lo, x, y)[0]) / (2 * eps)
                assert abs(num - gw[k, j]) <= 1e-5 * max(1.0, abs(num))
            hi, lo = m.copy(), m.copy()
            hi.bias[k] += eps
            lo.bias[k] -= eps
            num = (loss_and_grad(hi, x, y)[0] - loss_and_grad(lo, x, y)[0]) / (2 * eps)
            assert abs(num - gb[k]) <= 1e-5 * max(1.0, abs(num))

    def test_zero_model_loss_is_log_c(self, rng):
        loss, _, _ = loss_and_grad(ToyModel.zeros(4, 3), rng.normal(size=(5, 3)), [0, 1, 2, 3, 0])
        assert loss == pytest.approx(np.log(4))

    def test_duplicated_batch(self, rng):
        m = random_model(rng)
        x = rng.normal(size=(4, 5))
        y = np.array([0, 1, 2, 1])
        a = loss_and_grad(m, x, y)
        b = loss_and_grad(m, np.vstack([x, x]), np.concatenate([y, y]))
        assert a[0] == pytest.approx(b[0])
        np.testing.assert_allclose(a[1], b[1], atol=1e-14)
        np.testing.assert_allclose(a[2], b[2], atol=1e-14)

    def test_confident_correct_loss_vanishes(self):
        m = ToyModel(np.array([[50.0], [-50.0]]), np.zeros(2))
        loss, gw, gb = loss_and_grad(m, np.array([[1.0], [-1.0]]), [0, 1])
        assert loss < 1e-30 and np.abs(gw).max() < 1e-30 and np.abs(gb).max() < 1e-30

    def test_gradient_rows_sum_to_zero(self, rng):
        _, gw, gb = loss_and_grad(random_model(rng), rng.normal(size=(6, 5)), rng.integers(0, 3, 6))
        np.testing.assert_allclose(gw.sum(axis=0), 0, atol=1e-14)
        assert abs(gb.sum()) < 1e-14

    @pytest.mark.parametrize("labels", [[0, 3], [-1, 0]])
    def test_label_out_of_range(self, rng, labels):
        with pytest.raises(ConfigError):
            loss_and_grad(random_model(rng), rng.normal(size=(2, 5)), labels)

    def test_empty_or_misaligned(self, rng):
        m = random_model(rng)
        with pytest.raises(ConfigError):
            loss_and_grad(m, np.zeros((0, 5)), [])
        with pytest.raises(ConfigError):
            loss_and_grad(m, np.zeros((3, 5)), [0, 1])


class TestTraining:
    def test_config_validation(self):
        s = Strategy.parse("mix-resize")
        with pytest.raises(ConfigError):
            TrainConfig(s, lr=0)
        with pytest.raises(ConfigError):
            TrainConfig(s, epochs=0)
        with pytest.raises(ConfigError):
            TrainConfig(s, batch_size=0)

    def test_learns_toy_task(self, separable_bank):
        res = train(separable_bank, TrainConfig(Strategy.parse("fixed:pil-bilinear"), epochs=50))
        x, y = separable_bank.dataset(VariantId("preset-pil", "pil-bilinear"))
        assert accuracy(res.model, x, y) >= 0.99

    def test_full_batch_loss_monotone(self, separable_bank):
        res = train(separable_bank, TrainConfig(Strategy.parse("fixed:pil-bilinear"), epochs=50, batch_size=200))
        assert np.all(np.diff(res.loss_history) < 0)

    def test_deterministic(self, small_bank):
        cfg = TrainConfig(Strategy("mix-resize"), epochs=3, seed=4)
        a, b = train(small_bank, cfg), train(small_bank, cfg)
        assert np.array_equal(a.model.weights, b.model.weights)
        assert a.loss_history == b.loss_history and a.variant_counts == b.variant_counts

    def test_seed_changes_run(self, small_bank):
        s = Strategy("mix-resize")
        a = train(small_bank, TrainConfig(s, epochs=2, seed=0))
        b = train(small_bank, TrainConfig(s, epochs=2, seed=1))
        assert not np.array_equal(a.model.weights, b.model.weights)

    def test_mix_both_loss_decreases(self, small_bank):
        res = train(small_bank, TrainConfig(Strategy("mix-both"), epochs=8))
        h = res.loss_history
        assert all(np.isfinite(h))
        assert np.mean(h[-3:]) < np.mean(h[:3])
        assert sum(res.variant_counts.values()) == 8 * 7  # ceil(200 / 32) batches per epoch

    def test_per_epoch_sampling(self, small_bank):
        res = train(small_bank, TrainConfig(Strategy("mix-resize"), epochs=4, per_epoch_sampling=True))
        assert all(c % 7 == 0 for c in res.variant_counts.values())

    def test_single_class_rejected(self):
        jpegs, labels = toy_corpus(4, n_classes=2, seed=1)
        bank = FeatureBank(jpegs, np.zeros(4, dtype=np.int64), side=8)
        with pytest.raises(ConfigError):
            train(bank, TrainConfig(Strategy.parse("fixed:pil-bilinear"), epochs=1))

    def test_bank_length_mismatch(self):
        with pytest.raises(ConfigError):
            FeatureBank([b"x"], [0, 1])


class TestEvaluation:
    def test_matrix(self, rng):
        x = rng.normal(size=(10, 5))
        y = rng.integers(0, 3, 10)
        m = random_model(rng)
        t = evaluate_matrix({"m": m}, {"a": (x, y), "b": (x, y)})
        assert t.rows == ["m"] and t.columns == ["a", "b"]
        assert t.values[0][0] == t.values[0][1] == pytest.approx(100 * np.mean(predict(m, x) == y))

    def test_misaligned_labels(self, rng):
        x = rng.normal(size=(4, 5))
        with pytest.raises(ConfigError):
            evaluate_matrix({"m": random_model(rng)}, {"a": (x, [0, 1, 2, 0]), "b": (x, [0, 1, 2, 1])})

    def test_no_columns(self, rng):
        with pytest.raises(ConfigError):
            evaluate_matrix({"m": random_model(rng)}, {})

    def test_run_experiment(self, small_bank):
        strategies = [Strategy.parse("fixed:pil-bilinear"), Strategy("mix-resize")]
        table, results = run_experiment(small_bank, small_bank, strategies, eval_variants_for("resize"), seed=0,
                                        epochs=2)
        assert table.rows == [s.name for s in strategies]
        assert len(table.columns) == len(DEFAULT_RESIZES)
        assert all(0 <= v <= 100 for row in table.values for v in row)
        assert set(json.loads(history_json(results))) == set(table.rows)


class TestCheckpoint:
    def test_round_trip(self, rng, tmp_path):
        m = random_model(rng, 4, 7)
        back = model_from_bytes(model_bytes(m))
        assert np.array_equal(back.weights, m.weights) and np.array_equal(back.bias, m.bias)
        save_model(m, tmp_path / "m.bin")
        assert np.array_equal(load_model(tmp_path / "m.bin").weights, m.weights)

    def test_layout(self):
        m = ToyModel(np.array([[1.0, 2.0]]), np.array([3.0]))
        data = model_bytes(m)
        assert data[:4] == b"SNTM" and len(data) == 16 + 8 * 3
        assert np.frombuffer(data[16:], "<f8").tolist() == [1.0, 2.0, 3.0]

    def test_corrupt(self, rng):
        data = model_bytes(random_model(rng))
        with pytest.raises(ConfigError):
            model_from_bytes(b"XXXX" + data[4:])
        with pytest.raises(ConfigError):
            model_from_bytes(data[:-8])
        with pytest.raises(ConfigError):
            model_from_bytes(data[:4] + (2).to_bytes(4, "little") + data[8:])
