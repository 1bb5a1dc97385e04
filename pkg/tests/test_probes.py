import json
import math

import numpy as np
import pytest

from jabberprobe.embeddings import EmbeddingSet
from jabberprobe.errors import (
    ConfigError,
    DataError,
    JembFormatError,
    NumericalError,
)
from jabberprobe.metrics import UndirectedTree, tree_distances
from jabberprobe.planted import (
    indicator_embeddings,
    planted_corpus,
    random_tree,
    tree_to_sentence,
)
from jabberprobe.probes import (
    DROPOUT_RANGE,
    LR_RANGE,
    ProbeParams,
    ProbeSentence,
    SearchSpace,
    TrainConfig,
    dataset_loss,
    decode_tree,
    evaluate_probe,
    load_probe_params,
    make_dataset,
    pairwise_squared_distances,
    perceptron_loss,
    predict_distances,
    probe_sidecar,
    random_search,
    sample_config,
    save_probe_params,
    squared_distance,
    structural_loss,
    sweep_layers,
    train_probe,
)
from jabberprobe.treebank import Sentence, Token

CHAIN2_GOLD = np.asarray([[0.0, 1.0], [1.0, 0.0]])


def planted_dataset(count, seed, min_tokens=4, max_tokens=7, dim=6):
    sentences, embeddings = planted_corpus(
        count, seed, min_tokens=min_tokens, max_tokens=max_tokens, dim=dim
    )
    return make_dataset(sentences, embeddings)


def random_instance(rng, n=5, rank=2, dim=4):
    """A random probe input plus a random gold tree of matching size."""
    B = rng.normal(size=(rank, dim))
    H = rng.normal(size=(n, dim))
    tree = random_tree(n, rng)
    return B, H, tree


def numerical_grad(f, B, eps=1e-4):
    grad = np.zeros_like(B)
    for i in range(B.shape[0]):
        for j in range(B.shape[1]):
            up = B.copy()
            up[i, j] += eps
            down = B.copy()
            down[i, j] -= eps
            grad[i, j] = (f(up) - f(down)) / (2.0 * eps)
    return grad


def relative_error(a, b):
    denominator = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return np.linalg.norm(a - b) / denominator


class TestSquaredDistance:
    def test_known_values(self):
        params = ProbeParams(kind="structural", B=np.eye(2))
        assert squared_distance(params, [0.0, 0.0], [2.0, 0.0]) == pytest.approx(4.0)
        assert squared_distance(params, [1.0, 2.0], [1.0, 2.0]) == pytest.approx(0.0)
        assert squared_distance(params, [0.0, 0.0], [1.0, 2.0]) == pytest.approx(5.0)

    def test_low_rank_projection(self):
        params = ProbeParams(kind="structural", B=np.asarray([[1.0, 1.0]]))
        assert squared_distance(params, [0.0, 0.0], [1.0, 2.0]) == pytest.approx(9.0)

    def test_shape_mismatch(self):
        params = ProbeParams(kind="structural", B=np.eye(2))
        with pytest.raises(DataError):
            squared_distance(params, [0.0, 0.0, 0.0], [1.0, 2.0, 3.0])

    def test_pairwise_matches_pairs(self):
        rng = np.random.default_rng(0)
        B = rng.normal(size=(3, 5))
        H = rng.normal(size=(6, 5))
        d2 = pairwise_squared_distances(B, H)
        params = ProbeParams(kind="structural", B=B)
        for i in range(6):
            for j in range(6):
                assert d2[i, j] == pytest.approx(
                    squared_distance(params, H[i], H[j]), abs=1e-9
                )
        assert np.all(d2 >= 0.0)
        assert np.all(np.diag(d2) == 0.0)
        np.testing.assert_allclose(d2, d2.T, atol=1e-12)


class TestStructuralLoss:
    def test_zero_projection_on_chain2(self):
        loss, grad = structural_loss(np.zeros((2, 2)), np.eye(2), CHAIN2_GOLD)
        assert loss == pytest.approx(0.5)
        assert grad.shape == (2, 2)
        np.testing.assert_array_equal(grad, np.zeros((2, 2)))

    def test_exact_fit_has_zero_loss_and_grad(self):
        rng = np.random.default_rng(1)
        tree = random_tree(6, rng)
        H = indicator_embeddings(tree, 5).astype(np.float64)
        gold = tree_distances(tree)
        loss, grad = structural_loss(np.eye(5), H, gold)
        assert loss == pytest.approx(0.0)
        np.testing.assert_array_equal(grad, np.zeros((5, 5)))

    def test_single_token_rejected(self):
        with pytest.raises(DataError):
            structural_loss(np.eye(2), np.zeros((1, 2)), np.zeros((1, 1)))

    @pytest.mark.parametrize("seed", range(5))
    def test_gradient_matches_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        B, H, tree = random_instance(rng)
        gold = tree_distances(tree)
        _, grad = structural_loss(B, H, gold)
        fd = numerical_grad(lambda M: structural_loss(M, H, gold)[0], B)
        assert relative_error(grad, fd) < 1e-3


class TestPerceptronLoss:
    def test_three_point_fixture(self):
        H = np.asarray([[0.0, 0.0], [1.0, 0.0], [2.0, 1.0]])
        B = np.eye(2)
        gold_edges = {(1, 3), (2, 3)}
        d2 = pairwise_squared_distances(B, H)
        assert d2[0, 1] == pytest.approx(1.0)
        assert d2[1, 2] == pytest.approx(2.0)
        assert d2[0, 2] == pytest.approx(5.0)
        loss, grad = perceptron_loss(B, H, gold_edges)
        assert loss == pytest.approx(4.0)
        decoded = decode_tree(ProbeParams(kind="perceptron", B=B), H)
        assert decoded.edges == frozenset({(1, 2), (2, 3)})
        assert grad.shape == (2, 2)

    def test_gold_mst_has_zero_loss(self):
        H = np.asarray([[0.0], [1.0], [2.0], [3.0]])
        B = np.eye(1)
        gold_edges = {(1, 2), (2, 3), (3, 4)}
        loss, grad = perceptron_loss(B, H, gold_edges)
        assert loss == pytest.approx(0.0)

    @pytest.mark.parametrize("seed", range(10))
    def test_loss_nonnegative(self, seed):
        rng = np.random.default_rng(seed)
        B, H, tree = random_instance(rng, n=6)
        loss, _ = perceptron_loss(B, H, tree.edges)
        assert loss >= 0.0

    @pytest.mark.parametrize("seed", range(8))
    def test_gradient_matches_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        B, H, tree = random_instance(rng, n=6)
        loss, grad = perceptron_loss(B, H, tree.edges)
        base = decode_tree(ProbeParams(kind="perceptron", B=B), H)
        eps = 1e-4
        stable = all(
            decode_tree(
                ProbeParams(kind="perceptron", B=B + delta), H
            ).edges
            == base.edges
            for delta in (
                np.full_like(B, eps),
                np.full_like(B, -eps),
            )
        )
        if loss == 0.0 or not stable:
            pytest.skip("instance sits on a decode boundary")
        fd = numerical_grad(lambda M: perceptron_loss(M, H, tree.edges)[0], B, eps)
        assert relative_error(grad, fd) < 1e-3

    def test_single_token_rejected(self):
        with pytest.raises(DataError):
            perceptron_loss(np.eye(2), np.zeros((1, 2)), set())


class TestDatasetHelpers:
    def test_dataset_loss_is_mean(self):
        data = planted_dataset(4, seed=0)
        B = np.random.default_rng(0).normal(size=(3, 6))
        total = sum(structural_loss(B, r.embeddings, r.gold_distances)[0] for r in data)
        assert dataset_loss("structural", B, data) == pytest.approx(total / 4)

    def test_make_dataset_joins_on_sent_id(self):
        sentences, embeddings = planted_corpus(3, seed=0, min_tokens=4, max_tokens=4)
        del embeddings.sentences[sentences[1].sent_id]
        data = make_dataset(sentences, embeddings)
        assert [r.sent_id for r in data] == [
            sentences[0].sent_id,
            sentences[2].sent_id,
        ]
        assert data[0].embeddings.dtype == np.float64
        assert data[0].is_punct == (False,) * 4

    def test_make_dataset_rejects_row_mismatch(self):
        sentences, embeddings = planted_corpus(1, seed=0, min_tokens=4, max_tokens=4)
        sid = sentences[0].sent_id
        embeddings.sentences[sid] = embeddings.sentences[sid][:-1]
        with pytest.raises(DataError, match=sid):
            make_dataset(sentences, embeddings)

    def test_predict_distances_matches_pairwise(self):
        data = planted_dataset(1, seed=2)
        params = ProbeParams(kind="structural", B=np.eye(6))
        np.testing.assert_allclose(
            predict_distances(params, data[0].embeddings),
            data[0].gold_distances,
            atol=1e-9,
        )


class TestTrainConfig:
    def test_validate_accepts_defaults(self):
        TrainConfig(learning_rate=1e-3, rank=2, dropout=0.0).validate(dim=4)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"learning_rate": 1e-6},
            {"learning_rate": 1e-2},
            {"rank": 0},
            {"rank": 5},
            {"dropout": -0.1},
            {"dropout": 1.0},
            {"batch_size": 0},
            {"max_epochs": 0},
            {"patience": -1},
            {"checkpoint_every": 0},
            {"dropout_target": "weights"},
        ],
    )
    def test_validate_rejects(self, kwargs):
        base = dict(learning_rate=1e-3, rank=2, dropout=0.0)
        base.update(kwargs)
        with pytest.raises(ConfigError):
            TrainConfig(**base).validate(dim=4)


class TestTrainProbe:
    def small_config(self, **kwargs):
        base = dict(
            learning_rate=5e-3,
            rank=4,
            dropout=0.0,
            batch_size=4,
            max_epochs=3,
            patience=15,
            seed=0,
            checkpoint_every=5,
        )
        base.update(kwargs)
        return TrainConfig(**base)

    def test_deterministic_for_config(self):
        train = planted_dataset(10, seed=1)
        dev = planted_dataset(4, seed=2)
        cfg = self.small_config(dropout=0.2)
        params_a, hist_a = train_probe("structural", train, dev, cfg)
        params_b, hist_b = train_probe("structural", train, dev, cfg)
        assert params_a.B.tobytes() == params_b.B.tobytes()
        assert hist_a.key() == hist_b.key()

    def test_seed_changes_parameters(self):
        train = planted_dataset(10, seed=1)
        dev = planted_dataset(4, seed=2)
        params_a, _ = train_probe("structural", train, dev, self.small_config(seed=0))
        params_b, _ = train_probe("structural", train, dev, self.small_config(seed=1))
        assert params_a.B.tobytes() != params_b.B.tobytes()

    def test_history_invariants(self):
        train = planted_dataset(10, seed=1)
        dev = planted_dataset(4, seed=2)
        params, history = train_probe("structural", train, dev, self.small_config())
        assert history.checkpoints
        losses = [loss for _, _, loss in history.checkpoints]
        assert history.best_dev_loss == pytest.approx(min(losses))
        best = [c for c in history.checkpoints if c[0] == history.best_step]
        assert len(best) == 1 and best[0][2] == history.best_dev_loss
        assert history.stop_reason in ("early_stop", "max_epochs")
        # The final step is always evaluated when training runs to the end.
        if history.stop_reason == "max_epochs":
            assert history.checkpoints[-1][0] == history.total_steps
        assert history.wall_clock_seconds > 0.0
        assert params.kind == "structural"
        assert params.rank == 4 and params.dim == 6

    def test_checkpoint_cadence(self):
        train = planted_dataset(8, seed=1)
        dev = planted_dataset(3, seed=2)
        cfg = self.small_config(batch_size=2, max_epochs=1, checkpoint_every=3)
        # 8 sentences / batch 2 = 4 steps: cadence fires at 3, final at 4.
        _, history = train_probe("structural", train, dev, cfg)
        assert [step for step, _, _ in history.checkpoints] == [3, 4]

    def test_zero_patience_stops_at_second_flat_checkpoint(self):
        # Collinear points: the gold chain is an MST under every projection,
        # so the perceptron dev loss is identically zero and can never improve.
        H = np.asarray([[0.0, 0.0], [1.0, 0.1], [2.0, 0.2], [3.0, 0.3]])
        tree = UndirectedTree.from_edges(4, {(1, 2), (2, 3), (3, 4)})
        record = ProbeSentence(
            sent_id="line",
            embeddings=H,
            gold_distances=tree_distances(tree),
            gold_edges=tree.edges,
        )
        cfg = TrainConfig(
            learning_rate=1e-3,
            rank=2,
            dropout=0.0,
            batch_size=1,
            max_epochs=50,
            patience=0,
            checkpoint_every=1,
        )
        _, history = train_probe("perceptron", [record], [record], cfg)
        assert history.stop_reason == "early_stop"
        assert history.total_steps == 2
        assert history.best_dev_loss == pytest.approx(0.0)

    def test_perceptron_trains(self):
        train = planted_dataset(10, seed=3)
        dev = planted_dataset(4, seed=4)
        params, history = train_probe(
            "perceptron", train, dev, self.small_config(rank=6, max_epochs=5)
        )
        assert history.best_dev_loss < dataset_loss(
            "perceptron", np.random.default_rng(0).normal(size=(6, 6)) * 0.05, dev
        )
        assert params.validate() is None

    @pytest.mark.parametrize("target", ["inputs", "projected"])
    def test_dropout_targets_run_deterministically(self, target):
        train = planted_dataset(8, seed=5)
        dev = planted_dataset(3, seed=6)
        cfg = self.small_config(dropout=0.3, dropout_target=target)
        params_a, hist_a = train_probe("structural", train, dev, cfg)
        params_b, hist_b = train_probe("structural", train, dev, cfg)
        assert params_a.B.tobytes() == params_b.B.tobytes()
        assert hist_a.key() == hist_b.key()
        assert np.all(np.isfinite(params_a.B))

    @pytest.mark.filterwarnings("ignore:invalid value encountered")
    def test_non_finite_embeddings_raise(self):
        bad = ProbeSentence(
            sent_id="bad",
            embeddings=np.asarray([[np.inf, 0.0], [0.0, 0.0]]),
            gold_distances=CHAIN2_GOLD,
            gold_edges=frozenset({(1, 2)}),
        )
        cfg = TrainConfig(learning_rate=1e-3, rank=1, dropout=0.0, batch_size=1)
        with pytest.raises(NumericalError, match=r"step 1 \(lr=0.001\)"):
            train_probe("structural", [bad], [bad], cfg)

    def test_empty_data_rejected(self):
        dev = planted_dataset(2, seed=0)
        cfg = TrainConfig(learning_rate=1e-3, rank=1, dropout=0.0)
        with pytest.raises(DataError):
            train_probe("structural", [], dev, cfg)

    def test_unknown_kind_rejected(self):
        data = planted_dataset(2, seed=0)
        cfg = TrainConfig(learning_rate=1e-3, rank=1, dropout=0.0)
        with pytest.raises(ConfigError):
            train_probe("mlp", data, data, cfg)

    def test_mixed_dims_rejected(self):
        a = planted_dataset(2, seed=0, dim=6)
        b = planted_dataset(2, seed=0, dim=7)
        cfg = TrainConfig(learning_rate=1e-3, rank=1, dropout=0.0)
        with pytest.raises(DataError):
            train_probe("structural", a + b, a, cfg)


class TestSearch:
    def search_inputs(self):
        return {
            0: (planted_dataset(6, seed=10), planted_dataset(3, seed=11)),
            4: (planted_dataset(6, seed=12), planted_dataset(3, seed=13)),
        }

    def base_config(self):
        return TrainConfig(
            learning_rate=1e-3,
            rank=1,
            dropout=0.0,
            batch_size=4,
            max_epochs=1,
            checkpoint_every=50,
        )

    def test_sample_config_ranges(self):
        rng = np.random.default_rng(0)
        space = SearchSpace()
        base = self.base_config()
        for _ in range(200):
            cfg = sample_config(space, 10, rng, base)
            assert LR_RANGE[0] <= cfg.learning_rate <= LR_RANGE[1]
            assert 1 <= cfg.rank <= 10
            assert DROPOUT_RANGE[0] <= cfg.dropout <= DROPOUT_RANGE[1]

    def test_search_is_deterministic(self):
        kwargs = dict(
            space=SearchSpace(rank_max=3),
            trials=2,
            seed=7,
            base=self.base_config(),
        )
        a = random_search("structural", self.search_inputs(), **kwargs)
        b = random_search("structural", self.search_inputs(), **kwargs)
        assert a.best_layer == b.best_layer
        assert a.best_config == b.best_config
        assert a.best_dev_loss == b.best_dev_loss
        assert a.best_params.B.tobytes() == b.best_params.B.tobytes()
        assert [t.history.key() for t in a.trials] == [
            t.history.key() for t in b.trials
        ]

    def test_trials_independent_of_layer_set(self):
        kwargs = dict(
            space=SearchSpace(rank_max=3),
            trials=2,
            seed=7,
            base=self.base_config(),
        )
        full = random_search("structural", self.search_inputs(), **kwargs)
        only4 = random_search(
            "structural", self.search_inputs(), layers=[4], **kwargs
        )
        full_layer4 = [t.config for t in full.trials if t.layer == 4]
        assert full_layer4 == [t.config for t in only4.trials]

    def test_best_is_minimum_dev_loss(self):
        result = random_search(
            "structural",
            self.search_inputs(),
            space=SearchSpace(rank_max=3),
            trials=2,
            seed=1,
            base=self.base_config(),
        )
        assert len(result.trials) == 4
        assert result.best_dev_loss == min(
            t.history.best_dev_loss for t in result.trials
        )

    def test_bad_search_arguments(self):
        inputs = self.search_inputs()
        with pytest.raises(ConfigError):
            random_search("structural", inputs, trials=0)
        with pytest.raises(ConfigError):
            random_search("structural", inputs, layers=[9], trials=1)

    def test_sweep_layers(self):
        assert sweep_layers(24) == [0, 4, 8, 12, 16, 20, 24]
        assert sweep_layers(23) == [0, 4, 8, 12, 16, 20]
        assert sweep_layers(12, stride=6) == [0, 6, 12]


class TestEvaluate:
    def test_perfect_probe_on_planted_data(self):
        data = planted_dataset(5, seed=20)
        params = ProbeParams(kind="structural", B=np.eye(6))
        scores = evaluate_probe(params, data)
        assert scores["uuas"] == pytest.approx(1.0)
        assert scores["dspr"] == pytest.approx(1.0)
        assert scores["n_sentences"] == 5

    def punct_dataset(self):
        tokens = []
        upos = ["NOUN", "NOUN", "NOUN", "PUNCT"]
        for i in range(4):
            tokens.append(
                Token(
                    index=i + 1,
                    form="w" if upos[i] == "NOUN" else ".",
                    lemma="w",
                    upos=upos[i],
                    xpos="_",
                    feats={},
                    head=i,
                    deprel="root" if i == 0 else "dep",
                    misc={},
                )
            )
        sentence = Sentence(sent_id="p1", tokens=tuple(tokens))
        # Chain indicators for the words; the punctuation row is placed so
        # that it decodes to the wrong head.
        rows = np.asarray(
            [
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [1.0, 1.0, 0.0],
                [0.9, 0.1, 0.0],
            ],
            dtype=np.float32,
        )
        embeddings = EmbeddingSet(
            model_id="toy", layer=0, dim=3, sentences={"p1": rows}
        )
        return make_dataset([sentence], embeddings)

    def test_exclude_punct_changes_scores(self):
        data = self.punct_dataset()
        params = ProbeParams(kind="structural", B=np.eye(3))
        # The stray punctuation row sits between the words, so the decoded
        # tree is a star around it and only one gold edge survives.
        full = evaluate_probe(params, data)
        assert full["uuas"] == pytest.approx(1 / 3)
        pruned = evaluate_probe(params, data, exclude_punct=True)
        assert pruned["uuas"] == pytest.approx(1.0)
        assert pruned["dspr"] == pytest.approx(1.0)
        assert pruned["n_sentences"] == 1

    def test_empty_dataset_rejected(self):
        params = ProbeParams(kind="structural", B=np.eye(3))
        with pytest.raises(DataError):
            evaluate_probe(params, [])


class TestParameterFiles:
    def make_params(self):
        B = np.random.default_rng(0).normal(size=(3, 5))
        return ProbeParams(kind="perceptron", B=B)

    def test_round_trip_and_checksum(self, tmp_path):
        params = self.make_params()
        path = tmp_path / "probe.jprb"
        checksum = save_probe_params(params, path)
        import hashlib

        assert checksum == hashlib.sha256(path.read_bytes()).hexdigest()
        loaded = load_probe_params(path)
        assert loaded.kind == "perceptron"
        assert loaded.B.tobytes() == params.B.tobytes()

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "probe.jprb"
        path.write_bytes(b"XXXX" + b"\x00" * 16)
        with pytest.raises(JembFormatError) as excinfo:
            load_probe_params(path)
        assert excinfo.value.offset == 0

    def test_truncated(self, tmp_path):
        params = self.make_params()
        path = tmp_path / "probe.jprb"
        save_probe_params(params, path)
        path.write_bytes(path.read_bytes()[:-1])
        with pytest.raises(JembFormatError, match="expected"):
            load_probe_params(path)

    def test_unknown_kind_byte(self, tmp_path):
        params = self.make_params()
        path = tmp_path / "probe.jprb"
        save_probe_params(params, path)
        blob = bytearray(path.read_bytes())
        blob[4] = 9
        path.write_bytes(bytes(blob))
        with pytest.raises(JembFormatError, match="kind byte"):
            load_probe_params(path)

    def test_sidecar_fields(self):
        params = self.make_params()
        cfg = TrainConfig(learning_rate=1e-3, rank=3, dropout=0.2, seed=11)
        sidecar = json.loads(probe_sidecar(params, cfg, "ab" * 32, "toy-model", 4))
        assert sidecar["kind"] == "perceptron"
        assert sidecar["rank"] == 3 and sidecar["dim"] == 5
        assert sidecar["config"]["learning_rate"] == 1e-3
        assert sidecar["provenance"] == {
            "model_id": "toy-model",
            "layer": 4,
            "seed": 11,
        }
        assert sidecar["checksum_sha256"] == "ab" * 32

    def test_validate_rejects_bad_params(self):
        with pytest.raises(ConfigError):
            ProbeParams(kind="nope", B=np.eye(2)).validate()
        with pytest.raises(ConfigError):
            ProbeParams(kind="structural", B=np.zeros((3, 2))).validate()
        with pytest.raises(NumericalError):
            ProbeParams(
                kind="structural", B=np.asarray([[np.nan, 0.0]])
            ).validate()
