import numpy as np
import pytest

from chronomap.data import N_SLOTS
from chronomap.errors import ConfigError
from chronomap.som import (
    SomConfig,
    SomModel,
    assign_all,
    best_matching_unit,
    init_codebook,
    quantization_error,
    read_model,
    train,
    write_model,
)
from chronomap.synth import default_config, synth_generate

from conftest import make_dataset


@pytest.mark.parametrize("kwargs", [
    dict(units=1), dict(epochs=0), dict(lr_start=0.1, lr_end=0.2), dict(lr_end=0.0),
    dict(lr_start=1.5), dict(radius_start=1.0, radius_end=2.0), dict(radius_end=-1.0, radius_start=0.0),
    dict(init="pca"),
])
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        SomConfig(**kwargs)


class TestInit:
    def test_sample_two_profiles(self):
        X = np.zeros((2, N_SLOTS))
        X[1, :5] = 1
        C = init_codebook(make_dataset(X), SomConfig(units=2, seed=4))
        assert sorted(map(tuple, C)) == sorted(map(tuple, X))

    def test_seeded(self, small_dataset):
        cfg = SomConfig(units=5, seed=9)
        assert np.array_equal(init_codebook(small_dataset, cfg), init_codebook(small_dataset, cfg))

    def test_uniform_range(self, small_dataset):
        C = init_codebook(small_dataset, SomConfig(units=10, init="uniform"))
        assert C.shape == (10, N_SLOTS)
        assert C.min() >= 0 and C.max() <= 1

    def test_too_few_distinct(self):
        X = np.zeros((5, N_SLOTS))
        with pytest.raises(ConfigError):
            init_codebook(make_dataset(X), SomConfig(units=2))


class TestBestMatchingUnit:
    def test_exact_match(self, rng):
        C = rng.random((6, N_SLOTS))
        assert best_matching_unit(C, C[3]) == 3

    def test_tie_goes_to_lowest(self):
        C = np.zeros((5, N_SLOTS))
        C[:, 0] = [5, 1, 9, 9, 1]
        x = np.zeros(N_SLOTS)
        # units 1 and 4 are both at distance 1
        assert best_matching_unit(C, x) == 1

    def test_hand_computed(self):
        C = np.stack([np.zeros(N_SLOTS), np.ones(N_SLOTS)])
        x = np.zeros(N_SLOTS)
        x[:600] = 1
        d0, d1 = 600.0, 72.0  # squared distances counted by hand
        assert d1 < d0
        assert best_matching_unit(C, x) == 1


class TestTrain:
    def test_single_attractor(self, rng):
        p = (rng.random(N_SLOTS) < 0.4).astype(int)
        X = np.tile(p, (30, 1))
        cfg = SomConfig(units=4, epochs=20, init="uniform", seed=1, lr_start=0.9, lr_end=0.5)
        model = train(X, cfg)
        assert np.abs(model.code_vectors - p).max() < 1e-3
        assert model.final_quantization_error < 1e-6

    def test_two_clusters(self, rng):
        a = np.zeros(N_SLOTS, dtype=int)
        a[:200] = 1
        b = np.zeros(N_SLOTS, dtype=int)
        b[300:500] = 1
        X = np.array([np.where(rng.random(N_SLOTS) < 0.03, 1 - v, v) for v in [a] * 20 + [b] * 20])
        model = train(X, SomConfig(units=2, epochs=30, radius_start=1.0, radius_end=0.0, seed=2))
        # brute-force winners
        d = ((X[:, None, :] - model.code_vectors[None]) ** 2).sum(axis=2)
        winners = d.argmin(axis=1)
        assert len(set(winners[:20])) == 1 and len(set(winners[20:])) == 1
        assert winners[0] != winners[20]

    def test_deterministic(self, small_dataset):
        cfg = SomConfig(units=4, epochs=5, seed=3)
        m1, m2 = train(small_dataset, cfg), train(small_dataset, cfg)
        assert np.array_equal(m1.code_vectors, m2.code_vectors)
        assert m1.final_quantization_error == m2.final_quantization_error
        assert assign_all(m1, small_dataset).unit_of == assign_all(m2, small_dataset).unit_of

    def test_components_in_unit_interval(self, small_dataset):
        for init in ("sample", "uniform"):
            m = train(small_dataset, SomConfig(units=6, epochs=3, lr_start=1.0, init=init))
            assert m.code_vectors.min() >= 0 and m.code_vectors.max() <= 1

    def test_zero_radius_is_online_kmeans(self, small_dataset):
        cfg = SomConfig(units=4, epochs=3, radius_start=0.0, radius_end=0.0, seed=6)
        model = train(small_dataset, cfg)

        # independent winner-only loop with the same random stream
        X = small_dataset.matrix
        rng = np.random.default_rng(cfg.seed)
        C = init_codebook(X, cfg, rng)
        total, t = cfg.epochs * len(X), 0
        for _ in range(cfg.epochs):
            for i in rng.permutation(len(X)):
                dists = [float(np.sum((X[i] - c) ** 2)) for c in C]
                w = dists.index(min(dists))
                lr = cfg.lr_start + (cfg.lr_end - cfg.lr_start) * t / (total - 1)
                C[w] = C[w] + lr * (X[i] - C[w])
                t += 1
        np.testing.assert_allclose(model.code_vectors, C, atol=1e-12)


class TestAssign:
    def test_codebook_as_data(self, rng):
        C = (rng.random((5, N_SLOTS)) < 0.5).astype(float)
        model = SomModel(C, SomConfig(units=5))
        ds = make_dataset(C.astype(int))
        a = assign_all(model, ds)
        assert [a.unit_of[p] for p in ds.person_ids] == [0, 1, 2, 3, 4]
        assert a.class_sizes.tolist() == [1] * 5
        assert quantization_error(model, ds) == 0.0

    def test_sizes_sum(self, small_dataset):
        model = train(small_dataset, SomConfig(units=5, epochs=2))
        assert assign_all(model, small_dataset).class_sizes.sum() == len(small_dataset)


class TestQuantizationError:
    def test_single_point(self, rng):
        p = (rng.random(N_SLOTS) < 0.5).astype(float)
        model = SomModel(np.stack([p, 1 - p]), SomConfig(units=2))
        assert quantization_error(model, p[None]) == 0.0

    def test_midpoint(self, rng):
        a = (rng.random(N_SLOTS) < 0.5).astype(float)
        b = (rng.random(N_SLOTS) < 0.5).astype(float)
        d2 = float(((a - b) ** 2).sum())
        mid = (a + b) / 2
        # second unit parked far away so the midpoint wins for both points
        model = SomModel(np.stack([mid, np.full(N_SLOTS, 10.0)]), SomConfig(units=2))
        assert quantization_error(model, np.stack([a, b])) == pytest.approx(d2 / 4, rel=1e-12)


def test_more_units_refine_error():
    ds, _ = synth_generate(default_config(), seed=0)
    wins = 0
    for seed in range(10):
        qe = [train(ds, SomConfig(units=k, epochs=5, seed=seed)).final_quantization_error for k in (5, 6)]
        wins += qe[1] <= qe[0]
    assert wins >= 9


def test_model_round_trip(tmp_path, small_dataset):
    m = train(small_dataset, SomConfig(units=3, epochs=2, seed=1))
    write_model(m, tmp_path / "m.csv", tmp_path / "m.txt")
    back = read_model(tmp_path / "m.csv", tmp_path / "m.txt")
    assert np.array_equal(back.code_vectors, m.code_vectors)
    assert back.config == m.config
    assert back.final_quantization_error == m.final_quantization_error
