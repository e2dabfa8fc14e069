import numpy as np
import pytest

from majam import Scene, SystemConfig
from majam.baselines import fpv_layout
from majam.config import ConfigError
from majam.neural import LayerSpec, init_params
from majam.positioning import validate_layout
from majam.array_model import sinr
from majam.training import (
    Featurization,
    TrainConfig,
    TrainingError,
    build_network,
    featurize,
    feature_dim,
    infer,
    infer_batch,
    loss_and_grads,
    read_scenes_csv,
    sample_angles,
    sample_scene,
    train,
    write_scenes_csv,
)

from conftest import central_diff


class TestSampling:
    def test_no_jammers(self, rng):
        s = sample_scene(0, rng)
        assert s.jammer_angles == ()

    def test_reproducible(self):
        a = sample_scene(3, np.random.default_rng(5))
        b = sample_scene(3, np.random.default_rng(5))
        assert a == b

    def test_uniform_mean(self):
        angles = sample_angles(100_000, 0, np.random.default_rng(0))
        assert abs(angles[:, 0].mean() - np.pi / 2) < 0.01
        assert angles.min() >= 0 and angles.max() <= np.pi

    def test_fixed_source(self, rng):
        angles = sample_angles(10, 2, rng, fixed_source_angle=1.0)
        assert np.all(angles[:, 0] == 1.0)

    def test_csv_round_trip(self, tmp_path, rng):
        angles = sample_angles(50, 3, rng)
        write_scenes_csv(angles, tmp_path / "s.csv")
        assert (tmp_path / "s.csv").read_text().splitlines()[0] == "theta0,theta1,theta2,theta3"
        np.testing.assert_array_equal(read_scenes_csv(tmp_path / "s.csv"), angles)

    def test_csv_bad_header(self, tmp_path):
        (tmp_path / "s.csv").write_text("a,b\n1,2\n")
        with pytest.raises(ValueError, match="header"):
            read_scenes_csv(tmp_path / "s.csv")


class TestFeaturize:
    scene = Scene(np.pi / 2, (0.0, np.pi))

    def test_angle(self):
        np.testing.assert_allclose(featurize(self.scene, "angle"), [0.5, 0, 1])

    def test_cosine(self):
        np.testing.assert_allclose(featurize(self.scene, "cosine"), [0, 1, -1], atol=1e-15)

    def test_jammer_order_is_kept(self):
        swapped = Scene(np.pi / 2, (np.pi, 0.0))
        assert not np.allclose(featurize(self.scene, "angle"), featurize(swapped, "angle"))

    def test_relative_is_jammer_symmetric(self, rng):
        a = Scene(1.0, (0.2, 2.0, 2.9))
        b = Scene(1.0, (2.9, 0.2, 2.0))
        np.testing.assert_array_equal(featurize(a, "relative"), featurize(b, "relative"))
        assert featurize(a, "relative").shape == (feature_dim("relative", 3),)
        assert featurize(Scene(1.0), "relative").shape == (feature_dim("relative", 0),)

    def test_batch_matches_single(self, rng):
        angles = sample_angles(5, 3, rng)
        for mode in Featurization:
            batch = featurize(angles, mode)
            for row, f in zip(angles, batch):
                np.testing.assert_array_equal(featurize(Scene.from_angles(row), mode), f)


def _small_cfg(**kw):
    system = SystemConfig(num_elements=4, num_jammers=2, region_size=3.0)
    base = dict(system=system, dataset_size=30, batch_size=3, epochs=1, hidden=5, depth=1,
                featurization="cosine", require_progress=False)
    base.update(kw)
    return TrainConfig(**base)


class TestLoss:
    def test_reciprocal_of_known_sinr(self):
        system = SystemConfig(num_elements=2, num_jammers=1)
        cfg = TrainConfig(system=system, dataset_size=1, batch_size=1, epochs=1)
        params = init_params([LayerSpec(2, 1, "sigmoid")], 0)
        params.weights[0][:] = 0.0
        params.biases[0][:] = 40.0  # ratio saturates at 1 -> spacing 0.5
        loss, _, eta = loss_and_grads(params, [Scene(np.pi / 2, (0.0,))], cfg)
        assert eta[0] == pytest.approx(20.0, rel=1e-12)
        assert loss == pytest.approx(0.05, rel=1e-12)

    @pytest.mark.parametrize("mode", ["cosine", "relative"])
    @pytest.mark.parametrize("region", [3.0, 40.0])
    def test_end_to_end_finite_differences(self, rng, mode, region):
        cfg = _small_cfg(featurization=mode,
                         system=SystemConfig(num_elements=4, num_jammers=2, region_size=region))
        params = build_network(cfg)
        for b in params.biases[:-1]:
            b[:] = 0.1
        batch = sample_angles(3, 2, rng)
        _, grads, _ = loss_and_grads(params, batch, cfg)
        worst = 0.0
        for li in range(len(params.weights)):
            for slot in ("weights", "biases"):
                arr = getattr(params, slot)[li]

                def f(v, arr=arr):
                    old = arr.copy()
                    arr[...] = v
                    out = loss_and_grads(params, batch, cfg)[0]
                    arr[...] = old
                    return out

                fd = central_diff(f, arr.copy(), 1e-6)
                an = getattr(grads, slot)[li]
                worst = max(worst, np.abs(an - fd).max() / max(np.abs(fd).max(), 1e-8))
        assert worst < 1e-4

    def test_duplicated_batch(self, rng):
        cfg = _small_cfg()
        params = build_network(cfg)
        scene = sample_angles(1, 2, rng)
        l1, g1, _ = loss_and_grads(params, scene, cfg)
        l2, g2, _ = loss_and_grads(params, np.repeat(scene, 2, axis=0), cfg)
        assert l1 == pytest.approx(l2, rel=1e-14)
        for a, b in zip(g1.arrays(), g2.arrays()):
            np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-18)

    def test_empty_batch(self):
        cfg = _small_cfg()
        with pytest.raises(ValueError):
            loss_and_grads(build_network(cfg), np.zeros((0, 3)), cfg)


class TestTrain:
    def test_single_step(self):
        cfg = _small_cfg(dataset_size=1, batch_size=1, learning_rate=0.1)
        init = build_network(cfg)
        params, history = train(cfg)
        assert len(history) == 1
        assert any(not np.array_equal(a, b) for a, b in zip(init.arrays(), params.arrays()))

    def test_deterministic(self):
        cfg = _small_cfg(epochs=3, optimizer="adam", learning_rate=3e-3)
        p1, h1 = train(cfg)
        p2, h2 = train(cfg)
        assert h1.mean_loss == h2.mean_loss and h1.mean_sinr_db == h2.mean_sinr_db
        for a, b in zip(p1.arrays(), p2.arrays()):
            assert a.tobytes() == b.tobytes()

    def test_progress_is_enforced(self, monkeypatch):
        import majam.training as tr

        cfg = _small_cfg(epochs=2, require_progress=True)
        calls = iter([1.0, 1.0, 0.0, 0.0])  # 10 dB in epoch 1, 0 dB in epoch 2
        real = tr.loss_and_grads

        def fake(params, batch, c):
            loss, grads, eta = real(params, batch, c)
            return loss, grads, np.full_like(eta, 10 ** next(calls))

        monkeypatch.setattr(tr, "loss_and_grads", fake)
        with pytest.raises(TrainingError, match="fell"):
            train(TrainConfig(**{**cfg.__dict__, "dataset_size": 6, "batch_size": 3}))

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            TrainConfig(dataset_size=10, batch_size=20)
        with pytest.raises(ConfigError):
            TrainConfig(epochs=0)
        with pytest.raises(ConfigError):
            TrainConfig(optimizer="rmsprop")


class TestInfer:
    def test_random_network_is_always_feasible(self):
        cfg = TrainConfig.desk()
        params = build_network(cfg)
        angles = sample_angles(10_000, 3, np.random.default_rng(3))
        pos, eta = infer_batch(params, angles, cfg.system)
        assert np.all(pos[:, 0] == 0) and np.all(pos[:, -1] <= 7.0 + 1e-9)
        assert np.all(np.diff(pos, axis=1) >= 0.5 - 1e-9)
        assert np.all(eta > 0)

    def test_zero_network_is_fixed_array(self, cfg, rng):
        tc = TrainConfig(system=cfg)
        params = build_network(tc)
        for w in params.weights:
            w[:] = 0
        for row in sample_angles(5, 3, rng):
            layout, _, _ = infer(params, Scene.from_angles(row), cfg)
            np.testing.assert_allclose(layout, fpv_layout(cfg), atol=1e-12)

    def test_returned_sinr_is_consistent(self, cfg, rng):
        params = build_network(TrainConfig.desk(system=cfg))
        for row in sample_angles(20, 3, rng):
            scene = Scene.from_angles(row)
            layout, w, eta = infer(params, scene, cfg)
            assert validate_layout(layout, cfg) == []
            assert eta == pytest.approx(sinr(layout, w, scene, cfg), rel=1e-9)

    def test_dimension_mismatch(self, cfg):
        params = build_network(TrainConfig(system=cfg))
        with pytest.raises(ConfigError):
            infer(params, Scene(1.0, (0.5,)), cfg.replace(num_jammers=1))
        with pytest.raises(ConfigError):
            infer(params, Scene(1.0, (0.5, 0.6, 0.7)), cfg.replace(num_elements=6))
