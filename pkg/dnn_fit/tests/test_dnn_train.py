"""Tests of the generator training loop."""

import numpy as np
import pytest
import torch

from dnn_fit.data import WindowDataset
from dnn_fit.physics import KineticParams
from dnn_fit.train import DivergenceError, TrainConfig, train


def small_dataset(n_traces=12, seed=1):
    rng = np.random.default_rng(seed)
    t = 0.05 * np.arange(64)
    u_h = np.stack([a * np.sin(w * t + ph) for a, w, ph in
                    zip(rng.uniform(0.1, 0.6, n_traces),
                        rng.uniform(0.3, 1.5, n_traces),
                        rng.uniform(0, 6.28, n_traces))])
    q = 1.0 - 0.02 * np.cumsum(np.abs(u_h), axis=1) * 0.05
    return WindowDataset(u_h, q, mode="batched")


def quick_config(**kw):
    base = dict(epochs=3, batch=4, seed=7,
                params=KineticParams(K_sp=0.02, Q0=1.0, rho=0.0))
    base.update(kw)
    return TrainConfig(**base)


class TestConfig:
    def test_arch_validated(self):
        with pytest.raises(ValueError):
            TrainConfig(arch="cnn")

    def test_negative_weight_rejected(self):
        with pytest.raises(ValueError):
            TrainConfig(weights=(1.0, -1.0, 1.0, 1.0))

    def test_defaults(self):
        c = TrainConfig()
        assert (c.epochs, c.batch, c.lr) == (500, 128, 0.001)


class TestTrain:
    def test_history_lengths(self):
        model, hist = train(small_dataset(), quick_config())
        assert len(hist["train"]) == 3 and len(hist["val"]) == 3
        assert all(np.isfinite(hist["train"]))

    def test_seed_determinism(self):
        m1, h1 = train(small_dataset(), quick_config())
        m2, h2 = train(small_dataset(), quick_config())
        assert h1 == h2
        for p1, p2 in zip(m1.parameters(), m2.parameters()):
            assert torch.equal(p1, p2)

    def test_different_seeds_differ(self):
        _, h1 = train(small_dataset(), quick_config(seed=7))
        _, h2 = train(small_dataset(), quick_config(seed=8))
        assert h1["train"] != h2["train"]

    def test_gru_smoke(self):
        model, hist = train(small_dataset(), quick_config(arch="gru", epochs=2))
        assert len(hist["train"]) == 2

    def test_divergence_error_names_step(self):
        ds = small_dataset()
        ds.windows[3, 1, 10] = np.nan
        with pytest.raises(DivergenceError, match=r"epoch \d+, batch \d+"):
            train(ds, quick_config(val_frac=0.0))

    def test_no_training_windows_rejected(self):
        with pytest.raises(ValueError):
            train(small_dataset(n_traces=2), quick_config(val_frac=1.0))

    def test_checkpoint_written(self, tmp_path):
        path = tmp_path / "gen.pt"
        ds = small_dataset()
        model, _ = train(ds, quick_config(epochs=1, checkpoint=str(path)))
        blob = torch.load(path, weights_only=False)
        assert blob["arch"] == "ann"
        assert np.array_equal(blob["mean"], ds.mean)
        assert np.array_equal(blob["std"], ds.std)
        for k, v in model.state_dict().items():
            assert torch.equal(blob["state_dict"][k], v)

    def test_loss_decreases(self):
        _, hist = train(small_dataset(), quick_config(epochs=20))
        assert hist["train"][-1] < hist["train"][0]
