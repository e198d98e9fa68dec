"""Training loop for the window-to-control generators."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from .data import WindowDataset
from .losses import DEFAULT_MANUAL, DEFAULT_WEIGHTS, rollout_loss
from .models import build_ann, build_gru
from .physics import KineticParams


class DivergenceError(RuntimeError):
    """Raised when a training step produces a non-finite loss."""


@dataclass
class TrainConfig:
    arch: str = "ann"                 # "ann" or "gru"
    epochs: int = 500
    batch: int = 128
    lr: float = 0.001
    weights: tuple = DEFAULT_WEIGHTS
    manual: tuple = DEFAULT_MANUAL
    tau: float = 0.05
    seed: int = 0
    val_frac: float = 0.2
    checkpoint: str | None = None
    params: KineticParams = field(default_factory=KineticParams)

    def __post_init__(self):
        if self.arch not in ("ann", "gru"):
            raise ValueError("arch must be ann or gru")
        if any(w < 0 for w in self.weights):
            raise ValueError("loss weights must be nonnegative")


def _batch_loss(model, arch, x_norm, raw, config):
    out = model(x_norm) if arch == "ann" else \
        model(x_norm.transpose(1, 2)).transpose(1, 2)
    u_h_hat, ur_tilde = out[:, 0, :], out[:, 1, :]
    return rollout_loss(u_h_hat, ur_tilde, raw[:, 0, :], raw[:, 1, :],
                        config.params, config.tau,
                        weights=config.weights, manual=config.manual)


def train(dataset: WindowDataset, config: TrainConfig):
    """Train a generator; deterministic given the seed.

    Returns (model, history) with history = {"train": [...], "val": [...]}.
    Divergence (non-finite loss) raises DivergenceError naming the epoch and
    batch index.
    """
    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)
    model = build_ann() if config.arch == "ann" else build_gru()
    opt = torch.optim.Adamax(model.parameters(), lr=config.lr)

    x_norm, raw = dataset.tensors()
    n = len(dataset)
    n_val = int(round(config.val_frac * n))
    perm = rng.permutation(n)
    val_idx = torch.as_tensor(perm[:n_val])
    tr_idx = torch.as_tensor(perm[n_val:])
    if len(tr_idx) == 0:
        raise ValueError("no training windows after the validation split")

    history = {"train": [], "val": []}
    for epoch in range(config.epochs):
        order = tr_idx[torch.as_tensor(rng.permutation(len(tr_idx)))]
        epoch_loss = 0.0
        for b, lo in enumerate(range(0, len(order), config.batch)):
            idx = order[lo:lo + config.batch]
            loss = _batch_loss(model, config.arch, x_norm[idx], raw[idx], config)
            if not torch.isfinite(loss):
                raise DivergenceError(
                    f"non-finite loss at epoch {epoch}, batch {b}")
            opt.zero_grad()
            loss.backward()
            opt.step()
            epoch_loss += float(loss.detach()) * len(idx)
        history["train"].append(epoch_loss / len(order))
        if n_val:
            with torch.no_grad():
                history["val"].append(float(_batch_loss(
                    model, config.arch, x_norm[val_idx], raw[val_idx], config)))

    if config.checkpoint:
        torch.save({"state_dict": model.state_dict(),
                    "mean": dataset.mean, "std": dataset.std,
                    "arch": config.arch}, config.checkpoint)
    return model, history
