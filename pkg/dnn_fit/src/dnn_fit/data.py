"""Window extraction and normalization for generator training."""

from __future__ import annotations

import numpy as np
import torch

from .models import CHANNELS, WINDOW


class WindowDataset:
    """Length-64 windows over the two measured channels (U_H, Q).

    ``mode="rolling"`` slides with the given stride (default 1);
    ``mode="batched"`` takes disjoint windows (stride 64). Per-channel
    z-score statistics are computed from the extracted windows and stored
    with the dataset; inference must reuse them.
    """

    def __init__(self, u_h: np.ndarray, q: np.ndarray, mode: str = "rolling",
                 stride: int | None = None):
        u_h = np.asarray(u_h, dtype=float)
        q = np.asarray(q, dtype=float)
        if u_h.shape != q.shape or u_h.ndim not in (1, 2):
            raise ValueError("u_h and q must be matching 1-D or 2-D arrays")
        if mode not in ("rolling", "batched"):
            raise ValueError("mode must be rolling or batched")
        traces = np.stack([u_h, q], axis=-2)           # (..., 2, n)
        if traces.ndim == 2:
            traces = traces[None]
        if traces.shape[-1] < WINDOW:
            raise ValueError(f"traces shorter than one window ({WINDOW})")
        step = (stride or 1) if mode == "rolling" else WINDOW
        wins = []
        for tr in traces:
            for j in range(0, tr.shape[-1] - WINDOW + 1, step):
                wins.append(tr[:, j:j + WINDOW])
        self.windows = np.asarray(wins)                # (n_win, 2, 64)
        self.mode = mode
        self.mean = self.windows.mean(axis=(0, 2))
        std = self.windows.std(axis=(0, 2))
        self.std = np.where(std > 0, std, 1.0)

    def __len__(self) -> int:
        return len(self.windows)

    def __getitem__(self, idx):
        return self.windows[idx]

    def normalize(self, w: np.ndarray) -> np.ndarray:
        return (w - self.mean[:, None]) / self.std[:, None]

    def tensors(self, dtype=torch.float32):
        """(normalized windows, raw windows) as torch tensors."""
        raw = torch.as_tensor(self.windows, dtype=dtype)
        mean = torch.as_tensor(self.mean, dtype=dtype)[None, :, None]
        std = torch.as_tensor(self.std, dtype=dtype)[None, :, None]
        return (raw - mean) / std, raw


assert CHANNELS == 2
