"""The two window-to-control generator architectures.

Both map a 64-sample window of (measured pH-rate input, measured Ca trace)
to a 64-sample window of (generated pH-rate input, rate-modulation ratio),
with tanh heads bounding both output channels in (-1, 1).
"""

from __future__ import annotations

import torch
from torch import nn

WINDOW = 64
CHANNELS = 2


class AnnGenerator(nn.Module):
    """Fully connected generator on the flattened 2 x 64 window.

    Three 128 -> 128 linear stages (ReLU after the first only) and a tanh
    head; 3 x 16,512 = 49,536 trainable parameters.
    """

    def __init__(self):
        super().__init__()
        width = CHANNELS * WINDOW
        self.net = nn.Sequential(
            nn.Linear(width, width),
            nn.ReLU(),
            nn.Linear(width, width),
            nn.Linear(width, width),
        )

    def pre_reshape(self, x: torch.Tensor) -> torch.Tensor:
        """Flat (batch, 128) output before the window reshape."""
        flat = x.reshape(x.shape[0], -1)
        return torch.tanh(self.net(flat))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """(batch, 2, 64) window in, (batch, 2, 64) controls out."""
        return self.pre_reshape(x).reshape(-1, CHANNELS, WINDOW)


class GruGenerator(nn.Module):
    """Sequence-to-sequence generator: 3-layer bidirectional recurrent gated
    unit (hidden 32 per direction) and a 64 -> 2 linear head (130 parameters)
    under tanh; 44,674 trainable parameters in total.

    The initial hidden state is a fixed (non-trainable) context buffer of
    shape (6, 32, 32) = (layers x directions, nominal batch, hidden); batches
    of other sizes start from zeros of matching shape.
    """

    NOMINAL_BATCH = 32

    def __init__(self):
        super().__init__()
        self.gru = nn.GRU(input_size=CHANNELS, hidden_size=32, num_layers=3,
                          bidirectional=True, batch_first=True)
        self.head = nn.Linear(64, CHANNELS)
        self.register_buffer(
            "context", torch.zeros(6, self.NOMINAL_BATCH, 32))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """(batch, 64, 2) window in, (batch, 64, 2) controls out."""
        batch = x.shape[0]
        if batch == self.NOMINAL_BATCH:
            h0 = self.context
        else:
            h0 = x.new_zeros(6, batch, 32)
        y, _ = self.gru(x, h0)
        return torch.tanh(self.head(y))


def build_ann() -> AnnGenerator:
    return AnnGenerator()


def build_gru() -> GruGenerator:
    return GruGenerator()


def trainable_parameters(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters() if p.requires_grad)
