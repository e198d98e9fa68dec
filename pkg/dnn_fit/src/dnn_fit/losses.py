"""Rollout training loss through the differentiable kinetics."""

from __future__ import annotations

import torch

from .physics import KineticParams, rollout

#: default term weights: (U_r, U_H, H, Q)
DEFAULT_WEIGHTS = (1.0, 1.0, 10.0, 1e6)

#: default clamped-gain law supervising the U_r term
DEFAULT_MANUAL = (0.19, -0.09, 0.09)


def manual_law(u_h: torch.Tensor, gain: float, lo: float, hi: float) -> torch.Tensor:
    """Reference rate modulation: clamp(gain * U_H, lo, hi)."""
    return torch.clamp(gain * u_h, lo, hi)


def rollout_loss(u_h_hat: torch.Tensor, ur_tilde: torch.Tensor,
                 u_h_bar: torch.Tensor, q_bar: torch.Tensor,
                 params: KineticParams, tau: float,
                 weights=DEFAULT_WEIGHTS, manual=DEFAULT_MANUAL) -> torch.Tensor:
    """Weighted tracking loss over one window batch.

    All window tensors have shape (batch, 64). The generated modulation is
    U_r^ = U_H^ * U~_r; the reference U_r comes from the clamped-gain law on
    the measured input. H and Q references are reconstructed from the
    measured channels: H by integrating the measured input (exact at zero
    noise), Q directly from the measurement, both starting each window at
    the window's own first sample.
    """
    l1, l2, l3, l4 = weights
    u_h_hat = u_h_hat.double()
    ur_tilde = ur_tilde.double()
    u_h_bar = u_h_bar.double()
    q_bar = q_bar.double()
    u_r_hat = u_h_hat * ur_tilde
    u_r_bar = manual_law(u_h_bar, *manual)

    # reference pH path from the measured input signal
    h_bar = params.H0 + tau * params.k_H * torch.cumsum(u_h_bar, dim=-1)
    h_bar = torch.cat([torch.full_like(h_bar[..., :1], params.H0),
                       h_bar[..., :-1]], dim=-1)

    traj = rollout(u_h_hat[..., :-1], u_r_hat[..., :-1], params, tau,
                   q0=q_bar[..., 0])
    h_hat, q_hat = traj["H"], traj["Q"]     # (batch, 64): states at samples

    sq = lambda x: torch.sum(x ** 2)
    loss = (l1 * sq(u_r_hat - u_r_bar) + l2 * sq(u_h_hat - u_h_bar)
            + l3 * sq(h_hat - h_bar) + l4 * sq(q_hat - q_bar))
    return loss / u_h_hat.shape[0]
