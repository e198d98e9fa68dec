"""Differentiable noise-free kinetics used inside the training loss.

This re-implements the simulator's explicit Euler step for the kinetic state
(H, Q, C, R) at zero noise, in double precision, so losses can backpropagate
through short rollouts. The particle-size sink enters with the second moment
frozen at 0 (empty reactor); the remaining nucleation-volume sink is kept.
The only coupling to the simulator package is through exchanged control CSV
files, so the parameter set is carried locally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import torch

_EXP_CAP = 700.0


@dataclass
class KineticParams:
    """Kinetic constants; defaults mirror the simulator's."""

    K_sp: float = 2.8e-9
    K_tilde_co2: float = 100.0
    K_tilde_a1: float = 0.45
    K_tilde_a2: float = 6.6
    K_tilde_a3: float = 13.5
    K1_sat: float = 0.05
    K2_sat: float = 1.2e6
    k_g: float = 0.459
    k_N: float = 1.0
    delta: float = 1.0
    p_exp: float = 2.0
    n_exp: float = 2.0
    rho: float = 0.315
    v_nuc: float = field(default=math.pi / 6.0)
    k_H: float = 1.0
    k_v: float = 1e-2
    R0: float = 5.18
    C0: float = 0.0
    Q0: float = 0.05
    H0: float = 7.0


def carbonate_ion(h: torch.Tensor, p: KineticParams) -> torch.Tensor:
    arg = -p.K_tilde_a1 * (h - p.K_tilde_a2) * (h + p.K_tilde_a3)
    return p.K_tilde_co2 / (1.0 + torch.exp(torch.clamp(arg, -_EXP_CAP, _EXP_CAP)))


def c_sat(h: torch.Tensor, p: KineticParams) -> torch.Tensor:
    return p.K1_sat / (1.0 + p.K2_sat * torch.sqrt(carbonate_ion(h, p) / p.K_sp))


def supersat(c: torch.Tensor, h: torch.Tensor, p: KineticParams) -> torch.Tensor:
    return torch.clamp(c / c_sat(h, p) - 1.0, min=0.0)


def nucleation_rate(c: torch.Tensor, h: torch.Tensor, p: KineticParams) -> torch.Tensor:
    ct = supersat(c, h, p)
    pos = ct > 0.0
    safe = torch.where(pos, ct, torch.ones_like(ct))
    val = p.k_N * torch.exp(-p.delta / safe ** p.n_exp)
    return torch.where(pos, val, torch.zeros_like(ct))


def reaction_rate(q, h, u_r, p: KineticParams):
    return p.K_sp * q * carbonate_ion(h, p) * u_r


def rollout(u_h: torch.Tensor, u_r: torch.Tensor, p: KineticParams,
            tau: float, dosing: torch.Tensor | None = None,
            q0: torch.Tensor | None = None, h0: torch.Tensor | None = None):
    """Integrate n explicit Euler steps of the zero-noise kinetics.

    ``u_h``, ``u_r`` have shape (..., n): one input per step. Returns a dict
    of trajectories H, Q, C, R with shape (..., n + 1). ``q0``/``h0`` may
    override the nominal initial values per batch element (shape (...,)).
    """
    u_h = u_h.double()
    u_r = u_r.double()
    n = u_h.shape[-1]
    shape = u_h.shape[:-1]
    dev = u_h.device
    full = lambda v: torch.full(shape, float(v), dtype=torch.float64, device=dev)
    h = full(p.H0) if h0 is None else h0.double()
    q = full(p.Q0) if q0 is None else q0.double()
    c = full(p.C0)
    r_vol = full(p.R0)
    hs, qs, cs, rs = [h], [q], [c], [r_vol]
    for j in range(n):
        kv = p.k_v * (float(dosing[j]) if dosing is not None else 0.0)
        kv_tilde = kv / r_vol
        r = reaction_rate(q, h, u_r[..., j], p)
        sink = (p.rho / r_vol) * (p.v_nuc * nucleation_rate(c, h, p))
        h = h + tau * (p.k_H * u_h[..., j])
        q_new = q + tau * (-r - kv_tilde * q)
        c_new = c + tau * (r - kv_tilde * c - sink)
        q = torch.clamp(q_new, min=0.0)
        c = torch.clamp(c_new, min=0.0)
        r_vol = r_vol + tau * kv
        hs.append(h)
        qs.append(q)
        cs.append(c)
        rs.append(r_vol)
    stack = lambda xs: torch.stack(xs, dim=-1)
    return {"H": stack(hs), "Q": stack(qs), "C": stack(cs), "R": stack(rs)}
