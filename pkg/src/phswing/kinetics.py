"""Euler-Maruyama integration of the stochastic kinetic equations.

State components H (pH), Q ([Ca2+]), C ([CaCO3 aq]) carry multiplicative
noise; the reactor volume R is deterministic. All step functions operate on
scalars or on arrays of independent paths. Noise streams are counter-based
(Philox) and keyed by (seed, path index) so ensembles are reproducible for
any worker count or scheduling order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import coefficients as coef
from .errors import NumericsError
from .params import ModelParams


@dataclass
class KineticState:
    """One time slice of the kinetic subsystem (arrays = independent paths)."""

    H: np.ndarray
    Q: np.ndarray
    C: np.ndarray
    R: np.ndarray
    clip_count: int = 0

    @classmethod
    def initial(cls, params: ModelParams, n_paths: int = 1) -> "KineticState":
        full = lambda v: np.full(n_paths, float(v))
        return cls(H=full(params.H0), Q=full(params.Q0), C=full(params.C0),
                   R=full(params.R0))

    def copy(self) -> "KineticState":
        return KineticState(self.H.copy(), self.Q.copy(), self.C.copy(),
                            self.R.copy(), self.clip_count)


def path_rng(seed: int, path_index: int) -> np.random.Generator:
    """Counter-based stream for one path; independent of scheduling."""
    key = np.array([np.uint64(seed), np.uint64(path_index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def draw_noise(seed: int, path_index: int, n_steps: int) -> np.ndarray:
    """All standard normal variates for one path, shape (n_steps, 3).

    Column order: z1 -> C, z2 -> Q, z3 -> H.
    """
    return path_rng(seed, path_index).standard_normal((n_steps, 3))


def drift(state: KineticState, s2, u_h, u_r, kv, params: ModelParams):
    """Deterministic drift (dH, dQ, dC, dR) of the coupled kinetics."""
    kv_tilde = kv / state.R
    r = coef.reaction_rate(state.Q, state.H, u_r, params)
    sink = coef.sink_term(state.C, state.H, s2, state.R, params)
    d_h = params.k_H * u_h * np.ones_like(state.H)
    d_q = -r - kv_tilde * state.Q
    d_c = r - kv_tilde * state.C - sink
    d_r = kv * np.ones_like(state.R)
    return d_h, d_q, d_c, d_r


def em_step(state: KineticState, s2, u_h, u_r, z, params: ModelParams,
            tau: float, kv) -> KineticState:
    """One Euler-Maruyama step; z has shape (3,) or (3, n_paths).

    Negative excursions of Q and C are clipped to 0 (zero is absorbing in the
    exact multiplicative-noise dynamics) and counted.
    """
    z = np.asarray(z, dtype=float)
    d_h, d_q, d_c, d_r = drift(state, s2, u_h, u_r, kv, params)
    rt = np.sqrt(tau)
    new = KineticState(
        H=state.H + tau * d_h + rt * params.sigma_H * state.H * z[2],
        Q=state.Q + tau * d_q + rt * params.sigma_Q * state.Q * z[1],
        C=state.C + tau * d_c + rt * params.sigma_C * state.C * z[0],
        R=state.R + tau * d_r,
        clip_count=state.clip_count,
    )
    clips = int(np.sum(new.Q < 0)) + int(np.sum(new.C < 0))
    if clips:
        new.Q = np.maximum(new.Q, 0.0)
        new.C = np.maximum(new.C, 0.0)
        new.clip_count += clips
    for name, arr in (("H", new.H), ("Q", new.Q), ("C", new.C), ("R", new.R)):
        if not np.all(np.isfinite(arr)):
            raise NumericsError(f"non-finite {name} after Euler-Maruyama step")
    return new
