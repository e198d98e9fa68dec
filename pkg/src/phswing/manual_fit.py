"""Hand-tuned design law: U_r is a clamped gain on the pH rate input."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class ManualFitParams:
    k_rc: float          # gain
    k_minus_uc: float    # lower clamp
    k_plus_uc: float     # upper clamp

    def __post_init__(self):
        if not (self.k_minus_uc <= 0.0 <= self.k_plus_uc):
            raise ConfigError("clamp band must contain 0")


# per-experiment constants, tuned by hand against the measured traces
_PRESETS = {
    1: ManualFitParams(0.175, -0.02, 0.042),
    2: ManualFitParams(0.15, -0.02, 0.06),
    3: ManualFitParams(0.19, -0.003, 0.19),
    4: ManualFitParams(0.19, -0.002, 0.09),
}


def preset(experiment_id: int) -> ManualFitParams:
    try:
        return _PRESETS[experiment_id]
    except KeyError:
        raise ConfigError(f"unknown experiment id {experiment_id!r}; choose 1..4") from None


def manual_ur(u_h, kappa: ManualFitParams):
    """Pointwise clamp(k_rc * U_H, k-, k+)."""
    out = np.clip(kappa.k_rc * np.asarray(u_h, dtype=float),
                  kappa.k_minus_uc, kappa.k_plus_uc)
    return out if np.ndim(out) else float(out)


def manual_ur_closure(kappa: ManualFitParams):
    """Online form of the same law, for use inside a stepping loop."""
    return lambda u_h: manual_ur(u_h, kappa)
