"""Physical and numerical constants of the precipitation model.

``ModelParams`` is the single source of truth for the parameter vector theta.
It serializes to/from a flat ``key = value`` text file; unknown keys are
rejected so that typos in configs fail loudly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

from .errors import ConfigError


@dataclass
class ModelParams:
    # solubility / chemistry constants (dimensionless unless noted)
    K_sp: float = 2.8e-9
    K_tilde_co2: float = 100.0       # carbonate plateau of the sigmoid law
    K_tilde_a1: float = 0.45         # sigmoid shape constants
    K_tilde_a2: float = 6.6
    K_tilde_a3: float = 13.5
    K1_sat: float = 0.05             # saturation-law constants
    K2_sat: float = 1.2e6

    # precipitation kinetics
    k_g: float = 0.459               # growth constant, um/s
    k_N: float = 1.0                 # nucleation prefactor, 1/s
    delta: float = 1.0               # nucleation barrier (stored directly)
    p_exp: float = 2.0               # growth exponent
    n_exp: float = 2.0               # nucleation exponent

    # particle / reactor geometry
    rho: float = 0.315               # particle density (as tabulated, g/cm^3)
    d: float = 1.0                   # nucleus diameter, um
    v_nuc: float = field(default=math.pi / 6.0)  # nucleus volume = pi/6 d^3
    k_H: float = 1.0                 # pH rate constant
    k_v: float = 1e-2                # inflow rate while dosing is active, l/s
    R0: float = 5.18                 # initial volume, l

    # noise intensities
    sigma_H: float = 0.001
    sigma_Q: float = 0.0005
    sigma_C: float = 0.025

    # initial values
    C0: float = 0.0
    Q0: float = 0.05
    H0: float = 7.0

    # reference (non-simplified) chemistry, comparison plot only
    K_a1: float = 1e-6
    K_a2: float = 1e-10
    K_henry: float = 1e-3            # dissolved CO2 scale, mol/l

    def __post_init__(self):
        nonneg = ("K_sp", "K_tilde_co2", "K1_sat", "K2_sat", "k_g", "k_N",
                  "delta", "rho", "d", "v_nuc", "k_v", "sigma_H", "sigma_Q",
                  "sigma_C", "C0", "Q0")
        for name in nonneg:
            if getattr(self, name) < 0:
                raise ConfigError(f"parameter {name} must be >= 0")
        if self.R0 <= 0:
            raise ConfigError("R0 must be > 0")

    def with_(self, **kwargs) -> "ModelParams":
        """Copy with selected fields overridden."""
        return replace(self, **kwargs)

    # -- flat key = value config I/O -------------------------------------

    def to_config(self) -> str:
        lines = [f"{f.name} = {getattr(self, f.name):.17g}" for f in fields(self)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_config(cls, text: str, extra_ok: set[str] | None = None) -> "ModelParams":
        """Parse a flat config. Keys not belonging to ModelParams and not in
        ``extra_ok`` raise ConfigError."""
        known = {f.name for f in fields(cls)}
        kwargs = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            if key in known:
                try:
                    kwargs[key] = float(value)
                except ValueError as exc:
                    raise ConfigError(f"line {lineno}: bad value for {key}: {value.strip()!r}") from exc
            elif extra_ok is not None and key in extra_ok:
                continue
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        params = cls(**kwargs)
        if "v_nuc" not in kwargs and "d" in kwargs:
            params = params.with_(v_nuc=math.pi / 6.0 * params.d ** 3)
        return params


def preset(name: str) -> ModelParams:
    """Named parameter presets.

    "table"  -- the experiment-calibrated set (default).
    "inline" -- same, but with the alternative K1_sat = 0.01 appearing in the
                saturation-law definition.
    "ksp-text" -- same as table but with the textual K_sp = 4.8e-9.
    """
    if name == "table":
        return ModelParams()
    if name == "inline":
        return ModelParams(K1_sat=0.01)
    if name == "ksp-text":
        return ModelParams(K_sp=4.8e-9)
    raise ConfigError(f"unknown parameter preset {name!r}")
