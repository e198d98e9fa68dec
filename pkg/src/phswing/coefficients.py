"""Process coefficients of the simplified precipitation model.

All functions are pure and accept scalars or numpy arrays for the state
arguments. The clamp ``C_tilde = max(C / C_sat - 1, 0)`` is applied uniformly
inside the growth and nucleation laws, which makes both rates vanish exactly
at and below saturation.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .params import ModelParams

# exponent guard: exp() overflows above ~709
_EXP_CAP = 700.0


def carbonate_ion(h, params: ModelParams):
    """Sigmoid carbonate law P(H); strictly inside (0, K_tilde_co2)."""
    h = np.asarray(h, dtype=float)
    arg = -params.K_tilde_a1 * (h - params.K_tilde_a2) * (h + params.K_tilde_a3)
    p = params.K_tilde_co2 / (1.0 + np.exp(np.clip(arg, -_EXP_CAP, _EXP_CAP)))
    return p if p.ndim else float(p)


def carbonate_ion_dh(h, params: ModelParams):
    """Analytic dP/dH."""
    h = np.asarray(h, dtype=float)
    p = carbonate_ion(h, params)
    garg = params.K_tilde_a1 * (2.0 * h + params.K_tilde_a3 - params.K_tilde_a2)
    out = p * (1.0 - p / params.K_tilde_co2) * garg
    return out if np.ndim(out) else float(out)


def c_sat(h, params: ModelParams):
    """Bounded saturation concentration; monotone decreasing in H."""
    if params.K_sp <= 0:
        raise ConfigError("c_sat requires K_sp > 0")
    p = carbonate_ion(h, params)
    out = params.K1_sat / (1.0 + params.K2_sat * np.sqrt(p / params.K_sp))
    return out if np.ndim(out) else float(out)


def c_sat_dh(h, params: ModelParams):
    """Analytic dC_sat/dH."""
    p = np.asarray(carbonate_ion(h, params), dtype=float)
    dp = carbonate_ion_dh(h, params)
    s = np.sqrt(p / params.K_sp)
    denom = (1.0 + params.K2_sat * s) ** 2
    out = -params.K1_sat * params.K2_sat * dp / (2.0 * params.K_sp * s) / denom
    return out if np.ndim(out) else float(out)


def supersat(c, h, params: ModelParams):
    """Clamped relative supersaturation max(C / C_sat - 1, 0)."""
    out = np.maximum(np.asarray(c, dtype=float) / c_sat(h, params) - 1.0, 0.0)
    return out if np.ndim(out) else float(out)


def growth_rate(c, h, params: ModelParams):
    """Crystal growth speed a = k_g tanh(C_tilde^p); zero at/below saturation."""
    ct = supersat(c, h, params)
    out = params.k_g * np.tanh(np.asarray(ct, dtype=float) ** params.p_exp)
    return out if np.ndim(out) else float(out)


def nucleation_rate(c, h, params: ModelParams):
    """Nucleation rate N = k_N exp(-delta / C_tilde^n), continuously 0 at C_tilde = 0."""
    scalar = np.ndim(c) == 0 and np.ndim(h) == 0
    ct = np.atleast_1d(np.asarray(supersat(c, h, params), dtype=float))
    out = np.zeros_like(ct)
    pos = ct > 0.0
    if params.delta == 0.0:
        out[pos] = params.k_N
    else:
        with np.errstate(divide="ignore"):
            out[pos] = params.k_N * np.exp(-params.delta / ct[pos] ** params.n_exp)
    return float(out[0]) if scalar else out.reshape(np.shape(supersat(c, h, params)))


def reaction_rate(q, h, u_r, params: ModelParams):
    """Kinetic conversion rate r = K_sp * Q * P(H) * U_r."""
    out = params.K_sp * np.asarray(q, dtype=float) * carbonate_ion(h, params) * u_r
    return out if np.ndim(out) else float(out)


def sink_term(c, h, s2, r_vol, params: ModelParams):
    """Mass consumed by growth and nucleation, (rho/R)(a*S + v_nuc*N)."""
    if np.any(np.asarray(r_vol) <= 0):
        raise ConfigError("sink_term requires volume R > 0")
    a = growth_rate(c, h, params)
    n = nucleation_rate(c, h, params)
    out = (params.rho / np.asarray(r_vol, dtype=float)) * (a * np.asarray(s2) + params.v_nuc * n)
    return out if np.ndim(out) else float(out)


def coefficient_partials(c, h, params: ModelParams, q=0.0, u_r=0.0):
    """Analytic partial derivatives needed by the adjoint system.

    Returns (da_dc, da_dh, dn_dc, dn_dh, dr_dq, dr_dh). The clamp in
    C_tilde gives one-sided derivative 0 on the flat branch (C <= C_sat).
    """
    scalar = np.ndim(c) == 0 and np.ndim(h) == 0
    c = np.atleast_1d(np.asarray(c, dtype=float))
    csat = np.atleast_1d(np.asarray(c_sat(h, params), dtype=float))
    ct = np.maximum(c / csat - 1.0, 0.0)
    pos = ct > 0.0

    # chain through C_tilde
    dct_dc = np.where(pos, 1.0 / csat, 0.0)
    dct_dh = np.where(pos, -c * np.asarray(c_sat_dh(h, params)) / csat ** 2, 0.0)

    p_exp, n_exp = params.p_exp, params.n_exp
    ctp = ct ** p_exp
    da_dct = params.k_g * (1.0 - np.tanh(ctp) ** 2) * p_exp * np.where(pos, ct, 1.0) ** (p_exp - 1.0)
    da_dct = np.where(pos, da_dct, 0.0)

    dn_dct = np.zeros_like(ct)
    with np.errstate(divide="ignore"):
        dn_dct[pos] = (params.k_N * np.exp(-params.delta / ct[pos] ** n_exp)
                       * params.delta * n_exp / ct[pos] ** (n_exp + 1.0))

    p_val = np.atleast_1d(np.asarray(carbonate_ion(h, params), dtype=float))
    dr_dq = params.K_sp * p_val * u_r
    dr_dh = (params.K_sp * np.atleast_1d(np.asarray(q, dtype=float))
             * np.atleast_1d(np.asarray(carbonate_ion_dh(h, params), dtype=float)) * u_r)

    out = (da_dct * dct_dc, da_dct * dct_dh,
           dn_dct * dct_dc, dn_dct * dct_dh,
           dr_dq, dr_dh)
    if scalar:
        return tuple(float(v[0]) for v in out)
    return out


# -- reference (non-simplified) chemistry, used only for comparison plots --

def carbonate_ion_reference(h, params: ModelParams):
    """Equilibrium carbonate concentration from the full speciation law."""
    h = np.asarray(h, dtype=float)
    hp = 10.0 ** (-h)
    c_t = params.K_henry * (1.0 + params.K_a1 / hp + params.K_a2 * params.K_a2 / hp ** 2)
    out = c_t * params.K_a1 * params.K_a2 / (hp ** 2 + params.K_a1 * hp + params.K_a1 * params.K_a2)
    return out if np.ndim(out) else float(out)


def c_sat_reference(h, params: ModelParams):
    """Unbounded reference saturation law sqrt(K_sp / [CO3--](H))."""
    out = np.sqrt(params.K_sp / np.asarray(carbonate_ion_reference(h, params), dtype=float))
    return out if np.ndim(out) else float(out)
