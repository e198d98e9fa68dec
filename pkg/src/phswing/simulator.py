"""Coupled forward solver: size-density transport + stochastic kinetics.

Each path advances with one explicit update per time step: the second moment
S of the size density enters the kinetic drift from the beginning of the
step, the kinetics take an Euler-Maruyama step, and the density takes a
Lax-Wendroff step with the coefficients frozen at the step start. Paths use
counter-based noise streams keyed by (seed, path index), so an ensemble is
reproducible for any worker count.
"""

from __future__ import annotations

import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import coefficients as coef
from .errors import ConfigError
from .kinetics import KineticState, draw_noise, em_step
from .params import ModelParams
from .psd import Grid, moment, psd_step

_FMT = "%.17g"


@dataclass
class ControlSignal:
    """Time series of the pH rate input U_H, the rate modulation U_r and the
    dosing mask driving k_v(t); sampled on the simulation grid."""

    u_h: np.ndarray
    u_r: np.ndarray
    dosing: np.ndarray
    u_min: float = -1.0
    u_max: float = 1.0

    def __post_init__(self):
        self.u_h = np.asarray(self.u_h, dtype=float)
        self.u_r = np.asarray(self.u_r, dtype=float)
        self.dosing = np.asarray(self.dosing, dtype=bool)
        if not (len(self.u_h) == len(self.u_r) == len(self.dosing)):
            raise ConfigError("control signal arrays must share one length")
        if np.any(self.u_h < self.u_min) or np.any(self.u_h > self.u_max):
            raise ConfigError(
                f"U_H leaves the admissible box [{self.u_min}, {self.u_max}]")

    @classmethod
    def constant(cls, grid: Grid, u_h: float = 0.0, u_r: float = 0.0,
                 dosing_until: float | None = None, **kw) -> "ControlSignal":
        n = grid.n_t + 1
        mask = (np.zeros(n, dtype=bool) if dosing_until is None
                else grid.t <= dosing_until)
        return cls(np.full(n, u_h), np.full(n, u_r), mask, **kw)

    def to_csv(self, path, grid: Grid):
        with open(path, "w") as fh:
            fh.write("t,U_H,U_r,dosing\n")
            for t, uh, ur, d in zip(grid.t, self.u_h, self.u_r, self.dosing):
                fh.write(f"{t:.17g},{uh:.17g},{ur:.17g},{int(d)}\n")

    @classmethod
    def from_csv(cls, path, **kw) -> tuple[np.ndarray, "ControlSignal"]:
        data = np.genfromtxt(path, delimiter=",", names=True)
        if data.dtype.names[:4] != ("t", "U_H", "U_r", "dosing"):
            raise ConfigError(f"{path}: expected header t,U_H,U_r,dosing")
        t = np.atleast_1d(data["t"])
        sig = cls(np.atleast_1d(data["U_H"]), np.atleast_1d(data["U_r"]),
                  np.atleast_1d(data["dosing"]) != 0, **kw)
        return t, sig


@dataclass
class RunConfig:
    params: ModelParams
    grid: Grid
    controls: ControlSignal
    n_paths: int = 1
    seed: int = 0
    record_every: int = 1
    psd_snapshot_times: tuple = ()
    f0: np.ndarray | None = None     # initial size density (None = empty)

    def __post_init__(self):
        if self.n_paths < 1:
            raise ConfigError("n_paths must be >= 1")
        if self.record_every < 1:
            raise ConfigError("record_every must be >= 1")
        if len(self.controls.u_h) != self.grid.n_t + 1:
            raise ConfigError("controls must be sampled on the run grid")
        self.grid.check_cfl(self.params.k_g)
        if self.f0 is not None:
            self.f0 = np.asarray(self.f0, dtype=float)
            if self.f0.shape != (self.grid.n_x + 1,):
                raise ConfigError("f0 must have n_x + 1 nodes")


@dataclass
class Ensemble:
    """Recorded trajectories of one seeded run."""

    config: RunConfig
    times: np.ndarray                # recorded times, (n_rec,)
    H: np.ndarray                    # (n_paths, n_rec)
    Q: np.ndarray
    C: np.ndarray
    R: np.ndarray
    S: np.ndarray
    psd_snapshots: dict = field(default_factory=dict)   # time -> (n_paths, n_x+1)
    noise: np.ndarray | None = None  # (n_paths, n_t, 3) when stored
    clip_count: int = 0

    def summary(self):
        """Mean and 5/95 percentile band of Q (and mean of the others)."""
        return {
            "t": self.times,
            "H_mean": self.H.mean(axis=0),
            "Q_mean": self.Q.mean(axis=0),
            "Q_q05": np.quantile(self.Q, 0.05, axis=0),
            "Q_q95": np.quantile(self.Q, 0.95, axis=0),
            "C_mean": self.C.mean(axis=0),
            "R_mean": self.R.mean(axis=0),
            "S_mean": self.S.mean(axis=0),
        }

    def trajectory_csv(self, path_index: int = 0) -> str:
        buf = io.StringIO()
        buf.write("t,H,Q,C,R,S\n")
        for k, t in enumerate(self.times):
            row = (t, self.H[path_index, k], self.Q[path_index, k],
                   self.C[path_index, k], self.R[path_index, k],
                   self.S[path_index, k])
            buf.write(",".join(_FMT % v for v in row) + "\n")
        return buf.getvalue()

    def summary_csv(self) -> str:
        s = self.summary()
        cols = ["t", "H_mean", "Q_mean", "Q_q05", "Q_q95", "C_mean", "R_mean", "S_mean"]
        buf = io.StringIO()
        buf.write(",".join(cols) + "\n")
        for k in range(len(self.times)):
            buf.write(",".join(_FMT % s[c][k] for c in cols) + "\n")
        return buf.getvalue()


def _snapshot_indices(config: RunConfig):
    grid = config.grid
    return {int(round(t / grid.tau)): t for t in config.psd_snapshot_times}


def _simulate_block(config: RunConfig, path_lo: int, path_hi: int,
                    store_noise: bool):
    params, grid, controls = config.params, config.grid, config.controls
    n_paths = path_hi - path_lo
    n_t = grid.n_t
    rec = [j for j in range(n_t + 1) if j % config.record_every == 0 or j == n_t]
    rec_pos = {j: k for k, j in enumerate(rec)}
    snaps = _snapshot_indices(config)

    f = (np.zeros((n_paths, grid.n_x + 1)) if config.f0 is None
         else np.tile(config.f0, (n_paths, 1)))
    state = KineticState.initial(params, n_paths)
    z = np.stack([draw_noise(config.seed, i, n_t)
                  for i in range(path_lo, path_hi)])        # (n_paths, n_t, 3)

    out = {name: np.empty((n_paths, len(rec))) for name in "HQCRS"}
    snapshots = {}
    for j in range(n_t + 1):
        s2 = moment(f, 2, grid)
        if j in rec_pos:
            k = rec_pos[j]
            out["H"][:, k] = state.H
            out["Q"][:, k] = state.Q
            out["C"][:, k] = state.C
            out["R"][:, k] = state.R
            out["S"][:, k] = np.atleast_1d(s2)
        if j in snaps:
            snapshots[snaps[j]] = f.copy()
        if j == n_t:
            break
        a = np.atleast_1d(coef.growth_rate(state.C, state.H, params))
        n_rate = np.atleast_1d(coef.nucleation_rate(state.C, state.H, params))
        kv = params.k_v if controls.dosing[j] else 0.0
        state = em_step(state, s2, controls.u_h[j], controls.u_r[j],
                        z[:, j, :].T, params, grid.tau, kv)
        f = psd_step(f, a, n_rate, grid)
    return out, snapshots, (z if store_noise else None), state.clip_count


def simulate(config: RunConfig, store_noise: bool = False,
             workers: int = 1) -> Ensemble:
    """Run the ensemble; deterministic given (seed, config) for any worker
    count."""
    grid = config.grid
    bounds = np.linspace(0, config.n_paths, min(workers, config.n_paths) + 1).astype(int)
    blocks = [(int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
    if len(blocks) == 1:
        results = [_simulate_block(config, *blocks[0], store_noise)]
    else:
        with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
            results = list(pool.map(
                lambda b: _simulate_block(config, b[0], b[1], store_noise), blocks))

    rec = [j for j in range(grid.n_t + 1) if j % config.record_every == 0 or j == grid.n_t]
    times = grid.t[rec]
    cat = lambda name: np.concatenate([r[0][name] for r in results], axis=0)
    snapshots = {}
    for t in _snapshot_indices(config).values():
        snapshots[t] = np.concatenate([r[1][t] for r in results], axis=0)
    noise = (np.concatenate([r[2] for r in results], axis=0) if store_noise else None)
    return Ensemble(config=config, times=times, H=cat("H"), Q=cat("Q"),
                    C=cat("C"), R=cat("R"), S=cat("S"),
                    psd_snapshots=snapshots, noise=noise,
                    clip_count=sum(r[3] for r in results))


def cost_j(times, q_paths, q_bar, u_r, u_r_bar, alpha: float,
           q_weight: float = 1.0) -> float:
    """Tracking cost: trapezoid integral of the running cost plus terminal
    penalty, averaged over the ensemble."""
    times = np.asarray(times, dtype=float)
    q_paths = np.atleast_2d(np.asarray(q_paths, dtype=float))
    q_bar = np.asarray(q_bar, dtype=float)
    u_r = np.asarray(u_r, dtype=float)
    u_r_bar = np.asarray(u_r_bar, dtype=float)
    if q_paths.shape[1] != len(times) or len(q_bar) != len(times) \
            or len(u_r) != len(times) or len(u_r_bar) != len(times):
        raise ConfigError("cost_j requires all traces on a common grid")
    running = 0.5 * (q_weight * (q_paths - q_bar) ** 2
                     + alpha * (u_r - u_r_bar) ** 2)
    integral = np.trapezoid(running, times, axis=1)
    terminal = 0.5 * (q_paths[:, -1] - q_bar[-1]) ** 2
    return float(np.mean(integral + terminal))


def stationarity_experiment(config: RunConfig, tail_frac: float = 0.9) -> dict:
    """Long-run diagnostics for the dosing-cutoff regime.

    Returns Q(T)/Q0, the relative gap |C(T) - C_sat(H*)| / C_sat(H*) with
    H* the terminal pH, and the sup-change of the size density over the tail
    window [tail_frac * T, T] relative to its peak.
    """
    t_end = config.grid.t[-1]
    cfg = RunConfig(params=config.params, grid=config.grid,
                    controls=config.controls, n_paths=config.n_paths,
                    seed=config.seed, record_every=config.record_every,
                    psd_snapshot_times=(tail_frac * t_end, t_end),
                    f0=config.f0)
    ens = simulate(cfg)
    h_star = float(ens.H[:, -1].mean())
    c_sat_star = coef.c_sat(h_star, config.params)
    q0 = config.params.Q0
    f_tail = ens.psd_snapshots[tail_frac * t_end]
    f_end = ens.psd_snapshots[t_end]
    peak = max(float(np.max(np.abs(f_end))), 1e-300)
    return {
        "H_star": h_star,
        "c_sat_star": float(c_sat_star),
        "q_ratio": float(ens.Q[:, -1].mean() / q0),
        "c_gap_rel": float(abs(ens.C[:, -1].mean() - c_sat_star) / c_sat_star),
        "f_tail_change": float(np.max(np.abs(f_end - f_tail)) / peak),
        "clip_count": ens.clip_count,
    }
