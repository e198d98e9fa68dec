"""Ingest of measured traces and plot-data export.

Experiment files carry time, pH, a continuous Ca trace from the
ion-selective electrode (ISE) and, optionally, sparse ion-chromatography
(IC) samples. The ISE channel is the dense tracking target; IC samples are
kept for overlays only. All exports use 17 significant digits.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .psd import Grid

_FMT = "%.17g"


@dataclass
class ExperimentTrace:
    """One measured run: times (s), pH, dense Ca (ISE) and sparse Ca (IC)."""

    t: np.ndarray
    pH: np.ndarray
    ca_ise: np.ndarray
    ca_ic: np.ndarray | None = None     # NaN where no IC sample was taken
    experiment_id: int | None = None

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.pH = np.asarray(self.pH, dtype=float)
        self.ca_ise = np.asarray(self.ca_ise, dtype=float)
        if self.ca_ic is not None:
            self.ca_ic = np.asarray(self.ca_ic, dtype=float)
        n = len(self.t)
        if not (len(self.pH) == len(self.ca_ise) == n) \
                or (self.ca_ic is not None and len(self.ca_ic) != n):
            raise ConfigError("trace channels must share one length")
        if n < 2:
            raise ConfigError("trace needs at least 2 samples")
        if np.any(np.diff(self.t) <= 0):
            raise ConfigError("trace times must be strictly increasing")
        if np.any((self.pH < 0) | (self.pH > 14)):
            raise ConfigError("pH outside [0, 14]")
        if np.any(self.ca_ise < 0) or (
                self.ca_ic is not None and np.any(self.ca_ic[np.isfinite(self.ca_ic)] < 0)):
            raise ConfigError("concentrations must be nonnegative")

    @property
    def n_ic_samples(self) -> int:
        return 0 if self.ca_ic is None else int(np.sum(np.isfinite(self.ca_ic)))


def load_trace(path, experiment_id: int | None = None) -> ExperimentTrace:
    """Parse a `t,pH,ca_ise[,ca_ic]` CSV; empty ca_ic cells mark missing IC
    samples. Malformed rows report their line number."""
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except FileNotFoundError:
        raise ConfigError(f"data file not found: {path}",
                          code="DATA_NOT_FOUND") from None
    if not lines:
        raise ConfigError(f"{path}: empty file")
    header = [c.strip() for c in lines[0].split(",")]
    if header not in (["t", "pH", "ca_ise"], ["t", "pH", "ca_ise", "ca_ic"]):
        raise ConfigError(f"{path}:1: expected header t,pH,ca_ise[,ca_ic]")
    has_ic = len(header) == 4
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != len(header):
            raise ConfigError(f"{path}:{lineno}: expected {len(header)} fields")
        try:
            vals = [float(c) if c.strip() else math.nan for c in cells]
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: malformed number") from None
        if any(math.isnan(v) for v in vals[:3]):
            raise ConfigError(f"{path}:{lineno}: t, pH, ca_ise are required")
        rows.append(vals)
    if len(rows) < 2:
        raise ConfigError(f"{path}: needs at least 2 data rows")
    arr = np.asarray(rows, dtype=float)
    return ExperimentTrace(
        t=arr[:, 0], pH=arr[:, 1], ca_ise=arr[:, 2],
        ca_ic=arr[:, 3] if has_ic else None, experiment_id=experiment_id)


def save_trace(trace: ExperimentTrace, path):
    """Inverse of load_trace; round-trips bit-exactly."""
    with open(path, "w") as fh:
        has_ic = trace.ca_ic is not None
        fh.write("t,pH,ca_ise,ca_ic\n" if has_ic else "t,pH,ca_ise\n")
        for k in range(len(trace.t)):
            row = [_FMT % trace.t[k], _FMT % trace.pH[k], _FMT % trace.ca_ise[k]]
            if has_ic:
                v = trace.ca_ic[k]
                row.append("" if math.isnan(v) else _FMT % v)
            fh.write(",".join(row) + "\n")


def derive_uh(trace: ExperimentTrace, smoothing_window: int = 1,
              raw_diff: bool = False) -> np.ndarray:
    """Input signal from measured pH: forward differences, divided by the
    local time step (so the result is a rate), then moving-averaged.

    ``raw_diff`` keeps plain differences without the time-step division (the
    convention of uniformly sampled lab traces). The last value is repeated
    so the signal has one entry per sample time.
    """
    if smoothing_window < 1:
        raise ConfigError("smoothing window must be >= 1")
    d_ph = np.diff(trace.pH)
    if not raw_diff:
        d_ph = d_ph / np.diff(trace.t)
    u_h = np.concatenate([d_ph, d_ph[-1:]])
    if smoothing_window > 1:
        w = smoothing_window
        kernel = np.ones(w) / w
        padded = np.concatenate([np.full(w // 2, u_h[0]), u_h,
                                 np.full(w - 1 - w // 2, u_h[-1])])
        u_h = np.convolve(padded, kernel, mode="valid")
    return u_h


@dataclass
class ResampledTrace:
    """Trace channels interpolated onto a solver grid."""

    t: np.ndarray
    pH: np.ndarray
    ca_ise: np.ndarray
    ca_ic: np.ndarray | None = None
    ic_stale: np.ndarray | None = None   # True where the IC value was carried


def resample(trace: ExperimentTrace, grid: Grid) -> ResampledTrace:
    """Linear interpolation of the dense channels onto the grid times.

    The sparse IC channel is carried nearest-sample with a staleness flag
    marking grid points farther than one median IC spacing from a sample.
    Requesting times outside the measured span is an error.
    """
    t_new = grid.t
    if t_new[0] < trace.t[0] - 1e-12 or t_new[-1] > trace.t[-1] + 1e-12:
        raise ConfigError("grid extends beyond the measured time span")
    ph = np.interp(t_new, trace.t, trace.pH)
    ca = np.interp(t_new, trace.t, trace.ca_ise)
    ca_ic = ic_stale = None
    if trace.ca_ic is not None and trace.n_ic_samples:
        mask = np.isfinite(trace.ca_ic)
        t_ic, v_ic = trace.t[mask], trace.ca_ic[mask]
        idx = np.clip(np.searchsorted(t_ic, t_new), 0, len(t_ic) - 1)
        left = np.clip(idx - 1, 0, len(t_ic) - 1)
        pick_left = np.abs(t_new - t_ic[left]) <= np.abs(t_ic[idx] - t_new)
        nearest = np.where(pick_left, left, idx)
        ca_ic = v_ic[nearest]
        spacing = float(np.median(np.diff(t_ic))) if len(t_ic) > 1 else np.inf
        ic_stale = np.abs(t_new - t_ic[nearest]) > spacing
    return ResampledTrace(t=t_new, pH=ph, ca_ise=ca, ca_ic=ca_ic,
                          ic_stale=ic_stale)


PH_OVERLAY_SCALE = 0.01


def export_plot_data(times, q_mean, q_q05, q_q95, trace: ExperimentTrace | None = None,
                     ph_scale: float = PH_OVERLAY_SCALE) -> str:
    """Tidy CSV for the measurement-vs-simulation overlay figure.

    Columns: time, simulated Q mean with its 5/95 band, and (when a trace is
    given, interpolated to the run times) the measured channels; the pH
    channel is scaled onto the concentration axis.
    """
    times = np.asarray(times, dtype=float)
    cols = ["t", "Q_mean", "Q_q05", "Q_q95"]
    data = [times, np.asarray(q_mean, float), np.asarray(q_q05, float),
            np.asarray(q_q95, float)]
    if trace is not None:
        cols += ["ca_ise", "pH_scaled"]
        data.append(np.interp(times, trace.t, trace.ca_ise))
        data.append(ph_scale * np.interp(times, trace.t, trace.pH))
        if trace.ca_ic is not None and trace.n_ic_samples:
            mask = np.isfinite(trace.ca_ic)
            cols.append("ca_ic")
            ic = np.full(len(times), math.nan)
            for t_s, v_s in zip(trace.t[mask], trace.ca_ic[mask]):
                ic[int(np.argmin(np.abs(times - t_s)))] = v_s
            data.append(ic)
    buf = io.StringIO()
    buf.write(",".join(cols) + "\n")
    for k in range(len(times)):
        cells = ["" if math.isnan(col[k]) else _FMT % col[k] for col in data]
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()
