"""Stitch generator outputs over a full trace and emit control CSVs.

The emitted schema `t,U_H,U_r,dosing` is the simulator CLI's control-signal
input format, so exported files load unchanged through its import path.
"""

from __future__ import annotations

import numpy as np
import torch

from .models import WINDOW


def _model_windows(model, arch, wins, mean, std):
    """Run the generator on raw (n, 2, 64) windows, returning (n, 2, 64)."""
    x = torch.as_tensor(wins, dtype=torch.float32)
    x = (x - torch.as_tensor(mean, dtype=torch.float32)[None, :, None]) \
        / torch.as_tensor(std, dtype=torch.float32)[None, :, None]
    with torch.no_grad():
        if arch == "gru":
            out = model(x.transpose(1, 2)).transpose(1, 2)
        else:
            out = model(x)
    return out.double().numpy()


def stitch_controls(model, u_h: np.ndarray, q: np.ndarray, mean, std,
                    mode: str = "rolling", arch: str = "ann"):
    """Generated (U_H^, U_r^) over the full trace.

    rolling: stride-1 windows, overlapping outputs averaged per sample;
    batched: disjoint windows concatenated (the trace length must be a
    multiple of 64 in batched mode). A trace of exactly one window needs no
    stitching in either mode.
    """
    u_h = np.asarray(u_h, dtype=float)
    q = np.asarray(q, dtype=float)
    n = len(u_h)
    if n < WINDOW:
        raise ValueError(f"trace shorter than one window ({WINDOW})")
    if mode == "batched":
        if n % WINDOW:
            raise ValueError("batched mode needs a multiple of 64 samples")
        starts = range(0, n, WINDOW)
    elif mode == "rolling":
        starts = range(0, n - WINDOW + 1)
    else:
        raise ValueError("mode must be rolling or batched")
    wins = np.stack([np.stack([u_h[s:s + WINDOW], q[s:s + WINDOW]])
                     for s in starts])
    out = _model_windows(model, arch, wins, mean, std)
    acc = np.zeros((2, n))
    cnt = np.zeros(n)
    for w, s in zip(out, starts):
        acc[:, s:s + WINDOW] += w
        cnt[s:s + WINDOW] += 1
    stitched = acc / cnt
    u_h_hat = stitched[0]
    u_r_hat = stitched[0] * stitched[1]
    return u_h_hat, u_r_hat


def write_control_csv(path, t, u_h, u_r, dosing=None):
    """Emit `t,U_H,U_r,dosing` rows at 17 significant digits."""
    t = np.asarray(t, dtype=float)
    dosing = np.zeros(len(t), dtype=int) if dosing is None \
        else np.asarray(dosing).astype(int)
    with open(path, "w") as fh:
        fh.write("t,U_H,U_r,dosing\n")
        for k in range(len(t)):
            fh.write(f"{t[k]:.17g},{u_h[k]:.17g},{u_r[k]:.17g},{dosing[k]}\n")


def export_ur(model, t, u_h, q, mean, std, path, mode: str = "rolling",
              arch: str = "ann", use_generated_uh: bool = False):
    """Stitch the generated controls over (t, U_H, Q) and write the CSV.

    By default the measured U_H is written alongside the generated U_r (the
    simulator drives pH with the measured input); ``use_generated_uh``
    exports the generator's own U_H channel instead.
    """
    u_h_hat, u_r_hat = stitch_controls(model, u_h, q, mean, std,
                                       mode=mode, arch=arch)
    out_uh = u_h_hat if use_generated_uh else np.asarray(u_h, dtype=float)
    write_control_csv(path, t, out_uh, u_r_hat)
    return u_h_hat, u_r_hat
