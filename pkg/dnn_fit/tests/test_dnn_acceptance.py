"""Acceptance checks for the neural control-generator package.

Each test prints one [PASS]/[FAIL] line with the measured quantity before
asserting, so the criteria can be audited from the test log.
"""

import subprocess
import sys
import time

import numpy as np
import torch

from dnn_fit.data import WindowDataset
from dnn_fit.export import export_ur
from dnn_fit.models import build_ann, build_gru, trainable_parameters
from dnn_fit.physics import KineticParams, rollout
from dnn_fit.train import TrainConfig, train

TAU = 0.05


def report(name, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def synthetic_set(n_windows, seed, params):
    """Independent 64-sample windows driven by a known modulation law.

    The input signal is a random two-tone sine; the ground-truth modulation
    is the clamped-gain law the training loss supervises against; the solids
    measurement comes from the zero-noise kinetics with a randomized start.
    """
    rng = np.random.default_rng(seed)
    t = TAU * np.arange(64)
    u_h = np.zeros((n_windows, 64))
    for _ in range(2):
        a = rng.uniform(0.1, 0.4, (n_windows, 1))
        w = rng.uniform(0.3, 2.0, (n_windows, 1))
        ph = rng.uniform(0.0, 2.0 * np.pi, (n_windows, 1))
        u_h += a * np.sin(w * t + ph)
    u_r = np.clip(0.19 * u_h, -0.09, 0.09)
    q0 = torch.as_tensor(rng.uniform(0.6, 1.2, n_windows))
    traj = rollout(torch.as_tensor(u_h[:, :-1]), torch.as_tensor(u_r[:, :-1]),
                   params, TAU, q0=q0)
    return u_h, u_r, traj["Q"].numpy()


def generated_ur(model, dataset, windows):
    """Run the generator on raw windows using the dataset's statistics."""
    x = torch.as_tensor(windows, dtype=torch.float32)
    mean = torch.as_tensor(dataset.mean, dtype=torch.float32)[None, :, None]
    std = torch.as_tensor(dataset.std, dtype=torch.float32)[None, :, None]
    with torch.no_grad():
        out = model((x - mean) / std).double().numpy()
    return out[:, 0] * out[:, 1]


class TestArchitectureFidelity:
    def test_parameter_counts_and_shapes(self):
        ann, gru = build_ann(), build_gru()
        n_ann = trainable_parameters(ann)
        n_gru = trainable_parameters(gru)
        pre = tuple(ann.pre_reshape(torch.zeros(32, 2, 64)).shape)
        out_ann = tuple(ann(torch.zeros(32, 2, 64)).shape)
        out_gru = tuple(gru(torch.zeros(32, 64, 2)).shape)
        ctx = tuple(gru.context.shape)
        ok = (n_ann == 49536 and n_gru == 44674
              and pre == (32, 128) and out_ann == (32, 2, 64)
              and out_gru == (32, 64, 2) and ctx == (6, 32, 32))
        report("architecture-fidelity", ok,
               f"ANN params {n_ann} (want 49536), GRU params {n_gru} "
               f"(want 44674), pre-reshape {pre}, ANN out {out_ann}, "
               f"GRU out {out_gru}, context {ctx}")


class TestInverseCrimeRecovery:
    def test_heldout_relative_error(self):
        params = KineticParams(rho=0.0)
        u_h, u_r, q = synthetic_set(1024, seed=0, params=params)
        dataset = WindowDataset(u_h, q, mode="batched")
        config = TrainConfig(params=params)
        assert (config.epochs, config.batch, config.lr) == (500, 128, 0.001)
        assert config.weights == (1.0, 1.0, 10.0, 1e6)

        t0 = time.time()
        model, hist = train(dataset, config)
        elapsed = time.time() - t0

        uh_test, ur_test, q_test = synthetic_set(64, seed=99, params=params)
        test_windows = np.stack([uh_test, q_test], axis=1)
        ur_hat = generated_ur(model, dataset, test_windows)
        rel = np.linalg.norm(ur_hat - ur_test) / np.linalg.norm(ur_test)
        reduction = hist["train"][0] / hist["train"][-1]

        ok = rel < 0.15 and elapsed < 900.0 and reduction >= 10.0
        report("dnn-inverse-crime", ok,
               f"held-out rel L2 {rel:.3f} (< 0.15), train loss "
               f"{hist['train'][0]:.3g} -> {hist['train'][-1]:.3g} "
               f"({reduction:.0f}x, >= 10x), {elapsed:.0f}s (< 900s)")


class TestCrossComponentContract:
    def test_exported_ur_drives_identical_simulation(self, tmp_path):
        # 64-step fixture at zero noise with deterministic kinetics
        n_steps = 64
        t = TAU * np.arange(n_steps + 1)
        u_h = 0.3 * np.sin(0.6 * t) + 0.1 * np.cos(1.7 * t)
        q_meas = np.linspace(1.0, 0.9, n_steps + 1)

        torch.manual_seed(0)
        model = build_ann()
        csv_path = tmp_path / "fitted_ur.csv"
        export_ur(model, t, u_h, q_meas, np.zeros(2), np.ones(2),
                  str(csv_path), mode="rolling")

        config = tmp_path / "run.cfg"
        config.write_text(
            "sigma_H = 0\nsigma_Q = 0\nsigma_C = 0\n"
            "K_sp = 0.02\nQ0 = 1.0\nrho = 0\n"
            f"tau = {TAU}\nt_end = {TAU * n_steps}\nn_x = 16\n")
        out = tmp_path / "run_out"
        proc = subprocess.run(
            [sys.executable, "-m", "phswing.cli", "import-ur",
             "--config", str(config), "--data", str(csv_path),
             "--out", str(out)],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr

        traj = np.genfromtxt(out / "trajectory_path0.csv", delimiter=",",
                             names=True)
        assert len(traj) == n_steps + 1

        ctrl = np.genfromtxt(csv_path, delimiter=",", names=True)
        params = KineticParams(K_sp=0.02, Q0=1.0, rho=0.0)
        ref = rollout(torch.as_tensor(ctrl["U_H"][:-1]),
                      torch.as_tensor(ctrl["U_r"][:-1]), params, TAU)
        dh = np.max(np.abs(traj["H"] - ref["H"].numpy()))
        dq = np.max(np.abs(traj["Q"] - ref["Q"].numpy()))
        ok = dh <= 1e-10 and dq <= 1e-10
        report("cross-component-contract", ok,
               f"max |dH| {dh:.3g}, max |dQ| {dq:.3g} over {n_steps} steps "
               f"(<= 1e-10)")
