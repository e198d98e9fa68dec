"""Closed-form reference solutions used exclusively for verification.

Everything here is independent of the solver code path: time integrals are
plain trapezoid sums on the run grid, the transport solution is evaluated by
shifting the initial density, and the linear-SDE propagators are evaluated
pathwise from raw Brownian increments.
"""

from __future__ import annotations

import math

import numpy as np


def cumtrapz(y: np.ndarray, dt: float) -> np.ndarray:
    """Cumulative trapezoid integral on a uniform grid, starting at 0."""
    y = np.asarray(y, dtype=float)
    out = np.empty_like(y)
    out[0] = 0.0
    np.cumsum(0.5 * (y[1:] + y[:-1]) * dt, out=out[1:])
    return out


# -- transport equation ----------------------------------------------------

def semigroup_psd(f0, a_path, n_path, t_grid, x, j=None):
    """Exact solution F(t_j, x) = exp(int N) * F0(x - int a) of the isolated
    transport equation; values with shifted argument left of the domain are 0.

    ``f0`` is a callable; ``a_path``/``n_path`` are sampled on ``t_grid``.
    ``j`` indexes the evaluation time (default: end of grid).
    """
    t_grid = np.asarray(t_grid, dtype=float)
    dt = t_grid[1] - t_grid[0]
    if j is None:
        j = len(t_grid) - 1
    shift = cumtrapz(a_path, dt)[j]
    amp = math.exp(cumtrapz(n_path, dt)[j])
    x = np.asarray(x, dtype=float)
    arg = x - shift
    return np.where(arg >= np.min(x), amp * f0(arg), 0.0)


def closed_form_moments(upsilon0, a_path, n_path, t_grid) -> np.ndarray:
    """Moment of order n = len(upsilon0) - 1 along the whole grid.

    Uses the recursion A_0 = 1, A_k(t) = int_0^t a A_{k-1}; the moment is
    exp(int N) * sum_k n!/k! * upsilon0[k] * A_{n-k}(t).
    """
    t_grid = np.asarray(t_grid, dtype=float)
    dt = t_grid[1] - t_grid[0]
    a_path = np.asarray(a_path, dtype=float)
    n = len(upsilon0) - 1
    a_k = [np.ones_like(t_grid)]
    for _ in range(n):
        a_k.append(cumtrapz(a_path * a_k[-1], dt))
    env = np.exp(cumtrapz(n_path, dt))
    total = np.zeros_like(t_grid)
    for k in range(n + 1):
        total += math.factorial(n) / math.factorial(k) * upsilon0[k] * a_k[n - k]
    return env * total


def moment_recursion_rhs(upsilons, a_val, n_val):
    """ODE right-hand side d/dt Y^n = n a Y^{n-1} + N Y^n for n = 0..len-1."""
    ups = np.asarray(upsilons, dtype=float)
    out = n_val * ups
    out[1:] += np.arange(1, len(ups)) * a_val * ups[:-1]
    return out


# -- linear multiplicative-noise propagators -------------------------------

def gbm_propagator(theta_path, sigma_path, t_grid, dw=None, j0: int = 0,
                   j1: int | None = None):
    """Pathwise propagator exp(-int(theta + sigma^2/2)) * exp(int sigma dW)
    between grid indices j0 and j1.

    ``dw`` holds Brownian increments per step (length n_t, or (n_t, n_paths));
    omit it for the noise-free propagator. The stochastic integral is the
    left-point Ito sum, matching Euler-Maruyama's increments.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    dt = t_grid[1] - t_grid[0]
    if j1 is None:
        j1 = len(t_grid) - 1
    theta = np.broadcast_to(np.asarray(theta_path, dtype=float), t_grid.shape)
    sigma = np.broadcast_to(np.asarray(sigma_path, dtype=float), t_grid.shape)
    det = cumtrapz(theta + 0.5 * sigma ** 2, dt)
    log_psi = -(det[j1] - det[j0])
    if dw is not None:
        dw = np.asarray(dw, dtype=float)
        sig = sigma[j0:j1] if dw.ndim == 1 else sigma[j0:j1, None]
        log_psi = log_psi + np.sum(sig * dw[j0:j1], axis=0)
    return np.exp(log_psi)


def gbm_mean(theta_path, t_grid, j0: int = 0, j1: int | None = None) -> float:
    """E[Psi] = exp(-int theta)."""
    t_grid = np.asarray(t_grid, dtype=float)
    dt = t_grid[1] - t_grid[0]
    if j1 is None:
        j1 = len(t_grid) - 1
    det = cumtrapz(np.broadcast_to(np.asarray(theta_path, float), t_grid.shape), dt)
    return math.exp(-(det[j1] - det[j0]))


def gbm_moment_2p(theta_path, sigma_path, t_grid, p: int = 1, j0: int = 0,
                  j1: int | None = None) -> float:
    """E[Psi^(2p)] = exp(int p(2p-1) sigma^2 - 2p theta)."""
    t_grid = np.asarray(t_grid, dtype=float)
    dt = t_grid[1] - t_grid[0]
    if j1 is None:
        j1 = len(t_grid) - 1
    theta = np.broadcast_to(np.asarray(theta_path, float), t_grid.shape)
    sigma = np.broadcast_to(np.asarray(sigma_path, float), t_grid.shape)
    integ = cumtrapz(p * (2 * p - 1) * sigma ** 2 - 2 * p * theta, dt)
    return math.exp(integ[j1] - integ[j0])


def analytic_h(h0, u_h_path, sigma_h, t_grid, dw=None, k_h: float = 1.0):
    """Duhamel solution H_t = Psi_{0,t} H_0 + int_0^t Psi_{s,t} k_H U_H ds.

    Returns the value at the end of the grid. Uses Psi_{s,t} =
    Psi_{0,t} / Psi_{0,s} with the same increment convention as the EM run.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    dt = t_grid[1] - t_grid[0]
    n = len(t_grid)
    sigma = np.broadcast_to(np.asarray(sigma_h, float), t_grid.shape)
    u_h = np.broadcast_to(np.asarray(u_h_path, float), t_grid.shape)
    det = cumtrapz(0.5 * sigma ** 2, dt)
    if dw is None:
        stoch = np.zeros(n)
    else:
        dw = np.asarray(dw, dtype=float)
        stoch = np.concatenate([[0.0], np.cumsum(sigma[:-1] * dw)])
    log_psi_0s = -det + stoch          # log Psi_{0,s} along the grid
    psi_0t = np.exp(log_psi_0s[-1])
    # trapezoid over s of Psi_{s,t} U_H(s) = Psi_{0,t} / Psi_{0,s} * U_H(s)
    integrand = np.exp(log_psi_0s[-1] - log_psi_0s) * k_h * u_h
    duhamel = np.trapezoid(integrand, dx=dt)
    return psi_0t * h0 + duhamel


# -- Euler-Maruyama convergence study on the exact GBM test problem --------

def em_gbm_orders(x0: float, theta: float, sigma: float, t_end: float,
                  n_paths: int, seed: int, n_steps_list=(32, 64, 128, 256)):
    """Measured strong/weak convergence orders of EM against the exact
    propagator on shared Brownian paths.

    Weak error uses the exact samples as a control variate so the Monte Carlo
    noise of the difference is tiny. Returns (strong_order, weak_order,
    strong_errors, weak_errors).
    """
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    strong, weak = [], []
    for n_steps in n_steps_list:
        tau = t_end / n_steps
        dw = np.sqrt(tau) * rng.standard_normal((n_steps, n_paths))
        x = np.full(n_paths, float(x0))
        for j in range(n_steps):
            x = x - theta * x * tau + sigma * x * dw[j]
        w_t = dw.sum(axis=0)
        exact = x0 * np.exp(-(theta + 0.5 * sigma ** 2) * t_end + sigma * w_t)
        strong.append(float(np.mean(np.abs(x - exact))))
        weak.append(abs(float(np.mean(x) - np.mean(exact))))
    log_n = np.log(np.asarray(n_steps_list, dtype=float))
    strong_order = float(-np.polyfit(log_n, np.log(strong), 1)[0])
    weak_order = float(-np.polyfit(log_n, np.log(weak), 1)[0])
    return strong_order, weak_order, strong, weak
