"""Deterministic synthesis of the accelerometer-style series.

The measured signal is a nonlinearly damped oscillator trajectory plus a
smooth local effect drawn from a GP prior plus white noise. Randomness is
split into independent substreams (local effect, noise, train/test shuffle)
derived from the master seed, in that documented order.
"""

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from ..gp import SEKernelParams, gp_sample_prior
from ..ode import IntegratorConfig, Trajectory, integrate, sample_on_grid, vf_van_der_pol
from ..rng import Generator, derive_seeds


@dataclass(frozen=True)
class AcceleroConfig:
    seed: int = 0
    mu: float = 5.0
    t_span: tuple = (0.0, 50.0)
    grid_dt: float = 0.1
    gp_variance: float = 0.2
    gp_lengthscale: float = 0.5
    noise_var: float = 0.05
    blackout: tuple = (5.0, 15.0)
    test_fraction: float = 0.3
    rel_tol: float = 1e-8
    abs_tol: float = 1e-8

    def __post_init__(self):
        if self.mu < 0:
            raise ConfigError("mu must be nonnegative")
        if len(self.t_span) != 2 or self.t_span[1] <= self.t_span[0]:
            raise ConfigError("t_span must be (start, end) with end > start")
        if self.grid_dt <= 0:
            raise ConfigError("grid_dt must be positive")
        if self.gp_variance <= 0 or self.gp_lengthscale <= 0:
            raise ConfigError("gp_variance and gp_lengthscale must be positive")
        if self.noise_var < 0:
            raise ConfigError("noise_var must be nonnegative")
        if len(self.blackout) != 2 or not (
            self.t_span[0] <= self.blackout[0] < self.blackout[1] <= self.t_span[1]
        ):
            raise ConfigError("blackout must lie within t_span")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError("test_fraction must lie in (0, 1)")
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ConfigError("integrator tolerances must be positive")


@dataclass(frozen=True)
class SynthAccelerometer:
    grid: np.ndarray
    y: np.ndarray
    u_vdp: np.ndarray
    u_loc: np.ndarray
    noise: np.ndarray
    train_idx: np.ndarray
    test_idx: np.ndarray
    blackout_mask: np.ndarray
    trajectory: Trajectory


def synth_accelerometer(cfg: AcceleroConfig) -> SynthAccelerometer:
    """Generate the series and the blackout-aware train/test split.

    All points inside the (closed) blackout window are test points; the rest
    are shuffled with the seeded stream and ``test_fraction`` of them held
    out.
    """
    t0, t1 = cfg.t_span
    n = int(round((t1 - t0) / cfg.grid_dt)) + 1
    grid = t0 + cfg.grid_dt * np.arange(n)

    traj = integrate(
        vf_van_der_pol(cfg.mu),
        np.array([1.0, 0.0]),
        t0,
        t1,
        IntegratorConfig("dp54", step=0.01, rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol),
    )
    u_vdp = sample_on_grid(traj, grid).states[:, 0]

    seed_loc, seed_noise, seed_split = derive_seeds(cfg.seed, 3)
    u_loc = gp_sample_prior(
        SEKernelParams(cfg.gp_variance, cfg.gp_lengthscale), grid, seed_loc
    )
    noise = math.sqrt(cfg.noise_var) * Generator(seed_noise).normals(n)
    y = u_vdp + u_loc + noise

    blackout_mask = (grid >= cfg.blackout[0]) & (grid <= cfg.blackout[1])
    outside = np.flatnonzero(~blackout_mask)
    perm = Generator(seed_split).shuffled_indices(outside.size)
    n_test = int(round(cfg.test_fraction * outside.size))
    test_outside = outside[perm[:n_test]]
    train_idx = np.sort(outside[perm[n_test:]])
    test_idx = np.sort(np.concatenate([np.flatnonzero(blackout_mask), test_outside]))

    return SynthAccelerometer(
        grid=grid,
        y=y,
        u_vdp=u_vdp,
        u_loc=u_loc,
        noise=noise,
        train_idx=train_idx,
        test_idx=test_idx,
        blackout_mask=blackout_mask,
        trajectory=traj,
    )
