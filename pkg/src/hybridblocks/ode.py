"""Vector fields and integrators that turn ODE models into evaluable blocks.

Fixed-step classical Runge-Kutta, the adaptive Dormand-Prince 5(4) embedded
pair, and a damped fixed-point backward Euler are provided. Integration
records state derivatives alongside states so trajectories support cubic
Hermite resampling onto arbitrary grids.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import NumericalError
from .graph import Block

METHODS = ("rk4", "dp54", "backward-euler")


@dataclass(frozen=True)
class VectorField:
    """State derivative map f(u, t, params) with declared state dimension.

    ``linear_matrix`` is set for fields of the form f(u) = A u; implicit
    steppers then solve their update equations directly.
    """

    dim: int
    params: np.ndarray
    f: Callable
    name: str = "field"
    linear_matrix: Optional[np.ndarray] = None

    def __call__(self, u, t):
        return np.asarray(self.f(np.asarray(u, dtype=float), float(t), self.params), dtype=float)


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "dp54"
    step: float = 0.01
    rel_tol: float = 1e-8
    abs_tol: float = 1e-8
    max_steps: int = 1_000_000

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.step <= 0:
            raise ValueError("step must be positive")
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")


@dataclass(frozen=True)
class Trajectory:
    """Integration output: strictly increasing times with one state per time.

    ``derivs`` holds the vector field evaluated at each stored state, which
    the Hermite resampler needs.
    """

    times: np.ndarray
    states: np.ndarray
    derivs: Optional[np.ndarray] = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states, dtype=float)
        if states.ndim == 1:
            states = states[:, None]
        if times.shape[0] != states.shape[0]:
            raise ValueError("times and states lengths disagree")
        if times.shape[0] > 1 and not np.all(np.diff(times) > 0):
            raise ValueError("trajectory times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)
        if self.derivs is not None:
            derivs = np.asarray(self.derivs, dtype=float)
            if derivs.shape != states.shape:
                raise ValueError("derivs shape must match states")
            object.__setattr__(self, "derivs", derivs)

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def __len__(self) -> int:
        return self.times.shape[0]


# ---------------------------------------------------------------------------
# the standard fields
# ---------------------------------------------------------------------------

def vf_harmonic() -> VectorField:
    """Undamped unit oscillator in state-space form (s, v) -> (v, -s)."""
    def f(u, t, p):
        return np.array([u[1], -u[0]])

    return VectorField(2, np.zeros(0), f, name="harmonic")


def vf_van_der_pol(mu: float) -> VectorField:
    """Oscillator with nonlinear damping mu; mu = 0 degenerates to harmonic."""
    if mu < 0:
        raise ValueError(f"damping parameter must be nonnegative, got {mu}")

    def f(u, t, p):
        return np.array([u[1], -u[0] + p[0] * u[1] * (1.0 - u[0] ** 2)])

    return VectorField(2, np.array([float(mu)]), f, name=f"van_der_pol(mu={mu})")


def vf_lotka_volterra(alpha: float, beta: float, gamma: float, delta: float) -> VectorField:
    """Two-species predator-prey dynamics; all rates must be positive."""
    for label, v in (("alpha", alpha), ("beta", beta), ("gamma", gamma), ("delta", delta)):
        if v <= 0:
            raise ValueError(f"{label} must be positive, got {v}")

    def f(u, t, p):
        a, b, g, d = p
        return np.array([a * u[0] - b * u[0] * u[1], d * u[0] * u[1] - g * u[1]])

    return VectorField(
        2, np.array([alpha, beta, gamma, delta], dtype=float), f, name="lotka_volterra"
    )


def vf_linear(A) -> VectorField:
    """Linear system u' = A u."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"A must be square, got shape {A.shape}")

    def f(u, t, p):
        return A @ u

    return VectorField(A.shape[0], np.zeros(0), f, name="linear", linear_matrix=A.copy())


# ---------------------------------------------------------------------------
# Dormand-Prince 5(4) embedded pair
# ---------------------------------------------------------------------------

_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# fifth-minus-fourth-order weights for the local error estimate
_DP_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)


def _dp54_stages(vf: VectorField, u, t, h):
    """One DP54 step: returns (u_next, error_vector, k7). k7 is f at (t+h, u_next)."""
    k = np.empty((7, vf.dim))
    k[0] = vf(u, t)
    for i in range(1, 7):
        ui = u + h * (_DP_A[i] @ k[:i])
        if not np.all(np.isfinite(ui)):
            raise NumericalError(f"non-finite stage {i} in DP54 step at t={t}")
        k[i] = vf(ui, t + _DP_C[i] * h)
    if not np.all(np.isfinite(k)):
        raise NumericalError(f"non-finite stage derivative in DP54 step at t={t}")
    u_next = u + h * (_DP_B5 @ k)
    err_vec = h * (_DP_E @ k)
    return u_next, err_vec, k[6]


def dp54_step(vf: VectorField, u, t: float, h: float):
    """Single embedded step; returns (u_next, scalar error estimate)."""
    if h <= 0:
        raise ValueError("step size must be positive")
    u = np.asarray(u, dtype=float)
    u_next, err_vec, _ = _dp54_stages(vf, u, t, h)
    return u_next, float(np.linalg.norm(err_vec))


def _rk4_step(vf: VectorField, u, t, h):
    k1 = vf(u, t)
    k2 = vf(u + 0.5 * h * k1, t + 0.5 * h)
    k3 = vf(u + 0.5 * h * k2, t + 0.5 * h)
    k4 = vf(u + h * k3, t + h)
    return u + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def backward_euler_step(
    vf: VectorField, u, t: float, h: float, inner_tol: float = 1e-10, inner_max: int = 100
):
    """Implicit Euler update solving u+ = u + h f(u+, t+h).

    Linear fields are solved directly; otherwise a fixed-point iteration with
    adaptive damping runs until the residual drops below ``inner_tol``.
    """
    if h <= 0:
        raise ValueError("step size must be positive")
    u = np.asarray(u, dtype=float)
    if vf.linear_matrix is not None:
        A = vf.linear_matrix
        return np.linalg.solve(np.eye(vf.dim) - h * A, u)

    t_next = t + h
    cur = u + h * vf(u, t_next)  # explicit predictor
    omega = 1.0
    prev_res = math.inf
    for _ in range(inner_max):
        g = u + h * vf(cur, t_next)
        res = float(np.linalg.norm(g - cur))
        if res <= inner_tol:
            return g
        if res >= prev_res:  # not contracting at this damping; damp harder
            omega *= 0.5
        prev_res = res
        cur = cur + omega * (g - cur)
    raise NumericalError(
        f"backward Euler inner iteration did not converge at t={t} (residual {prev_res:.3e})"
    )


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------

def integrate(vf: VectorField, u0, t0: float, t1: float, cfg: IntegratorConfig) -> Trajectory:
    """Integrate the field from (t0, u0) to t1 per the config.

    Adaptive DP54 accepts a step when the weighted RMS of the embedded error
    estimate (weights abs_tol + rel_tol*|u| per component) is at most 1, and
    adjusts step size with a PI controller (safety 0.9, growth clamped to
    [0.2, 5]). Fixed-step methods truncate the final step to land on t1.

    Raises NumericalError when the step budget is exhausted or the state
    leaves the finite range.
    """
    u0 = np.atleast_1d(np.asarray(u0, dtype=float))
    if t1 <= t0:
        raise ValueError(f"need t1 > t0, got [{t0}, {t1}]")
    if u0.shape != (vf.dim,):
        raise ValueError(f"u0 shape {u0.shape} does not match field dim {vf.dim}")

    times = [float(t0)]
    states = [u0]
    derivs = [vf(u0, t0)]

    if cfg.method == "dp54":
        t, u = float(t0), u0
        h = min(cfg.step, t1 - t0)
        err_prev = 1.0
        n_attempts = 0
        while t < t1:
            h = min(h, t1 - t)
            n_attempts += 1
            if n_attempts > cfg.max_steps:
                raise NumericalError(f"max_steps exceeded; integration reached t={t}")
            u_next, err_vec, k_end = _dp54_stages(vf, u, t, h)
            if not np.all(np.isfinite(u_next)):
                raise NumericalError(f"non-finite state at t={t + h}")
            w = cfg.abs_tol + cfg.rel_tol * np.abs(u)
            err_norm = float(np.sqrt(np.mean((err_vec / w) ** 2)))
            if err_norm <= 1.0:
                t += h
                u = u_next
                times.append(t)
                states.append(u)
                derivs.append(k_end)
                if err_norm < 1e-12:
                    factor = 5.0
                else:
                    factor = 0.9 * err_norm ** (-0.7 / 5) * err_prev ** (0.4 / 5)
                err_prev = err_norm
                h = h * min(5.0, max(0.2, factor))
            else:
                h = h * min(1.0, max(0.2, 0.9 * err_norm ** (-1.0 / 5)))
    else:
        span = t1 - t0
        n_steps = max(1, math.ceil(span / cfg.step - 1e-12))
        if n_steps > cfg.max_steps:
            raise NumericalError(f"max_steps exceeded; integration reached t={t0}")
        u = u0
        for k in range(n_steps):
            t = t0 + k * (span / n_steps)
            h = span / n_steps
            if cfg.method == "rk4":
                u = _rk4_step(vf, u, t, h)
            else:
                u = backward_euler_step(vf, u, t, h, inner_tol=cfg.abs_tol)
            if not np.all(np.isfinite(u)):
                raise NumericalError(f"non-finite state at t={t + h}")
            times.append(t + h)
            states.append(u)
            derivs.append(vf(u, t + h))

    return Trajectory(np.array(times), np.array(states), np.array(derivs))


# ---------------------------------------------------------------------------
# dense output
# ---------------------------------------------------------------------------

def hermite_eval(traj: Trajectory, t: float) -> np.ndarray:
    """Cubic Hermite interpolation of the trajectory at one time."""
    if traj.derivs is None:
        raise ValueError("trajectory carries no derivatives; integrate() provides them")
    times = traj.times
    if t < times[0] or t > times[-1]:
        raise ValueError(f"time {t} outside trajectory range [{times[0]}, {times[-1]}]")
    i = int(np.searchsorted(times, t, side="right") - 1)
    if i >= len(times) - 1:
        return traj.states[-1].copy()
    h = times[i + 1] - times[i]
    s = (t - times[i]) / h
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return (
        h00 * traj.states[i]
        + h10 * h * traj.derivs[i]
        + h01 * traj.states[i + 1]
        + h11 * h * traj.derivs[i + 1]
    )


def sample_on_grid(traj: Trajectory, grid) -> Trajectory:
    """Resample a trajectory onto the given times (must lie within its range)."""
    grid = np.asarray(grid, dtype=float)
    if grid.size and (grid[0] < traj.times[0] or grid[-1] > traj.times[-1]):
        raise ValueError(
            f"grid [{grid[0]}, {grid[-1]}] outside trajectory range "
            f"[{traj.times[0]}, {traj.times[-1]}]"
        )
    states = np.array([hermite_eval(traj, t) for t in grid])
    return Trajectory(grid, states)


def trajectory_block(traj: Trajectory, component: int = 0, name: str = "trajectory") -> Block:
    """Block mapping a scalar time to one interpolated state component."""
    return Block(
        name, (1,), 1, lambda t: np.array([hermite_eval(traj, float(t[0]))[component]])
    )


def trajectory_csv(traj: Trajectory) -> str:
    """Render as CSV: header t,u1,...,un then one row per sample, 17 digits."""
    header = "t," + ",".join(f"u{k + 1}" for k in range(traj.dim))
    rows = [header]
    for t, u in zip(traj.times, traj.states):
        rows.append(",".join(format(v, ".17g") for v in (t, *u)))
    return "\n".join(rows) + "\n"
