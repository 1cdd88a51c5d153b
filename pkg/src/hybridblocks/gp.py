"""Exact Gaussian-process regression with a squared-exponential kernel.

Zero prior mean throughout; predictions far from the data revert to mean 0
and variance equal to the signal variance. Fitting factorizes K + noise*I
once (Cholesky, with an escalating-jitter safeguard) and caches the factor
plus the solved weight vector.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.optimize import minimize

from .errors import NumericalError
from .graph import Block
from .rng import Generator


@dataclass(frozen=True)
class SEKernelParams:
    """Signal variance (squared output units) and lengthscale (input units)."""

    variance: float
    lengthscale: float

    def __post_init__(self):
        if self.variance <= 0 or self.lengthscale <= 0:
            raise ValueError(
                f"variance and lengthscale must be positive, got "
                f"({self.variance}, {self.lengthscale})"
            )


def _as_2d(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return X


def se_kernel(x, x_other, p: SEKernelParams) -> float:
    """Covariance between two input points."""
    dx = np.atleast_1d(np.asarray(x, dtype=float)) - np.atleast_1d(
        np.asarray(x_other, dtype=float)
    )
    return p.variance * math.exp(-float(dx @ dx) / (2.0 * p.lengthscale ** 2))


def _kernel_matrix(X, Z, p: SEKernelParams) -> np.ndarray:
    X, Z = _as_2d(X), _as_2d(Z)
    sq = (
        np.sum(X ** 2, axis=1)[:, None]
        + np.sum(Z ** 2, axis=1)[None, :]
        - 2.0 * X @ Z.T
    )
    np.maximum(sq, 0.0, out=sq)
    return p.variance * np.exp(-sq / (2.0 * p.lengthscale ** 2))


def _chol_with_jitter(K: np.ndarray):
    """Cholesky with the jitter ladder 0, 1e-10*tr/n, x10 ... 1e-4*tr/n."""
    n = K.shape[0]
    scale = np.trace(K) / n
    jitters = [0.0] + [1e-10 * scale * 10 ** k for k in range(7)]  # up to 1e-4*tr/n
    for jitter in jitters:
        try:
            L = np.linalg.cholesky(K + jitter * np.eye(n))
            return L, jitter
        except np.linalg.LinAlgError:
            continue
    raise NumericalError(
        f"kernel matrix not positive definite after final jitter {jitters[-1]:.3e}"
    )


@dataclass(frozen=True)
class GPRegressor:
    X: np.ndarray
    y: np.ndarray
    params: SEKernelParams
    noise_var: float
    chol: np.ndarray
    alpha: np.ndarray
    jitter: float = 0.0


@dataclass(frozen=True)
class GPPrediction:
    mean: np.ndarray
    variance: np.ndarray


def gp_fit(X, y, p: SEKernelParams, noise_var: float) -> GPRegressor:
    """Condition the zero-mean GP on (X, y) with observation noise noise_var.

    X is (n, d) or (n,); duplicate rows require noise_var > 0, otherwise the
    kernel matrix is singular by construction.
    """
    X = _as_2d(X)
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]} entries")
    if X.shape[0] < 1:
        raise ValueError("need at least one training point")
    if noise_var < 0:
        raise ValueError("noise variance must be nonnegative")
    if noise_var == 0.0:
        _, counts = np.unique(X, axis=0, return_counts=True)
        if np.any(counts > 1):
            raise ValueError("duplicate training inputs need noise_var > 0")
    K = _kernel_matrix(X, X, p) + noise_var * np.eye(X.shape[0])
    L, jitter = _chol_with_jitter(K)
    alpha = cho_solve((L, True), y)
    return GPRegressor(X, y, p, float(noise_var), L, alpha, jitter)


def gp_predict(reg: GPRegressor, Xs) -> GPPrediction:
    """Posterior mean and (noise-free) per-point variance at new inputs."""
    Xs = _as_2d(Xs)
    if Xs.shape[1] != reg.X.shape[1]:
        raise ValueError(
            f"query dim {Xs.shape[1]} does not match training dim {reg.X.shape[1]}"
        )
    Ks = _kernel_matrix(reg.X, Xs, reg.params)
    mean = Ks.T @ reg.alpha
    V = solve_triangular(reg.chol, Ks, lower=True)
    var = reg.params.variance - np.sum(V ** 2, axis=0)
    return GPPrediction(mean, np.maximum(var, 0.0))


def log_marginal_likelihood(reg: GPRegressor) -> float:
    n = reg.y.shape[0]
    return float(
        -0.5 * reg.y @ reg.alpha
        - np.sum(np.log(np.diag(reg.chol)))
        - 0.5 * n * math.log(2.0 * math.pi)
    )


@dataclass(frozen=True)
class FittedHyperparams:
    params: SEKernelParams
    noise_var: float
    log_marginal_likelihood: float


def fit_hyperparams(
    X,
    y,
    init: Optional[SEKernelParams] = None,
    init_noise_var: Optional[float] = None,
    bounds=((1e-8, 1e4), (1e-4, 1e4), (1e-10, 1e4)),
    restarts: int = 3,
    max_iter: int = 400,
) -> FittedHyperparams:
    """Maximize the log marginal likelihood over (variance, lengthscale, noise).

    Nelder-Mead in log-parameter space, restarted from scaled copies of the
    initial point; out-of-bounds proposals are clipped and penalized. Bounds
    are (low, high) per parameter in natural units.
    """
    X = _as_2d(X)
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] < 3:
        raise ValueError("hyperparameter fitting needs at least 3 points")
    if init is None:
        init = SEKernelParams(max(float(np.var(y)), 1e-6), 1.0)
    if init_noise_var is None:
        init_noise_var = 0.1 * max(float(np.var(y)), 1e-6)

    lo = np.log([b[0] for b in bounds])
    hi = np.log([b[1] for b in bounds])

    def objective(logp):
        clipped = np.clip(logp, lo, hi)
        penalty = 1e3 * float(np.sum((logp - clipped) ** 2))
        var, ell, noise = np.exp(clipped)
        try:
            reg = gp_fit(X, y, SEKernelParams(var, ell), noise)
        except NumericalError:
            return 1e12
        lml = log_marginal_likelihood(reg)
        if not np.isfinite(lml):
            return 1e12
        return -lml + penalty

    base = np.log([init.variance, init.lengthscale, init_noise_var])
    scales = [0.0, math.log(3.0), -math.log(3.0)]
    starts = [np.clip(base + s, lo, hi) for s in scales[: max(1, restarts)]]

    if all(not np.isfinite(objective(s)) or objective(s) >= 1e12 for s in starts):
        raise NumericalError("all hyperparameter starting points are non-finite")

    best = None
    for start in starts:
        res = minimize(
            objective,
            start,
            method="Nelder-Mead",
            options={
                "xatol": 1e-6,
                "fatol": 1e-9,
                "maxiter": max_iter,
                "maxfev": 2 * max_iter,
            },
        )
        if best is None or res.fun < best.fun:
            best = res
    var, ell, noise = np.exp(np.clip(best.x, lo, hi))
    return FittedHyperparams(SEKernelParams(var, ell), float(noise), -float(best.fun))


def gp_sample_prior(p: SEKernelParams, grid, seed: int) -> np.ndarray:
    """One draw from the zero-mean prior at the grid points (seeded)."""
    grid = _as_2d(grid)
    if np.unique(grid, axis=0).shape[0] != grid.shape[0]:
        raise ValueError("grid points must be distinct")
    K = _kernel_matrix(grid, grid, p)
    L, _ = _chol_with_jitter(K)
    z = Generator(seed).normals(grid.shape[0])
    return L @ z


def gp_mean_block(reg: GPRegressor, name: str = "gp_mean") -> Block:
    """Block mapping one input point to the posterior mean (scalar output)."""
    d = reg.X.shape[1]
    return Block(
        name, (d,), 1, lambda x: np.array([float(gp_predict(reg, x[None, :]).mean[0])])
    )
