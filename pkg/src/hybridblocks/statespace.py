"""Continuous-discrete linear-Gaussian state estimation on irregular samples.

The continuous model du = F u dt + L dW (spectral density q) is discretized
per observation gap with a matrix exponential (Van Loan block construction
for the process noise), then filtered with the standard predict/update
recursion. Updates use the Joseph covariance form; an optional encoder block
maps raw observations into the filter's observation space, making the
recursion a hybrid of a data-driven encoder and a physics-based update.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import NumericalError
from .graph import Block
from .series import TimeSeries


def matrix_exp(M) -> np.ndarray:
    """Matrix exponential by scaling-and-squaring over a Pade(6) approximant."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"matrix_exp needs a square matrix, got shape {M.shape}")
    if M.shape[0] > 64:
        raise ValueError("matrix_exp is sized for n <= 64")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix_exp: non-finite entries")
    n = M.shape[0]
    norm = np.linalg.norm(M, np.inf)
    s = max(0, int(math.ceil(math.log2(norm / 0.5))) if norm > 0.5 else 0)
    A = M / (2.0 ** s)
    # Pade(6,6): c_k = (12-k)! 6! / (12! k! (6-k)!)
    c = np.array(
        [1.0, 1 / 2, 5 / 44, 1 / 66, 1 / 792, 1 / 15840, 1 / 665280]
    )
    A2 = A @ A
    U = A @ (c[1] * np.eye(n) + c[3] * A2 + c[5] * A2 @ A2)
    V = c[0] * np.eye(n) + c[2] * A2 + c[4] * A2 @ A2 + c[6] * A2 @ A2 @ A2
    E = np.linalg.solve(V - U, V + U)
    for _ in range(s):
        E = E @ E
    return E


@dataclass(frozen=True)
class LinearSDEModel:
    """Drift F (n x n), diffusion gain L (n x q), noise spectral density
    q_spectral (q x q), observation matrix Hobs (m x n), observation noise R."""

    F: np.ndarray
    L: np.ndarray
    q_spectral: np.ndarray
    Hobs: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        for name in ("F", "L", "q_spectral", "Hobs", "R"):
            object.__setattr__(self, name, np.atleast_2d(np.asarray(getattr(self, name), dtype=float)))
        n = self.F.shape[0]
        if self.F.shape != (n, n):
            raise ValueError("F must be square")
        if self.L.shape[0] != n:
            raise ValueError("L row count must match state dim")
        q = self.L.shape[1]
        if self.q_spectral.shape != (q, q):
            raise ValueError("q_spectral must be (q, q)")
        if self.Hobs.shape[1] != n:
            raise ValueError("Hobs column count must match state dim")
        m = self.Hobs.shape[0]
        if self.R.shape != (m, m):
            raise ValueError("R must be (m, m)")
        for mat, label in ((self.q_spectral, "q_spectral"), (self.R, "R")):
            if np.max(np.abs(mat - mat.T)) > 1e-12:
                raise ValueError(f"{label} must be symmetric")
        if np.min(np.linalg.eigvalsh(self.R)) <= 0:
            raise ValueError("R must be positive definite")
        if np.min(np.linalg.eigvalsh(self.q_spectral)) < -1e-12:
            raise ValueError("q_spectral must be positive semidefinite")

    @property
    def state_dim(self) -> int:
        return self.F.shape[0]

    @property
    def obs_dim(self) -> int:
        return self.Hobs.shape[0]


@dataclass(frozen=True)
class GaussianBelief:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if cov.shape != (mean.shape[0], mean.shape[0]):
            raise ValueError(f"cov shape {cov.shape} does not match mean {mean.shape}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", 0.5 * (cov + cov.T))


def discretize(model: LinearSDEModel, dt: float):
    """Exact discretization over dt: returns (A_d, Q_d).

    A_d = exp(F dt); Q_d comes from the Van Loan block exponential of
    [[-F, L q L^T], [0, F^T]] dt.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    n = model.state_dim
    Qc = model.L @ model.q_spectral @ model.L.T
    blk = np.zeros((2 * n, 2 * n))
    blk[:n, :n] = -model.F
    blk[:n, n:] = Qc
    blk[n:, n:] = model.F.T
    E = matrix_exp(blk * dt)
    A_d = E[n:, n:].T
    Q_d = A_d @ E[:n, n:]
    return A_d, 0.5 * (Q_d + Q_d.T)


def kf_predict(b: GaussianBelief, A_d, Q_d) -> GaussianBelief:
    """Propagate mean and covariance through one discrete transition."""
    A_d = np.asarray(A_d, dtype=float)
    Q_d = np.asarray(Q_d, dtype=float)
    return GaussianBelief(A_d @ b.mean, A_d @ b.cov @ A_d.T + Q_d)


def kf_update(b: GaussianBelief, Hobs, R, y):
    """Condition on one observation; returns (posterior, log-likelihood).

    Joseph-form covariance update keeps the posterior covariance symmetric
    positive semidefinite under rounding.
    """
    H = np.atleast_2d(np.asarray(Hobs, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    S = H @ b.cov @ H.T + R
    try:
        S_chol = cho_factor(0.5 * (S + S.T), lower=True)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"innovation covariance not positive definite: {e}") from None
    innov = y - H @ b.mean
    K = cho_solve(S_chol, H @ b.cov).T
    n = b.mean.shape[0]
    IKH = np.eye(n) - K @ H
    cov = IKH @ b.cov @ IKH.T + K @ R @ K.T
    mean = b.mean + K @ innov
    m = y.shape[0]
    loglik = -0.5 * (
        m * math.log(2.0 * math.pi)
        + 2.0 * float(np.sum(np.log(np.diag(S_chol[0]))))
        + float(innov @ cho_solve(S_chol, innov))
    )
    return GaussianBelief(mean, cov), loglik


@dataclass
class FilterResult:
    times: np.ndarray
    predicted: list
    updated: list
    logliks: np.ndarray
    transitions: list = field(default_factory=list)  # (A_d, Q_d) per step

    @property
    def total_loglik(self) -> float:
        return float(np.sum(self.logliks))


def kf_filter_irregular(
    model: LinearSDEModel,
    obs: TimeSeries,
    encoder: Optional[Block] = None,
    init: Optional[GaussianBelief] = None,
    t0: Optional[float] = None,
) -> FilterResult:
    """Filter irregularly sampled observations.

    Per sample: discretize the gap, predict, encode the raw observation
    (identity when no encoder is given), update. ``t0`` anchors the first
    gap; by default it equals the first timestamp, so the first sample is
    update-only. ``init`` defaults to a standard-normal prior.
    """
    n = model.state_dim
    if init is None:
        init = GaussianBelief(np.zeros(n), np.eye(n))
    if encoder is not None and encoder.out_dim != model.obs_dim:
        raise ValueError(
            f"encoder output dim {encoder.out_dim} does not match obs dim {model.obs_dim}"
        )
    if encoder is None and obs.dim != model.obs_dim:
        raise ValueError(f"observation dim {obs.dim} does not match Hobs rows {model.obs_dim}")

    prev_t = obs.times[0] if t0 is None else float(t0)
    if obs.times[0] < prev_t:
        raise ValueError("t0 must not exceed the first observation time")

    belief = init
    predicted, updated, logliks, transitions = [], [], [], []
    for k in range(len(obs)):
        dt = obs.times[k] - prev_t
        try:
            if dt > 0:
                A_d, Q_d = discretize(model, dt)
            else:
                A_d, Q_d = np.eye(n), np.zeros((n, n))
            pred = kf_predict(belief, A_d, Q_d)
            z = obs.values[k]
            if encoder is not None:
                z = encoder(z)
            belief, ll = kf_update(pred, model.Hobs, model.R, z)
        except NumericalError as e:
            raise NumericalError(f"filter step {k} (t={obs.times[k]}): {e}") from None
        predicted.append(pred)
        updated.append(belief)
        logliks.append(ll)
        transitions.append((A_d, Q_d))
        prev_t = obs.times[k]
    return FilterResult(obs.times.copy(), predicted, updated, np.array(logliks), transitions)


def rts_smooth(model: LinearSDEModel, fr: FilterResult) -> list:
    """Rauch-Tung-Striebel backward pass over a completed filter result."""
    K = len(fr.updated)
    if K == 0:
        return []
    smoothed = [None] * K
    smoothed[-1] = fr.updated[-1]
    for k in range(K - 2, -1, -1):
        A_next, _ = fr.transitions[k + 1]
        P_pred = fr.predicted[k + 1].cov
        try:
            G = np.linalg.solve(P_pred.T, A_next @ fr.updated[k].cov.T).T
        except np.linalg.LinAlgError as e:
            raise NumericalError(f"singular predicted covariance at step {k + 1}: {e}") from None
        mean = fr.updated[k].mean + G @ (smoothed[k + 1].mean - fr.predicted[k + 1].mean)
        cov = fr.updated[k].cov + G @ (smoothed[k + 1].cov - fr.predicted[k + 1].cov) @ G.T
        smoothed[k] = GaussianBelief(mean, cov)
    return smoothed


def filter_result_csv(fr: FilterResult) -> str:
    """CSV: t, mean_1..mean_n, var_1..var_n, loglik (updated beliefs)."""
    n = fr.updated[0].mean.shape[0]
    header = (
        "t,"
        + ",".join(f"mean_{k + 1}" for k in range(n))
        + ","
        + ",".join(f"var_{k + 1}" for k in range(n))
        + ",loglik"
    )
    rows = [header]
    for t, b, ll in zip(fr.times, fr.updated, fr.logliks):
        vals = (t, *b.mean, *np.diag(b.cov), ll)
        rows.append(",".join(format(v, ".17g") for v in vals))
    return "\n".join(rows) + "\n"
