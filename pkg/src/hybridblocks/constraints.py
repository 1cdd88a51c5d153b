"""Hard-constraint transforms, composite losses, and the data-driven
constrained solver.

The solver alternates between two projections: pick the measurement nearest
the current iterate (discrete step) and project that measurement back onto
the affine constraint space (variational step). Both distances use the same
weighted metric, which makes the loss sequence non-increasing; convergence
holds under convexity, so assignment cycles are detected and cut short.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NumericalError
from .graph import Block


def softmax(v) -> np.ndarray:
    """Max-subtracted exponential normalization; components sum to one."""
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if not np.all(np.isfinite(v)):
        raise ValueError("softmax requires finite entries")
    e = np.exp(v - v.max())
    return e / e.sum()


def softmax_block(dim: int, name: str = "softmax") -> Block:
    return Block(name, (dim,), dim, softmax, kind="softmax", params={"dim": dim})


@dataclass(frozen=True)
class AffineConstraint:
    """Feasible set {z : A z = b} with an optional SPD metric W (default I)."""

    A: np.ndarray
    b: np.ndarray
    W: Optional[np.ndarray] = None

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if A.shape[0] != b.shape[0]:
            raise ValueError(f"A has {A.shape[0]} rows but b has {b.shape[0]} entries")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        if self.W is not None:
            W = np.atleast_2d(np.asarray(self.W, dtype=float))
            if W.shape != (A.shape[1], A.shape[1]):
                raise ValueError("W must be n x n")
            if np.max(np.abs(W - W.T)) > 1e-10:
                raise ValueError("W must be symmetric")
            object.__setattr__(self, "W", W)


def project_affine(z, c: AffineConstraint) -> np.ndarray:
    """W-weighted least-squares projection of z onto {z' : A z' = b}."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    A, b = c.A, c.b
    Winv_At = A.T if c.W is None else np.linalg.solve(c.W, A.T)
    G = A @ Winv_At  # m x m Gram matrix; singular iff A is rank-deficient
    try:
        lam = np.linalg.solve(G, b - A @ z)
    except np.linalg.LinAlgError:
        raise NumericalError("project_affine: constraint matrix is rank-deficient") from None
    if not np.all(np.isfinite(lam)):
        raise NumericalError("project_affine: constraint matrix is rank-deficient")
    return z + Winv_At @ lam


def affine_projection_block(c: AffineConstraint, name: str = "affine_proj") -> Block:
    dim = c.A.shape[1]
    return Block(name, (dim,), dim, lambda z: project_affine(z, c))


@dataclass(frozen=True)
class CompositeLoss:
    """Weighted sum of a data-fit MSE and a mean-square physics residual."""

    data_weight: float
    physics_weight: float
    physics_residual: Block

    def __post_init__(self):
        if self.data_weight < 0 or self.physics_weight < 0:
            raise ValueError("loss weights must be nonnegative")
        if self.data_weight == 0 and self.physics_weight == 0:
            raise ValueError("at least one loss weight must be positive")


def composite_loss(pred, target, cl: CompositeLoss) -> float:
    pred = np.atleast_1d(np.asarray(pred, dtype=float))
    target = np.atleast_1d(np.asarray(target, dtype=float))
    if pred.shape != target.shape:
        raise ValueError(f"pred shape {pred.shape} != target shape {target.shape}")
    total = cl.data_weight * float(np.mean((pred - target) ** 2))
    if cl.physics_weight > 0:
        r = cl.physics_residual(pred)
        total += cl.physics_weight * float(np.mean(r ** 2))
    return total


# ---------------------------------------------------------------------------
# data-driven constrained modeling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DataDrivenCMProblem:
    """Affine constraint space z = z0 + N c, a finite measurement cloud, and
    the SPD metric defining 'nearest'."""

    basis: np.ndarray  # n x k, full column rank (k may be 0)
    offset: np.ndarray  # n
    dataset: np.ndarray  # n_points x n
    W: Optional[np.ndarray] = None

    def __post_init__(self):
        N = np.asarray(self.basis, dtype=float)
        if N.ndim != 2:
            raise ValueError("basis must be a 2-D array (n x k)")
        z0 = np.atleast_1d(np.asarray(self.offset, dtype=float))
        D = np.atleast_2d(np.asarray(self.dataset, dtype=float))
        if N.shape[0] != z0.shape[0] or D.shape[1] != z0.shape[0]:
            raise ValueError("basis, offset, and dataset dimensions disagree")
        if D.shape[0] < 1:
            raise ValueError("dataset must be non-empty")
        if N.shape[1] > 0 and np.linalg.matrix_rank(N) < N.shape[1]:
            raise ValueError("basis must have full column rank")
        object.__setattr__(self, "basis", N)
        object.__setattr__(self, "offset", z0)
        object.__setattr__(self, "dataset", D)
        if self.W is not None:
            W = np.atleast_2d(np.asarray(self.W, dtype=float))
            if W.shape != (z0.shape[0], z0.shape[0]) or np.max(np.abs(W - W.T)) > 1e-10:
                raise ValueError("W must be symmetric n x n")
            object.__setattr__(self, "W", W)

    def metric_distance(self, a, b) -> float:
        d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
        q = float(d @ d) if self.W is None else float(d @ self.W @ d)
        return math.sqrt(max(q, 0.0))


def nearest_datapoint(z, problem: DataDrivenCMProblem):
    """Dataset element closest to z in the problem metric; lowest index wins ties."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    diff = problem.dataset - z
    if problem.W is None:
        q = np.einsum("ij,ij->i", diff, diff)
    else:
        q = np.einsum("ij,jk,ik->i", diff, problem.W, diff)
    idx = int(np.argmin(q))
    return problem.dataset[idx].copy(), math.sqrt(max(float(q[idx]), 0.0)), idx


def project_to_M(z_star, problem: DataDrivenCMProblem) -> np.ndarray:
    """W-weighted projection of a measurement onto the constraint space."""
    z_star = np.atleast_1d(np.asarray(z_star, dtype=float))
    N, z0 = problem.basis, problem.offset
    if N.shape[1] == 0:
        return z0.copy()
    WN = N if problem.W is None else problem.W @ N
    G = N.T @ WN
    try:
        c = np.linalg.solve(G, WN.T @ (z_star - z0))
    except np.linalg.LinAlgError:
        raise NumericalError("project_to_M: normal equations are singular") from None
    return z0 + N @ c


@dataclass(frozen=True)
class SolveResult:
    z: np.ndarray
    loss_history: np.ndarray
    converged: bool
    iterations: int
    stopped_on_cycle: bool = False


def solve_data_driven(
    problem: DataDrivenCMProblem,
    init,
    max_iter: int = 200,
    tol: float = 1e-8,
) -> SolveResult:
    """Alternate nearest-measurement and constraint-space projection.

    Stops when the loss (metric distance from the iterate to its nearest
    measurement) changes by less than ``tol``, when the nearest-point
    assignment enters a cycle of length <= 4, or at ``max_iter`` (returned
    flagged as non-converged). The loss history is non-increasing.
    """
    init = np.atleast_1d(np.asarray(init, dtype=float))
    gap = problem.metric_distance(init, project_to_M(init, problem))
    if gap > 1e-8 * (1.0 + float(np.linalg.norm(init))):
        raise ValueError(f"init is not in the constraint space (distance {gap:.3e})")

    z = init
    _, loss, idx = nearest_datapoint(z, problem)
    history = [loss]
    visited = [(idx, z)]
    best_z, best_loss = z, loss
    converged = False
    stopped_on_cycle = False
    iterations = 0
    scale = 1.0 + float(np.linalg.norm(init))
    for _ in range(max_iter):
        iterations += 1
        z_star, _, _ = nearest_datapoint(z, problem)
        z = project_to_M(z_star, problem)
        _, loss, idx = nearest_datapoint(z, problem)
        history.append(loss)
        if loss < best_loss:
            best_z, best_loss = z, loss
        if abs(history[-2] - history[-1]) < tol:
            converged = True
            break
        # a revisited (assignment, iterate) pair a short period back is a cycle
        k = len(visited)
        for period in range(1, 5):
            if k >= period:
                p_idx, p_z = visited[k - period]
                if idx == p_idx and float(np.linalg.norm(z - p_z)) <= 1e-12 * scale:
                    stopped_on_cycle = True
                    break
        visited.append((idx, z))
        if stopped_on_cycle:
            break
    return SolveResult(
        z=best_z,
        loss_history=np.array(history),
        converged=converged,
        iterations=iterations,
        stopped_on_cycle=stopped_on_cycle,
    )
