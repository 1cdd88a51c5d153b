import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridblocks.constraints import (
    AffineConstraint,
    CompositeLoss,
    DataDrivenCMProblem,
    composite_loss,
    nearest_datapoint,
    project_affine,
    project_to_M,
    softmax,
    solve_data_driven,
)
from hybridblocks.errors import NumericalError
from hybridblocks.graph import func_block


# --- softmax -------------------------------------------------------------------

def test_softmax_symmetry():
    assert np.allclose(softmax([0.0, 0.0, 0.0]), 1 / 3)


def test_softmax_overflow_stable():
    out = softmax([1000.0, 0.0])
    assert out[0] == pytest.approx(1.0)
    assert out[1] == pytest.approx(0.0, abs=1e-300)


def test_softmax_reference_values():
    assert np.allclose(softmax([1.0, 2.0, 3.0]), [0.09003, 0.24473, 0.66524], atol=1e-5)


def test_softmax_rejects_nonfinite():
    with pytest.raises(ValueError, match="finite"):
        softmax([np.inf, 0.0])


def _decisive_max(vals, gap):
    v = np.sort(np.asarray(vals, dtype=float))
    return len(vals) == 1 or v[-1] - v[-2] > gap


@settings(deadline=None, max_examples=100)
@given(st.lists(st.floats(-350, 350), min_size=1, max_size=8))
def test_softmax_invariants(vals):
    out = softmax(vals)
    assert np.all(out > 0)  # spread stays below the exp underflow threshold
    assert abs(out.sum() - 1.0) < 1e-12
    if _decisive_max(vals, 1e-9):  # exact near-ties round to equal outputs
        assert int(np.argmax(out)) == int(np.argmax(vals))


@settings(deadline=None, max_examples=50)
@given(st.lists(st.floats(-1e9, 1e9), min_size=1, max_size=8))
def test_softmax_extreme_spread(vals):
    # components whose gap to the max exceeds ~745 underflow to exactly 0
    out = softmax(vals)
    assert np.all(out >= 0)
    assert abs(out.sum() - 1.0) < 1e-12
    if _decisive_max(vals, 1e-6):
        assert int(np.argmax(out)) == int(np.argmax(vals))


# --- affine projection ------------------------------------------------------------

def test_project_affine_feasible_unchanged():
    c = AffineConstraint(A=[[1.0, 1.0]], b=[1.0])
    z = np.array([0.3, 0.7])
    assert np.max(np.abs(project_affine(z, c) - z)) < 1e-12


def test_project_affine_closed_form():
    c = AffineConstraint(A=[[1.0, 1.0]], b=[1.0])
    assert np.allclose(project_affine([0.0, 0.0], c), [0.5, 0.5], atol=1e-14)


def test_project_affine_weighted():
    # minimize z1^2 + 4 z2^2 subject to z1 + z2 = 1  ->  (4/5, 1/5)
    c = AffineConstraint(A=[[1.0, 1.0]], b=[1.0], W=[[1.0, 0.0], [0.0, 4.0]])
    assert np.allclose(project_affine([0.0, 0.0], c), [0.8, 0.2], atol=1e-12)


def test_project_affine_idempotent():
    rng = np.random.default_rng(0)
    c = AffineConstraint(A=rng.normal(size=(2, 5)), b=rng.normal(size=2))
    z1 = project_affine(rng.normal(size=5), c)
    z2 = project_affine(z1, c)
    assert np.max(np.abs(z2 - z1)) < 1e-12


def test_project_affine_rank_deficient():
    c = AffineConstraint(A=[[1.0, 1.0], [1.0, 1.0]], b=[1.0, 1.0])
    with pytest.raises(NumericalError, match="rank-deficient"):
        project_affine([0.0, 0.0], c)


def test_project_affine_randomized_invariants():
    """Feasibility, idempotence, and W-orthogonality on random instances."""
    rng = np.random.default_rng(1)
    for _ in range(200):
        n = rng.integers(2, 7)
        m = rng.integers(1, n)
        A = rng.normal(size=(m, n))
        b = rng.normal(size=m)
        Wroot = rng.normal(size=(n, n))
        W = Wroot @ Wroot.T + n * np.eye(n)
        c = AffineConstraint(A=A, b=b, W=W)
        z = rng.normal(size=n)
        p = project_affine(z, c)
        assert np.max(np.abs(A @ p - b)) < 1e-10
        assert np.max(np.abs(project_affine(p, c) - p)) < 1e-10
        # correction W-orthogonal to the feasible directions (null space of A)
        ns = np.linalg.svd(A)[2][m:].T
        assert np.max(np.abs(ns.T @ (W @ (p - z)))) < 1e-8


# --- composite loss ------------------------------------------------------------------

IDENTITY_RESIDUAL = func_block("r", (2,), 2, lambda z: z)


def test_composite_loss_zero():
    cl = CompositeLoss(1.0, 1.0, func_block("r0", (2,), 2, lambda z: np.zeros(2)))
    assert composite_loss([1.0, 2.0], [1.0, 2.0], cl) == 0.0


def test_composite_loss_pure_mse():
    cl = CompositeLoss(1.0, 0.0, IDENTITY_RESIDUAL)
    assert composite_loss([1.0, 3.0], [0.0, 1.0], cl) == pytest.approx(2.5)


def test_composite_loss_hand_arithmetic():
    # data MSE 1, residual mean-square 2, weights (1, 0.5) -> 2
    res = func_block("c", (2,), 2, lambda z: np.array([math.sqrt(2.0), math.sqrt(2.0)]))
    cl = CompositeLoss(1.0, 0.5, res)
    assert composite_loss([1.0, 1.0], [0.0, 0.0], cl) == pytest.approx(2.0)


def test_composite_loss_validation():
    with pytest.raises(ValueError, match="weight"):
        CompositeLoss(0.0, 0.0, IDENTITY_RESIDUAL)


# --- nearest datapoint -----------------------------------------------------------------

def line_problem(dataset, W=None):
    return DataDrivenCMProblem(
        basis=np.array([[1.0], [1.0]]), offset=np.zeros(2), dataset=dataset, W=W
    )


def test_nearest_exact_member():
    prob = line_problem([[1.0, 2.0], [3.0, 4.0]])
    z, dist, idx = nearest_datapoint([3.0, 4.0], prob)
    assert np.array_equal(z, [3.0, 4.0]) and dist == 0.0 and idx == 1


def test_nearest_picks_closer_point():
    prob = DataDrivenCMProblem(
        basis=np.zeros((1, 0)), offset=np.zeros(1), dataset=[[0.0], [10.0]]
    )
    z, _, idx = nearest_datapoint([4.0], prob)
    assert z[0] == 0.0 and idx == 0


def test_nearest_tie_breaks_by_lowest_index():
    prob = DataDrivenCMProblem(
        basis=np.zeros((1, 0)), offset=np.zeros(1), dataset=[[1.0], [-1.0]]
    )
    _, _, idx = nearest_datapoint([0.0], prob)
    assert idx == 0


def test_nearest_matches_brute_force_scan():
    rng = np.random.default_rng(2)
    W = np.diag(rng.random(4) + 0.5)
    data = rng.normal(size=(50, 4))
    prob = DataDrivenCMProblem(basis=np.zeros((4, 0)), offset=np.zeros(4),
                               dataset=data, W=W)
    for _ in range(25):
        z = rng.normal(size=4)
        _, dist, idx = nearest_datapoint(z, prob)
        dists = [math.sqrt((row - z) @ W @ (row - z)) for row in data]
        assert idx == int(np.argmin(dists))
        assert dist == pytest.approx(min(dists), abs=1e-12)


# --- projection onto M ---------------------------------------------------------------------

def test_project_to_M_member_unchanged():
    prob = line_problem([[0.0, 0.0]])
    z = np.array([2.0, 2.0])
    assert np.max(np.abs(project_to_M(z, prob) - z)) < 1e-10


def test_project_to_M_orthogonal_formula():
    prob = line_problem([[0.0, 0.0]])
    assert np.allclose(project_to_M([1.0, 0.0], prob), [0.5, 0.5], atol=1e-12)


def test_project_to_M_residual_W_orthogonal():
    rng = np.random.default_rng(3)
    N = rng.normal(size=(6, 3))
    z0 = rng.normal(size=6)
    Wroot = rng.normal(size=(6, 6))
    W = Wroot @ Wroot.T + 6 * np.eye(6)
    prob = DataDrivenCMProblem(basis=N, offset=z0, dataset=[np.zeros(6)], W=W)
    z_star = rng.normal(size=6)
    p = project_to_M(z_star, prob)
    assert np.max(np.abs(N.T @ (W @ (p - z_star)))) < 1e-10


def test_project_to_M_empty_basis():
    prob = DataDrivenCMProblem(basis=np.zeros((2, 0)), offset=np.array([1.0, 2.0]),
                               dataset=[[0.0, 0.0]])
    assert np.array_equal(project_to_M([5.0, 5.0], prob), [1.0, 2.0])


# --- alternating solver ----------------------------------------------------------------------

def test_solver_requires_feasible_init():
    prob = line_problem([[1.0, 1.0]])
    with pytest.raises(ValueError, match="constraint space"):
        solve_data_driven(prob, np.array([1.0, 0.0]))


def test_solver_single_point_reached_in_one_iteration():
    prob = line_problem([[2.0, 2.0]])
    res = solve_data_driven(prob, np.array([-1.0, -1.0]))
    assert np.allclose(res.z, [2.0, 2.0], atol=1e-12)
    assert res.loss_history[1] == pytest.approx(0.0, abs=1e-12)
    assert res.converged


def test_solver_empty_basis_returns_point():
    prob = DataDrivenCMProblem(basis=np.zeros((2, 0)), offset=np.array([1.0, 2.0]),
                               dataset=[[0.0, 0.0]])
    res = solve_data_driven(prob, np.array([1.0, 2.0]))
    assert np.array_equal(res.z, [1.0, 2.0])
    assert res.iterations == 1


def test_solver_dense_line_matches_weighted_least_squares():
    """Data densely sampled from a line inside M: the solver must agree with
    the direct weighted solve of distance-to-dataset-line."""
    t = np.linspace(-2.0, 2.0, 2001)
    data = np.column_stack([t, t])  # the line IS M
    prob = line_problem(data)
    res = solve_data_driven(prob, np.array([1.7, 1.7]), tol=1e-12)
    # direct solution: nearest dataset point to the projection of init stays
    # within one grid spacing of the true minimizer of the continuous problem
    assert res.converged
    assert res.loss_history[-1] < 1e-6
    direct = data[np.argmin(np.abs(t - 1.7))]
    assert np.max(np.abs(res.z - direct)) < 1e-6


def test_solver_loss_history_non_increasing():
    rng = np.random.default_rng(4)
    for trial in range(10):
        n, k = 5, 2
        N = rng.normal(size=(n, k))
        z0 = rng.normal(size=n)
        data = rng.normal(size=(40, n))
        W = np.diag(rng.random(n) + 0.5)
        prob = DataDrivenCMProblem(basis=N, offset=z0, dataset=data, W=W)
        res = solve_data_driven(prob, z0, max_iter=60, tol=1e-10)
        assert np.all(np.diff(res.loss_history) <= 1e-12)


def test_solver_iterates_stay_in_M():
    rng = np.random.default_rng(5)
    N = rng.normal(size=(4, 2))
    z0 = rng.normal(size=4)
    prob = DataDrivenCMProblem(basis=N, offset=z0,
                               dataset=rng.normal(size=(25, 4)))
    res = solve_data_driven(prob, z0, max_iter=40)
    gap = prob.metric_distance(res.z, project_to_M(res.z, prob))
    assert gap < 1e-8


def test_solver_flags_iteration_cap():
    # two far-apart points force tiny alternating improvements under a skewed
    # metric; with max_iter=1 the solver cannot meet tol
    prob = line_problem([[5.0, 0.0], [0.0, 5.0]])
    res = solve_data_driven(prob, np.array([3.0, 3.0]), max_iter=1, tol=1e-16)
    assert not res.converged
    assert res.iterations == 1
