import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridblocks.graph import (
    Block,
    ModelGraph,
    RecurrentBlock,
    compose_chain,
    compose_constrained,
    compose_delta,
    compose_feature,
    constant_block,
    eval_block,
    eval_graph,
    func_block,
    identity_block,
    parse_graph,
    scale_block,
    scan,
    serialize_graph,
    slice_block,
    sum_block,
    validate_graph,
)
from hybridblocks.series import TimeSeries


def rand_linear_block(seed, in_dim, out_dim, name="lin"):
    M = np.random.default_rng(seed).normal(size=(out_dim, in_dim))
    return func_block(name, (in_dim,), out_dim, lambda x: M @ x)


# --- eval_block -------------------------------------------------------------

def test_eval_identity():
    b = identity_block(2)
    assert np.array_equal(b(np.array([1.0, 2.0])), [1.0, 2.0])


def test_eval_constant_zero():
    b = constant_block([0.0, 0.0, 0.0])
    assert np.array_equal(eval_block(b, []), [0.0, 0.0, 0.0])


def test_eval_sum():
    b = sum_block(2)
    assert np.array_equal(b([1.0, 2.0], [3.0, 4.0]), [4.0, 6.0])


def test_eval_rejects_bad_port_dim():
    b = sum_block(2)
    with pytest.raises(ValueError, match="port 1"):
        eval_block(b, [np.zeros(2), np.zeros(3)])


def test_eval_rejects_wrong_arity():
    with pytest.raises(ValueError, match="expects 2 inputs"):
        eval_block(sum_block(2), [np.zeros(2)])


def test_eval_rejects_bad_output():
    bad = func_block("bad", (1,), 2, lambda x: x)  # returns dim 1, claims 2
    with pytest.raises(ValueError, match="declared out_dim"):
        eval_block(bad, [np.zeros(1)])


# --- compose_delta ----------------------------------------------------------

def test_delta_zero_correction_reduces_to_p():
    p = scale_block(1, 1.0)
    d = func_block("zero", (1,), 1, lambda x: np.zeros(1))
    h = compose_delta(p, d)
    assert h(np.array([3.0]))[0] == 3.0


def test_delta_linearity():
    h = compose_delta(scale_block(1, 2.0), scale_block(1, 3.0))
    assert h(np.array([1.0]))[0] == 5.0


def test_delta_rejects_mismatched_dims():
    with pytest.raises(ValueError, match="output dims"):
        compose_delta(rand_linear_block(0, 2, 2), rand_linear_block(1, 2, 3))
    with pytest.raises(ValueError, match="input signatures"):
        compose_delta(rand_linear_block(0, 2, 2), rand_linear_block(1, 3, 2))


@settings(deadline=None, max_examples=30)
@given(st.integers(0, 10_000), st.integers(1, 5))
def test_delta_commutes_with_evaluation(seed, dim):
    p = rand_linear_block(seed, dim, dim, "p")
    d = rand_linear_block(seed + 1, dim, dim, "d")
    x = np.random.default_rng(seed + 2).normal(size=dim)
    h = compose_delta(p, d)
    assert np.allclose(h(x), p(x) + d(x), atol=1e-12)


# --- compose_chain ----------------------------------------------------------

def test_chain_example():
    first = func_block("inc", (1,), 1, lambda x: x + 1.0)
    second = scale_block(1, 2.0)
    assert compose_chain(first, second)(np.array([0.0]))[0] == 2.0


def test_chain_identity_neutral():
    f = rand_linear_block(5, 3, 3)
    chained = compose_chain(identity_block(3), f)
    x = np.arange(3.0)
    assert np.array_equal(chained(x), f(x))


@settings(deadline=None, max_examples=30)
@given(st.integers(0, 10_000))
def test_chain_associativity(seed):
    a = rand_linear_block(seed, 2, 3, "a")
    b = rand_linear_block(seed + 1, 3, 4, "b")
    c = rand_linear_block(seed + 2, 4, 2, "c")
    x = np.random.default_rng(seed + 3).normal(size=2)
    left = compose_chain(compose_chain(a, b), c)
    right = compose_chain(a, compose_chain(b, c))
    assert np.max(np.abs(left(x) - right(x))) < 1e-12


def test_chain_rejects_dim_mismatch():
    with pytest.raises(ValueError, match="dim mismatch"):
        compose_chain(rand_linear_block(0, 2, 3), rand_linear_block(1, 4, 1))


# --- compose_feature --------------------------------------------------------

def test_feature_passthrough():
    p = func_block("takev", (1, 1), 1, lambda x, v: v)
    d = identity_block(1)
    h = compose_feature(p, d)
    assert h(np.array([4.0]))[0] == 4.0


def test_feature_hand_arithmetic():
    p = func_block("addv", (1, 1), 1, lambda x, v: x + v)
    d = scale_block(1, 2.0)
    assert compose_feature(p, d)(np.array([3.0]))[0] == 9.0


def test_feature_rejects_arity():
    with pytest.raises(ValueError, match="two input ports"):
        compose_feature(identity_block(1), identity_block(1))
    p = func_block("p", (1, 2), 1, lambda x, v: x)
    with pytest.raises(ValueError, match="v-port"):
        compose_feature(p, identity_block(1))


# --- compose_constrained ----------------------------------------------------

def test_constrained_softmax_normalizes():
    from hybridblocks.constraints import softmax_block

    d = rand_linear_block(9, 2, 4)
    h = compose_constrained(d, softmax_block(4))
    out = h(np.array([0.3, -1.2]))
    assert abs(out.sum() - 1.0) < 1e-12
    assert np.all(out >= 0)


def test_constrained_projection_example():
    from hybridblocks.constraints import AffineConstraint, affine_projection_block

    d = func_block("zero2", (1,), 2, lambda x: np.zeros(2))
    proj = affine_projection_block(AffineConstraint(A=[[1.0, 1.0]], b=[1.0]))
    h = compose_constrained(d, proj)
    assert np.allclose(h(np.array([0.0])), [0.5, 0.5], atol=1e-12)


def test_constrained_feasible_unchanged():
    from hybridblocks.constraints import AffineConstraint, affine_projection_block

    d = constant_block([0.25, 0.75])
    proj = affine_projection_block(AffineConstraint(A=[[1.0, 1.0]], b=[1.0]))
    h = compose_constrained(d, proj)
    assert np.allclose(eval_block(h, []), [0.25, 0.75], atol=1e-12)


# --- nesting closure --------------------------------------------------------

def test_nesting_closure():
    from hybridblocks.constraints import softmax_block

    d = rand_linear_block(1, 2, 3, "d")
    constrained = compose_constrained(d, softmax_block(3))  # 2 -> 3 simplex
    chain = compose_chain(constrained, rand_linear_block(2, 3, 2, "ro"))  # 2 -> 2
    p = rand_linear_block(3, 2, 2, "p")
    h = compose_delta(p, chain)
    x = np.array([0.1, -0.2])
    expect = p(x) + chain(x)
    assert np.allclose(h(x), expect, atol=1e-12)
    assert isinstance(h, Block)


# --- scan --------------------------------------------------------------------

def _update_block(fn):
    return func_block("upd", (1, 1, 1), 1, fn)


def test_scan_fixed_point():
    rb = RecurrentBlock(_update_block(lambda s, x, dt: s), np.array([2.0]), 1)
    ts = TimeSeries([0.0, 1.0, 2.0], np.ones((3, 1)))
    out = scan(rb, ts)
    assert np.allclose(out.values[:, 0], 2.0)


def test_scan_running_sum():
    rb = RecurrentBlock(_update_block(lambda s, x, dt: s + x), np.array([0.0]), 1)
    ts = TimeSeries([0.0, 1.0, 2.0], np.ones((3, 1)))
    out = scan(rb, ts)
    assert np.allclose(out.values[:, 0], [1.0, 2.0, 3.0])


def test_scan_rejects_nonincreasing_times():
    with pytest.raises(ValueError, match="strictly increasing"):
        TimeSeries([0.0, 0.0, 1.0], np.ones((3, 1)))


def test_scan_segment_concatenation():
    rng = np.random.default_rng(0)
    times = np.cumsum(0.1 + rng.random(10))
    vals = rng.normal(size=(10, 1))
    rb = RecurrentBlock(
        _update_block(lambda s, x, dt: s + dt * x), np.array([0.5]), 1
    )
    whole = scan(rb, TimeSeries(times, vals))
    head = scan(rb, TimeSeries(times[:4], vals[:4]))
    rb_tail = RecurrentBlock(rb.update, head.values[-1], 1)
    tail = scan(rb_tail, TimeSeries(times[4:], vals[4:]), t0=times[3])
    assert np.allclose(np.vstack([head.values, tail.values]), whole.values, atol=1e-12)


def test_scan_backward_euler_matches_ode_module():
    from hybridblocks.ode import (
        IntegratorConfig,
        backward_euler_step,
        integrate,
        vf_harmonic,
    )

    vf = vf_harmonic()

    def upd(s, x, dt):
        return backward_euler_step(vf, s, 0.0, float(dt[0]))

    rb = RecurrentBlock(func_block("be", (2, 1, 1), 2, upd), np.array([1.0, 0.0]), 2)
    times = 0.1 + 0.1 * np.arange(10)
    out = scan(rb, TimeSeries(times, np.zeros((10, 1))), t0=0.0)
    traj = integrate(vf, [1.0, 0.0], 0.0, 1.0, IntegratorConfig("backward-euler", step=0.1))
    assert np.allclose(out.values, traj.states[1:], atol=1e-9)


def test_scan_feature_step_matches_statespace():
    # one hybrid recurrence step: encoder output feeding a Kalman update
    from hybridblocks.statespace import (
        GaussianBelief,
        LinearSDEModel,
        discretize,
        kf_filter_irregular,
        kf_predict,
        kf_update,
    )

    model = LinearSDEModel(
        F=[[0.0, 1.0], [-1.0, 0.0]],
        L=[[0.0], [1.0]],
        q_spectral=[[0.1]],
        Hobs=[[1.0, 0.0]],
        R=[[0.2]],
    )
    init = GaussianBelief([0.5, -0.2], [[1.0, 0.1], [0.1, 2.0]])
    dt = 0.3
    encoder = scale_block(1, 0.5, name="enc")

    def p_run(x_raw, v):
        A_d, Q_d = discretize(model, dt)
        belief, _ = kf_update(kf_predict(init, A_d, Q_d), model.Hobs, model.R, v)
        return np.concatenate([belief.mean, belief.cov.ravel()])

    p = func_block("kf_step", (1, 1), 6, p_run)
    h = compose_feature(p, encoder)
    raw = np.array([1.4])
    got = h(raw)

    fr = kf_filter_irregular(
        model,
        TimeSeries([dt], raw[None, :]),
        encoder=encoder,
        init=init,
        t0=0.0,
    )
    want = np.concatenate([fr.updated[0].mean, fr.updated[0].cov.ravel()])
    assert np.allclose(got, want, atol=1e-12)


# --- graphs -----------------------------------------------------------------

def simple_graph():
    return ModelGraph(
        nodes={"a": identity_block(2), "b": scale_block(2, 3.0)},
        edges=[("x", "a", 0), ("a", "b", 0)],
        inputs={"x": 2},
        outputs=["b"],
    )


def test_validate_ok():
    assert validate_graph(simple_graph()) == []


def test_validate_self_loop():
    g = ModelGraph(
        nodes={"a": identity_block(1)},
        edges=[("a", "a", 0)],
        inputs={},
        outputs=["a"],
    )
    diags = validate_graph(g)
    assert any("cycle" in d for d in diags)


def test_validate_dim_mismatch_names_edge():
    g = ModelGraph(
        nodes={"a": identity_block(2), "b": identity_block(3)},
        edges=[("x", "a", 0), ("a", "b", 0)],
        inputs={"x": 2},
        outputs=["b"],
    )
    diags = validate_graph(g)
    assert any("a -> b.0" in d and "dim 2" in d for d in diags)


def test_validate_unwired_port():
    g = ModelGraph(nodes={"s": sum_block(2)}, edges=[], inputs={}, outputs=["s"])
    diags = validate_graph(g)
    assert sum("incoming edges" in d for d in diags) == 2


def test_eval_graph():
    out = eval_graph(simple_graph(), {"x": np.array([1.0, 2.0])})
    assert np.allclose(out["b"], [3.0, 6.0])


def test_graph_text_round_trip():
    g = simple_graph()
    text = serialize_graph(g)
    assert "edge x -> a.0" in text
    g2 = parse_graph(text)
    assert validate_graph(g2) == []
    out = eval_graph(g2, {"x": np.array([1.0, 2.0])})
    assert np.allclose(out["b"], [3.0, 6.0])


def test_parse_graph_reports_line_numbers():
    with pytest.raises(ValueError, match="line 2"):
        parse_graph("input x dim=2\nnode a mystery dim=2\n")


def test_slice_block_round_trip():
    g = ModelGraph(
        nodes={"s": slice_block(3, 1, 3)},
        edges=[("x", "s", 0)],
        inputs={"x": 3},
        outputs=["s"],
    )
    g2 = parse_graph(serialize_graph(g))
    out = eval_graph(g2, {"x": np.array([1.0, 2.0, 3.0])})
    assert np.allclose(out["s"], [2.0, 3.0])
