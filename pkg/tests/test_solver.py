import numpy as np
import pytest

from cassigsm import (DivergenceError, ForwardOperator, HsiCube, Mask2D,
                      Measurement, ScalePrior, SceneSpec, SolverConfig,
                      generate_scene, initialize, objective, psnr, random_mask,
                      run, tv_baseline, x_step)
from conftest import random_cube, random_operator


def solve_normal_equations(op, w, u, y):
    """Dense oracle: x* = (A^T A + diag(w))^{-1} (A^T y + w * u)."""
    a = op.dense_matrix()
    lhs = a.T @ a + np.diag(w.ravel().astype(np.float64))
    rhs = a.T @ y.data.ravel().astype(np.float64) + (
        w.ravel() * u.ravel()).astype(np.float64)
    return np.linalg.solve(lhs, rhs).reshape(u.shape)


def test_initialize_zero_measurement(rng):
    op = random_operator(rng, 4, 4, 3, step=1)
    meas = Measurement(np.zeros((4, op.meas_width), dtype=np.float32),
                       step=1, bands=3)
    assert not initialize(meas, op, "adjoint").data.any()
    assert not initialize(meas, op, "zero").data.any()


def test_initialize_zero_mode_ignores_measurement(rng):
    op = random_operator(rng, 4, 4, 3, step=1)
    meas = op.forward(random_cube(rng, 3, 4, 4))
    assert not initialize(meas, op, "zero").data.any()


def test_initialize_is_scaled_adjoint(rng):
    op = random_operator(rng, 5, 6, 4, step=2)
    meas = op.forward(random_cube(rng, 4, 5, 6))
    x0 = initialize(meas, op, "adjoint").data.astype(np.float64)
    adj = op.adjoint(meas).data.astype(np.float64)
    nz = adj != 0
    ratios = x0[nz] / adj[nz]
    assert ratios.max() - ratios.min() <= 1e-5 * ratios.max()
    assert not x0[~nz].any()


def test_objective_zero_at_consistent_point(rng):
    op = random_operator(rng, 3, 4, 2, step=1)
    x = random_cube(rng, 2, 3, 4)
    y = op.forward(x)
    w = np.ones(x.shape, dtype=np.float32)
    total, data, prior = objective(x, w, x.data, y, op)
    assert data <= 1e-10
    assert prior == 0.0
    assert total == data + prior


def test_objective_tiny_example():
    op = ForwardOperator(Mask2D([[1.0, 0.5]]), bands=2, step=1)
    x = HsiCube(np.array([[[2.0, 4.0]], [[6.0, 8.0]]], dtype=np.float32))
    y = op.forward(x)
    total, data, prior = objective(x, np.ones(x.shape, np.float32), x.data, y, op)
    assert total == 0.0 and data == 0.0 and prior == 0.0


def test_objective_without_prior_weights(rng):
    op = random_operator(rng, 3, 3, 2, step=1)
    x = random_cube(rng, 2, 3, 3)
    y = Measurement(rng.random((3, op.meas_width), dtype=np.float32),
                    step=1, bands=2)
    u = rng.random(x.shape).astype(np.float32)
    total, data, prior = objective(x, np.zeros(x.shape, np.float32), u, y, op)
    assert prior == 0.0
    assert total == data


def test_x_step_zero_delta(rng):
    op = random_operator(rng, 3, 3, 2, step=1)
    x = random_cube(rng, 2, 3, 3)
    y = op.forward(x)
    w = np.ones(x.shape, np.float32)
    out = x_step(x, w, x.data, y, op, 0.0)
    np.testing.assert_array_equal(out.data, x.data)


def test_x_step_data_only_formula(rng):
    # w = 0, y = 0: x' = x - 2 delta A^T A x
    op = random_operator(rng, 3, 4, 2, step=1)
    x = random_cube(rng, 2, 3, 4)
    y = Measurement(np.zeros((3, op.meas_width), dtype=np.float32),
                    step=1, bands=2)
    delta = 0.2
    out = x_step(x, np.zeros(x.shape, np.float32), np.zeros(x.shape, np.float32),
                 y, op, delta)
    a = op.dense_matrix()
    expected = x.data.ravel() - 2 * delta * (a.T @ (a @ x.data.ravel().astype(np.float64)))
    np.testing.assert_allclose(out.data.ravel(), expected, atol=1e-5)


def test_x_step_fixed_point(rng):
    op = random_operator(rng, 3, 3, 3, step=1)
    shape = (3, 3, 3)
    w = rng.uniform(0.5, 2.0, shape).astype(np.float32)
    u = rng.random(shape).astype(np.float32)
    y = Measurement(rng.random((3, op.meas_width), dtype=np.float32),
                    step=1, bands=3)
    x_opt = solve_normal_equations(op, w, u, y).astype(np.float32)
    out = x_step(HsiCube(x_opt), w, u, y, op, 0.3)
    np.testing.assert_allclose(out.data, x_opt, atol=1e-5)


@pytest.mark.parametrize("trial", range(5))
def test_gradient_matches_finite_differences(trial):
    rng = np.random.default_rng(5000 + trial)
    op = random_operator(rng, 4, 4, 3, step=1)
    shape = (3, 4, 4)
    x = rng.random(shape).astype(np.float32)
    w = rng.uniform(0.0, 2.0, shape).astype(np.float32)
    u = rng.random(shape).astype(np.float32)
    y = Measurement(rng.random((4, op.meas_width), dtype=np.float32),
                    step=1, bands=3)
    delta = 0.25
    out = x_step(HsiCube(x), w, u, y, op, delta)
    grad_impl = (x.astype(np.float64) - out.data.astype(np.float64)).ravel() / (2 * delta)

    # independent oracle: central differences of the dense float64 objective
    a = op.dense_matrix()
    y64 = y.data.ravel().astype(np.float64)
    w64, u64 = w.ravel().astype(np.float64), u.ravel().astype(np.float64)

    def f(v):
        r = y64 - a @ v
        return float(r @ r + w64 @ ((v - u64) ** 2))

    h = 1e-3
    x64 = x.ravel().astype(np.float64)
    grad_fd = np.empty_like(x64)
    for i in range(x64.size):
        e = np.zeros_like(x64)
        e[i] = h
        grad_fd[i] = (f(x64 + e) - f(x64 - e)) / (2 * h)
    # x_step moves along half the gradient scaled by 2*delta
    np.testing.assert_allclose(2.0 * grad_impl, grad_fd,
                               rtol=1e-3, atol=1e-3 * np.abs(grad_fd).max())


def test_run_fits_data_with_disabled_prior(rng):
    op = random_operator(rng, 4, 4, 3, step=1)
    truth = random_cube(rng, 3, 4, 4)
    y = op.forward(truth)
    cfg = SolverConfig(stages=1, inner_steps=200, prior=ScalePrior.constant(0.0), q=3)
    xr, trace = run(y, op, cfg)
    resid = trace.records[-1].data_term
    ynorm = float(np.sum(y.data.astype(np.float64) ** 2))
    assert resid <= 1e-6 * ynorm


def test_run_zero_inner_steps_returns_initialization(rng):
    op = random_operator(rng, 5, 5, 3, step=2)
    y = op.forward(random_cube(rng, 3, 5, 5))
    xr, trace = run(y, op, SolverConfig(stages=1, inner_steps=0, q=3))
    x0 = initialize(y, op, "adjoint")
    assert xr == x0
    assert len(trace.records) == 1


def test_run_trace_monotone_within_stages(rng):
    scene = generate_scene(SceneSpec(20, 20, 4, blobs=3, seed=21))
    op = ForwardOperator(random_mask(20, 20, seed=22), bands=4, step=2)
    y = op.forward(scene)
    _, trace = run(y, op, SolverConfig(stages=3, inner_steps=6, q=5))
    for t in (1, 2, 3):
        obj = trace.stage_objectives(t)
        assert (np.diff(obj) <= 0).all()


def test_run_improves_psnr(rng):
    scene = generate_scene(SceneSpec(24, 24, 4, blobs=4, seed=31))
    op = ForwardOperator(random_mask(24, 24, seed=32), bands=4, step=2)
    y = op.forward(scene)
    xr, _ = run(y, op, SolverConfig(stages=3, inner_steps=8, q=5))
    assert psnr(xr, scene) > psnr(initialize(y, op), scene)


def test_run_deterministic(rng):
    scene = generate_scene(SceneSpec(16, 16, 3, blobs=3, seed=41))
    op = ForwardOperator(random_mask(16, 16, seed=42), bands=3, step=1)
    y = op.forward(scene)
    cfg = SolverConfig(stages=2, inner_steps=4, q=3)
    xa, ta = run(y, op, cfg)
    xb, tb = run(y, op, cfg)
    assert xa.data.tobytes() == xb.data.tobytes()
    assert ta.to_csv_string() == tb.to_csv_string()


def test_run_divergence_guard(rng):
    op = random_operator(rng, 6, 6, 3, step=1)
    y = op.forward(random_cube(rng, 3, 6, 6))
    cfg = SolverConfig(stages=1, inner_steps=50, delta0=1e12, backtracking=False, q=3)
    with pytest.raises(DivergenceError, match="stage"):
        run(y, op, cfg)


def test_trace_csv_layout(rng):
    op = random_operator(rng, 4, 4, 2, step=1)
    y = op.forward(random_cube(rng, 2, 4, 4))
    _, trace = run(y, op, SolverConfig(stages=1, inner_steps=2, q=3))
    lines = trace.to_csv_string().splitlines()
    assert lines[0] == "stage,inner_iter,objective,data_term,prior_term,step"
    assert len(lines) == 1 + 3  # header + k=0 row + 2 steps


def test_tv_zero_lambda_equals_plain_descent(rng):
    op = random_operator(rng, 5, 5, 3, step=1)
    y = op.forward(random_cube(rng, 3, 5, 5))
    xr_tv, _ = tv_baseline(y, op, lam=0.0, iters=12, sweeps=1)
    cfg = SolverConfig(stages=1, inner_steps=12, prior=ScalePrior.constant(0.0), q=3)
    xr_gsm, _ = run(y, op, cfg)
    assert xr_tv.data.tobytes() == xr_gsm.data.tobytes()


def test_tv_recovers_constant(rng):
    # the combined objective is globally minimized by the constant itself
    const = HsiCube(np.full((3, 12, 12), 0.6, dtype=np.float32))
    op = ForwardOperator(random_mask(12, 12, seed=9), bands=3, step=2)
    y = op.forward(const)
    xr, _ = tv_baseline(y, op, lam=0.1, iters=400, sweeps=2)
    assert np.abs(xr.data - 0.6).max() <= 1e-3


def test_tv_trace_monotone(rng):
    scene = generate_scene(SceneSpec(14, 14, 3, blobs=3, seed=51))
    op = ForwardOperator(random_mask(14, 14, seed=52), bands=3, step=1)
    y = op.forward(scene)
    _, trace = tv_baseline(y, op, lam=0.05, iters=25, sweeps=2)
    obj = trace.objectives()
    assert (np.diff(obj) <= 0).all()


def test_config_validation():
    with pytest.raises(Exception):
        SolverConfig(stages=0)
    with pytest.raises(Exception):
        SolverConfig(beta=1.0)
    with pytest.raises(Exception):
        SolverConfig(delta0=0.0)
    with pytest.raises(Exception):
        SolverConfig(init="bogus")
