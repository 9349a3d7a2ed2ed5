"""Fully discrete scheme: algebraic identities, stability, linearity."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from stfde import (
    IncrementMatrix,
    ModelConfig,
    NoiseModel,
    StreamKey,
    build_space,
    generalized_eigs,
    l2_norm,
    sample_increments,
    solve_trajectory,
    weak_functional,
)
from stfde.errors import ConfigurationError
from stfde.noise import kl_load_matrix
from stfde.reference import modal_recursion


def zero_incs(L, N, tau):
    return IncrementMatrix(np.zeros((L, N)), tau, StreamKey(0, 0))


def test_config_validation():
    with pytest.raises(ConfigurationError, match="alpha"):
        ModelConfig(1.0, 0.5, 1.0, 4)
    with pytest.raises(ConfigurationError, match="1/2"):
        ModelConfig(0.2, 0.3, 1.0, 4)  # boundary alpha+gamma = 1/2 excluded
    with pytest.raises(ConfigurationError):
        ModelConfig(0.5, 1.5, 1.0, 4)
    with pytest.raises(ConfigurationError):
        ModelConfig(0.5, 0.5, 0.0, 4)
    with pytest.raises(ConfigurationError):
        ModelConfig(0.5, 0.5, 1.0, 0)
    cfg = ModelConfig(0.2, 0.31, 1.0, 4)
    assert cfg.tau == 0.25


def test_zero_data_zero_noise():
    sp = build_space(16)
    model = NoiseModel(m=2.0, L=sp.dim)
    cfg = ModelConfig(0.6, 0.5, 1.0, 12)
    res = solve_trajectory(cfg, sp, model, zero_incs(sp.dim, 12, cfg.tau))
    assert np.max(np.abs(res.states)) == 0.0


def test_initial_row_is_projection():
    sp = build_space(16)
    model = NoiseModel(m=2.0, L=sp.dim)
    cfg = ModelConfig(0.6, 0.5, 1.0, 4, u0="sinpi")
    incs = sample_increments(model, 4, cfg.tau, StreamKey(4, 0))
    res = solve_trajectory(cfg, sp, model, incs)
    from stfde import l2_project

    assert_allclose(res.states[0], l2_project(sp, lambda x: np.sin(np.pi * x)), atol=1e-14)
    assert np.all(np.isfinite(res.states))


def test_scheme_is_linear():
    sp = build_space(12)
    model = NoiseModel(m=2.0, L=sp.dim)
    cfg = ModelConfig(0.7, 0.4, 1.0, 10)
    w1 = sample_increments(model, 10, cfg.tau, StreamKey(1, 0))
    w2 = sample_increments(model, 10, cfg.tau, StreamKey(1, 1))
    rng = np.random.default_rng(0)
    u1 = rng.standard_normal(sp.dim)
    u2 = rng.standard_normal(sp.dim)

    r1 = solve_trajectory(ModelConfig(0.7, 0.4, 1.0, 10, u0=u1), sp, model, w1)
    r2 = solve_trajectory(ModelConfig(0.7, 0.4, 1.0, 10, u0=u2), sp, model, w2)
    combined = IncrementMatrix(w1.increments + w2.increments, cfg.tau, StreamKey(1, 2))
    r12 = solve_trajectory(ModelConfig(0.7, 0.4, 1.0, 10, u0=u1 + u2), sp, model, combined)
    assert np.max(np.abs(r1.states + r2.states - r12.states)) <= 1e-12

    # homogeneous scaling is exact
    d1 = solve_trajectory(
        ModelConfig(0.7, 0.4, 1.0, 10, u0=u1), sp, model, zero_incs(sp.dim, 10, cfg.tau)
    )
    d2 = solve_trajectory(
        ModelConfig(0.7, 0.4, 1.0, 10, u0=2.0 * u1), sp, model, zero_incs(sp.dim, 10, cfg.tau)
    )
    assert np.max(np.abs(2.0 * d1.states - d2.states)) <= 1e-12


@pytest.mark.parametrize("alpha,gamma", [(0.3, 0.9), (0.6, 0.5), (0.8, 0.3)])
def test_modal_equivalence(alpha, gamma):
    # matrix stepper and diagonalized scalar recursion are the same scheme
    sp = build_space(32)
    eig = generalized_eigs(sp)
    model = NoiseModel(m=2.0, L=sp.dim)
    cfg = ModelConfig(alpha, gamma, 1.0, 64)
    incs = sample_increments(model, cfg.N, cfg.tau, StreamKey(99, 1))
    res = solve_trajectory(cfg, sp, model, incs)
    loads = kl_load_matrix(model, sp) @ incs.increments
    q = eig.vectors.T @ loads
    coeffs = res.states @ sp.apply_mass(eig.vectors)
    for j in range(sp.dim):
        u_modal = modal_recursion(cfg, eig.values[j], q[j])
        assert np.max(np.abs(u_modal - coeffs[:, j])) <= 1e-9


def test_dimension_mismatch_rejected():
    sp = build_space(8)
    model = NoiseModel(m=2.0, L=sp.dim)
    cfg = ModelConfig(0.6, 0.5, 1.0, 8)
    wrong_steps = sample_increments(model, 4, cfg.T / 4, StreamKey(0, 0))
    with pytest.raises(ConfigurationError):
        solve_trajectory(cfg, sp, model, wrong_steps)
    wrong_tau = IncrementMatrix(np.zeros((sp.dim, 8)), 0.9 * cfg.tau, StreamKey(0, 0))
    with pytest.raises(ConfigurationError):
        solve_trajectory(cfg, sp, model, wrong_tau)


def test_weak_functional():
    sp = build_space(256)
    assert weak_functional(sp, np.zeros(sp.dim)) == 0.0
    v = np.sin(np.pi * sp.nodes)
    assert abs(weak_functional(sp, v) - l2_norm(sp, v) ** 2) <= 1e-14
    assert abs(weak_functional(sp, v) - 0.5) <= 1e-4


def test_no_blowup_trace_class():
    # scheme stability: sup-norm of trajectories bounded by 10x their median
    sp = build_space(32)
    model = NoiseModel(m=2.0, L=sp.dim)
    maxima = []
    for N in (40, 160, 640):
        cfg = ModelConfig(0.6, 0.5, 1.0, N)
        for p in range(100):
            incs = sample_increments(model, N, cfg.tau, StreamKey(123, p))
            res = solve_trajectory(cfg, sp, model, incs)
            maxima.append(max(l2_norm(sp, row) for row in res.states))
    maxima = np.array(maxima)
    assert np.max(maxima) <= 10.0 * np.median(maxima)
