"""Keyed Karhunen-Loeve increments: determinism, statistics, load vectors."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from stfde import (
    IncrementMatrix,
    NoiseModel,
    StreamKey,
    build_space,
    coarsen_increments,
    l2_norm,
    noise_load,
    sample_increments,
    sine_load,
)
from stfde.errors import ConfigurationError, DomainError
from stfde.noise import dump_increments, kl_load_matrix, load_increments, truncate_modes


def test_model_validation():
    with pytest.raises(DomainError):
        NoiseModel(m=-1.0, L=4)
    with pytest.raises(DomainError):
        NoiseModel(m=2.0, L=0)
    assert_allclose(NoiseModel(m=2.0, L=3).eigenvalues(), [1.0, 0.25, 1.0 / 9.0])


def test_shape_contract():
    incs = sample_increments(NoiseModel(m=2.0, L=3), 2, 0.5, StreamKey(1, 0))
    assert incs.increments.shape == (3, 2)


def test_same_key_bitwise_identical():
    model = NoiseModel(m=1.0, L=16)
    a = sample_increments(model, 64, 0.01, StreamKey(42, 5))
    b = sample_increments(model, 64, 0.01, StreamKey(42, 5))
    assert np.array_equal(a.increments, b.increments)


def test_mode_rows_stable_under_truncation_growth():
    small = sample_increments(NoiseModel(m=2.0, L=8), 32, 0.1, StreamKey(9, 2))
    big = sample_increments(NoiseModel(m=2.0, L=16), 32, 0.1, StreamKey(9, 2))
    assert np.array_equal(big.increments[:8], small.increments)
    assert np.array_equal(truncate_modes(big, 8).increments, small.increments)


def test_distinct_trajectories_uncorrelated():
    model = NoiseModel(m=0.0, L=100)
    a = sample_increments(model, 128, 0.01, StreamKey(42, 0)).increments.ravel()
    b = sample_increments(model, 128, 0.01, StreamKey(42, 1)).increments.ravel()
    rho = np.corrcoef(a, b)[0, 1]
    assert abs(rho) <= 0.05


def test_increment_statistics():
    tau = 0.02
    incs = sample_increments(NoiseModel(m=2.0, L=150), 100, tau, StreamKey(11, 0))
    flat = incs.increments.ravel()
    n = flat.size
    assert n >= 10_000
    se_mean = math.sqrt(tau / n)
    assert abs(flat.mean()) <= 3.0 * se_mean
    se_var = tau * math.sqrt(2.0 / (n - 1))
    assert abs(flat.var() - tau) <= 3.0 * se_var


def test_coarsen_identity_and_sums():
    fine = sample_increments(NoiseModel(m=2.0, L=5), 64, 0.25 / 64, StreamKey(3, 1))
    assert coarsen_increments(fine, 1) is fine
    coarse = coarsen_increments(fine, 8)
    assert coarse.N == 8
    assert coarse.tau == pytest.approx(fine.tau * 8, rel=1e-15)
    assert_allclose(
        coarse.increments.sum(axis=1), fine.increments.sum(axis=1), atol=1e-14
    )


def test_coarsen_variance():
    fine = sample_increments(NoiseModel(m=0.0, L=60), 256, 1e-3, StreamKey(8, 0))
    coarse = coarsen_increments(fine, 4)
    flat = coarse.increments.ravel()
    target = 4e-3
    se = target * math.sqrt(2.0 / (flat.size - 1))
    assert abs(flat.var() - target) <= 3.0 * se


def test_coarsen_rejects_non_divisible():
    fine = sample_increments(NoiseModel(m=2.0, L=2), 10, 0.1, StreamKey(5, 0))
    with pytest.raises(ConfigurationError):
        coarsen_increments(fine, 3)


def test_noise_load_zero_and_single_mode():
    sp = build_space(8)
    model = NoiseModel(m=0.0, L=1)
    zero = IncrementMatrix(np.zeros((1, 4)), 0.25, StreamKey(0, 0))
    assert_allclose(noise_load(model, zero, 1, sp), np.zeros(sp.dim), atol=0)

    one = IncrementMatrix(np.array([[0.0, 1.0, 0.0, 0.0]]), 0.25, StreamKey(0, 0))
    assert_allclose(noise_load(model, one, 2, sp), sine_load(sp, 1), atol=1e-15)


def test_noise_load_step_zero_rejected():
    sp = build_space(8)
    model = NoiseModel(m=2.0, L=2)
    incs = sample_increments(model, 4, 0.25, StreamKey(1, 0))
    with pytest.raises(ValueError, match="step"):
        noise_load(model, incs, 0, sp)


def test_projected_increment_energy():
    # E || P_h dW ||^2 / tau against sum_l gamma_l || P_h e_l ||^2, within 5%
    sp = build_space(32)
    model = NoiseModel(m=2.0, L=sp.dim)
    B = kl_load_matrix(model, sp)
    draws = sample_increments(model, 400, 0.01, StreamKey(21, 0))
    loads = B @ draws.increments
    total = 0.0
    for k in range(draws.N):
        c = sp.mass_solve(loads[:, k])
        total += float(np.dot(c, loads[:, k]))
    observed = total / draws.N / draws.tau

    target = 0.0
    for ell in range(1, model.L + 1):
        pe = sp.mass_solve(sine_load(sp, ell))
        target += ell**-2.0 * l2_norm(sp, pe) ** 2
    assert abs(observed - target) <= 0.05 * target


def test_dump_restore_round_trip(tmp_path):
    incs = sample_increments(NoiseModel(m=1.5, L=6), 20, 0.05, StreamKey(77, 4))
    path = tmp_path / "incs.bin"
    dump_increments(incs, path)
    back = load_increments(path)
    assert np.array_equal(back.increments, incs.increments)
    assert back.tau == incs.tau
    assert back.key == incs.key
    raw = path.read_bytes()
    assert raw[:5] == b"SFNZ1"


def test_load_rejects_bad_magic(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"NOPE!" + bytes(40))
    with pytest.raises(ValueError, match="magic"):
        load_increments(path)
