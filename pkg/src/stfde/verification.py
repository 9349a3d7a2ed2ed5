"""Self-contained oracle and invariant checks behind the `verify` subcommand.

Each check prints one line

    CHECK <name> <pass|fail> <observed> <expected> <tol>

and the suite exits nonzero if any hard check fails.  The mild-solution
consistency comparison is a diagnostic with a deliberately loose factor; it
guards against gross convention errors, not discretization accuracy.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.integrate
import scipy.linalg
from scipy.special import gammaln

from .fem import build_space, generalized_eigs, l2_norm, l2_project, prolong, sine_load
from .mlf import mittag_leffler
from .noise import (
    NoiseModel,
    StreamKey,
    coarsen_increments,
    kl_load_matrix,
    noise_load,
    sample_increments,
)
from .quadrature import conv_quad, gl_weights
from .reference import (
    ModalProblem,
    kernel_E,
    kernel_Ebar,
    modal_recursion,
    probe_grid,
    smoothing_probe,
)
from .stepper import ModelConfig, solve_trajectory
from .studies import predicted_rates

__all__ = ["run_checks"]


class _Suite:
    def __init__(self, out):
        self.out = out
        self.failures = 0

    def check(self, name, observed, expected, tol):
        ok = abs(observed - expected) <= tol
        if not ok:
            self.failures += 1
        self.out.write(
            f"CHECK {name} {'pass' if ok else 'fail'} "
            f"{observed:.6e} {expected:.6e} {tol:.1e}\n"
        )

    def check_below(self, name, observed, tol):
        self.check(name, observed, 0.0, tol)


def _weights_gamma_oracle(beta, count):
    """|b_j| = |Gamma(j - beta) / (Gamma(-beta) Gamma(j+1))| via log-Gamma,
    valid for non-integer beta in (-1,1)."""
    j = np.arange(count + 1, dtype=float)
    mag = np.exp(gammaln(j - beta) - gammaln(j + 1.0) - gammaln(-beta))
    mag[0] = 1.0
    return mag


def run_checks(out) -> int:
    """Run every check, writing one line each; returns the failure count."""
    s = _Suite(out)

    # --- convolution weights -------------------------------------------------
    w = gl_weights(0.5, 2).weights
    s.check_below("weights_binomial_half", float(np.max(np.abs(w - [1.0, -0.5, -0.125]))), 1e-15)

    # float64 log-Gamma carries ~5e-13 of its own conditioning noise at
    # j = 512; the exact-precision comparison at 1e-12 lives in the test suite
    for beta in (0.5, -0.5, 0.9, -0.9):
        w = gl_weights(beta, 512).weights
        oracle = _weights_gamma_oracle(beta, 512)
        rel = np.max(np.abs(np.abs(w) - oracle) / oracle)
        s.check_below(f"weights_gamma_oracle_beta_{beta}", float(rel), 3e-12)

    wa = gl_weights(0.5, 512).weights
    wb = gl_weights(-0.5, 512).weights
    conv = np.convolve(wa, wb)[:513]
    impulse = np.zeros(513)
    impulse[0] = 1.0
    s.check_below("weights_conv_inverse", float(np.max(np.abs(conv - impulse))), 1e-12)

    g = 0.5
    wsum = np.cumsum(gl_weights(-g, 256).weights)
    n = np.arange(257, dtype=float)
    closed = np.exp(gammaln(n + 1 + g) - gammaln(1 + g) - gammaln(n + 1))
    s.check_below("weights_sum_rule", float(np.max(np.abs(wsum - closed) / closed)), 1e-10)

    N = 256
    table = gl_weights(-g, N, tau=1.0 / N)
    vals = conv_quad(table, np.ones(N + 1))
    exact = 1.0 / math.gamma(1.0 + g)
    s.check_below("gl_integral_of_one", abs(vals[-1] - exact) / exact, 1.5 / N)

    # --- Mittag-Leffler ------------------------------------------------------
    xs = np.linspace(0.0, 50.0, 101)
    err = max(abs(mittag_leffler(1.0, 1.0, -x) - math.exp(-x)) for x in xs)
    s.check_below("mlf_exponential", err, 1e-10)

    s.check(
        "mlf_erfc_closed_form",
        mittag_leffler(0.5, 1.0, -1.0),
        math.exp(1.0) * math.erfc(1.0),
        1e-8,
    )

    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        a = rng.uniform(0.15, 1.0)
        b = rng.uniform(0.4, 2.0)
        x = -rng.uniform(0.0, 60.0)
        lhs = mittag_leffler(a, b, x)
        rhs = 1.0 / math.gamma(b) + x * mittag_leffler(a, a + b, x)
        worst = max(worst, abs(lhs - rhs))
    s.check_below("mlf_recurrence", worst, 1e-9)

    # --- FEM -----------------------------------------------------------------
    space = build_space(16)
    eig = generalized_eigs(space)
    h = space.h
    jj = np.arange(1, 16, dtype=float)
    lam_closed = (6.0 / h**2) * (1.0 - np.cos(jj * np.pi * h)) / (2.0 + np.cos(jj * np.pi * h))
    s.check_below(
        "fem_pencil_eigenvalues",
        float(np.max(np.abs(eig.values - lam_closed) / lam_closed)),
        1e-9,
    )

    hat = np.zeros(space.dim)
    hat[4] = 1.0
    def hat_fn(x):
        return np.interp(x, np.concatenate(([0.0], space.nodes, [1.0])),
                         np.concatenate(([0.0], hat, [0.0])))
    s.check_below(
        "fem_projection_identity",
        float(np.max(np.abs(l2_project(space, hat_fn) - hat))),
        1e-13,
    )

    fine = build_space(64)
    v = np.sin(np.pi * space.nodes)
    s.check(
        "fem_prolong_isometry",
        l2_norm(fine, prolong(v, space, fine)),
        l2_norm(space, v),
        1e-13,
    )

    # --- modal equivalence (core correctness gate, desk size) ---------------
    space = build_space(32)
    eig = generalized_eigs(space)
    model = NoiseModel(m=2.0, L=space.dim)
    cfg = ModelConfig(0.6, 0.5, 1.0, 64)
    incs = sample_increments(model, cfg.N, cfg.tau, StreamKey(7, 0))
    res = solve_trajectory(cfg, space, model, incs)
    loads = kl_load_matrix(model, space) @ incs.increments
    q = eig.vectors.T @ loads
    coeffs = res.states @ space.apply_mass(eig.vectors)
    worst = 0.0
    for j in range(space.dim):
        u_modal = modal_recursion(cfg, eig.values[j], q[j])
        worst = max(worst, float(np.max(np.abs(u_modal - coeffs[:, j]))))
    s.check_below("modal_equivalence", worst, 1e-9)

    # --- spectral kernels ----------------------------------------------------
    s.check("kernel_E_at_zero", kernel_E(ModalProblem(math.pi**2, 0.5, 0.5), 0.0), 1.0, 0.0)
    lam = math.pi**2
    s.check(
        "kernel_E_heat_limit",
        kernel_E(ModalProblem(lam, 1.0, 0.0), 0.1),
        math.exp(-lam * 0.1),
        1e-12,
    )

    # heat semigroup vs dense matrix exponential at alpha = 1
    space16 = build_space(16)
    eig16 = generalized_eigs(space16)
    u0 = l2_project(space16, lambda x: x * (1.0 - x))
    t = 0.05
    damp = np.exp(-eig16.values * t)
    spectral = eig16.synth(damp * eig16.coeffs(space16, u0))
    Sd = np.diag(space16.stiff_diag) + np.diag(space16.stiff_off, 1) + np.diag(space16.stiff_off, -1)
    Bd = np.diag(space16.mass_diag) + np.diag(space16.mass_off, 1) + np.diag(space16.mass_off, -1)
    dense = scipy.linalg.expm(-t * np.linalg.solve(Bd, Sd)) @ u0
    s.check_below("heat_semigroup_vs_expm", float(np.max(np.abs(spectral - dense))), 1e-8)

    # --- smoothing exponents --------------------------------------------------
    space128 = build_space(128)
    eig128 = generalized_eigs(space128)
    alpha, gamma = 0.6, 0.5
    grid = probe_grid(eig128, alpha)
    for kappa in (0.0, 1.0, 2.0):
        slope = smoothing_probe(space128, eig128, alpha, gamma, kappa, grid)
        s.check(
            f"smoothing_slope_kappa_{kappa:g}",
            slope,
            (1.0 - kappa / 2.0) * alpha + gamma - 1.0,
            0.05,
        )

    # --- Laplace transform consistency of the forced kernel -------------------
    prob = ModalProblem(lam, alpha, gamma)
    for z in (1.0, 2.0, 5.0):
        val, _ = scipy.integrate.quad(
            lambda t: math.exp(-z * t) * kernel_Ebar(prob, t), 0.0, 60.0,
            limit=300, epsabs=1e-12, epsrel=1e-10,
        )
        target = z**(-gamma) / (z**alpha + lam)
        s.check_below(f"kernel_Ebar_laplace_z_{z:g}", abs(val - target) / target, 1e-4)

    # --- noise ----------------------------------------------------------------
    model = NoiseModel(m=2.0, L=31)
    a = sample_increments(model, 64, 1.0 / 64, StreamKey(42, 3))
    b = sample_increments(model, 64, 1.0 / 64, StreamKey(42, 3))
    s.check_below("noise_determinism", float(np.max(np.abs(a.increments - b.increments))), 0.0)

    big = sample_increments(NoiseModel(m=2.0, L=200), 100, 0.01, StreamKey(42, 0))
    n_entries = big.increments.size
    var = float(np.var(big.increments))
    se = 0.01 * math.sqrt(2.0 / (n_entries - 1))
    s.check("noise_increment_variance", var, 0.01, 3.0 * se)

    space8 = build_space(8)
    one_mode = NoiseModel(m=0.0, L=1)
    inc1 = sample_increments(one_mode, 4, 0.25, StreamKey(1, 1))
    g1 = noise_load(one_mode, inc1, 2, space8)
    s.check_below(
        "noise_load_single_mode",
        float(np.max(np.abs(g1 - inc1.increments[0, 1] * sine_load(space8, 1)))),
        1e-14,
    )

    fine_incs = sample_increments(model, 64, 1.0 / 64, StreamKey(5, 2))
    coarse = coarsen_increments(fine_incs, 8)
    s.check_below(
        "coarsen_preserves_path",
        float(np.max(np.abs(coarse.increments.sum(axis=1) - fine_incs.increments.sum(axis=1)))),
        1e-12,
    )

    # E || P_h dW ||^2 / tau against the modal identity, 1e4 samples
    space32 = build_space(32)
    model32 = NoiseModel(m=2.0, L=space32.dim)
    B = kl_load_matrix(model32, space32)
    draws = sample_increments(model32, 400, 0.01, StreamKey(9, 0))
    loads = B @ draws.increments
    total = 0.0
    for k in range(400):
        c = space32.mass_solve(loads[:, k])
        total += float(np.dot(c, loads[:, k]))
    observed = total / 400 / 0.01
    target = 0.0
    for ell in range(1, space32.dim + 1):
        pe = space32.mass_solve(sine_load(space32, ell))
        target += ell**-2.0 * l2_norm(space32, pe) ** 2
    s.check("noise_projected_energy", observed, target, 0.05 * target)

    # --- mild-solution diagnostic (loose by design) ---------------------------
    space8 = build_space(8)
    eig8 = generalized_eigs(space8)
    model8 = NoiseModel(m=2.0, L=space8.dim)
    cfg8 = ModelConfig(0.6, 0.5, 1.0, 64)
    incs8 = sample_increments(model8, cfg8.N, cfg8.tau, StreamKey(11, 0))
    u_disc = solve_trajectory(cfg8, space8, model8, incs8).final
    loads8 = kl_load_matrix(model8, space8) @ incs8.increments
    t_end = cfg8.T
    conv = np.zeros(space8.dim)
    for k in range(1, cfg8.N + 1):
        tk = t_end - (k - 1) * cfg8.tau
        kern = np.array(
            [kernel_Ebar(ModalProblem(l, cfg8.alpha, cfg8.gamma), tk) for l in eig8.values]
        )
        conv += eig8.synth(kern * (eig8.vectors.T @ loads8[:, k - 1]))
    scale = cfg8.tau ** min(1.0, cfg8.alpha + cfg8.gamma - 0.5)
    s.check_below(
        "mild_consistency_diagnostic",
        l2_norm(space8, u_disc - conv),
        10.0 * scale,
    )

    # --- configuration guard ---------------------------------------------------
    try:
        ModelConfig(0.2, 0.3, 1.0, 10)
        guard = 1.0
    except Exception:
        guard = 0.0
    s.check_below("config_rejects_alpha_gamma_boundary", guard, 0.0)

    try:
        predicted_rates(0.2, 0.3)
        guard = 1.0
    except Exception:
        guard = 0.0
    s.check_below("rates_reject_alpha_gamma_boundary", guard, 0.0)

    return s.failures
