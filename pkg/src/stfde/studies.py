"""Monte Carlo convergence studies with common random numbers.

A study solves every refinement level and a finer reference on the *same*
Brownian paths (temporal mode: coarsened increments of one fine path;
spatial mode: per-mode substreams so coarser meshes see a prefix of the
reference's modes), then estimates

    strong error:  sqrt( mean_p || u_ref - u_level ||^2 )  at t*,
    weak error:    | mean_p Phi(u_ref) - mean_p Phi(u_level) |,
                   Phi(v) = integral v^2,

and fits log-log rates against the step size or the mesh size.  Trajectories
are the unit of parallelism; accumulation is in trajectory order, so reports
are bit-identical for any worker count.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError, DomainError
from .fem import build_space, l2_norm, prolong
from .noise import (
    IncrementMatrix,
    NoiseModel,
    StreamKey,
    coarsen_increments,
    sample_increments,
    truncate_modes,
)
from .stepper import ModelConfig, solve_trajectory, weak_functional

__all__ = [
    "Rate",
    "RatePrediction",
    "predicted_rates",
    "FitResult",
    "fit_rate",
    "strong_error",
    "weak_error",
    "StudyPlan",
    "ErrorReport",
    "run_study",
    "holder_probe",
]


# ---------------------------------------------------------------------------
# theoretical rates

@dataclass(frozen=True)
class Rate:
    """A convergence exponent; open=True means the bound holds for every
    exponent strictly below `exponent` (an epsilon-corrected rate)."""

    exponent: float
    open: bool = False

    def __str__(self) -> str:
        suffix = "-eps" if self.open else ""
        return f"{self.exponent:g}{suffix}"


@dataclass(frozen=True)
class RatePrediction:
    strong_time: Rate
    strong_space: Rate
    weak_time: Rate
    weak_space: Rate
    u0_zero: bool = True


def predicted_rates(
    alpha: float, gamma: float, s: float = 0.0, u0_zero: bool = True
) -> RatePrediction:
    """Theoretical strong/weak convergence exponents in tau and h.

    s is the noise regularity index: the smallest s >= 0 with
    || A^{-s/2} Q^{1/2} ||_HS finite (0 for trace class noise).  With smooth
    nonzero initial data the homogeneous part adds O(tau + h^2) errors, which
    never lowers the exponents below; u0_zero is recorded for context only.

    For rough noise (s > 0) the weak temporal exponent follows the
    duality-pairing bound 2((1 - s/2) alpha + gamma) - 1; at s = 0 the
    sharper alpha + gamma holds.
    """
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha must lie in (0,1], got {alpha}")
    if not 0.0 <= gamma <= 1.0:
        raise DomainError(f"gamma must lie in [0,1], got {gamma}")
    if alpha + gamma <= 0.5:
        raise DomainError(
            f"well-posedness requires alpha + gamma > 1/2, got {alpha}+{gamma}"
        )
    if not 0.0 <= s <= 1.0:
        raise DomainError(f"noise regularity index must lie in [0,1], got {s}")
    smax = 2.0 - (1.0 - 2.0 * gamma) / alpha
    if s >= smax:
        raise DomainError(
            f"noise too rough: require s < 2 - (1-2 gamma)/alpha = {smax:g}, got {s}"
        )

    eta = (1.0 - s / 2.0) * alpha + gamma - 0.5
    strong_time = Rate(min(1.0, eta), open=(eta == 1.0))

    deficit = max(0.0, (1.0 - 2.0 * gamma) / alpha)
    strong_space = Rate(max(0.0, 2.0 - s - deficit), open=(gamma <= 0.5))

    w_inf = (1.0 - s / 2.0) * alpha + gamma   # p -> infinity limit of eta_weak
    if s == 0.0:
        base = alpha + gamma
    else:
        base = 2.0 * w_inf - 1.0
    if base > 1.0:
        weak_time = Rate(1.0, open=False)
    else:
        weak_time = Rate(max(0.0, base), open=True)

    if w_inf >= 1.0:
        weak_space = Rate(2.0 - s, open=(gamma == 0.0))
    else:
        inv_pmax = 1.0 - w_inf
        if gamma > inv_pmax:
            weak_space = Rate(2.0 - s, open=False)
        elif gamma == inv_pmax:
            weak_space = Rate(2.0 - s, open=True)
        else:
            weak_space = Rate(
                max(0.0, 2.0 - s - (2.0 / alpha) * (inv_pmax - gamma)), open=True
            )

    return RatePrediction(strong_time, strong_space, weak_time, weak_space, u0_zero)


# ---------------------------------------------------------------------------
# error estimators and rate fitting

@dataclass(frozen=True)
class FitResult:
    rate: float
    pair_ratios: tuple

    def __float__(self) -> float:
        return self.rate


def fit_rate(errors, grid) -> FitResult:
    """Least-squares slope of log(error) against log(1/N) or log(h).

    grid holds the refinement parameter (N or M); both temporal and spatial
    fits regress on -log(grid).  Pairwise log2 ratios of consecutive errors
    are reported for diagnostics.
    """
    errors = np.asarray(errors, dtype=float)
    grid = np.asarray(grid, dtype=float)
    if errors.shape[0] < 2:
        raise ValueError("need at least two levels to fit a rate")
    if np.any(errors <= 0.0):
        raise ValueError("errors must be positive for a log-log fit")
    slope = np.polyfit(-np.log(grid), np.log(errors), 1)[0]
    ratios = tuple(np.log2(errors[:-1] / errors[1:]) / np.log2(grid[1:] / grid[:-1]))
    return FitResult(rate=float(slope), pair_ratios=ratios)


def strong_error(ref_finals, level_finals, space_fine) -> float:
    """RMS of the reference-space L2 distance over CRN-paired trajectories.

    Both inputs are (P, dim) arrays in the reference space (level solutions
    already prolonged there).
    """
    ref = np.asarray(ref_finals, dtype=float)
    lev = np.asarray(level_finals, dtype=float)
    if ref.shape != lev.shape:
        raise ValueError(f"shape mismatch {ref.shape} vs {lev.shape}")
    sq = [l2_norm(space_fine, d) ** 2 for d in ref - lev]
    return float(np.sqrt(np.mean(sq)))


def weak_error(ref_finals, level_finals, ref_space, level_space) -> float:
    """| mean Phi(ref) - mean Phi(level) |, each functional in its own space."""
    phi_ref = np.mean([weak_functional(ref_space, v) for v in ref_finals])
    phi_lev = np.mean([weak_functional(level_space, v) for v in level_finals])
    return float(abs(phi_ref - phi_lev))


# ---------------------------------------------------------------------------
# study driver

@dataclass(frozen=True)
class StudyPlan:
    """One convergence experiment.

    temporal mode: `levels` and `reference` are step counts on a fixed mesh
    of `mesh` intervals, horizon t_star.  spatial mode: `levels` and
    `reference` are interval counts with `steps` time steps each.  The noise
    truncation is the FEM dimension unless L_override is set.
    """

    mode: str
    alpha: float
    gamma: float
    m: float
    levels: tuple
    reference: int
    trajectories: int = 100
    t_star: float = 0.01
    seed: int = 42
    mesh: int = 100
    steps: int = 200
    s: float = 0.0
    L_override: Optional[int] = None
    workers: int = 1
    u0: object = None            # passed through to ModelConfig
    zero_noise: bool = False     # deterministic sub-study override

    def __post_init__(self):
        if self.mode == "holder":
            raise ConfigurationError("holder studies run through holder_probe")
        if self.mode not in ("temporal", "spatial"):
            raise ConfigurationError(f"unknown study mode {self.mode!r}")
        levels = tuple(int(v) for v in self.levels)
        object.__setattr__(self, "levels", levels)
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ConfigurationError(f"levels must be strictly increasing: {levels}")
        if self.reference <= levels[-1]:
            raise ConfigurationError(
                f"reference {self.reference} must be finer than the last level"
            )
        bad = [v for v in levels if self.reference % v != 0]
        if bad:
            raise ConfigurationError(
                f"levels {bad} do not divide the reference {self.reference}"
            )
        if self.trajectories < 1:
            raise ConfigurationError("need at least one trajectory")
        if self.t_star <= 0:
            raise ConfigurationError(f"evaluation time must be positive, got {self.t_star}")


def _sample_or_zero(plan: StudyPlan, model: NoiseModel, N: int, tau: float, p: int):
    if plan.zero_noise:
        return IncrementMatrix(np.zeros((model.L, N)), tau, StreamKey(plan.seed, p))
    return sample_increments(model, N, tau, StreamKey(plan.seed, p))


def _temporal_trajectory(plan: StudyPlan, p: int):
    space = build_space(plan.mesh)
    L = plan.L_override or space.dim
    model = NoiseModel(m=plan.m, L=L)
    T = plan.t_star
    fine = _sample_or_zero(plan, model, plan.reference, T / plan.reference, p)
    ref_cfg = ModelConfig(plan.alpha, plan.gamma, T, plan.reference, u0=plan.u0)
    ref = solve_trajectory(ref_cfg, space, model, fine).final
    diffs = np.empty(len(plan.levels))
    phis = np.empty(len(plan.levels))
    for i, N in enumerate(plan.levels):
        incs = coarsen_increments(fine, plan.reference // N)
        cfg = ModelConfig(plan.alpha, plan.gamma, T, N, u0=plan.u0)
        u = solve_trajectory(cfg, space, model, incs).final
        diffs[i] = l2_norm(space, ref - u) ** 2
        phis[i] = weak_functional(space, u)
    return diffs, phis, weak_functional(space, ref)


def _spatial_trajectory(plan: StudyPlan, p: int):
    ref_space = build_space(plan.reference)
    ref_model = NoiseModel(m=plan.m, L=plan.L_override or ref_space.dim)
    T = plan.t_star
    N = plan.steps
    fine = _sample_or_zero(plan, ref_model, N, T / N, p)
    cfg = ModelConfig(plan.alpha, plan.gamma, T, N, u0=plan.u0)
    ref = solve_trajectory(cfg, ref_space, ref_model, fine).final
    diffs = np.empty(len(plan.levels))
    phis = np.empty(len(plan.levels))
    for i, M in enumerate(plan.levels):
        space = build_space(M)
        model = NoiseModel(m=plan.m, L=space.dim)
        incs = truncate_modes(fine, space.dim)
        u = solve_trajectory(cfg, space, model, incs).final
        diffs[i] = l2_norm(ref_space, ref - prolong(u, space, ref_space)) ** 2
        phis[i] = weak_functional(space, u)
    return diffs, phis, weak_functional(ref_space, ref)


_TRAJECTORY_FNS = {"temporal": _temporal_trajectory, "spatial": _spatial_trajectory}


def _run_trajectory(args):
    plan, p = args
    return _TRAJECTORY_FNS[plan.mode](plan, p)


@dataclass
class ErrorReport:
    plan: StudyPlan
    strong_errors: np.ndarray
    weak_errors: np.ndarray
    weak_signed: np.ndarray
    strong_fit: FitResult
    weak_fit: FitResult
    predicted: RatePrediction
    wall_time: float

    def to_csv(self) -> str:
        plan = self.plan
        lines = ["level,param,strong_error,weak_error,strong_ratio,weak_ratio"]
        for i, param in enumerate(plan.levels):
            sr = f"{self.strong_fit.pair_ratios[i-1]:.16e}" if i > 0 else ""
            wr = f"{self.weak_fit.pair_ratios[i-1]:.16e}" if i > 0 else ""
            lines.append(
                f"{i + 1},{param},{self.strong_errors[i]:.16e},"
                f"{self.weak_errors[i]:.16e},{sr},{wr}"
            )
        if plan.mode == "temporal":
            pred_s, pred_w = self.predicted.strong_time, self.predicted.weak_time
        else:
            pred_s, pred_w = self.predicted.strong_space, self.predicted.weak_space
        lines.append(
            "fitted_strong_rate,fitted_weak_rate,predicted_strong,"
            "predicted_weak,trajectories,seed"
        )
        lines.append(
            f"{self.strong_fit.rate:.16e},{self.weak_fit.rate:.16e},"
            f"{pred_s},{pred_w},{plan.trajectories},{plan.seed}"
        )
        return "\n".join(lines) + "\n"


def run_study(plan: StudyPlan) -> ErrorReport:
    """Execute a StudyPlan: CRN trajectories, all levels plus reference.

    Per-trajectory statistics are reduced in trajectory order regardless of
    the worker pool, so a (plan, seed) pair determines the report bitwise.
    """
    t0 = time.time()
    P = plan.trajectories
    nlev = len(plan.levels)
    sq_sums = np.zeros(nlev)
    phi_sums = np.zeros(nlev)
    phi_ref_sum = 0.0

    args = [(plan, p) for p in range(P)]
    if plan.workers > 1:
        with ProcessPoolExecutor(max_workers=plan.workers) as ex:
            results = ex.map(_run_trajectory, args, chunksize=max(1, P // (4 * plan.workers)))
            for diffs, phis, phi_ref in results:
                sq_sums += diffs
                phi_sums += phis
                phi_ref_sum += phi_ref
    else:
        for a in args:
            diffs, phis, phi_ref = _run_trajectory(a)
            sq_sums += diffs
            phi_sums += phis
            phi_ref_sum += phi_ref

    strong = np.sqrt(sq_sums / P)
    weak_signed = phi_ref_sum / P - phi_sums / P
    weak = np.abs(weak_signed)
    grid = np.asarray(plan.levels, dtype=float)
    strong_fit = fit_rate(strong, grid)
    weak_fit = fit_rate(weak, grid)
    predicted = predicted_rates(
        plan.alpha, plan.gamma, plan.s, u0_zero=plan.u0 in (None, "zero")
    )
    return ErrorReport(
        plan=plan,
        strong_errors=strong,
        weak_errors=weak,
        weak_signed=weak_signed,
        strong_fit=strong_fit,
        weak_fit=weak_fit,
        predicted=predicted,
        wall_time=time.time() - t0,
    )


# ---------------------------------------------------------------------------
# temporal Hoelder regularity probe

def holder_probe(
    alpha: float,
    gamma: float,
    m: float,
    mesh: int,
    pairs,
    trajectories: int,
    steps: int = 1024,
    T: float = 1.0,
    seed: int = 42,
) -> float:
    """Fitted exponent of E||u(t2) - u(t1)||^2 against t2 - t1, u0 = 0.

    Expected 2(alpha + gamma - 1/2) for trace class noise.  Every t1, t2
    must lie on the step grid T/steps.
    """
    tau = T / steps
    idx = []
    for t1, t2 in pairs:
        i1, i2 = round(t1 / tau), round(t2 / tau)
        if abs(i1 * tau - t1) > 1e-9 * T or abs(i2 * tau - t2) > 1e-9 * T:
            raise ConfigurationError(f"pair ({t1},{t2}) is not on the grid tau={tau}")
        idx.append((i1, i2))
    deltas = np.array([(i2 - i1) * tau for i1, i2 in idx])
    if np.any(deltas <= 0):
        raise ConfigurationError("need t2 > t1 in every pair")

    space = build_space(mesh)
    model = NoiseModel(m=m, L=space.dim)
    cfg = ModelConfig(alpha, gamma, T, steps)
    sq = np.zeros(len(idx))
    for p in range(trajectories):
        incs = sample_increments(model, steps, tau, StreamKey(seed, p))
        states = solve_trajectory(cfg, space, model, incs).states
        for j, (i1, i2) in enumerate(idx):
            sq[j] += l2_norm(space, states[i2] - states[i1]) ** 2
    sq /= trajectories
    return float(np.polyfit(np.log(deltas), np.log(sq), 1)[0])
