"""Command-line interface: config parsing and subcommand orchestration.

Configuration is layered: built-in defaults, then a flat `key = value` file
given with --config, then explicit flags.  Every key is validated against
the subcommand's schema before any compute; unknown keys are rejected.
Exit codes: 0 success, 1 verification failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import os
import sys

from .errors import ConfigurationError, DomainError
from .fem import build_space
from .noise import NoiseModel, StreamKey, sample_increments
from .quadrature import gl_weights
from .stepper import ModelConfig, solve_trajectory
from .studies import StudyPlan, holder_probe, predicted_rates, run_study
from .verification import run_checks

__all__ = ["main", "parse_config"]

_WORKERS_ENV = "STFDE_WORKERS"

_DEFAULTS = {
    "alpha": 0.5,
    "gamma": 0.5,
    "m": 2.0,
    "seed": 42,
    "trajectories": 100,
}


def _to_bool(text):
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# subcommand -> {key: converter}
_SCHEMAS = {
    "weights": {"beta": float, "count": int},
    "solve": {
        "alpha": float, "gamma": float, "m": float, "T": float, "steps": int,
        "mesh": int, "L": int, "seed": int, "trajectory": int, "u0": str,
    },
    "verify": {"seed": int},
    "converge-time": {
        "alpha": float, "gamma": float, "m": float, "s": float, "t_star": float,
        "mesh": int, "levels": str, "reference": int, "trajectories": int,
        "seed": int,
    },
    "converge-space": {
        "alpha": float, "gamma": float, "m": float, "s": float, "t_star": float,
        "steps": int, "levels": str, "reference": int, "trajectories": int,
        "seed": int,
    },
    "holder": {
        "alpha": float, "gamma": float, "m": float, "mesh": int, "steps": int,
        "T": float, "t1": float, "deltas": str, "trajectories": int, "seed": int,
    },
    "rates": {"alpha": float, "gamma": float, "s": float, "u0_zero": _to_bool},
}

_SUB_DEFAULTS = {
    "weights": {},
    "solve": {"T": 1.0, "steps": 200, "mesh": 100, "trajectory": 0, "u0": "zero"},
    "verify": {},
    "converge-time": {
        "s": 0.0, "t_star": 0.01, "mesh": 100,
        "levels": "40,80,160,320,640", "reference": 3200,
    },
    "converge-space": {
        "s": 0.0, "t_star": 1.0, "steps": 200,
        "levels": "10,20,40,80,160", "reference": 320,
    },
    "holder": {
        "mesh": 64, "steps": 1024, "T": 1.0, "t1": 0.5,
        "deltas": "0.25,0.125,0.0625,0.03125",
    },
    "rates": {"s": 0.0, "u0_zero": True},
}

_REQUIRED = {"weights": ("beta", "count")}


def _read_config_file(path, schema):
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(
                    f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}"
                )
            key, _, text = line.partition("=")
            key, text = key.strip(), text.strip()
            if key not in schema:
                raise ConfigurationError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                values[key] = schema[key](text)
            except ValueError as exc:
                raise ConfigurationError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
    return values


def parse_config(subcommand, config_path=None, overrides=None):
    """Layer defaults, file values, then flag overrides; validate keys."""
    schema = _SCHEMAS[subcommand]
    params = {k: v for k, v in _DEFAULTS.items() if k in schema}
    params.update(_SUB_DEFAULTS.get(subcommand, {}))
    if config_path:
        params.update(_read_config_file(config_path, schema))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in schema:
            raise ConfigurationError(f"unknown key {key!r} for {subcommand}")
        params[key] = schema[key](value) if isinstance(value, str) else value
    for key in _REQUIRED.get(subcommand, ()):
        if key not in params:
            raise ConfigurationError(f"{subcommand} requires --{key}")
    if "alpha" in params and "gamma" in params:
        if params["alpha"] + params["gamma"] <= 0.5:
            raise ConfigurationError(
                "well-posedness requires alpha + gamma > 1/2; got "
                f"alpha={params['alpha']}, gamma={params['gamma']}"
            )
    return params


def _resolve_workers(flag_value):
    if flag_value is not None:
        return max(1, int(flag_value))
    env = os.environ.get(_WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _parse_levels(text):
    try:
        levels = tuple(int(v) for v in str(text).split(",") if v.strip())
    except ValueError:
        raise ConfigurationError(f"bad level list {text!r}") from None
    if not levels:
        raise ConfigurationError("empty level list")
    return levels


def _emit(text, output):
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommand runners

def _run_weights(params, output, workers):
    table = gl_weights(params["beta"], params["count"])
    _emit("".join(f"{w:.16e}\n" for w in table.weights), output)
    return 0


def _run_solve(params, output, workers):
    space = build_space(params["mesh"])
    L = params.get("L") or space.dim
    model = NoiseModel(m=params["m"], L=L)
    cfg = ModelConfig(
        params["alpha"], params["gamma"], params["T"], params["steps"], u0=params["u0"]
    )
    incs = sample_increments(
        model, cfg.N, cfg.tau, StreamKey(params["seed"], params["trajectory"])
    )
    res = solve_trajectory(cfg, space, model, incs)
    header = "t," + ",".join(f"x_{i}" for i in range(1, space.dim + 1))
    lines = [header]
    for n in range(cfg.N + 1):
        t = n * cfg.tau
        lines.append(f"{t:.16e}," + ",".join(f"{v:.16e}" for v in res.states[n]))
    _emit("\n".join(lines) + "\n", output)
    return 0


def _run_verify(params, output, workers):
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            failures = run_checks(fh)
    else:
        failures = run_checks(sys.stdout)
    return 1 if failures else 0


def _run_study_mode(mode):
    def runner(params, output, workers):
        plan = StudyPlan(
            mode=mode,
            alpha=params["alpha"],
            gamma=params["gamma"],
            m=params["m"],
            levels=_parse_levels(params["levels"]),
            reference=params["reference"],
            trajectories=params["trajectories"],
            t_star=params["t_star"],
            seed=params["seed"],
            mesh=params.get("mesh", 100),
            steps=params.get("steps", 200),
            s=params["s"],
            workers=workers,
        )
        report = run_study(plan)
        _emit(report.to_csv(), output)
        return 0

    return runner


def _run_holder(params, output, workers):
    t1 = params["t1"]
    deltas = [float(v) for v in str(params["deltas"]).split(",") if v.strip()]
    pairs = [(t1, t1 + d) for d in deltas]
    exponent = holder_probe(
        params["alpha"], params["gamma"], params["m"], params["mesh"], pairs,
        params["trajectories"], steps=params["steps"], T=params["T"],
        seed=params["seed"],
    )
    expected = 2.0 * (params["alpha"] + params["gamma"] - 0.5)
    _emit(f"fitted_exponent,expected\n{exponent:.16e},{expected:.16e}\n", output)
    return 0


def _run_rates(params, output, workers):
    pred = predicted_rates(params["alpha"], params["gamma"], params["s"], params["u0_zero"])
    lines = [
        f"strong_temporal {pred.strong_time}",
        f"strong_spatial {pred.strong_space}",
        f"weak_temporal {pred.weak_time}",
        f"weak_spatial {pred.weak_space}",
    ]
    _emit("\n".join(lines) + "\n", output)
    return 0


_RUNNERS = {
    "weights": _run_weights,
    "solve": _run_solve,
    "verify": _run_verify,
    "converge-time": _run_study_mode("temporal"),
    "converge-space": _run_study_mode("spatial"),
    "holder": _run_holder,
    "rates": _run_rates,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="stfde",
        description="Stochastic time-fractional diffusion: solver and convergence lab",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, schema in _SCHEMAS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="flat key = value file")
        p.add_argument("--output", default=None, help="output path (default stdout)")
        p.add_argument("--workers", default=None, help="worker count (scheduling only)")
        for key in schema:
            p.add_argument(f"--{key}", default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    sub = args.subcommand
    overrides = {
        key: getattr(args, key.replace("-", "_"))
        for key in _SCHEMAS[sub]
        if getattr(args, key.replace("-", "_"), None) is not None
    }
    try:
        params = parse_config(sub, args.config, overrides)
        workers = _resolve_workers(args.workers)
        return _RUNNERS[sub](params, args.output, workers)
    except (ConfigurationError, DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
