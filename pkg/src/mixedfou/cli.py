"""Command line driver.

Every subcommand accepts --config FILE (flat ``key = value`` text) plus
flags that override the file; unset values fall back to package defaults.
Exit codes: 0 success, 1 usage error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys

from .errors import NumericalError
from .filtering import run_filter, save_filter_run
from .harness import ExperimentConfig, load_kernel_cached, run_experiment
from .innovation import save_trajectory, simulate
from .kernel import ModelParams, save_kernel_table
from .laplace import integrate_xi
from .mle import SearchConfig, fisher_decomposition, fisher_info, mle

__all__ = ["main", "DEFAULTS", "UsageError", "load_config_file"]

DEFAULTS = {
    "theta": 2.0,
    "mu": 2.0,
    "hurst": 0.75,
    "T": 100.0,
    "steps": 4096,
    "reps": 300,
    "seed": 7,
    "out": ".",
    "mode": "asymptotic",
    "a": 1.0,
    "h": 0.1,
    "theta_lo": 0.05,
    "theta_hi": 20.0,
    "grid_points": 32,
    "tol": 1e-4,
    "cache": None,
}

_FILE_CASTS = {
    "theta": float,
    "mu": float,
    "hurst": float,
    "T": float,
    "steps": int,
    "reps": int,
    "seed": int,
    "out": str,
    "mode": str,
    "a": float,
    "h": float,
    "theta_lo": float,
    "theta_hi": float,
    "grid_points": int,
    "tol": float,
    "cache": str,
}

_MODES = {"exact": "exact-coefficient", "asymptotic": "asymptotic"}


class UsageError(Exception):
    """Bad flags, bad config text, or unusable argument values."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def load_config_file(path: str) -> dict:
    """Parse flat ``key = value`` text; '#' starts a comment."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if not sep or not key or not val:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            if key not in DEFAULTS:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                values[key] = _FILE_CASTS[key](val)
            except ValueError:
                raise UsageError(
                    f"{path}:{lineno}: bad value {val!r} for {key!r}"
                ) from None
            if key == "mode" and values[key] not in _MODES:
                raise UsageError(
                    f"{path}:{lineno}: mode must be 'exact' or 'asymptotic'"
                )
    return values


def _merge(args) -> tuple[dict, set]:
    """File values override defaults; flag values override both."""
    vals = dict(DEFAULTS)
    given = set()
    if getattr(args, "config", None):
        for key, val in load_config_file(args.config).items():
            vals[key] = val
            given.add(key)
    for key in DEFAULTS:
        flag = getattr(args, key, None)
        if flag is not None:
            vals[key] = flag
            given.add(key)
    return vals, given


def _model(vals: dict) -> ModelParams:
    return ModelParams(
        vals["theta"], vals["mu"], vals["hurst"], vals["T"], vals["steps"]
    )


def _search(vals: dict) -> SearchConfig:
    return SearchConfig(
        vals["theta_lo"], vals["theta_hi"], vals["grid_points"], vals["tol"]
    )


def cmd_kernel(vals: dict, given: set) -> int:
    table = load_kernel_cached(_model(vals), vals["cache"])
    print(f"hurst = {table.hurst:g}")
    print(f"horizon = {table.horizon:g}")
    print(f"n_steps = {table.n_steps}")
    print(f"psi_first = {float(table.psi[0])!r}")
    print(f"psi_last = {float(table.psi[-1])!r}")
    print(f"bracket_T = {float(table.bracket[-1])!r}")
    if "out" in given:
        main_path, g_path = save_kernel_table(table, vals["out"])
        print(f"wrote {main_path}")
        print(f"wrote {g_path}")
    return 0


def cmd_simulate(vals: dict, given: set) -> int:
    model = _model(vals)
    table = load_kernel_cached(model, vals["cache"])
    traj = simulate(model, table, vals["seed"])
    print(f"seed = {traj.seed}")
    print(f"zeta1_T = {float(traj.zeta[-1, 0])!r}")
    print(f"zeta2_T = {float(traj.zeta[-1, 1])!r}")
    print(f"z_obs_T = {float(traj.z_obs[-1])!r}")
    if "out" in given:
        path = save_trajectory(traj, os.path.join(vals["out"], "path.csv"))
        print(f"wrote {path}")
    return 0


def cmd_filter(vals: dict, given: set) -> int:
    model = _model(vals)
    table = load_kernel_cached(model, vals["cache"])
    traj = simulate(model, table, vals["seed"])
    run = run_filter(vals["theta"], traj, table, mu=vals["mu"])
    print(f"theta_candidate = {run.theta_candidate:g}")
    print(f"loglik = {run.loglik!r}")
    print(f"gamma_T = {run.gamma[-1].tolist()!r}")
    if "out" in given:
        path = save_filter_run(run, table, os.path.join(vals["out"], "filter.csv"))
        print(f"wrote {path}")
    return 0


def cmd_mle(vals: dict, given: set) -> int:
    model = _model(vals)
    table = load_kernel_cached(model, vals["cache"])
    traj = simulate(model, table, vals["seed"])
    result = mle(traj, table, model, _search(vals))
    print(f"theta_hat = {result.theta_hat!r}")
    print(f"std_error = {result.standardized_error!r}")
    print(f"loglik = {result.loglik_at_hat!r}")
    print(f"n_evals = {result.n_evals}")
    print(f"boundary = {result.boundary}")
    print(f"flat = {result.flat}")
    return 0


def cmd_laplace(vals: dict, given: set) -> int:
    model = _model(vals)
    table = load_kernel_cached(model, vals["cache"])
    res = integrate_xi(
        model,
        table,
        vals["theta"],
        vals["theta"] + vals["h"],
        vals["a"],
        _MODES[vals["mode"]],
    )
    print(f"L_T = {res.value:.6f}")
    print(f"slope = {res.slope!r}")
    print(f"mode = {res.mode}")
    return 0


def cmd_fisher(vals: dict, given: set) -> int:
    info = fisher_info(vals["theta"], vals["mu"])
    drift_part, obs_part = fisher_decomposition(vals["theta"], vals["mu"])
    print(f"I = {info:.6f}")
    print(f"I_inv = {1.0 / info:.6f}")
    print(
        f"decomposition_sum = {drift_part + obs_part:.6f} "
        f"(drift {drift_part:.6f} + observation {obs_part:.6f})"
    )
    print(
        "warning: decomposition_sum differs from I; "
        "I is the asymptotic variance scale"
    )
    return 0


def cmd_mc(vals: dict, given: set) -> int:
    config = ExperimentConfig(
        model=_model(vals),
        n_reps=vals["reps"],
        master_seed=vals["seed"],
        search=_search(vals),
        out_dir=vals["out"],
        cache_dir=vals["cache"],
    )
    records, summary = run_experiment(config)
    sys.stdout.write(summary.to_json())
    print(f"wrote {os.path.join(vals['out'], 'reps.csv')} ({len(records)} rows)")
    print(f"wrote {os.path.join(vals['out'], 'summary.json')}")
    return 0


_COMMANDS = {
    "kernel": (cmd_kernel, "solve the kernel table and report psi diagnostics"),
    "simulate": (cmd_simulate, "simulate one seeded path"),
    "filter": (cmd_filter, "filter a seeded path at a candidate drift"),
    "mle": (cmd_mle, "estimate the drift on a seeded path"),
    "laplace": (cmd_laplace, "integrate the transform for a drift pair"),
    "fisher": (cmd_fisher, "print the information quantities"),
    "mc": (cmd_mc, "run the Monte Carlo replication study"),
}


def _build_parser() -> _Parser:
    parser = _Parser(prog="mixedfou")
    subs = parser.add_subparsers(dest="command", required=True)
    for name, (handler, help_text) in _COMMANDS.items():
        sub = subs.add_parser(name, help=help_text)
        sub.set_defaults(handler=handler)
        sub.add_argument("--config", metavar="FILE")
        sub.add_argument("--theta", type=float)
        sub.add_argument("--mu", type=float)
        sub.add_argument("--hurst", type=float)
        sub.add_argument("--T", type=float)
        sub.add_argument("--steps", type=int)
        sub.add_argument("--reps", type=int)
        sub.add_argument("--seed", type=int)
        sub.add_argument("--out", metavar="DIR")
        sub.add_argument("--mode", choices=sorted(_MODES))
        sub.add_argument("--a", type=float)
        sub.add_argument("--h", type=float)
        sub.add_argument("--cache", metavar="DIR")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        vals, given = _merge(args)
        return args.handler(vals, given)
    except SystemExit as exc:
        # argparse --help path
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"invalid value: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
