"""Command-line front end.

Subcommands::

    nes-sim run <config.json>          run one experiment (or its sweep)
    nes-sim tune <config.json>         print the gain bounds for the config
    nes-sim oracle <config.json>       print the exact Nash equilibrium
    nes-sim replicate <fig2|fig3|fig4> --out DIR   run a built-in preset

Exit codes: 0 success, 1 configuration or runtime error, 2 the run
completed but did not converge.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
from pathlib import Path

import numpy as np

from . import tuning
from .config import ConfigError, parse_config
from .dynamics import StrategyTag
from .errors import (
    DisconnectedGraphError,
    DivergenceError,
    IllConditionedError,
    NotStronglyMonotoneError,
)
from .games import QuadraticGame
from .graphs import estimation_matrix, solve_lyapunov
from .presets import PRESET_NAMES, figure_preset
from .runner import run_experiment
from .simulate import run_sweep

_USER_ERRORS = (
    ConfigError,
    NotStronglyMonotoneError,
    DisconnectedGraphError,
    IllConditionedError,
    DivergenceError,
    ValueError,
)


def _apply_overrides(doc, args):
    if args.dt is not None:
        doc["sim"]["dt"] = args.dt
    if args.t_end is not None:
        doc["sim"]["t_end"] = args.t_end
    return doc


def _set_dotted(doc, dotted, value):
    keys = dotted.split(".")
    node = doc
    for key in keys[:-1]:
        if not isinstance(node, dict) or key not in node:
            raise ConfigError(f"sweep override '{dotted}': no such config path")
        node = node[key]
    if not isinstance(node, dict):
        raise ConfigError(f"sweep override '{dotted}': no such config path")
    node[keys[-1]] = value
    return doc


def _load_doc(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return doc


def cmd_run(args):
    doc = _apply_overrides(_load_doc(args.config), args)
    base_cfg = parse_config(doc)
    if base_cfg.output is None:
        raise ConfigError("run requires an output section (trajectory and summary paths)")

    if base_cfg.sweep:
        variants = []
        for idx, overrides in enumerate(base_cfg.sweep):
            variant = copy.deepcopy(doc)
            variant.pop("sweep", None)
            for dotted, value in overrides.items():
                _set_dotted(variant, dotted, value)
            variants.append(parse_config(variant))
            if variants[-1].output == base_cfg.output and len(base_cfg.sweep) > 1:
                raise ConfigError(
                    f"sweep entry {idx}: override the output paths so runs do not collide"
                )
        results = run_sweep(variants, lambda c: run_experiment(c)[0])
        all_converged = True
        for idx, summary in enumerate(results):
            print(f"# sweep[{idx}]")
            for line in summary.lines():
                print(line)
            all_converged &= summary.converged
        return 0 if all_converged else 2

    summary, _ = run_experiment(base_cfg)
    for line in summary.lines():
        print(line)
    return 0 if summary.converged else 2


def cmd_tune(args):
    doc = _apply_overrides(_load_doc(args.config), args)
    cfg = parse_config(doc)
    game, graph, gains = cfg.game, cfg.graph, cfg.gains
    ov = cfg.tuner_overrides
    lbar = np.asarray(ov["lipschitz_constants"], float) if "lipschitz_constants" in ov else None
    m = ov.get("monotonicity_m")
    sup_h = ov.get("sup_jacobian_norm")

    if cfg.tag is StrategyTag.SECOND_ORDER_CENTRAL:
        report = tuning.alpha_beta_star(game, alpha=gains.alpha, beta=gains.beta, m=m)
    elif cfg.tag is StrategyTag.SAT_GRAD_PLAY:
        if m is None:
            m_val, certified = game.monotonicity_constant(rng=args.seed)
            if not certified or m_val <= 0.0:
                raise NotStronglyMonotoneError(
                    "monotonicity is uncertified for this game; supply it in tuner_overrides"
                )
        else:
            m_val = float(m)
        report = tuning.TunerReport(
            strategy=cfg.tag,
            m=m_val,
            lbar=lbar if lbar is not None else tuning.lipschitz_constants(game),
            caveats=("saturated gradient play has no gain condition beyond m > 0",),
        )
    else:
        tb = gains.theta_bar_vec(game.n_players, game.action_dim)
        M = estimation_matrix(graph, game.action_dim)
        lyap = solve_lyapunov(M, tb, cfg.lyapunov_q)
        if cfg.tag is StrategyTag.FIRST_ORDER_DIST:
            report = tuning.theta_star_first_order(
                game, graph, lyap, theta=gains.theta, lbar=lbar, m=m, sup_h_norm=sup_h
            )
        else:
            report = tuning.theta_bounds_second_order(
                game,
                graph,
                lyap,
                gains,
                saturated=cfg.tag is StrategyTag.SECOND_ORDER_DIST_SAT,
                theta=gains.theta,
                lbar=lbar,
                m=m,
            )

    flat = report.as_dict()
    for key, val in flat.items():
        if isinstance(val, float):
            print(f"{key}={val:.12g}")
        elif isinstance(val, list):
            print(f"{key}={','.join(f'{v:.12g}' for v in val)}")
        else:
            print(f"{key}={val}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(flat, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def cmd_oracle(args):
    doc = _apply_overrides(_load_doc(args.config), args)
    cfg = parse_config(doc)
    if not isinstance(cfg.game, QuadraticGame):
        raise NotStronglyMonotoneError(
            "the exact equilibrium oracle is only available for quadratic games"
        )
    x_star = cfg.game.exact_ne()
    residual = float(np.max(np.abs(cfg.game.pseudo_gradient(x_star))))
    print("x_star=" + ",".join(f"{v:.12f}" for v in x_star))
    print(f"pseudo_gradient_inf_norm={residual:.6e}")
    return 0


def cmd_replicate(args):
    try:
        preset = figure_preset(args.figure)
    except KeyError as exc:
        raise ConfigError(exc.args[0]) from exc
    _apply_overrides(preset, args)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    preset["output"] = {
        "trajectory": str(outdir / f"{args.figure}_trajectory.csv"),
        "summary": str(outdir / f"{args.figure}_summary.txt"),
    }
    cfg = parse_config(preset)
    summary, _ = run_experiment(cfg)
    for line in summary.lines():
        print(line)
    ok = summary.converged and (summary.bounds_ok is None or summary.bounds_ok)
    return 0 if ok else 2


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="nes-sim",
        description="Simulate Nash-equilibrium-seeking strategies with bounded controls.",
    )
    parser.add_argument("--dt", type=float, default=None, help="override the sim step size")
    parser.add_argument("--t-end", type=float, default=None, help="override the sim horizon")
    parser.add_argument(
        "--seed",
        type=int,
        default=None,
        help="seed for randomized utilities (the strategy flows are deterministic)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a config file")
    p_run.add_argument("config")
    p_run.set_defaults(func=cmd_run)

    p_tune = sub.add_parser("tune", help="compute gain bounds for a config")
    p_tune.add_argument("config")
    p_tune.add_argument("--out", default=None, help="also write the report as JSON")
    p_tune.set_defaults(func=cmd_tune)

    p_oracle = sub.add_parser("oracle", help="print the exact Nash equilibrium")
    p_oracle.add_argument("config")
    p_oracle.set_defaults(func=cmd_oracle)

    p_rep = sub.add_parser("replicate", help="run a built-in benchmark preset")
    p_rep.add_argument("figure", help=f"one of: {', '.join(PRESET_NAMES)}")
    p_rep.add_argument("--out", required=True, help="output directory")
    p_rep.set_defaults(func=cmd_replicate)
    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
