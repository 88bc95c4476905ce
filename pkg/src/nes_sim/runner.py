"""End-to-end experiment execution: config in, trajectory and summary out."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import tuning
from .dynamics import StrategyTag, make_rhs
from .errors import NotStronglyMonotoneError
from .games import QuadraticGame
from .graphs import estimation_matrix, solve_lyapunov
from .simulate import (
    attach_distance,
    attach_estimation_error,
    check_control_bounds,
    detect_convergence,
    integrate,
    monitor_lyapunov,
    stability_guard,
)

__all__ = ["SummaryReport", "run_experiment"]


@dataclass
class SummaryReport:
    """Machine-readable run outcome, written as flat key=value lines."""

    strategy: str
    converged: bool
    t_hit: float | None
    final_dist_inf: float | None
    max_abs_u: float
    max_abs_u_per_channel: np.ndarray
    bounds_ok: bool | None
    worst_bound_violation: float | None
    max_lyapunov_increment: float | None
    tuner_echo: dict
    wall_clock_s: float
    config_hash: str

    def lines(self):
        n_rows = []

        def put(key, val):
            if val is None:
                out = "none"
            elif isinstance(val, bool):
                out = "true" if val else "false"
            elif isinstance(val, float):
                out = format(val, ".17g")
            else:
                out = str(val)
            n_rows.append(f"{key}={out}")

        put("strategy", self.strategy)
        put("converged", self.converged)
        put("t_hit", self.t_hit)
        put("final_dist_inf", self.final_dist_inf)
        put("max_abs_u", self.max_abs_u)
        for idx, val in enumerate(self.max_abs_u_per_channel):
            put(f"max_abs_u_ch{idx + 1}", float(val))
        put("bounds_ok", self.bounds_ok)
        put("worst_bound_violation", self.worst_bound_violation)
        put("max_lyapunov_increment", self.max_lyapunov_increment)
        for key, val in sorted(self.tuner_echo.items()):
            put(f"tuner_{key}", val)
        put("wall_clock_s", self.wall_clock_s)
        put("config_hash", self.config_hash)
        return n_rows

    def write(self, path):
        with open(path, "w") as fh:
            fh.write("\n".join(self.lines()) + "\n")


def _tuner_echo(cfg, lyap):
    """Best-effort gain-bound echo for the summary; empty on any failure."""
    try:
        if cfg.tag is StrategyTag.FIRST_ORDER_DIST and lyap is not None:
            rep = tuning.theta_star_first_order(cfg.game, cfg.graph, lyap, theta=cfg.gains.theta)
            return {"theta_star": rep.theta_star, "m": rep.m}
        if cfg.tag is StrategyTag.SECOND_ORDER_CENTRAL:
            rep = tuning.alpha_beta_star(cfg.game, alpha=cfg.gains.alpha, beta=cfg.gains.beta)
            return {"alpha_star": rep.alpha_star, "beta_star": rep.beta_star, "m": rep.m}
        if cfg.tag in (StrategyTag.SECOND_ORDER_DIST, StrategyTag.SECOND_ORDER_DIST_SAT):
            if lyap is None:
                return {}
            rep = tuning.theta_bounds_second_order(
                cfg.game,
                cfg.graph,
                lyap,
                cfg.gains,
                saturated=cfg.tag is StrategyTag.SECOND_ORDER_DIST_SAT,
                theta=cfg.gains.theta,
            )
            echo = {"theta_star": rep.theta_star, "m": rep.m}
            if rep.theta1_star is not None:
                echo["theta1_star"] = rep.theta1_star
            return echo
    except (NotStronglyMonotoneError, ValueError):
        pass
    return {}


def run_experiment(cfg, write_outputs=True):
    """Run one configured experiment and summarise it.

    Returns ``(summary, trajectory)``. When the configuration carries an
    output section and ``write_outputs`` is true, the trajectory CSV and
    the summary key=value file are written to those paths.
    """
    game, graph, tag = cfg.game, cfg.graph, cfg.tag
    layout = cfg.layout

    M = estimation_matrix(graph, game.action_dim) if layout.has_estimates else None
    stability_guard(cfg.sim, tag, gains=cfg.gains, M=M, game=game)

    lyap = None
    if layout.has_estimates and cfg.sim.monitor_lyapunov:
        tb = cfg.gains.theta_bar_vec(game.n_players, game.action_dim)
        lyap = solve_lyapunov(M, tb, cfg.lyapunov_q)

    x_star = None
    if isinstance(game, QuadraticGame):
        try:
            x_star = game.exact_ne()
        except NotStronglyMonotoneError:
            x_star = None

    rhs, layout = make_rhs(tag, game, gains=cfg.gains, sat_spec=cfg.sat_spec, M=M, graph=graph)
    gain_meta = {
        name: (val.tolist() if isinstance(val, np.ndarray) else val)
        for name in ("theta", "theta1", "theta_bar", "K", "alpha", "beta")
        if (val := getattr(cfg.gains, name)) is not None
    }
    start = time.perf_counter()
    traj = integrate(
        rhs,
        cfg.initial_state(),
        cfg.sim,
        layout,
        metadata={"game_hash": game.digest(), "gains": gain_meta},
    )
    wall = time.perf_counter() - start

    converged, t_hit, final_dist = False, None, None
    if x_star is not None:
        attach_distance(traj, x_star)
        converged, t_hit = detect_convergence(traj, x_star, cfg.sim.convergence_tol)
        final_dist = float(traj.diagnostics["dist_ne"][-1])
    if layout.has_estimates:
        attach_estimation_error(traj)

    max_inc = None
    if cfg.sim.monitor_lyapunov:
        needs_star = tag in (StrategyTag.SECOND_ORDER_DIST, StrategyTag.SECOND_ORDER_DIST_SAT)
        if not (needs_star and x_star is None):
            _, max_inc = monitor_lyapunov(
                traj,
                game,
                gains=cfg.gains,
                sat_spec=cfg.sat_spec,
                P=lyap.P if lyap is not None else None,
                x_star=x_star,
            )

    bounds_ok, worst = None, None
    if cfg.sat_spec is not None:
        bounds_ok, worst = check_control_bounds(traj, cfg.sat_spec)

    summary = SummaryReport(
        strategy=tag.value,
        converged=converged,
        t_hit=t_hit,
        final_dist_inf=final_dist,
        max_abs_u=float(np.max(np.abs(traj.controls))),
        max_abs_u_per_channel=np.max(np.abs(traj.controls), axis=0),
        bounds_ok=bounds_ok,
        worst_bound_violation=worst,
        max_lyapunov_increment=max_inc,
        tuner_echo=_tuner_echo(cfg, lyap),
        wall_clock_s=wall,
        config_hash=cfg.config_hash(),
    )

    if write_outputs and cfg.output is not None:
        traj.to_csv(cfg.output["trajectory"])
        summary.write(cfg.output["summary"])
    return summary, traj
