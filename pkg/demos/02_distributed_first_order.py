#!/usr/bin/env python3
"""Consensus-based seeking when players cannot see each other's actions.

The sensors now communicate over a 3-node path (1 - 2 - 3) that is sparser
than the cost couplings, so nobody observes the full action profile. Each
player i maintains a local estimate y_i of everyone's actions; a consensus
flow with a high gain (theta_ij = 1000) drags the estimates toward the
truth, and each player clamps the gradient evaluated at its own estimate.

The demo tracks the estimation error next to the distance to equilibrium
and finishes with the sufficient gain bound for this topology.
"""

import numpy as np

from nes_sim import (
    CommGraph,
    GainSet,
    SaturationSpec,
    SimConfig,
    StrategyTag,
    attach_estimation_error,
    detect_convergence,
    estimation_matrix,
    integrate,
    make_rhs,
    sensor_network_game,
    solve_lyapunov,
    theta_star_first_order,
)
from nes_sim.presets import path_graph_adjacency

game = sensor_network_game()
x_star = game.exact_ne()
graph = CommGraph(path_graph_adjacency())

gains = GainSet(theta=1000.0, theta_bar=1.0)
spec = SaturationSpec.symmetric(5.0)
rhs, layout = make_rhs(
    StrategyTag.FIRST_ORDER_DIST, game, graph=graph, gains=gains, sat_spec=spec
)

# every estimate channel starts at 10, far from every true action
state0 = layout.pack(x=[10.0, 0.0, 0.0, 5.0, 0.0, 0.0], y=np.full(18, 10.0))

# theta = 1000 drives fast consensus modes; the step size must resolve them
cfg = SimConfig(dt=1e-4, t_end=10.0, record_stride=100, convergence_tol=1e-2)
traj = integrate(rhs, state0, cfg, layout)

converged, t_hit = detect_convergence(traj, x_star, cfg.convergence_tol)
est_err = attach_estimation_error(traj)

print("distance to equilibrium and estimation error over time:")
for k in np.linspace(0, traj.n_records - 1, 8, dtype=int):
    print(
        f"  t={traj.times[k]:6.2f}   |x - x*|_inf = {traj.diagnostics['dist_ne'][k]:9.2e}"
        f"   ||y - truth|| = {est_err[k]:9.2e}"
    )
print(f"\nconverged: {converged} (t_hit = {t_hit:.2f} s)")
print(f"peak |u|: {np.max(np.abs(traj.controls)):.1f} (bound 5, exact)")

# sufficient consensus gain for this game/topology, with every intermediate
# constant the bound is made of
M = estimation_matrix(graph, game.action_dim)
lyap = solve_lyapunov(M, theta_bar=1.0, Q=1.0)
report = theta_star_first_order(game, graph, lyap)
print("\ngain-bound report (identity Q and estimate weights):")
for key, val in report.as_dict().items():
    print(f"  {key} = {val}")
print(
    "\nnote: the bound is sufficient, not necessary; this preset's theta=1000"
    f" sits below theta_star={report.theta_star:.0f} yet converges,"
    " because the free constants in the estimate are chosen conservatively."
)
