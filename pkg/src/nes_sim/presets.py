"""Built-in benchmark games and self-contained replication presets.

The benchmark is a connectivity-control game for three planar mobile
sensors: each sensor pays a quadratic cost in its own position plus
squared-distance couplings to its physical neighbours (sensors 1-2 and
2-3; sensors 1 and 3 are not coupled). Its unique Nash equilibrium is
known in closed form, which makes it the reference oracle for every
convergence check in this package.
"""

from __future__ import annotations

import numpy as np

from .games import GameDefinition, QuadraticGame

__all__ = [
    "sensor_network_game",
    "complete_graph_adjacency",
    "path_graph_adjacency",
    "figure_preset",
    "PRESET_NAMES",
    "GAME_REGISTRY",
]


def sensor_network_game():
    """Three planar sensors, unit self-curvature, chain coupling 1-2-3."""
    eye = np.eye(2)
    return QuadraticGame(
        r=[eye, eye, eye],
        p_vec=[[2.0, -2.0], [-2.0, -2.0], [-4.0, 2.0]],
        q=[3.0, 3.0, 6.0],
        m_weights=[[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]],
    )


def complete_graph_adjacency(n=3):
    a = np.ones((n, n)) - np.eye(n)
    return a


def path_graph_adjacency(n=3):
    a = np.zeros((n, n))
    for i in range(n - 1):
        a[i, i + 1] = a[i + 1, i] = 1.0
    return a


def _sensor_game_section():
    g = sensor_network_game()
    return {
        "type": "quadratic",
        "r": g.r.tolist(),
        "p_vec": g.p_vec.tolist(),
        "q": g.q.tolist(),
        "m_weights": g.m_weights.tolist(),
    }


def figure_preset(name):
    """Self-contained experiment configuration for a replication run.

    Presets (communication topologies are an assumption of this package:
    the gradient-play scenario uses the complete triangle since that law
    needs every action anyway, the distributed scenarios use the 3-node
    path, which is connected but sparser than the physical coupling):

    - ``fig2``: saturated gradient play from x(0) = [10,0,0,5,0,0] with
      bound 5.
    - ``fig3``: distributed first-order seeking, estimate gains 1000,
      all estimate channels initialised at 10.
    - ``fig4``: saturated distributed second-order seeking from the all
      zero state, reference gains 0.1, estimate gains 200, horizon 200 s.

    Output paths are relative; the replicate command rewrites them into
    its output directory.
    """
    x0 = [10.0, 0.0, 0.0, 5.0, 0.0, 0.0]
    if name == "fig2":
        return {
            "game": _sensor_game_section(),
            "graph": {"adjacency": complete_graph_adjacency().tolist()},
            "strategy": {"tag": "sat_grad_play", "saturation": {"u_bar": 5.0}},
            "sim": {
                "dt": 1e-3,
                "t_end": 20.0,
                "record_stride": 10,
                "integrator": "rk4",
                "convergence_tol": 1e-3,
                "monitor_lyapunov": True,
            },
            "init": {"x0": x0},
            "output": {"trajectory": "fig2_trajectory.csv", "summary": "fig2_summary.txt"},
        }
    if name == "fig3":
        return {
            "game": _sensor_game_section(),
            "graph": {"adjacency": path_graph_adjacency().tolist()},
            "strategy": {
                "tag": "first_order_dist",
                "gains": {"theta": 1000.0, "theta_bar": 1.0},
                "saturation": {"u_bar": 5.0},
            },
            "sim": {
                "dt": 1e-4,
                "t_end": 20.0,
                "record_stride": 100,
                "integrator": "rk4",
                "convergence_tol": 1e-2,
                "monitor_lyapunov": True,
            },
            "init": {"x0": x0, "y0": "broadcast:10"},
            "output": {"trajectory": "fig3_trajectory.csv", "summary": "fig3_summary.txt"},
        }
    if name == "fig4":
        return {
            "game": _sensor_game_section(),
            "graph": {"adjacency": path_graph_adjacency().tolist()},
            "strategy": {
                "tag": "second_order_dist_sat",
                "gains": {"theta": 200.0, "theta1": 1.0, "K": 0.1, "theta_bar": 1.0},
                "saturation": {"u_bar": 5.0},
            },
            "sim": {
                "dt": 1e-3,
                "t_end": 200.0,
                "record_stride": 100,
                "integrator": "rk4",
                "convergence_tol": 1e-2,
                "monitor_lyapunov": True,
            },
            "init": {"x0": "zeros"},
            "output": {"trajectory": "fig4_trajectory.csv", "summary": "fig4_summary.txt"},
        }
    raise KeyError(f"unknown preset '{name}'; available: {', '.join(PRESET_NAMES)}")


PRESET_NAMES = ("fig2", "fig3", "fig4")


def _skew_bilinear():
    # two-player bilinear game with a skew Jacobian: monotone with m = 0,
    # useful for exercising the uncertified/degenerate paths
    return GameDefinition(
        n_players=2,
        action_dim=1,
        costs=[lambda x: x[0] * x[1], lambda x: -x[0] * x[1]],
        gradients=[lambda x: np.array([x[1]]), lambda x: np.array([-x[0]])],
    )


def _decoupled_quartic():
    # smooth non-quadratic game; gradients are left to finite differences
    return GameDefinition(
        n_players=2,
        action_dim=1,
        costs=[lambda x: (x[0] - 1.0) ** 4, lambda x: (x[1] + 2.0) ** 4],
    )


GAME_REGISTRY = {
    "sensor_network": sensor_network_game,
    "skew_bilinear": _skew_bilinear,
    "decoupled_quartic": _decoupled_quartic,
}
