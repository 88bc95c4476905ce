import numpy as np
import pytest

from nes_sim import CommGraph, parse_config, run_experiment, sensor_network_game
from nes_sim.presets import figure_preset, path_graph_adjacency

# benchmark initial condition shared across suites
X0 = np.array([10.0, 0.0, 0.0, 5.0, 0.0, 0.0])


@pytest.fixture(scope="session")
def sensor_game():
    return sensor_network_game()


@pytest.fixture(scope="session")
def x_star(sensor_game):
    return sensor_game.exact_ne()


@pytest.fixture(scope="session")
def path_graph():
    return CommGraph(path_graph_adjacency())


def _run_preset(name, tmp_path_factory):
    doc = figure_preset(name)
    outdir = tmp_path_factory.mktemp(f"{name}_out")
    doc["output"] = {
        "trajectory": str(outdir / f"{name}_trajectory.csv"),
        "summary": str(outdir / f"{name}_summary.txt"),
    }
    cfg = parse_config(doc)
    summary, traj = run_experiment(cfg)
    return cfg, summary, traj


@pytest.fixture(scope="session")
def fig2_run(tmp_path_factory):
    return _run_preset("fig2", tmp_path_factory)


@pytest.fixture(scope="session")
def fig3_run(tmp_path_factory):
    return _run_preset("fig3", tmp_path_factory)


@pytest.fixture(scope="session")
def fig4_run(tmp_path_factory):
    return _run_preset("fig4", tmp_path_factory)
