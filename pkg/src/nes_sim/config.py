"""Strict parsing of experiment configuration documents (JSON).

Unknown keys are fatal everywhere: a silently ignored typo in a gain name
would invalidate an experiment. Parsed configurations normalise init
keywords ("zeros", "broadcast:<scalar>") into full vectors, so one parse
is a fixed point of serialise-then-reparse.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .dynamics import GainSet, SaturationSpec, StateLayout, StrategyTag
from .errors import ConfigError
from .games import QuadraticGame
from .graphs import CommGraph
from .presets import GAME_REGISTRY
from .simulate import SimConfig

__all__ = ["ExperimentConfig", "parse_config", "load_config"]

_TOP_KEYS = {"game", "graph", "strategy", "sim", "init", "output", "sweep"}
_GAME_KEYS = {"type", "r", "p_vec", "q", "m_weights", "name"}
_GRAPH_KEYS = {"adjacency", "lyapunov_q"}
_STRATEGY_KEYS = {"tag", "gains", "saturation", "tuner_overrides"}
_GAIN_KEYS = {"theta", "theta1", "theta_bar", "K", "alpha", "beta"}
_SAT_KEYS = {"u_bar", "lower", "upper"}
_OVERRIDE_KEYS = {"lipschitz_constants", "monotonicity_m", "sup_jacobian_norm"}
_SIM_KEYS = {"dt", "t_end", "record_stride", "integrator", "convergence_tol", "monitor_lyapunov"}
_INIT_KEYS = {"x0", "nu0", "z0", "y0"}
_OUTPUT_KEYS = {"trajectory", "summary"}

_REQUIRED_GAINS = {
    StrategyTag.SAT_GRAD_PLAY: (),
    StrategyTag.FIRST_ORDER_DIST: ("theta",),
    StrategyTag.SECOND_ORDER_CENTRAL: ("alpha", "beta"),
    StrategyTag.SECOND_ORDER_DIST: ("theta", "theta1", "K"),
    StrategyTag.SECOND_ORDER_DIST_SAT: ("theta", "theta1", "K"),
}


def _reject_unknown(section, allowed, path):
    if not isinstance(section, dict):
        raise ConfigError(f"{path}: expected an object")
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")


def _require(section, key, path):
    if key not in section:
        raise ConfigError(f"{path}: missing required key '{key}'")
    return section[key]


def _positive(value, path):
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}: expected a number") from None
    if not v > 0.0:
        raise ConfigError(f"{path}: must be strictly positive")
    return v


@dataclass
class ExperimentConfig:
    """A fully validated experiment: game, graph, strategy, sim, init."""

    game: object
    graph: CommGraph
    tag: StrategyTag
    gains: GainSet
    sat_spec: SaturationSpec | None
    sim: SimConfig
    init: dict
    lyapunov_q: object
    tuner_overrides: dict
    output: dict | None
    sweep: list | None
    normalized: dict = field(repr=False, default=None)

    @property
    def layout(self):
        return StateLayout(self.tag, self.game.n_players, self.game.action_dim)

    def initial_state(self):
        return self.layout.pack(**self.init)

    def to_dict(self):
        """Normalised plain-dict form; parse(to_dict(...)) is the identity."""
        return json.loads(json.dumps(self.normalized))

    def config_hash(self):
        blob = json.dumps(self.normalized, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _parse_game(section):
    _reject_unknown(section, _GAME_KEYS, "game")
    kind = _require(section, "type", "game")
    if kind == "quadratic":
        for key in ("r", "p_vec", "q", "m_weights"):
            _require(section, key, "game")
        if "name" in section:
            raise ConfigError("game: 'name' is only valid for type custom")
        try:
            return QuadraticGame(
                r=section["r"],
                p_vec=section["p_vec"],
                q=section["q"],
                m_weights=section["m_weights"],
            )
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"game: {exc}") from exc
    if kind == "custom":
        name = _require(section, "name", "game")
        extra = set(section) & {"r", "p_vec", "q", "m_weights"}
        if extra:
            raise ConfigError(f"game: keys {sorted(extra)} are only valid for type quadratic")
        if name not in GAME_REGISTRY:
            raise ConfigError(
                f"game: unknown custom game '{name}'; available: {sorted(GAME_REGISTRY)}"
            )
        return GAME_REGISTRY[name]()
    raise ConfigError(f"game: type must be 'quadratic' or 'custom', got '{kind}'")


def _parse_vector(value, length, path):
    if isinstance(value, str):
        if value == "zeros":
            return np.zeros(length)
        if value.startswith("broadcast:"):
            try:
                return np.full(length, float(value.split(":", 1)[1]))
            except ValueError:
                raise ConfigError(f"{path}: malformed broadcast keyword '{value}'") from None
        raise ConfigError(f"{path}: expected a vector, 'zeros', or 'broadcast:<scalar>'")
    arr = np.asarray(value, dtype=float).ravel()
    if arr.size != length:
        raise ConfigError(f"{path}: expected length {length}, got {arr.size}")
    return arr


def parse_config(doc):
    """Validate a configuration dict and build the experiment objects."""
    _reject_unknown(doc, _TOP_KEYS, "config")
    for key in ("game", "graph", "strategy", "sim"):
        _require(doc, key, "config")

    game = _parse_game(doc["game"])
    n, p = game.n_players, game.action_dim

    graph_sec = doc["graph"]
    _reject_unknown(graph_sec, _GRAPH_KEYS, "graph")
    adjacency = np.asarray(_require(graph_sec, "adjacency", "graph"), dtype=float)
    if adjacency.shape != (n, n):
        raise ConfigError(f"graph.adjacency: expected shape ({n}, {n}), got {adjacency.shape}")
    try:
        graph = CommGraph(adjacency)
    except ValueError as exc:
        raise ConfigError(f"graph.adjacency: {exc}") from exc
    lyap_q = graph_sec.get("lyapunov_q", 1.0)
    if not np.isscalar(lyap_q):
        lyap_q = np.asarray(lyap_q, dtype=float)
        n2p = n * n * p
        if lyap_q.shape != (n2p, n2p):
            raise ConfigError(f"graph.lyapunov_q: expected a scalar or a {n2p}x{n2p} matrix")
    elif not float(lyap_q) > 0.0:
        raise ConfigError("graph.lyapunov_q: must be strictly positive")

    strat = doc["strategy"]
    _reject_unknown(strat, _STRATEGY_KEYS, "strategy")
    tag_raw = _require(strat, "tag", "strategy")
    try:
        tag = StrategyTag(tag_raw)
    except ValueError:
        raise ConfigError(
            f"strategy.tag: unknown tag '{tag_raw}'; "
            f"valid: {[t.value for t in StrategyTag]}"
        ) from None

    gains_sec = strat.get("gains", {})
    _reject_unknown(gains_sec, _GAIN_KEYS, "strategy.gains")
    for key in _REQUIRED_GAINS[tag]:
        _require(gains_sec, key, "strategy.gains")
    kwargs = {}
    for key in ("theta", "theta1", "alpha", "beta"):
        if key in gains_sec:
            kwargs[key] = _positive(gains_sec[key], f"strategy.gains.{key}")
    for key in ("theta_bar", "K"):
        if key in gains_sec:
            val = gains_sec[key]
            kwargs[key] = float(val) if np.isscalar(val) else np.asarray(val, dtype=float)
    try:
        gains = GainSet(**kwargs)
        gains.theta_bar_vec(n, p)
        if gains.K is not None:
            gains.k_vec(n, p)
    except ValueError as exc:
        raise ConfigError(f"strategy.gains: {exc}") from exc

    layout = StateLayout(tag, n, p)
    sat_spec = None
    if "saturation" in strat:
        sat_sec = strat["saturation"]
        _reject_unknown(sat_sec, _SAT_KEYS, "strategy.saturation")
        if "u_bar" in sat_sec and ("lower" in sat_sec or "upper" in sat_sec):
            raise ConfigError("strategy.saturation: give either u_bar or lower/upper, not both")
        try:
            if "u_bar" in sat_sec:
                sat_spec = SaturationSpec.symmetric(sat_sec["u_bar"])
            else:
                sat_spec = SaturationSpec(
                    _require(sat_sec, "lower", "strategy.saturation"),
                    _require(sat_sec, "upper", "strategy.saturation"),
                )
        except ValueError as exc:
            raise ConfigError(f"strategy.saturation: {exc}") from exc
        sat_spec.check_size(layout.action_size)
    if layout.is_saturated and sat_spec is None:
        raise ConfigError(f"strategy: tag {tag.value} requires a saturation section")

    overrides = strat.get("tuner_overrides", {})
    _reject_unknown(overrides, _OVERRIDE_KEYS, "strategy.tuner_overrides")

    sim_sec = doc["sim"]
    _reject_unknown(sim_sec, _SIM_KEYS, "sim")
    try:
        sim = SimConfig(
            dt=float(_require(sim_sec, "dt", "sim")),
            t_end=float(_require(sim_sec, "t_end", "sim")),
            record_stride=sim_sec.get("record_stride", 1),
            integrator=sim_sec.get("integrator", "rk4"),
            convergence_tol=sim_sec.get("convergence_tol", 1e-3),
            monitor_lyapunov=bool(sim_sec.get("monitor_lyapunov", False)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"sim: {exc}") from exc

    init_sec = doc.get("init", {})
    _reject_unknown(init_sec, _INIT_KEYS, "init")
    init = {}
    block_sizes = {"x": layout.action_size}
    if layout.has_velocity:
        block_sizes["nu"] = layout.action_size
    if layout.has_reference:
        block_sizes["z"] = layout.action_size
    if layout.has_estimates:
        block_sizes["y"] = layout.estimate_size
    for key, value in init_sec.items():
        block = key[:-1]  # drop the trailing 0
        if block not in block_sizes:
            raise ConfigError(f"init.{key}: layout {tag.value} has no block '{block}'")
        init[block] = _parse_vector(value, block_sizes[block], f"init.{key}")
    for block, size in block_sizes.items():
        init.setdefault(block, np.zeros(size))

    output = None
    if "output" in doc:
        _reject_unknown(doc["output"], _OUTPUT_KEYS, "output")
        output = {
            "trajectory": str(_require(doc["output"], "trajectory", "output")),
            "summary": str(_require(doc["output"], "summary", "output")),
        }

    sweep = None
    if "sweep" in doc:
        sweep = doc["sweep"]
        if not isinstance(sweep, list) or not all(isinstance(e, dict) for e in sweep):
            raise ConfigError("sweep: expected a list of override objects")

    normalized = {
        "game": dict(doc["game"]),
        "graph": {"adjacency": adjacency.tolist()},
        "strategy": {"tag": tag.value},
        "sim": {
            "dt": sim.dt,
            "t_end": sim.t_end,
            "record_stride": sim.record_stride,
            "integrator": sim.integrator,
            "convergence_tol": sim.convergence_tol,
            "monitor_lyapunov": sim.monitor_lyapunov,
        },
        "init": {f"{k}0": v.tolist() for k, v in sorted(init.items())},
    }
    if "lyapunov_q" in graph_sec:
        q = graph_sec["lyapunov_q"]
        normalized["graph"]["lyapunov_q"] = q if np.isscalar(q) else np.asarray(q).tolist()
    if kwargs:
        normalized["strategy"]["gains"] = {
            k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in kwargs.items()
        }
    if sat_spec is not None:
        if sat_spec.is_symmetric:
            normalized["strategy"]["saturation"] = {
                "u_bar": sat_spec.upper.tolist() if sat_spec.upper.ndim else float(sat_spec.upper)
            }
        else:
            normalized["strategy"]["saturation"] = {
                "lower": sat_spec.lower.tolist(),
                "upper": sat_spec.upper.tolist(),
            }
    if overrides:
        normalized["strategy"]["tuner_overrides"] = dict(overrides)
    if output is not None:
        normalized["output"] = dict(output)
    if sweep is not None:
        normalized["sweep"] = [dict(e) for e in sweep]

    return ExperimentConfig(
        game=game,
        graph=graph,
        tag=tag,
        gains=gains,
        sat_spec=sat_spec,
        sim=sim,
        init=init,
        lyapunov_q=lyap_q,
        tuner_overrides=dict(overrides),
        output=output,
        sweep=sweep,
        normalized=json.loads(json.dumps(normalized)),
    )


def load_config(path):
    """Read and parse a JSON configuration file."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return parse_config(doc)
