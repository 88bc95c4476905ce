"""Saturation, state layouts, and the five seeking-strategy vector fields.

Every strategy is written as a right-hand side over a flat state vector
whose blocks follow the order x | nu | z | y (blocks absent from a layout
are skipped). All vector fields return the pair ``(dstate, u)`` so the
recorder can log and bound-check control inputs without recomputation.

Strategies
----------
SAT_GRAD_PLAY
    First-order agents, each moving against the clamp of its own partial
    gradient evaluated at the true joint action. Requires full action
    information.
FIRST_ORDER_DIST
    First-order agents with consensus-maintained local estimates y_i of
    the joint action; each agent clamps the gradient at its own estimate.
SECOND_ORDER_CENTRAL
    Double-integrator agents under full-information damping through the
    stacked game Jacobian. The control law is unbounded by design.
SECOND_ORDER_DIST
    Double-integrator agents tracking an auxiliary reference z driven by
    gradient descent at consensus estimates; unbounded control.
SECOND_ORDER_DIST_SAT
    Same as SECOND_ORDER_DIST with the tracking control clamped, so the
    applied input respects the actuator bounds exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DimensionMismatchError, LayoutMismatchError
from .graphs import estimation_matrix

__all__ = [
    "SaturationSpec",
    "GainSet",
    "StrategyTag",
    "StateLayout",
    "sat",
    "sat_integral",
    "rhs_sat_gradient_play",
    "rhs_gradient_play",
    "rhs_first_order_dist",
    "rhs_second_order_central",
    "rhs_second_order_dist",
    "rhs_second_order_dist_sat",
    "make_rhs",
    "lyapunov_value",
]


class SaturationSpec:
    """Per-channel actuator bounds ``lower <= u <= upper``.

    ``lower`` must be strictly negative and ``upper`` strictly positive in
    every channel. Scalars broadcast over whatever they are applied to.

    Use :meth:`symmetric` for the common ``|u| <= u_bar`` case.
    """

    def __init__(self, lower, upper):
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        if lower.shape != upper.shape:
            raise ValueError("lower and upper bounds must have matching shapes")
        if np.any(lower >= 0.0) or np.any(upper <= 0.0):
            raise ValueError("bounds must satisfy lower < 0 < upper componentwise")
        self.lower = lower
        self.upper = upper

    @classmethod
    def symmetric(cls, u_bar):
        """Bounds ``|u| <= u_bar`` from a positive scalar or vector."""
        u = np.asarray(u_bar, dtype=float)
        if np.any(u <= 0.0):
            raise ValueError("u_bar must be strictly positive")
        return cls(-u, u)

    @property
    def is_symmetric(self):
        return np.array_equal(self.lower, -self.upper)

    def check_size(self, n):
        """Require scalar bounds or bounds of length ``n``."""
        if self.lower.ndim == 0:
            return self
        if self.lower.size != n:
            raise DimensionMismatchError("saturation bounds", n, self.lower.size)
        return self


def sat(v, spec):
    """Componentwise clamp of ``v`` to the spec's bounds.

    For a symmetric spec this equals sign(v) * min(|v|, u_bar) with the
    zero-input case mapping to zero; the clamp realisation is continuous
    and numerically exact at the bounds.
    """
    v = np.asarray(v, dtype=float)
    return np.clip(v, spec.lower, spec.upper)


def sat_integral(g, u_bar):
    """Integral of the symmetric clamp from 0 to ``g``.

    Equals g^2 / 2 inside the bound and u_bar * |g| - u_bar^2 / 2 beyond
    it; even, nonnegative, zero only at zero, and radially unbounded.
    ``g`` may be a scalar or an array (elementwise); ``u_bar`` a positive
    scalar or per-channel array.
    """
    g = np.asarray(g, dtype=float)
    u = np.asarray(u_bar, dtype=float)
    if np.any(u <= 0.0):
        raise ValueError("u_bar must be strictly positive")
    a = np.abs(g)
    out = np.where(a <= u, 0.5 * g * g, u * a - 0.5 * u * u)
    return float(out) if out.ndim == 0 else out


class StrategyTag(str, Enum):
    SAT_GRAD_PLAY = "sat_grad_play"
    FIRST_ORDER_DIST = "first_order_dist"
    SECOND_ORDER_CENTRAL = "second_order_central"
    SECOND_ORDER_DIST = "second_order_dist"
    SECOND_ORDER_DIST_SAT = "second_order_dist_sat"


_SECOND_ORDER = {
    StrategyTag.SECOND_ORDER_CENTRAL,
    StrategyTag.SECOND_ORDER_DIST,
    StrategyTag.SECOND_ORDER_DIST_SAT,
}
_DISTRIBUTED = {
    StrategyTag.FIRST_ORDER_DIST,
    StrategyTag.SECOND_ORDER_DIST,
    StrategyTag.SECOND_ORDER_DIST_SAT,
}
_SATURATED = {
    StrategyTag.SAT_GRAD_PLAY,
    StrategyTag.FIRST_ORDER_DIST,
    StrategyTag.SECOND_ORDER_DIST_SAT,
}


@dataclass(frozen=True)
class StateLayout:
    """Block structure of a strategy's flat state vector.

    Blocks appear in the order x | nu | z | y; sizes are Np for x, nu, z
    and N^2 p for the stacked estimates y.
    """

    tag: StrategyTag
    n_players: int
    action_dim: int

    @property
    def action_size(self):
        return self.n_players * self.action_dim

    @property
    def estimate_size(self):
        return self.n_players * self.n_players * self.action_dim

    @property
    def has_velocity(self):
        return self.tag in _SECOND_ORDER

    @property
    def has_reference(self):
        return self.tag in (StrategyTag.SECOND_ORDER_DIST, StrategyTag.SECOND_ORDER_DIST_SAT)

    @property
    def has_estimates(self):
        return self.tag in _DISTRIBUTED

    @property
    def is_saturated(self):
        return self.tag in _SATURATED

    @property
    def size(self):
        n = self.action_size
        total = n
        if self.has_velocity:
            total += n
        if self.has_reference:
            total += n
        if self.has_estimates:
            total += self.estimate_size
        return total

    def _offsets(self):
        n = self.action_size
        off = {"x": (0, n)}
        pos = n
        if self.has_velocity:
            off["nu"] = (pos, pos + n)
            pos += n
        if self.has_reference:
            off["z"] = (pos, pos + n)
            pos += n
        if self.has_estimates:
            off["y"] = (pos, pos + self.estimate_size)
            pos += self.estimate_size
        return off

    def check(self, state):
        state = np.asarray(state, dtype=float).ravel()
        if state.size != self.size:
            raise LayoutMismatchError(
                f"state for {self.tag.value} must have length {self.size}, got {state.size}"
            )
        return state

    def split(self, state):
        """Views of the state's blocks keyed by block name."""
        state = self.check(state)
        return {name: state[a:b] for name, (a, b) in self._offsets().items()}

    def pack(self, x=None, nu=None, z=None, y=None):
        """Assemble a flat state; omitted blocks default to zeros."""
        given = {"x": x, "nu": nu, "z": z, "y": y}
        out = np.zeros(self.size)
        offsets = self._offsets()
        for name, val in given.items():
            if val is None:
                continue
            if name not in offsets:
                raise LayoutMismatchError(f"layout {self.tag.value} has no block '{name}'")
            a, b = offsets[name]
            val = np.asarray(val, dtype=float).ravel()
            if val.size != b - a:
                raise DimensionMismatchError(f"block {name}", b - a, val.size)
            out[a:b] = val
        return out

    def block_name(self, index):
        """Human-readable name of the block holding flat index ``index``."""
        for name, (a, b) in self._offsets().items():
            if a <= index < b:
                return f"{name}[{index - a}]"
        raise IndexError(index)


@dataclass
class GainSet:
    """Control gains; fields unused by a strategy are ignored.

    ``theta_bar`` may be a scalar or a length-N^2 vector ordered like the
    stacked estimates (owner-major); ``K`` a scalar or length-N vector of
    per-player reference gains. The distributed first-order strategy uses
    the per-estimate gains theta * theta_bar; the distributed second-order
    strategies use theta * theta1 * theta_bar and reference gains
    theta1 * K.
    """

    theta: float | None = None
    theta1: float | None = None
    theta_bar: float | np.ndarray | None = None
    K: float | np.ndarray | None = None
    alpha: float | None = None
    beta: float | None = None

    def __post_init__(self):
        for name in ("theta", "theta1", "alpha", "beta"):
            val = getattr(self, name)
            if val is not None and not float(val) > 0.0:
                raise ValueError(f"gain {name} must be strictly positive")
        for name in ("theta_bar", "K"):
            val = getattr(self, name)
            if val is not None and np.any(np.asarray(val, dtype=float) <= 0.0):
                raise ValueError(f"gain {name} must be strictly positive")

    def require(self, *names):
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise ValueError(f"missing required gains: {', '.join(missing)}")

    def theta_bar_vec(self, n_players, action_dim):
        """Diagonal of the per-estimate weight matrix, expanded to N^2 p."""
        n2 = n_players * n_players
        tb = np.asarray(self.theta_bar if self.theta_bar is not None else 1.0, dtype=float)
        tb = np.full(n2, float(tb)) if tb.ndim == 0 else tb.ravel()
        if tb.size != n2:
            raise DimensionMismatchError("theta_bar", n2, tb.size)
        return np.repeat(tb, action_dim)

    def k_vec(self, n_players, action_dim):
        """Per-player reference gains expanded to Np channels."""
        k = np.asarray(self.K, dtype=float)
        k = np.full(n_players, float(k)) if k.ndim == 0 else k.ravel()
        if k.size != n_players:
            raise DimensionMismatchError("K", n_players, k.size)
        return np.repeat(k, action_dim)


def _tile(vec, n):
    # 1_N (x) vec in the player-major stacking
    return np.tile(vec, n)


def rhs_sat_gradient_play(game, state, sat_spec):
    """Saturated gradient play: each action moves against the clamped own
    gradient evaluated at the true joint action. ``u = dx``."""
    layout = StateLayout(StrategyTag.SAT_GRAD_PLAY, game.n_players, game.action_dim)
    x = layout.check(state)
    sat_spec.check_size(x.size)
    u = sat(-game.pseudo_gradient(x), sat_spec)
    return u.copy(), u


def rhs_gradient_play(game, state):
    """Plain (unclamped) gradient play; the unsaturated reference flow."""
    layout = StateLayout(StrategyTag.SAT_GRAD_PLAY, game.n_players, game.action_dim)
    x = layout.check(state)
    u = -game.pseudo_gradient(x)
    return u.copy(), u


def rhs_first_order_dist(game, M, state, gains, sat_spec):
    """Distributed first-order seeking with consensus estimation.

    Each agent clamps the gradient at its local estimate; the stacked
    estimates contract toward the tiled true action through M scaled by
    theta * theta_bar.
    """
    gains.require("theta")
    layout = StateLayout(StrategyTag.FIRST_ORDER_DIST, game.n_players, game.action_dim)
    s = layout.check(state)
    blocks = layout.split(s)
    x, y = blocks["x"], blocks["y"]
    sat_spec.check_size(x.size)
    tb = gains.theta_bar_vec(game.n_players, game.action_dim)
    u = sat(-game.own_gradients_at_estimates(y), sat_spec)
    dy = -gains.theta * tb * (M @ (y - _tile(x, game.n_players)))
    return np.concatenate([u, dy]), u


def rhs_second_order_central(game, state, gains):
    """Centralized second-order seeking; the control is unbounded by design."""
    gains.require("alpha", "beta")
    layout = StateLayout(StrategyTag.SECOND_ORDER_CENTRAL, game.n_players, game.action_dim)
    s = layout.check(state)
    blocks = layout.split(s)
    x, nu = blocks["x"], blocks["nu"]
    u = -gains.alpha * game.pseudo_gradient(x) - gains.beta * nu - game.game_jacobian(x) @ nu
    return np.concatenate([nu, u]), u


def _reference_rate(game, y, gains):
    # z-dynamics: gradient descent at the consensus estimates, gain theta1 * K
    kbar = gains.theta1 * gains.k_vec(game.n_players, game.action_dim)
    return -kbar * game.own_gradients_at_estimates(y)


def rhs_second_order_dist(game, M, state, gains):
    """Distributed second-order seeking via reference tracking; unbounded u.

    The auxiliary reference z descends the gradient at the consensus
    estimates, the estimates track the tiled reference, and the
    double-integrator action tracks z with critically coupled position and
    velocity errors. The reference rate is substituted algebraically from
    the current state, never numerically differentiated.
    """
    gains.require("theta", "theta1", "K")
    layout = StateLayout(StrategyTag.SECOND_ORDER_DIST, game.n_players, game.action_dim)
    s = layout.check(state)
    blocks = layout.split(s)
    x, nu, z, y = blocks["x"], blocks["nu"], blocks["z"], blocks["y"]
    zdot = _reference_rate(game, y, gains)
    u = -(x - z) - (nu - zdot)
    tb = gains.theta_bar_vec(game.n_players, game.action_dim)
    dy = -gains.theta * gains.theta1 * tb * (M @ (y - _tile(z, game.n_players)))
    return np.concatenate([nu, u, zdot, dy]), u


def rhs_second_order_dist_sat(game, M, state, gains, sat_spec):
    """Distributed second-order seeking with the tracking control clamped."""
    gains.require("theta", "theta1", "K")
    layout = StateLayout(StrategyTag.SECOND_ORDER_DIST_SAT, game.n_players, game.action_dim)
    s = layout.check(state)
    blocks = layout.split(s)
    x, nu, z, y = blocks["x"], blocks["nu"], blocks["z"], blocks["y"]
    sat_spec.check_size(x.size)
    zdot = _reference_rate(game, y, gains)
    u = sat(-((x - z) + (nu - zdot)), sat_spec)
    tb = gains.theta_bar_vec(game.n_players, game.action_dim)
    dy = -gains.theta * gains.theta1 * tb * (M @ (y - _tile(z, game.n_players)))
    return np.concatenate([nu, u, zdot, dy]), u


def make_rhs(tag, game, *, graph=None, gains=None, sat_spec=None, M=None):
    """Bind a strategy's vector field to its game, graph, and gains.

    Returns ``(rhs, layout)`` where ``rhs(state) -> (dstate, u)``. The
    estimation matrix is assembled once here for the distributed
    strategies (or pass a precomputed ``M``). The returned closures hoist
    every loop-invariant quantity but evaluate arithmetic identical to the
    plain ``rhs_*`` functions, so results match those bitwise.
    """
    tag = StrategyTag(tag)
    layout = StateLayout(tag, game.n_players, game.action_dim)
    if tag in _DISTRIBUTED and M is None:
        if graph is None:
            raise ValueError(f"strategy {tag.value} requires a communication graph")
        M = estimation_matrix(graph, game.action_dim)
    if tag in _SATURATED and sat_spec is None:
        raise ValueError(f"strategy {tag.value} requires saturation bounds")

    if tag is StrategyTag.SAT_GRAD_PLAY:
        return (lambda s: rhs_sat_gradient_play(game, s, sat_spec)), layout
    if tag is StrategyTag.SECOND_ORDER_CENTRAL:
        return (lambda s: rhs_second_order_central(game, s, gains)), layout

    n, d = game.n_players, layout.action_size
    size = layout.size
    tag_name = tag.value

    def check(s):
        s = np.asarray(s, dtype=float).ravel()
        if s.size != size:
            raise LayoutMismatchError(
                f"state for {tag_name} must have length {size}, got {s.size}"
            )
        return s

    if tag is StrategyTag.FIRST_ORDER_DIST:
        gains.require("theta")
        sat_spec.check_size(d)
        tb = gains.theta_bar_vec(n, game.action_dim)
        coef = -gains.theta * tb

        def rhs(s):
            s = check(s)
            x, y = s[:d], s[d:]
            u = sat(-game.own_gradients_at_estimates(y), sat_spec)
            dy = coef * (M @ (y - np.tile(x, n)))
            return np.concatenate([u, dy]), u

        return rhs, layout

    gains.require("theta", "theta1", "K")
    tb = gains.theta_bar_vec(n, game.action_dim)
    coef = -gains.theta * gains.theta1 * tb
    neg_kbar = -(gains.theta1 * gains.k_vec(n, game.action_dim))
    saturated = tag is StrategyTag.SECOND_ORDER_DIST_SAT
    if saturated:
        sat_spec.check_size(d)

    def rhs(s):
        s = check(s)
        x, nu, z, y = s[:d], s[d : 2 * d], s[2 * d : 3 * d], s[3 * d :]
        zdot = neg_kbar * game.own_gradients_at_estimates(y)
        if saturated:
            u = sat(-((x - z) + (nu - zdot)), sat_spec)
        else:
            u = -(x - z) - (nu - zdot)
        dy = coef * (M @ (y - np.tile(z, n)))
        return np.concatenate([nu, u, zdot, dy]), u

    return rhs, layout


def _symmetric_upper(sat_spec, n):
    if sat_spec is None:
        raise ValueError("saturation bounds are required for this Lyapunov candidate")
    sat_spec.check_size(n)
    if not sat_spec.is_symmetric:
        raise ValueError("Lyapunov candidates are defined for symmetric bounds only")
    return np.broadcast_to(sat_spec.upper, (n,))


def lyapunov_value(tag, game, state, *, gains=None, sat_spec=None, P=None, x_star=None):
    """Evaluate the stability certificate matching a strategy at one state.

    The value is a monitored diagnostic, never part of any control law.
    Candidates per strategy:

    - SAT_GRAD_PLAY: sum of clamp integrals of the own-gradient channels.
    - FIRST_ORDER_DIST: the above plus the estimation error's quadratic
      form in ``P`` (from :func:`nes_sim.graphs.solve_lyapunov`).
    - SECOND_ORDER_CENTRAL: ||nu||^2 + ||g||^2 / 2 + nu . g with g the
      stacked pseudo-gradient.
    - SECOND_ORDER_DIST: quadratic forms in the reference error (weighted
      by 1/K), the estimation error (in ``P``), the tracking error, and
      the velocity error; requires the equilibrium ``x_star``.
    - SECOND_ORDER_DIST_SAT: as above with the tracking terms replaced by
      clamp integrals and full weight on the velocity error.

    Raises ``ValueError`` when a required ingredient (P, x_star, symmetric
    bounds) is missing.
    """
    tag = StrategyTag(tag)
    layout = StateLayout(tag, game.n_players, game.action_dim)
    blocks = layout.split(layout.check(state))
    n = layout.action_size

    if tag is StrategyTag.SAT_GRAD_PLAY:
        ub = _symmetric_upper(sat_spec, n)
        return float(np.sum(sat_integral(game.pseudo_gradient(blocks["x"]), ub)))

    if tag is StrategyTag.FIRST_ORDER_DIST:
        ub = _symmetric_upper(sat_spec, n)
        if P is None:
            raise ValueError("FIRST_ORDER_DIST Lyapunov value requires the matrix P")
        x, y = blocks["x"], blocks["y"]
        e = y - _tile(x, game.n_players)
        return float(np.sum(sat_integral(game.pseudo_gradient(x), ub)) + e @ P @ e)

    if tag is StrategyTag.SECOND_ORDER_CENTRAL:
        x, nu = blocks["x"], blocks["nu"]
        g = game.pseudo_gradient(x)
        return float(nu @ nu + 0.5 * g @ g + nu @ g)

    if x_star is None:
        raise ValueError(f"{tag.value} Lyapunov value requires the equilibrium x_star")
    if P is None:
        raise ValueError(f"{tag.value} Lyapunov value requires the matrix P")
    x, nu, z, y = blocks["x"], blocks["nu"], blocks["z"], blocks["y"]
    x_star = np.asarray(x_star, dtype=float).ravel()
    if x_star.size != n:
        raise DimensionMismatchError("x_star", n, x_star.size)
    k = gains.k_vec(game.n_players, game.action_dim)
    zdot = _reference_rate(game, y, gains)
    ez = z - x_star
    ee = y - _tile(z, game.n_players)
    ev = nu - zdot
    base = 0.5 * ez @ (ez / k) + ee @ P @ ee

    if tag is StrategyTag.SECOND_ORDER_DIST:
        et = x - z
        return float(base + 0.5 * et @ et + 0.5 * ev @ ev)

    ub = _symmetric_upper(sat_spec, n)
    return float(
        base
        + ev @ ev
        + np.sum(sat_integral(x - z, ub))
        + np.sum(sat_integral(x - z + ev, ub))
    )
