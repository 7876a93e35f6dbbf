"""Second-order agent plants, moving obstacles, and the world integrator.

Agent dynamics: dx1/dt = x2, dx2/dt = u + f_i(x) + d_i(x, t), with f_i an
unknown state-coupled drift and d_i a bounded exogenous disturbance. The
stock catalog pairs a norm factor with a componentwise trig shape per agent,
cycling when there are more agents than entries.

Obstacles are analytic trajectories (position and velocity in closed form).
The plant integrates with classical RK4 under zero-order-hold control; the
estimator and adaptive states are advanced by explicit Euler in the scenario
loop, where their update laws are defined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import ConfigurationError, SimulationFault


@dataclass(frozen=True)
class AgentDynamics:
    """One agent's drift/disturbance shape.

    f = 0.1 * ||x_src|| * trig(x_arg) componentwise, where ``f_norm_src`` and
    ``f_arg_src`` select position (1) or velocity (2); d = 0.5 *
    ||d_coef * x1|| * [g1(w1 t), g2(w2 t), g3(w3 t)] with per-axis shapes.
    """

    f_norm_src: int
    f_trig: str
    f_arg_src: int
    d_coef: float
    d_shapes: tuple  # three (name, angular rate) pairs

    def __post_init__(self):
        if self.f_norm_src not in (1, 2) or self.f_arg_src not in (1, 2):
            raise ConfigurationError("dynamics sources must select position (1) or velocity (2)")
        if self.f_trig not in _TRIG or any(name not in _TRIG for name, _ in self.d_shapes):
            raise ConfigurationError("unknown trig shape in dynamics catalog")
        if len(self.d_shapes) != 3:
            raise ConfigurationError("disturbance needs exactly three axis shapes")


_TRIG = {
    "sin": np.sin,
    "cos": np.cos,
    "tanh": np.tanh,
}


def default_catalog(n):
    """The stock six-entry dynamics catalog, cycled to n agents."""
    entries = [
        AgentDynamics(1, "sin", 2, 0.02, (("sin", 0.5), ("sin", 0.7), ("cos", 0.5))),
        AgentDynamics(1, "tanh", 2, 0.03, (("sin", 0.5), ("tanh", 0.7), ("cos", 0.5))),
        AgentDynamics(2, "sin", 1, 0.02, (("tanh", 0.5), ("sin", 0.7), ("cos", 0.5))),
        AgentDynamics(2, "tanh", 1, 0.02, (("cos", 0.5), ("sin", 0.7), ("tanh", 0.5))),
        AgentDynamics(1, "sin", 2, 0.04, (("tanh", 0.5), ("sin", 0.7), ("cos", 0.5))),
        AgentDynamics(1, "sin", 2, 0.03, (("sin", 0.5), ("cos", 0.7), ("cos", 0.5))),
    ]
    return [entries[i % len(entries)] for i in range(n)]


def drift_term(x1, x2, dyn):
    """f_i(x1, x2) for one agent."""
    src = x1 if dyn.f_norm_src == 1 else x2
    arg = x1 if dyn.f_arg_src == 1 else x2
    return 0.1 * float(np.linalg.norm(src)) * _TRIG[dyn.f_trig](np.asarray(arg, dtype=float))


def disturbance_term(x1, t, dyn):
    """d_i(x1, t) for one agent."""
    mag = 0.5 * float(np.linalg.norm(dyn.d_coef * np.asarray(x1, dtype=float)))
    shape = np.array([_TRIG[name](rate * t) for name, rate in dyn.d_shapes])
    return mag * shape


def dynamics_rhs(i, x_i1, x_i2, u_i, t, dyn):
    """Right-hand side (dx1/dt, dx2/dt) for agent i under control u_i."""
    x_i1 = np.asarray(x_i1, dtype=float)
    x_i2 = np.asarray(x_i2, dtype=float)
    accel = np.asarray(u_i, dtype=float) + drift_term(x_i1, x_i2, dyn) + disturbance_term(x_i1, t, dyn)
    return x_i2.copy(), accel


@dataclass(frozen=True)
class Obstacle:
    """Analytic obstacle trajectory.

    ``kind='bobbing'``: position = base + (0, -cos(t), 0), velocity
    (0, sin(t), 0), the stock moving obstacle. ``kind='static'``: fixed at
    ``base`` with zero velocity.
    """

    kind: str
    base: np.ndarray

    def __post_init__(self):
        if self.kind not in ("bobbing", "static"):
            raise ConfigurationError("obstacle kind must be 'bobbing' or 'static'")
        object.__setattr__(self, "base", np.asarray(self.base, dtype=float))

    def position(self, t):
        if self.kind == "static":
            return self.base.copy()
        return self.base + np.array([0.0, -math.cos(t), 0.0])

    def velocity(self, t):
        if self.kind == "static":
            return np.zeros(3)
        return np.array([0.0, math.sin(t), 0.0])


def stock_obstacles():
    """The four stock bobbing obstacles (base positions, y holds the -cos t)."""
    return [
        Obstacle("bobbing", (0.0, 2.0, 23.0)),
        Obstacle("bobbing", (1.0, -2.0, 28.0)),
        Obstacle("bobbing", (-1.5, 0.0, 10.0)),
        Obstacle("bobbing", (1.0, -2.0, 7.0)),
    ]


def obstacle_position(k, t):
    """Position of stock obstacle k (0-based) at time t."""
    return stock_obstacles()[k].position(t)


def nearest_object(i, positions, obstacles, t, sensing_range, agent_velocities=None):
    """Nearest object to agent i within sensing range, or None.

    Candidates are the obstacles (in catalog order) followed by the other
    agents (in index order); exact distance ties resolve to the earlier
    candidate. Returns (position, velocity, distance).
    """
    positions = np.asarray(positions, dtype=float)
    own = positions[i]
    best = None
    for obs in obstacles:
        pos = obs.position(t)
        dist = float(np.linalg.norm(own - pos))
        if dist <= sensing_range and (best is None or dist < best[2]):
            best = (pos, obs.velocity(t), dist)
    n = positions.shape[0]
    for j in range(n):
        if j == i:
            continue
        dist = float(np.linalg.norm(own - positions[j]))
        if dist <= sensing_range and (best is None or dist < best[2]):
            vel = (
                np.zeros(3)
                if agent_velocities is None
                else np.asarray(agent_velocities[j], dtype=float)
            )
            best = (positions[j].copy(), vel, dist)
    return best


def clik_step(x_id, x_id_dot, x_i1, k_clik, dt):
    """Advance the desired position by closed-loop inverse kinematics.

    x_id <- x_id + dt * x_id_dot + dt * k_clik * (x_i1 - x_id). The feedback
    term bleeds accumulated drift between the integrated reference and the
    tracked state; k_clik = 0 reduces to pure integration.
    """
    if k_clik < 0:
        raise ConfigurationError("clik gain must be nonnegative")
    x_id = np.asarray(x_id, dtype=float)
    return x_id + dt * np.asarray(x_id_dot, dtype=float) + dt * k_clik * (
        np.asarray(x_i1, dtype=float) - x_id
    )


def integrate_step(x1, x2, u, t, dt, catalog):
    """One RK4 step of all agent plants under zero-order-hold controls.

    ``x1, x2, u`` have shape (n, 3). The drift and disturbance are evaluated
    at the stage states and stage times; the control is held. Returns the new
    (x1, x2) and raises SimulationFault on non-finite results.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    u = np.asarray(u, dtype=float)
    n = x1.shape[0]

    def accel(p, v, ts):
        out = np.empty_like(p)
        for i in range(n):
            out[i] = u[i] + drift_term(p[i], v[i], catalog[i]) + disturbance_term(
                p[i], ts, catalog[i]
            )
        return out

    k1v = x2
    k1a = accel(x1, x2, t)
    k2v = x2 + 0.5 * dt * k1a
    k2a = accel(x1 + 0.5 * dt * k1v, k2v, t + 0.5 * dt)
    k3v = x2 + 0.5 * dt * k2a
    k3a = accel(x1 + 0.5 * dt * k2v, k3v, t + 0.5 * dt)
    k4v = x2 + dt * k3a
    k4a = accel(x1 + dt * k3v, k4v, t + dt)
    new_x1 = x1 + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    new_x2 = x2 + dt / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
    if not (np.all(np.isfinite(new_x1)) and np.all(np.isfinite(new_x2))):
        bad = np.nonzero(~np.isfinite(new_x1).all(axis=1) | ~np.isfinite(new_x2).all(axis=1))[0]
        raise SimulationFault(f"non-finite plant state at t={t + dt:.6f} for agents {bad.tolist()}")
    return new_x1, new_x2
