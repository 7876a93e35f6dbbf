"""Null-space composition of the two behaviors plus deadlock handling.

Collision avoidance has strict priority: its velocity passes through intact,
and the tracking velocity only acts inside the null space of the avoidance
Jacobian. When the two behaviors cancel (merged command below a small
threshold while avoidance is active) the composer adds a bounded escape
velocity obtained by rotating the obstacle-to-agent direction by a random
angle triple, held constant for a fixed window.

The avoidance gain lam_io is chosen at runtime as the larger of a
state-dependent sufficient value lam_star (the positive root of a quadratic
in the behavior magnitudes) plus a positive offset, and the configured
offline floors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import ConfigurationError, EPS_D, damped_pinv, rotate_unit

# Merged-command magnitude at or below which the deadlock escape triggers.
EPS_LM = 1e-4


def nullspace_projector(jac):
    """Projector N = I - J^+ J onto the null space of a row Jacobian.

    A zero Jacobian (no active constraint) yields the identity.
    """
    jac = np.asarray(jac, dtype=float)
    if float(jac @ jac) == 0.0:
        return np.eye(3)
    return np.eye(3) - np.outer(damped_pinv(jac), jac)


@dataclass(frozen=True)
class EscapeConfig:
    """Escape-velocity policy used at behavior deadlocks.

    ``delta_d`` is the escape speed, ``hold_s`` the window during which a
    drawn escape velocity is held, ``eps_lm`` the trigger threshold on the
    merged command. ``angles`` pins the rotation (fixed policy); None draws
    the triple uniformly from [-pi/2, pi/2]^3, rejecting the all-zero draw.
    ``enabled=False`` turns the trigger off entirely; single-behavior
    harnesses need that because a completed task is indistinguishable from a
    cancellation when the other behavior is absent.
    """

    delta_d: float = 0.5
    hold_s: float = 1.0
    eps_lm: float = EPS_LM
    angles: tuple | None = None
    enabled: bool = True

    def __post_init__(self):
        if self.delta_d <= 0:
            raise ConfigurationError("escape speed delta_d must be positive")
        if self.hold_s <= 0:
            raise ConfigurationError("escape hold window must be positive")
        if self.eps_lm <= 0:
            raise ConfigurationError("escape trigger threshold must be positive")
        if self.angles is not None and all(a == 0.0 for a in self.angles):
            raise ConfigurationError("fixed escape angles must not all be zero")


@dataclass
class EscapeState:
    """Per-agent escape bookkeeping: the held velocity and its expiry time."""

    active_until: float = -math.inf
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def holding(self, t):
        return t < self.active_until


@dataclass(frozen=True)
class MergedVelocity:
    """Composer output: the desired velocity and what produced it."""

    x_dot_id: np.ndarray
    escape_active: bool
    lambda_used: float


def draw_escape_velocity(direction, cfg, rng):
    """Rotate ``direction`` (unit, obstacle -> agent) into an escape velocity."""
    if cfg.angles is not None:
        tx, ty, tz = cfg.angles
    else:
        while True:
            tx, ty, tz = rng.uniform(-math.pi / 2.0, math.pi / 2.0, size=3)
            if not (tx == 0.0 and ty == 0.0 and tz == 0.0):
                break
    return cfg.delta_d * rotate_unit(direction, tx, ty, tz)


def merge(
    x_dot_io,
    x_dot_if,
    jac_io,
    coab_active,
    esc_cfg,
    esc_state,
    rng,
    x_i1,
    x_obj,
    t,
    lambda_used=0.0,
):
    """Merge avoidance and tracking velocities with avoidance priority.

    With avoidance inactive the output is exactly the tracking velocity.
    Otherwise the output is x_dot_io + N x_dot_if, plus the held escape
    velocity whenever ||x_dot_io + x_dot_if|| <= eps_lm triggered an escape
    window that has not yet expired. ``esc_state`` is mutated in place.
    """
    x_dot_io = np.asarray(x_dot_io, dtype=float)
    x_dot_if = np.asarray(x_dot_if, dtype=float)
    if not coab_active:
        return MergedVelocity(
            x_dot_id=x_dot_if.copy(), escape_active=False, lambda_used=lambda_used
        )
    base = x_dot_io + nullspace_projector(jac_io) @ x_dot_if
    cancel = (
        esc_cfg.enabled
        and float(np.linalg.norm(x_dot_io + x_dot_if)) <= esc_cfg.eps_lm
    )
    if cancel and not esc_state.holding(t):
        diff = np.asarray(x_i1, dtype=float) - np.asarray(x_obj, dtype=float)
        dist = float(np.linalg.norm(diff))
        if dist > EPS_D:
            esc_state.velocity = draw_escape_velocity(diff / dist, esc_cfg, rng)
            esc_state.active_until = t + esc_cfg.hold_s
    if esc_state.holding(t):
        return MergedVelocity(
            x_dot_id=base + esc_state.velocity,
            escape_active=True,
            lambda_used=lambda_used,
        )
    return MergedVelocity(x_dot_id=base, escape_active=False, lambda_used=lambda_used)


def lambda_star(dist, alpha_io, x_dot_i1, x_tilde_i1, alpha_s_tilde, c1, c2, min_gain=0.0):
    """State-dependent sufficient avoidance gain (positive quadratic root).

    With u = ||x_dot_i1|| + c1 ||x_tilde_i1|| + c2 ||alpha_s(x_tilde_i1)||
    and the damped pseudoinverse magnitude p = dist/(dist^2 + EPS_D^2), the
    gain solves Y1 lam^2 + Y2 lam + Y3 = 0 for its positive root, where
    Y1 = p^2 alpha_io^2, Y2 = -2 p |alpha_io| u, Y3 = -u^2. Degenerate
    leading coefficients (alpha or distance effectively zero) fall back to
    ``min_gain``; u = 0 returns 0.
    """
    u = (
        float(np.linalg.norm(x_dot_i1))
        + c1 * float(np.linalg.norm(x_tilde_i1))
        + c2 * float(np.linalg.norm(alpha_s_tilde))
    )
    if u == 0.0:
        return 0.0
    p = dist / (dist * dist + EPS_D * EPS_D)
    y1 = p * p * alpha_io * alpha_io
    if y1 < 1e-12:
        return min_gain
    y2 = -2.0 * p * abs(alpha_io) * u
    y3 = -u * u
    disc = y2 * y2 - 4.0 * y1 * y3
    return (-y2 + math.sqrt(disc)) / (2.0 * y1)


def weight_condition(d, d_i0, phi_s, l_0, gam_f, gam_eps):
    """Minimum admissible avoidance weight gamma_io, both published forms.

    Returns (main, proof_body):
        main       = d_i0 * gam_f * l_0 / (d * phi_s) + gam_eps
        proof_body = gam_f * l_0 * sqrt(d_i0^2 + 2 l_0) /
                     (phi_s * sqrt(d^2 - 2 phi_s)) + gam_eps
    """
    if d * d <= 2.0 * phi_s:
        raise ConfigurationError("weight condition requires d^2 > 2*phi_s")
    main = d_i0 * gam_f * l_0 / (d * phi_s) + gam_eps
    proof = gam_f * l_0 * math.sqrt(d_i0 * d_i0 + 2.0 * l_0) / (
        phi_s * math.sqrt(d * d - 2.0 * phi_s)
    ) + gam_eps
    return main, proof


@dataclass(frozen=True)
class LambdaBoundInputs:
    """Geometry, weights and rate bounds feeding the offline gain floors.

    ``l_0`` bounds the initial task errors (phi_s < l_0), ``l_obj`` the
    object speed, ``l_xhat`` the estimate speed, ``delta_d`` the escape
    speed. ``lam_iv`` is the auxiliary decrease-rate parameter and
    ``gam_io, gam_f, gam_eps`` the Lyapunov weights.
    """

    d: float
    d_i0: float
    phi_s: float
    l_0: float
    l_obj: float
    l_xhat: float
    delta_d: float
    gam_io: float
    gam_f: float
    gam_eps: float
    lam_iv: float
    lam_f: float

    def __post_init__(self):
        if self.d_i0 * self.d_i0 <= 2.0 * self.phi_s:
            raise ConfigurationError("offline gain bounds require d_i0^2 > 2*phi_s")
        if self.d * self.d <= 2.0 * self.phi_s:
            raise ConfigurationError("offline gain bounds require d^2 > 2*phi_s")
        if not 0.0 < self.phi_s < self.l_0:
            raise ConfigurationError("offline gain bounds require 0 < phi_s < l_0")
        for name in ("gam_io", "gam_f", "gam_eps", "lam_iv", "lam_f"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"offline gain bounds require {name} > 0")


def lambda_offline_bounds(inputs, params):
    """Four offline gain floors (lam_io1..lam_io4) for the avoidance gain.

    lam_io1/lam_io2 cover the regular decrease cases (dominant avoidance
    error and dominant tracking error); lam_io3/lam_io4 repeat them with the
    escape speed delta_d added to the motion bounds. The runtime gain should
    not fall below max of the four. Also returns the derived constants as a
    dict for reporting.
    """
    c = inputs
    phi_star = (params.beta1 * c.phi_s**params.r1 + params.beta2 * c.phi_s**params.r2) ** params.r0
    l0_star = (params.beta1 * c.l_0**params.r1 + params.beta2 * c.l_0**params.r2) ** params.r0
    l_iof = math.sqrt((c.d * c.d + 2.0 * c.l_0) / (c.d_i0 * c.d_i0 - 2.0 * c.phi_s))
    l_ifo = math.sqrt((c.d_i0 * c.d_i0 + 2.0 * c.l_0) / (c.d * c.d - 2.0 * c.phi_s))
    l_io = math.sqrt(c.d * c.d + 2.0 * c.l_0)
    l_if = math.sqrt(c.d_i0 * c.d_i0 + 2.0 * c.l_0)

    def pair(l_hat):
        lead = c.gam_io * c.lam_f * l_iof / c.gam_eps
        mid = c.gam_io * l_io * l_hat / (phi_star * c.gam_eps)
        tail = c.gam_f * l_if * (l_hat + c.l_obj) / (phi_star * c.gam_eps)
        aux = c.gam_io * c.lam_iv / c.gam_eps
        first = lead + mid + tail + aux
        lead2 = c.gam_io * c.lam_f * l_iof * l0_star / (c.gam_eps * phi_star)
        tail2 = c.gam_f * l_if * (l_hat + c.l_obj) * c.l_0 / (phi_star * c.phi_s * c.gam_eps)
        second = lead2 + mid + tail2 + aux
        return first, second

    l1, l2 = pair(c.l_xhat)
    l3, l4 = pair(c.l_xhat + c.delta_d)
    derived = {
        "phi_star": phi_star,
        "l0_star": l0_star,
        "l_iof": l_iof,
        "l_ifo": l_ifo,
        "l_io": l_io,
        "l_if": l_if,
    }
    return (l1, l2, l3, l4), derived


def merged_decrease_rates(gam_io, gam_f, lam_iv, phi_s, l_0, params):
    """Exponential-free decrease coefficients of the merged Lyapunov function.

    Returns (eta_1, eta_2, eta_3, eta_4) such that along merged trajectories
    with admissible gains

        dV/dt <= -eta_1 V^((r1 r0 + 1)/2) - eta_2 V^((r2 r0 + 1)/2)

    when the avoidance error dominates, and the (eta_3, eta_4) pair when the
    tracking error dominates. Used by the verification monitors and the
    settling predictors T_1 = 2/(eta_1 (r1 r0 - 1)) + 2/(eta_2 (1 - r2 r0)),
    T_2 likewise from (eta_3, eta_4).
    """
    phi_star = (params.beta1 * phi_s**params.r1 + params.beta2 * phi_s**params.r2) ** params.r0
    l0_star = (params.beta1 * l_0**params.r1 + params.beta2 * l_0**params.r2) ** params.r0
    e_hi = params.r1 * params.r0
    e_lo = params.r2 * params.r0
    c_hi = gam_io * lam_iv * params.beta1 / 2.0 ** (0.5 * (3.0 - e_hi))
    c_lo = gam_io * lam_iv * params.beta2 / 2.0
    scale = phi_s * phi_star / (l_0 * l0_star)
    eta_1 = min(
        c_hi * (2.0 / gam_io) ** (2.0 / (e_hi + 1.0)),
        c_hi * (2.0 / gam_f) ** (2.0 / (e_hi + 1.0)),
    )
    eta_2 = min(
        c_lo * (2.0 / gam_io) ** (2.0 / (e_lo + 1.0)),
        c_lo * (2.0 / gam_f) ** (2.0 / (e_lo + 1.0)),
    )
    eta_3 = min(
        c_hi * (2.0 / gam_io) ** (2.0 / (e_hi + 1.0)),
        c_hi * scale * (2.0 / gam_f) ** (2.0 / (e_hi + 1.0)),
    )
    eta_4 = min(
        c_lo * (2.0 / gam_io) ** (2.0 / (e_lo + 1.0)),
        c_lo * scale * (2.0 / gam_f) ** (2.0 / (e_lo + 1.0)),
    )
    return eta_1, eta_2, eta_3, eta_4
