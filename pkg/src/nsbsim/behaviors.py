"""Kinematic behaviors: collision avoidance and cooperative formation tracking.

Each behavior reduces to a scalar task variable rho with a 1x3 Jacobian J and
produces a desired velocity through the damped pseudoinverse. The task-error
feedback alpha(rho_tilde) is a fixed-time terminal sliding-mode profile with a
polynomial patch inside the band |rho_tilde| <= phi_s that removes the
singularity of the fractional power while keeping the profile continuous at
the band edge (exactly, by construction of p1 and p2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ConfigurationError, EPS_D, damped_pinv, signed_pow

# Threshold used by the branch test |sigma_1| > EPS_SIGMA.
EPS_SIGMA = 1e-9


@dataclass(frozen=True)
class FttsmParams:
    """Parameters of the fixed-time terminal sliding-mode error profile.

    Admissibility: beta1, beta2, phi_s, c0 > 0, 1/2 < r0 < 1, r1*r0 > 1 and
    r2*r0 < 1. The derived polynomial coefficients p1, p2 and the band-edge
    value phi_star are computed once; p1*phi_s + p2*phi_s^2 equals phi_star
    exactly, which is what makes the two branches meet continuously.
    """

    beta1: float = 0.6
    beta2: float = 0.6
    r0: float = 0.9
    r1: float = 1.2
    r2: float = 0.6
    phi_s: float = 0.01
    c0: float = 1.0
    p1: float = field(init=False)
    p2: float = field(init=False)
    phi_star: float = field(init=False)

    def __post_init__(self):
        if self.beta1 <= 0 or self.beta2 <= 0:
            raise ConfigurationError("fttsm profile requires beta1 > 0 and beta2 > 0")
        if not 0.5 < self.r0 < 1.0:
            raise ConfigurationError("fttsm profile requires 1/2 < r0 < 1")
        if not self.r1 * self.r0 > 1.0:
            raise ConfigurationError("fttsm profile requires r1*r0 > 1")
        if not 0.0 < self.r2 * self.r0 < 1.0:
            raise ConfigurationError("fttsm profile requires 0 < r2*r0 < 1")
        if self.phi_s <= 0:
            raise ConfigurationError("fttsm profile requires phi_s > 0")
        if self.c0 <= 0:
            raise ConfigurationError("fttsm profile requires c0 > 0")
        phi = self.phi_s
        a_edge = (self.beta1 * phi**self.r1 + self.beta2 * phi**self.r2) ** self.r0
        object.__setattr__(self, "phi_star", a_edge)
        object.__setattr__(self, "p1", (2.0 - self.r0) * a_edge / phi)
        object.__setattr__(self, "p2", (self.r0 - 1.0) * a_edge / (phi * phi))


def alpha_power(e, params):
    """Fractional-power branch (beta1*e^[r1] + beta2*e^[r2])^[r0], componentwise."""
    inner = params.beta1 * signed_pow(e, params.r1) + params.beta2 * signed_pow(e, params.r2)
    return signed_pow(inner, params.r0)


def alpha_poly(e, params):
    """Polynomial patch p1*e + p2*e^[2], componentwise."""
    return params.p1 * np.asarray(e, dtype=float) + params.p2 * signed_pow(e, 2.0)


def fttsm_alpha(rho_tilde, rho_tilde_dot, params):
    """Scalar task-error feedback alpha(rho_tilde) with branch selection.

    The polynomial patch is used only when the auxiliary surface
    sigma_1 = rho_tilde_dot + c0*(beta1*rho~^[r1] + beta2*rho~^[r2])^[r0]
    is away from zero (|sigma_1| > EPS_SIGMA) while |rho_tilde| <= phi_s;
    otherwise the fractional-power branch applies. Both branches agree at
    |rho_tilde| = phi_s.
    """
    rho_tilde = float(rho_tilde)
    a_pow = float(alpha_power(rho_tilde, params))
    sigma_1 = float(rho_tilde_dot) + params.c0 * a_pow
    if abs(sigma_1) > EPS_SIGMA and abs(rho_tilde) <= params.phi_s:
        return float(alpha_poly(rho_tilde, params))
    return a_pow


@dataclass(frozen=True)
class BehaviorOutput:
    """Result of evaluating one behavior at one instant.

    ``jacobian`` is the 1x3 row stored as a length-3 vector; ``jacobian_pinv``
    is its damped pseudoinverse. ``active`` is always True for the tracking
    behavior and reflects the sensing test for collision avoidance.
    ``damped`` flags a task distance at or below the regularization length.
    """

    rho: float
    rho_tilde: float
    jacobian: np.ndarray
    jacobian_pinv: np.ndarray
    x_dot: np.ndarray
    alpha: float
    active: bool
    damped: bool


def coab_evaluate(x_i1, x_obj, x_obj_dot, d, lam_io, params, rho_tilde_dot=0.0, force_active=False):
    """Collision-avoidance behavior against the nearest object.

    Task variable rho = ||x_i1 - x_obj||^2 / 2 with error
    rho_tilde = d^2/2 - rho, Jacobian J = (x_i1 - x_obj)^T. The desired
    velocity J^+ [lam_io * alpha(rho_tilde) - J_obj * x_obj_dot] (with
    J_obj = -J) pushes the agent back to the safety radius d while feeding
    forward the object's own motion. Outside sensing contact (distance > d)
    the behavior reports inactive with zero velocity; ``force_active``
    overrides the gate so harness scenarios can exercise the active form from
    any distance.
    """
    x_i1 = np.asarray(x_i1, dtype=float)
    x_obj = np.asarray(x_obj, dtype=float)
    x_obj_dot = np.asarray(x_obj_dot, dtype=float)
    if d <= 0:
        raise ConfigurationError("collision-avoidance radius d must be positive")
    diff = x_i1 - x_obj
    dist = float(np.linalg.norm(diff))
    rho = 0.5 * dist * dist
    rho_tilde = 0.5 * d * d - rho
    jac = diff.copy()
    jac_pinv = damped_pinv(jac)
    active = dist <= d or force_active
    damped = dist <= EPS_D
    if not active:
        return BehaviorOutput(
            rho=rho,
            rho_tilde=rho_tilde,
            jacobian=jac,
            jacobian_pinv=jac_pinv,
            x_dot=np.zeros(3),
            alpha=0.0,
            active=False,
            damped=damped,
        )
    alpha = fttsm_alpha(rho_tilde, rho_tilde_dot, params)
    # J_obj = -J, so the feedforward term -J_obj @ x_obj_dot = +diff @ x_obj_dot.
    task_rate = lam_io * alpha + float(diff @ x_obj_dot)
    return BehaviorOutput(
        rho=rho,
        rho_tilde=rho_tilde,
        jacobian=jac,
        jacobian_pinv=jac_pinv,
        x_dot=jac_pinv * task_rate,
        alpha=alpha,
        active=True,
        damped=damped,
    )


@dataclass(frozen=True)
class CtbTask:
    """Cooperative-tracking task definition for one agent.

    ``mode='flexible'`` keeps the agent on a sphere of radius d_i0 around the
    estimated leader position; ``mode='fixed'`` drives it to the estimated
    leader position plus the rigid offset ``offset``.
    """

    mode: str
    d_i0: float = 0.0
    offset: np.ndarray = field(default_factory=lambda: np.zeros(3))
    lam_f: float = 1.0

    def __post_init__(self):
        if self.mode not in ("flexible", "fixed"):
            raise ConfigurationError("tracking task mode must be 'flexible' or 'fixed'")
        if self.mode == "flexible" and self.d_i0 <= 0:
            raise ConfigurationError("flexible tracking task requires d_i0 > 0")
        if self.lam_f <= 0:
            raise ConfigurationError("tracking task requires lam_f > 0")
        object.__setattr__(self, "offset", np.asarray(self.offset, dtype=float))


def ctb_evaluate(x_i1, x_hat, x_hat_dot, task, params, rho_tilde_dot=0.0):
    """Cooperative-tracking behavior toward the estimated leader frame.

    Flexible mode: rho = ||x_i1 - x_hat||^2 / 2, rho_tilde = d_i0^2/2 - rho.
    Fixed mode: rho = ||x_i1 - x_hat - offset||^2 / 2, rho_tilde = -rho.
    In both modes J = diff^T and the companion Jacobian toward the estimate is
    -J, so the desired velocity is J^+ [lam_f * alpha + diff @ x_hat_dot].
    The flexible mode needs phi_s <= d_i0^2/2, otherwise the polynomial band
    would contain the sphere center.
    """
    x_i1 = np.asarray(x_i1, dtype=float)
    x_hat = np.asarray(x_hat, dtype=float)
    x_hat_dot = np.asarray(x_hat_dot, dtype=float)
    if task.mode == "flexible":
        if params.phi_s > 0.5 * task.d_i0 * task.d_i0:
            raise ConfigurationError(
                "flexible tracking requires phi_s <= d_i0^2/2"
            )
        diff = x_i1 - x_hat
        rho = 0.5 * float(diff @ diff)
        rho_tilde = 0.5 * task.d_i0 * task.d_i0 - rho
    else:
        diff = x_i1 - x_hat - task.offset
        rho = 0.5 * float(diff @ diff)
        rho_tilde = -rho
    jac = diff.copy()
    jac_pinv = damped_pinv(jac)
    dist = float(np.linalg.norm(diff))
    alpha = fttsm_alpha(rho_tilde, rho_tilde_dot, params)
    task_rate = task.lam_f * alpha + float(diff @ x_hat_dot)
    return BehaviorOutput(
        rho=rho,
        rho_tilde=rho_tilde,
        jacobian=jac,
        jacobian_pinv=jac_pinv,
        x_dot=jac_pinv * task_rate,
        alpha=alpha,
        active=True,
        damped=dist <= EPS_D,
    )


def triangle_offsets(d):
    """Six rigid formation offsets forming a triangle pattern with spacing d.

    Vertices at distance d from the centroid along the top and the two lower
    diagonals, midpoints between them; the centroid of the six offsets is the
    origin exactly.
    """
    if d <= 0:
        raise ConfigurationError("formation spacing d must be positive")
    s3 = np.sqrt(3.0)
    return np.array(
        [
            [0.0, d, 0.0],
            [-s3 * d / 4.0, d / 4.0, 0.0],
            [s3 * d / 4.0, d / 4.0, 0.0],
            [-s3 * d / 2.0, -d / 2.0, 0.0],
            [0.0, -d / 2.0, 0.0],
            [s3 * d / 2.0, -d / 2.0, 0.0],
        ]
    )
