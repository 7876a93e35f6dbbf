"""Adaptive sliding-mode tracking controller with RBF compensation.

The sliding variable S switches componentwise between two auxiliary surfaces
(the fractional-power surface sigma_1 and its polynomial patch sigma_2) using
the same band logic as the behavior profile. The control has three parts: a
reaching law with logistic time-varying gains, an RBF network estimating the
unmodelled dynamics, and an adaptive signum term absorbing the residual.
Adaptive states update by explicit Euler after the control is formed from the
current values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .behaviors import EPS_SIGMA, FttsmParams, alpha_poly, alpha_power
from .core import ConfigurationError, SimulationFault, signed_pow


@dataclass(frozen=True)
class SlidingParams:
    """Surface weights on top of a shared FTTSM profile.

    sigma_1 = x~2 + c1 x~1 + c2 (beta1 x~1^[r1] + beta2 x~1^[r2])^[r0]
    sigma_2 = x~2 + c1 x~1 + c2 (p1 x~1 + p2 x~1^[2])
    S_j = varrho * (sigma_2j on the patch branch, else sigma_1j).
    """

    c1: float = 2.0
    c2: float = 0.2
    varrho: float = 100.0
    fttsm: FttsmParams = field(default_factory=FttsmParams)

    def __post_init__(self):
        if self.c1 <= 0 or self.c2 <= 0:
            raise ConfigurationError("sliding surface requires c1 > 0 and c2 > 0")
        if self.varrho <= 0:
            raise ConfigurationError("sliding surface requires varrho > 0")


def surface_branches(x_tilde1, x_tilde2, params):
    """Componentwise branch mask: True where the polynomial patch applies.

    The patch applies where |sigma_1| > EPS_SIGMA while |x~1| <= phi_s; at
    sigma_1 ~ 0 or outside the band the fractional surface is used.
    """
    f = params.fttsm
    x_tilde1 = np.asarray(x_tilde1, dtype=float)
    x_tilde2 = np.asarray(x_tilde2, dtype=float)
    sigma_1 = x_tilde2 + params.c1 * x_tilde1 + params.c2 * alpha_power(x_tilde1, f)
    return (np.abs(sigma_1) > EPS_SIGMA) & (np.abs(x_tilde1) <= f.phi_s)


def sliding_surface(x_tilde1, x_tilde2, x_tilde1_dot, params):
    """Componentwise sliding variable S (length 3).

    ``x_tilde1_dot`` is the measured error rate; along exact trajectories it
    equals x_tilde2 and the printed surfaces use x_tilde2, so it is accepted
    for interface completeness and cross-checks but does not enter S.
    """
    f = params.fttsm
    x_tilde1 = np.asarray(x_tilde1, dtype=float)
    x_tilde2 = np.asarray(x_tilde2, dtype=float)
    sigma_1 = x_tilde2 + params.c1 * x_tilde1 + params.c2 * alpha_power(x_tilde1, f)
    sigma_2 = x_tilde2 + params.c1 * x_tilde1 + params.c2 * alpha_poly(x_tilde1, f)
    use_patch = (np.abs(sigma_1) > EPS_SIGMA) & (np.abs(x_tilde1) <= f.phi_s)
    return params.varrho * np.where(use_patch, sigma_2, sigma_1)


def alpha_tracking_rate(x_tilde1, x_tilde1_dot, use_patch, params, floor=1e-12):
    """alpha(x~1) and its time derivative, branch-consistent with the surface.

    The derivative is the closed-form chain rule per branch. Near x~1 = 0 the
    fractional branch derivative is evaluated at magnitude ``floor`` to avoid
    a division by zero; the value only feeds the network features, where a
    large magnitude simply drives the Gaussian toward zero.
    """
    f = params.fttsm
    e = np.asarray(x_tilde1, dtype=float)
    e_dot = np.asarray(x_tilde1_dot, dtype=float)
    a_pow = alpha_power(e, f)
    a_poly = alpha_poly(e, f)
    mag = np.maximum(np.abs(e), floor)
    inner = f.beta1 * signed_pow(e, f.r1) + f.beta2 * signed_pow(e, f.r2)
    inner_mag = np.maximum(np.abs(inner), floor)
    d_inner = f.beta1 * f.r1 * mag ** (f.r1 - 1.0) + f.beta2 * f.r2 * mag ** (f.r2 - 1.0)
    d_pow = f.r0 * inner_mag ** (f.r0 - 1.0) * d_inner
    d_poly = f.p1 + 2.0 * f.p2 * np.abs(e)
    alpha = np.where(use_patch, a_poly, a_pow)
    alpha_dot = np.where(use_patch, d_poly, d_pow) * e_dot
    return alpha, alpha_dot


@dataclass(frozen=True)
class GainSegment:
    """One logistic segment of a reaching gain schedule.

    Contributes (-1)^zeta0 * zeta * (k_m - k0) / (exp(-c*(t - t0)) + 1).
    ``zeta0 = 0`` raises the gain toward k_m; ``zeta0 = 1`` lowers it, which
    is only admissible for k_m < 2*k0 (the gain must stay positive).
    """

    k_m: float
    c: float
    t0: float
    zeta: float = 1.0
    zeta0: int = 0

    def __post_init__(self):
        if self.k_m <= 0 or self.c <= 0:
            raise ConfigurationError("gain segment requires k_m > 0 and c > 0")
        if self.zeta <= 0:
            raise ConfigurationError("gain segment requires zeta > 0")
        if self.zeta0 not in (0, 1):
            raise ConfigurationError("gain segment requires zeta0 in {0, 1}")


@dataclass(frozen=True)
class GainSchedule:
    """Piecewise-logistic reaching gain k(t) = k0 + sum of segments.

    Segments must have strictly increasing switch times. Raising segments
    (zeta0 = 0) must have strictly increasing k_m above k0; lowering segments
    (zeta0 = 1) require k_m < 2*k0. These conditions keep k(t) positive and
    bounded, with limits k(0+) ~ k_min and k(inf) = k0 + sum of increments.
    """

    k0: float
    segments: tuple = ()

    def __post_init__(self):
        if self.k0 <= 0:
            raise ConfigurationError("gain schedule requires k0 > 0")
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        times = [s.t0 for s in segs]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigurationError("gain segments need strictly increasing switch times")
        last_km = self.k0
        for s in segs:
            if s.zeta0 == 1:
                if not s.k_m < 2.0 * self.k0:
                    raise ConfigurationError(
                        "lowering gain segment requires k_m < 2*k0"
                    )
            else:
                if not s.k_m > last_km:
                    raise ConfigurationError(
                        "raising gain segments require strictly increasing k_m > k0"
                    )
                last_km = s.k_m

    def floor_value(self):
        """Gain value at t = 0, the minimum of a purely raising schedule."""
        return reaching_gain(0.0, self)

    def limit_value(self):
        """Gain limit as t -> infinity."""
        total = self.k0
        for s in self.segments:
            total += (-1.0) ** s.zeta0 * s.zeta * (s.k_m - self.k0)
        return total


def simple_schedule(k0, k_m, c, t0):
    """Single raising logistic: k(t) = k0 + (k_m - k0)/(exp(-c (t - t0)) + 1)."""
    return GainSchedule(k0=k0, segments=(GainSegment(k_m=k_m, c=c, t0=t0),))


def reaching_gain(t, schedule):
    """Evaluate the reaching gain k(t) of a schedule."""
    total = schedule.k0
    for s in schedule.segments:
        arg = -s.c * (t - s.t0)
        if arg > 700.0:
            logistic = 0.0
        else:
            logistic = 1.0 / (math.exp(arg) + 1.0)
        total += (-1.0) ** s.zeta0 * s.zeta * (s.k_m - schedule.k0) * logistic
    if total <= 0:
        raise ConfigurationError("gain schedule produced a non-positive gain")
    return total


def rbf_features(z, centers, widths):
    """Gaussian feature vector phi_k = exp(-||z - mu_k||^2 / psi_k^2).

    Every feature lies in (0, 1], so ||phi|| <= sqrt(h) regardless of z.
    """
    z = np.asarray(z, dtype=float)
    centers = np.asarray(centers, dtype=float)
    widths = np.asarray(widths, dtype=float)
    d2 = ((z[None, :] - centers) ** 2).sum(axis=1)
    return np.exp(-d2 / widths**2)


def ladder_centers(h, dim):
    """Centers mu_k = (k - h/2) * ones(dim) for k = 1..h, the default grid."""
    return np.array([(k - h / 2.0) * np.ones(dim) for k in range(1, h + 1)])


@dataclass(frozen=True)
class AdaptiveState:
    """Adaptive controller state: network weights and the signum gain.

    ``weights`` has shape (h, 3); ``delta_hat`` is scalar and non-decreasing
    under the update law. ``gain_matrix`` is the positive definite learning
    gain (stored dense, (h, h)); ``gamma3`` the signum adaptation rate.
    """

    weights: np.ndarray
    delta_hat: float
    gain_matrix: np.ndarray
    gamma3: float
    centers: np.ndarray
    widths: np.ndarray

    def __post_init__(self):
        if self.delta_hat < 0:
            raise ConfigurationError("adaptive state requires delta_hat >= 0")
        if self.gamma3 <= 0:
            raise ConfigurationError("adaptive state requires gamma3 > 0")


def make_adaptive_state(h=6, dim=15, delta0=0.1, gamma3=1.0, gain=1.0, width=math.sqrt(2.0)):
    """Fresh adaptive state with zero weights and the default feature grid."""
    return AdaptiveState(
        weights=np.zeros((h, 3)),
        delta_hat=float(delta0),
        gain_matrix=gain * np.eye(h),
        gamma3=float(gamma3),
        centers=ladder_centers(h, dim),
        widths=width * np.ones(h),
    )


def control_step(s_vec, z, t, state, k1_sched, k2_sched, gamma1, gamma2, dt, sgn_eps=0.0):
    """One controller evaluation plus Euler update of the adaptive states.

    u = -k1(t) S^[gamma1] - k2(t) S^[gamma2] - W_hat^T phi - delta_hat sgn(S)

    computed with the current weights, then

        W_hat <- W_hat + Gamma phi S^T dt,   delta_hat <- delta_hat + gamma3 ||S||_1 dt.

    Requires gamma1 > 1 and 0 < gamma2 < 1. A non-finite sliding variable
    raises SimulationFault with the offending values. ``sgn_eps > 0`` replaces
    sgn with tanh(S/sgn_eps) for optional chattering studies; the default is
    the exact signum.
    """
    if not gamma1 > 1.0:
        raise ConfigurationError("reaching law requires gamma1 > 1")
    if not 0.0 < gamma2 < 1.0:
        raise ConfigurationError("reaching law requires 0 < gamma2 < 1")
    s_vec = np.asarray(s_vec, dtype=float)
    if not np.all(np.isfinite(s_vec)):
        raise SimulationFault(f"non-finite sliding variable at t={t:.6f}: {s_vec}")
    phi = rbf_features(z, state.centers, state.widths)
    k1 = reaching_gain(t, k1_sched)
    k2 = reaching_gain(t, k2_sched)
    sgn = np.tanh(s_vec / sgn_eps) if sgn_eps > 0 else np.sign(s_vec)
    u = (
        -k1 * signed_pow(s_vec, gamma1)
        - k2 * signed_pow(s_vec, gamma2)
        - state.weights.T @ phi
        - state.delta_hat * sgn
    )
    new_weights = state.weights + (state.gain_matrix @ phi)[:, None] * s_vec[None, :] * dt
    new_delta = state.delta_hat + state.gamma3 * float(np.abs(s_vec).sum()) * dt
    return u, replace(state, weights=new_weights, delta_hat=new_delta)


def lemma7_bounds(delta_s, params, c1_tilde=None, c2_tilde=None, beta1_tilde=None, beta2_tilde=None):
    """Steady-state error box implied by |S| staying within delta_s.

    Returns (delta_s0, delta_s1, delta_s2):

        delta_s0 = delta_s/varrho + c1 phi_s + c2 (beta1 phi_s^r1 + beta2 phi_s^r2)^r0
        delta_s1 = min{ delta_s/(varrho c1~),
                        (delta_s/(varrho c2~))^(1/(r0 r1)) / beta1~^(1/r1),
                        (delta_s/(varrho c2~))^(1/(r0 r2)) / beta2~^(1/r2) }
        delta_s2 = delta_s/varrho + c1 delta_s1 + c2 (beta1 delta_s1^r1 + beta2 delta_s1^r2)^r0

    and the guaranteed component bounds are |x~1| <= max(phi_s, delta_s1),
    |x~2| <= max(delta_s0, delta_s2). The tilde parameters split the surface
    weights between the linear and fractional parts; they default to the
    plain weights and must satisfy 0 < c~ <= c, 0 < beta~ <= beta.
    """
    p = params
    f = p.fttsm
    ct1 = p.c1 if c1_tilde is None else c1_tilde
    ct2 = p.c2 if c2_tilde is None else c2_tilde
    bt1 = f.beta1 if beta1_tilde is None else beta1_tilde
    bt2 = f.beta2 if beta2_tilde is None else beta2_tilde
    if delta_s < 0:
        raise ConfigurationError("residual band delta_s must be nonnegative")
    if not 0.0 < ct1 <= p.c1 or not 0.0 < ct2 <= p.c2:
        raise ConfigurationError("weight splits require 0 < c~ <= c")
    if not 0.0 < bt1 <= f.beta1 or not 0.0 < bt2 <= f.beta2:
        raise ConfigurationError("weight splits require 0 < beta~ <= beta")
    band = delta_s / p.varrho
    d_s0 = band + p.c1 * f.phi_s + p.c2 * f.phi_star
    d_s1 = min(
        band / ct1,
        (band / ct2) ** (1.0 / (f.r0 * f.r1)) / bt1 ** (1.0 / f.r1),
        (band / ct2) ** (1.0 / (f.r0 * f.r2)) / bt2 ** (1.0 / f.r2),
    )
    d_s2 = band + p.c1 * d_s1 + p.c2 * (f.beta1 * d_s1**f.r1 + f.beta2 * d_s1**f.r2) ** f.r0
    return d_s0, d_s1, d_s2


def reaching_rates(k1, k2, varrho, gamma1, gamma2, varsigma3):
    """Lyapunov decrease coefficients of the reaching phase.

    For V_S = sum ||S_i||^2 / (2 varrho),

        dV_S/dt <= -g1 V^((1+gamma1)/2) - g2 V^((1+gamma2)/2) + g3 sqrt(V),

    with g1 = k1 (2 varrho)^((1+gamma1)/2), g2 = k2 (2 varrho)^((1+gamma2)/2)
    and g3 = sqrt(3) (2 varrho)^2 varsigma3, where varsigma3 bounds the
    residual uncertainty plus adaptation mismatch. Returns (g1, g2, g3).
    """
    g1 = k1 * (2.0 * varrho) ** (0.5 * (1.0 + gamma1))
    g2 = k2 * (2.0 * varrho) ** (0.5 * (1.0 + gamma2))
    g3 = math.sqrt(3.0) * (2.0 * varrho) ** 2 * varsigma3
    return g1, g2, g3


def reaching_band_and_times(g1, g2, g3, varrho, gamma1, gamma2, split=0.5):
    """Residual band and reaching-time bounds from the V_S inequality.

    Splitting each decrease term as (1 - split)/split between convergence and
    domination of the g3 term gives

        delta_s3 = sqrt(2 varrho) (g3 / (split g1))^(1/gamma1)
        delta_s4 = sqrt(2 varrho) (g3 / (split g2))^(1/gamma2)
        delta_s  = min(delta_s3, delta_s4)

    and the two time bounds (using the retained fractions):

        T_a = 1/((split g1)((1+gamma1)/2 - 1)) + 1/(g2 (1 - (1+gamma2)/2))
        T_b = 1/(g1 ((1+gamma1)/2 - 1)) + 1/((split g2)(1 - (1+gamma2)/2))

    Returns (delta_s, delta_s3, delta_s4, T_reach) with T_reach = max(T_a, T_b).
    """
    if not 0.0 < split < 1.0:
        raise ConfigurationError("split fraction must lie in (0, 1)")
    d_s3 = math.sqrt(2.0 * varrho) * (g3 / (split * g1)) ** (1.0 / gamma1)
    d_s4 = math.sqrt(2.0 * varrho) * (g3 / (split * g2)) ** (1.0 / gamma2)
    hi = 0.5 * (1.0 + gamma1) - 1.0
    lo = 1.0 - 0.5 * (1.0 + gamma2)
    t_a = 1.0 / (split * g1 * hi) + 1.0 / (g2 * lo)
    t_b = 1.0 / (g1 * hi) + 1.0 / (split * g2 * lo)
    return min(d_s3, d_s4), d_s3, d_s4, max(t_a, t_b)
