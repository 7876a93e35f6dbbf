"""Distributed fixed-time estimation of the leader state.

Each agent integrates an estimate x_hat_i1 of the leader position using only
relative information: differences of its own and neighboring estimates, plus
the leader itself for agents with direct access (b_i > 0). The consensus
error q_i drives two signed-power terms and a signum term:

    d/dt x_hat_i1 = -K1 q^[r3/r4] - K2 q^[r5/r6] - K3 sgn(q),  componentwise,
    q_i = sum_j a_ij (x_hat_i1 - x_hat_j1) + b_i (x_hat_i1 - x_o).

The leader's own position cancels from the neighbor differences, which is
what makes the law distributed; it only enters through the b_i term.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    ConfigurationError,
    LocalityViolation,
    SettlingParams,
    build_h_matrix,
    fixed_time_bound,
    signed_pow,
)


@dataclass(frozen=True)
class EstimatorConfig:
    """Gains and exponents of the estimator law.

    Requires K1, K2 > 0, K3 >= 0 and exponent ratios r3/r4 > 1, r5/r6 < 1.
    K3 must dominate the leader speed (sup ||x_o_dot||_inf) for the signum
    term to reject it; that check needs the leader trajectory and is done at
    scenario validation.
    """

    k1_gain: float = 0.4
    k2_gain: float = 0.6
    k3_gain: float = 1.0
    r3: float = 6.0
    r4: float = 5.0
    r5: float = 3.0
    r6: float = 5.0

    def __post_init__(self):
        if self.k1_gain <= 0 or self.k2_gain <= 0:
            raise ConfigurationError("estimator requires K1 > 0 and K2 > 0")
        if self.k3_gain < 0:
            raise ConfigurationError("estimator requires K3 >= 0")
        if min(self.r3, self.r4, self.r5, self.r6) <= 0:
            raise ConfigurationError("estimator exponents must be positive")
        if not self.r3 / self.r4 > 1.0:
            raise ConfigurationError("estimator requires r3/r4 > 1")
        if not self.r5 / self.r6 < 1.0:
            raise ConfigurationError("estimator requires r5/r6 < 1")

    @property
    def exp_hi(self):
        return self.r3 / self.r4

    @property
    def exp_lo(self):
        return self.r5 / self.r6


def estimator_derivative(i, x_hat, leader_pos, graph, cfg):
    """Estimate derivative for agent i from neighbor estimates only.

    ``leader_pos`` must be given exactly when b_i > 0 and must be None when
    b_i == 0; anything else raises LocalityViolation, because it would mean
    the agent consumed information the topology does not grant it. Only rows
    of ``x_hat`` belonging to agent i and its neighbors are read.
    """
    b_i = float(graph.leader_gains[i])
    if b_i > 0 and leader_pos is None:
        raise LocalityViolation(
            f"agent {i} has direct leader access (b_i > 0) but no leader state was supplied"
        )
    if b_i == 0 and leader_pos is not None:
        raise LocalityViolation(
            f"agent {i} has no leader access (b_i = 0) and must not receive leader state"
        )
    own = np.asarray(x_hat[i], dtype=float)
    q = np.zeros(3)
    row = graph.adjacency[i]
    for j in graph.neighbors(i):
        q += row[j] * (own - np.asarray(x_hat[j], dtype=float))
    if b_i > 0:
        q += b_i * (own - np.asarray(leader_pos, dtype=float))
    return (
        -cfg.k1_gain * signed_pow(q, cfg.exp_hi)
        - cfg.k2_gain * signed_pow(q, cfg.exp_lo)
        - cfg.k3_gain * np.sign(q)
    )


def estimator_derivative_all(x_hat, leader_pos, graph, cfg):
    """Vectorized derivative for all agents (same law as estimator_derivative).

    Uses q = L x_hat + diag(b) (x_hat - x_o); the per-agent entry point stays
    the reference implementation and the two are tested to agree exactly.
    """
    x_hat = np.asarray(x_hat, dtype=float)
    lap = graph.laplacian()
    q = lap @ x_hat + graph.leader_gains[:, None] * (
        x_hat - np.asarray(leader_pos, dtype=float)[None, :]
    )
    return (
        -cfg.k1_gain * signed_pow(q, cfg.exp_hi)
        - cfg.k2_gain * signed_pow(q, cfg.exp_lo)
        - cfg.k3_gain * np.sign(q)
    )


def estimator_settling_bound(graph, cfg):
    """Fixed-time settling bound T_e of the estimation error.

    Built from the connectivity spectrum: with r~1 = (r3/r4 + 1)/2,
    r~2 = (r5/r6 + 1)/2 and m = 2*lam_min^2/lam_max,

        K~1 = K1 * (3N)^(1 - r~1) * m^(1/r~1),   K~2 = K2 * m^(1/r~2),
        T_e = 1/(K~1 (r~1 - 1)) + 1/(K~2 (1 - r~2)).

    Returns (T_e, K~1, K~2). Raises ConfigurationError when the topology is
    not leader-connected.
    """
    _, lam_min, lam_max = build_h_matrix(graph)
    n = graph.n
    rt1 = 0.5 * (cfg.exp_hi + 1.0)
    rt2 = 0.5 * (cfg.exp_lo + 1.0)
    base = 2.0 * lam_min * lam_min / lam_max
    kt1 = cfg.k1_gain * (3.0 * n) ** (1.0 - rt1) * base ** (1.0 / rt1)
    kt2 = cfg.k2_gain * base ** (1.0 / rt2)
    t_e = fixed_time_bound(
        SettlingParams(eta1=kt1, eta2=kt2, k1=rt1, k2=rt2, form="two_term")
    )
    return t_e, kt1, kt2


def estimator_rate_bound(x_bar0, graph, cfg):
    """Constant bound L_xhat on the estimate speed from the initial error.

    L_xhat = K1 ||eta1_i(0)|| + K2 ||eta2_i(0)|| + sqrt(3) K3 per agent, with
    eta1/eta2 the signed-power consensus aggregates of the initial errors
    x_bar0 (shape (n, 3)). Returns the per-agent array.
    """
    x_bar0 = np.asarray(x_bar0, dtype=float)
    n = graph.n
    out = np.zeros(n)
    for i in range(n):
        e1 = graph.leader_gains[i] * signed_pow(x_bar0[i], cfg.exp_hi)
        e2 = graph.leader_gains[i] * signed_pow(x_bar0[i], cfg.exp_lo)
        for j in graph.neighbors(i):
            a_ij = graph.adjacency[i, j]
            e1 = e1 + a_ij * (
                signed_pow(x_bar0[i], cfg.exp_hi) + signed_pow(x_bar0[j], cfg.exp_hi)
            )
            e2 = e2 + a_ij * (
                signed_pow(x_bar0[i], cfg.exp_lo) + signed_pow(x_bar0[j], cfg.exp_lo)
            )
        out[i] = (
            cfg.k1_gain * float(np.linalg.norm(e1))
            + cfg.k2_gain * float(np.linalg.norm(e2))
            + np.sqrt(3.0) * cfg.k3_gain
        )
    return out
