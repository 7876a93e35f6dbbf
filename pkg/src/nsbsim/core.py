"""Shared math primitives: signed powers, graph matrices, settling bounds, rotations.

Everything in here is deterministic and free of simulation state. The rest of
the package builds on these few operations, so their conventions are pinned:

* ``signed_pow`` is the componentwise odd power |x|^p sgn(x).
* Pseudoinverses of 1x3 task Jacobians use the damped form J^T/(||J||^2 + eps^2)
  with a fixed regularization length ``EPS_D``.
* Settling-time bounds come in the two standard shapes (plain two-term and
  bracketed) selected by ``SettlingParams.form``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Regularization length (m) for damped pseudoinverses of task Jacobians.
EPS_D = 1e-6


class ConfigurationError(ValueError):
    """A parameter set violates one of the mathematical admissibility conditions."""


class LocalityViolation(RuntimeError):
    """A distributed computation asked for state it is not allowed to see."""


class SimulationFault(RuntimeError):
    """A run produced non-finite state; carries a short diagnostic string."""


def signed_pow(x, p):
    """Componentwise signed power |x|^p * sgn(x) for p > 0.

    Accepts scalars or arrays; preserves shape. signed_pow(0, p) = 0, and odd
    symmetry holds exactly: signed_pow(-x, p) == -signed_pow(x, p).
    """
    if p <= 0:
        raise ConfigurationError("signed_pow requires exponent p > 0")
    arr = np.asarray(x, dtype=float)
    out = np.sign(arr) * np.abs(arr) ** p
    if np.isscalar(x) or arr.ndim == 0:
        return float(out)
    return out


def damped_pinv(j):
    """Damped pseudoinverse of a row Jacobian: J^T / (||J||^2 + EPS_D^2).

    ``j`` is a length-3 array (the row J); the result is a length-3 column.
    For ||J|| well above EPS_D this is the exact pseudoinverse to round-off;
    at ||J|| -> 0 it degrades smoothly to the zero vector instead of blowing up.
    """
    j = np.asarray(j, dtype=float)
    return j / (float(j @ j) + EPS_D * EPS_D)


@dataclass(frozen=True)
class CommGraph:
    """Undirected weighted communication topology plus leader access gains.

    ``adjacency`` is the symmetric nonnegative weight matrix with zero
    diagonal; ``leader_gains`` holds b_i >= 0, with b_i > 0 on the agents that
    measure the leader directly.
    """

    adjacency: np.ndarray
    leader_gains: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.adjacency, dtype=float)
        b = np.asarray(self.leader_gains, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ConfigurationError("adjacency must be square")
        if b.shape != (a.shape[0],):
            raise ConfigurationError("leader_gains length must match adjacency size")
        if not np.allclose(a, a.T):
            raise ConfigurationError("adjacency must be symmetric")
        if np.any(a < 0) or np.any(np.diag(a) != 0):
            raise ConfigurationError("adjacency weights must be nonnegative with zero diagonal")
        if np.any(b < 0):
            raise ConfigurationError("leader gains must be nonnegative")
        if not np.any(b > 0):
            raise ConfigurationError("at least one agent needs direct leader access (b_i > 0)")
        object.__setattr__(self, "adjacency", a)
        object.__setattr__(self, "leader_gains", b)

    @property
    def n(self):
        return self.adjacency.shape[0]

    def neighbors(self, i):
        """Indices j with a_ij > 0."""
        return np.nonzero(self.adjacency[i] > 0)[0]

    def laplacian(self):
        a = self.adjacency
        return np.diag(a.sum(axis=1)) - a


def eig_sym(a, sweep_tol=1e-30, max_sweeps=60):
    """Eigenvalues of a small dense symmetric matrix, ascending.

    Cyclic Jacobi rotations; adequate for the graph matrices used here (n of
    order ten). Kept self-contained so the spectrum computation is easy to
    audit; tests cross-check it against numpy's symmetric eigensolver.
    """
    m = np.array(a, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ConfigurationError("eig_sym requires a square matrix")
    if not np.allclose(m, m.T, atol=1e-12):
        raise ConfigurationError("eig_sym requires a symmetric matrix")
    n = m.shape[0]
    if n == 1:
        return np.array([m[0, 0]])
    scale = max(float(np.abs(m).max()), 1.0)
    for _ in range(max_sweeps):
        off2 = float((m**2).sum() - (np.diag(m) ** 2).sum())
        if off2 <= sweep_tol * scale * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = m[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (m[q, q] - m[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = c
                rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                m = rot.T @ m @ rot
                m = 0.5 * (m + m.T)
    return np.sort(np.diag(m))


def build_h_matrix(graph):
    """Leader-connectivity matrix H = L + diag(b) and its extreme eigenvalues.

    Returns ``(H, lam_min, lam_max)``. H must be positive definite for the
    estimator to converge; a non-positive smallest eigenvalue raises
    ConfigurationError (the topology does not connect every agent to the
    leader).
    """
    h = graph.laplacian() + np.diag(graph.leader_gains)
    eigs = eig_sym(h)
    lam_min = float(eigs[0])
    lam_max = float(eigs[-1])
    if lam_min <= 1e-12:
        raise ConfigurationError(
            "connectivity matrix is not positive definite; "
            "every agent needs a path to a leader-informed agent"
        )
    return h, lam_min, lam_max


@dataclass(frozen=True)
class SettlingParams:
    """Coefficients of a fixed-time differential inequality.

    ``form='two_term'`` describes dV/dt <= -eta0*V - eta1*V^k1 - eta2*V^k2
    with k1 > 1 and 0 < k2 < 1; ``form='bracketed'`` describes
    dV/dt <= -eta0*V - (eta1*V^k3 + eta2*V^k4)^k5 with k3*k5 > 1 and
    k4*k5 < 1. The linear eta0 term only tightens the bound and does not
    enter the settling-time formula.
    """

    eta1: float
    eta2: float
    k1: float = 0.0
    k2: float = 0.0
    k3: float = 0.0
    k4: float = 0.0
    k5: float = 0.0
    eta0: float = 0.0
    form: str = "two_term"

    def __post_init__(self):
        if self.form not in ("two_term", "bracketed"):
            raise ConfigurationError("form must be 'two_term' or 'bracketed'")
        if self.eta1 <= 0 or self.eta2 <= 0:
            raise ConfigurationError("settling bound requires eta1 > 0 and eta2 > 0")
        if self.eta0 < 0:
            raise ConfigurationError("settling bound requires eta0 >= 0")
        if self.form == "two_term":
            if not self.k1 > 1:
                raise ConfigurationError("two-term settling bound requires k1 > 1")
            if not 0 < self.k2 < 1:
                raise ConfigurationError("two-term settling bound requires 0 < k2 < 1")
        else:
            if self.k5 <= 0:
                raise ConfigurationError("bracketed settling bound requires k5 > 0")
            if not self.k3 * self.k5 > 1:
                raise ConfigurationError("bracketed settling bound requires k3*k5 > 1")
            if not self.k4 * self.k5 < 1:
                raise ConfigurationError("bracketed settling bound requires k4*k5 < 1")


def fixed_time_bound(params):
    """Settling-time upper bound implied by a SettlingParams inequality.

    two_term:  T = 1/(eta1*(k1-1)) + 1/(eta2*(1-k2))
    bracketed: T = 1/(eta1^k5*(k3*k5-1)) + 1/(eta2^k5*(1-k4*k5))

    The bound is independent of the initial condition; that is the point.
    """
    p = params
    if p.form == "two_term":
        return 1.0 / (p.eta1 * (p.k1 - 1.0)) + 1.0 / (p.eta2 * (1.0 - p.k2))
    return 1.0 / (p.eta1**p.k5 * (p.k3 * p.k5 - 1.0)) + 1.0 / (
        p.eta2**p.k5 * (1.0 - p.k4 * p.k5)
    )


def _rot_x(t):
    c, s = math.cos(t), math.sin(t)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def _rot_y(t):
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _rot_z(t):
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotate_unit(v, theta_x, theta_y, theta_z):
    """Rotate a 3-vector by R_z(theta_z) @ R_y(theta_y) @ R_x(theta_x).

    Each angle must lie in [-pi/2, pi/2] and at least one must be nonzero;
    the all-zero triple is rejected because the caller uses this to perturb a
    direction away from itself.
    """
    half_pi = math.pi / 2.0
    for t in (theta_x, theta_y, theta_z):
        if not -half_pi <= t <= half_pi:
            raise ConfigurationError("rotation angles must lie in [-pi/2, pi/2]")
    if theta_x == 0.0 and theta_y == 0.0 and theta_z == 0.0:
        raise ConfigurationError("rotation angles must not all be zero")
    r = _rot_z(theta_z) @ _rot_y(theta_y) @ _rot_x(theta_x)
    return r @ np.asarray(v, dtype=float)
