"""Numerical verification: settling predictors, Lyapunov monitors, bound checks.

Everything here is a pure function of a logged series (see scenario.CSV_COLUMNS)
plus the scenario config, so any run can be re-audited offline. Monitors
evaluate a decrease inequality V_dot <= rhs(V) sample by sample with a central
difference for V_dot, a hypothesis gate selecting the samples the inequality
claims to cover, and a one-sample erosion at gate boundaries (branch switches
land there). Margins are relative to max(1, |rhs|).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .composer import merged_decrease_rates
from .controller import lemma7_bounds, reaching_band_and_times, reaching_gain, reaching_rates
from .core import ConfigurationError
from .estimator import estimator_settling_bound

# ---------------------------------------------------------------------------
# settling predictors


def coab_settling_bound(gamma, lam, params):
    """Decrease rates and settling bound for the avoidance error system.

    With V = gamma*rho_tilde^2/2 and rho_tilde_dot = -lam*alpha(rho_tilde) on
    the fractional branch,

        V_dot = -(g1*V^e1 + g2*V^e2)^r0   (an identity, not just a bound)

    with e1 = (r1*r0+1)/(2*r0), e2 = (r2*r0+1)/(2*r0) and the rates returned
    here. The implied settling bound is
    1/(g1^r0*(r1*r0-1)) + 1/(g2^r0*(1-r2*r0)).
    """
    if gamma <= 0 or lam <= 0:
        raise ConfigurationError("coab settling bound requires gamma > 0 and lam > 0")
    r0, r1, r2 = params.r0, params.r1, params.r2
    e1 = (r1 * r0 + 1.0) / (2.0 * r0)
    e2 = (r2 * r0 + 1.0) / (2.0 * r0)
    base = (gamma * lam) ** (1.0 / r0)
    g1 = base * (2.0 / gamma) ** e1 * params.beta1
    g2 = base * (2.0 / gamma) ** e2 * params.beta2
    t_bound = 1.0 / (g1**r0 * (r1 * r0 - 1.0)) + 1.0 / (g2**r0 * (1.0 - r2 * r0))
    return g1, g2, t_bound


def surface_settling_bound(sliding):
    """Settling bound of the error dynamics once confined to the surface.

    On sigma = 0 the position error obeys x_tilde1_dot = -c1*x_tilde1
    - c2*alpha(x_tilde1); dropping the linear term leaves the fixed-time pair
    below with V = ||x_tilde1||^2/2.
    """
    f = sliding.fttsm
    r0, r1, r2 = f.r0, f.r1, f.r2
    eta1 = sliding.c2 ** (1.0 / r0) * f.beta1 * 2.0 ** ((r1 + 1.0) / (2.0 * r0))
    eta2 = sliding.c2 ** (1.0 / r0) * f.beta2 * 2.0 ** ((r2 + 1.0) / (2.0 * r0))
    t_bound = 1.0 / (eta1**r0 * ((r1 + 1.0) / 2.0 - 1.0)) + 1.0 / (
        eta2**r0 * (1.0 - (r2 + 1.0) / 2.0)
    )
    return eta1, eta2, t_bound


def predict_bounds(cfg):
    """Offline settling predictions computable from a scenario config alone."""
    out = {}
    if cfg.estimator_enabled:
        t_e, kt1, kt2 = estimator_settling_bound(cfg.graph(), cfg.estimator)
        out["estimator"] = {"t_e_s": t_e, "rate_hi": kt1, "rate_lo": kt2}
    g1, g2, t_io = coab_settling_bound(1.0, 1.0, cfg.fttsm)
    out["avoidance_unit"] = {"rate_hi": g1, "rate_lo": g2, "t_bound_s": t_io}
    eta1, eta2, t_surf = surface_settling_bound(cfg.sliding)
    out["surface"] = {"rate_hi": eta1, "rate_lo": eta2, "t_bound_s": t_surf}
    return out


def t0_check(schedule, horizon_s):
    """True when the gain stays near its floor for the whole horizon.

    The stability analysis treats the raising time t0 as chosen after a
    decision instant beyond the operating horizon; this checks the schedule
    actually behaves that way (limit contribution below 1% at the horizon).
    """
    k_h = reaching_gain(horizon_s, schedule)
    k_lim = schedule.limit_value()
    return (k_h - schedule.k0) <= 0.01 * (k_lim - schedule.k0)


# ---------------------------------------------------------------------------
# monitors


@dataclass(frozen=True)
class VerifyConfig:
    """Thresholds for monitor verdicts.

    A gated sample passes when its relative margin is at most
    ``sample_margin_tol``; the monitor passes when the pass rate is at least
    ``pass_rate_min`` and no margin exceeds ``hard_margin_tol``.
    """

    pass_rate_min: float = 0.99
    sample_margin_tol: float = 1e-4
    hard_margin_tol: float = 1e-3
    exclude_adjacent: int = 1


@dataclass(frozen=True)
class MonitorReport:
    name: str
    samples_total: int
    samples_gated: int
    samples_evaluated: int
    violations: int
    hard_violations: int
    pass_rate: float
    worst_margin: float
    first_violation_s: float | None

    def passed(self, vcfg):
        return self.pass_rate >= vcfg.pass_rate_min and self.hard_violations == 0

    def summary(self):
        return (
            f"{self.name}: {self.samples_evaluated} evaluated, "
            f"pass rate {self.pass_rate:.4f}, worst margin {self.worst_margin:.3e}, "
            f"hard violations {self.hard_violations}"
        )


def _erode(mask, width):
    out = mask.copy()
    for _ in range(width):
        shrunk = out.copy()
        shrunk[1:] &= out[:-1]
        shrunk[:-1] &= out[1:]
        out = shrunk
    return out


def _monitor(name, t, v, rhs, gate, vcfg):
    t = np.asarray(t, dtype=float)
    v = np.asarray(v, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    gate = np.asarray(gate, dtype=bool)
    n = len(t)
    if n < 3:
        raise ConfigurationError("monitor needs at least three samples")
    vdot = np.full(n, np.nan)
    vdot[1:-1] = (v[2:] - v[:-2]) / (t[2:] - t[:-2])
    usable = _erode(gate, vcfg.exclude_adjacent)
    usable[0] = usable[-1] = False
    idx = np.nonzero(usable)[0]
    gated = int(gate.sum())
    if len(idx) == 0:
        return MonitorReport(
            name=name,
            samples_total=n,
            samples_gated=gated,
            samples_evaluated=0,
            violations=0,
            hard_violations=0,
            pass_rate=1.0,
            worst_margin=-math.inf,
            first_violation_s=None,
        )
    margin = (vdot[idx] - rhs[idx]) / np.maximum(1.0, np.abs(rhs[idx]))
    bad = margin > vcfg.sample_margin_tol
    hard = margin > vcfg.hard_margin_tol
    first = float(t[idx[np.argmax(bad)]]) if bad.any() else None
    return MonitorReport(
        name=name,
        samples_total=n,
        samples_gated=gated,
        samples_evaluated=len(idx),
        violations=int(bad.sum()),
        hard_violations=int(hard.sum()),
        pass_rate=1.0 - float(bad.sum()) / len(idx),
        worst_margin=float(margin.max()),
        first_violation_s=first,
    )


def monitor_v_io(series, cfg, agent=0, gamma=1.0, vcfg=VerifyConfig()):
    """Decrease of the avoidance Lyapunov function V = gamma*rho_tilde^2/2.

    Requires a fixed avoidance gain (lambda_policy 'fixed'): the inequality's
    rates depend on the gain, which is not logged per sample. Gated on contact
    being active and the error outside the polynomial band.
    """
    if cfg.lambda_policy != "fixed":
        raise ConfigurationError("avoidance monitor needs lambda_policy 'fixed'")
    f = cfg.fttsm
    t = series["t"]
    dist = series["nearest_dist_m"][:, agent]
    active = series["coab_active"][:, agent] > 0.5
    rho_tilde = 0.5 * cfg.coab_d_m**2 - 0.5 * dist**2
    v = gamma * rho_tilde**2 / 2.0
    g1, g2, _ = coab_settling_bound(gamma, cfg.lambda_fixed, f)
    e1 = (f.r1 * f.r0 + 1.0) / (2.0 * f.r0)
    e2 = (f.r2 * f.r0 + 1.0) / (2.0 * f.r0)
    rhs = -((g1 * v**e1 + g2 * v**e2) ** f.r0)
    gate = active & (np.abs(rho_tilde) > f.phi_s) & np.isfinite(dist)
    return _monitor("V_io", t, v, rhs, gate, vcfg)


def monitor_v_e(series, cfg, gate_inf=1e-2, vcfg=VerifyConfig()):
    """Decrease of the estimation Lyapunov function V = sum ||x_hat - x_o||^2/2.

    Rates are the conservative network pair behind the settling bound; the
    gate keeps samples with componentwise error above ``gate_inf`` so the
    signum chatter floor is outside the claim.
    """
    if not cfg.estimator_enabled:
        raise ConfigurationError("estimation monitor needs the estimator enabled")
    t = series["t"]
    est = np.stack([series["est_x_m"], series["est_y_m"], series["est_z_m"]], axis=-1)
    leader = cfg.leader_path()
    x_o = np.array([leader.position(tk) for tk in t])
    err = est - x_o[:, None, :]
    v = 0.5 * np.sum(err**2, axis=(1, 2))
    _, kt1, kt2 = estimator_settling_bound(cfg.graph(), cfg.estimator)
    rt1 = (cfg.estimator.r3 / cfg.estimator.r4 + 1.0) / 2.0
    rt2 = (cfg.estimator.r5 / cfg.estimator.r6 + 1.0) / 2.0
    rhs = -kt1 * v**rt1 - kt2 * v**rt2
    gate = np.max(np.abs(err), axis=(1, 2)) > gate_inf
    return _monitor("V_e", t, v, rhs, gate, vcfg)


def monitor_v_s(series, cfg, varsigma3, gate_s=None, vcfg=VerifyConfig()):
    """Decrease of the reaching Lyapunov function V = sum ||S_i||^2/(2*varrho).

    ``varsigma3`` is the lumped residual audit constant (take the run's final
    delta_hat plus sqrt(h)*||W||_F when auditing a finished run). The gate
    keeps samples with max ||S_i|| above the reaching band implied by that
    constant (override with ``gate_s``); with a large audit constant the band
    can exceed every logged sample, leaving nothing to evaluate, which the
    report shows as zero gated samples.
    """
    sl = cfg.sliding
    t = series["t"]
    s = series["s_norm"]
    v = np.sum(s**2, axis=1) / (2.0 * sl.varrho)
    k1 = np.array([reaching_gain(tk, cfg.k1_schedule) for tk in t])
    k2 = np.array([reaching_gain(tk, cfg.k2_schedule) for tk in t])
    e1 = (1.0 + cfg.gamma1) / 2.0
    e2 = (1.0 + cfg.gamma2) / 2.0
    gs1 = k1 * (2.0 * sl.varrho) ** e1
    gs2 = k2 * (2.0 * sl.varrho) ** e2
    gs3 = math.sqrt(3.0) * (2.0 * sl.varrho) ** 2 * varsigma3
    rhs = -gs1 * v**e1 - gs2 * v**e2 + gs3 * np.sqrt(v)
    if gate_s is None:
        g1, g2, g3 = reaching_rates(
            cfg.k1_schedule.limit_value(),
            cfg.k2_schedule.limit_value(),
            sl.varrho,
            cfg.gamma1,
            cfg.gamma2,
            varsigma3,
        )
        gate_s, _, _, _ = reaching_band_and_times(g1, g2, g3, sl.varrho, cfg.gamma1, cfg.gamma2)
    gate = np.max(s, axis=1) > gate_s
    return _monitor("V_S", t, v, rhs, gate, vcfg)


@dataclass(frozen=True)
class MergedAuditContext:
    """Offline constants for the merged-behavior decrease audit."""

    gamma_io: float
    gamma_f: float = 1.0
    lam_iv: float = 0.05
    l_0: float = 1.0


def monitor_v_im(series, cfg, ctx, agent=0, vcfg=VerifyConfig()):
    """Decrease of the merged Lyapunov function during simultaneous tasks.

    V = gamma_io*rho_tilde_io^2/2 + gamma_f*rho_tilde_if^2/2, with the rate
    pair chosen per sample by which error dominates. Gated on contact active
    and both errors outside the polynomial band. Flexible task mode only.
    """
    if cfg.task_mode != "flexible":
        raise ConfigurationError("merged monitor supports the flexible task only")
    f = cfg.fttsm
    t = series["t"]
    dist = series["nearest_dist_m"][:, agent]
    active = series["coab_active"][:, agent] > 0.5
    pos = np.stack(
        [series["pos_x_m"][:, agent], series["pos_y_m"][:, agent], series["pos_z_m"][:, agent]],
        axis=-1,
    )
    est = np.stack(
        [series["est_x_m"][:, agent], series["est_y_m"][:, agent], series["est_z_m"][:, agent]],
        axis=-1,
    )
    rho_io = 0.5 * cfg.coab_d_m**2 - 0.5 * dist**2
    dist_f = np.linalg.norm(pos - est, axis=1)
    rho_if = 0.5 * cfg.task_d_i0_m**2 - 0.5 * dist_f**2
    v = ctx.gamma_io * rho_io**2 / 2.0 + ctx.gamma_f * rho_if**2 / 2.0
    eta1, eta2, eta3, eta4 = merged_decrease_rates(
        ctx.gamma_io, ctx.gamma_f, ctx.lam_iv, f.phi_s, ctx.l_0, f
    )
    e_hi = (f.r1 * f.r0 + 1.0) / 2.0
    e_lo = (f.r2 * f.r0 + 1.0) / 2.0
    case_one = np.abs(rho_io) >= np.abs(rho_if)
    rate_hi = np.where(case_one, eta1, eta3)
    rate_lo = np.where(case_one, eta2, eta4)
    rhs = -rate_hi * v**e_hi - rate_lo * v**e_lo
    gate = (
        active
        & np.isfinite(dist)
        & (np.abs(rho_io) > f.phi_s)
        & (np.abs(rho_if) > f.phi_s)
    )
    return _monitor("V_iM", t, v, rhs, gate, vcfg)


# ---------------------------------------------------------------------------
# band confinement (surface boxes)


def lemma_band_check(series, cfg, window_frac=0.1):
    """Check the terminal error box implied by a persistent surface band.

    Takes the trailing ``window_frac`` of the run, reads each agent's
    persistent band delta_s = sup ||S_i|| there, computes the implied bounds
    on |x_tilde1| and |x_tilde2| componentwise, and compares against the
    logged errors (velocity error via a sampled backward difference of the
    reference). Returns (overall_pass, per_agent list).
    """
    t = series["t"]
    n_agents = series["pos_x_m"].shape[1]
    n = len(t)
    w0 = int(math.floor(n * (1.0 - window_frac)))
    if w0 < 1 or n - w0 < 3:
        raise ConfigurationError("window too small for the band check")
    f = cfg.fttsm
    reports = []
    overall = True
    pos = np.stack([series["pos_x_m"], series["pos_y_m"], series["pos_z_m"]], axis=-1)
    xd = np.stack([series["xd_x_m"], series["xd_y_m"], series["xd_z_m"]], axis=-1)
    vel = np.stack([series["vel_x_mps"], series["vel_y_mps"], series["vel_z_mps"]], axis=-1)
    dts = np.diff(t)
    for i in range(n_agents):
        ds = float(series["s_norm"][w0:, i].max())
        d0, d1, d2 = lemma7_bounds(ds, cfg.sliding)
        bound1 = max(f.phi_s, d1) + 0.01
        bound2 = max(d0, d2) + 0.01
        x_t1 = np.abs(pos[w0:, i] - xd[w0:, i]).max()
        xd_dot = (xd[1:, i] - xd[:-1, i]) / dts[:, None]
        x_t2 = np.abs(vel[w0:, i] - xd_dot[w0 - 1 :]).max()
        ok = bool(x_t1 <= bound1 and x_t2 <= bound2)
        overall = overall and ok
        reports.append(
            {
                "agent": i,
                "delta_s": ds,
                "pos_err_max": float(x_t1),
                "pos_bound": float(bound1),
                "vel_err_max": float(x_t2),
                "vel_bound": float(bound2),
                "passed": ok,
            }
        )
    return overall, reports


# ---------------------------------------------------------------------------
# deadlock escape audit


def escape_audit(series, cfg, agent=0):
    """Recompute the behavior-cancellation residual along a logged probe run.

    Valid for a single static obstacle, frozen estimate, fixed avoidance gain,
    flexible task. Returns a dict with the first time the residual leaves the
    trigger ball, the fraction of samples with the escape hold active, and the
    terminal task distances.
    """
    from .behaviors import CtbTask, coab_evaluate, ctb_evaluate

    if cfg.lambda_policy != "fixed":
        raise ConfigurationError("escape audit needs lambda_policy 'fixed'")
    obstacles = cfg.obstacle_list()
    if len(obstacles) != 1 or obstacles[0].kind != "static":
        raise ConfigurationError("escape audit needs exactly one static obstacle")
    if cfg.estimator_enabled:
        raise ConfigurationError("escape audit needs a frozen estimate")
    base = obstacles[0].position(0.0)
    t = series["t"]
    pos = np.stack(
        [series["pos_x_m"][:, agent], series["pos_y_m"][:, agent], series["pos_z_m"][:, agent]],
        axis=-1,
    )
    est = np.stack(
        [series["est_x_m"][:, agent], series["est_y_m"][:, agent], series["est_z_m"][:, agent]],
        axis=-1,
    )
    task = CtbTask(mode="flexible", d_i0=cfg.task_d_i0_m, lam_f=cfg.lam_f)
    cancel = np.zeros(len(t))
    zero3 = np.zeros(3)
    for k in range(len(t)):
        io = coab_evaluate(
            pos[k], base, zero3, cfg.coab_d_m, cfg.lambda_fixed, cfg.fttsm, force_active=True
        )
        fo = ctb_evaluate(pos[k], est[k], zero3, task, cfg.fttsm)
        cancel[k] = float(np.linalg.norm(io.x_dot + fo.x_dot))
    outside = np.nonzero(cancel > cfg.escape.eps_lm)[0]
    first_exit = float(t[outside[0]]) if len(outside) else None
    dist_o = float(np.linalg.norm(pos[-1] - base))
    dist_f = float(np.linalg.norm(pos[-1] - est[-1]))
    esc_frac = float((series["escape_active"][:, agent] > 0.5).mean())
    return {
        "start_residual": float(cancel[0]),
        "first_exit_s": first_exit,
        "escape_fraction": esc_frac,
        "final_obstacle_dist_m": dist_o,
        "final_task_dist_m": dist_f,
    }


# ---------------------------------------------------------------------------
# power-sum inequality spot checks


def power_sum_check(rng, count, max_terms=8, rel_tol=1e-12):
    """Randomized check of the power-sum comparisons behind the rate algebra.

    For nonnegative xi: sum(xi^k1) >= N^(1-k1) * (sum xi)^k1 when k1 > 1, and
    sum(xi^k2) >= (sum xi)^k2 when 0 < k2 <= 1. Returns (violations,
    worst_deficit) where deficit is the relative shortfall of the left side.
    """
    violations = 0
    worst = 0.0
    for _ in range(count):
        n = int(rng.integers(1, max_terms + 1))
        xi = np.exp(rng.uniform(-6.0, 6.0, size=n) * math.log(10.0) / 2.0)
        k1 = float(rng.uniform(1.0, 4.0))
        while k1 <= 1.0:
            k1 = float(rng.uniform(1.0, 4.0))
        k2 = float(rng.uniform(0.0, 1.0))
        while k2 <= 0.0:
            k2 = float(rng.uniform(0.0, 1.0))
        s = xi.sum()
        lhs1 = float(np.sum(xi**k1))
        rhs1 = n ** (1.0 - k1) * s**k1
        lhs2 = float(np.sum(xi**k2))
        rhs2 = s**k2
        for lhs, rhs in ((lhs1, rhs1), (lhs2, rhs2)):
            if lhs < rhs * (1.0 - rel_tol):
                violations += 1
                worst = max(worst, (rhs - lhs) / rhs)
    return violations, worst
