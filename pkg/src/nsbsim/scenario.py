"""Scenario configuration, the deterministic simulation loop, and run outputs.

A scenario is a JSON document (or dict) fixing every free parameter: agents,
graph, leader path, obstacles, behavior/controller/estimator gains, timing,
and the RNG seed. ``Simulation`` advances the world with a fixed step order:

    snapshot -> estimator derivatives -> behaviors -> merge -> CLIK ->
    sliding surface -> control -> integrate

so that identical configs and seeds produce bit-identical logs. Output is a
flat CSV (one row per agent per sample), a metrics JSON computed from the
logged series, and a manifest tying both to the config hash.

Three modes share the loop: ``full`` runs the plants and the controller,
``kinematic`` moves agents directly at the merged desired velocity (behavior
analysis), ``estimator_only`` freezes the agents and integrates only the
leader estimates.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .behaviors import (
    CtbTask,
    FttsmParams,
    alpha_power,
    coab_evaluate,
    ctb_evaluate,
    fttsm_alpha,
)
from .composer import EscapeConfig, EscapeState, MergedVelocity, lambda_star, merge
from .controller import (
    GainSchedule,
    GainSegment,
    SlidingParams,
    alpha_tracking_rate,
    control_step,
    make_adaptive_state,
    sliding_surface,
    surface_branches,
)
from .core import CommGraph, ConfigurationError, SimulationFault
from .estimator import EstimatorConfig, estimator_derivative_all
from .plant import Obstacle, clik_step, default_catalog, integrate_step, nearest_object, stock_obstacles

log = logging.getLogger("nsbsim.scenario")

CSV_COLUMNS = [
    "t_s",
    "agent",
    "pos_x_m",
    "pos_y_m",
    "pos_z_m",
    "vel_x_mps",
    "vel_y_mps",
    "vel_z_mps",
    "est_x_m",
    "est_y_m",
    "est_z_m",
    "xd_x_m",
    "xd_y_m",
    "xd_z_m",
    "s_norm",
    "u_x",
    "u_y",
    "u_z",
    "nearest_dist_m",
    "coab_active",
    "escape_active",
]

MODES = ("full", "kinematic", "estimator_only")


@dataclass(frozen=True)
class LeaderPath:
    """Analytic leader trajectory: constant-velocity line from ``base``."""

    base: np.ndarray
    velocity: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "base", np.asarray(self.base, dtype=float))
        object.__setattr__(self, "velocity", np.asarray(self.velocity, dtype=float))

    def position(self, t):
        return self.base + t * self.velocity

    def velocity_at(self, t):
        return self.velocity.copy()

    def sup_speed_inf(self):
        """sup over time of the componentwise speed (constant here)."""
        return float(np.max(np.abs(self.velocity)))


def _schedule_from_dict(d):
    if "segments" in d:
        segs = tuple(
            GainSegment(
                k_m=float(s["k_m"]),
                c=float(s["c"]),
                t0=float(s["t0"]),
                zeta=float(s.get("zeta", 1.0)),
                zeta0=int(s.get("zeta0", 0)),
            )
            for s in d["segments"]
        )
        return GainSchedule(k0=float(d["k0"]), segments=segs)
    return GainSchedule(
        k0=float(d["k0"]),
        segments=(GainSegment(k_m=float(d["k_m"]), c=float(d["c"]), t0=float(d["t0"])),),
    )


def _schedule_to_dict(s):
    return {
        "k0": s.k0,
        "segments": [
            {"k_m": g.k_m, "c": g.c, "t0": g.t0, "zeta": g.zeta, "zeta0": g.zeta0}
            for g in s.segments
        ],
    }


_DEFAULT_SCHEDULE = {"k0": 0.1, "k_m": 100.0, "c": 0.01, "t0": 500.0}


@dataclass
class ScenarioConfig:
    """Complete description of one run. See the bundled JSON files for shape."""

    name: str
    mode: str = "full"
    seed: int = 0
    dt_s: float = 1e-3
    duration_s: float = 45.0
    sample_every: int = 10
    initial_positions_m: np.ndarray = field(default_factory=lambda: np.zeros((1, 3)))
    initial_velocities_mps: np.ndarray | None = None
    graph_edges: tuple = ()
    leader_agents: tuple = (0,)
    leader_gain: float = 1.0
    leader_base_m: tuple = (0.0, 0.0, 0.0)
    leader_velocity_mps: tuple = (0.0, 0.0, 0.9)
    obstacles: str | tuple = "stock"
    # behaviors
    fttsm: FttsmParams = field(default_factory=FttsmParams)
    coab_d_m: float = 2.0
    sensing_range_m: float = 10.0
    coab_always_active: bool = False
    task_mode: str = "flexible"
    task_d_i0_m: float = 3.0
    task_offsets_m: np.ndarray | None = None
    lam_f: float = 1.0
    ctb_enabled: bool = True
    # composer
    lambda_policy: str = "state"
    lambda_fixed: float = 1.0
    lambda_offset: float = 0.01
    lambda_floors: tuple = ()
    escape: EscapeConfig = field(default_factory=EscapeConfig)
    # estimator
    estimator_enabled: bool = True
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    initial_estimates_m: np.ndarray | None = None
    estimate_scale: float = 1.0
    est_vel_filter_steps: int = 20
    # controller
    sliding: SlidingParams = field(default_factory=SlidingParams)
    gamma1: float = 1.2
    gamma2: float = 0.6
    gamma3: float = 1.0
    k1_schedule: GainSchedule = field(default_factory=lambda: _schedule_from_dict(_DEFAULT_SCHEDULE))
    k2_schedule: GainSchedule = field(default_factory=lambda: _schedule_from_dict(_DEFAULT_SCHEDULE))
    rbf_h: int = 6
    rbf_width: float = math.sqrt(2.0)
    rbf_gain: float = 1.0
    delta_hat_init: float = 0.1
    sgn_eps: float = 0.0
    clik_gain: float = 1.0
    # metrics
    settling_tol_m: float = 0.02
    est_tol_m: float = 1e-3
    precision_times_s: tuple = (20.0, 45.0)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}")
        if self.dt_s <= 0 or self.duration_s <= 0:
            raise ConfigurationError("dt_s and duration_s must be positive")
        if self.sample_every < 1:
            raise ConfigurationError("sample_every must be at least 1")
        if self.task_mode not in ("flexible", "fixed"):
            raise ConfigurationError("task_mode must be 'flexible' or 'fixed'")
        if self.lambda_policy not in ("state", "fixed"):
            raise ConfigurationError("lambda_policy must be 'state' or 'fixed'")
        self.initial_positions_m = np.atleast_2d(np.asarray(self.initial_positions_m, dtype=float))
        if self.initial_positions_m.shape[1] != 3:
            raise ConfigurationError("initial positions must be (n, 3)")
        n = self.n_agents
        if self.initial_velocities_mps is None:
            self.initial_velocities_mps = np.zeros((n, 3))
        else:
            self.initial_velocities_mps = np.atleast_2d(
                np.asarray(self.initial_velocities_mps, dtype=float)
            )
            if self.initial_velocities_mps.shape != (n, 3):
                raise ConfigurationError("initial velocities must match (n, 3)")
        if self.task_mode == "fixed":
            if self.task_offsets_m is None:
                raise ConfigurationError("fixed task mode requires task_offsets_m")
            self.task_offsets_m = np.atleast_2d(np.asarray(self.task_offsets_m, dtype=float))
            if self.task_offsets_m.shape != (n, 3):
                raise ConfigurationError("task offsets must match (n, 3)")
        if self.initial_estimates_m is not None:
            self.initial_estimates_m = np.atleast_2d(
                np.asarray(self.initial_estimates_m, dtype=float)
            )
            if self.initial_estimates_m.shape != (n, 3):
                raise ConfigurationError("initial estimates must match (n, 3)")
        for e in self.graph_edges:
            i, j = int(e[0]), int(e[1])
            if not (0 <= i < n and 0 <= j < n) or i == j:
                raise ConfigurationError(f"graph edge {e} is out of range or a self-loop")
        for a in self.leader_agents:
            if not 0 <= int(a) < n:
                raise ConfigurationError(f"leader agent index {a} out of range")
        if self.est_vel_filter_steps < 1:
            raise ConfigurationError("est_vel_filter_steps must be at least 1")
        if self.estimator_enabled:
            sup_speed = LeaderPath(self.leader_base_m, self.leader_velocity_mps).sup_speed_inf()
            if self.estimator.k3_gain < sup_speed:
                raise ConfigurationError(
                    "estimator signum gain K3 must dominate the leader speed "
                    f"(K3={self.estimator.k3_gain}, sup speed={sup_speed})"
                )

    @property
    def n_agents(self):
        return self.initial_positions_m.shape[0]

    def graph(self):
        n = self.n_agents
        a = np.zeros((n, n))
        for i, j in self.graph_edges:
            a[int(i), int(j)] = 1.0
            a[int(j), int(i)] = 1.0
        b = np.zeros(n)
        for i in self.leader_agents:
            b[int(i)] = self.leader_gain
        return CommGraph(adjacency=a, leader_gains=b)

    def leader_path(self):
        return LeaderPath(self.leader_base_m, self.leader_velocity_mps)

    def obstacle_list(self):
        if self.obstacles == "stock":
            return stock_obstacles()
        return [Obstacle(kind=o["kind"], base=o["base_m"]) for o in self.obstacles]

    def tasks(self):
        out = []
        for i in range(self.n_agents):
            if self.task_mode == "flexible":
                out.append(CtbTask(mode="flexible", d_i0=self.task_d_i0_m, lam_f=self.lam_f))
            else:
                out.append(
                    CtbTask(mode="fixed", offset=self.task_offsets_m[i], lam_f=self.lam_f)
                )
        return out

    def to_dict(self):
        f = self.fttsm
        s = self.sliding
        e = self.estimator
        d = {
            "name": self.name,
            "mode": self.mode,
            "seed": self.seed,
            "dt_s": self.dt_s,
            "duration_s": self.duration_s,
            "sample_every": self.sample_every,
            "initial_positions_m": self.initial_positions_m.tolist(),
            "initial_velocities_mps": self.initial_velocities_mps.tolist(),
            "graph_edges": [list(map(int, ed)) for ed in self.graph_edges],
            "leader_agents": list(map(int, self.leader_agents)),
            "leader_gain": self.leader_gain,
            "leader_base_m": list(self.leader_base_m),
            "leader_velocity_mps": list(self.leader_velocity_mps),
            "obstacles": (
                "stock"
                if self.obstacles == "stock"
                else [{"kind": o["kind"], "base_m": list(o["base_m"])} for o in self.obstacles]
            ),
            "fttsm": {
                "beta1": f.beta1,
                "beta2": f.beta2,
                "r0": f.r0,
                "r1": f.r1,
                "r2": f.r2,
                "phi_s": f.phi_s,
                "c0": f.c0,
            },
            "coab_d_m": self.coab_d_m,
            "sensing_range_m": self.sensing_range_m,
            "coab_always_active": self.coab_always_active,
            "task_mode": self.task_mode,
            "task_d_i0_m": self.task_d_i0_m,
            "task_offsets_m": (
                None if self.task_offsets_m is None else self.task_offsets_m.tolist()
            ),
            "lam_f": self.lam_f,
            "ctb_enabled": self.ctb_enabled,
            "lambda_policy": self.lambda_policy,
            "lambda_fixed": self.lambda_fixed,
            "lambda_offset": self.lambda_offset,
            "lambda_floors": list(self.lambda_floors),
            "escape": {
                "delta_d": self.escape.delta_d,
                "hold_s": self.escape.hold_s,
                "eps_lm": self.escape.eps_lm,
                "angles": None if self.escape.angles is None else list(self.escape.angles),
                "enabled": self.escape.enabled,
            },
            "estimator_enabled": self.estimator_enabled,
            "estimator": {
                "k1_gain": e.k1_gain,
                "k2_gain": e.k2_gain,
                "k3_gain": e.k3_gain,
                "r3": e.r3,
                "r4": e.r4,
                "r5": e.r5,
                "r6": e.r6,
            },
            "initial_estimates_m": (
                None if self.initial_estimates_m is None else self.initial_estimates_m.tolist()
            ),
            "estimate_scale": self.estimate_scale,
            "est_vel_filter_steps": self.est_vel_filter_steps,
            "sliding": {"c1": s.c1, "c2": s.c2, "varrho": s.varrho},
            "gamma1": self.gamma1,
            "gamma2": self.gamma2,
            "gamma3": self.gamma3,
            "k1_schedule": _schedule_to_dict(self.k1_schedule),
            "k2_schedule": _schedule_to_dict(self.k2_schedule),
            "rbf_h": self.rbf_h,
            "rbf_width": self.rbf_width,
            "rbf_gain": self.rbf_gain,
            "delta_hat_init": self.delta_hat_init,
            "sgn_eps": self.sgn_eps,
            "clik_gain": self.clik_gain,
            "settling_tol_m": self.settling_tol_m,
            "est_tol_m": self.est_tol_m,
            "precision_times_s": list(self.precision_times_s),
        }
        return d

    def config_hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    @staticmethod
    def from_dict(raw, name=None):
        raw = dict(raw)
        known = {
            "name",
            "mode",
            "seed",
            "dt_s",
            "duration_s",
            "sample_every",
            "initial_positions_m",
            "initial_velocities_mps",
            "graph_edges",
            "leader_agents",
            "leader_gain",
            "leader_base_m",
            "leader_velocity_mps",
            "obstacles",
            "fttsm",
            "coab_d_m",
            "sensing_range_m",
            "coab_always_active",
            "task_mode",
            "task_d_i0_m",
            "task_offsets_m",
            "lam_f",
            "ctb_enabled",
            "lambda_policy",
            "lambda_fixed",
            "lambda_offset",
            "lambda_floors",
            "escape",
            "estimator_enabled",
            "estimator",
            "initial_estimates_m",
            "estimate_scale",
            "est_vel_filter_steps",
            "sliding",
            "gamma1",
            "gamma2",
            "gamma3",
            "k1_schedule",
            "k2_schedule",
            "rbf_h",
            "rbf_width",
            "rbf_gain",
            "delta_hat_init",
            "sgn_eps",
            "clik_gain",
            "settling_tol_m",
            "est_tol_m",
            "precision_times_s",
        }
        unknown = set(raw) - known
        if unknown:
            raise ConfigurationError(f"unknown scenario keys: {sorted(unknown)}")
        kwargs = {}
        if name is not None:
            kwargs["name"] = name
        elif "name" in raw:
            kwargs["name"] = raw["name"]
        else:
            raise ConfigurationError("scenario needs a name")
        fttsm_d = raw.get("fttsm", {})
        kwargs["fttsm"] = FttsmParams(**fttsm_d)
        sliding_d = dict(raw.get("sliding", {}))
        kwargs["sliding"] = SlidingParams(fttsm=kwargs["fttsm"], **sliding_d)
        if "estimator" in raw:
            kwargs["estimator"] = EstimatorConfig(**raw["estimator"])
        if "escape" in raw:
            esc = dict(raw["escape"])
            if esc.get("angles") is not None:
                esc["angles"] = tuple(esc["angles"])
            kwargs["escape"] = EscapeConfig(**esc)
        for key in ("k1_schedule", "k2_schedule"):
            if key in raw:
                kwargs[key] = _schedule_from_dict(raw[key])
        for key in known - {"name", "fttsm", "sliding", "estimator", "escape", "k1_schedule", "k2_schedule"}:
            if key in raw and raw[key] is not None:
                kwargs[key] = raw[key]
        for key in ("graph_edges", "leader_agents", "lambda_floors", "precision_times_s"):
            if key in kwargs:
                kwargs[key] = tuple(tuple(x) if isinstance(x, list) else x for x in kwargs[key])
        if "obstacles" in kwargs and kwargs["obstacles"] != "stock":
            kwargs["obstacles"] = tuple(kwargs["obstacles"])
        return ScenarioConfig(**kwargs)


def load_scenario(ref):
    """Load a scenario by bundled name or filesystem path."""
    p = Path(ref)
    if p.suffix == ".json" and p.exists():
        return ScenarioConfig.from_dict(json.loads(p.read_text()))
    bundle = resources.files("nsbsim") / "scenarios" / f"{ref}.json"
    if bundle.is_file():
        return ScenarioConfig.from_dict(json.loads(bundle.read_text()))
    raise ConfigurationError(f"unknown scenario '{ref}' (not a file, not bundled)")


def bundled_scenarios():
    """Names of the scenario files shipped with the package."""
    root = resources.files("nsbsim") / "scenarios"
    return sorted(f.name[:-5] for f in root.iterdir() if f.name.endswith(".json"))


@dataclass
class RunResult:
    run_dir: Path
    csv_path: Path
    metrics: dict
    config: ScenarioConfig
    wall_s: float
    fault: str | None = None


class Simulation:
    """Stateful world advanced by the fixed step order. Not reusable after run()."""

    def __init__(self, cfg):
        self.cfg = cfg
        n = cfg.n_agents
        self.n = n
        self.t = 0.0
        self.k = 0
        self.x1 = cfg.initial_positions_m.copy()
        self.x2 = cfg.initial_velocities_mps.copy()
        self.leader = cfg.leader_path()
        base_est = (
            cfg.initial_estimates_m
            if cfg.initial_estimates_m is not None
            else cfg.initial_positions_m
        )
        x_o0 = self.leader.position(0.0)
        self.x_hat = x_o0 + cfg.estimate_scale * (base_est - x_o0)
        self.x_id = cfg.initial_positions_m.copy()
        self.graph = cfg.graph() if cfg.estimator_enabled else None
        if cfg.estimator_enabled:
            # fail fast on topologies the estimator cannot use
            from .core import build_h_matrix

            build_h_matrix(self.graph)
        self.obstacles = cfg.obstacle_list()
        self.tasks = cfg.tasks()
        self.catalog = default_catalog(n)
        self.rng = np.random.default_rng(cfg.seed)
        self.esc_states = [EscapeState() for _ in range(n)]
        self.adaptive = [
            make_adaptive_state(
                h=cfg.rbf_h,
                dim=15,
                delta0=cfg.delta_hat_init,
                gamma3=cfg.gamma3,
                gain=cfg.rbf_gain,
                width=cfg.rbf_width,
            )
            for _ in range(n)
        ]
        self.est_vel_filt = np.zeros((n, 3))
        self.prev_rho_t_coab = np.zeros(n)
        self.prev_rho_t_ctb = np.zeros(n)
        self.have_prev_coab = np.zeros(n, dtype=bool)
        self.have_prev_ctb = np.zeros(n, dtype=bool)
        self.prev_x_dot_id = np.zeros((n, 3))
        self.prev_x_tilde1 = np.zeros((n, 3))
        self.have_prev_step = False
        self.max_z_norm = np.zeros(n)
        self.rows = []
        self._zeros_n3 = np.zeros((n, 3))
        self._est_records = [(math.inf, False, False)] * n

    # -- one pipeline evaluation at the current state --------------------------------

    def _pipeline(self):
        cfg = self.cfg
        n = self.n
        dt = cfg.dt_s
        t = self.t
        x1, x2, x_hat, x_id = self.x1, self.x2, self.x_hat, self.x_id

        if cfg.estimator_enabled:
            est_deriv = estimator_derivative_all(
                x_hat, self.leader.position(t), self.graph, cfg.estimator
            )
        else:
            est_deriv = np.zeros((n, 3))
        if cfg.mode == "estimator_only":
            z = self._zeros_n3
            return est_deriv, z, z, z, self.adaptive, x_id, self._est_records
        if cfg.estimator_enabled:
            self.est_vel_filt += (est_deriv - self.est_vel_filt) / cfg.est_vel_filter_steps
        est_vel = self.est_vel_filt

        records = []
        merged_all = np.zeros((n, 3))
        u_all = np.zeros((n, 3))
        s_all = np.zeros((n, 3))
        new_adaptive = list(self.adaptive)
        new_x_id = x_id.copy()

        for i in range(n):
            nearest = nearest_object(
                i, x1, self.obstacles, t, cfg.sensing_range_m, agent_velocities=x2
            )
            x_tilde1 = x1[i] - x_id[i]
            if nearest is None:
                coab_out = None
                nearest_dist = math.inf
            else:
                obj_pos, obj_vel, nearest_dist = nearest
                rho_t = 0.5 * cfg.coab_d_m**2 - 0.5 * nearest_dist**2
                if self.have_prev_coab[i]:
                    rho_t_dot = (rho_t - self.prev_rho_t_coab[i]) / dt
                else:
                    rho_t_dot = 0.0
                self.prev_rho_t_coab[i] = rho_t
                self.have_prev_coab[i] = True
                lam_io = self._lambda_io(i, nearest_dist, rho_t, rho_t_dot, x_tilde1)
                coab_out = coab_evaluate(
                    x1[i],
                    obj_pos,
                    obj_vel,
                    cfg.coab_d_m,
                    lam_io,
                    cfg.fttsm,
                    rho_tilde_dot=rho_t_dot,
                    force_active=cfg.coab_always_active,
                )
            if coab_out is None:
                self.have_prev_coab[i] = False

            if cfg.ctb_enabled:
                task = self.tasks[i]
                if task.mode == "flexible":
                    diff_f = x1[i] - x_hat[i]
                    rho_tf = 0.5 * task.d_i0**2 - 0.5 * float(diff_f @ diff_f)
                else:
                    diff_f = x1[i] - x_hat[i] - task.offset
                    rho_tf = -0.5 * float(diff_f @ diff_f)
                if self.have_prev_ctb[i]:
                    rho_tf_dot = (rho_tf - self.prev_rho_t_ctb[i]) / dt
                else:
                    rho_tf_dot = 0.0
                self.prev_rho_t_ctb[i] = rho_tf
                self.have_prev_ctb[i] = True
                ctb_out = ctb_evaluate(
                    x1[i], x_hat[i], est_vel[i], task, cfg.fttsm, rho_tilde_dot=rho_tf_dot
                )
                ctb_x_dot = ctb_out.x_dot
            else:
                ctb_x_dot = np.zeros(3)

            if coab_out is None:
                merged = MergedVelocity(
                    x_dot_id=ctb_x_dot, escape_active=False, lambda_used=0.0
                )
            else:
                merged = merge(
                    coab_out.x_dot,
                    ctb_x_dot,
                    coab_out.jacobian,
                    coab_out.active,
                    cfg.escape,
                    self.esc_states[i],
                    self.rng,
                    x1[i],
                    obj_pos,
                    t,
                    lambda_used=lam_io if coab_out.active else 0.0,
                )
            merged_all[i] = merged.x_dot_id
            new_x_id[i] = clik_step(x_id[i], merged.x_dot_id, x1[i], cfg.clik_gain, dt)

            if cfg.mode == "full":
                x_tilde2 = x2[i] - merged.x_dot_id
                if self.have_prev_step:
                    x_tilde1_dot = (x_tilde1 - self.prev_x_tilde1[i]) / dt
                    xdd_id = (merged.x_dot_id - self.prev_x_dot_id[i]) / dt
                else:
                    x_tilde1_dot = np.zeros(3)
                    xdd_id = np.zeros(3)
                s_vec = sliding_surface(x_tilde1, x_tilde2, x_tilde1_dot, cfg.sliding)
                patch = surface_branches(x_tilde1, x_tilde2, cfg.sliding)
                _, alpha_dot = alpha_tracking_rate(x_tilde1, x_tilde1_dot, patch, cfg.sliding)
                z = np.concatenate([x1[i], x2[i], xdd_id, x_tilde1_dot, alpha_dot])
                zn = float(np.linalg.norm(z))
                if zn > self.max_z_norm[i]:
                    self.max_z_norm[i] = zn
                u_i, new_adaptive[i] = control_step(
                    s_vec,
                    z,
                    t,
                    self.adaptive[i],
                    cfg.k1_schedule,
                    cfg.k2_schedule,
                    cfg.gamma1,
                    cfg.gamma2,
                    dt,
                    sgn_eps=cfg.sgn_eps,
                )
                u_all[i] = u_i
                s_all[i] = s_vec
            self.prev_x_tilde1[i] = x_tilde1
            self.prev_x_dot_id[i] = merged.x_dot_id
            records.append(
                (
                    nearest_dist,
                    bool(coab_out is not None and coab_out.active),
                    bool(merged.escape_active),
                )
            )
        return est_deriv, merged_all, u_all, s_all, new_adaptive, new_x_id, records

    def _lambda_io(self, i, dist, rho_t, rho_t_dot, x_tilde1):
        cfg = self.cfg
        if cfg.lambda_policy == "fixed":
            return cfg.lambda_fixed
        alpha_io = fttsm_alpha(rho_t, rho_t_dot, cfg.fttsm)
        alpha_s = alpha_power(x_tilde1, cfg.fttsm)
        lam = lambda_star(
            dist,
            alpha_io,
            self.x2[i],
            x_tilde1,
            alpha_s,
            cfg.sliding.c1,
            cfg.sliding.c2,
            min_gain=0.0,
        )
        return max(lam + cfg.lambda_offset, *(tuple(cfg.lambda_floors) or (0.0,)))

    def _log(self, records, s_all, u_all):
        t = self.t
        for i in range(self.n):
            nearest_dist, coab_active, escape_active = records[i]
            self.rows.append(
                (
                    t,
                    i,
                    self.x1[i, 0],
                    self.x1[i, 1],
                    self.x1[i, 2],
                    self.x2[i, 0],
                    self.x2[i, 1],
                    self.x2[i, 2],
                    self.x_hat[i, 0],
                    self.x_hat[i, 1],
                    self.x_hat[i, 2],
                    self.x_id[i, 0],
                    self.x_id[i, 1],
                    self.x_id[i, 2],
                    float(np.linalg.norm(s_all[i])),
                    u_all[i, 0],
                    u_all[i, 1],
                    u_all[i, 2],
                    nearest_dist,
                    int(coab_active),
                    int(escape_active),
                )
            )

    def run(self):
        cfg = self.cfg
        dt = cfg.dt_s
        steps = int(round(cfg.duration_s / dt))
        for k in range(steps):
            self.k = k
            est_deriv, merged_all, u_all, s_all, new_adaptive, new_x_id, records = (
                self._pipeline()
            )
            if k % cfg.sample_every == 0:
                self._log(records, s_all, u_all)
            # integrate
            if cfg.mode == "full":
                self.x1, self.x2 = integrate_step(
                    self.x1, self.x2, u_all, self.t, dt, self.catalog
                )
            elif cfg.mode == "kinematic":
                self.x1 = self.x1 + dt * merged_all
                self.x2 = merged_all.copy()
            if cfg.estimator_enabled:
                self.x_hat = self.x_hat + dt * est_deriv
            self.x_id = new_x_id
            self.adaptive = new_adaptive
            self.have_prev_step = True
            self.t = (k + 1) * dt
        # terminal sample: evaluate the pipeline once more at the final state
        est_deriv, merged_all, u_all, s_all, _, _, records = self._pipeline()
        self._log(records, s_all, u_all)


def run_scenario(cfg, out_dir):
    """Run a scenario and write csv/metrics/manifest into ``out_dir``.

    Returns a RunResult; a SimulationFault is captured into the result (and
    the partial log is still written) rather than propagated.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sim = Simulation(cfg)
    fault = None
    start = time.perf_counter()
    try:
        sim.run()
    except SimulationFault as exc:
        fault = str(exc)
        log.error("simulation fault: %s", fault)
    wall = time.perf_counter() - start
    csv_path = out_dir / "series.csv"
    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in sim.rows:
            writer.writerow([_fmt(v) for v in row])
    series = rows_to_series(sim.rows, sim.n)
    metrics = compute_metrics(series, cfg)
    metrics["wall_s"] = wall
    metrics["fault"] = fault
    metrics["adaptive"] = {
        "delta_hat_final": [st.delta_hat for st in sim.adaptive],
        "w_fro_final": [float(np.linalg.norm(st.weights)) for st in sim.adaptive],
        "max_z_norm": sim.max_z_norm.tolist(),
    }
    (out_dir / "metrics.json").write_text(json.dumps(metrics, indent=2, sort_keys=True))
    manifest = {
        "name": cfg.name,
        "config": cfg.to_dict(),
        "config_sha256": cfg.config_hash(),
        "seed": cfg.seed,
        "code_version": __version__,
        "columns": CSV_COLUMNS,
        "rows": len(sim.rows),
        "fault": fault,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return RunResult(
        run_dir=out_dir,
        csv_path=csv_path,
        metrics=metrics,
        config=cfg,
        wall_s=wall,
        fault=fault,
    )


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def rows_to_series(rows, n):
    """Column arrays keyed by name, reshaped to (n_samples, n_agents)."""
    arr = np.array([[float(v) for v in row] for row in rows], dtype=float)
    if arr.size == 0:
        raise SimulationFault("run produced no samples")
    n_samples = arr.shape[0] // n
    out = {}
    for ci, name in enumerate(CSV_COLUMNS):
        col = arr[:, ci].reshape(n_samples, n)
        out[name] = col
    out["t"] = out["t_s"][:, 0]
    return out


def load_series(csv_path):
    """Reload a written series.csv into the same structure as rows_to_series."""
    with Path(csv_path).open() as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_COLUMNS:
            raise ConfigurationError("series file does not match the expected columns")
        rows = [[float(v) for v in row] for row in reader]
    n = int(max(r[1] for r in rows)) + 1
    return rows_to_series(rows, n)


def compute_metrics(series, cfg):
    """Scalar summaries as pure functions of the logged series."""
    t = series["t"]
    pos = np.stack([series["pos_x_m"], series["pos_y_m"], series["pos_z_m"]], axis=-1)
    xd = np.stack([series["xd_x_m"], series["xd_y_m"], series["xd_z_m"]], axis=-1)
    est = np.stack([series["est_x_m"], series["est_y_m"], series["est_z_m"]], axis=-1)
    err = np.linalg.norm(pos - xd, axis=-1)  # (n_samples, n_agents)
    n_agents = err.shape[1]

    settling = {}
    for i in range(n_agents):
        settling[str(i)] = _settle_time(t, err[:, i], cfg.settling_tol_m)
    settle_vals = [v for v in settling.values() if v is not None]
    settle_all = max(settle_vals) if len(settle_vals) == n_agents else None

    precision = {}
    for t_q in cfg.precision_times_s:
        idx = int(np.argmin(np.abs(t - t_q)))
        precision[repr(float(t_q))] = {
            "at_s": float(t[idx]),
            "mean_error_m": float(err[idx].mean()),
            "max_error_m": float(err[idx].max()),
        }

    dist = series["nearest_dist_m"]
    finite = np.isfinite(dist)
    min_overall = float(dist[finite].min()) if finite.any() else None
    min_after = None
    if settle_all is not None:
        mask = t >= settle_all
        block = dist[mask]
        fin = np.isfinite(block)
        if fin.any():
            min_after = float(block[fin].min())

    leader = cfg.leader_path()
    x_o = np.array([leader.position(tk) for tk in t])
    est_err = np.linalg.norm(est - x_o[:, None, :], axis=-1).max(axis=1)
    est_settle = _settle_time(t, est_err, cfg.est_tol_m)

    return {
        "settling_time_s": settling,
        "settling_time_max_s": settle_all,
        "precision_index": precision,
        "min_distance_m": {"overall": min_overall, "after_settling": min_after},
        "estimator": {
            "settling_time_s": est_settle,
            "final_max_error_m": float(est_err[-1]),
            "peak_max_error_m": float(est_err.max()),
        },
        "samples": int(err.shape[0]),
    }


def _settle_time(t, err, tol):
    """First sample time after the last excursion above tol; None if unsettled."""
    above = np.nonzero(err > tol)[0]
    if len(above) == 0:
        return float(t[0])
    last = above[-1]
    if last == len(t) - 1:
        return None
    return float(t[last + 1])
