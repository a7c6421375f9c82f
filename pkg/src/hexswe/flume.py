"""Flume-backed gauge runner for calibration and the synthetic-truth
experiment generator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import steady_flume_profile
from .calibrate import Experiment, ExperimentSet
from .errors import ConfigError, NumericError


@dataclass(frozen=True)
class FlumeConfig:
    """Geometry and numerics of the calibration flume."""

    length: float = 6.0
    width: float = 0.45
    radius: float = 0.1
    slope: float = 0.004
    cfl: float = 0.4
    steady_tol: float = 1e-6
    steady_window: float = 10.0
    t_max: float = 3000.0


class FlumeGaugeRunner:
    """Evaluate steady gauge depths for an experiment at given friction
    parameters; results are cached because direct search revisits points."""

    def __init__(self, config: FlumeConfig):
        self.config = config
        self.cache: dict = {}
        self.runs = 0

    def __call__(self, experiment: Experiment, alpha_s: float, alpha_p: float):
        key = (experiment.label, float(alpha_s), float(alpha_p))
        if key in self.cache:
            return self.cache[key]
        cfg = self.config
        x, h, _, converged = steady_flume_profile(
            length=cfg.length,
            width=cfg.width,
            radius=cfg.radius,
            slope=cfg.slope,
            theta_breaks=experiment.theta_breaks,
            theta_values=experiment.theta_values,
            q=experiment.q,
            alpha_s=alpha_s,
            alpha_p=alpha_p,
            cfl=cfg.cfl,
            tol=cfg.steady_tol,
            window=cfg.steady_window,
            t_max=cfg.t_max,
        )
        self.runs += 1
        if not converged:
            raise NumericError(
                f"experiment {experiment.label!r} did not reach steady state at "
                f"alpha_s={alpha_s:g}, alpha_p={alpha_p:g}"
            )
        gx = np.asarray(experiment.gauge_x, dtype=np.float64)
        if gx.min() < x.min() or gx.max() > x.max():
            raise ConfigError(
                f"experiment {experiment.label!r} has a gauge outside the computed channel"
            )
        depths = np.interp(gx, x, h)
        self.cache[key] = depths
        return depths


def standard_layout(name: str, x_jump: float, theta_v: float):
    """Porosity layout presets: vegetation downstream/upstream of the jump,
    bare soil, or a uniform cover ``uniform:<theta>``."""
    name = name.strip().lower()
    if name == "veg_down":
        return (x_jump,), (1.0, theta_v)
    if name == "veg_up":
        return (x_jump,), (theta_v, 1.0)
    if name == "bare":
        return (), (1.0,)
    if name.startswith("uniform:"):
        return (), (float(name.split(":", 1)[1]),)
    raise ConfigError(f"unknown porosity layout {name!r}")


def synthetic_experiment_set(
    runner: FlumeGaugeRunner,
    cases,
    gauge_x,
    alpha_s_true: float,
    alpha_p_true: float,
    x_jump: float = 9.0,
    theta_v: float = 0.99364,
    noise_mm: float = 0.0,
    seed: int = 0,
) -> ExperimentSet:
    """Generate gauge "measurements" from solver runs at known friction
    parameters (the twin-experiment protocol; the original flume gauge data
    is not published).

    ``cases`` is a list of (label, q, layout_name).
    """
    rng = np.random.default_rng(seed)
    exps = []
    for label, q, layout in cases:
        breaks, values = standard_layout(layout, x_jump, theta_v)
        probe = Experiment(
            label=label,
            q=q,
            theta_breaks=breaks,
            theta_values=values,
            gauge_x=tuple(gauge_x),
            h_measured=tuple(0.0 for _ in gauge_x),
        )
        depths = np.asarray(runner(probe, alpha_s_true, alpha_p_true), dtype=np.float64)
        if noise_mm > 0:
            depths = depths + rng.normal(0.0, noise_mm / 1000.0, size=depths.size)
        exps.append(
            Experiment(
                label=label,
                q=q,
                theta_breaks=breaks,
                theta_values=values,
                gauge_x=tuple(gauge_x),
                h_measured=tuple(float(d) for d in depths),
            )
        )
    return ExperimentSet(exps)
