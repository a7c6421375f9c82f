"""Gauge-error metrics, sensitivity analysis, and derivative-free
friction-parameter estimation."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Experiment:
    """One steady flume experiment: inflow, porosity layout, gauge data."""

    label: str
    q: float                 # inflow per unit width [m^2/s]
    theta_breaks: tuple      # x positions of porosity transitions
    theta_values: tuple      # porosity per segment
    gauge_x: tuple           # gauge positions [m]
    h_measured: tuple        # measured depths [m]


@dataclass
class ExperimentSet:
    experiments: list

    def __post_init__(self):
        if not self.experiments:
            raise ConfigError("experiment set is empty")
        n_g = len(self.experiments[0].gauge_x)
        for e in self.experiments:
            if len(e.gauge_x) != n_g or len(e.h_measured) != n_g:
                raise ConfigError("all experiments must share the same gauge count")

    @property
    def n_experiments(self) -> int:
        return len(self.experiments)

    @property
    def n_gauges(self) -> int:
        return len(self.experiments[0].gauge_x)


def write_experiments_csv(path, exps: ExperimentSet) -> None:
    """One row per gauge per experiment: experiment id, x, h_measured_mm."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["experiment", "x_m", "h_measured_mm"])
        for e in exps.experiments:
            for x, h in zip(e.gauge_x, e.h_measured):
                writer.writerow([e.label, repr(float(x)), repr(float(h) * 1000.0)])


def read_experiments_csv(path, meta: dict) -> ExperimentSet:
    """Load gauge rows and attach per-experiment (q, porosity layout) from
    ``meta``: label -> dict(q=..., theta_breaks=..., theta_values=...)."""
    rows: dict[str, list] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"experiment", "x_m", "h_measured_mm"}
        if reader.fieldnames is None or not need.issubset(set(reader.fieldnames)):
            raise ConfigError(f"experiments CSV must have columns {sorted(need)}")
        for row in reader:
            rows.setdefault(row["experiment"], []).append(
                (float(row["x_m"]), float(row["h_measured_mm"]) / 1000.0)
            )
    exps = []
    for label, gauges in rows.items():
        if label not in meta:
            raise ConfigError(f"experiment {label!r} has no (q, porosity) metadata")
        m = meta[label]
        xs, hs = zip(*gauges)
        exps.append(
            Experiment(
                label=label,
                q=float(m["q"]),
                theta_breaks=tuple(m.get("theta_breaks", ())),
                theta_values=tuple(m.get("theta_values", (1.0,))),
                gauge_x=xs,
                h_measured=hs,
            )
        )
    return ExperimentSet(exps)


# ---------------------------------------------------------------------------
# Error metrics
# ---------------------------------------------------------------------------


def epsilon_rmse(h_model, h_measured) -> float:
    """Root-mean-square gauge mismatch in millimeters (inputs in meters)."""
    h_model = np.asarray(h_model, dtype=np.float64)
    h_measured = np.asarray(h_measured, dtype=np.float64)
    if h_model.shape != h_measured.shape:
        raise ConfigError("model and measured gauge vectors differ in length")
    return float(np.sqrt(np.mean((h_measured - h_model) ** 2))) * 1000.0


def chi(alpha_s: float, alpha_p: float, exps: ExperimentSet, runner) -> float:
    """Pooled RMS gauge error [mm] over all experiments.

    ``runner(experiment, alpha_s, alpha_p)`` returns the modeled depths at
    the experiment's gauges (meters).  The pooled denominator is
    N_e * N_g (102 for the six 17-gauge experiments).
    """
    sq_sum = 0.0
    count = 0
    for e in exps.experiments:
        h_model = np.asarray(runner(e, alpha_s, alpha_p), dtype=np.float64)
        res = np.asarray(e.h_measured) - h_model
        sq_sum += float(np.sum(res**2))
        count += res.size
    return math.sqrt(sq_sum / count) * 1000.0


# ---------------------------------------------------------------------------
# Sensitivities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ParamBox:
    """Friction-parameter rectangle with a regular evaluation grid."""

    alpha_s_lo: float
    alpha_s_hi: float
    alpha_p_lo: float
    alpha_p_hi: float
    n_s: int = 21
    n_p: int = 26

    def __post_init__(self):
        if not (self.alpha_s_lo < self.alpha_s_hi and self.alpha_p_lo < self.alpha_p_hi):
            raise ConfigError("parameter box requires lo < hi on both axes")
        if self.n_s < 2 or self.n_p < 2:
            raise ConfigError("parameter grid needs at least 2 points per axis")

    @property
    def delta_s(self) -> float:
        return (self.alpha_s_hi - self.alpha_s_lo) / (self.n_s - 1)

    @property
    def delta_p(self) -> float:
        return (self.alpha_p_hi - self.alpha_p_lo) / (self.n_p - 1)

    def grid_s(self):
        return np.linspace(self.alpha_s_lo, self.alpha_s_hi, self.n_s)

    def grid_p(self):
        return np.linspace(self.alpha_p_lo, self.alpha_p_hi, self.n_p)

    def contains(self, alpha_s: float, alpha_p: float) -> bool:
        return (
            self.alpha_s_lo <= alpha_s <= self.alpha_s_hi
            and self.alpha_p_lo <= alpha_p <= self.alpha_p_hi
        )


def sensitivity(kind: str, hbar, box: ParamBox) -> float:
    """Averaged forward-difference sensitivity of the mean vegetated-reach
    depth to one friction coefficient over the box grid.

    ``kind`` is "s" or "p"; ``hbar(alpha_s, alpha_p)`` returns the reach-mean
    depth.  delta_s averages (n_s - 1) * n_p forward differences; delta_p
    the transpose count.
    """
    if kind not in ("s", "p"):
        raise ConfigError("sensitivity kind must be 's' or 'p'")
    gs, gp = box.grid_s(), box.grid_p()
    vals = np.array([[hbar(a_s, a_p) for a_p in gp] for a_s in gs])
    if kind == "s":
        diffs = (vals[1:, :] - vals[:-1, :]) / box.delta_s
    else:
        diffs = (vals[:, 1:] - vals[:, :-1]) / box.delta_p
    return float(diffs.mean())


# ---------------------------------------------------------------------------
# Pattern search (direct search with exploratory + pattern moves)
# ---------------------------------------------------------------------------


@dataclass
class SearchResult:
    x: np.ndarray
    fun: float
    evals: int
    converged: bool
    history: list = field(default_factory=list)


def pattern_search(
    objective,
    start,
    initial_step,
    shrink: float = 0.5,
    tol: float = 1e-8,
    max_evals: int = 10000,
    bounds=None,
) -> SearchResult:
    """Minimize by coordinate exploratory moves plus pattern (acceleration)
    moves; the step halves whenever no exploratory move improves.

    ``bounds`` is an optional list of (lo, hi) per coordinate; probes outside
    are rejected without evaluating (they count as failed probes).  ``tol``
    may be per-axis.  Never returns a point worse than the start.
    """
    x = np.asarray(start, dtype=np.float64).copy()
    dim = x.size
    step = np.full(dim, float(initial_step)) if np.isscalar(initial_step) else np.asarray(
        initial_step, dtype=np.float64
    ).copy()
    tol_arr = np.full(dim, float(tol)) if np.isscalar(tol) else np.asarray(tol, dtype=np.float64)
    if bounds is not None and len(bounds) != dim:
        raise ConfigError("bounds length must match the dimension")

    def inside(pt):
        if bounds is None:
            return True
        return all(lo <= v <= hi for v, (lo, hi) in zip(pt, bounds))

    if not inside(x):
        raise ConfigError("pattern search start lies outside the bounds")

    evals = 0

    def f(pt):
        nonlocal evals
        evals += 1
        return float(objective(pt))

    fx = f(x)
    history = [(x.copy(), fx)]
    base, fbase = x.copy(), fx

    def explore(center, fcenter):
        nonlocal evals
        pt = center.copy()
        fpt = fcenter
        improved = False
        for i in range(dim):
            for sgn in (+1.0, -1.0):
                if evals >= max_evals:
                    return pt, fpt, improved
                cand = pt.copy()
                cand[i] += sgn * step[i]
                if not inside(cand):
                    continue  # rejected probe, same as a failed move
                fc = f(cand)
                if fc < fpt:
                    pt, fpt = cand, fc
                    improved = True
                    break
        return pt, fpt, improved

    while evals < max_evals and np.any(step >= tol_arr):
        new, fnew, improved = explore(base, fbase)
        if improved:
            # pattern move: jump along the improving direction and explore
            while evals < max_evals:
                probe = new + (new - base)
                base, fbase = new, fnew
                history.append((base.copy(), fbase))
                if not inside(probe):
                    break
                fprobe = f(probe)
                cand, fcand, moved = explore(probe, fprobe)
                if fcand < fbase:
                    new, fnew = cand, fcand
                else:
                    break
        else:
            step *= shrink
    converged = bool(np.all(step < tol_arr))
    return SearchResult(x=base, fun=fbase, evals=evals, converged=converged, history=history)


def chi_surface(exps: ExperimentSet, box: ParamBox, runner):
    """chi evaluated on the full box grid; returns (grid_s, grid_p, chi)."""
    gs, gp = box.grid_s(), box.grid_p()
    surface = np.empty((gs.size, gp.size))
    for i, a_s in enumerate(gs):
        for j, a_p in enumerate(gp):
            surface[i, j] = chi(a_s, a_p, exps, runner)
    return gs, gp, surface
