"""Time-marching drivers: run to a target time, run to steady state, and the
full scenario orchestrator with gauge series, hydrograph, budget, snapshots,
and checkpointing."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .grid import HexGrid
from .physics import EnvConfig, FlowState, rain_rate
from .solver import BoundaryTable, resolve_boundaries, step, total_water_volume


@dataclass
class TimeControls:
    t_final: float
    cfl: float = 0.5
    dt_max: float = float("inf")
    steady_tol: float = 0.0     # max relative h change per second; 0 disables
    steady_window: float = 10.0

    def __post_init__(self):
        if not 0 < self.cfl <= 1:
            raise ConfigError("CFL number must lie in (0, 1]")
        if self.t_final < 0:
            raise ConfigError("t_final must be nonnegative")


# below this cell count a serial in-kernel time loop beats per-step driver
# overhead; above it the parallel step kernel wins
CHUNK_CELLS = 4_000


def run_to(
    state: FlowState,
    env: EnvConfig,
    grid: HexGrid,
    t_end: float,
    cfl: float = 0.5,
    dt_max: float = float("inf"),
    viscosity: bool = False,
    boundary: BoundaryTable | None = None,
    max_steps: int = 50_000_000,
):
    """Advance to exactly ``t_end``; returns (state, n_steps)."""
    if boundary is None:
        boundary = resolve_boundaries(grid, env)
    if env.source is None and grid.n_cells <= CHUNK_CELLS:
        return _run_to_chunked(state, env, grid, t_end, cfl, dt_max, viscosity, boundary, max_steps)
    n = 0
    from .solver import cfl_dt

    while state.t < t_end:
        dt = cfl_dt(state, grid, cfl, dt_max)
        if state.t + dt >= t_end:
            dt = t_end - state.t
            state, _ = step(state, env, grid, dt=dt, cfl=cfl, viscosity=viscosity, boundary=boundary)
            state.t = t_end
            n += 1
            break
        state, _ = step(state, env, grid, dt=dt, cfl=cfl, viscosity=viscosity, boundary=boundary)
        n += 1
        if n >= max_steps:
            raise ConfigError(f"run_to exceeded {max_steps} steps before t = {t_end}")
    return state, n


def _run_to_chunked(state, env, grid, t_end, cfl, dt_max, viscosity, boundary, max_steps):
    from . import kernels
    from .errors import NumericError
    from .physics import FRICTION_COMBINED

    h = state.h.copy()
    vx = state.v[:, 0].copy()
    vy = state.v[:, 1].copy()
    t, steps = kernels.run_chunk(
        h, vx, vy, grid.z, env.theta, grid.cell_class, grid.neighbors,
        boundary.index, boundary.kind, boundary.h0, boundary.gvx, boundary.gvy,
        boundary.qface, boundary.qwidth, boundary.dirx, boundary.diry, boundary.hcrit,
        kernels.FACE_NX, kernels.FACE_NY,
        grid.radius, env.alpha_s, env.alpha_p,
        0 if env.friction.kind == FRICTION_COMBINED else 1, env.friction.tau,
        1 if viscosity else 0, env.h_dry,
        state.t, t_end, cfl, dt_max, max_steps,
    )
    if t < t_end:
        raise ConfigError(f"run_to exceeded {max_steps} steps before t = {t_end}")
    if not (np.isfinite(h).all() and np.isfinite(vx).all() and np.isfinite(vy).all()):
        bad = int(np.nonzero(~(np.isfinite(h) & np.isfinite(vx) & np.isfinite(vy)))[0][0])
        raise NumericError(f"non-finite state at cell {bad} during chunked marching")
    return FlowState(t=t, h=h, v=np.column_stack([vx, vy])), steps


def run_to_steady(
    state: FlowState,
    env: EnvConfig,
    grid: HexGrid,
    cfl: float = 0.5,
    dt_max: float = float("inf"),
    viscosity: bool = False,
    tol: float = 1e-6,
    window: float = 10.0,
    t_max: float = 1e5,
    boundary: BoundaryTable | None = None,
):
    """March until the depth field is steady: the max change of h per second
    (relative to the max depth) stays below ``tol`` over a ``window``.

    Returns ``(state, converged)``.
    """
    if boundary is None:
        boundary = resolve_boundaries(grid, env)
    h_ref = state.h.copy()
    t_ref = state.t
    while state.t < t_max:
        state, _ = run_to(
            state, env, grid, min(t_ref + window, t_max),
            cfl=cfl, dt_max=dt_max, viscosity=viscosity, boundary=boundary,
        )
        scale = max(float(np.max(state.h)), 1e-12)
        rate = float(np.max(np.abs(state.h - h_ref))) / (scale * (state.t - t_ref))
        if rate < tol:
            return state, True
        h_ref = state.h.copy()
        t_ref = state.t
    return state, False


# ---------------------------------------------------------------------------
# Scenario orchestration
# ---------------------------------------------------------------------------


@dataclass
class RunResult:
    state: FlowState
    steps: int
    gauge_rows: list
    gauge_cells: list
    hydrograph_rows: list
    budget: dict
    snapshots: list = field(default_factory=list)
    stopped_steady: bool = False


def simulate(
    state: FlowState,
    env: EnvConfig,
    grid: HexGrid,
    controls: TimeControls,
    gauges: list | None = None,
    record_interval: float = 0.0,
    snapshot_times: list | None = None,
    viscosity: bool = False,
    snapshot_hook=None,
) -> RunResult:
    """Run a configured scenario, recording series at fixed times.

    ``gauges`` is a list of (x, y) positions resolved to their nearest
    in-domain cells.  ``snapshot_hook(state)`` is invoked at every snapshot
    time (and at t_final).  Recording times are exact multiples of
    ``record_interval``, so two runs of the same scenario produce identical
    series regardless of internal step granularity.
    """
    from .solver import cfl_dt

    t_final = controls.t_final
    boundary = resolve_boundaries(grid, env)
    gauges = gauges or []
    gauge_cells = [grid.cell_at(gx, gy) for gx, gy in gauges]
    if any(c < 0 for c in gauge_cells):
        raise ConfigError("gauge position outside the computed domain")
    snapshot_times = sorted(set(snapshot_times or []))
    if snapshot_times and snapshot_times[-1] > t_final:
        raise ConfigError("snapshot times must not exceed t_final")

    events: list[float] = list(snapshot_times)
    if record_interval > 0:
        k_max = int(math.floor(t_final / record_interval + 1e-9))
        events.extend(k * record_interval for k in range(1, k_max + 1))
    events.append(t_final)
    events = sorted(set(e for e in events if state.t < e <= t_final))

    volume0 = total_water_volume(state, env, grid)
    rain_m3 = 0.0
    in_m3 = 0.0
    out_m3 = 0.0
    clamp_m3 = 0.0
    out_rate_last = 0.0

    gauge_rows = []
    hydro_rows = []
    snapshots_done = []

    def record(t):
        row = [t]
        for c in gauge_cells:
            row.append(state.h[c])
            row.append(math.hypot(state.v[c, 0], state.v[c, 1]))
        gauge_rows.append(row)
        rr = rain_rate(t, env.source) if env.source is not None else 0.0
        hydro_rows.append([t, out_rate_last, rr])

    record(state.t)
    steps = 0
    stopped_steady = False
    h_ref = state.h.copy()
    t_ref = state.t
    ev_idx = 0
    while state.t < t_final and ev_idx < len(events):
        target = events[ev_idx]
        while state.t < target:
            dt = cfl_dt(state, grid, controls.cfl, controls.dt_max)
            if state.t + dt >= target:
                dt = target - state.t
            state, rep = step(
                state, env, grid, dt=dt, cfl=controls.cfl,
                viscosity=viscosity, boundary=boundary,
            )
            steps += 1
            rain_m3 += rep.mass_source
            in_m3 += rep.mass_boundary_in
            out_m3 += rep.mass_boundary_out
            clamp_m3 += rep.clamp_gain
            out_rate_last = rep.mass_boundary_out / rep.dt if rep.dt > 0 else 0.0
        state.t = target
        if record_interval > 0 or target == t_final:
            record(target)
        if target in snapshot_times or target == t_final:
            if snapshot_hook is not None:
                snapshot_hook(state)
            snapshots_done.append(target)
        if controls.steady_tol > 0 and target - t_ref >= controls.steady_window:
            scale = max(float(np.max(state.h)), 1e-12)
            rate = float(np.max(np.abs(state.h - h_ref))) / (scale * (target - t_ref))
            if rate < controls.steady_tol:
                stopped_steady = True
                break
            h_ref = state.h.copy()
            t_ref = target
        ev_idx += 1

    volume1 = total_water_volume(state, env, grid)
    budget = {
        "rainfall_m3": rain_m3,
        "boundary_in_m3": in_m3,
        "water_out_m3": out_m3,
        "clamp_gain_m3": clamp_m3,
        "water_left_m3": volume1,
        "initial_volume_m3": volume0,
        "closure_m3": rain_m3 + in_m3 + clamp_m3 - out_m3 - (volume1 - volume0),
    }
    return RunResult(
        state=state,
        steps=steps,
        gauge_rows=gauge_rows,
        gauge_cells=gauge_cells,
        hydrograph_rows=hydro_rows,
        budget=budget,
        snapshots=snapshots_done,
        stopped_steady=stopped_steady,
    )
